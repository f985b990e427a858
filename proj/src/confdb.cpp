#include "ssdtune/confdb.hpp"

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <algorithm>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "ssdtune/error.hpp"

namespace fs = std::filesystem;

namespace ssdtune {

nlohmann::json constraints_to_json(const Constraints& constraints) {
    return {{"capacity_bytes", constraints.capacity_bytes},
            {"interface", to_string(constraints.interface)},
            {"flash_type", to_string(constraints.flash_type)},
            {"capacity_tolerance", constraints.capacity_tolerance}};
}

Constraints constraints_from_json(const nlohmann::json& j) {
    Constraints c;
    c.capacity_bytes = j.at("capacity_bytes").get<uint64_t>();
    c.interface = interface_from_name(j.at("interface").get<std::string>());
    c.flash_type = flash_from_name(j.at("flash_type").get<std::string>());
    c.capacity_tolerance = j.at("capacity_tolerance").get<double>();
    return c;
}

namespace {

constexpr int kFormatVersion = 1;

void atomic_write(const fs::path& path, const std::string& body) {
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out)
            throw CodedError("io_error", "cannot write " + tmp.string());
        out << body;
        out.flush();
        if (!out)
            throw CodedError("io_error", "short write to " + tmp.string());
    }
    fs::rename(tmp, path);
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw CodedError("io_error", "cannot read " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

nlohmann::json entry_to_json(const ParamSpace& space, const ConfDbEntry& entry) {
    nlohmann::json j;
    j["cluster_id"] = entry.cluster_id;
    j["cluster_meta"] = {{"center", {entry.meta.center.x(), entry.meta.center.y()}},
                         {"mean_intra_distance", entry.meta.mean_intra_distance},
                         {"member_count", entry.meta.member_count}};
    j["trace_file"] = entry.trace_file;
    nlohmann::json perf = nlohmann::json::object();
    for (const auto& [id, p] : entry.reference_perf)
        perf[id] = {{"latency_us", p.latency_us}, {"throughput_mbps", p.throughput_mbps}};
    j["reference_perf"] = perf;
    nlohmann::json records = nlohmann::json::array();
    for (const auto& r : entry.records)
        records.push_back(grade_record_to_json(space, r));
    j["records"] = records;
    if (entry.prune_report)
        j["prune_report"] = prune_report_to_json(*entry.prune_report);
    return j;
}

ConfDbEntry entry_from_json(const ParamSpace& space, const nlohmann::json& j) {
    ConfDbEntry entry;
    entry.cluster_id = j.at("cluster_id").get<std::string>();
    const auto& meta = j.at("cluster_meta");
    entry.meta.id = entry.cluster_id;
    entry.meta.center = Eigen::Vector2d(meta.at("center").at(0).get<double>(),
                                        meta.at("center").at(1).get<double>());
    entry.meta.mean_intra_distance = meta.at("mean_intra_distance").get<double>();
    entry.meta.member_count = meta.at("member_count").get<int>();
    entry.trace_file = j.at("trace_file").get<std::string>();
    for (const auto& [id, pj] : j.at("reference_perf").items()) {
        entry.reference_perf[id] = PerfPoint{pj.at("latency_us").get<double>(),
                                             pj.at("throughput_mbps").get<double>()};
    }
    for (const auto& rj : j.at("records"))
        entry.records.push_back(grade_record_from_json(space, rj));
    if (j.contains("prune_report") && !j.at("prune_report").is_null())
        entry.prune_report = prune_report_from_json(j.at("prune_report"));
    return entry;
}

nlohmann::json pca_to_json(const PcaModel& pca) {
    auto vec = [](const Eigen::VectorXd& v) {
        nlohmann::json arr = nlohmann::json::array();
        for (Eigen::Index i = 0; i < v.size(); ++i)
            arr.push_back(v[i]);
        return arr;
    };
    nlohmann::json j;
    j["means"] = vec(pca.means);
    j["scales"] = vec(pca.scales);
    nlohmann::json comps = nlohmann::json::array();
    for (Eigen::Index r = 0; r < pca.components.rows(); ++r)
        comps.push_back(vec(pca.components.row(r).transpose()));
    j["components"] = comps;
    j["explained_variance"] = vec(pca.explained_variance);
    return j;
}

PcaModel pca_from_json(const nlohmann::json& j) {
    auto vec = [](const nlohmann::json& arr) {
        Eigen::VectorXd v(static_cast<Eigen::Index>(arr.size()));
        for (Eigen::Index i = 0; i < v.size(); ++i)
            v[i] = arr.at(static_cast<size_t>(i)).get<double>();
        return v;
    };
    PcaModel pca;
    pca.means = vec(j.at("means"));
    pca.scales = vec(j.at("scales"));
    const auto& comps = j.at("components");
    pca.components.resize(static_cast<Eigen::Index>(comps.size()), pca.means.size());
    for (Eigen::Index r = 0; r < pca.components.rows(); ++r)
        pca.components.row(r) = vec(comps.at(static_cast<size_t>(r))).transpose();
    pca.explained_variance = vec(j.at("explained_variance"));
    return pca;
}

} // namespace

ConfDb ConfDb::open(const fs::path& root, std::optional<ParamSpace> catalog,
                    std::optional<Constraints> constraints, bool writable) {
    ConfDb db;
    db.root_ = root;
    db.writable_ = writable;

    fs::path manifest = root / "manifest.json";
    bool fresh = !fs::exists(manifest);
    if (fresh) {
        if (!writable)
            throw CodedError("db_missing", "no store at " + root.string());
        db.space_ = catalog ? std::move(*catalog) : ParamSpace::default_catalog();
        db.constraints_ = constraints;
        db.reference_ = reference_configuration(db.space_);
    } else {
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(read_file(manifest));
        } catch (const nlohmann::json::exception& e) {
            throw CodedError("corrupt_entry",
                             std::string("corrupt manifest: ") + e.what());
        }
        try {
            db.space_ = ParamSpace::from_json(j.at("catalog"));
            if (catalog && catalog->to_json() != db.space_.to_json())
                throw CodedError("catalog_mismatch",
                                 "the supplied catalog differs from the stored one");
            if (!j.at("constraints").is_null())
                db.constraints_ = constraints_from_json(j.at("constraints"));
            if (constraints) {
                if (db.constraints_ &&
                    constraints_to_json(*db.constraints_) != constraints_to_json(*constraints))
                    throw CodedError("constraint_mismatch",
                                     "the supplied constraints differ from the pinned ones");
                db.constraints_ = constraints;
            }
            db.reference_ = configuration_from_json(db.space_, j.at("reference_config"));
            if (j.contains("pca") && !j.at("pca").is_null())
                db.pca_ = pca_from_json(j.at("pca"));
        } catch (const nlohmann::json::exception& e) {
            throw CodedError("corrupt_entry",
                             std::string("corrupt manifest: ") + e.what());
        }
    }

    if (writable) {
        fs::create_directories(root / "clusters");
        fs::create_directories(root / "traces");
        fs::path lock = root / "LOCK";
        db.lock_fd_ = ::open(lock.c_str(), O_CREAT | O_RDWR | O_CLOEXEC, 0644);
        if (db.lock_fd_ < 0)
            throw CodedError("io_error", "cannot open lock file " + lock.string());
        if (::flock(db.lock_fd_, LOCK_EX | LOCK_NB) != 0) {
            ::close(db.lock_fd_);
            db.lock_fd_ = -1;
            throw CodedError("lock_conflict",
                             "another writer holds the store at " + root.string());
        }
        db.save_manifest(); // pins constraints supplied on open
    }
    return db;
}

ConfDb::ConfDb(ConfDb&& other) noexcept
    : root_(std::move(other.root_)), space_(std::move(other.space_)),
      constraints_(std::move(other.constraints_)), reference_(std::move(other.reference_)),
      pca_(std::move(other.pca_)), writable_(other.writable_), lock_fd_(other.lock_fd_) {
    other.lock_fd_ = -1;
    other.writable_ = false;
}

ConfDb& ConfDb::operator=(ConfDb&& other) noexcept {
    if (this != &other) {
        if (lock_fd_ >= 0) {
            ::flock(lock_fd_, LOCK_UN);
            ::close(lock_fd_);
        }
        root_ = std::move(other.root_);
        space_ = std::move(other.space_);
        constraints_ = std::move(other.constraints_);
        reference_ = std::move(other.reference_);
        pca_ = std::move(other.pca_);
        writable_ = other.writable_;
        lock_fd_ = other.lock_fd_;
        other.lock_fd_ = -1;
        other.writable_ = false;
    }
    return *this;
}

ConfDb::~ConfDb() {
    if (lock_fd_ >= 0) {
        ::flock(lock_fd_, LOCK_UN);
        ::close(lock_fd_);
    }
}

const Constraints& ConfDb::constraints() const {
    if (!constraints_)
        throw CodedError("usage", "the store has no pinned constraints");
    return *constraints_;
}

void ConfDb::set_constraints(const Constraints& constraints) {
    if (constraints_ &&
        constraints_to_json(*constraints_) != constraints_to_json(constraints))
        throw CodedError("constraint_mismatch",
                         "the supplied constraints differ from the pinned ones");
    constraints_ = constraints;
    save_manifest();
}

void ConfDb::set_reference_config(const Configuration& config) {
    check_configuration(space_, config);
    reference_ = config;
    save_manifest();
}

const PcaModel& ConfDb::pca() const {
    if (!pca_)
        throw CodedError("no_model", "the store has no fitted embedding");
    return *pca_;
}

void ConfDb::set_pca(const PcaModel& model) {
    pca_ = model;
    save_manifest();
}

void ConfDb::save_manifest() {
    if (!writable_)
        throw CodedError("read_only", "the store was opened read-only");
    nlohmann::json j;
    j["format_version"] = kFormatVersion;
    j["catalog"] = space_.to_json();
    j["constraints"] = constraints_ ? constraints_to_json(*constraints_) : nlohmann::json();
    j["reference_config"] = configuration_to_json(space_, reference_);
    j["pca"] = pca_ ? pca_to_json(*pca_) : nlohmann::json();
    atomic_write(root_ / "manifest.json", j.dump(2) + "\n");
}

fs::path ConfDb::cluster_path(const std::string& cluster_id) const {
    return root_ / "clusters" / (cluster_id + ".json");
}

std::vector<std::string> ConfDb::list_clusters() const {
    std::vector<std::string> ids;
    fs::path dir = root_ / "clusters";
    if (!fs::exists(dir))
        return ids;
    for (const auto& e : fs::directory_iterator(dir)) {
        if (e.path().extension() == ".json")
            ids.push_back(e.path().stem().string());
    }
    std::sort(ids.begin(), ids.end());
    return ids;
}

std::optional<ConfDbEntry> ConfDb::get(const std::string& cluster_id) const {
    fs::path path = cluster_path(cluster_id);
    if (!fs::exists(path))
        return std::nullopt;
    try {
        return entry_from_json(space_, nlohmann::json::parse(read_file(path)));
    } catch (const nlohmann::json::exception& e) {
        throw CodedError("corrupt_entry",
                         "corrupt entry for cluster " + cluster_id + ": " + e.what());
    }
}

void ConfDb::put(const ConfDbEntry& entry) {
    if (!writable_)
        throw CodedError("read_only", "the store was opened read-only");
    if (entry.cluster_id.empty())
        throw std::invalid_argument("cluster id must be non-empty");
    atomic_write(cluster_path(entry.cluster_id),
                 entry_to_json(space_, entry).dump(2) + "\n");
}

void ConfDb::append_record(const std::string& cluster_id, const GradeRecord& record) {
    auto entry = get(cluster_id);
    if (!entry)
        throw CodedError("missing_cluster", "no cluster " + cluster_id + " in the store");
    entry->records.push_back(record);
    put(*entry);
}

void ConfDb::store_trace(const std::string& cluster_id, std::span<const IoRecord> records) {
    if (!writable_)
        throw CodedError("read_only", "the store was opened read-only");
    std::ostringstream body;
    write_trace(body, records);
    atomic_write(root_ / "traces" / (cluster_id + ".trace"), body.str());
}

std::vector<IoRecord> ConfDb::load_trace(const std::string& cluster_id) const {
    fs::path path = root_ / "traces" / (cluster_id + ".trace");
    if (!fs::exists(path))
        throw CodedError("missing_trace",
                         "no representative trace for cluster " + cluster_id);
    return parse_trace_file(path.string());
}

ClusterModel ConfDb::cluster_model() const {
    ClusterModel model;
    model.pca = pca(); // throws when the embedding is missing
    for (const auto& id : list_clusters()) {
        auto entry = get(id);
        if (entry)
            model.clusters.push_back(entry->meta);
    }
    return model;
}

std::string ConfDb::next_cluster_id() const {
    long long next = 0;
    for (const auto& id : list_clusters()) {
        if (id.size() > 1 && id[0] == 'c' &&
            id.find_first_not_of("0123456789", 1) == std::string::npos)
            next = std::max(next, std::stoll(id.substr(1)) + 1);
    }
    return "c" + std::to_string(next);
}

} // namespace ssdtune
