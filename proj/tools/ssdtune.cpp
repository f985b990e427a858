// Command-line front end: gen / cluster / prune / tune / validate / db.
#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "ssdtune/clustering.hpp"
#include "ssdtune/confdb.hpp"
#include "ssdtune/error.hpp"
#include "ssdtune/paramspace.hpp"
#include "ssdtune/pruning.hpp"
#include "ssdtune/simssd.hpp"
#include "ssdtune/trace.hpp"
#include "ssdtune/tuner.hpp"

namespace fs = std::filesystem;
using namespace ssdtune;

namespace {

std::string env_db_default() {
    const char* v = std::getenv("SSD_AUTOTUNE_DB");
    return v ? v : "";
}

std::string require_db(const std::string& flag) {
    if (!flag.empty())
        return flag;
    throw CodedError("usage", "no store given: pass --db or set SSD_AUTOTUNE_DB");
}

struct ConstraintFlags {
    uint64_t capacity = 0;
    std::string interface_name = "nvme";
    std::string flash_name = "mlc";
    double tolerance = 0.25;

    void attach(CLI::App* cmd, bool required) {
        auto* cap = cmd->add_option("--capacity", capacity, "advertised capacity in bytes");
        if (required)
            cap->required();
        cmd->add_option("--interface", interface_name, "host interface: nvme|sata")
            ->check(CLI::IsMember({"nvme", "sata"}));
        cmd->add_option("--flash", flash_name, "flash type: slc|mlc|tlc")
            ->check(CLI::IsMember({"slc", "mlc", "tlc"}));
        cmd->add_option("--tolerance", tolerance, "relative raw-capacity tolerance");
    }

    Constraints resolve() const {
        Constraints c;
        c.capacity_bytes = capacity;
        c.interface = interface_from_name(interface_name);
        c.flash_type = flash_from_name(flash_name);
        c.capacity_tolerance = tolerance;
        return c;
    }
};

std::optional<ParamSpace> load_catalog(const std::string& path) {
    if (path.empty())
        return std::nullopt;
    std::ifstream in(path);
    if (!in)
        throw CodedError("io_error", "cannot read catalog " + path);
    nlohmann::json j;
    in >> j;
    return ParamSpace::from_json(j);
}

// Accepts a friendly config JSON: numbers are treated as parameter values
// (snapped to the nearest legal setting; 0/1 works for switches), booleans as
// switches, strings as categorical labels. Unlisted parameters keep the
// reference setting.
Configuration configuration_from_user_json(const ParamSpace& space, const Configuration& base,
                                           const nlohmann::json& j) {
    Configuration config = base;
    for (const auto& [name, value] : j.items()) {
        if (!space.has(name))
            throw CodedError("usage", "unknown parameter " + name);
        size_t p = space.index_of(name);
        const ParamDef& def = space.param(p);
        if (value.is_boolean()) {
            config.indices[p] = value.get<bool>() ? 1 : 0;
        } else if (value.is_number()) {
            if (std::holds_alternative<BooleanKind>(def.kind))
                config.indices[p] = value.get<double>() >= 0.5 ? 1 : 0;
            else if (def.is_numeric())
                config.indices[p] = nearest_index(def, value.get<double>());
            else
                throw CodedError("usage", name + " expects a label, not a number");
        } else if (value.is_string()) {
            std::string s = value.get<std::string>();
            if (def.is_categorical()) {
                const auto& labels = std::get<CategoricalKind>(def.kind).labels;
                auto it = std::find(labels.begin(), labels.end(), s);
                if (it == labels.end())
                    throw CodedError("usage", "unknown label " + s + " for " + name);
                config.indices[p] = static_cast<int>(it - labels.begin());
            } else if (s == "on" || s == "off") {
                config.indices[p] = s == "on" ? 1 : 0;
            } else {
                throw CodedError("usage", "cannot interpret \"" + s + "\" for " + name);
            }
        } else {
            throw CodedError("usage", "unsupported JSON value for " + name);
        }
    }
    check_configuration(space, config);
    return config;
}

std::vector<fs::path> trace_files(const std::string& dir) {
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(dir)) {
        if (e.path().extension() == ".trace")
            files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    if (files.empty())
        throw CodedError("usage", "no .trace files in " + dir);
    return files;
}

std::vector<WindowFeatures> workload_features(std::span<const IoRecord> records) {
    std::vector<WindowFeatures> features;
    for (const auto& w : make_windows(records))
        features.push_back(extract_features(w));
    return features;
}

void print_config_table(const ParamSpace& space, const Configuration& reference,
                        const Configuration& tuned) {
    std::printf("%-28s %20s %20s\n", "parameter", "reference", "tuned");
    std::printf("%-28s %20s %20s\n", "---------", "---------", "-----");
    for (size_t p = 0; p < space.size(); ++p) {
        const std::string& name = space.param(p).name;
        std::string ref = display_value(space, reference, name);
        std::string cur = display_value(space, tuned, name);
        std::printf("%-28s %20s %20s%s\n", name.c_str(), ref.c_str(), cur.c_str(),
                    reference.indices[p] != tuned.indices[p] ? "  *" : "");
    }
}

// ---- subcommand bodies ----

struct GenOptions {
    std::string profile, out;
    size_t count = 120000;
    uint64_t seed = 0;
};

void run_gen(const GenOptions& opt) {
    TraceProfile profile = TraceProfile::from_name(opt.profile);
    auto records = generate_synthetic_trace(profile, opt.count, opt.seed);
    write_trace_file(opt.out, records);
    std::printf("wrote %zu records (%s) to %s\n", records.size(), profile.name().c_str(),
                opt.out.c_str());
}

struct ClusterOptions {
    std::string traces_dir, db, labels_file, catalog;
    uint64_t seed = 0;
};

void run_cluster(const ClusterOptions& opt) {
    ConfDb db = ConfDb::open(require_db(opt.db), load_catalog(opt.catalog));

    std::map<std::string, std::string> label_map;
    if (!opt.labels_file.empty()) {
        std::ifstream in(opt.labels_file);
        if (!in)
            throw CodedError("io_error", "cannot read labels " + opt.labels_file);
        nlohmann::json j;
        in >> j;
        label_map = j.get<std::map<std::string, std::string>>();
    }

    struct Workload {
        std::string name;
        std::vector<IoRecord> records;
        std::vector<WindowFeatures> features;
    };
    std::vector<Workload> workloads;
    for (const auto& file : trace_files(opt.traces_dir)) {
        Workload w;
        w.name = file.stem().string();
        w.records = parse_trace_file(file);
        w.features = workload_features(w.records);
        workloads.push_back(std::move(w));
    }

    std::printf("%-24s %-10s %12s  %s\n", "workload", "cluster", "distance", "matched");
    if (!db.has_pca()) {
        // Fresh corpus fit: every trace file is one labelled workload.
        std::vector<WindowFeatures> all;
        std::vector<std::string> labels;
        for (const auto& w : workloads) {
            std::string label = label_map.count(w.name) ? label_map[w.name] : w.name;
            for (const auto& f : w.features) {
                all.push_back(f);
                labels.push_back(label);
            }
        }
        ClusterModel model = fit_cluster_model(all, opt.seed, labels);
        db.set_pca(model.pca);

        // Choose each cluster's representative workload: the member whose
        // centroid sits closest to the cluster center.
        for (const auto& info : model.clusters) {
            const Workload* best = nullptr;
            double best_d = 0;
            for (const auto& w : workloads) {
                Assignment a = assign_workload(model, w.features);
                if (a.cluster_id != info.id)
                    continue;
                if (!best || a.distance < best_d) {
                    best = &w;
                    best_d = a.distance;
                }
            }
            if (!best)
                continue; // no workload centroid lands here; skip the entry
            ConfDbEntry entry;
            entry.cluster_id = info.id;
            entry.meta = info;
            db.store_trace(info.id, best->records);
            entry.trace_file = "traces/" + info.id + ".trace";
            db.put(entry);
        }
        for (const auto& w : workloads) {
            Assignment a = assign_workload(model, w.features);
            std::printf("%-24s %-10s %12.4f  %s\n", w.name.c_str(), a.cluster_id.c_str(),
                        a.distance, a.matched ? "yes" : "no");
        }
        return;
    }

    // Extend an existing model: assign, creating clusters as needed.
    for (const auto& w : workloads) {
        ClusterChoice choice = assign_or_create_cluster(db, w.records, w.features, opt.seed);
        std::printf("%-24s %-10s %12.4f  %s\n", w.name.c_str(), choice.cluster_id.c_str(),
                    choice.distance, choice.created ? "no (new cluster)" : "yes");
    }
}

struct PruneOptions {
    std::string workload, db, catalog;
    ConstraintFlags constraints;
    uint64_t seed = 0;
    size_t samples = 24;
    double epsilon = 0.01, lambda = 0.01, threshold = 0.01;
};

void run_prune(const PruneOptions& opt) {
    ConfDb db = ConfDb::open(require_db(opt.db), load_catalog(opt.catalog),
                             opt.constraints.resolve());
    auto records = parse_trace_file(opt.workload);
    auto features = workload_features(records);
    ClusterChoice choice = assign_or_create_cluster(db, records, features, opt.seed);

    PruneSettings settings;
    settings.seed = opt.seed;
    settings.sample_count = opt.samples;
    settings.epsilon = opt.epsilon;
    settings.lambda = opt.lambda;
    settings.threshold = opt.threshold;
    PruneReport report = run_pruning(db.space(), db.reference_config(), db.constraints(),
                                     records, settings);

    ConfDbEntry entry = *db.get(choice.cluster_id);
    entry.prune_report = report;
    db.put(entry);

    std::printf("cluster %s (%s)\n", choice.cluster_id.c_str(),
                choice.created ? "created" : "matched");
    std::printf("%-28s %-22s %8s\n", "parameter", "status", "score");
    std::printf("%-28s %-22s %8s\n", "---------", "------", "-----");
    auto status_of = [&](const std::string& name) -> std::string {
        if (std::count(report.insensitive_coarse.begin(), report.insensitive_coarse.end(), name))
            return "insensitive (coarse)";
        if (std::count(report.dropped_fine.begin(), report.dropped_fine.end(), name))
            return "dropped (lasso)";
        return "surviving";
    };
    for (const auto& def : db.space().params()) {
        auto it = report.coefficients.find(def.name);
        std::string bar;
        if (it != report.coefficients.end()) {
            char buf[32];
            std::snprintf(buf, sizeof(buf), "%8.4f ", it->second);
            bar = buf;
            bar += std::string(std::min<size_t>(30, static_cast<size_t>(it->second * 40)), '#');
        } else {
            bar = "       -";
        }
        std::printf("%-28s %-22s %s\n", def.name.c_str(), status_of(def.name).c_str(),
                    bar.c_str());
    }
    for (const auto& w : report.warnings)
        std::printf("warning: %s\n", w.c_str());
}

struct TuneOptions {
    std::string workload, db, out, catalog;
    ConstraintFlags constraints;
    TunerSettings settings;
};

void run_tune(const TuneOptions& opt) {
    ConfDb db = ConfDb::open(require_db(opt.db), load_catalog(opt.catalog),
                             opt.constraints.resolve());
    auto records = parse_trace_file(opt.workload);
    TuneResult result = tune(records, opt.settings, db);

    std::printf("cluster: %s%s\n", result.cluster_id.c_str(),
                result.created_cluster ? " (created)" : "");
    std::printf("status: %s after %zu validated configurations\n",
                result.converged ? "converged"
                                 : (result.stalled ? "stalled" : "iteration cap reached"),
                result.history.size());
    std::printf("best grade: %.6f (reference grade 0 by definition)\n\n", result.best.grade);
    print_config_table(db.space(), db.reference_config(), result.best.config);
    std::printf("\nper-workload goals (negative is better than the reference):\n");
    for (const auto& [id, g] : result.best.goal_per_workload) {
        const PerfPoint& p = result.best.per_workload.at(id);
        std::printf("  %-8s goal %+0.4f   latency %10.2f us   throughput %10.2f MB/s%s\n",
                    id.c_str(), g, p.latency_us, p.throughput_mbps,
                    id == result.cluster_id ? "  <- target" : "");
    }

    if (!opt.out.empty()) {
        std::ofstream out(opt.out, std::ios::trunc);
        if (!out)
            throw CodedError("io_error", "cannot write " + opt.out);
        for (const auto& rec : result.history)
            out << grade_record_to_json(db.space(), rec).dump() << "\n";
        std::printf("\nhistory: %zu records -> %s\n", result.history.size(), opt.out.c_str());
    }
}

struct ValidateOptions {
    std::string config_file, traces_dir, db, catalog;
    ConstraintFlags constraints;
    double alpha = 0.9;
};

void run_validate(const ValidateOptions& opt) {
    ConfDb db = ConfDb::open(require_db(opt.db), load_catalog(opt.catalog),
                             opt.constraints.resolve());
    std::ifstream in(opt.config_file);
    if (!in)
        throw CodedError("io_error", "cannot read config " + opt.config_file);
    nlohmann::json j;
    in >> j;
    // Exact index maps (what `tune --out` and `db show` emit) round-trip
    // verbatim; anything else goes through the friendly value parser.
    Configuration config;
    try {
        config = configuration_from_json(db.space(), j);
    } catch (const CodedError&) {
        config = configuration_from_user_json(db.space(), db.reference_config(), j);
    }

    struct Row {
        std::string name;
        SimResult candidate, reference;
    };
    std::vector<Row> rows;
    if (!opt.traces_dir.empty()) {
        for (const auto& file : trace_files(opt.traces_dir)) {
            auto records = parse_trace_file(file);
            rows.push_back({file.stem().string(),
                            simulate(db.space(), config, db.constraints(), records),
                            simulate(db.space(), db.reference_config(), db.constraints(),
                                     records)});
        }
    } else {
        for (const auto& id : db.list_clusters()) {
            auto records = db.load_trace(id);
            rows.push_back({id, simulate(db.space(), config, db.constraints(), records),
                            simulate(db.space(), db.reference_config(), db.constraints(),
                                     records)});
        }
        if (rows.empty())
            throw CodedError("usage", "no workloads: pass --traces or tune first");
    }

    std::printf("%-24s %12s %14s %10s\n", "workload", "latency_us", "throughput", "goal");
    double goal_sum = 0;
    for (const auto& row : rows) {
        double g = goal(PerfPoint{row.candidate.mean_latency_us, row.candidate.throughput_mbps},
                        PerfPoint{row.reference.mean_latency_us, row.reference.throughput_mbps},
                        opt.alpha);
        goal_sum += g;
        std::printf("%-24s %12.2f %14.2f %+10.4f\n", row.name.c_str(),
                    row.candidate.mean_latency_us, row.candidate.throughput_mbps, g);
    }
    std::printf("mean goal over %zu workloads: %+0.4f\n", rows.size(),
                goal_sum / static_cast<double>(rows.size()));
}

struct DbOptions {
    std::string db, cluster_id;
};

void run_db_ls(const DbOptions& opt) {
    ConfDb db = ConfDb::open(require_db(opt.db), std::nullopt, std::nullopt, false);
    std::printf("%-10s %8s %8s %6s\n", "cluster", "members", "records", "prune");
    for (const auto& id : db.list_clusters()) {
        auto entry = db.get(id);
        if (!entry)
            continue;
        std::printf("%-10s %8d %8zu %6s\n", id.c_str(), entry->meta.member_count,
                    entry->records.size(), entry->prune_report ? "yes" : "no");
    }
}

void run_db_show(const DbOptions& opt) {
    ConfDb db = ConfDb::open(require_db(opt.db), std::nullopt, std::nullopt, false);
    auto entry = db.get(opt.cluster_id);
    if (!entry)
        throw CodedError("missing_cluster", "no cluster " + opt.cluster_id + " in the store");
    std::ifstream in(fs::path(require_db(opt.db)) / "clusters" / (opt.cluster_id + ".json"));
    std::cout << in.rdbuf();
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"workload-aware SSD configuration tuning toolkit"};
    app.require_subcommand(1);
    std::string db_default = env_db_default();

    GenOptions gen_opt;
    auto* gen = app.add_subcommand("gen", "generate a synthetic workload trace");
    gen->add_option("--profile", gen_opt.profile,
                    "seqread|randread|seqwrite|randwrite|mixed:<readfrac>")
        ->required();
    gen->add_option("--count", gen_opt.count, "number of requests");
    gen->add_option("--seed", gen_opt.seed, "random seed");
    gen->add_option("--out", gen_opt.out, "output trace file")->required();
    gen->callback([&] { run_gen(gen_opt); });

    ClusterOptions cluster_opt;
    cluster_opt.db = db_default;
    auto* cluster = app.add_subcommand("cluster", "fit or extend the workload cluster model");
    cluster->add_option("--traces", cluster_opt.traces_dir, "directory of .trace files")
        ->required();
    cluster->add_option("--db", cluster_opt.db, "store root (or $SSD_AUTOTUNE_DB)");
    cluster->add_option("--labels", cluster_opt.labels_file,
                        "JSON file mapping trace stem -> label");
    cluster->add_option("--catalog", cluster_opt.catalog, "parameter catalog JSON");
    cluster->add_option("--seed", cluster_opt.seed, "random seed");
    cluster->callback([&] { run_cluster(cluster_opt); });

    PruneOptions prune_opt;
    prune_opt.db = db_default;
    auto* prune = app.add_subcommand("prune", "identify performance-insensitive parameters");
    prune->add_option("--workload", prune_opt.workload, "workload trace file")->required();
    prune->add_option("--db", prune_opt.db, "store root (or $SSD_AUTOTUNE_DB)");
    prune->add_option("--catalog", prune_opt.catalog, "parameter catalog JSON");
    prune_opt.constraints.attach(prune, true);
    prune->add_option("--seed", prune_opt.seed, "random seed");
    prune->add_option("--samples", prune_opt.samples, "regression sample count");
    prune->add_option("--epsilon", prune_opt.epsilon, "coarse sensitivity threshold");
    prune->add_option("--lambda", prune_opt.lambda, "lasso penalty");
    prune->add_option("--threshold", prune_opt.threshold, "fine score threshold");
    prune->callback([&] { run_prune(prune_opt); });

    TuneOptions tune_opt;
    tune_opt.db = db_default;
    auto* tunec = app.add_subcommand("tune", "search for a better configuration");
    tunec->add_option("--workload", tune_opt.workload, "workload trace file")->required();
    tunec->add_option("--db", tune_opt.db, "store root (or $SSD_AUTOTUNE_DB)");
    tunec->add_option("--catalog", tune_opt.catalog, "parameter catalog JSON");
    tune_opt.constraints.attach(tunec, true);
    tunec->add_option("--alpha", tune_opt.settings.alpha, "latency/throughput balance");
    tunec->add_option("--beta", tune_opt.settings.beta, "target/non-target balance");
    tunec->add_option("--seed", tune_opt.settings.rng_seed, "random seed");
    tunec->add_option("--max-iterations", tune_opt.settings.max_outer_iterations,
                      "outer iteration cap");
    tunec->add_option("--exploit-distance", tune_opt.settings.exploit_distance_max,
                      "Manhattan exploration bound");
    tunec->add_option("--out", tune_opt.out, "write NDJSON tuning history here");
    tunec->callback([&] { run_tune(tune_opt); });

    ValidateOptions val_opt;
    val_opt.db = db_default;
    auto* validate = app.add_subcommand("validate", "measure a configuration on workloads");
    validate->add_option("--config", val_opt.config_file, "configuration JSON file")
        ->required();
    validate->add_option("--traces", val_opt.traces_dir,
                         "directory of .trace files (default: stored workloads)");
    validate->add_option("--db", val_opt.db, "store root (or $SSD_AUTOTUNE_DB)");
    validate->add_option("--catalog", val_opt.catalog, "parameter catalog JSON");
    val_opt.constraints.attach(validate, true);
    validate->add_option("--alpha", val_opt.alpha, "latency/throughput balance");
    validate->callback([&] { run_validate(val_opt); });

    DbOptions db_opt;
    db_opt.db = db_default;
    auto* dbc = app.add_subcommand("db", "inspect the store");
    dbc->require_subcommand(1);
    auto* ls = dbc->add_subcommand("ls", "list clusters");
    ls->add_option("--db", db_opt.db, "store root (or $SSD_AUTOTUNE_DB)");
    ls->callback([&] { run_db_ls(db_opt); });
    auto* show = dbc->add_subcommand("show", "dump one cluster entry");
    show->add_option("cluster_id", db_opt.cluster_id, "cluster to show")->required();
    show->add_option("--db", db_opt.db, "store root (or $SSD_AUTOTUNE_DB)");
    show->callback([&] { run_db_show(db_opt); });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const CodedError& e) {
        std::fprintf(stderr, "error: %s: %s\n", e.code().c_str(), e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: internal: %s\n", e.what());
        return 1;
    }
    return 0;
}
