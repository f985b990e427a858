#include "ssdtune/trace.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <unordered_set>

#include "ssdtune/rng.hpp"

namespace ssdtune {

namespace {

std::string trim(const std::string& s) {
    size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos)
        return "";
    size_t e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

[[noreturn]] void malformed(size_t line, const std::string& detail) {
    std::ostringstream msg;
    msg << "malformed record at line " << line << ": " << detail;
    throw TraceParseError(line, msg.str());
}

} // namespace

std::vector<IoRecord> parse_trace(std::istream& in) {
    std::vector<IoRecord> records;
    std::string raw;
    size_t lineno = 0;
    uint64_t prev_ts = 0;
    while (std::getline(in, raw)) {
        ++lineno;
        std::string line = trim(raw);
        if (line.empty() || line[0] == '#')
            continue;

        std::istringstream ss(line);
        long long ts = 0, dev = 0, lba = 0, size = 0;
        std::string op;
        if (!(ss >> ts >> dev >> lba >> size >> op))
            malformed(lineno, "expected <timestamp> <device> <lba> <size> <R|W>");
        std::string extra;
        if (ss >> extra)
            malformed(lineno, "trailing field '" + extra + "'");
        if (ts < 0)
            malformed(lineno, "negative timestamp");
        if (dev < 0 || dev > std::numeric_limits<uint32_t>::max())
            malformed(lineno, "device id out of range");
        if (lba < 0)
            malformed(lineno, "negative lba");
        if (size < 512 || size % 512 != 0)
            malformed(lineno, "size must be a positive multiple of 512");
        if (op != "R" && op != "W")
            malformed(lineno, "op must be R or W");

        uint64_t uts = static_cast<uint64_t>(ts);
        if (!records.empty() && uts < prev_ts) {
            std::ostringstream msg;
            msg << "timestamps not monotone at line " << lineno;
            throw TraceParseError(lineno, msg.str());
        }
        prev_ts = uts;

        IoRecord rec;
        rec.timestamp_ns = uts;
        rec.device_id = static_cast<uint32_t>(dev);
        rec.lba = static_cast<uint64_t>(lba);
        rec.size = static_cast<uint32_t>(size);
        rec.op = (op == "R") ? IoOp::Read : IoOp::Write;
        records.push_back(rec);
    }
    if (records.empty())
        throw CodedError("parse_error", "empty trace");

    uint64_t base = records.front().timestamp_ns;
    for (auto& r : records)
        r.timestamp_ns -= base;
    return records;
}

std::vector<IoRecord> parse_trace_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in)
        throw CodedError("io_error", "cannot open trace file: " + path.string());
    return parse_trace(in);
}

void write_trace(std::ostream& out, std::span<const IoRecord> records) {
    for (const auto& r : records) {
        out << r.timestamp_ns << ' ' << r.device_id << ' ' << r.lba << ' ' << r.size << ' '
            << (r.op == IoOp::Read ? 'R' : 'W') << '\n';
    }
}

void write_trace_file(const std::filesystem::path& path, std::span<const IoRecord> records) {
    std::ofstream out(path);
    if (!out)
        throw CodedError("io_error", "cannot write trace file: " + path.string());
    write_trace(out, records);
}

std::vector<TraceWindow> make_windows(std::span<const IoRecord> records, size_t window_size) {
    if (window_size == 0)
        throw std::invalid_argument("window_size must be positive");
    if (records.empty())
        throw std::invalid_argument("make_windows requires a non-empty trace");
    if (records.size() < window_size)
        throw CodedError("trace_too_short", "trace too short for one window");

    size_t count = records.size() / window_size;
    std::vector<TraceWindow> windows;
    windows.reserve(count);
    for (size_t i = 0; i < count; ++i)
        windows.push_back({records.subspan(i * window_size, window_size), i});
    return windows;
}

std::array<double, WindowFeatures::kCount> WindowFeatures::as_array() const {
    return {read_ratio,       mean_io_size,       std_io_size, mean_interarrival_ns,
            std_interarrival_ns, sequential_ratio, lba_span,    lba_entropy,
            write_working_set,   iops};
}

const std::array<std::string, WindowFeatures::kCount>& WindowFeatures::names() {
    static const std::array<std::string, kCount> kNames = {
        "read_ratio",       "mean_io_size",       "std_io_size", "mean_interarrival_ns",
        "std_interarrival_ns", "sequential_ratio", "lba_span",    "lba_entropy",
        "write_working_set",   "iops"};
    return kNames;
}

WindowFeatures extract_features(const TraceWindow& window) {
    const auto& recs = window.records;
    if (recs.empty())
        throw std::invalid_argument("extract_features requires a non-empty window");
    const double n = static_cast<double>(recs.size());

    WindowFeatures f;

    size_t reads = 0;
    double size_sum = 0, size_sq = 0;
    uint64_t lba_min = recs[0].lba, lba_max = recs[0].lba;
    size_t sequential = 0;
    std::unordered_set<uint64_t> write_pages;
    for (size_t i = 0; i < recs.size(); ++i) {
        const auto& r = recs[i];
        if (r.op == IoOp::Read)
            ++reads;
        size_sum += r.size;
        size_sq += static_cast<double>(r.size) * r.size;
        lba_min = std::min(lba_min, r.lba);
        lba_max = std::max(lba_max, r.lba);
        if (i > 0 && r.lba == recs[i - 1].lba + recs[i - 1].size / 512)
            ++sequential;
        if (r.op == IoOp::Write) {
            uint64_t first = r.lba * 512 / 4096;
            uint64_t last = (r.lba * 512 + r.size - 1) / 4096;
            for (uint64_t p = first; p <= last; ++p)
                write_pages.insert(p);
        }
    }
    f.read_ratio = reads / n;
    f.mean_io_size = size_sum / n;
    f.std_io_size = std::sqrt(std::max(0.0, size_sq / n - f.mean_io_size * f.mean_io_size));
    f.sequential_ratio = sequential / n;
    f.lba_span = static_cast<double>(lba_max - lba_min);
    f.write_working_set = static_cast<double>(write_pages.size());

    if (recs.size() > 1) {
        double gap_sum = 0, gap_sq = 0;
        for (size_t i = 1; i < recs.size(); ++i) {
            double gap = static_cast<double>(recs[i].timestamp_ns - recs[i - 1].timestamp_ns);
            gap_sum += gap;
            gap_sq += gap * gap;
        }
        double m = recs.size() - 1.0;
        f.mean_interarrival_ns = gap_sum / m;
        f.std_interarrival_ns =
            std::sqrt(std::max(0.0, gap_sq / m - f.mean_interarrival_ns * f.mean_interarrival_ns));
        uint64_t span_ns = recs.back().timestamp_ns - recs.front().timestamp_ns;
        f.iops = span_ns > 0 ? m * 1e9 / static_cast<double>(span_ns) : 0.0;
    }

    // Start-LBA histogram over 64 equal-width bins spanning the observed range.
    uint64_t span = lba_max - lba_min;
    std::array<uint64_t, 64> bins{};
    for (const auto& r : recs) {
        uint64_t idx = span == 0 ? 0 : (r.lba - lba_min) * 64 / (span + 1);
        bins[std::min<uint64_t>(idx, 63)]++;
    }
    double entropy = 0;
    for (uint64_t c : bins) {
        if (c == 0)
            continue;
        double p = c / n;
        entropy -= p * std::log2(p);
    }
    f.lba_entropy = entropy;
    return f;
}

TraceProfile TraceProfile::from_name(const std::string& name) {
    std::string lower;
    lower.reserve(name.size());
    for (char c : name)
        lower.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    if (lower == "seqread")
        return seq_read();
    if (lower == "randread")
        return rand_read();
    if (lower == "seqwrite")
        return seq_write();
    if (lower == "randwrite")
        return rand_write();
    if (lower == "mixed")
        return mixed(0.5);
    if (lower.rfind("mixed:", 0) == 0) {
        double f = std::stod(lower.substr(6));
        if (f < 0.0 || f > 1.0)
            throw CodedError("usage", "mixed read fraction must be in [0,1]");
        return mixed(f);
    }
    throw CodedError("usage", "unknown workload profile: " + name);
}

std::string TraceProfile::name() const {
    switch (kind) {
    case Kind::SeqRead:
        return "seqread";
    case Kind::RandRead:
        return "randread";
    case Kind::SeqWrite:
        return "seqwrite";
    case Kind::RandWrite:
        return "randwrite";
    case Kind::Mixed: {
        std::ostringstream ss;
        ss << "mixed:" << read_fraction;
        return ss.str();
    }
    }
    return "unknown";
}

std::vector<IoRecord> generate_synthetic_trace(const TraceProfile& profile, size_t n,
                                               uint64_t seed) {
    if (n == 0)
        throw std::invalid_argument("synthetic trace length must be positive");
    std::mt19937_64 rng(seed ^ 0x5eed5eedULL);
    std::vector<IoRecord> out;
    out.reserve(n);

    auto emit = [&](uint64_t ts, uint64_t lba, uint32_t size, IoOp op) {
        IoRecord r;
        r.timestamp_ns = ts;
        r.device_id = 0;
        r.lba = lba;
        r.size = size;
        r.op = op;
        out.push_back(r);
    };

    switch (profile.kind) {
    case TraceProfile::Kind::SeqRead: {
        // Identical 4 KiB reads at exactly 1 ms spacing, back-to-back LBAs.
        for (size_t i = 0; i < n; ++i)
            emit(i * 1000000ULL, i * 8, 4096, IoOp::Read);
        break;
    }
    case TraceProfile::Kind::RandRead: {
        // 4 KiB reads over a 1 GiB span, paced slower than a flash read so
        // per-request latency stays queue-free.
        uint64_t ts = 0;
        for (size_t i = 0; i < n; ++i) {
            if (i > 0)
                ts += 100000 + static_cast<uint64_t>(rand_index(rng, 40001));
            uint64_t page = rand_index(rng, 262144);
            emit(ts, page * 8, 4096, IoOp::Read);
        }
        break;
    }
    case TraceProfile::Kind::SeqWrite: {
        for (size_t i = 0; i < n; ++i)
            emit(i * 200000ULL, i * 8, 4096, IoOp::Write);
        break;
    }
    case TraceProfile::Kind::RandWrite: {
        // 4 KiB writes over a 256 MiB span, paced slower than a flash program
        // so per-request latency stays queue-free.
        uint64_t ts = 0;
        for (size_t i = 0; i < n; ++i) {
            if (i > 0)
                ts += 700000 + static_cast<uint64_t>(rand_index(rng, 200001));
            uint64_t page = rand_index(rng, 65536);
            emit(ts, page * 8, 4096, IoOp::Write);
        }
        break;
    }
    case TraceProfile::Kind::Mixed: {
        // 4 KiB requests over a 256 MiB span; the read count is exact so the
        // requested mix is honoured to within one record.
        size_t read_count = static_cast<size_t>(std::llround(profile.read_fraction * n));
        std::vector<IoOp> ops(n, IoOp::Write);
        std::fill(ops.begin(), ops.begin() + std::min(read_count, n), IoOp::Read);
        for (size_t i = n; i > 1; --i)
            std::swap(ops[i - 1], ops[rand_index(rng, i)]);
        uint64_t ts = 0;
        for (size_t i = 0; i < n; ++i) {
            if (i > 0)
                ts += 700000 + static_cast<uint64_t>(rand_index(rng, 200001));
            uint64_t page = rand_index(rng, 65536);
            emit(ts, page * 8, 4096, ops[i]);
        }
        break;
    }
    }
    return out;
}

} // namespace ssdtune
