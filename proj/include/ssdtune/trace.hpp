#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "ssdtune/error.hpp"

namespace ssdtune {

enum class IoOp : uint8_t { Read, Write };

// One block-I/O event. Timestamps are nanoseconds relative to trace start,
// LBAs count 512-byte sectors, sizes are bytes (multiple of 512).
struct IoRecord {
    uint64_t timestamp_ns = 0;
    uint32_t device_id = 0;
    uint64_t lba = 0;
    uint32_t size = 512;
    IoOp op = IoOp::Read;

    bool operator==(const IoRecord&) const = default;
};

class TraceParseError : public CodedError {
public:
    TraceParseError(size_t line, const std::string& message)
        : CodedError("parse_error", message), line_(line) {}

    size_t line() const noexcept { return line_; }

private:
    size_t line_;
};

// Text trace format, one record per line:
//   <timestamp_ns> <device_id> <lba_sectors> <size_bytes> <R|W>
// Blank lines and lines starting with '#' are skipped. Timestamps must be
// non-decreasing; they are rebased so the first record starts at zero.
std::vector<IoRecord> parse_trace(std::istream& in);
std::vector<IoRecord> parse_trace_file(const std::filesystem::path& path);
void write_trace(std::ostream& out, std::span<const IoRecord> records);
void write_trace_file(const std::filesystem::path& path, std::span<const IoRecord> records);

struct TraceWindow {
    std::span<const IoRecord> records;
    size_t window_index = 0;
};

inline constexpr size_t kDefaultWindowSize = 3000;

// Splits a trace into fixed-size windows; a trailing remainder shorter than
// window_size is discarded. The returned windows view into `records`.
std::vector<TraceWindow> make_windows(std::span<const IoRecord> records,
                                      size_t window_size = kDefaultWindowSize);

struct WindowFeatures {
    double read_ratio = 0;          // reads / window size, in [0,1]
    double mean_io_size = 0;        // bytes
    double std_io_size = 0;         // population std, bytes
    double mean_interarrival_ns = 0;
    double std_interarrival_ns = 0;
    double sequential_ratio = 0;    // start LBA == previous end LBA, in [0,1]
    double lba_span = 0;            // max - min start LBA, sectors
    double lba_entropy = 0;         // Shannon entropy over 64 bins, bits in [0,6]
    double write_working_set = 0;   // distinct 4096-aligned pages written
    double iops = 0;                // completed intervals per second

    static constexpr size_t kCount = 10;
    std::array<double, kCount> as_array() const;
    static const std::array<std::string, kCount>& names();
};

WindowFeatures extract_features(const TraceWindow& window);

struct TraceProfile {
    enum class Kind { SeqRead, RandRead, SeqWrite, RandWrite, Mixed };

    Kind kind = Kind::SeqRead;
    double read_fraction = 0.5; // Mixed only

    static TraceProfile seq_read() { return {Kind::SeqRead, 1.0}; }
    static TraceProfile rand_read() { return {Kind::RandRead, 1.0}; }
    static TraceProfile seq_write() { return {Kind::SeqWrite, 0.0}; }
    static TraceProfile rand_write() { return {Kind::RandWrite, 0.0}; }
    static TraceProfile mixed(double read_fraction) { return {Kind::Mixed, read_fraction}; }

    // Accepts "seqread", "randread", "seqwrite", "randwrite", "mixed" or
    // "mixed:<read_fraction>".
    static TraceProfile from_name(const std::string& name);
    std::string name() const;
};

// Deterministic workload generator: the same (profile, n, seed) triple always
// yields byte-identical traces. Intended as a stand-in for captured traces.
std::vector<IoRecord> generate_synthetic_trace(const TraceProfile& profile, size_t n,
                                               uint64_t seed);

} // namespace ssdtune
