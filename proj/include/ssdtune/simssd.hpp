#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "ssdtune/paramspace.hpp"
#include "ssdtune/trace.hpp"

namespace ssdtune {

// Per-operation flash latencies in microseconds.
struct FlashTiming {
    double read_us = 0;
    double program_us = 0;
    double erase_us = 0;
};

// Fixed device timing; catalog JSON may override any field through a
// "timing" section (see SimTiming::resolve).
struct SimTiming {
    FlashTiming slc{25, 200, 1500};
    FlashTiming mlc{50, 600, 3000};
    FlashTiming tlc{75, 900, 4500};
    double nvme_delay_us = 5;
    double sata_delay_us = 25;
    double nvme_bus_mbps = 800; // MB/s, 1 MB = 1e6 bytes
    double sata_bus_mbps = 500;
    double cache_hit_us = 1;

    static SimTiming resolve(const ParamSpace& space);
    const FlashTiming& flash(FlashType type) const;
};

struct SimResult {
    double mean_latency_us = 0;
    double throughput_mbps = 0;
    uint64_t total_requests = 0; // requests included in the statistics
    uint64_t gc_invocations = 0;

    bool operator==(const SimResult&) const = default;
};

// Internal accounting exposed for invariant checks.
struct SimStats {
    uint64_t host_pages_programmed = 0; // host writes and dirty-cache flushes
    uint64_t gc_page_moves = 0;
    uint64_t wl_page_moves = 0;
    uint64_t total_pages_programmed = 0;
    uint64_t flash_page_reads = 0; // data reads plus mapping fetches
    uint64_t data_cache_hits = 0;
    uint64_t data_cache_misses = 0;
    uint64_t cmt_hits = 0;
    uint64_t cmt_misses = 0;
    uint64_t raw_pages_total = 0;
    uint64_t free_pages_total = 0;    // at end of run, summed over planes
    uint64_t written_pages_total = 0; // at end of run, summed over planes
};

struct SimOptions {
    double warmup_fraction = 0.1; // leading requests excluded from statistics
    std::ostream* latency_dump = nullptr; // NDJSON, one line per request
    SimStats* stats = nullptr;
};

// Replays a trace against the configured device model and reports steady-state
// latency and throughput. Deterministic: no randomness, single-threaded.
SimResult simulate(const ParamSpace& space, const Configuration& config,
                   const Constraints& constraints, std::span<const IoRecord> trace,
                   const SimOptions& options = {});

// Convenience: one simulate() per workload, in order.
std::vector<SimResult> measure(const ParamSpace& space, const Configuration& config,
                               const Constraints& constraints,
                               const std::vector<std::span<const IoRecord>>& workloads,
                               const SimOptions& options = {});

} // namespace ssdtune
