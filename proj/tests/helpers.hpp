#pragma once

// Shared fixtures: small parameter catalogs sized so garbage collection and
// capacity pressure are reachable in a few hundred I/Os, plus hand-rolled
// trace builders with exact timing control.

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "ssdtune/paramspace.hpp"
#include "ssdtune/rng.hpp"
#include "ssdtune/trace.hpp"

namespace testutil {

using namespace ssdtune;

// One channel, one chip, one die, one plane, 8 blocks x 4 pages x 4 KiB:
// raw = 131072 bytes = 32 pages. With 0.25 overprovisioning the logical size
// is 24 pages and the GC threshold is floor(32 * 0.25 / 2) = 4 free pages.
inline ParamSpace tiny_layout_space() {
    std::vector<ParamDef> params;
    auto coupled = [&](const std::string& name, std::vector<double> values,
                       const std::string& unit = "") {
        params.push_back({name, DiscreteKind{std::move(values)}, true, unit});
    };
    coupled("FlashChannelCount", {1});
    coupled("ChipNoPerChannel", {1});
    coupled("DieNoPerChip", {1});
    coupled("PlaneNoPerDie", {1});
    coupled("BlockNoPerPlane", {8});
    coupled("PageNoPerBlock", {4});
    coupled("PageSize", {4096}, "bytes");
    params.push_back({"OverprovisioningRatio", DiscreteKind{{0.25}}, false, ""});
    params.push_back({"GreedyGCEnabled", BooleanKind{}, false, ""});
    params.push_back({"StaticWearLevelingEnabled", BooleanKind{}, false, ""});
    return ParamSpace::from_params(std::move(params));
}

inline Constraints tiny_constraints() {
    Constraints c;
    c.capacity_bytes = 131072;
    c.interface = Interface::NVMe;
    c.flash_type = FlashType::MLC;
    c.capacity_tolerance = 0.25;
    return c;
}

// Three free parameters over a fixed reference layout; the whole space has
// 5 * 4 * 2 = 40 non-coupled combinations, small enough to enumerate.
inline ParamSpace toy_tuning_space() {
    std::vector<ParamDef> params;
    params.push_back({"IOQueueDepth",
                      DiscreteKind{{1024, 2048, 4096, 8192, 16384}},
                      false,
                      "entries"});
    params.push_back({"DataCacheCapacity",
                      DiscreteKind{{134217728.0, 268435456.0, 536870912.0, 1073741824.0}},
                      false,
                      "bytes"});
    params.push_back({"GreedyGCEnabled", BooleanKind{}, false, ""});
    params.push_back({"FlashChannelCount", DiscreteKind{{12}}, true, ""});
    params.push_back({"ChipNoPerChannel", DiscreteKind{{5}}, true, ""});
    params.push_back({"DieNoPerChip", DiscreteKind{{8}}, true, ""});
    params.push_back({"PlaneNoPerDie", DiscreteKind{{1}}, true, ""});
    params.push_back({"BlockNoPerPlane", DiscreteKind{{512}}, true, ""});
    params.push_back({"PageNoPerBlock", DiscreteKind{{512}}, true, ""});
    params.push_back({"PageSize", DiscreteKind{{4096}}, true, "bytes"});
    return ParamSpace::from_params(std::move(params));
}

// Reference chip layout pinned as singletons plus a handful of free
// parameters, so a full pruning run stays cheap.
inline ParamSpace pruning_probe_space() {
    std::vector<ParamDef> params;
    params.push_back({"IOQueueDepth",
                      DiscreteKind{{1024, 2048, 4096, 8192, 16384}},
                      false,
                      "entries"});
    params.push_back({"DataCacheCapacity",
                      DiscreteKind{{134217728.0, 268435456.0, 536870912.0, 800000000.0,
                                    1073741824.0, 2147483648.0}},
                      false,
                      "bytes"});
    params.push_back({"PageMetadataSize", DiscreteKind{{16, 64, 256, 1024}}, false, "bytes"});
    params.push_back({"SataProcessingDelay", DiscreteKind{{10, 50, 100, 400}}, false, "us"});
    params.push_back({"GreedyGCEnabled", BooleanKind{}, false, ""});
    params.push_back({"FlashChannelCount", DiscreteKind{{12}}, true, ""});
    params.push_back({"ChipNoPerChannel", DiscreteKind{{5}}, true, ""});
    params.push_back({"DieNoPerChip", DiscreteKind{{8}}, true, ""});
    params.push_back({"PlaneNoPerDie", DiscreteKind{{1}}, true, ""});
    params.push_back({"BlockNoPerPlane", DiscreteKind{{512}}, true, ""});
    params.push_back({"PageNoPerBlock", DiscreteKind{{512}}, true, ""});
    params.push_back({"PageSize", DiscreteKind{{4096}}, true, "bytes"});
    return ParamSpace::from_params(std::move(params));
}

inline Constraints default_constraints(double tolerance = 0.25) {
    Constraints c;
    c.capacity_bytes = 512ull * 1024 * 1024 * 1024;
    c.interface = Interface::NVMe;
    c.flash_type = FlashType::MLC;
    c.capacity_tolerance = tolerance;
    return c;
}

inline IoRecord rec(uint64_t ts_ns, uint64_t lba, uint32_t size, IoOp op) {
    IoRecord r;
    r.timestamp_ns = ts_ns;
    r.device_id = 0;
    r.lba = lba;
    r.size = size;
    r.op = op;
    return r;
}

// n sequential 4 KiB operations separated by gap_ns.
inline std::vector<IoRecord> seq_trace(size_t n, IoOp op, uint64_t gap_ns = 1000000,
                                       uint64_t start_lba = 0) {
    std::vector<IoRecord> out;
    out.reserve(n);
    for (size_t i = 0; i < n; ++i)
        out.push_back(rec(i * gap_ns, start_lba + i * 8, 4096, op));
    return out;
}

// n 4 KiB operations cycling through `pages` distinct pages; repeated
// overwrites of a small logical range are the fastest way to trigger GC.
inline std::vector<IoRecord> cycling_trace(size_t n, size_t pages, IoOp op,
                                           uint64_t gap_ns = 1000) {
    std::vector<IoRecord> out;
    out.reserve(n);
    for (size_t i = 0; i < n; ++i)
        out.push_back(rec(i * gap_ns, (i % pages) * 8, 4096, op));
    return out;
}

// n uniform-random 4 KiB operations over `pages` pages, deterministic.
inline std::vector<IoRecord> random_trace(size_t n, size_t pages, IoOp op, uint64_t seed,
                                          uint64_t gap_ns = 1000) {
    std::mt19937_64 rng(seed);
    std::vector<IoRecord> out;
    out.reserve(n);
    for (size_t i = 0; i < n; ++i)
        out.push_back(rec(i * gap_ns, rand_index(rng, pages) * 8, 4096, op));
    return out;
}

// Unique scratch directory under the build tree; callers may clobber freely.
inline std::filesystem::path scratch_dir(const std::string& tag) {
    auto root = std::filesystem::temp_directory_path() / ("ssdtune_test_" + tag);
    std::filesystem::remove_all(root);
    std::filesystem::create_directories(root);
    return root;
}

} // namespace testutil
