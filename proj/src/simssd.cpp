#include "ssdtune/simssd.hpp"

#include <algorithm>
#include <cmath>
#include <list>
#include <map>
#include <optional>
#include <ostream>
#include <unordered_map>

#include <nlohmann/json.hpp>

namespace ssdtune {

const FlashTiming& SimTiming::flash(FlashType type) const {
    switch (type) {
    case FlashType::SLC:
        return slc;
    case FlashType::MLC:
        return mlc;
    default:
        return tlc;
    }
}

SimTiming SimTiming::resolve(const ParamSpace& space) {
    SimTiming t;
    const nlohmann::json& j = space.timing_overrides();
    if (j.empty())
        return t;
    auto flash = [&](const char* key, FlashTiming& ft) {
        if (!j.contains(key))
            return;
        const auto& fj = j[key];
        ft.read_us = fj.value("read_us", ft.read_us);
        ft.program_us = fj.value("program_us", ft.program_us);
        ft.erase_us = fj.value("erase_us", ft.erase_us);
    };
    flash("slc", t.slc);
    flash("mlc", t.mlc);
    flash("tlc", t.tlc);
    t.nvme_delay_us = j.value("nvme_delay_us", t.nvme_delay_us);
    t.sata_delay_us = j.value("sata_delay_us", t.sata_delay_us);
    t.nvme_bus_mbps = j.value("nvme_bus_mbps", t.nvme_bus_mbps);
    t.sata_bus_mbps = j.value("sata_bus_mbps", t.sata_bus_mbps);
    t.cache_hit_us = j.value("cache_hit_us", t.cache_hit_us);
    return t;
}

namespace {

constexpr double kFetchRoundUs = 1.0; // per command-fetch batch after the first

struct PhysLoc {
    int32_t plane = -1;
    int32_t block = -1;
    int32_t page = -1;
};

struct Block {
    int written = 0;
    int valid = 0;
    std::vector<int64_t> lpns;
    std::vector<uint8_t> live;
};

struct Plane {
    uint64_t free_pages = 0;
    int active = -1;
    int active_off = 0;
    std::map<int, Block> blocks; // ordered so victim scans are deterministic
    std::vector<int> free_list;  // erased block ids, reused LIFO
    int next_fresh = 0;
    int rr_cursor = 0;
};

// Plain LRU over logical page numbers; doubles as the data cache (with dirty
// bits) and the cached mapping table.
class LruCache {
public:
    explicit LruCache(uint64_t capacity) : capacity_(capacity) {}

    bool enabled() const { return capacity_ > 0; }
    bool contains(uint64_t key) const { return index_.count(key) > 0; }

    void touch(uint64_t key, bool mark_dirty = false) {
        auto it = index_.find(key);
        items_.splice(items_.begin(), items_, it->second);
        if (mark_dirty)
            it->second->dirty = true;
    }

    // Inserts an entry; returns the evicted dirty key, if any.
    std::optional<uint64_t> insert(uint64_t key, bool dirty = false) {
        auto it = index_.find(key);
        if (it != index_.end()) {
            items_.splice(items_.begin(), items_, it->second);
            if (dirty)
                it->second->dirty = true;
            return std::nullopt;
        }
        std::optional<uint64_t> flushed;
        if (items_.size() >= capacity_) {
            auto& victim = items_.back();
            if (victim.dirty)
                flushed = victim.key;
            index_.erase(victim.key);
            items_.pop_back();
        }
        items_.push_front({key, dirty});
        index_[key] = items_.begin();
        return flushed;
    }

private:
    struct Entry {
        uint64_t key;
        bool dirty;
    };
    uint64_t capacity_;
    std::list<Entry> items_;
    std::unordered_map<uint64_t, std::list<Entry>::iterator> index_;
};

struct DeviceModel {
    // geometry
    int channels = 0, chips_per_channel = 0, dies = 0, planes_per_die = 0;
    int blocks_per_plane = 0, pages_per_block = 0;
    uint64_t page_size = 0;
    uint64_t pages_per_plane = 0;
    uint64_t plane_count = 0;
    uint64_t logical_pages = 0;
    uint64_t gc_threshold_pages = 0;

    // behaviour
    double iface_delay_us = 0;
    double bus_bytes_per_us = 0;
    FlashTiming flash;
    double cache_hit_us = 1;
    uint64_t queue_depth = 0; // 0 = unbounded
    uint64_t fetch_size = 0;  // 0 = no batching
    bool greedy_gc = true;
    bool static_wl = false;
    int scheme_dims[4] = {0, 0, 0, 0}; // sizes in striping-priority order
    int scheme_kind[4] = {0, 0, 0, 0}; // 0=C 1=W 2=D 3=P

    // state
    std::vector<double> chip_busy;
    std::vector<double> chan_busy;
    std::vector<Plane> planes;
    std::unordered_map<uint64_t, PhysLoc> mapping;
    LruCache data_cache{0};
    LruCache cmt{0};
    uint64_t gc_invocations = 0;
    SimStats stats;

    int chip_of_plane(uint64_t plane) const {
        return static_cast<int>(plane / (static_cast<uint64_t>(dies) * planes_per_die));
    }
    int channel_of_chip(int chip) const { return chip / chips_per_channel; }

    uint64_t home_plane(uint64_t lpn) const {
        uint64_t rem = lpn;
        int coord[4] = {0, 0, 0, 0}; // indexed by kind
        for (int s = 0; s < 4; ++s) {
            uint64_t dim = static_cast<uint64_t>(scheme_dims[s]);
            coord[scheme_kind[s]] = static_cast<int>(rem % dim);
            rem /= dim;
        }
        uint64_t c = coord[0], w = coord[1], d = coord[2], p = coord[3];
        return ((c * chips_per_channel + w) * dies + d) * planes_per_die + p;
    }

    void ensure_block_storage(Plane& pl, int id) {
        Block& b = pl.blocks[id];
        if (b.lpns.empty()) {
            b.lpns.assign(static_cast<size_t>(pages_per_block), -1);
            b.live.assign(static_cast<size_t>(pages_per_block), 0);
        }
    }

    PhysLoc allocate_page(uint64_t plane_idx, uint64_t lpn, double now);
    void invalidate(const PhysLoc& loc);
    void erase_block(Plane& pl, int id);
    int pick_victim(Plane& pl) const;
    bool collect_one(uint64_t plane_idx, double now);
    void maybe_gc(uint64_t plane_idx, double now);
    void wear_level(uint64_t plane_idx, double now);
    // Out-of-place program of one logical page; returns completion time on the
    // chip. `charge_start` is the earliest the transfer may begin.
    double program_page(uint64_t lpn, double charge_start, double now);
};

void DeviceModel::invalidate(const PhysLoc& loc) {
    Block& b = planes[static_cast<size_t>(loc.plane)].blocks.at(loc.block);
    if (b.live[static_cast<size_t>(loc.page)]) {
        b.live[static_cast<size_t>(loc.page)] = 0;
        b.valid--;
    }
}

void DeviceModel::erase_block(Plane& pl, int id) {
    Block& b = pl.blocks.at(id);
    pl.free_pages += static_cast<uint64_t>(b.written);
    b.written = 0;
    b.valid = 0;
    std::fill(b.lpns.begin(), b.lpns.end(), -1);
    std::fill(b.live.begin(), b.live.end(), 0);
    pl.free_list.push_back(id);
}

PhysLoc DeviceModel::allocate_page(uint64_t plane_idx, uint64_t lpn, double now) {
    Plane& pl = planes[plane_idx];
    if (pl.free_pages == 0) {
        // Emergency collection regardless of the threshold.
        if (!collect_one(plane_idx, now))
            throw CodedError("capacity_exhausted", "capacity exhausted");
    }
    if (pl.active < 0 || pl.active_off == pages_per_block) {
        int id;
        if (!pl.free_list.empty()) {
            id = pl.free_list.back();
            pl.free_list.pop_back();
        } else if (pl.next_fresh < blocks_per_plane) {
            id = pl.next_fresh++;
        } else {
            throw CodedError("capacity_exhausted", "capacity exhausted");
        }
        pl.active = id;
        pl.active_off = 0;
        ensure_block_storage(pl, id);
    }
    Block& b = pl.blocks.at(pl.active);
    PhysLoc loc{static_cast<int32_t>(plane_idx), pl.active, pl.active_off};
    b.lpns[static_cast<size_t>(pl.active_off)] = static_cast<int64_t>(lpn);
    b.live[static_cast<size_t>(pl.active_off)] = 1;
    b.written++;
    b.valid++;
    pl.active_off++;
    pl.free_pages--;
    return loc;
}

int DeviceModel::pick_victim(Plane& pl) const {
    // Only full blocks are candidates, and moving their live pages must fit
    // in the remaining free space.
    auto eligible = [&](int id, const Block& b) {
        return id != pl.active && b.written == pages_per_block && b.valid < pages_per_block &&
               static_cast<uint64_t>(b.valid) <= pl.free_pages;
    };
    if (greedy_gc) {
        int best = -1, best_valid = 0;
        for (const auto& [id, b] : pl.blocks) {
            if (!eligible(id, b))
                continue;
            if (best < 0 || b.valid < best_valid) {
                best = id;
                best_valid = b.valid;
            }
        }
        return best;
    }
    for (int probe = 0; probe < blocks_per_plane; ++probe) {
        int id = (pl.rr_cursor + probe) % blocks_per_plane;
        auto it = pl.blocks.find(id);
        if (it == pl.blocks.end() || !eligible(id, it->second))
            continue;
        const_cast<Plane&>(pl).rr_cursor = (id + 1) % blocks_per_plane;
        return id;
    }
    return -1;
}

bool DeviceModel::collect_one(uint64_t plane_idx, double now) {
    Plane& pl = planes[plane_idx];
    int victim = pick_victim(pl);
    if (victim < 0)
        return false;
    Block& b = pl.blocks.at(victim);
    int moves = 0;
    for (int p = 0; p < pages_per_block; ++p) {
        if (!b.live[static_cast<size_t>(p)])
            continue;
        uint64_t lpn = static_cast<uint64_t>(b.lpns[static_cast<size_t>(p)]);
        b.live[static_cast<size_t>(p)] = 0;
        b.valid--;
        PhysLoc loc = allocate_page(plane_idx, lpn, now);
        mapping[lpn] = loc;
        moves++;
    }
    erase_block(pl, victim);
    int chip = chip_of_plane(plane_idx);
    chip_busy[static_cast<size_t>(chip)] =
        std::max(chip_busy[static_cast<size_t>(chip)], now) +
        moves * (flash.read_us + flash.program_us) + flash.erase_us;
    gc_invocations++;
    stats.gc_page_moves += static_cast<uint64_t>(moves);
    stats.total_pages_programmed += static_cast<uint64_t>(moves);
    if (static_wl && gc_invocations % 64 == 0)
        wear_level(plane_idx, now);
    return true;
}

void DeviceModel::maybe_gc(uint64_t plane_idx, double now) {
    Plane& pl = planes[plane_idx];
    while (pl.free_pages < gc_threshold_pages) {
        if (!collect_one(plane_idx, now)) {
            if (pl.free_pages == 0)
                throw CodedError("capacity_exhausted", "capacity exhausted");
            break; // nothing reclaimable right now
        }
    }
}

void DeviceModel::wear_level(uint64_t plane_idx, double now) {
    // One block swap: migrate the coldest (fullest) block so static data
    // rotates onto fresh erase blocks.
    Plane& pl = planes[plane_idx];
    int target = -1, target_valid = -1;
    for (const auto& [id, b] : pl.blocks) {
        if (id == pl.active || b.written != pages_per_block)
            continue;
        if (static_cast<uint64_t>(b.valid) > pl.free_pages)
            continue;
        if (b.valid > target_valid) {
            target = id;
            target_valid = b.valid;
        }
    }
    if (target < 0)
        return;
    Block& b = pl.blocks.at(target);
    int moves = 0;
    for (int p = 0; p < pages_per_block; ++p) {
        if (!b.live[static_cast<size_t>(p)])
            continue;
        uint64_t lpn = static_cast<uint64_t>(b.lpns[static_cast<size_t>(p)]);
        b.live[static_cast<size_t>(p)] = 0;
        b.valid--;
        mapping[lpn] = allocate_page(plane_idx, lpn, now);
        moves++;
    }
    erase_block(pl, target);
    int chip = chip_of_plane(plane_idx);
    chip_busy[static_cast<size_t>(chip)] =
        std::max(chip_busy[static_cast<size_t>(chip)], now) +
        moves * (flash.read_us + flash.program_us) + flash.erase_us;
    stats.wl_page_moves += static_cast<uint64_t>(moves);
    stats.total_pages_programmed += static_cast<uint64_t>(moves);
}

double DeviceModel::program_page(uint64_t lpn, double charge_start, double now) {
    uint64_t plane_idx = home_plane(lpn);
    maybe_gc(plane_idx, now);
    auto old = mapping.find(lpn);
    if (old != mapping.end())
        invalidate(old->second);
    PhysLoc loc = allocate_page(plane_idx, lpn, now);
    mapping[lpn] = loc;

    int chip = chip_of_plane(plane_idx);
    int chan = channel_of_chip(chip);
    double tr = std::max(charge_start, chan_busy[static_cast<size_t>(chan)]);
    chan_busy[static_cast<size_t>(chan)] =
        tr + static_cast<double>(page_size) / bus_bytes_per_us;
    double ps = std::max(chan_busy[static_cast<size_t>(chan)],
                         chip_busy[static_cast<size_t>(chip)]);
    chip_busy[static_cast<size_t>(chip)] = ps + flash.program_us;
    stats.host_pages_programmed++;
    stats.total_pages_programmed++;
    return chip_busy[static_cast<size_t>(chip)];
}

double num_or(const ParamSpace& space, const Configuration& cfg, const std::string& name,
              double fallback) {
    return space.has(name) ? numeric_value(space, cfg, name) : fallback;
}

bool flag_or(const ParamSpace& space, const Configuration& cfg, const std::string& name,
             bool fallback) {
    return space.has(name) ? boolean_value(space, cfg, name) : fallback;
}

double require_num(const ParamSpace& space, const Configuration& cfg, const std::string& name) {
    if (!space.has(name))
        throw CodedError("catalog_missing_param",
                         "simulator requires catalog parameter " + name);
    return numeric_value(space, cfg, name);
}

} // namespace

SimResult simulate(const ParamSpace& space, const Configuration& config,
                   const Constraints& constraints, std::span<const IoRecord> trace,
                   const SimOptions& options) {
    if (trace.empty())
        throw std::invalid_argument("simulate requires a non-empty trace");
    check_configuration(space, config);
    if (!satisfies(space, config, constraints))
        throw CodedError("constraint_violation",
                         "configuration violates the capacity constraint");
    if (options.warmup_fraction < 0 || options.warmup_fraction >= 1)
        throw std::invalid_argument("warmup fraction must be in [0,1)");

    SimTiming timing = SimTiming::resolve(space);

    DeviceModel dev;
    dev.channels = static_cast<int>(require_num(space, config, "FlashChannelCount"));
    dev.chips_per_channel = static_cast<int>(require_num(space, config, "ChipNoPerChannel"));
    dev.dies = static_cast<int>(require_num(space, config, "DieNoPerChip"));
    dev.planes_per_die = static_cast<int>(require_num(space, config, "PlaneNoPerDie"));
    dev.blocks_per_plane = static_cast<int>(require_num(space, config, "BlockNoPerPlane"));
    dev.pages_per_block = static_cast<int>(require_num(space, config, "PageNoPerBlock"));
    dev.page_size = static_cast<uint64_t>(require_num(space, config, "PageSize"));

    dev.pages_per_plane =
        static_cast<uint64_t>(dev.blocks_per_plane) * static_cast<uint64_t>(dev.pages_per_block);
    dev.plane_count = static_cast<uint64_t>(dev.channels) * dev.chips_per_channel * dev.dies *
                      dev.planes_per_die;

    double op_ratio = num_or(space, config, "OverprovisioningRatio", 0.1);
    uint64_t raw_pages = dev.pages_per_plane * dev.plane_count;
    dev.logical_pages = std::max<uint64_t>(
        1, static_cast<uint64_t>(std::floor(static_cast<double>(raw_pages) * (1.0 - op_ratio))));
    dev.gc_threshold_pages = static_cast<uint64_t>(
        std::floor(static_cast<double>(dev.pages_per_plane) * op_ratio / 2.0));

    dev.flash = timing.flash(constraints.flash_type);
    if (constraints.interface == Interface::NVMe) {
        dev.iface_delay_us = timing.nvme_delay_us;
        dev.bus_bytes_per_us = timing.nvme_bus_mbps; // MB/s == bytes/us
    } else {
        dev.iface_delay_us =
            timing.sata_delay_us + num_or(space, config, "SataProcessingDelay", 0.0);
        dev.bus_bytes_per_us = timing.sata_bus_mbps;
    }
    dev.cache_hit_us = timing.cache_hit_us;
    dev.queue_depth = static_cast<uint64_t>(num_or(space, config, "IOQueueDepth", 0));
    dev.fetch_size = static_cast<uint64_t>(num_or(space, config, "QueueFetchSize", 0));
    dev.greedy_gc = flag_or(space, config, "GreedyGCEnabled", true);
    dev.static_wl = flag_or(space, config, "StaticWearLevelingEnabled", false);

    std::string scheme = "CWDP";
    if (space.has("PageAllocationScheme"))
        scheme = categorical_label(space, config, "PageAllocationScheme");
    for (int s = 0; s < 4; ++s) {
        switch (scheme.at(static_cast<size_t>(s))) {
        case 'C':
            dev.scheme_kind[s] = 0;
            dev.scheme_dims[s] = dev.channels;
            break;
        case 'W':
            dev.scheme_kind[s] = 1;
            dev.scheme_dims[s] = dev.chips_per_channel;
            break;
        case 'D':
            dev.scheme_kind[s] = 2;
            dev.scheme_dims[s] = dev.dies;
            break;
        case 'P':
            dev.scheme_kind[s] = 3;
            dev.scheme_dims[s] = dev.planes_per_die;
            break;
        default:
            throw CodedError("config_error", "bad allocation scheme: " + scheme);
        }
    }

    uint64_t cache_bytes = static_cast<uint64_t>(num_or(space, config, "DataCacheCapacity", 0));
    dev.data_cache = LruCache(cache_bytes / std::max<uint64_t>(1, dev.page_size));
    uint64_t cmt_bytes = static_cast<uint64_t>(num_or(space, config, "CMTCapacity", 0));
    dev.cmt = LruCache(cmt_bytes / 8); // 8 bytes per cached translation entry

    dev.chip_busy.assign(static_cast<size_t>(dev.channels) * dev.chips_per_channel, 0.0);
    dev.chan_busy.assign(static_cast<size_t>(dev.channels), 0.0);
    dev.planes.resize(dev.plane_count);
    for (auto& pl : dev.planes)
        pl.free_pages = dev.pages_per_plane;
    dev.stats.raw_pages_total = raw_pages;

    const size_t n = trace.size();
    const size_t warm_count = static_cast<size_t>(options.warmup_fraction * n);
    std::vector<double> completions(n, 0.0);

    double round_gate = 0.0;
    uint64_t last_round = 0;

    double lat_sum = 0;
    double measured_bytes = 0;
    double first_submit = 0, last_complete = 0;
    bool have_measured = false;

    std::vector<uint64_t> lpns;
    for (size_t i = 0; i < n; ++i) {
        const IoRecord& req = trace[i];
        double submit = static_cast<double>(req.timestamp_ns) / 1000.0;

        double t0 = submit + dev.iface_delay_us;
        if (dev.queue_depth > 0 && i >= dev.queue_depth)
            t0 = std::max(t0, completions[i - dev.queue_depth]);
        if (dev.fetch_size > 0) {
            uint64_t round = i / dev.fetch_size;
            if (round > 0) {
                if (round != last_round) {
                    last_round = round;
                    round_gate = std::max(round_gate, submit) + kFetchRoundUs;
                }
                t0 = std::max(t0, round_gate);
            }
        }

        uint64_t byte_start = req.lba * 512;
        uint64_t first_page = byte_start / dev.page_size;
        uint64_t last_page = (byte_start + req.size - 1) / dev.page_size;
        lpns.clear();
        for (uint64_t p = first_page; p <= last_page; ++p)
            lpns.push_back(p % dev.logical_pages);

        // Address translation: a mapping-cache miss adds one flash read on the
        // page's home chip before any data movement.
        double trans_done = t0;
        if (dev.cmt.enabled()) {
            for (uint64_t lpn : lpns) {
                if (dev.cmt.contains(lpn)) {
                    dev.cmt.touch(lpn);
                    dev.stats.cmt_hits++;
                    continue;
                }
                dev.stats.cmt_misses++;
                int chip = dev.chip_of_plane(dev.home_plane(lpn));
                double s = std::max(t0, dev.chip_busy[static_cast<size_t>(chip)]);
                dev.chip_busy[static_cast<size_t>(chip)] = s + dev.flash.read_us;
                dev.stats.flash_page_reads++;
                trans_done = std::max(trans_done, dev.chip_busy[static_cast<size_t>(chip)]);
                dev.cmt.insert(lpn);
            }
        }

        double done;
        bool all_cached = dev.data_cache.enabled() &&
                          std::all_of(lpns.begin(), lpns.end(), [&](uint64_t lpn) {
                              return dev.data_cache.contains(lpn);
                          });
        if (all_cached) {
            for (uint64_t lpn : lpns)
                dev.data_cache.touch(lpn, req.op == IoOp::Write);
            dev.stats.data_cache_hits += lpns.size();
            done = trans_done + dev.cache_hit_us +
                   static_cast<double>(req.size) / dev.bus_bytes_per_us;
        } else {
            double media = trans_done;
            double cache_gate = trans_done; // dirty evictions gate the DRAM slot
            bool absorbed = false;          // some page settled in the data cache
            for (uint64_t lpn : lpns) {
                if (dev.data_cache.enabled() && dev.data_cache.contains(lpn)) {
                    // Read served from DRAM; write absorbed and flushed on
                    // eviction.
                    dev.data_cache.touch(lpn, req.op == IoOp::Write);
                    dev.stats.data_cache_hits++;
                    absorbed = true;
                    continue;
                }
                if (dev.data_cache.enabled())
                    dev.stats.data_cache_misses++;
                if (req.op == IoOp::Read) {
                    auto it = dev.mapping.find(lpn);
                    uint64_t plane_idx =
                        it != dev.mapping.end() ? static_cast<uint64_t>(it->second.plane)
                                                : dev.home_plane(lpn);
                    int chip = dev.chip_of_plane(plane_idx);
                    int chan = dev.channel_of_chip(chip);
                    double s = std::max(trans_done, dev.chip_busy[static_cast<size_t>(chip)]);
                    dev.chip_busy[static_cast<size_t>(chip)] = s + dev.flash.read_us;
                    dev.stats.flash_page_reads++;
                    double tr = std::max(dev.chip_busy[static_cast<size_t>(chip)],
                                         dev.chan_busy[static_cast<size_t>(chan)]);
                    dev.chan_busy[static_cast<size_t>(chan)] =
                        tr + static_cast<double>(dev.page_size) / dev.bus_bytes_per_us;
                    media = std::max(media, dev.chan_busy[static_cast<size_t>(chan)]);
                    if (dev.data_cache.enabled()) {
                        if (auto flushed = dev.data_cache.insert(lpn))
                            cache_gate = std::max(
                                cache_gate, dev.program_page(*flushed, trans_done, trans_done));
                    }
                } else if (dev.data_cache.enabled()) {
                    // Write-back: the page lands in DRAM; a full cache first
                    // flushes its least-recent dirty line to flash.
                    if (auto flushed = dev.data_cache.insert(lpn, true))
                        cache_gate = std::max(
                            cache_gate, dev.program_page(*flushed, trans_done, trans_done));
                    absorbed = true;
                } else {
                    media = std::max(media, dev.program_page(lpn, trans_done, trans_done));
                }
            }
            if (absorbed)
                media = std::max(media, cache_gate + dev.cache_hit_us +
                                            static_cast<double>(req.size) / dev.bus_bytes_per_us);
            else
                media = std::max(media, cache_gate);
            done = media;
        }

        completions[i] = done;
        double latency = done - submit;
        if (options.latency_dump) {
            (*options.latency_dump) << "{\"index\":" << i << ",\"submit_us\":" << submit
                                    << ",\"latency_us\":" << latency << ",\"op\":\""
                                    << (req.op == IoOp::Read ? 'R' : 'W') << "\"}\n";
        }
        if (i >= warm_count) {
            lat_sum += latency;
            measured_bytes += req.size;
            if (!have_measured) {
                first_submit = submit;
                have_measured = true;
            }
            last_complete = std::max(last_complete, done);
        }
    }

    SimResult result;
    uint64_t measured = n - warm_count;
    result.total_requests = measured;
    result.mean_latency_us = lat_sum / static_cast<double>(measured);
    // bytes per microsecond equals MB/s with 1 MB = 1e6 bytes
    result.throughput_mbps = measured_bytes / (last_complete - first_submit);
    result.gc_invocations = dev.gc_invocations;

    if (options.stats) {
        for (const auto& pl : dev.planes) {
            dev.stats.free_pages_total += pl.free_pages;
            for (const auto& [id, b] : pl.blocks)
                dev.stats.written_pages_total += static_cast<uint64_t>(b.written);
        }
        *options.stats = dev.stats;
    }
    return result;
}

std::vector<SimResult> measure(const ParamSpace& space, const Configuration& config,
                               const Constraints& constraints,
                               const std::vector<std::span<const IoRecord>>& workloads,
                               const SimOptions& options) {
    std::vector<SimResult> results;
    results.reserve(workloads.size());
    for (const auto& w : workloads)
        results.push_back(simulate(space, config, constraints, w, options));
    return results;
}

} // namespace ssdtune
