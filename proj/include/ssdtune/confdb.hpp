#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ssdtune/clustering.hpp"
#include "ssdtune/paramspace.hpp"
#include "ssdtune/pruning.hpp"
#include "ssdtune/trace.hpp"
#include "ssdtune/tuner.hpp"

namespace ssdtune {

nlohmann::json constraints_to_json(const Constraints& constraints);
Constraints constraints_from_json(const nlohmann::json& j);

struct ConfDbEntry {
    std::string cluster_id;
    ClusterInfo meta;       // center, mean intra-cluster distance, member count
    std::string trace_file; // store-relative path of the representative trace
    std::map<std::string, PerfPoint> reference_perf; // workload id -> reference measurement
    std::vector<GradeRecord> records;                // append-only
    std::optional<PruneReport> prune_report;
};

// Directory-backed store: manifest.json pins the catalog, constraints, the
// reference configuration and the fitted embedding; clusters/<id>.json holds
// one entry per cluster; traces/<id>.trace holds representative workloads.
// Single writer (advisory lock), atomic rename on every write.
class ConfDb {
public:
    // Opens or creates a store. A given catalog must match the stored one;
    // given constraints must match stored constraints (they are pinned on
    // first use). Pass nullopt to adopt whatever the manifest holds.
    static ConfDb open(const std::filesystem::path& root,
                       std::optional<ParamSpace> catalog = std::nullopt,
                       std::optional<Constraints> constraints = std::nullopt,
                       bool writable = true);

    ConfDb(ConfDb&&) noexcept;
    ConfDb& operator=(ConfDb&&) noexcept;
    ConfDb(const ConfDb&) = delete;
    ConfDb& operator=(const ConfDb&) = delete;
    ~ConfDb();

    const std::filesystem::path& root() const { return root_; }
    const ParamSpace& space() const { return space_; }
    bool has_constraints() const { return constraints_.has_value(); }
    const Constraints& constraints() const;
    void set_constraints(const Constraints& constraints); // pin once; mismatch is an error
    const Configuration& reference_config() const { return reference_; }
    void set_reference_config(const Configuration& config);

    bool has_pca() const { return pca_.has_value(); }
    const PcaModel& pca() const;
    void set_pca(const PcaModel& model);

    std::vector<std::string> list_clusters() const;
    std::optional<ConfDbEntry> get(const std::string& cluster_id) const;
    void put(const ConfDbEntry& entry);
    void append_record(const std::string& cluster_id, const GradeRecord& record);

    // Representative traces live beside the entries; the returned/expected
    // text format is the trace module's five-column format.
    void store_trace(const std::string& cluster_id, std::span<const IoRecord> records);
    std::vector<IoRecord> load_trace(const std::string& cluster_id) const;

    // Assembles the cluster model (shared embedding + per-entry centers).
    ClusterModel cluster_model() const;

    std::string next_cluster_id() const;

private:
    ConfDb() = default;
    void save_manifest();
    std::filesystem::path cluster_path(const std::string& cluster_id) const;

    std::filesystem::path root_;
    ParamSpace space_;
    std::optional<Constraints> constraints_;
    Configuration reference_;
    std::optional<PcaModel> pca_;
    bool writable_ = false;
    int lock_fd_ = -1;
};

} // namespace ssdtune
