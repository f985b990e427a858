#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ssdtune/gpr.hpp"
#include "ssdtune/paramspace.hpp"
#include "ssdtune/rng.hpp"
#include "ssdtune/trace.hpp"

namespace ssdtune {

class ConfDb;

struct PerfPoint {
    double latency_us = 0;
    double throughput_mbps = 0;
    bool operator==(const PerfPoint&) const = default;
};

// (1-alpha)*ln(L/L_ref) - alpha*ln(T/T_ref); lower is better.
double goal(const PerfPoint& measured, const PerfPoint& reference, double alpha);

// (1-beta)*target + beta*mean(non-targets); the second term is 0 when there
// is a single cluster.
double grade(double target_goal, const std::vector<double>& nontarget_goals, double beta,
             int num_clusters);

struct TunerSettings {
    double alpha = 0.9;
    double beta = 0.9;
    int max_search_iterations = 20; // inner descent bound per step
    double exploit_distance_max = 6;
    int top_set_size = 3;
    double convergence_epsilon = 0.01;
    int convergence_window = 3;
    uint64_t rng_seed = 0;
    int max_outer_iterations = 100;
    int gpr_restarts = 8;
    int gpr_local_iterations = 40;
};

struct GradeRecord {
    Configuration config;
    std::map<std::string, PerfPoint> per_workload;   // cluster id -> measurement
    std::map<std::string, double> goal_per_workload; // cluster id -> goal
    double grade = 0;
    bool validated = false;
};

nlohmann::json grade_record_to_json(const ParamSpace& space, const GradeRecord& record);
GradeRecord grade_record_from_json(const ParamSpace& space, const nlohmann::json& j);

// One Fig.-6-style optimization loop over the discrete configuration space:
// random root among the top validated grades, GPR-guided neighborhood
// descent bounded by the exploit distance, then true evaluation of the
// winner.
class SearchLoop {
public:
    using Evaluator = std::function<GradeRecord(const Configuration&)>;

    SearchLoop(const ParamSpace& space, const Constraints& constraints, Evaluator evaluator,
               TunerSettings settings);

    void seed(const GradeRecord& record); // record must be validated

    enum class StepStatus { Advanced, Stalled };
    StepStatus step();

    struct RunResult {
        bool converged = false;
        bool stalled = false;
        int iterations = 0;
    };
    RunResult run();

    const std::vector<GradeRecord>& history() const { return history_; }
    const GradeRecord& best() const;

private:
    void refit();
    double predict_or_best_guess(const Eigen::VectorXd& v) const;
    double top_mean() const;

    const ParamSpace& space_;
    Constraints constraints_;
    Evaluator evaluator_;
    TunerSettings settings_;
    std::mt19937_64 rng_;
    std::vector<GradeRecord> history_;
    std::vector<Eigen::VectorXd> vectors_;
    std::set<std::vector<int>> seen_;
    std::optional<GprModel> model_;
};

struct TuneResult {
    GradeRecord best;
    std::vector<GradeRecord> history;
    bool converged = false;
    bool stalled = false;
    std::string cluster_id; // cluster the workload was assigned to
    bool created_cluster = false;
};

struct ClusterChoice {
    std::string cluster_id;
    bool created = false;
    double distance = 0; // centroid-to-center distance when an existing cluster matched
};

// Matches the workload against the stored cluster model; creates a new
// cluster (storing the workload as its representative trace) when nothing
// matches or when the store is empty.
ClusterChoice assign_or_create_cluster(ConfDb& db, std::span<const IoRecord> workload,
                                       const std::vector<WindowFeatures>& features,
                                       uint64_t seed);

// Full pipeline: cluster the workload against the store (creating a cluster
// when nothing matches), seed the surrogate from stored records plus the
// reference configuration, search until convergence, and persist every
// validated record.
TuneResult tune(std::span<const IoRecord> target_workload, const TunerSettings& settings,
                ConfDb& db);

} // namespace ssdtune
