#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "ssdtune/paramspace.hpp"
#include "ssdtune/simssd.hpp"
#include "ssdtune/trace.hpp"

namespace ssdtune {

struct PruneReport {
    std::vector<std::string> insensitive_coarse;
    std::map<std::string, double> coefficients; // |LASSO coefficient| score per tested name
    std::vector<std::string> dropped_fine;
    std::vector<std::string> surviving;
    std::vector<std::string> warnings;
};

nlohmann::json prune_report_to_json(const PruneReport& report);
PruneReport prune_report_from_json(const nlohmann::json& j);

// Sweeps each numerical parameter across baseline multiples (snapped to the
// catalog); a parameter is insensitive when neither mean latency nor
// throughput moves by epsilon relative. Parameters with no legal alternative
// setting are insensitive by vacuity and emit a warning.
std::vector<std::string> coarse_prune(const ParamSpace& space, const Configuration& baseline,
                                      const Constraints& constraints,
                                      std::span<const IoRecord> workload,
                                      const std::vector<double>& multipliers = {1, 2, 4, 8, 16},
                                      double epsilon = 0.01,
                                      std::vector<std::string>* warnings = nullptr);

// Coordinate-descent LASSO for (1/2n)*||y - X b||^2 + lambda*||b||_1.
// `objective_trace`, when given, records the objective after each sweep.
Eigen::VectorXd lasso_fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double lambda,
                          std::vector<double>* objective_trace = nullptr);

// Latin-hypercube-style samples: capacity-coupled parameters stay at the
// baseline, the rest stratify independently. Parameters listed in `frozen`
// also stay at the baseline.
std::vector<Configuration> sample_configurations(const ParamSpace& space,
                                                 const Configuration& baseline, size_t count,
                                                 uint64_t seed,
                                                 const std::vector<std::string>& frozen = {});

struct FineResult {
    std::map<std::string, double> coefficients; // scores for parameters that varied
    std::vector<std::string> dropped;
    std::vector<std::string> surviving; // sensitive, plus parameters not varied by the samples
};

// Scores every parameter by the largest absolute LASSO coefficient over its
// vectorized columns and both (log-latency, log-throughput) targets; varied
// parameters scoring below `threshold` are dropped.
FineResult fine_prune(const ParamSpace& space,
                      const std::vector<std::pair<Configuration, SimResult>>& samples,
                      double lambda = 0.01, double threshold = 0.01);

struct PruneSettings {
    std::vector<double> multipliers = {1, 2, 4, 8, 16};
    double epsilon = 0.01;
    size_t sample_count = 24;
    double lambda = 0.01;
    double threshold = 0.01;
    uint64_t seed = 0;
};

// Full pipeline: coarse sweep, then LASSO screening of the survivors on
// simulated samples. The three report lists always partition the catalog.
PruneReport run_pruning(const ParamSpace& space, const Configuration& baseline,
                        const Constraints& constraints, std::span<const IoRecord> workload,
                        const PruneSettings& settings = {});

} // namespace ssdtune
