#include "ssdtune/pruning.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <stdexcept>

#include "ssdtune/error.hpp"
#include "ssdtune/rng.hpp"

namespace ssdtune {

std::vector<std::string> coarse_prune(const ParamSpace& space, const Configuration& baseline,
                                      const Constraints& constraints,
                                      std::span<const IoRecord> workload,
                                      const std::vector<double>& multipliers, double epsilon,
                                      std::vector<std::string>* warnings) {
    check_configuration(space, baseline);
    if (!satisfies(space, baseline, constraints))
        throw CodedError("constraint_violation", "baseline violates the capacity constraint");
    if (multipliers.empty())
        throw std::invalid_argument("need at least one multiplier");

    SimResult base = simulate(space, baseline, constraints, workload);

    std::vector<std::string> insensitive;
    for (size_t p = 0; p < space.size(); ++p) {
        const ParamDef& def = space.param(p);
        if (!def.is_numeric())
            continue;

        double base_value = numeric_value(space, baseline, def.name);
        std::set<int> settings;
        for (double m : multipliers)
            settings.insert(nearest_index(def, base_value * m));

        std::vector<double> latencies, throughputs;
        for (int idx : settings) {
            Configuration cand = baseline;
            cand.indices[p] = idx;
            if (!satisfies(space, cand, constraints))
                continue;
            if (idx == baseline.indices[p]) {
                latencies.push_back(base.mean_latency_us);
                throughputs.push_back(base.throughput_mbps);
                continue;
            }
            SimResult r = simulate(space, cand, constraints, workload);
            latencies.push_back(r.mean_latency_us);
            throughputs.push_back(r.throughput_mbps);
        }

        if (latencies.size() <= 1) {
            insensitive.push_back(def.name);
            if (warnings)
                warnings->push_back(def.name +
                                    ": no legal alternative setting; insensitive by vacuity");
            continue;
        }

        auto rel_change = [](const std::vector<double>& v) {
            auto [lo, hi] = std::minmax_element(v.begin(), v.end());
            return *hi > 0 ? (*hi - *lo) / *hi : 0.0;
        };
        if (rel_change(latencies) < epsilon && rel_change(throughputs) < epsilon)
            insensitive.push_back(def.name);
    }
    return insensitive;
}

Eigen::VectorXd lasso_fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double lambda,
                          std::vector<double>* objective_trace) {
    if (X.rows() != y.size())
        throw std::invalid_argument("row mismatch between X and y");
    if (X.rows() < 2)
        throw std::invalid_argument("need at least 2 rows");
    if (lambda < 0)
        throw std::invalid_argument("lambda must be non-negative");
    if (!X.allFinite() || !y.allFinite())
        throw std::invalid_argument("non-finite regression inputs");

    const Eigen::Index n = X.rows();
    const Eigen::Index p = X.cols();
    const double dn = static_cast<double>(n);

    Eigen::VectorXd col_sq(p);
    for (Eigen::Index j = 0; j < p; ++j)
        col_sq[j] = X.col(j).squaredNorm() / dn;

    Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
    Eigen::VectorXd residual = y;

    auto soft = [](double v, double t) {
        if (v > t)
            return v - t;
        if (v < -t)
            return v + t;
        return 0.0;
    };

    constexpr int kMaxSweeps = 10000;
    for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
        double max_delta = 0;
        for (Eigen::Index j = 0; j < p; ++j) {
            if (col_sq[j] == 0)
                continue; // constant column: coefficient stays 0
            double rho = X.col(j).dot(residual) / dn + beta[j] * col_sq[j];
            double next = soft(rho, lambda) / col_sq[j];
            double delta = next - beta[j];
            if (delta != 0) {
                residual -= delta * X.col(j);
                beta[j] = next;
                max_delta = std::max(max_delta, std::abs(delta));
            }
        }
        if (objective_trace)
            objective_trace->push_back(residual.squaredNorm() / (2.0 * dn) +
                                       lambda * beta.lpNorm<1>());
        if (max_delta < 1e-8)
            break;
    }
    return beta;
}

std::vector<Configuration> sample_configurations(const ParamSpace& space,
                                                 const Configuration& baseline, size_t count,
                                                 uint64_t seed,
                                                 const std::vector<std::string>& frozen) {
    check_configuration(space, baseline);
    if (count == 0)
        return {};

    std::set<std::string> fixed(frozen.begin(), frozen.end());
    std::mt19937_64 rng(seed ^ 0x1a5a1a5aULL);

    std::vector<Configuration> samples(count, baseline);
    for (size_t p = 0; p < space.size(); ++p) {
        const ParamDef& def = space.param(p);
        if (def.capacity_coupled || fixed.count(def.name))
            continue;
        int cardinality = def.cardinality();
        if (cardinality < 2)
            continue;
        // One stratum per sample, shuffled, jittered inside the stratum.
        std::vector<size_t> strata(count);
        std::iota(strata.begin(), strata.end(), 0);
        for (size_t i = count - 1; i > 0; --i)
            std::swap(strata[i], strata[rand_index(rng, i + 1)]);
        for (size_t i = 0; i < count; ++i) {
            double u = (static_cast<double>(strata[i]) + rand_u01(rng)) /
                       static_cast<double>(count);
            int idx = std::min(cardinality - 1, static_cast<int>(u * cardinality));
            samples[i].indices[p] = idx;
        }
    }
    return samples;
}

FineResult fine_prune(const ParamSpace& space,
                      const std::vector<std::pair<Configuration, SimResult>>& samples,
                      double lambda, double threshold) {
    if (samples.size() < 20)
        throw CodedError("prune_error", "need at least 20 samples for the regression screen");

    const Eigen::Index n = static_cast<Eigen::Index>(samples.size());
    Eigen::MatrixXd X(n, static_cast<Eigen::Index>(space.vector_size()));
    Eigen::VectorXd log_latency(n), log_throughput(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& [config, result] = samples[static_cast<size_t>(i)];
        X.row(i) = vectorize(space, config).transpose();
        if (result.mean_latency_us <= 0 || result.throughput_mbps <= 0)
            throw std::invalid_argument("measurements must be strictly positive");
        log_latency[i] = std::log(result.mean_latency_us);
        log_throughput[i] = std::log(result.throughput_mbps);
    }

    auto standardize = [](Eigen::MatrixXd& m) {
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
            double mean = m.col(c).mean();
            m.col(c).array() -= mean;
            double sd = std::sqrt(m.col(c).squaredNorm() / static_cast<double>(m.rows()));
            if (sd > 1e-15)
                m.col(c) /= sd;
            else
                m.col(c).setZero();
        }
    };
    standardize(X);
    Eigen::MatrixXd targets(n, 2);
    targets.col(0) = log_latency;
    targets.col(1) = log_throughput;
    standardize(targets);

    Eigen::VectorXd coef_latency = lasso_fit(X, targets.col(0), lambda);
    Eigen::VectorXd coef_throughput = lasso_fit(X, targets.col(1), lambda);

    FineResult out;
    for (size_t p = 0; p < space.size(); ++p) {
        const ParamDef& def = space.param(p);
        bool varied = false;
        for (const auto& [config, result] : samples) {
            if (config.indices[p] != samples.front().first.indices[p]) {
                varied = true;
                break;
            }
        }
        if (!varied) {
            out.surviving.push_back(def.name); // untested here; keep it
            continue;
        }
        size_t off = space.vector_offset(p);
        double score = 0;
        for (size_t c = 0; c < def.vector_width(); ++c) {
            Eigen::Index col = static_cast<Eigen::Index>(off + c);
            score = std::max({score, std::abs(coef_latency[col]), std::abs(coef_throughput[col])});
        }
        out.coefficients[def.name] = score;
        if (score < threshold)
            out.dropped.push_back(def.name);
        else
            out.surviving.push_back(def.name);
    }
    return out;
}

PruneReport run_pruning(const ParamSpace& space, const Configuration& baseline,
                        const Constraints& constraints, std::span<const IoRecord> workload,
                        const PruneSettings& settings) {
    PruneReport report;
    report.insensitive_coarse = coarse_prune(space, baseline, constraints, workload,
                                             settings.multipliers, settings.epsilon,
                                             &report.warnings);

    // The regression screen varies only parameters that passed the coarse
    // sweep; coarse-insensitive ones stay frozen at the baseline.
    std::vector<Configuration> configs =
        sample_configurations(space, baseline, settings.sample_count, settings.seed,
                              report.insensitive_coarse);
    std::vector<std::pair<Configuration, SimResult>> samples;
    samples.reserve(configs.size());
    for (const auto& c : configs)
        samples.emplace_back(c, simulate(space, c, constraints, workload));

    FineResult fine = fine_prune(space, samples, settings.lambda, settings.threshold);
    report.coefficients = fine.coefficients;
    report.dropped_fine = fine.dropped;

    std::set<std::string> coarse_set(report.insensitive_coarse.begin(),
                                     report.insensitive_coarse.end());
    for (const auto& name : fine.surviving) {
        if (!coarse_set.count(name))
            report.surviving.push_back(name);
    }
    for (const auto& name : fine.dropped) {
        if (coarse_set.count(name))
            throw std::logic_error("pruning partition violated for " + name);
    }
    return report;
}

nlohmann::json prune_report_to_json(const PruneReport& report) {
    nlohmann::json j;
    j["insensitive_coarse"] = report.insensitive_coarse;
    j["coefficients"] = report.coefficients;
    j["dropped_fine"] = report.dropped_fine;
    j["surviving"] = report.surviving;
    j["warnings"] = report.warnings;
    return j;
}

PruneReport prune_report_from_json(const nlohmann::json& j) {
    PruneReport report;
    report.insensitive_coarse = j.at("insensitive_coarse").get<std::vector<std::string>>();
    report.coefficients = j.at("coefficients").get<std::map<std::string, double>>();
    report.dropped_fine = j.at("dropped_fine").get<std::vector<std::string>>();
    report.surviving = j.at("surviving").get<std::vector<std::string>>();
    if (j.contains("warnings"))
        report.warnings = j.at("warnings").get<std::vector<std::string>>();
    return report;
}

} // namespace ssdtune
