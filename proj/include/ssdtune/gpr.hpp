#pragma once

#include <cstdint>
#include <optional>

#include <Eigen/Dense>

namespace ssdtune {

// Kernel: RBF(rbf_length) + RationalQuadratic(rq_length, rq_alpha) + white
// noise, both signal components at unit variance, plus a trainable constant
// mean.
struct GprHyperparams {
    double rbf_length = 1.0;
    double rq_length = 1.0;
    double rq_alpha = 1.0;
    double noise = 1e-3;
};

struct GprOptions {
    int restarts = 8;
    uint64_t seed = 0;
    int local_iterations = 60;
    std::optional<double> fixed_noise; // pin the white-noise level instead of fitting it
};

class GprModel {
public:
    struct Prediction {
        double mean = 0;
        double std = 0;
    };

    // Fits hyperparameters by maximizing log marginal likelihood with a
    // seeded multi-start pattern search; deterministic for a fixed seed.
    // Duplicate rows with equal targets are collapsed; conflicting targets
    // are an error.
    static GprModel fit(const Eigen::MatrixXd& inputs, const Eigen::VectorXd& targets,
                        const GprOptions& options = {});

    Prediction predict(const Eigen::VectorXd& query) const;

    const GprHyperparams& hyperparams() const { return params_; }
    double log_marginal_likelihood() const { return lml_; }
    double mean_constant() const { return mean_; }
    Eigen::Index sample_count() const { return inputs_.rows(); }

private:
    Eigen::MatrixXd inputs_;
    Eigen::VectorXd targets_;
    GprHyperparams params_;
    double mean_ = 0;
    double lml_ = 0;
    Eigen::VectorXd weights_; // K^-1 (y - mean)
    Eigen::LLT<Eigen::MatrixXd> factor_;
};

} // namespace ssdtune
