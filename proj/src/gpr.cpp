#include "ssdtune/gpr.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "ssdtune/error.hpp"
#include "ssdtune/rng.hpp"

namespace ssdtune {

namespace {

// Small enough that the posterior std at a noiseless training point stays
// well under 1e-6 even after the ~1e-15 cancellation error in the variance
// subtraction; trials whose kernel matrix still fails to factor are rejected
// via the -inf marginal likelihood.
constexpr double kJitter = 1e-13;

double kernel_value(double r2, const GprHyperparams& p) {
    double rbf = std::exp(-r2 / (2.0 * p.rbf_length * p.rbf_length));
    double rq = std::pow(1.0 + r2 / (2.0 * p.rq_alpha * p.rq_length * p.rq_length), -p.rq_alpha);
    return rbf + rq;
}

Eigen::MatrixXd kernel_matrix(const Eigen::MatrixXd& X, const GprHyperparams& p) {
    const Eigen::Index n = X.rows();
    Eigen::MatrixXd K(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        K(i, i) = kernel_value(0.0, p) + p.noise * p.noise + kJitter;
        for (Eigen::Index j = i + 1; j < n; ++j) {
            double r2 = (X.row(i) - X.row(j)).squaredNorm();
            K(i, j) = K(j, i) = kernel_value(r2, p);
        }
    }
    return K;
}

// Log marginal likelihood with the constant mean profiled out in closed form.
// Returns -inf when the kernel matrix is not positive definite.
double log_marginal(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const GprHyperparams& p,
                    double* mean_out = nullptr) {
    const Eigen::Index n = X.rows();
    Eigen::LLT<Eigen::MatrixXd> llt(kernel_matrix(X, p));
    if (llt.info() != Eigen::Success)
        return -std::numeric_limits<double>::infinity();
    Eigen::VectorXd ones = Eigen::VectorXd::Ones(n);
    Eigen::VectorXd Kinv_y = llt.solve(y);
    Eigen::VectorXd Kinv_1 = llt.solve(ones);
    double denom = ones.dot(Kinv_1);
    double mean = denom > 0 ? ones.dot(Kinv_y) / denom : 0.0;
    if (mean_out)
        *mean_out = mean;
    Eigen::VectorXd resid = y - mean * ones;
    Eigen::VectorXd alpha = llt.solve(resid);
    double log_det = 0;
    for (Eigen::Index i = 0; i < n; ++i)
        log_det += std::log(llt.matrixL()(i, i));
    return -0.5 * resid.dot(alpha) - log_det -
           0.5 * static_cast<double>(n) * std::log(2.0 * M_PI);
}

struct Bounds {
    double lo, hi;
};

// Search space in natural-log coordinates.
constexpr Bounds kBounds[4] = {
    {-4.6, 6.9},  // rbf_length in ~[0.01, 1000]
    {-4.6, 6.9},  // rq_length
    {-4.6, 4.6},  // rq_alpha in ~[0.01, 100]
    {-13.8, 2.3}, // noise in ~[1e-6, 10]
};

GprHyperparams decode(const double theta[4], const GprOptions& options) {
    GprHyperparams p;
    p.rbf_length = std::exp(theta[0]);
    p.rq_length = std::exp(theta[1]);
    p.rq_alpha = std::exp(theta[2]);
    p.noise = options.fixed_noise ? *options.fixed_noise : std::exp(theta[3]);
    return p;
}

} // namespace

GprModel GprModel::fit(const Eigen::MatrixXd& inputs, const Eigen::VectorXd& targets,
                       const GprOptions& options) {
    if (inputs.rows() != targets.size())
        throw std::invalid_argument("input/target row mismatch");
    if (!inputs.allFinite() || !targets.allFinite())
        throw std::invalid_argument("non-finite training data");

    // Collapse exact duplicate rows; conflicting targets are unanswerable.
    std::vector<Eigen::Index> keep;
    for (Eigen::Index i = 0; i < inputs.rows(); ++i) {
        bool duplicate = false;
        for (Eigen::Index j : keep) {
            if ((inputs.row(i) - inputs.row(j)).norm() == 0.0) {
                if (std::abs(targets[i] - targets[j]) > 1e-12)
                    throw CodedError("gpr_error",
                                     "duplicate training inputs with conflicting targets");
                duplicate = true;
                break;
            }
        }
        if (!duplicate)
            keep.push_back(i);
    }
    if (keep.size() < 2)
        throw CodedError("gpr_error", "need at least 2 distinct training samples");

    GprModel model;
    model.inputs_.resize(static_cast<Eigen::Index>(keep.size()), inputs.cols());
    model.targets_.resize(static_cast<Eigen::Index>(keep.size()));
    for (size_t i = 0; i < keep.size(); ++i) {
        model.inputs_.row(static_cast<Eigen::Index>(i)) = inputs.row(keep[i]);
        model.targets_[static_cast<Eigen::Index>(i)] = targets[keep[i]];
    }

    std::mt19937_64 rng(options.seed ^ 0x677072ULL);
    const int dims = options.fixed_noise ? 3 : 4;

    double best_theta[4] = {0, 0, 0, std::log(1e-3)};
    double best_lml = -std::numeric_limits<double>::infinity();

    int restarts = std::max(1, options.restarts);
    for (int restart = 0; restart < restarts; ++restart) {
        double theta[4];
        if (restart == 0) {
            // Canonical start: unit length scales, small noise.
            theta[0] = theta[1] = theta[2] = 0.0;
            theta[3] = std::log(1e-3);
        } else {
            for (int dim = 0; dim < 4; ++dim)
                theta[dim] = rand_range(rng, kBounds[dim].lo, kBounds[dim].hi);
        }
        double value = log_marginal(model.inputs_, model.targets_,
                                    decode(theta, options));

        // Coordinate pattern search with step halving, in log space.
        double step = 1.0;
        for (int iter = 0; iter < options.local_iterations && step > 1e-3; ++iter) {
            bool improved = false;
            for (int dim = 0; dim < dims; ++dim) {
                for (double sign : {1.0, -1.0}) {
                    double trial[4] = {theta[0], theta[1], theta[2], theta[3]};
                    trial[dim] = std::clamp(theta[dim] + sign * step, kBounds[dim].lo,
                                            kBounds[dim].hi);
                    double v = log_marginal(model.inputs_, model.targets_,
                                            decode(trial, options));
                    if (v > value) {
                        value = v;
                        theta[dim] = trial[dim];
                        improved = true;
                        break;
                    }
                }
            }
            if (!improved)
                step *= 0.5;
        }

        if (value > best_lml) {
            best_lml = value;
            for (int dim = 0; dim < 4; ++dim)
                best_theta[dim] = theta[dim];
        }
    }

    if (!std::isfinite(best_lml))
        throw CodedError("gpr_error", "kernel matrix singular for every hyperparameter trial");

    model.params_ = decode(best_theta, options);
    model.lml_ = log_marginal(model.inputs_, model.targets_, model.params_, &model.mean_);
    model.factor_ = Eigen::LLT<Eigen::MatrixXd>(kernel_matrix(model.inputs_, model.params_));
    if (model.factor_.info() != Eigen::Success)
        throw CodedError("gpr_error", "kernel matrix singular after jitter");
    model.weights_ = model.factor_.solve(
        (model.targets_.array() - model.mean_).matrix());
    return model;
}

GprModel::Prediction GprModel::predict(const Eigen::VectorXd& query) const {
    if (inputs_.rows() == 0)
        throw std::logic_error("predict on an unfitted model");
    if (query.size() != inputs_.cols())
        throw std::invalid_argument("query dimension mismatch");

    const Eigen::Index n = inputs_.rows();
    Eigen::VectorXd k_star(n);
    for (Eigen::Index i = 0; i < n; ++i)
        k_star[i] = kernel_value((inputs_.row(i).transpose() - query).squaredNorm(), params_);

    Prediction out;
    out.mean = mean_ + k_star.dot(weights_);
    // Posterior variance of the latent function (no observation noise).
    double k_self = kernel_value(0.0, params_);
    double var = k_self - k_star.dot(factor_.solve(k_star));
    out.std = std::sqrt(std::max(0.0, var));
    return out;
}

} // namespace ssdtune
