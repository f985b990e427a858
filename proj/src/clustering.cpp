#include "ssdtune/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <stdexcept>

#include "ssdtune/error.hpp"
#include "ssdtune/rng.hpp"

namespace ssdtune {

PcaModel fit_pca(const Eigen::MatrixXd& points, int num_components) {
    const Eigen::Index n = points.rows();
    const Eigen::Index d = points.cols();
    if (n < 3)
        throw CodedError("cluster_error", "need at least 3 points to fit the embedding");
    if (num_components < 1 || num_components > d)
        throw std::invalid_argument("bad component count");

    PcaModel model;
    model.means = points.colwise().mean();
    Eigen::MatrixXd centered = points.rowwise() - model.means.transpose();

    model.scales.resize(d);
    Eigen::Index varying = 0;
    for (Eigen::Index c = 0; c < d; ++c) {
        double var = centered.col(c).squaredNorm() / static_cast<double>(n);
        double sd = std::sqrt(var);
        if (sd > 1e-15) {
            model.scales[c] = sd;
            varying++;
        } else {
            model.scales[c] = 1.0; // constant feature: leave it centered only
        }
    }
    if (varying < 2)
        throw CodedError("degenerate_data",
                         "degenerate data: fewer than 2 features vary across points");

    Eigen::MatrixXd z = centered.array().rowwise() / model.scales.transpose().array();
    Eigen::MatrixXd cov = z.transpose() * z / static_cast<double>(n);

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
    if (solver.info() != Eigen::Success)
        throw std::runtime_error("eigendecomposition failed");

    // Eigen returns eigenvalues in ascending order; take the top ones.
    model.components.resize(num_components, d);
    model.explained_variance.resize(num_components);
    for (int r = 0; r < num_components; ++r) {
        Eigen::Index src = d - 1 - r;
        Eigen::VectorXd v = solver.eigenvectors().col(src);
        // Deterministic sign: largest-magnitude coordinate is positive.
        Eigen::Index imax = 0;
        v.cwiseAbs().maxCoeff(&imax);
        if (v[imax] < 0)
            v = -v;
        model.components.row(r) = v.transpose();
        model.explained_variance[r] = std::max(0.0, solver.eigenvalues()[src]);
    }
    return model;
}

Eigen::VectorXd project(const PcaModel& model, const Eigen::VectorXd& point) {
    if (point.size() != model.means.size())
        throw std::invalid_argument("dimension mismatch in projection");
    Eigen::VectorXd z = (point - model.means).cwiseQuotient(model.scales);
    return model.components * z;
}

Eigen::MatrixXd project_all(const PcaModel& model, const Eigen::MatrixXd& points) {
    if (points.cols() != model.means.size())
        throw std::invalid_argument("dimension mismatch in projection");
    Eigen::MatrixXd z = (points.rowwise() - model.means.transpose()).array().rowwise() /
                        model.scales.transpose().array();
    return z * model.components.transpose();
}

namespace {

Eigen::Index count_distinct_rows(const Eigen::MatrixXd& points) {
    auto cmp = [](const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
        for (Eigen::Index i = 0; i < a.size(); ++i) {
            if (a[i] != b[i])
                return a[i] < b[i];
        }
        return false;
    };
    std::set<Eigen::VectorXd, decltype(cmp)> rows(cmp);
    for (Eigen::Index i = 0; i < points.rows(); ++i)
        rows.insert(points.row(i));
    return static_cast<Eigen::Index>(rows.size());
}

} // namespace

namespace {

KmeansResult lloyd_once(const Eigen::MatrixXd& points, int k, uint64_t seed,
                        std::vector<double>* objective_trace) {
    const Eigen::Index n = points.rows();
    std::mt19937_64 rng(seed ^ 0x6b6d65616e73ULL);

    // k-means++ seeding.
    Eigen::MatrixXd centers(k, points.cols());
    centers.row(0) = points.row(static_cast<Eigen::Index>(rand_index(rng, static_cast<uint64_t>(n))));
    Eigen::VectorXd d2 = (points.rowwise() - centers.row(0)).rowwise().squaredNorm();
    for (int c = 1; c < k; ++c) {
        double total = d2.sum();
        Eigen::Index pick = 0;
        if (total > 0) {
            double r = rand_u01(rng) * total;
            double acc = 0;
            for (Eigen::Index i = 0; i < n; ++i) {
                acc += d2[i];
                if (acc >= r) {
                    pick = i;
                    break;
                }
                pick = i;
            }
        } else {
            pick = static_cast<Eigen::Index>(rand_index(rng, static_cast<uint64_t>(n)));
        }
        centers.row(c) = points.row(pick);
        d2 = d2.cwiseMin((points.rowwise() - centers.row(c)).rowwise().squaredNorm());
    }

    KmeansResult result;
    result.labels.assign(static_cast<size_t>(n), 0);
    constexpr int kMaxIterations = 300;
    for (int iter = 0; iter < kMaxIterations; ++iter) {
        result.iterations = iter + 1;
        // Assignment pass (ties go to the lowest center index).
        double inertia = 0;
        for (Eigen::Index i = 0; i < n; ++i) {
            int best = 0;
            double best_d = (points.row(i) - centers.row(0)).squaredNorm();
            for (int c = 1; c < k; ++c) {
                double dist = (points.row(i) - centers.row(c)).squaredNorm();
                if (dist < best_d) {
                    best_d = dist;
                    best = c;
                }
            }
            result.labels[static_cast<size_t>(i)] = best;
            inertia += best_d;
        }
        result.inertia = inertia;
        if (objective_trace)
            objective_trace->push_back(inertia);

        // Update pass.
        Eigen::MatrixXd next = Eigen::MatrixXd::Zero(k, points.cols());
        std::vector<Eigen::Index> counts(static_cast<size_t>(k), 0);
        for (Eigen::Index i = 0; i < n; ++i) {
            next.row(result.labels[static_cast<size_t>(i)]) += points.row(i);
            counts[static_cast<size_t>(result.labels[static_cast<size_t>(i)])]++;
        }
        for (int c = 0; c < k; ++c) {
            if (counts[static_cast<size_t>(c)] > 0) {
                next.row(c) /= static_cast<double>(counts[static_cast<size_t>(c)]);
            } else {
                // Revive an empty cluster with the point farthest from its
                // current center (deterministic tie-break by index).
                Eigen::Index far = 0;
                double far_d = -1;
                for (Eigen::Index i = 0; i < n; ++i) {
                    double dist =
                        (points.row(i) - centers.row(result.labels[static_cast<size_t>(i)]))
                            .squaredNorm();
                    if (dist > far_d) {
                        far_d = dist;
                        far = i;
                    }
                }
                next.row(c) = points.row(far);
            }
        }
        double movement = (next - centers).rowwise().norm().maxCoeff();
        centers = next;
        if (movement < 1e-9)
            break;
    }

    result.centers = centers;
    return result;
}

} // namespace

KmeansResult kmeans(const Eigen::MatrixXd& points, int k, uint64_t seed,
                    std::vector<double>* objective_trace) {
    if (points.rows() == 0)
        throw std::invalid_argument("kmeans requires at least one point");
    if (k < 1)
        throw std::invalid_argument("k must be positive");
    if (static_cast<Eigen::Index>(k) > count_distinct_rows(points))
        throw CodedError("cluster_error", "k exceeds the number of distinct points");

    // Lloyd's only finds a local optimum, so restart from several seedings and
    // keep the lowest inertia (first trial wins ties, keeping runs repeatable).
    constexpr int kRestarts = 10;
    KmeansResult best;
    std::vector<double> best_trace;
    for (int trial = 0; trial < kRestarts; ++trial) {
        std::vector<double> trace;
        KmeansResult r = lloyd_once(points, k,
                                    seed + 0x9e3779b97f4a7c15ULL * static_cast<uint64_t>(trial),
                                    objective_trace ? &trace : nullptr);
        if (trial == 0 || r.inertia < best.inertia) {
            best = std::move(r);
            best_trace = std::move(trace);
        }
    }
    if (objective_trace)
        *objective_trace = std::move(best_trace);
    return best;
}

double mean_silhouette(const Eigen::MatrixXd& points, const std::vector<int>& labels, int k) {
    const Eigen::Index n = points.rows();
    if (k < 2 || n < 2)
        return 0;
    std::vector<Eigen::Index> counts(static_cast<size_t>(k), 0);
    for (int l : labels)
        counts[static_cast<size_t>(l)]++;
    double total = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
        std::vector<double> dist_sum(static_cast<size_t>(k), 0.0);
        for (Eigen::Index j = 0; j < n; ++j) {
            if (i == j)
                continue;
            dist_sum[static_cast<size_t>(labels[static_cast<size_t>(j)])] +=
                (points.row(i) - points.row(j)).norm();
        }
        int own = labels[static_cast<size_t>(i)];
        if (counts[static_cast<size_t>(own)] <= 1)
            continue; // silhouette of a singleton is 0
        double a = dist_sum[static_cast<size_t>(own)] /
                   static_cast<double>(counts[static_cast<size_t>(own)] - 1);
        double b = std::numeric_limits<double>::infinity();
        for (int c = 0; c < k; ++c) {
            if (c == own || counts[static_cast<size_t>(c)] == 0)
                continue;
            b = std::min(b, dist_sum[static_cast<size_t>(c)] /
                                static_cast<double>(counts[static_cast<size_t>(c)]));
        }
        if (std::isfinite(b) && std::max(a, b) > 0)
            total += (b - a) / std::max(a, b);
    }
    return total / static_cast<double>(n);
}

Eigen::MatrixXd feature_matrix(const std::vector<WindowFeatures>& windows) {
    Eigen::MatrixXd m(static_cast<Eigen::Index>(windows.size()), WindowFeatures::kCount);
    for (size_t i = 0; i < windows.size(); ++i) {
        auto arr = windows[i].as_array();
        for (size_t c = 0; c < arr.size(); ++c)
            m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = arr[c];
    }
    return m;
}

namespace {

// Identity-style stand-in embedding for single-cluster fits over (nearly)
// constant windows, where a principal-axis fit is undefined: pick the first
// and last feature as the two axes. Self-matching still works (every window
// of the fitted workload projects onto the centroid) and later workloads
// remain distinguishable through those coordinates.
PcaModel fallback_embedding(const Eigen::MatrixXd& points) {
    PcaModel model;
    const Eigen::Index d = points.cols();
    model.means = points.colwise().mean();
    model.scales.resize(d);
    Eigen::MatrixXd centered = points.rowwise() - model.means.transpose();
    for (Eigen::Index c = 0; c < d; ++c) {
        double sd = std::sqrt(centered.col(c).squaredNorm() / static_cast<double>(points.rows()));
        model.scales[c] = sd > 1e-15 ? sd : 1.0;
    }
    model.components = Eigen::MatrixXd::Zero(2, d);
    model.components(0, 0) = 1.0;
    model.components(1, d - 1) = 1.0;
    model.explained_variance = Eigen::VectorXd::Zero(2);
    return model;
}

} // namespace

ClusterModel fit_cluster_model(const std::vector<WindowFeatures>& windows, uint64_t seed,
                               const std::vector<std::string>& labels, int k_override) {
    if (!labels.empty() && labels.size() != windows.size())
        throw std::invalid_argument("label count must match window count");

    Eigen::MatrixXd features = feature_matrix(windows);
    ClusterModel model;
    try {
        model.pca = fit_pca(features, 2);
    } catch (const CodedError& e) {
        int k_intent = k_override > 0
                           ? k_override
                           : (!labels.empty() ? static_cast<int>(std::set<std::string>(
                                                                     labels.begin(), labels.end())
                                                                     .size())
                                              : 1);
        if (e.code() != "degenerate_data" || k_intent != 1)
            throw;
        model.pca = fallback_embedding(features);
    }
    Eigen::MatrixXd projected = project_all(model.pca, features);

    Eigen::Index distinct = count_distinct_rows(projected);
    int k;
    if (k_override > 0) {
        k = k_override;
    } else if (!labels.empty()) {
        k = static_cast<int>(std::set<std::string>(labels.begin(), labels.end()).size());
    } else if (distinct < 2) {
        k = 1;
    } else {
        // Pick k by best mean silhouette (ties favour fewer clusters).
        int best_k = 2;
        double best_score = -2;
        int k_max = static_cast<int>(std::min<Eigen::Index>(8, distinct));
        for (int cand = 2; cand <= k_max; ++cand) {
            KmeansResult r = kmeans(projected, cand, seed);
            double score = mean_silhouette(projected, r.labels, cand);
            if (score > best_score + 1e-12) {
                best_score = score;
                best_k = cand;
            }
        }
        k = best_k;
    }
    k = static_cast<int>(std::min<Eigen::Index>(k, distinct));

    KmeansResult km = kmeans(projected, k, seed);
    model.clusters.resize(static_cast<size_t>(k));
    std::vector<double> dist_sum(static_cast<size_t>(k), 0.0);
    std::vector<int> counts(static_cast<size_t>(k), 0);
    for (Eigen::Index i = 0; i < projected.rows(); ++i) {
        int l = km.labels[static_cast<size_t>(i)];
        dist_sum[static_cast<size_t>(l)] +=
            (projected.row(i) - km.centers.row(l)).norm();
        counts[static_cast<size_t>(l)]++;
    }
    for (int c = 0; c < k; ++c) {
        ClusterInfo& info = model.clusters[static_cast<size_t>(c)];
        info.id = "c" + std::to_string(c);
        info.center = km.centers.row(c).transpose();
        info.member_count = counts[static_cast<size_t>(c)];
        // Floor keeps the match threshold usable for tight clusters.
        info.mean_intra_distance =
            std::max(1e-9, dist_sum[static_cast<size_t>(c)] / std::max(1, counts[static_cast<size_t>(c)]));
    }
    return model;
}

Assignment assign_workload(const ClusterModel& model, const std::vector<WindowFeatures>& windows,
                           double threshold_factor) {
    if (windows.empty())
        throw std::invalid_argument("assignment requires at least one window");
    if (threshold_factor <= 0)
        throw std::invalid_argument("threshold factor must be positive");

    Eigen::MatrixXd projected = project_all(model.pca, feature_matrix(windows));
    Assignment out;
    out.centroid = projected.colwise().mean().transpose();
    if (model.clusters.empty()) {
        out.matched = false;
        out.distance = std::numeric_limits<double>::infinity();
        return out;
    }
    size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (size_t c = 0; c < model.clusters.size(); ++c) {
        double dist = (out.centroid - model.clusters[c].center).norm();
        if (dist < best_d) {
            best_d = dist;
            best = c;
        }
    }
    out.cluster_id = model.clusters[best].id;
    out.distance = best_d;
    out.matched = best_d <= threshold_factor * model.clusters[best].mean_intra_distance;
    return out;
}

double holdout_consistency(const ClusterModel& model, const std::vector<WindowFeatures>& windows,
                           const std::vector<int>& expected_labels) {
    if (windows.empty() || windows.size() != expected_labels.size())
        throw std::invalid_argument("windows and labels must align");
    Eigen::MatrixXd projected = project_all(model.pca, feature_matrix(windows));
    size_t agree = 0;
    for (Eigen::Index i = 0; i < projected.rows(); ++i) {
        size_t best = 0;
        double best_d = std::numeric_limits<double>::infinity();
        for (size_t c = 0; c < model.clusters.size(); ++c) {
            double dist = (projected.row(i).transpose() - model.clusters[c].center).norm();
            if (dist < best_d) {
                best_d = dist;
                best = c;
            }
        }
        if (static_cast<int>(best) == expected_labels[static_cast<size_t>(i)])
            agree++;
    }
    return static_cast<double>(agree) / static_cast<double>(windows.size());
}

namespace {

nlohmann::json vector_to_json(const Eigen::VectorXd& v) {
    nlohmann::json arr = nlohmann::json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i)
        arr.push_back(v[i]);
    return arr;
}

Eigen::VectorXd vector_from_json(const nlohmann::json& j) {
    Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
    for (Eigen::Index i = 0; i < v.size(); ++i)
        v[i] = j.at(static_cast<size_t>(i)).get<double>();
    return v;
}

} // namespace

nlohmann::json cluster_model_to_json(const ClusterModel& model) {
    nlohmann::json j;
    j["pca"]["means"] = vector_to_json(model.pca.means);
    j["pca"]["scales"] = vector_to_json(model.pca.scales);
    nlohmann::json comps = nlohmann::json::array();
    for (Eigen::Index r = 0; r < model.pca.components.rows(); ++r)
        comps.push_back(vector_to_json(model.pca.components.row(r).transpose()));
    j["pca"]["components"] = comps;
    j["pca"]["explained_variance"] = vector_to_json(model.pca.explained_variance);
    nlohmann::json clusters = nlohmann::json::array();
    for (const auto& c : model.clusters) {
        clusters.push_back({{"id", c.id},
                            {"center", {c.center.x(), c.center.y()}},
                            {"mean_intra_distance", c.mean_intra_distance},
                            {"member_count", c.member_count}});
    }
    j["clusters"] = clusters;
    return j;
}

ClusterModel cluster_model_from_json(const nlohmann::json& j) {
    ClusterModel model;
    const auto& p = j.at("pca");
    model.pca.means = vector_from_json(p.at("means"));
    model.pca.scales = vector_from_json(p.at("scales"));
    const auto& comps = p.at("components");
    model.pca.components.resize(static_cast<Eigen::Index>(comps.size()), model.pca.means.size());
    for (Eigen::Index r = 0; r < model.pca.components.rows(); ++r)
        model.pca.components.row(r) =
            vector_from_json(comps.at(static_cast<size_t>(r))).transpose();
    model.pca.explained_variance = vector_from_json(p.at("explained_variance"));
    for (const auto& cj : j.at("clusters")) {
        ClusterInfo c;
        c.id = cj.at("id").get<std::string>();
        c.center = Eigen::Vector2d(cj.at("center").at(0).get<double>(),
                                   cj.at("center").at(1).get<double>());
        c.mean_intra_distance = cj.at("mean_intra_distance").get<double>();
        c.member_count = cj.at("member_count").get<int>();
        model.clusters.push_back(std::move(c));
    }
    return model;
}

} // namespace ssdtune
