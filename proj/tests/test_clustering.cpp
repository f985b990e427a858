#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <map>
#include <set>

#include "ssdtune/clustering.hpp"

#include "helpers.hpp"

using namespace ssdtune;
using namespace testutil;

namespace {

double gauss(std::mt19937_64& rng) {
    double u1 = 1.0 - rand_u01(rng);
    double u2 = rand_u01(rng);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

// Nearest-center index per window under the fitted embedding.
std::vector<int> nearest_centers(const ClusterModel& model,
                                 const std::vector<WindowFeatures>& windows) {
    Eigen::MatrixXd projected = project_all(model.pca, feature_matrix(windows));
    std::vector<int> out;
    for (Eigen::Index i = 0; i < projected.rows(); ++i) {
        int best = 0;
        double best_d = std::numeric_limits<double>::infinity();
        for (size_t c = 0; c < model.clusters.size(); ++c) {
            double d = (projected.row(i).transpose() - model.clusters[c].center).norm();
            if (d < best_d) {
                best_d = d;
                best = int(c);
            }
        }
        out.push_back(best);
    }
    return out;
}

std::vector<WindowFeatures> profile_windows(const TraceProfile& profile, size_t count,
                                            uint64_t seed) {
    auto trace = generate_synthetic_trace(profile, count * kDefaultWindowSize, seed);
    std::vector<WindowFeatures> out;
    for (const auto& w : make_windows(trace))
        out.push_back(extract_features(w));
    return out;
}

} // namespace

TEST_CASE("pca: a 2:1 line recovers direction (1,2)/sqrt(5) after de-standardizing") {
    Eigen::MatrixXd pts(11, 2);
    for (int i = 0; i < 10; ++i) {
        double x = i + 1;
        pts(i, 0) = x;
        pts(i, 1) = 2 * x;
    }
    pts(10, 0) = 7e-10; // non-collinear nudge of norm ~1e-9
    pts(10, 1) = -7e-10;

    auto model = fit_pca(pts, 2);
    // The fitted component lives in standardized space; undo the scaling to
    // compare against the raw-space line direction.
    Eigen::Vector2d raw_dir =
        model.scales.cwiseProduct(model.components.row(0).transpose()).normalized();
    Eigen::Vector2d expect(1.0 / std::sqrt(5.0), 2.0 / std::sqrt(5.0));
    double align = std::abs(raw_dir.dot(expect)); // sign-free comparison
    CHECK(align == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(model.explained_variance[0] >= model.explained_variance[1]);

    // Line points project with (nearly) zero second coordinate.
    for (int i = 0; i < 10; ++i) {
        Eigen::VectorXd z = project(model, pts.row(i).transpose());
        CHECK(std::abs(z[1]) < 1e-6);
    }
}

TEST_CASE("pca: the mean point projects to the origin") {
    Eigen::MatrixXd pts(5, 3);
    pts << 1, 2, 3, 4, 6, 8, 2, 1, 0, 7, 3, 5, 0, 0, 1;
    auto model = fit_pca(pts, 2);
    Eigen::VectorXd mean = pts.colwise().mean();
    Eigen::VectorXd z = project(model, mean);
    CHECK(std::abs(z[0]) < 1e-12);
    CHECK(std::abs(z[1]) < 1e-12);
}

TEST_CASE("pca: components are orthonormal and projection is affine") {
    std::mt19937_64 rng(77);
    Eigen::MatrixXd pts(50, 6);
    for (Eigen::Index i = 0; i < pts.rows(); ++i)
        for (Eigen::Index j = 0; j < pts.cols(); ++j)
            pts(i, j) = gauss(rng) * (double(j) + 1.0);
    auto model = fit_pca(pts, 2);

    Eigen::Matrix2d gram = model.components * model.components.transpose();
    CHECK((gram - Eigen::Matrix2d::Identity()).norm() < 1e-9);

    Eigen::VectorXd a = pts.row(0), b = pts.row(1), zero = Eigen::VectorXd::Zero(6);
    Eigen::VectorXd lhs = project(model, a + b);
    Eigen::VectorXd rhs = project(model, a) + project(model, b) - project(model, zero);
    CHECK((lhs - rhs).norm() < 1e-9);

    // Top-2 variance never exceeds the total standardized variance (= 6).
    CHECK(model.explained_variance.sum() <= 6.0 + 1e-9);
    CHECK(model.explained_variance.minCoeff() >= -1e-12);
}

TEST_CASE("pca: isotropic cloud splits variance roughly evenly") {
    std::mt19937_64 rng(12345);
    Eigen::MatrixXd pts(10000, 2);
    for (Eigen::Index i = 0; i < pts.rows(); ++i) {
        pts(i, 0) = gauss(rng);
        pts(i, 1) = gauss(rng);
    }
    auto model = fit_pca(pts, 2);
    double ratio = model.explained_variance[0] / model.explained_variance[1];
    CHECK(ratio >= 1.0);
    CHECK(ratio <= 1.1);
}

TEST_CASE("pca: degenerate inputs are rejected") {
    Eigen::MatrixXd two(2, 2);
    two << 0, 0, 1, 1;
    try {
        fit_pca(two, 2);
        FAIL("expected an error for too few points");
    } catch (const CodedError& e) {
        CHECK(e.code() == "cluster_error");
    }

    Eigen::MatrixXd same = Eigen::MatrixXd::Constant(5, 3, 2.5);
    try {
        fit_pca(same, 2);
        FAIL("expected a degeneracy error");
    } catch (const CodedError& e) {
        CHECK(e.code() == "degenerate_data");
        CHECK(std::string(e.what()).find("degenerate data") != std::string::npos);
    }

    // One varying feature is still degenerate for a 2-D embedding.
    Eigen::MatrixXd line = Eigen::MatrixXd::Zero(5, 3);
    for (int i = 0; i < 5; ++i)
        line(i, 1) = i;
    CHECK_THROWS_AS(fit_pca(line, 2), CodedError);

    Eigen::VectorXd bad(5);
    auto model = fit_pca(Eigen::MatrixXd::Random(10, 4), 2);
    CHECK_THROWS_AS(project(model, bad), std::invalid_argument);
}

TEST_CASE("kmeans: planted blobs are recovered exactly") {
    std::mt19937_64 rng(4);
    const int per = 100;
    Eigen::MatrixXd pts(2 * per, 2);
    for (int i = 0; i < per; ++i) {
        pts(i, 0) = gauss(rng);
        pts(i, 1) = gauss(rng);
        pts(per + i, 0) = 100 + gauss(rng);
        pts(per + i, 1) = 100 + gauss(rng);
    }
    auto r = kmeans(pts, 2, 0);
    REQUIRE(r.labels.size() == size_t(2 * per));
    int first = r.labels[0];
    int second = r.labels[size_t(per)];
    CHECK(first != second);
    for (int i = 0; i < per; ++i) {
        CHECK(r.labels[size_t(i)] == first);
        CHECK(r.labels[size_t(per + i)] == second);
    }
    Eigen::Vector2d lo = r.centers.row(first).transpose();
    Eigen::Vector2d hi = r.centers.row(second).transpose();
    CHECK((lo - Eigen::Vector2d(0, 0)).norm() < 0.5);
    CHECK((hi - Eigen::Vector2d(100, 100)).norm() < 0.5);
}

TEST_CASE("kmeans: k=1 returns the centroid") {
    Eigen::MatrixXd pts(4, 2);
    pts << 0, 0, 2, 0, 0, 2, 2, 2;
    auto r = kmeans(pts, 1, 9);
    CHECK((r.centers.row(0).transpose() - Eigen::Vector2d(1, 1)).norm() < 1e-12);
    CHECK(r.inertia == doctest::Approx(8.0));
}

TEST_CASE("kmeans: deterministic for a fixed seed, objective non-increasing") {
    std::mt19937_64 rng(8);
    Eigen::MatrixXd pts(150, 2);
    for (Eigen::Index i = 0; i < pts.rows(); ++i) {
        pts(i, 0) = gauss(rng) + (i % 3) * 4;
        pts(i, 1) = gauss(rng) - (i % 3) * 2;
    }
    std::vector<double> trace1, trace2;
    auto a = kmeans(pts, 3, 42, &trace1);
    auto b = kmeans(pts, 3, 42, &trace2);
    CHECK(a.labels == b.labels);
    CHECK((a.centers - b.centers).norm() == 0.0);
    CHECK(a.inertia == b.inertia);
    CHECK(trace1 == trace2);
    REQUIRE(!trace1.empty());
    for (size_t i = 1; i < trace1.size(); ++i)
        CHECK(trace1[i] <= trace1[i - 1] + 1e-9);
}

TEST_CASE("kmeans: k larger than the distinct point count is an error") {
    Eigen::MatrixXd pts(6, 2);
    pts << 1, 1, 1, 1, 1, 1, 5, 5, 5, 5, 5, 5; // two distinct points
    CHECK(kmeans(pts, 2, 0).iterations >= 1);
    try {
        kmeans(pts, 3, 0);
        FAIL("expected an error");
    } catch (const CodedError& e) {
        CHECK(e.code() == "cluster_error");
    }
}

TEST_CASE("silhouette prefers the planted cluster count") {
    std::mt19937_64 rng(21);
    Eigen::MatrixXd pts(120, 2);
    for (int i = 0; i < 120; ++i) {
        int blob = i % 3;
        pts(i, 0) = gauss(rng) * 0.3 + blob * 10;
        pts(i, 1) = gauss(rng) * 0.3 - blob * 6;
    }
    double best_score = -2;
    int best_k = 0;
    for (int k = 2; k <= 5; ++k) {
        auto r = kmeans(pts, k, 0);
        double s = mean_silhouette(pts, r.labels, k);
        if (s > best_score) {
            best_score = s;
            best_k = k;
        }
    }
    CHECK(best_k == 3);
    CHECK(best_score > 0.7);
}

TEST_CASE("cluster model: distinct profiles separate and self-match") {
    auto seq = profile_windows(TraceProfile::seq_write(), 20, 1);
    auto rnd = profile_windows(TraceProfile::rand_read(), 20, 2);
    std::vector<WindowFeatures> windows;
    std::vector<std::string> labels;
    for (const auto& w : seq) {
        windows.push_back(w);
        labels.push_back("seqwrite");
    }
    for (const auto& w : rnd) {
        windows.push_back(w);
        labels.push_back("randread");
    }

    auto model = fit_cluster_model(windows, 0, labels);
    REQUIRE(model.clusters.size() == 2);
    CHECK(model.clusters[0].id == "c0");
    CHECK(model.clusters[1].id == "c1");
    CHECK(model.clusters[0].member_count + model.clusters[1].member_count == 40);
    for (const auto& c : model.clusters)
        CHECK(c.mean_intra_distance >= 1e-9);

    // The two profiles land in different clusters, purely.
    auto assigned = nearest_centers(model, windows);
    std::set<int> seq_clusters(assigned.begin(), assigned.begin() + 20);
    std::set<int> rnd_clusters(assigned.begin() + 20, assigned.end());
    CHECK(seq_clusters.size() == 1);
    CHECK(rnd_clusters.size() == 1);
    CHECK(*seq_clusters.begin() != *rnd_clusters.begin());

    // Fresh draws from the same generators match their own cluster.
    auto seq_hold = profile_windows(TraceProfile::seq_write(), 10, 33);
    auto a = assign_workload(model, seq_hold);
    CHECK(a.matched);
    CHECK(a.cluster_id == model.clusters[size_t(*seq_clusters.begin())].id);

    auto rnd_hold = profile_windows(TraceProfile::rand_read(), 10, 44);
    auto b = assign_workload(model, rnd_hold);
    CHECK(b.matched);
    CHECK(b.cluster_id == model.clusters[size_t(*rnd_clusters.begin())].id);

    // Same windows, same decision.
    auto b2 = assign_workload(model, rnd_hold);
    CHECK(b2.cluster_id == b.cluster_id);
    CHECK(b2.matched == b.matched);
    CHECK(b2.distance == b.distance);
}

TEST_CASE("assignment: threshold rule and empty model") {
    auto windows = profile_windows(TraceProfile::rand_write(), 12, 5);
    auto model = fit_cluster_model(windows, 0, {}, 1);
    REQUIRE(model.clusters.size() == 1);

    auto self = assign_workload(model, windows);
    CHECK(self.matched);

    // Push every center far away: distance >> 1.5 x intra distance.
    ClusterModel far = model;
    for (auto& c : far.clusters)
        c.center += Eigen::Vector2d(1000, 1000);
    auto miss = assign_workload(far, windows);
    CHECK_FALSE(miss.matched);
    CHECK(miss.cluster_id == far.clusters[0].id); // nearest is still reported

    ClusterModel empty = model;
    empty.clusters.clear();
    auto none = assign_workload(empty, windows);
    CHECK_FALSE(none.matched);
    CHECK(none.cluster_id.empty());

    CHECK_THROWS_AS(assign_workload(model, {}), std::invalid_argument);
    CHECK_THROWS_AS(assign_workload(model, windows, 0.0), std::invalid_argument);
}

TEST_CASE("holdout consistency: identical train/test scores 1.0") {
    auto a = profile_windows(TraceProfile::seq_write(), 15, 6);
    auto b = profile_windows(TraceProfile::rand_read(), 15, 7);
    std::vector<WindowFeatures> windows(a);
    windows.insert(windows.end(), b.begin(), b.end());
    std::vector<std::string> labels(15, "a");
    labels.insert(labels.end(), 15, "b");

    auto model = fit_cluster_model(windows, 0, labels);
    auto expected = nearest_centers(model, windows);
    CHECK(holdout_consistency(model, windows, expected) == doctest::Approx(1.0));

    CHECK_THROWS_AS(holdout_consistency(model, windows, std::vector<int>(3, 0)),
                    std::invalid_argument);
}

TEST_CASE("holdout consistency: interleaved identical generators sit near chance") {
    auto a = profile_windows(TraceProfile::mixed(0.5), 60, 101);
    auto b = profile_windows(TraceProfile::mixed(0.5), 60, 202);
    std::vector<WindowFeatures> windows;
    std::vector<std::string> labels;
    std::vector<int> expected;
    for (size_t i = 0; i < 60; ++i) {
        windows.push_back(a[i]);
        labels.push_back("a");
        expected.push_back(0);
        windows.push_back(b[i]);
        labels.push_back("b");
        expected.push_back(1);
    }
    auto model = fit_cluster_model(windows, 0, labels);
    double consistency = holdout_consistency(model, windows, expected);
    CHECK(consistency >= 0.35);
    CHECK(consistency <= 0.65);
}

TEST_CASE("cluster model JSON round-trip") {
    auto a = profile_windows(TraceProfile::seq_write(), 10, 3);
    auto b = profile_windows(TraceProfile::rand_read(), 10, 4);
    std::vector<WindowFeatures> windows(a);
    windows.insert(windows.end(), b.begin(), b.end());
    auto model = fit_cluster_model(windows, 0, {}, 2);

    auto j = cluster_model_to_json(model);
    auto back = cluster_model_from_json(j);
    CHECK(back.pca.means.isApprox(model.pca.means, 1e-15));
    CHECK(back.pca.scales.isApprox(model.pca.scales, 1e-15));
    CHECK(back.pca.components.isApprox(model.pca.components, 1e-15));
    REQUIRE(back.clusters.size() == model.clusters.size());
    for (size_t i = 0; i < model.clusters.size(); ++i) {
        CHECK(back.clusters[i].id == model.clusters[i].id);
        CHECK((back.clusters[i].center - model.clusters[i].center).norm() == 0.0);
        CHECK(back.clusters[i].mean_intra_distance == model.clusters[i].mean_intra_distance);
        CHECK(back.clusters[i].member_count == model.clusters[i].member_count);
    }
    // Serialization is stable: dumping twice gives the same document.
    CHECK(cluster_model_to_json(back) == j);
}
