#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "ssdtune/trace.hpp"

namespace ssdtune {

// Linear 2D embedding of window features, fitted on standardized data.
struct PcaModel {
    Eigen::VectorXd means;
    Eigen::VectorXd scales;     // per-feature std deviations; constant features get 1
    Eigen::MatrixXd components; // one principal direction per row
    Eigen::VectorXd explained_variance;
};

PcaModel fit_pca(const Eigen::MatrixXd& points, int num_components = 2);
Eigen::VectorXd project(const PcaModel& model, const Eigen::VectorXd& point);
Eigen::MatrixXd project_all(const PcaModel& model, const Eigen::MatrixXd& points);

struct KmeansResult {
    Eigen::MatrixXd centers; // k x d
    std::vector<int> labels;
    double inertia = 0;
    int iterations = 0;
};

// Lloyd's algorithm with k-means++ seeding; deterministic for a fixed seed.
// `objective_trace`, when given, records the objective after every assignment
// pass (it must be non-increasing).
KmeansResult kmeans(const Eigen::MatrixXd& points, int k, uint64_t seed,
                    std::vector<double>* objective_trace = nullptr);

double mean_silhouette(const Eigen::MatrixXd& points, const std::vector<int>& labels, int k);

struct ClusterInfo {
    std::string id;
    Eigen::Vector2d center = Eigen::Vector2d::Zero();
    double mean_intra_distance = 0;
    int member_count = 0;
};

struct ClusterModel {
    PcaModel pca;
    std::vector<ClusterInfo> clusters;
};

struct Assignment {
    std::string cluster_id; // empty when no cluster exists
    bool matched = false;
    Eigen::Vector2d centroid = Eigen::Vector2d::Zero();
    double distance = 0;
};

Eigen::MatrixXd feature_matrix(const std::vector<WindowFeatures>& windows);

// Fits PCA + k-means over per-window features. k is taken from `k_override`
// when positive, else from the number of distinct labels when labels are
// given, else picked by best mean silhouette over k in [2, 8].
ClusterModel fit_cluster_model(const std::vector<WindowFeatures>& windows, uint64_t seed = 0,
                               const std::vector<std::string>& labels = {}, int k_override = 0);

// Projects the windows, takes their centroid, and matches it against the
// nearest cluster center; matched iff the distance is within threshold_factor
// times that cluster's mean intra-cluster distance.
Assignment assign_workload(const ClusterModel& model, const std::vector<WindowFeatures>& windows,
                           double threshold_factor = 1.5);

// Fraction of windows whose nearest center index equals the expected label.
double holdout_consistency(const ClusterModel& model, const std::vector<WindowFeatures>& windows,
                           const std::vector<int>& expected_labels);

nlohmann::json cluster_model_to_json(const ClusterModel& model);
ClusterModel cluster_model_from_json(const nlohmann::json& j);

} // namespace ssdtune
