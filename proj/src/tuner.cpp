#include "ssdtune/tuner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "ssdtune/clustering.hpp"
#include "ssdtune/confdb.hpp"
#include "ssdtune/error.hpp"
#include "ssdtune/simssd.hpp"

namespace ssdtune {

double goal(const PerfPoint& measured, const PerfPoint& reference, double alpha) {
    if (alpha < 0 || alpha > 1)
        throw std::invalid_argument("alpha must lie in [0,1]");
    if (measured.latency_us <= 0 || measured.throughput_mbps <= 0 || reference.latency_us <= 0 ||
        reference.throughput_mbps <= 0)
        throw std::invalid_argument("goal requires strictly positive measurements");
    return (1.0 - alpha) * std::log(measured.latency_us / reference.latency_us) -
           alpha * std::log(measured.throughput_mbps / reference.throughput_mbps);
}

double grade(double target_goal, const std::vector<double>& nontarget_goals, double beta,
             int num_clusters) {
    if (beta < 0 || beta > 1)
        throw std::invalid_argument("beta must lie in [0,1]");
    if (num_clusters < 1)
        throw std::invalid_argument("need at least one cluster");
    if (nontarget_goals.size() != static_cast<size_t>(num_clusters - 1))
        throw std::invalid_argument("non-target goal count must equal cluster count minus one");
    double penalty = 0;
    if (num_clusters > 1) {
        penalty = std::accumulate(nontarget_goals.begin(), nontarget_goals.end(), 0.0) /
                  static_cast<double>(num_clusters - 1);
    }
    return (1.0 - beta) * target_goal + beta * penalty;
}

nlohmann::json grade_record_to_json(const ParamSpace& space, const GradeRecord& record) {
    nlohmann::json j;
    j["config"] = configuration_to_json(space, record.config);
    nlohmann::json perf = nlohmann::json::object();
    for (const auto& [id, p] : record.per_workload)
        perf[id] = {{"latency_us", p.latency_us}, {"throughput_mbps", p.throughput_mbps}};
    j["per_workload"] = perf;
    j["goal_per_workload"] = record.goal_per_workload;
    j["grade"] = record.grade;
    j["validated"] = record.validated;
    return j;
}

GradeRecord grade_record_from_json(const ParamSpace& space, const nlohmann::json& j) {
    GradeRecord record;
    record.config = configuration_from_json(space, j.at("config"));
    for (const auto& [id, pj] : j.at("per_workload").items()) {
        record.per_workload[id] = PerfPoint{pj.at("latency_us").get<double>(),
                                            pj.at("throughput_mbps").get<double>()};
    }
    record.goal_per_workload = j.at("goal_per_workload").get<std::map<std::string, double>>();
    record.grade = j.at("grade").get<double>();
    record.validated = j.at("validated").get<bool>();
    return record;
}

SearchLoop::SearchLoop(const ParamSpace& space, const Constraints& constraints,
                       Evaluator evaluator, TunerSettings settings)
    : space_(space), constraints_(constraints), evaluator_(std::move(evaluator)),
      settings_(settings), rng_(settings.rng_seed ^ 0x74756e65ULL) {
    if (settings_.top_set_size < 1 || settings_.max_search_iterations < 1 ||
        settings_.max_outer_iterations < 1 || settings_.convergence_window < 1)
        throw std::invalid_argument("iteration and set-size settings must be at least 1");
    if (settings_.exploit_distance_max < 0)
        throw std::invalid_argument("exploit distance must be non-negative");
}

void SearchLoop::seed(const GradeRecord& record) {
    if (!record.validated)
        throw std::invalid_argument("seed records must carry validated measurements");
    check_configuration(space_, record.config);
    if (!satisfies(space_, record.config, constraints_))
        throw CodedError("constraint_violation", "seed configuration violates constraints");
    if (seen_.count(record.config.indices))
        return; // already known
    history_.push_back(record);
    vectors_.push_back(vectorize(space_, record.config));
    seen_.insert(record.config.indices);
    refit();
}

void SearchLoop::refit() {
    if (history_.size() < 2) {
        model_.reset();
        return;
    }
    Eigen::MatrixXd X(static_cast<Eigen::Index>(history_.size()),
                      static_cast<Eigen::Index>(space_.vector_size()));
    Eigen::VectorXd y(static_cast<Eigen::Index>(history_.size()));
    for (size_t i = 0; i < history_.size(); ++i) {
        X.row(static_cast<Eigen::Index>(i)) = vectors_[i].transpose();
        y[static_cast<Eigen::Index>(i)] = history_[i].grade;
    }
    GprOptions options;
    options.restarts = settings_.gpr_restarts;
    options.local_iterations = settings_.gpr_local_iterations;
    options.seed = settings_.rng_seed;
    model_ = GprModel::fit(X, y, options);
}

double SearchLoop::predict_or_best_guess(const Eigen::VectorXd& v) const {
    // Without a usable surrogate every candidate looks the same; the caller's
    // deterministic enumeration order breaks the tie.
    return model_ ? model_->predict(v).mean : 0.0;
}

SearchLoop::StepStatus SearchLoop::step() {
    if (history_.empty())
        throw std::logic_error("search stepped before seeding");

    // Root: uniform among the current best validated grades.
    std::vector<size_t> order(history_.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
        if (history_[a].grade != history_[b].grade)
            return history_[a].grade < history_[b].grade;
        return a < b;
    });
    size_t top_n = std::min(static_cast<size_t>(settings_.top_set_size), order.size());
    size_t root = order[rand_index(rng_, top_n)];

    Configuration current = history_[root].config;
    double current_value = history_[root].grade;

    std::optional<Configuration> final_candidate;
    for (int inner = 0; inner < settings_.max_search_iterations; ++inner) {
        std::vector<Configuration> kept;
        for (auto& cand : neighbors(space_, current, constraints_)) {
            if (seen_.count(cand.indices))
                continue;
            double dmin = std::numeric_limits<double>::infinity();
            for (const auto& rec : history_)
                dmin = std::min(dmin, manhattan(space_, cand, rec.config));
            if (dmin <= settings_.exploit_distance_max)
                kept.push_back(std::move(cand));
        }
        if (kept.empty())
            break;

        size_t best_j = 0;
        double best_pred = std::numeric_limits<double>::infinity();
        for (size_t j = 0; j < kept.size(); ++j) {
            double mean = predict_or_best_guess(vectorize(space_, kept[j]));
            if (mean < best_pred) {
                best_pred = mean;
                best_j = j;
            }
        }

        if (inner == 0)
            final_candidate = kept[best_j];
        if (best_pred < current_value) {
            final_candidate = kept[best_j];
            current = *final_candidate;
            current_value = best_pred;
        } else {
            break; // nothing predicted better than where we stand
        }
    }

    if (!final_candidate)
        return StepStatus::Stalled;

    GradeRecord record = evaluator_(*final_candidate);
    record.config = *final_candidate;
    record.validated = true;
    if (!std::isfinite(record.grade))
        throw CodedError("tuner_error", "evaluator produced a non-finite grade");
    history_.push_back(record);
    vectors_.push_back(vectorize(space_, record.config));
    seen_.insert(record.config.indices);
    refit();
    return StepStatus::Advanced;
}

double SearchLoop::top_mean() const {
    std::vector<double> grades;
    grades.reserve(history_.size());
    for (const auto& rec : history_)
        grades.push_back(rec.grade);
    std::sort(grades.begin(), grades.end());
    size_t top_n = std::min(static_cast<size_t>(settings_.top_set_size), grades.size());
    return std::accumulate(grades.begin(), grades.begin() + static_cast<long>(top_n), 0.0) /
           static_cast<double>(top_n);
}

SearchLoop::RunResult SearchLoop::run() {
    RunResult result;
    int flat_streak = 0;
    int stall_streak = 0;
    double prev_top = top_mean();
    for (int outer = 0; outer < settings_.max_outer_iterations; ++outer) {
        StepStatus status = step();
        result.iterations = outer + 1;
        if (status == StepStatus::Stalled) {
            if (++stall_streak >= 2) {
                result.stalled = true;
                break;
            }
            continue; // a different random root may still open up moves
        }
        stall_streak = 0;
        double curr = top_mean();
        double rel = (prev_top - curr) / std::max(std::abs(prev_top), 1e-9);
        if (rel < settings_.convergence_epsilon) {
            if (++flat_streak >= settings_.convergence_window) {
                result.converged = true;
                prev_top = curr;
                break;
            }
        } else {
            flat_streak = 0;
        }
        prev_top = curr;
    }
    return result;
}

const GradeRecord& SearchLoop::best() const {
    if (history_.empty())
        throw std::logic_error("no validated records yet");
    size_t best = 0;
    for (size_t i = 1; i < history_.size(); ++i) {
        if (history_[i].grade < history_[best].grade)
            best = i;
    }
    return history_[best];
}

ClusterChoice assign_or_create_cluster(ConfDb& db, std::span<const IoRecord> workload,
                                       const std::vector<WindowFeatures>& features,
                                       uint64_t seed) {
    ClusterChoice out;
    if (!db.has_pca() || db.list_clusters().empty()) {
        // Bootstrap: this workload becomes the first cluster and fixes the
        // embedding basis.
        ClusterModel model = fit_cluster_model(features, seed, {}, 1);
        db.set_pca(model.pca);
        out.cluster_id = db.next_cluster_id();
        out.created = true;
        ConfDbEntry entry;
        entry.cluster_id = out.cluster_id;
        entry.meta = model.clusters.front();
        entry.meta.id = out.cluster_id;
        db.store_trace(out.cluster_id, workload);
        entry.trace_file = "traces/" + out.cluster_id + ".trace";
        db.put(entry);
        return out;
    }

    ClusterModel model = db.cluster_model();
    Assignment assignment = assign_workload(model, features);
    out.distance = assignment.distance;
    if (assignment.matched) {
        out.cluster_id = assignment.cluster_id;
        return out;
    }
    out.cluster_id = db.next_cluster_id();
    out.created = true;
    ConfDbEntry entry;
    entry.cluster_id = out.cluster_id;
    entry.meta.id = out.cluster_id;
    entry.meta.center = assignment.centroid;
    entry.meta.member_count = static_cast<int>(features.size());
    Eigen::MatrixXd projected = project_all(model.pca, feature_matrix(features));
    double spread = 0;
    for (Eigen::Index i = 0; i < projected.rows(); ++i)
        spread += (projected.row(i).transpose() - assignment.centroid).norm();
    entry.meta.mean_intra_distance =
        std::max(1e-9, spread / static_cast<double>(projected.rows()));
    db.store_trace(out.cluster_id, workload);
    entry.trace_file = "traces/" + out.cluster_id + ".trace";
    db.put(entry);
    return out;
}

TuneResult tune(std::span<const IoRecord> target_workload, const TunerSettings& settings,
                ConfDb& db) {
    const ParamSpace& space = db.space();
    if (!db.has_constraints())
        throw CodedError("usage", "the store has no pinned constraints; supply them first");
    const Constraints constraints = db.constraints();

    auto trace_windows = make_windows(target_workload);
    std::vector<WindowFeatures> features;
    features.reserve(trace_windows.size());
    for (const auto& w : trace_windows)
        features.push_back(extract_features(w));

    const Configuration reference = db.reference_config();
    check_configuration(space, reference);
    if (!satisfies(space, reference, constraints))
        throw CodedError("constraint_violation",
                         "stored reference configuration violates the constraints");

    TuneResult out;
    ClusterChoice choice =
        assign_or_create_cluster(db, target_workload, features, settings.rng_seed);
    out.cluster_id = choice.cluster_id;
    out.created_cluster = choice.created;

    // Per-cluster reference measurements (computed once, then cached).
    std::vector<std::string> cluster_ids = db.list_clusters();
    std::map<std::string, std::vector<IoRecord>> traces;
    std::map<std::string, PerfPoint> reference_perf;
    for (const auto& id : cluster_ids) {
        ConfDbEntry entry = *db.get(id);
        traces[id] = db.load_trace(id);
        auto it = entry.reference_perf.find(id);
        if (it != entry.reference_perf.end()) {
            reference_perf[id] = it->second;
        } else {
            SimResult r = simulate(space, reference, constraints, traces[id]);
            reference_perf[id] = PerfPoint{r.mean_latency_us, r.throughput_mbps};
            entry.reference_perf[id] = reference_perf[id];
            db.put(entry);
        }
    }
    const int num_clusters = static_cast<int>(cluster_ids.size());

    auto evaluator = [&](const Configuration& config) {
        GradeRecord record;
        record.config = config;
        double target_goal = 0;
        std::vector<double> nontarget_goals;
        for (const auto& id : cluster_ids) {
            SimResult r = simulate(space, config, constraints, traces[id]);
            PerfPoint point{r.mean_latency_us, r.throughput_mbps};
            record.per_workload[id] = point;
            double g = goal(point, reference_perf[id], settings.alpha);
            record.goal_per_workload[id] = g;
            if (id == out.cluster_id)
                target_goal = g;
            else
                nontarget_goals.push_back(g);
        }
        record.grade = grade(target_goal, nontarget_goals, settings.beta, num_clusters);
        record.validated = true;
        return record;
    };

    SearchLoop loop(space, constraints, evaluator, settings);

    // Seed 1: the reference configuration, whose goals are zero by
    // construction.
    GradeRecord ref_record;
    ref_record.config = reference;
    for (const auto& id : cluster_ids) {
        ref_record.per_workload[id] = reference_perf[id];
        ref_record.goal_per_workload[id] = 0.0;
    }
    ref_record.grade = 0.0;
    ref_record.validated = true;
    loop.seed(ref_record);

    // Seeds 2..n: previously learned configurations for this cluster,
    // re-measured so their grades reflect the current cluster set.
    ConfDbEntry target_entry = *db.get(out.cluster_id);
    std::set<std::vector<int>> seeded{reference.indices};
    for (const auto& stored : target_entry.records) {
        if (seeded.count(stored.config.indices))
            continue;
        seeded.insert(stored.config.indices);
        loop.seed(evaluator(stored.config));
    }
    const size_t seed_count = loop.history().size();

    auto run = loop.run();
    out.converged = run.converged;
    out.stalled = run.stalled;

    // Persist the new findings; keep the reference record if the cluster had
    // nothing yet so a fresh store always ends up with at least one record.
    if (target_entry.records.empty())
        db.append_record(out.cluster_id, ref_record);
    for (size_t i = seed_count; i < loop.history().size(); ++i)
        db.append_record(out.cluster_id, loop.history()[i]);

    out.best = loop.best();
    out.history = loop.history();
    return out;
}

} // namespace ssdtune
