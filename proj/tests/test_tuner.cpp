#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "ssdtune/confdb.hpp"
#include "ssdtune/error.hpp"
#include "ssdtune/trace.hpp"
#include "ssdtune/tuner.hpp"

#include "helpers.hpp"

using namespace ssdtune;
using namespace testutil;

namespace {

PerfPoint perf(double latency_us, double throughput_mbps) {
    PerfPoint p;
    p.latency_us = latency_us;
    p.throughput_mbps = throughput_mbps;
    return p;
}

// Separable bowl over the three free toy parameters with its unique minimum
// of exactly 1.0 at (qd=3, cache=2, gc=0).
double bowl(int qd, int cache, int gc) {
    return 1.0 + 0.1 * ((qd - 3) * (qd - 3) + (cache - 2) * (cache - 2) + 2 * gc);
}

SearchLoop::Evaluator bowl_evaluator(const ParamSpace& space) {
    return [&space](const Configuration& c) {
        GradeRecord r;
        r.config = c;
        r.grade = bowl(get_index(space, c, "IOQueueDepth"),
                       get_index(space, c, "DataCacheCapacity"),
                       get_index(space, c, "GreedyGCEnabled"));
        r.validated = true;
        return r;
    };
}

GradeRecord seed_record(const ParamSpace& space, const Configuration& config) {
    GradeRecord r;
    r.config = config;
    r.grade = bowl(get_index(space, config, "IOQueueDepth"),
                   get_index(space, config, "DataCacheCapacity"),
                   get_index(space, config, "GreedyGCEnabled"));
    r.validated = true;
    return r;
}

TunerSettings searcher_settings(uint64_t seed) {
    TunerSettings s;
    s.top_set_size = 1;
    s.convergence_epsilon = 1e-6;
    s.convergence_window = 30; // larger than the space, so only a stall can end the run early
    s.max_outer_iterations = 50;
    s.exploit_distance_max = 6;
    s.gpr_restarts = 2;
    s.gpr_local_iterations = 15;
    s.rng_seed = seed;
    return s;
}

} // namespace

TEST_CASE("goal is zero at the reference point") {
    PerfPoint ref = perf(120.0, 350.0);
    CHECK(goal(ref, ref, 0.9) == 0.0);
    CHECK(goal(ref, ref, 0.0) == 0.0);
    CHECK(goal(ref, ref, 1.0) == 0.0);
}

TEST_CASE("goal blends the log latency and throughput ratios") {
    PerfPoint ref = perf(100.0, 200.0);
    // Halving latency while doubling throughput collapses to -ln 2 at alpha 0.9.
    PerfPoint better = perf(50.0, 400.0);
    CHECK(std::abs(goal(better, ref, 0.9) - (-std::log(2.0))) <= 1e-12);

    // alpha 0 scores latency alone, alpha 1 throughput alone.
    PerfPoint slower = perf(200.0, 200.0);
    CHECK(std::abs(goal(slower, ref, 0.0) - std::log(2.0)) <= 1e-12);
    CHECK(goal(slower, ref, 1.0) == 0.0);
    PerfPoint wider = perf(100.0, 800.0);
    CHECK(std::abs(goal(wider, ref, 1.0) - (-std::log(4.0))) <= 1e-12);
}

TEST_CASE("goal differences do not depend on the reference") {
    PerfPoint a = perf(80.0, 150.0);
    PerfPoint b = perf(310.0, 95.0);
    PerfPoint ref1 = perf(100.0, 200.0);
    PerfPoint ref2 = perf(7.0, 4000.0);
    double d1 = goal(a, ref1, 0.9) - goal(b, ref1, 0.9);
    double d2 = goal(a, ref2, 0.9) - goal(b, ref2, 0.9);
    CHECK(std::abs(d1 - d2) <= 1e-12);
}

TEST_CASE("goal input validation") {
    PerfPoint ok = perf(10.0, 10.0);
    CHECK_THROWS_AS(goal(ok, ok, -0.1), std::invalid_argument);
    CHECK_THROWS_AS(goal(ok, ok, 1.1), std::invalid_argument);
    CHECK_THROWS_AS(goal(perf(0.0, 10.0), ok, 0.5), std::invalid_argument);
    CHECK_THROWS_AS(goal(perf(10.0, -2.0), ok, 0.5), std::invalid_argument);
    CHECK_THROWS_AS(goal(ok, perf(10.0, 0.0), 0.5), std::invalid_argument);
}

TEST_CASE("grade weighs the target against the other clusters") {
    // Target improved by 1, the two other clusters unharmed.
    CHECK(std::abs(grade(-1.0, {0.0, 0.0}, 0.9, 3) - (-0.1)) <= 1e-12);
    // beta 0 reduces to the target goal.
    CHECK(grade(-0.75, {5.0, 5.0}, 0.0, 3) == doctest::Approx(-0.75).epsilon(1e-12));
    // A single cluster has no side-effect term.
    CHECK(std::abs(grade(-2.0, {}, 0.9, 1) - (-0.2)) <= 1e-12);
    // Non-target harm pulls the grade up.
    double g = grade(-1.0, {0.4, 0.2}, 0.9, 3);
    CHECK(std::abs(g - (0.1 * -1.0 + 0.9 * 0.3)) <= 1e-12);
}

TEST_CASE("grade input validation") {
    CHECK_THROWS_AS(grade(0.0, {0.0}, -0.1, 2), std::invalid_argument);
    CHECK_THROWS_AS(grade(0.0, {0.0}, 1.5, 2), std::invalid_argument);
    CHECK_THROWS_AS(grade(0.0, {}, 0.9, 0), std::invalid_argument);
    CHECK_THROWS_AS(grade(0.0, {0.0, 0.0}, 0.9, 2), std::invalid_argument); // count mismatch
    CHECK_THROWS_AS(grade(0.0, {}, 0.9, 2), std::invalid_argument);
}

TEST_CASE("grade records survive a JSON round trip") {
    ParamSpace space = toy_tuning_space();
    Configuration config = make_default_configuration(space);
    set_index(space, config, "IOQueueDepth", 3);
    set_index(space, config, "GreedyGCEnabled", 1);

    GradeRecord record;
    record.config = config;
    record.per_workload["c0"] = perf(110.5, 36.25);
    record.per_workload["c1"] = perf(410.0, 512.0);
    record.goal_per_workload["c0"] = -0.25;
    record.goal_per_workload["c1"] = 0.125;
    record.grade = -0.1375;
    record.validated = true;

    nlohmann::json j = grade_record_to_json(space, record);
    GradeRecord back = grade_record_from_json(space, j);
    CHECK(back.config == record.config);
    CHECK(back.per_workload == record.per_workload);
    CHECK(back.goal_per_workload == record.goal_per_workload);
    CHECK(back.grade == record.grade);
    CHECK(back.validated == record.validated);
}

TEST_CASE("search loop finds the bowl minimum") {
    ParamSpace space = toy_tuning_space();
    Constraints constraints = default_constraints();

    // Exhaustive truth over the 40 reachable configurations.
    double truth_min = std::numeric_limits<double>::infinity();
    for (int qd = 0; qd < 5; ++qd)
        for (int cache = 0; cache < 4; ++cache)
            for (int gc = 0; gc < 2; ++gc)
                truth_min = std::min(truth_min, bowl(qd, cache, gc));
    REQUIRE(truth_min == 1.0);

    SearchLoop loop(space, constraints, bowl_evaluator(space), searcher_settings(7));
    loop.seed(seed_record(space, make_default_configuration(space)));
    SearchLoop::RunResult result = loop.run();

    CHECK(result.iterations <= 50);
    CHECK(loop.history().size() <= 51); // the seed plus one evaluation per step
    CHECK(loop.best().grade == doctest::Approx(truth_min).epsilon(1e-12));
    CHECK(get_index(space, loop.best().config, "IOQueueDepth") == 3);
    CHECK(get_index(space, loop.best().config, "DataCacheCapacity") == 2);
    CHECK(get_index(space, loop.best().config, "GreedyGCEnabled") == 0);

    // Every evaluation targets a configuration not measured before.
    std::set<std::vector<int>> unique;
    for (const auto& r : loop.history())
        CHECK(unique.insert(r.config.indices).second);
}

TEST_CASE("search runs are deterministic for a fixed seed") {
    ParamSpace space = toy_tuning_space();
    Constraints constraints = default_constraints();
    TunerSettings settings = searcher_settings(11);
    settings.top_set_size = 3; // exercise the random root draw as well

    std::vector<std::vector<int>> first, second;
    for (auto* sink : {&first, &second}) {
        SearchLoop loop(space, constraints, bowl_evaluator(space), settings);
        loop.seed(seed_record(space, make_default_configuration(space)));
        loop.run();
        for (const auto& r : loop.history())
            sink->push_back(r.config.indices);
    }
    CHECK(first == second);
}

TEST_CASE("a zero exploit distance stalls immediately") {
    ParamSpace space = toy_tuning_space();
    TunerSettings settings = searcher_settings(3);
    settings.exploit_distance_max = 0;

    SearchLoop loop(space, default_constraints(), bowl_evaluator(space), settings);
    loop.seed(seed_record(space, make_default_configuration(space)));
    CHECK(loop.step() == SearchLoop::StepStatus::Stalled);

    SearchLoop fresh(space, default_constraints(), bowl_evaluator(space), settings);
    fresh.seed(seed_record(space, make_default_configuration(space)));
    SearchLoop::RunResult result = fresh.run();
    CHECK(result.stalled);
    CHECK(!result.converged);
    CHECK(result.iterations == 2);
    CHECK(fresh.history().size() == 1); // nothing beyond the seed was evaluated
}

TEST_CASE("search loop guards its inputs") {
    ParamSpace space = toy_tuning_space();
    TunerSettings settings = searcher_settings(1);

    SearchLoop unseeded(space, default_constraints(), bowl_evaluator(space), settings);
    CHECK_THROWS_AS(unseeded.step(), std::logic_error);
    CHECK_THROWS_AS(unseeded.best(), std::logic_error);

    SearchLoop loop(space, default_constraints(), bowl_evaluator(space), settings);
    GradeRecord unvalidated = seed_record(space, make_default_configuration(space));
    unvalidated.validated = false;
    CHECK_THROWS_AS(loop.seed(unvalidated), std::invalid_argument);

    // A seed outside the capacity band is rejected with a coded error.
    ParamSpace tiny = tiny_layout_space();
    auto tiny_eval = [](const Configuration& c) {
        GradeRecord r;
        r.config = c;
        r.grade = 0.0;
        r.validated = true;
        return r;
    };
    SearchLoop mismatched(tiny, default_constraints(), tiny_eval, settings);
    GradeRecord bad;
    bad.config = make_default_configuration(tiny);
    bad.grade = 0.0;
    bad.validated = true;
    try {
        mismatched.seed(bad);
        FAIL("expected constraint_violation");
    } catch (const CodedError& e) {
        CHECK(e.code() == "constraint_violation");
    }

    // Bad settings are rejected up front.
    TunerSettings zero_top = settings;
    zero_top.top_set_size = 0;
    CHECK_THROWS_AS(SearchLoop(space, default_constraints(), bowl_evaluator(space), zero_top),
                    std::invalid_argument);
    TunerSettings negative_distance = settings;
    negative_distance.exploit_distance_max = -1.0;
    CHECK_THROWS_AS(
        SearchLoop(space, default_constraints(), bowl_evaluator(space), negative_distance),
        std::invalid_argument);
    TunerSettings zero_window = settings;
    zero_window.convergence_window = 0;
    CHECK_THROWS_AS(SearchLoop(space, default_constraints(), bowl_evaluator(space), zero_window),
                    std::invalid_argument);
}

TEST_CASE("a non-finite evaluation is reported as a coded error") {
    ParamSpace space = toy_tuning_space();
    auto broken = [](const Configuration& c) {
        GradeRecord r;
        r.config = c;
        r.grade = std::numeric_limits<double>::quiet_NaN();
        r.validated = true;
        return r;
    };
    SearchLoop loop(space, default_constraints(), broken, searcher_settings(2));
    loop.seed(seed_record(space, make_default_configuration(space)));
    try {
        loop.step();
        FAIL("expected tuner_error");
    } catch (const CodedError& e) {
        CHECK(e.code() == "tuner_error");
    }
}

TEST_CASE("duplicate seeds are absorbed silently") {
    ParamSpace space = toy_tuning_space();
    SearchLoop loop(space, default_constraints(), bowl_evaluator(space), searcher_settings(4));
    GradeRecord seed = seed_record(space, make_default_configuration(space));
    loop.seed(seed);
    loop.seed(seed);
    CHECK(loop.history().size() == 1);
}

TEST_CASE("tune bootstraps a cluster and improves on the reference") {
    auto dir = scratch_dir("tuner_bootstrap");
    ConfDb db = ConfDb::open(dir, ParamSpace::default_catalog(), default_constraints());

    auto workload = generate_synthetic_trace(TraceProfile::seq_read(), 9000, 21);

    TunerSettings settings;
    settings.top_set_size = 1;
    settings.convergence_epsilon = 0.01;
    settings.convergence_window = 4;
    settings.max_outer_iterations = 6;
    settings.gpr_restarts = 2;
    settings.gpr_local_iterations = 15;
    settings.rng_seed = 5;

    TuneResult result = tune(workload, settings, db);

    CHECK(result.created_cluster);
    CHECK(result.cluster_id == "c0");
    CHECK(!result.history.empty());
    CHECK(result.best.validated);
    // The reference configuration is seeded with a grade of exactly zero, so
    // the winner can never score worse.
    CHECK(result.best.grade <= 0.0);
    CHECK(result.best.per_workload.count("c0") == 1);

    auto entry = db.get("c0");
    REQUIRE(entry.has_value());
    CHECK(!entry->records.empty());
    CHECK(db.load_trace("c0").size() == workload.size());
}

TEST_CASE("tune refuses a store without pinned constraints") {
    auto dir = scratch_dir("tuner_no_constraints");
    ConfDb db = ConfDb::open(dir, ParamSpace::default_catalog(), std::nullopt);
    auto workload = generate_synthetic_trace(TraceProfile::seq_read(), 3000, 2);
    try {
        tune(workload, TunerSettings{}, db);
        FAIL("expected usage error");
    } catch (const CodedError& e) {
        CHECK(e.code() == "usage");
        CHECK(std::string(e.what()) == "the store has no pinned constraints; supply them first");
    }
}

TEST_CASE("tune is deterministic across stores") {
    auto workload = generate_synthetic_trace(TraceProfile::rand_write(), 9000, 13);

    TunerSettings settings;
    settings.top_set_size = 1;
    settings.convergence_window = 3;
    settings.max_outer_iterations = 4;
    settings.gpr_restarts = 2;
    settings.gpr_local_iterations = 10;
    settings.rng_seed = 17;

    std::vector<std::vector<int>> sequences[2];
    double best_grades[2] = {0, 0};
    for (int round = 0; round < 2; ++round) {
        auto dir = scratch_dir("tuner_repeat_" + std::to_string(round));
        ConfDb db =
            ConfDb::open(dir, ParamSpace::default_catalog(), default_constraints());
        TuneResult result = tune(workload, settings, db);
        for (const auto& r : result.history)
            sequences[round].push_back(r.config.indices);
        best_grades[round] = result.best.grade;
    }
    CHECK(sequences[0] == sequences[1]);
    CHECK(best_grades[0] == best_grades[1]);
}
