#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "altopt/error.hpp"
#include "altopt/harness.hpp"

using namespace altopt;

namespace {

TaskConfig convex_tuning_task() {
    return {FunctionId::Convex2D, 1.0, 20.0, {50.0, 50.0}, 100, 0};
}

OptimizerSpec with_rates(Family f, UpdateKind k, double eta, double eta_in, double eta_out) {
    OptimizerSpec spec = make_spec(f, k);
    spec.update.eta = eta;
    spec.update.eta_in = eta_in;
    spec.update.eta_out = eta_out;
    return spec;
}

double max_score(const ScoreGrid& g) {
    double worst = 0.0;
    for (const auto& row : g.scores) worst = std::max(worst, *std::max_element(row.begin(), row.end()));
    return worst;
}

}  // namespace

TEST(RunTrial, ZeroRateLeavesStartInPlace) {
    OptimizerSpec spec = make_spec(Family::Sgd, UpdateKind::Additive);
    spec.update.eta = 0.0;
    const TrialRecord r = run_trial(convex_tuning_task(), spec);
    EXPECT_EQ(r.final_distance, r.initial_distance);
    EXPECT_EQ(r.score, 1.0);
    EXPECT_FALSE(r.diverged);
}

TEST(RunTrial, RecordShape) {
    const TrialRecord r = run_trial(convex_tuning_task(), make_spec(Family::Adam, UpdateKind::Additive));
    EXPECT_EQ(r.iterations_run, 100);
    EXPECT_EQ(r.distances.size(), 101u);
    EXPECT_EQ(r.path.size(), 101u);
    EXPECT_EQ(r.distances.front(), r.initial_distance);
    EXPECT_EQ(r.distances.back(), r.final_distance);
    EXPECT_DOUBLE_EQ(r.score, r.final_distance / r.initial_distance);
    for (double d : r.distances) {
        EXPECT_TRUE(std::isfinite(d));
        EXPECT_GE(d, 0.0);
    }
}

TEST(RunTrial, DivergenceIsFlaggedNotThrown) {
    // |1 - 400η| = 3999 per step overflows a double well before 100 steps.
    const OptimizerSpec spec = with_rates(Family::Sgd, UpdateKind::Additive, 10.0, 1.0, 0.1);
    const TrialRecord r = run_trial(convex_tuning_task(), spec);
    EXPECT_TRUE(r.diverged);
    EXPECT_TRUE(std::isinf(r.score));
    EXPECT_TRUE(std::isinf(r.final_distance));
    EXPECT_LT(r.iterations_run, 100);
    EXPECT_EQ(r.distances.size(), static_cast<std::size_t>(r.iterations_run) + 1);
}

TEST(RunTrial, TunedConvexHybridSgd) {
    // Best point of the 1-5 reference grid.
    const OptimizerSpec spec = with_rates(Family::Sgd, UpdateKind::Hybrid, 5e-3, 0.5, 5e-3);
    EXPECT_LE(run_trial(convex_tuning_task(), spec).final_distance, 1e-4);
}

TEST(RunTrial, TunedRosenbrockAdditiveSgd) {
    // Reference value 1.38 at the beta = 60 tuning task.
    const TaskConfig task{FunctionId::Rosenbrock, 1.0, 60.0, {0.5, 3.0}, 100, 0};
    const OptimizerSpec spec = with_rates(Family::Sgd, UpdateKind::Additive, 1e-3, 1.0, 0.1);
    EXPECT_NEAR(run_trial(task, spec).final_distance, 1.38, 0.01);
}

TEST(RunTrial, MultiplicativeKeepsInitialSigns) {
    const TaskConfig tasks[] = {
        convex_tuning_task(),
        {FunctionId::Convex2D, -3.0, 20.0, {5.0, -4.0}, 200, 0},  // minimum across the axis
        {FunctionId::Rosenbrock, 1.0, 20.0, {-0.5, 3.0}, 200, 0},
    };
    for (const TaskConfig& task : tasks) {
        for (Family f : {Family::Sgd, Family::Adagrad, Family::Adam, Family::RmsProp}) {
            const OptimizerSpec spec = with_rates(f, UpdateKind::Multiplicative, 0.0, 5.0, 0.5);
            const TrialRecord r = run_trial(task, spec);
            for (const Point2& p : r.path) {
                for (int k = 0; k < 2; ++k) {
                    ASSERT_EQ(std::signbit(p[k]), std::signbit(task.x0[k]));
                }
            }
        }
    }
}

TEST(Sampling, FixedDistributionReturnsFixedTask) {
    EvalDistribution d{FunctionId::Rosenbrock, Sampler::fixed(0.5), Sampler::fixed(3.0),
                       Sampler::fixed(1.0), Sampler::fixed(60.0), Sampler::fixed(100.0)};
    for (std::uint64_t i = 0; i < 5; ++i) {
        const TaskConfig t = sample_eval_config(d, 17, i);
        EXPECT_EQ(t.x0, (Point2{0.5, 3.0}));
        EXPECT_EQ(t.alpha, 1.0);
        EXPECT_EQ(t.beta, 60.0);
        EXPECT_EQ(t.iterations, 100);
        EXPECT_EQ(t.function, FunctionId::Rosenbrock);
    }
}

TEST(Sampling, DistinctIndicesDistinctConfigs) {
    const EvalDistribution d = convex2d_eval_distribution();
    const TaskConfig a = sample_eval_config(d, 2024, 0);
    const TaskConfig b = sample_eval_config(d, 2024, 1);
    EXPECT_NE(a.x0, b.x0);
    EXPECT_GT(a.beta, 0.0);
    EXPECT_GT(b.beta, 0.0);
    EXPECT_GE(a.iterations, 1);
    EXPECT_GE(b.iterations, 1);

    const TaskConfig again = sample_eval_config(d, 2024, 1);
    EXPECT_EQ(again.x0, b.x0);
    EXPECT_EQ(again.beta, b.beta);
    EXPECT_EQ(again.iterations, b.iterations);
}

TEST(Sampling, IterationRounding) {
    EXPECT_EQ(round_iterations(99.4), 99);
    EXPECT_EQ(round_iterations(99.5), 100);
    EXPECT_EQ(round_iterations(0.4), 1);
    EXPECT_EQ(round_iterations(-12.0), 1);
}

TEST(Sampling, BetaRedrawnUntilPositive) {
    EvalDistribution d = convex2d_eval_distribution();
    d.beta = {-1.0, 1.0};
    for (std::uint64_t i = 0; i < 200; ++i) EXPECT_GT(sample_eval_config(d, 1, i).beta, 0.0);
}

TEST(Robustness, SingleTrialHasZeroStd) {
    EvalDistribution d{FunctionId::Convex2D, Sampler::fixed(50.0), Sampler::fixed(50.0),
                       Sampler::fixed(1.0), Sampler::fixed(20.0), Sampler::fixed(100.0)};
    const OptimizerSpec spec = make_spec(Family::Adam, UpdateKind::Additive);
    const RobustnessResult r = evaluate_robustness(d, spec, 1, 3);
    EXPECT_EQ(r.stats.n, 1u);
    EXPECT_EQ(r.stats.std, 0.0);
    EXPECT_EQ(r.stats.mean, run_trial(r.configs[0], spec).score);
}

TEST(Robustness, SeededDeterminism) {
    const OptimizerSpec spec = with_rates(Family::Sgd, UpdateKind::Hybrid, 5e-3, 0.5, 5e-3);
    const auto a = evaluate_robustness(convex2d_eval_distribution(), spec, 40, 77, 1);
    const auto b = evaluate_robustness(convex2d_eval_distribution(), spec, 40, 77, 3);
    EXPECT_EQ(a.stats.scores, b.stats.scores);
    EXPECT_EQ(a.stats.mean, b.stats.mean);
    EXPECT_EQ(a.stats.std, b.stats.std);
}

TEST(Robustness, DivergedTrialsExcludedFromMoments) {
    const ScoreStats s = summarize_scores({0.1, INFINITY, 0.3});
    EXPECT_EQ(s.n, 2u);
    EXPECT_EQ(s.diverged, 1u);
    EXPECT_DOUBLE_EQ(s.mean, 0.2);
    EXPECT_DOUBLE_EQ(s.std, std::sqrt(0.02));
    EXPECT_EQ(s.scores.size(), 3u);
}

TEST(Robustness, ScoreIsScaleInvariant) {
    EXPECT_DOUBLE_EQ(score_of(2.0, 8.0), score_of(2e-3, 8e-3));
    EXPECT_EQ(score_of(5.0, 5.0), 1.0);
}

TEST(SurfaceScan, Shape) {
    const TaskConfig task = convex_tuning_task();
    const auto [r1, r2] = default_scan_ranges(task);
    EXPECT_DOUBLE_EQ(r1.lo, 40.0);
    EXPECT_DOUBLE_EQ(r1.hi, 60.0);
    const ScoreGrid g = surface_scan(task, make_spec(Family::Adam, UpdateKind::Additive), r1, r2, 2);
    ASSERT_EQ(g.x1_axis.size(), 25u);
    ASSERT_EQ(g.x2_axis.size(), 25u);
    ASSERT_EQ(g.scores.size(), 25u);
    std::size_t entries = 0;
    for (const auto& row : g.scores) entries += row.size();
    EXPECT_EQ(entries, 625u);
    for (std::size_t i = 1; i < 25; ++i) {
        EXPECT_LT(g.x1_axis[i - 1], g.x1_axis[i]);
        EXPECT_LT(g.x2_axis[i - 1], g.x2_axis[i]);
    }
    EXPECT_EQ(g.x1_axis.front(), 40.0);
    EXPECT_EQ(g.x1_axis.back(), 60.0);
}

TEST(SurfaceScan, CollapsedRangesGiveConstantGrid) {
    const TaskConfig task = convex_tuning_task();
    const OptimizerSpec spec = with_rates(Family::Sgd, UpdateKind::Hybrid, 5e-3, 0.5, 5e-3);
    const ScoreGrid g = surface_scan(task, spec, {50.0, 50.0}, {50.0, 50.0});
    const double expected = run_trial(task, spec).score;
    for (const auto& row : g.scores) {
        for (double s : row) EXPECT_EQ(s, expected);
    }
}

TEST(SurfaceScan, RejectsInvertedRange) {
    EXPECT_THROW(surface_scan(convex_tuning_task(), make_spec(Family::Sgd, UpdateKind::Additive),
                              {60.0, 40.0}, {40.0, 60.0}),
                 Error);
}

TEST(SurfaceScan, HybridWorstCaseBeatsAdditive) {
    // Tuned points of the 1-5 reference grid on the Convex2D tuning task.
    const TaskConfig task = convex_tuning_task();
    const OptimizerSpec add = with_rates(Family::Sgd, UpdateKind::Additive, 1e-3, 1.0, 0.1);
    const OptimizerSpec hyb = with_rates(Family::Sgd, UpdateKind::Hybrid, 5e-3, 0.5, 5e-3);
    const AxisRange r{40.0, 60.0};
    EXPECT_LT(max_score(surface_scan(task, hyb, r, r, 2)), max_score(surface_scan(task, add, r, r, 2)));
}
