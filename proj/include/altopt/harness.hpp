#pragma once

#include <cstddef>
#include <cstdint>
#include <utility>
#include <vector>

#include "altopt/objectives.hpp"
#include "altopt/optim.hpp"

namespace altopt {

struct TrialRecord {
    std::vector<double> distances;  // iterations_run + 1 entries, starting at x0
    std::vector<Point2> path;       // parameter vector after each recorded step
    double initial_distance = 0.0;
    double final_distance = 0.0;    // +inf when diverged
    double score = 0.0;             // final / initial, +inf when diverged
    bool diverged = false;
    std::int64_t iterations_run = 0;
};

/// Runs task.iterations full-gradient steps from task.x0. Divergence is
/// reported through the record, never thrown.
TrialRecord run_trial(const TaskConfig& task, const OptimizerSpec& spec);

double score_of(double final_distance, double initial_distance);

// A task field that is either fixed (std == 0) or drawn from N(mean, std).
struct Sampler {
    double mean = 0.0;
    double std = 0.0;

    static Sampler fixed(double value) { return {value, 0.0}; }
    bool is_fixed() const { return std == 0.0; }
};

struct EvalDistribution {
    FunctionId function = FunctionId::Convex2D;
    Sampler x0_1;
    Sampler x0_2;
    Sampler alpha;
    Sampler beta;
    Sampler iterations;
};

// Evaluation distributions centred on the two reference tuning tasks.
EvalDistribution convex2d_eval_distribution();
EvalDistribution rosenbrock_eval_distribution();

/// Round to nearest (halves away from zero), clamp to >= 1.
std::int64_t round_iterations(double draw);

/// Deterministic in (seed, index); beta is redrawn until positive.
TaskConfig sample_eval_config(const EvalDistribution& dist, std::uint64_t seed,
                              std::uint64_t index);

struct ScoreStats {
    double mean = 0.0;
    double std = 0.0;             // sample standard deviation (n - 1); 0 when n == 1
    std::size_t n = 0;            // trials included in mean/std
    std::size_t diverged = 0;     // trials excluded from mean/std
    std::vector<double> scores;   // every trial in index order, +inf if diverged
};

ScoreStats summarize_scores(const std::vector<double>& scores);

struct RobustnessResult {
    ScoreStats stats;
    std::vector<TaskConfig> configs;
    std::vector<TrialRecord> trials;
};

RobustnessResult evaluate_robustness(const EvalDistribution& dist, const OptimizerSpec& spec,
                                     std::size_t n, std::uint64_t seed,
                                     unsigned parallelism = 1);

struct AxisRange {
    double lo = 0.0;
    double hi = 0.0;
};

inline constexpr std::size_t kScanPoints = 25;

struct ScoreGrid {
    std::vector<double> x1_axis;
    std::vector<double> x2_axis;
    std::vector<std::vector<double>> scores;  // scores[i][j] starts at (x1_axis[i], x2_axis[j])
    std::vector<std::vector<double>> final_distances;
};

/// Tuning start +/- 20% per coordinate.
std::pair<AxisRange, AxisRange> default_scan_ranges(const TaskConfig& task);

std::vector<double> linspace(const AxisRange& range, std::size_t points);

ScoreGrid surface_scan(const TaskConfig& task_base, const OptimizerSpec& spec,
                       const AxisRange& x1_range, const AxisRange& x2_range,
                       unsigned parallelism = 1, std::size_t points = kScanPoints);

}  // namespace altopt
