#include "altopt/harness.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "altopt/error.hpp"
#include "altopt/parallel.hpp"

namespace altopt {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::mt19937_64 stream_for(std::uint64_t seed, std::uint64_t index) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
    return std::mt19937_64(seq);
}

double draw(const Sampler& s, std::mt19937_64& rng) {
    if (s.is_fixed()) return s.mean;
    std::normal_distribution<double> normal(s.mean, s.std);
    return normal(rng);
}

}  // namespace

double score_of(double final_distance, double initial_distance) {
    if (!std::isfinite(final_distance)) return kInf;
    if (initial_distance == 0.0) return final_distance == 0.0 ? 0.0 : kInf;
    return final_distance / initial_distance;
}

TrialRecord run_trial(const TaskConfig& task, const OptimizerSpec& spec) {
    const Objective objective = make_objective(task);
    validate(spec);

    TrialRecord record;
    record.distances.reserve(static_cast<std::size_t>(task.iterations) + 1);
    record.path.reserve(static_cast<std::size_t>(task.iterations) + 1);

    Point2 x = task.x0;
    OptimizerState state = init_state(2);
    record.initial_distance = distance_to_minimum(x, objective);
    record.distances.push_back(record.initial_distance);
    record.path.push_back(x);

    for (std::int64_t it = 0; it < task.iterations; ++it) {
        const Point2 g = objective.grad(x);
        try {
            step(spec, state, x, g);
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::Divergence && e.kind() != ErrorKind::NonFiniteGradient) throw;
            record.diverged = true;
            break;
        }
        const double d = distance_to_minimum(x, objective);
        if (!std::isfinite(d)) {
            record.diverged = true;
            break;
        }
        record.distances.push_back(d);
        record.path.push_back(x);
        ++record.iterations_run;
    }

    record.final_distance = record.diverged ? kInf : record.distances.back();
    record.score = score_of(record.final_distance, record.initial_distance);
    return record;
}

EvalDistribution convex2d_eval_distribution() {
    return {FunctionId::Convex2D, {50.0, 5.0}, {50.0, 5.0}, {1.0, 1.0}, {20.0, 2.0}, {100.0, 10.0}};
}

EvalDistribution rosenbrock_eval_distribution() {
    return {FunctionId::Rosenbrock, {0.5, 0.1}, {3.0, 1.0}, Sampler::fixed(1.0), {60.0, 6.0},
            {100.0, 10.0}};
}

std::int64_t round_iterations(double draw) {
    if (!std::isfinite(draw)) return 1;
    const auto rounded = static_cast<std::int64_t>(std::llround(draw));
    return rounded < 1 ? 1 : rounded;
}

TaskConfig sample_eval_config(const EvalDistribution& dist, std::uint64_t seed,
                              std::uint64_t index) {
    auto rng = stream_for(seed, index);
    TaskConfig task;
    task.function = dist.function;
    task.x0 = {draw(dist.x0_1, rng), draw(dist.x0_2, rng)};
    task.alpha = draw(dist.alpha, rng);
    if (dist.beta.is_fixed() && !(dist.beta.mean > 0.0)) {
        throw Error(ErrorKind::InvalidConfig, "fixed beta must be positive");
    }
    do {
        task.beta = draw(dist.beta, rng);
    } while (!(task.beta > 0.0));
    task.iterations = round_iterations(draw(dist.iterations, rng));
    task.seed = seed;
    return task;
}

ScoreStats summarize_scores(const std::vector<double>& scores) {
    ScoreStats stats;
    stats.scores = scores;
    double sum = 0.0;
    for (double s : scores) {
        if (std::isfinite(s)) {
            sum += s;
            ++stats.n;
        } else {
            ++stats.diverged;
        }
    }
    if (stats.n == 0) {
        stats.mean = std::numeric_limits<double>::quiet_NaN();
        stats.std = std::numeric_limits<double>::quiet_NaN();
        return stats;
    }
    stats.mean = sum / static_cast<double>(stats.n);
    if (stats.n > 1) {
        double ss = 0.0;
        for (double s : scores) {
            if (std::isfinite(s)) ss += (s - stats.mean) * (s - stats.mean);
        }
        stats.std = std::sqrt(ss / static_cast<double>(stats.n - 1));
    }
    return stats;
}

RobustnessResult evaluate_robustness(const EvalDistribution& dist, const OptimizerSpec& spec,
                                     std::size_t n, std::uint64_t seed, unsigned parallelism) {
    if (n == 0) throw Error(ErrorKind::InvalidConfig, "robustness evaluation needs n >= 1");
    validate(spec);

    RobustnessResult result;
    result.configs.resize(n);
    result.trials.resize(n);
    for (std::size_t i = 0; i < n; ++i) result.configs[i] = sample_eval_config(dist, seed, i);

    parallel_for(n, parallelism, [&](std::size_t i) {
        result.trials[i] = run_trial(result.configs[i], spec);
    });

    std::vector<double> scores(n);
    for (std::size_t i = 0; i < n; ++i) scores[i] = result.trials[i].score;
    result.stats = summarize_scores(scores);
    return result;
}

std::pair<AxisRange, AxisRange> default_scan_ranges(const TaskConfig& task) {
    auto around = [](double c) {
        const double half = 0.2 * std::abs(c);
        return AxisRange{c - half, c + half};
    };
    return {around(task.x0[0]), around(task.x0[1])};
}

std::vector<double> linspace(const AxisRange& range, std::size_t points) {
    if (points == 0) throw Error(ErrorKind::InvalidConfig, "axis needs at least one point");
    if (!(range.lo <= range.hi)) throw Error(ErrorKind::InvalidConfig, "axis range needs lo <= hi");
    std::vector<double> axis(points);
    if (points == 1) {
        axis[0] = range.lo;
        return axis;
    }
    const double span = range.hi - range.lo;
    for (std::size_t k = 0; k < points; ++k) {
        axis[k] = range.lo + span * static_cast<double>(k) / static_cast<double>(points - 1);
    }
    axis.back() = range.hi;
    return axis;
}

ScoreGrid surface_scan(const TaskConfig& task_base, const OptimizerSpec& spec,
                       const AxisRange& x1_range, const AxisRange& x2_range,
                       unsigned parallelism, std::size_t points) {
    validate(task_base);
    validate(spec);
    ScoreGrid grid;
    grid.x1_axis = linspace(x1_range, points);
    grid.x2_axis = linspace(x2_range, points);
    grid.scores.assign(points, std::vector<double>(points, 0.0));
    grid.final_distances = grid.scores;

    parallel_for(points * points, parallelism, [&](std::size_t k) {
        const std::size_t i = k / points;
        const std::size_t j = k % points;
        TaskConfig task = task_base;
        task.x0 = {grid.x1_axis[i], grid.x2_axis[j]};
        const TrialRecord r = run_trial(task, spec);
        grid.scores[i][j] = r.score;
        grid.final_distances[i][j] = r.final_distance;
    });
    return grid;
}

}  // namespace altopt
