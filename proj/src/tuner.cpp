#include "altopt/tuner.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <string>

#include <fmt/format.h>

#include "altopt/error.hpp"
#include "altopt/harness.hpp"
#include "altopt/parallel.hpp"

namespace altopt {

std::string_view to_string(GridSpacing spacing) {
    return spacing == GridSpacing::LogUniform ? "log-uniform" : "one-five";
}

GridSpacing parse_grid_spacing(std::string_view name) {
    if (name == "log-uniform") return GridSpacing::LogUniform;
    if (name == "one-five") return GridSpacing::OneFive;
    throw Error(ErrorKind::InvalidConfig,
                "unknown grid spacing '" + std::string(name) + "' (expected log-uniform or one-five)");
}

namespace {

// Same double as the literal "<mantissa>e<exponent>".
double decimal(int mantissa, int exponent) {
    const std::string text = fmt::format("{}e{}", mantissa, exponent);
    return std::strtod(text.c_str(), nullptr);
}

constexpr double kRelTol = 1e-9;

}  // namespace

std::vector<double> build_grid(const GridSpec& spec) {
    if (!(spec.lo > 0.0) || !std::isfinite(spec.hi)) {
        throw Error(ErrorKind::InvalidGrid, "grid lower bound must be positive");
    }
    if (!(spec.lo <= spec.hi)) throw Error(ErrorKind::InvalidGrid, "grid needs lo <= hi");

    std::vector<double> grid{spec.lo};
    if (spec.lo == spec.hi) return grid;
    const double stop = spec.hi * (1.0 - kRelTol);

    if (spec.spacing == GridSpacing::LogUniform) {
        if (!(spec.log10_step > 0.0)) {
            throw Error(ErrorKind::InvalidGrid, "grid log10 step must be positive");
        }
        for (int k = 1;; ++k) {
            const double v = spec.lo * std::pow(10.0, k * spec.log10_step);
            if (v >= stop) break;
            grid.push_back(v);
        }
    } else {
        const int first = static_cast<int>(std::floor(std::log10(spec.lo))) - 1;
        const int last = static_cast<int>(std::ceil(std::log10(spec.hi))) + 1;
        for (int e = first; e <= last; ++e) {
            for (int mantissa : {1, 5}) {
                const double v = decimal(mantissa, e);
                if (v > grid.back() * (1.0 + kRelTol) && v < stop) grid.push_back(v);
            }
        }
    }
    grid.push_back(spec.hi);
    return grid;
}

RateGrids reference_grids(GridSpacing spacing) {
    return {build_grid({1e-6, 5e2, 0.5, spacing}), build_grid({1e-1, 5e1, 0.5, spacing}),
            build_grid({1e-4, 1.0, 0.5, spacing})};
}

TuneResult grid_search(const TaskConfig& task, const OptimizerSpec& base, const RateGrids& grids,
                       unsigned parallelism) {
    validate(task);
    const UpdateKind kind = base.update.kind;
    const bool uses_eta = kind != UpdateKind::Multiplicative;
    const bool uses_pair = kind != UpdateKind::Additive;

    if (uses_eta && grids.eta.empty()) throw Error(ErrorKind::InvalidGrid, "eta grid is empty");
    if (uses_pair && (grids.eta_in.empty() || grids.eta_out.empty())) {
        throw Error(ErrorKind::InvalidGrid, "eta_in/eta_out grid is empty");
    }

    const std::vector<double> fixed_eta{base.update.eta};
    const std::vector<double> fixed_in{base.update.eta_in};
    const std::vector<double> fixed_out{base.update.eta_out};
    const auto& etas = uses_eta ? grids.eta : fixed_eta;
    const auto& ins = uses_pair ? grids.eta_in : fixed_in;
    const auto& outs = uses_pair ? grids.eta_out : fixed_out;

    std::vector<OptimizerSpec> points;
    points.reserve(etas.size() * ins.size() * outs.size());
    for (double eta : etas) {
        for (double eta_in : ins) {
            for (double eta_out : outs) {
                OptimizerSpec spec = base;
                spec.update.eta = eta;
                spec.update.eta_in = eta_in;
                spec.update.eta_out = eta_out;
                validate(spec);
                points.push_back(spec);
            }
        }
    }

    TuneResult result;
    result.leaderboard.resize(points.size());
    parallel_for(points.size(), parallelism, [&](std::size_t i) {
        const TrialRecord record = run_trial(task, points[i]);
        result.leaderboard[i] = {points[i], record.final_distance, record.diverged};
    });

    std::stable_sort(result.leaderboard.begin(), result.leaderboard.end(),
                     [](const LeaderboardEntry& a, const LeaderboardEntry& b) {
                         if (a.final_distance != b.final_distance) {
                             return a.final_distance < b.final_distance;
                         }
                         if (a.spec.update.eta != b.spec.update.eta) {
                             return a.spec.update.eta < b.spec.update.eta;
                         }
                         if (a.spec.update.eta_in != b.spec.update.eta_in) {
                             return a.spec.update.eta_in < b.spec.update.eta_in;
                         }
                         return a.spec.update.eta_out < b.spec.update.eta_out;
                     });
    for (const auto& entry : result.leaderboard) result.diverged += entry.diverged ? 1 : 0;
    result.best_spec = result.leaderboard.front().spec;
    result.best_final_distance = result.leaderboard.front().final_distance;
    return result;
}

}  // namespace altopt
