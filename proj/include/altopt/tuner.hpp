#pragma once

#include <cstddef>
#include <string_view>
#include <vector>

#include "altopt/objectives.hpp"
#include "altopt/optim.hpp"

namespace altopt {

enum class GridSpacing {
    LogUniform,  // lo * 10^(k * log10_step), then hi
    OneFive,     // 1 and 5 times each power of ten inside [lo, hi], plus lo and hi
};

std::string_view to_string(GridSpacing spacing);
GridSpacing parse_grid_spacing(std::string_view name);

struct GridSpec {
    double lo = 1.0;
    double hi = 1.0;
    double log10_step = 0.5;
    GridSpacing spacing = GridSpacing::LogUniform;
};

/// Strictly increasing, starts at lo and ends at hi.
std::vector<double> build_grid(const GridSpec& spec);

// Search space over the rates used by the rule being tuned. Lists for rates
// the rule does not use are ignored.
struct RateGrids {
    std::vector<double> eta;
    std::vector<double> eta_in;
    std::vector<double> eta_out;
};

struct LeaderboardEntry {
    OptimizerSpec spec;
    double final_distance = 0.0;  // +inf when diverged
    bool diverged = false;
};

struct TuneResult {
    OptimizerSpec best_spec;
    double best_final_distance = 0.0;
    std::vector<LeaderboardEntry> leaderboard;  // ascending distance, then smaller rates
    std::size_t diverged = 0;

    bool all_diverged() const { return diverged == leaderboard.size(); }
};

/// Evaluates every point of the Cartesian grid for base.update.kind, each as
/// a full run of `task`. Family constants (betas, epsilon, gamma) come from
/// `base`.
TuneResult grid_search(const TaskConfig& task, const OptimizerSpec& base,
                       const RateGrids& grids, unsigned parallelism = 1);

/// The search space used for the 2-D tuning runs: additive eta over
/// [1e-6, 5e2], eta_in over [1e-1, 5e1], eta_out over [1e-4, 1].
RateGrids reference_grids(GridSpacing spacing);

}  // namespace altopt
