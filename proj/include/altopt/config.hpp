#pragma once

// Run configuration files: JSON with // and /* */ comments, a mandatory
// "schema_version", and no unknown keys anywhere.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "altopt/harness.hpp"
#include "altopt/mlp.hpp"
#include "altopt/objectives.hpp"
#include "altopt/optim.hpp"
#include "altopt/tuner.hpp"

namespace altopt {

inline constexpr int kSchemaVersion = 1;

// An optimizer is given inline, taken from a best.json written by `tune`
// (tuned_spec), or produced by re-running the tuning described in another
// config (tuned_from). Relative paths resolve against the referring file.
struct OptimizerEntry {
    std::optional<OptimizerSpec> spec;
    std::optional<std::filesystem::path> tuned_spec;
    std::optional<std::filesystem::path> tuned_from;
    std::string label;
    std::vector<std::string> missing_rates;  // "file: field 'path'" of rates with no default
};

struct ToyConfig {
    ToyProtocol protocol;
    std::vector<OptimizerEntry> optimizers;
};

struct RunConfig {
    std::filesystem::path source;
    std::optional<std::uint64_t> seed;
    std::optional<TaskConfig> task;
    std::optional<OptimizerEntry> optimizer;
    std::optional<RateGrids> grids;
    std::optional<EvalDistribution> evaluation;
    std::size_t runs = 100;
    std::optional<std::pair<AxisRange, AxisRange>> scan_ranges;
    std::size_t scan_points = kScanPoints;
    std::optional<ToyConfig> toy;
};

/// Throws Error(InvalidConfig) with "file:line:column" for syntax errors and
/// the dotted field path for schema errors.
RunConfig parse_config(const std::string& text, const std::filesystem::path& source = "<memory>");
RunConfig load_config(const std::filesystem::path& path);

/// With `rates_from_grid` the rates are about to be replaced by a grid
/// search, so rates without defaults may be left out.
OptimizerSpec resolve_optimizer(const OptimizerEntry& entry, unsigned parallelism = 1,
                                bool rates_from_grid = false);

/// Label used for file names and summaries, e.g. "sgd-hybrid".
std::string optimizer_label(const OptimizerEntry& entry, const OptimizerSpec& resolved);

}  // namespace altopt
