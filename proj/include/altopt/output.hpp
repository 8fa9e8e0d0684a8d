#pragma once

// Deterministic CSV/JSON renderings of results. Reals are written in
// scientific notation with 16 significant digits; infinities as "inf" in
// CSV and null in JSON. Lines end with '\n'.

#include <filesystem>
#include <string>
#include <vector>

#include "altopt/harness.hpp"
#include "altopt/mlp.hpp"
#include "altopt/tuner.hpp"

namespace altopt {

std::string format_real(double value);

std::string leaderboard_csv(const TuneResult& result);
std::string best_json(const TaskConfig& task, const TuneResult& result);

std::string trajectory_csv(const TrialRecord& record);
std::string trial_json(const TaskConfig& task, const OptimizerSpec& spec, const TrialRecord& record);

std::string scores_csv(const RobustnessResult& result);
std::string robustness_json(const OptimizerSpec& spec, std::uint64_t seed, const RobustnessResult& result);

/// One row per initial point: i, j, x1, x2, final_distance, score.
std::string surface_csv(const ScoreGrid& grid);
/// Score matrix with x2 down the rows and x1 across the columns.
std::string surface_matrix_csv(const ScoreGrid& grid);

std::string epochs_csv(const TrainingHistory& history);
std::string toy_summary_csv(const std::vector<std::string>& labels,
                            const std::vector<ProtocolSummary>& summaries);
std::string toy_summary_json(const ToyProtocol& protocol, const std::vector<std::string>& labels,
                             const std::vector<ProtocolSummary>& summaries);

void write_file(const std::filesystem::path& path, const std::string& content);

}  // namespace altopt
