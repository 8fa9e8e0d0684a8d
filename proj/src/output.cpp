#include "altopt/output.hpp"

#include <cmath>
#include <fstream>

#include <fmt/format.h>
#include <json.hpp>

#include "altopt/config.hpp"
#include "altopt/error.hpp"

namespace altopt {

using ojson = nlohmann::ordered_json;

std::string format_real(double value) {
    if (std::isnan(value)) return "nan";
    if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
    return fmt::format("{:.15e}", value);
}

namespace {

ojson real(double v) {
    return std::isfinite(v) ? ojson(v) : ojson(nullptr);
}

ojson spec_json(const OptimizerSpec& spec) {
    ojson j;
    j["family"] = to_string(spec.family);
    j["rule"] = to_string(spec.update.kind);
    j["eta"] = spec.update.eta;
    j["eta_in"] = spec.update.eta_in;
    j["eta_out"] = spec.update.eta_out;
    j["gamma"] = spec.update.gamma;
    j["beta1"] = spec.momentum.beta1;
    j["beta2"] = spec.adaptive.beta2;
    j["epsilon"] = spec.adaptive.epsilon;
    return j;
}

ojson task_json(const TaskConfig& task) {
    ojson j;
    j["function"] = to_string(task.function);
    j["alpha"] = task.alpha;
    j["beta"] = task.beta;
    j["x0"] = {task.x0[0], task.x0[1]};
    j["iterations"] = task.iterations;
    return j;
}

ojson mean_std_json(const MeanStd& m) {
    return {{"mean", real(m.mean)}, {"std", real(m.std)}};
}

std::string dump(const ojson& j) {
    return j.dump(2) + "\n";
}

}  // namespace

std::string leaderboard_csv(const TuneResult& result) {
    std::string out = "rank,eta,eta_in,eta_out,final_distance,diverged\n";
    for (std::size_t i = 0; i < result.leaderboard.size(); ++i) {
        const LeaderboardEntry& e = result.leaderboard[i];
        out += fmt::format("{},{},{},{},{},{}\n", i + 1, format_real(e.spec.update.eta),
                           format_real(e.spec.update.eta_in), format_real(e.spec.update.eta_out),
                           format_real(e.final_distance), e.diverged ? 1 : 0);
    }
    return out;
}

std::string best_json(const TaskConfig& task, const TuneResult& result) {
    ojson j;
    j["schema_version"] = kSchemaVersion;
    j["task"] = task_json(task);
    j["optimizer"] = spec_json(result.best_spec);
    j["final_distance"] = real(result.best_final_distance);
    j["grid_points"] = result.leaderboard.size();
    j["diverged"] = result.diverged;
    return dump(j);
}

std::string trajectory_csv(const TrialRecord& record) {
    std::string out = "iteration,x1,x2,distance\n";
    for (std::size_t i = 0; i < record.distances.size(); ++i) {
        out += fmt::format("{},{},{},{}\n", i, format_real(record.path[i][0]),
                           format_real(record.path[i][1]), format_real(record.distances[i]));
    }
    return out;
}

std::string trial_json(const TaskConfig& task, const OptimizerSpec& spec, const TrialRecord& record) {
    ojson j;
    j["task"] = task_json(task);
    j["optimizer"] = spec_json(spec);
    j["initial_distance"] = real(record.initial_distance);
    j["final_distance"] = real(record.final_distance);
    j["score"] = real(record.score);
    j["iterations_run"] = record.iterations_run;
    j["diverged"] = record.diverged;
    return dump(j);
}

std::string scores_csv(const RobustnessResult& result) {
    std::string out = "index,x0_1,x0_2,alpha,beta,iterations,final_distance,score,diverged\n";
    for (std::size_t i = 0; i < result.trials.size(); ++i) {
        const TaskConfig& c = result.configs[i];
        const TrialRecord& r = result.trials[i];
        out += fmt::format("{},{},{},{},{},{},{},{},{}\n", i, format_real(c.x0[0]),
                           format_real(c.x0[1]), format_real(c.alpha), format_real(c.beta),
                           c.iterations, format_real(r.final_distance), format_real(r.score),
                           r.diverged ? 1 : 0);
    }
    return out;
}

std::string robustness_json(const OptimizerSpec& spec, std::uint64_t seed, const RobustnessResult& result) {
    ojson j;
    j["optimizer"] = spec_json(spec);
    j["seed"] = seed;
    j["runs"] = result.trials.size();
    j["mean"] = real(result.stats.mean);
    j["std"] = real(result.stats.std);
    j["n"] = result.stats.n;
    j["diverged"] = result.stats.diverged;
    return dump(j);
}

std::string surface_csv(const ScoreGrid& grid) {
    std::string out = "i,j,x1,x2,final_distance,score\n";
    for (std::size_t i = 0; i < grid.x1_axis.size(); ++i) {
        for (std::size_t j = 0; j < grid.x2_axis.size(); ++j) {
            out += fmt::format("{},{},{},{},{},{}\n", i, j, format_real(grid.x1_axis[i]),
                               format_real(grid.x2_axis[j]), format_real(grid.final_distances[i][j]),
                               format_real(grid.scores[i][j]));
        }
    }
    return out;
}

std::string surface_matrix_csv(const ScoreGrid& grid) {
    std::string out = "x2\\x1";
    for (double x1 : grid.x1_axis) out += "," + format_real(x1);
    out += "\n";
    for (std::size_t j = 0; j < grid.x2_axis.size(); ++j) {
        out += format_real(grid.x2_axis[j]);
        for (std::size_t i = 0; i < grid.x1_axis.size(); ++i) out += "," + format_real(grid.scores[i][j]);
        out += "\n";
    }
    return out;
}

std::string epochs_csv(const TrainingHistory& history) {
    std::string out = "epoch,train_acc,val_acc,loss\n";
    for (const EpochMetrics& m : history.epochs) {
        out += fmt::format("{},{},{},{}\n", m.epoch, format_real(m.train_accuracy),
                           format_real(m.validation_accuracy), format_real(m.loss));
    }
    return out;
}

std::string toy_summary_csv(const std::vector<std::string>& labels,
                            const std::vector<ProtocolSummary>& summaries) {
    std::string out = "optimizer,runs,epoch5_mean,epoch5_std,final_mean,final_std,sign_flips,diverged\n";
    for (std::size_t o = 0; o < summaries.size(); ++o) {
        const ProtocolSummary& s = summaries[o];
        out += fmt::format("{},{},{},{},{},{},{},{}\n", labels[o], s.runs.size(),
                           format_real(s.epoch5.mean), format_real(s.epoch5.std),
                           format_real(s.final.mean), format_real(s.final.std), s.sign_flips,
                           s.diverged);
    }
    return out;
}

std::string toy_summary_json(const ToyProtocol& protocol, const std::vector<std::string>& labels,
                             const std::vector<ProtocolSummary>& summaries) {
    ojson j;
    j["dataset"] = {{"size", protocol.dataset_size},
                    {"noise", protocol.dataset_noise},
                    {"seed", protocol.dataset_seed}};
    j["hidden"] = protocol.hidden;
    j["activation"] = to_string(protocol.activation);
    j["init"] = to_string(protocol.init);
    j["seed"] = protocol.seed;
    j["runs"] = protocol.runs;
    ojson opts = ojson::array();
    for (std::size_t o = 0; o < summaries.size(); ++o) {
        const ProtocolSummary& s = summaries[o];
        ojson entry;
        entry["label"] = labels[o];
        entry["optimizer"] = spec_json(s.optimizer);
        entry["epoch5"] = mean_std_json(s.epoch5);
        entry["final"] = mean_std_json(s.final);
        entry["sign_flips"] = s.sign_flips;
        entry["diverged"] = s.diverged;
        ojson runs = ojson::array();
        for (std::size_t i = 0; i < s.runs.size(); ++i) {
            const TrainingHistory& h = s.runs[i];
            runs.push_back({{"gain", s.configs[i].gain},
                            {"epochs", s.configs[i].epochs},
                            {"epochs_run", h.epochs.size()},
                            {"epoch5", h.epoch5_validation()},
                            {"final", h.final_validation()},
                            {"sign_flips", h.sign_flips},
                            {"diverged", h.diverged}});
        }
        entry["runs"] = std::move(runs);
        opts.push_back(std::move(entry));
    }
    j["optimizers"] = std::move(opts);
    return dump(j);
}

void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << content;
    if (!out) throw std::runtime_error("failed to write " + path.string());
}

}  // namespace altopt
