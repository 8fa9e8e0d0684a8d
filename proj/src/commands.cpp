#include "altopt/commands.hpp"

#include <algorithm>
#include <cstdlib>
#include <map>
#include <ostream>
#include <set>
#include <thread>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <fmt/ostream.h>

#include "altopt/config.hpp"
#include "altopt/error.hpp"
#include "altopt/output.hpp"

namespace altopt {

namespace fs = std::filesystem;

namespace {

// Raised for problems the user can fix by changing flags or the config.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

template <typename T>
const T& require_section(const std::optional<T>& section, const RunConfig& config, const char* name,
                         const std::string& command) {
    if (!section) {
        throw UsageError(fmt::format("{}: field '{}': missing required field (needed by {})",
                                     config.source.string(), name, command));
    }
    return *section;
}

// Output files are only ever created inside a directory that is empty or
// that the user explicitly allowed us to overwrite.
void prepare_output_dir(const RunManifest& m, const std::vector<fs::path>& files) {
    if (fs::exists(m.output_dir)) {
        if (!fs::is_directory(m.output_dir)) {
            throw UsageError(fmt::format("output path {} is not a directory", m.output_dir.string()));
        }
        if (!fs::is_empty(m.output_dir) && !m.overwrite) {
            throw UsageError(fmt::format("output directory {} is not empty; pass --overwrite to replace its results",
                                         m.output_dir.string()));
        }
    }
    fs::create_directories(m.output_dir);
    for (const fs::path& f : files) {
        if (!f.parent_path().empty()) fs::create_directories(m.output_dir / f.parent_path());
    }
}

void check_grids(const RateGrids& grids, UpdateKind rule, const RunConfig& config) {
    auto need = [&](const std::vector<double>& g, const char* name) {
        if (g.empty()) {
            throw UsageError(fmt::format("{}: field 'grids.{}': required for the {} rule",
                                         config.source.string(), name, to_string(rule)));
        }
    };
    if (rule != UpdateKind::Multiplicative) need(grids.eta, "eta");
    if (rule != UpdateKind::Additive) {
        need(grids.eta_in, "eta_in");
        need(grids.eta_out, "eta_out");
    }
}

std::string rates_text(const OptimizerSpec& spec) {
    switch (spec.update.kind) {
        case UpdateKind::Additive:
            return fmt::format("eta={}", spec.update.eta);
        case UpdateKind::Multiplicative:
            return fmt::format("eta_in={} eta_out={}", spec.update.eta_in, spec.update.eta_out);
        case UpdateKind::Hybrid:
            break;
    }
    return fmt::format("eta={} eta_in={} eta_out={} gamma={}", spec.update.eta, spec.update.eta_in,
                       spec.update.eta_out, spec.update.gamma);
}

}  // namespace

int cmd_tune(const RunManifest& m, std::ostream& out) {
    const RunConfig config = load_config(m.config_path);
    const TaskConfig& task = require_section(config.task, config, "task", "tune");
    const OptimizerEntry& entry = require_section(config.optimizer, config, "optimizer", "tune");
    const RateGrids& grids = require_section(config.grids, config, "grids", "tune");
    const OptimizerSpec base = resolve_optimizer(entry, m.parallelism, true);
    check_grids(grids, base.update.kind, config);
    prepare_output_dir(m, {"leaderboard.csv", "best.json"});

    const TuneResult result = grid_search(task, base, grids, m.parallelism);
    write_file(m.output_dir / "leaderboard.csv", leaderboard_csv(result));
    write_file(m.output_dir / "best.json", best_json(task, result));
    fmt::print(out, "{} {} on {}: {} grid points, {} diverged, best final distance {} ({})\n",
               to_string(base.family), to_string(base.update.kind), to_string(task.function),
               result.leaderboard.size(), result.diverged, format_real(result.best_final_distance),
               rates_text(result.best_spec));
    return result.all_diverged() ? kExitDiverged : kExitOk;
}

int cmd_trial(const RunManifest& m, std::ostream& out) {
    const RunConfig config = load_config(m.config_path);
    const TaskConfig& task = require_section(config.task, config, "task", "trial");
    const OptimizerEntry& entry = require_section(config.optimizer, config, "optimizer", "trial");
    const OptimizerSpec spec = resolve_optimizer(entry, m.parallelism);
    prepare_output_dir(m, {"trajectory.csv", "record.json"});

    const TrialRecord record = run_trial(task, spec);
    write_file(m.output_dir / "trajectory.csv", trajectory_csv(record));
    write_file(m.output_dir / "record.json", trial_json(task, spec, record));
    fmt::print(out, "{}: final distance {}, score {}{}\n", optimizer_label(entry, spec),
               format_real(record.final_distance), format_real(record.score),
               record.diverged ? " (diverged)" : "");
    return record.diverged ? kExitDiverged : kExitOk;
}

int cmd_robustness(const RunManifest& m, std::ostream& out) {
    const RunConfig config = load_config(m.config_path);
    const EvalDistribution& dist = require_section(config.evaluation, config, "evaluation", "robustness");
    const OptimizerEntry& entry = require_section(config.optimizer, config, "optimizer", "robustness");
    const OptimizerSpec spec = resolve_optimizer(entry, m.parallelism);
    const std::uint64_t seed = m.seed.value_or(config.seed.value_or(0));
    prepare_output_dir(m, {"scores.csv", "stats.json"});

    const RobustnessResult result = evaluate_robustness(dist, spec, config.runs, seed, m.parallelism);
    write_file(m.output_dir / "scores.csv", scores_csv(result));
    write_file(m.output_dir / "stats.json", robustness_json(spec, seed, result));
    fmt::print(out, "{} on {}: mean score {} std {} over {} trials, {} diverged ({})\n",
               optimizer_label(entry, spec), to_string(dist.function), format_real(result.stats.mean),
               format_real(result.stats.std), result.stats.n, result.stats.diverged, rates_text(spec));
    return result.stats.n == 0 ? kExitDiverged : kExitOk;
}

int cmd_scan(const RunManifest& m, std::ostream& out) {
    const RunConfig config = load_config(m.config_path);
    const TaskConfig& task = require_section(config.task, config, "task", "scan");
    const OptimizerEntry& entry = require_section(config.optimizer, config, "optimizer", "scan");
    const OptimizerSpec spec = resolve_optimizer(entry, m.parallelism);
    const auto [r1, r2] = config.scan_ranges.value_or(default_scan_ranges(task));
    prepare_output_dir(m, {"surface.csv", "surface_matrix.csv"});

    const ScoreGrid grid = surface_scan(task, spec, r1, r2, m.parallelism, config.scan_points);
    write_file(m.output_dir / "surface.csv", surface_csv(grid));
    write_file(m.output_dir / "surface_matrix.csv", surface_matrix_csv(grid));

    std::size_t diverged = 0;
    double worst = 0.0;
    for (const auto& row : grid.scores) {
        for (double s : row) {
            if (std::isinf(s)) ++diverged;
            else worst = std::max(worst, s);
        }
    }
    const std::size_t total = grid.x1_axis.size() * grid.x2_axis.size();
    fmt::print(out, "{} on {}: {} starts, max score {}, {} diverged\n", optimizer_label(entry, spec),
               to_string(task.function), total, format_real(worst), diverged);
    return diverged == total ? kExitDiverged : kExitOk;
}

int cmd_train_toy(const RunManifest& m, std::ostream& out) {
    const RunConfig config = load_config(m.config_path);
    const ToyConfig& toy = require_section(config.toy, config, "toy", "train-toy");
    ToyProtocol protocol = toy.protocol;
    if (m.seed) protocol.seed = *m.seed;
    else if (config.seed) protocol.seed = *config.seed;

    std::vector<OptimizerSpec> specs;
    std::vector<std::string> labels;
    for (const OptimizerEntry& e : toy.optimizers) {
        specs.push_back(resolve_optimizer(e, m.parallelism));
        labels.push_back(optimizer_label(e, specs.back()));
    }
    if (std::set<std::string>(labels.begin(), labels.end()).size() != labels.size()) {
        throw UsageError(fmt::format("{}: field 'toy.optimizers': labels must be unique",
                                     config.source.string()));
    }

    auto run_file = [&](std::size_t o, std::size_t i) {
        return fs::path("runs") / fmt::format("{}-run{:02}.csv", labels[o], i);
    };
    std::vector<fs::path> files{"summary.json", "summary.csv"};
    for (std::size_t o = 0; o < labels.size(); ++o) {
        for (std::size_t i = 0; i < protocol.runs; ++i) files.push_back(run_file(o, i));
    }
    prepare_output_dir(m, files);

    const auto summaries = run_gain_protocol(protocol, specs, m.parallelism);
    std::size_t diverged = 0, total = 0;
    for (std::size_t o = 0; o < summaries.size(); ++o) {
        for (std::size_t i = 0; i < summaries[o].runs.size(); ++i) {
            write_file(m.output_dir / run_file(o, i), epochs_csv(summaries[o].runs[i]));
        }
        diverged += summaries[o].diverged;
        total += summaries[o].runs.size();
        fmt::print(out, "{}: epoch 5 {:.4f} +/- {:.4f}, final {:.4f} +/- {:.4f}, sign flips {}, diverged {}\n",
                   labels[o], summaries[o].epoch5.mean, summaries[o].epoch5.std,
                   summaries[o].final.mean, summaries[o].final.std, summaries[o].sign_flips,
                   summaries[o].diverged);
    }
    write_file(m.output_dir / "summary.json", toy_summary_json(protocol, labels, summaries));
    write_file(m.output_dir / "summary.csv", toy_summary_csv(labels, summaries));
    return diverged == total ? kExitDiverged : kExitOk;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Optimizers with additive, multiplicative and hybrid update rules"};
    app.require_subcommand(1);

    RunManifest m;
    std::string config_path, out_dir;
    std::uint64_t seed = 0;
    m.parallelism = std::max(1u, std::thread::hardware_concurrency());

    const std::map<std::string, std::string> commands{
        {"tune", "Grid-search the rates of one optimizer on a task"},
        {"trial", "Run one optimizer from the task start and record its path"},
        {"robustness", "Score a fixed optimizer on randomly drawn tasks"},
        {"scan", "Score a fixed optimizer from a grid of starting points"},
        {"train-toy", "Train the toy classifier under randomized gains"},
    };
    std::vector<CLI::App*> subs;
    for (const auto& [name, help] : commands) {
        CLI::App* sub = app.add_subcommand(name, help);
        sub->add_option("--config", config_path, "Run configuration file")->required();
        sub->add_option("--out", out_dir,
                        fmt::format("Output directory (default: ${}/<command>-<config> or ./out/...)",
                                    kOutputRootEnv));
        sub->add_option("--seed", seed, "Override the configured seed");
        sub->add_option("--parallelism", m.parallelism, "Worker threads")->check(CLI::PositiveNumber);
        sub->add_flag("--overwrite", m.overwrite, "Replace results in a non-empty output directory");
        subs.push_back(sub);
    }

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitUsage;
    }

    for (CLI::App* sub : subs) {
        if (sub->parsed()) {
            m.command = sub->get_name();
            if (sub->count("--seed") > 0) m.seed = seed;
        }
    }
    m.config_path = config_path;
    if (!out_dir.empty()) {
        m.output_dir = out_dir;
    } else {
        const char* root = std::getenv(kOutputRootEnv);
        m.output_dir = fs::path(root && *root ? root : "out") /
                       fmt::format("{}-{}", m.command, m.config_path.stem().string());
    }

    try {
        if (m.command == "tune") return cmd_tune(m, out);
        if (m.command == "trial") return cmd_trial(m, out);
        if (m.command == "robustness") return cmd_robustness(m, out);
        if (m.command == "scan") return cmd_scan(m, out);
        return cmd_train_toy(m, out);
    } catch (const UsageError& e) {
        fmt::print(err, "error: {}\n", e.what());
        return kExitUsage;
    } catch (const Error& e) {
        fmt::print(err, "error: {}\n", e.what());
        const bool user_fixable = e.kind() == ErrorKind::InvalidConfig || e.kind() == ErrorKind::InvalidGrid ||
                                  e.kind() == ErrorKind::InvalidRate || e.kind() == ErrorKind::InvalidStep;
        return user_fixable ? kExitUsage : kExitFailure;
    } catch (const std::exception& e) {
        fmt::print(err, "error: {}\n", e.what());
        return kExitFailure;
    }
}

}  // namespace altopt
