#include "altopt/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

#include "altopt/error.hpp"

namespace altopt {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

[[noreturn]] void fail(const fs::path& file, const std::string& field, const std::string& msg) {
    throw Error(ErrorKind::InvalidConfig, fmt::format("{}: field '{}': {}", file.string(), field, msg));
}

// View of one JSON object that remembers which keys were read so the rest
// can be reported as unknown.
class Fields {
public:
    Fields(const json& node, std::string path, const fs::path& file)
        : node_(node), path_(std::move(path)), file_(file) {
        if (!node_.is_object()) fail(file_, where(), "expected an object");
    }

    std::string path(std::string_view key) const {
        return path_.empty() ? std::string(key) : path_ + "." + std::string(key);
    }
    const fs::path& file() const { return file_; }
    std::string where() const { return path_.empty() ? "<root>" : path_; }

    const json* find(std::string_view key) {
        const auto it = node_.find(std::string(key));
        if (it == node_.end()) return nullptr;
        seen_.insert(std::string(key));
        return &*it;
    }

    const json& require(std::string_view key) {
        const json* j = find(key);
        if (j == nullptr) fail(file_, path(key), "missing required field");
        return *j;
    }

    double number(const json& j, std::string_view key) const {
        if (!j.is_number()) fail(file_, path(key), "expected a number");
        const double v = j.get<double>();
        if (!std::isfinite(v)) fail(file_, path(key), "must be finite");
        return v;
    }
    double number(std::string_view key) { return number(require(key), key); }
    double number_or(std::string_view key, double fallback) {
        const json* j = find(key);
        return j ? number(*j, key) : fallback;
    }
    std::optional<double> optional_number(std::string_view key) {
        const json* j = find(key);
        if (j == nullptr) return std::nullopt;
        return number(*j, key);
    }

    std::int64_t integer(const json& j, std::string_view key) const {
        if (!j.is_number_integer()) fail(file_, path(key), "expected an integer");
        return j.get<std::int64_t>();
    }
    std::int64_t integer(std::string_view key) { return integer(require(key), key); }
    std::size_t count_or(std::string_view key, std::size_t fallback, std::size_t min = 1) {
        const json* j = find(key);
        if (j == nullptr) return fallback;
        const std::int64_t v = integer(*j, key);
        if (v < static_cast<std::int64_t>(min)) fail(file_, path(key), fmt::format("must be >= {}", min));
        return static_cast<std::size_t>(v);
    }
    std::uint64_t unsigned_or(std::string_view key, std::uint64_t fallback) {
        const json* j = find(key);
        if (j == nullptr) return fallback;
        if (!j->is_number_unsigned()) fail(file_, path(key), "expected a non-negative integer");
        return j->get<std::uint64_t>();
    }

    std::string string(const json& j, std::string_view key) const {
        if (!j.is_string()) fail(file_, path(key), "expected a string");
        return j.get<std::string>();
    }
    std::string string(std::string_view key) { return string(require(key), key); }

    // Parses a string field with one of the library's enum parsers,
    // rewording its error with the field path.
    template <typename Parse>
    auto choice(std::string_view key, Parse parse) {
        const std::string s = string(key);
        try {
            return parse(s);
        } catch (const Error& e) {
            fail(file_, path(key), e.what());
        }
    }

    Fields child(std::string_view key) { return Fields(require(key), path(key), file_); }

    void finish() const {
        for (const auto& [key, value] : node_.items()) {
            if (!seen_.contains(key)) fail(file_, path(key), "unknown field");
        }
    }

private:
    const json& node_;
    std::string path_;
    fs::path file_;
    std::set<std::string> seen_;
};

json parse_json(const std::string& text, const fs::path& file) {
    try {
        return json::parse(text, nullptr, true, true);
    } catch (const json::parse_error& e) {
        const std::size_t end = std::min<std::size_t>(e.byte == 0 ? 0 : e.byte - 1, text.size());
        const std::size_t line = 1 + std::count(text.begin(), text.begin() + end, '\n');
        const std::size_t last_nl = text.rfind('\n', end == 0 ? 0 : end - 1);
        const std::size_t column = last_nl == std::string::npos || end == 0 ? end + 1 : end - last_nl;
        std::string msg = e.what();
        if (const auto pos = msg.find("syntax error"); pos != std::string::npos) msg = msg.substr(pos);
        throw Error(ErrorKind::InvalidConfig,
                    fmt::format("{}:{}:{}: {}", file.string(), line, column, msg));
    }
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::InvalidConfig, "cannot read config file " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void check_schema_version(Fields& root) {
    const json& v = root.require("schema_version");
    if (root.integer(v, "schema_version") != kSchemaVersion) {
        fail(root.file(), "schema_version", fmt::format("unsupported version, expected {}", kSchemaVersion));
    }
}

TaskConfig parse_task(Fields f) {
    TaskConfig task;
    task.function = f.choice("function", parse_function_id);
    task.alpha = f.number("alpha");
    task.beta = f.number("beta");
    if (task.beta <= 0.0) fail(f.file(), f.path("beta"), "must be positive");
    const json& x0 = f.require("x0");
    if (!x0.is_array() || x0.size() != 2) fail(f.file(), f.path("x0"), "expected an array of two numbers");
    for (std::size_t k = 0; k < 2; ++k) task.x0[k] = f.number(x0[k], "x0");
    task.iterations = f.integer("iterations");
    if (task.iterations < 1) fail(f.file(), f.path("iterations"), "must be >= 1");
    f.finish();
    return task;
}

OptimizerSpec parse_inline_spec(Fields& f, std::vector<std::string>* missing) {
    const Family family = f.choice("family", parse_family);
    const UpdateKind rule = f.choice("rule", parse_update_kind);
    OptimizerSpec spec = make_spec(family, rule);
    const bool defaults = has_default_rates(family, rule);

    if (auto v = f.optional_number("eta")) spec.update.eta = *v;
    for (const char* key : {"eta_in", "eta_out"}) {
        const auto v = f.optional_number(key);
        if (v) {
            (std::string_view(key) == "eta_in" ? spec.update.eta_in : spec.update.eta_out) = *v;
        } else if (!defaults && missing) {
            missing->push_back(fmt::format("{}: field '{}'", f.file().string(), f.path(key)));
        }
    }
    spec.update.gamma = f.number_or("gamma", spec.update.gamma);
    spec.momentum.beta1 = f.number_or("beta1", spec.momentum.beta1);
    spec.adaptive.beta2 = f.number_or("beta2", spec.adaptive.beta2);
    spec.adaptive.epsilon = f.number_or("epsilon", spec.adaptive.epsilon);
    try {
        validate(spec);
    } catch (const Error& e) {
        fail(f.file(), f.where(), e.what());
    }
    return spec;
}

fs::path resolve_relative(const fs::path& file, const std::string& ref) {
    const fs::path p(ref);
    return p.is_absolute() ? p : file.parent_path() / p;
}

OptimizerEntry parse_optimizer(Fields f) {
    OptimizerEntry entry;
    if (const json* label = f.find("label")) entry.label = f.string(*label, "label");
    const json* tuned_spec = f.find("tuned_spec");
    const json* tuned_from = f.find("tuned_from");
    if (tuned_spec && tuned_from) {
        fail(f.file(), f.path("tuned_spec"), "give either tuned_spec or tuned_from, not both");
    }
    if (tuned_spec) {
        entry.tuned_spec = resolve_relative(f.file(), f.string(*tuned_spec, "tuned_spec"));
    } else if (tuned_from) {
        entry.tuned_from = resolve_relative(f.file(), f.string(*tuned_from, "tuned_from"));
    } else {
        entry.spec = parse_inline_spec(f, &entry.missing_rates);
    }
    f.finish();
    return entry;
}

std::vector<double> parse_grid(Fields& parent, std::string_view key, GridSpacing spacing) {
    const json* j = parent.find(key);
    if (j == nullptr) return {};
    if (j->is_array()) {
        std::vector<double> values;
        for (const json& v : *j) {
            const double x = parent.number(v, key);
            if (x < 0.0) fail(parent.file(), parent.path(key), "rates must be non-negative");
            values.push_back(x);
        }
        if (values.empty()) fail(parent.file(), parent.path(key), "grid is empty");
        return values;
    }
    Fields g(*j, parent.path(key), parent.file());
    GridSpec spec;
    spec.lo = g.number("lo");
    spec.hi = g.number("hi");
    spec.log10_step = g.number_or("step", spec.log10_step);
    spec.spacing = spacing;
    g.finish();
    try {
        return build_grid(spec);
    } catch (const Error& e) {
        fail(parent.file(), parent.path(key), e.what());
    }
}

RateGrids parse_grids(Fields f) {
    GridSpacing spacing = GridSpacing::LogUniform;
    if (f.find("spacing")) spacing = f.choice("spacing", parse_grid_spacing);
    RateGrids grids;
    grids.eta = parse_grid(f, "eta", spacing);
    grids.eta_in = parse_grid(f, "eta_in", spacing);
    grids.eta_out = parse_grid(f, "eta_out", spacing);
    f.finish();
    return grids;
}

Sampler parse_sampler(Fields& parent, std::string_view key) {
    const json& j = parent.require(key);
    if (j.is_number()) return Sampler::fixed(parent.number(j, key));
    Fields s(j, parent.path(key), parent.file());
    Sampler out{s.number("mean"), s.number_or("std", 0.0)};
    if (out.std < 0.0) fail(parent.file(), s.path("std"), "must be non-negative");
    s.finish();
    return out;
}

EvalDistribution parse_evaluation(Fields& f, std::size_t& runs) {
    EvalDistribution d;
    d.function = f.choice("function", parse_function_id);
    d.x0_1 = parse_sampler(f, "x0_1");
    d.x0_2 = parse_sampler(f, "x0_2");
    d.alpha = parse_sampler(f, "alpha");
    d.beta = parse_sampler(f, "beta");
    if (d.beta.is_fixed() && d.beta.mean <= 0.0) fail(f.file(), f.path("beta"), "must be positive");
    d.iterations = parse_sampler(f, "iterations");
    runs = f.count_or("runs", runs);
    f.finish();
    return d;
}

AxisRange parse_range(Fields& parent, std::string_view key) {
    Fields r = parent.child(key);
    AxisRange range{r.number("lo"), r.number("hi")};
    if (range.lo > range.hi) fail(parent.file(), parent.path(key), "lo must not exceed hi");
    r.finish();
    return range;
}

ToyConfig parse_toy(Fields f) {
    ToyConfig toy;
    ToyProtocol& p = toy.protocol;
    if (f.find("dataset")) {
        Fields d = f.child("dataset");
        p.dataset_size = d.count_or("size", p.dataset_size, 4);
        p.dataset_noise = d.number_or("noise", p.dataset_noise);
        if (p.dataset_noise < 0.0) fail(f.file(), d.path("noise"), "must be non-negative");
        p.dataset_seed = d.unsigned_or("seed", p.dataset_seed);
        d.finish();
    }
    if (const json* h = f.find("hidden")) {
        if (!h->is_array()) fail(f.file(), f.path("hidden"), "expected an array of layer widths");
        p.hidden.clear();
        for (const json& w : *h) {
            const std::int64_t width = f.integer(w, "hidden");
            if (width < 1) fail(f.file(), f.path("hidden"), "layer widths must be >= 1");
            p.hidden.push_back(static_cast<std::size_t>(width));
        }
    }
    if (f.find("activation")) p.activation = f.choice("activation", parse_activation);
    if (f.find("init")) p.init = f.choice("init", parse_xavier_mode);
    p.runs = f.count_or("runs", p.runs);
    if (f.find("gain")) {
        Fields g = f.child("gain");
        p.distribution.gain_shape = g.number_or("shape", p.distribution.gain_shape);
        p.distribution.gain_scale = g.number_or("scale", p.distribution.gain_scale);
        if (p.distribution.gain_shape <= 0.0 || p.distribution.gain_scale <= 0.0) {
            fail(f.file(), f.path("gain"), "shape and scale must be positive");
        }
        g.finish();
    }
    if (f.find("epochs")) {
        Fields e = f.child("epochs");
        p.distribution.epochs_mean = e.number_or("mean", p.distribution.epochs_mean);
        p.distribution.epochs_std = e.number_or("std", p.distribution.epochs_std);
        if (p.distribution.epochs_std < 0.0) fail(f.file(), e.path("std"), "must be non-negative");
        e.finish();
    }
    p.distribution.batch_size = f.count_or("batch_size", p.distribution.batch_size);

    const json& opts = f.require("optimizers");
    if (!opts.is_array() || opts.empty()) {
        fail(f.file(), f.path("optimizers"), "expected a non-empty array");
    }
    for (std::size_t i = 0; i < opts.size(); ++i) {
        toy.optimizers.push_back(
            parse_optimizer(Fields(opts[i], fmt::format("{}[{}]", f.path("optimizers"), i), f.file())));
    }
    f.finish();
    return toy;
}

OptimizerSpec resolve_with_depth(const OptimizerEntry& entry, unsigned parallelism, int depth,
                                 bool rates_from_grid);

OptimizerSpec tune_from(const fs::path& path, unsigned parallelism, int depth) {
    const RunConfig ref = load_config(path);
    if (!ref.task) fail(path, "task", "required by tuned_from");
    if (!ref.optimizer) fail(path, "optimizer", "required by tuned_from");
    if (!ref.grids) fail(path, "grids", "required by tuned_from");
    const OptimizerSpec base = resolve_with_depth(*ref.optimizer, parallelism, depth + 1, true);
    const TuneResult result = grid_search(*ref.task, base, *ref.grids, parallelism);
    if (result.all_diverged()) fail(path, "grids", "every grid point diverged");
    return result.best_spec;
}

OptimizerSpec read_tuned_spec(const fs::path& path) {
    const json doc = parse_json(read_file(path), path);
    Fields root(doc, "", path);
    check_schema_version(root);
    Fields opt = root.child("optimizer");
    const OptimizerSpec spec = parse_inline_spec(opt, nullptr);
    opt.finish();
    return spec;
}

OptimizerSpec resolve_with_depth(const OptimizerEntry& entry, unsigned parallelism, int depth,
                                 bool rates_from_grid) {
    if (depth > 8) throw Error(ErrorKind::InvalidConfig, "tuned_from chain is too deep or cyclic");
    if (entry.spec) {
        if (!rates_from_grid && !entry.missing_rates.empty()) {
            throw Error(ErrorKind::InvalidConfig,
                        fmt::format("{}: required, {} has no default {} rates",
                                    entry.missing_rates.front(), to_string(entry.spec->family),
                                    to_string(entry.spec->update.kind)));
        }
        return *entry.spec;
    }
    if (entry.tuned_spec) return read_tuned_spec(*entry.tuned_spec);
    return tune_from(*entry.tuned_from, parallelism, depth);
}

}  // namespace

RunConfig parse_config(const std::string& text, const fs::path& source) {
    const json doc = parse_json(text, source);
    Fields root(doc, "", source);
    check_schema_version(root);

    RunConfig config;
    config.source = source;
    if (const json* d = root.find("description")) root.string(*d, "description");
    if (root.find("seed")) config.seed = root.unsigned_or("seed", 0);
    if (root.find("task")) config.task = parse_task(root.child("task"));
    if (root.find("optimizer")) config.optimizer = parse_optimizer(root.child("optimizer"));
    if (root.find("grids")) config.grids = parse_grids(root.child("grids"));
    if (root.find("evaluation")) {
        Fields e = root.child("evaluation");
        config.evaluation = parse_evaluation(e, config.runs);
    }
    if (root.find("scan")) {
        Fields s = root.child("scan");
        if (s.find("x1") || s.find("x2")) {
            config.scan_ranges = std::pair{parse_range(s, "x1"), parse_range(s, "x2")};
        }
        config.scan_points = s.count_or("points", config.scan_points);
        s.finish();
    }
    if (root.find("toy")) config.toy = parse_toy(root.child("toy"));
    root.finish();
    return config;
}

RunConfig load_config(const fs::path& path) {
    return parse_config(read_file(path), path);
}

OptimizerSpec resolve_optimizer(const OptimizerEntry& entry, unsigned parallelism, bool rates_from_grid) {
    return resolve_with_depth(entry, parallelism, 0, rates_from_grid);
}

std::string optimizer_label(const OptimizerEntry& entry, const OptimizerSpec& resolved) {
    if (!entry.label.empty()) return entry.label;
    return fmt::format("{}-{}", to_string(resolved.family), to_string(resolved.update.kind));
}

}  // namespace altopt
