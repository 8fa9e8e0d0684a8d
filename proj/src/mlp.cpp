#include "altopt/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <string>

#include "altopt/error.hpp"
#include "altopt/harness.hpp"
#include "altopt/parallel.hpp"

namespace altopt {

std::string_view to_string(Activation activation) {
    return activation == Activation::Relu ? "relu" : "tanh";
}

Activation parse_activation(std::string_view name) {
    if (name == "relu") return Activation::Relu;
    if (name == "tanh") return Activation::Tanh;
    throw Error(ErrorKind::InvalidConfig,
                "unknown activation '" + std::string(name) + "' (expected relu or tanh)");
}

std::string_view to_string(XavierMode mode) {
    return mode == XavierMode::FanProduct ? "fan-product" : "fan-sum";
}

XavierMode parse_xavier_mode(std::string_view name) {
    if (name == "fan-product") return XavierMode::FanProduct;
    if (name == "fan-sum") return XavierMode::FanSum;
    throw Error(ErrorKind::InvalidConfig,
                "unknown init '" + std::string(name) + "' (expected fan-product or fan-sum)");
}

double xavier_std(std::size_t fan_in, std::size_t fan_out, double gain, XavierMode mode) {
    const double fi = static_cast<double>(fan_in);
    const double fo = static_cast<double>(fan_out);
    const double fans = mode == XavierMode::FanProduct ? fi * fo : fi + fo;
    return gain * std::sqrt(2.0 / fans);
}

Eigen::MatrixXd xavier_init(std::size_t fan_in, std::size_t fan_out, double gain,
                            std::mt19937_64& rng, XavierMode mode) {
    if (fan_in == 0 || fan_out == 0) {
        throw Error(ErrorKind::InvalidDimension, "layer fans must be positive");
    }
    if (!(gain > 0.0)) throw Error(ErrorKind::InvalidConfig, "gain must be positive");
    std::normal_distribution<double> normal(0.0, xavier_std(fan_in, fan_out, gain, mode));
    Eigen::MatrixXd w(fan_in, fan_out);
    // Row-major fill order so the draw sequence is independent of storage.
    for (Eigen::Index r = 0; r < w.rows(); ++r) {
        for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = normal(rng);
    }
    return w;
}

std::size_t MlpModel::parameter_count() const {
    std::size_t n = 0;
    for (const auto& l : layers) n += l.weights.size() + l.bias.size();
    return n;
}

MlpModel make_mlp(std::span<const std::size_t> dims, Activation activation, double gain,
                  std::mt19937_64& rng, XavierMode mode) {
    if (dims.size() < 2) throw Error(ErrorKind::InvalidDimension, "model needs at least two dims");
    MlpModel model;
    model.activation = activation;
    for (std::size_t i = 0; i + 1 < dims.size(); ++i) {
        DenseLayer layer;
        layer.weights = xavier_init(dims[i], dims[i + 1], gain, rng, mode);
        layer.bias = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(dims[i + 1]), kBiasInit);
        model.layers.push_back(std::move(layer));
    }
    return model;
}

namespace {

Eigen::MatrixXd activate(const Eigen::MatrixXd& z, Activation a) {
    if (a == Activation::Relu) return z.cwiseMax(0.0);
    return z.array().tanh().matrix();
}

// Derivative expressed through the pre-activation.
Eigen::MatrixXd activation_slope(const Eigen::MatrixXd& z, Activation a) {
    if (a == Activation::Relu) return (z.array() > 0.0).cast<double>().matrix();
    return (1.0 - z.array().tanh().square()).matrix();
}

Eigen::VectorXd row_log_sum_exp(const Eigen::MatrixXd& logits) {
    const Eigen::VectorXd mx = logits.rowwise().maxCoeff();
    const Eigen::VectorXd sums =
        (logits.colwise() - mx).array().exp().rowwise().sum().matrix();
    return mx.array() + sums.array().log();
}

std::mt19937_64 stream(std::uint64_t seed, std::uint64_t purpose) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(purpose)};
    return std::mt19937_64(seq);
}

Eigen::MatrixXd gather_rows(const Eigen::MatrixXd& m, std::span<const std::size_t> rows) {
    Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), m.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        out.row(static_cast<Eigen::Index>(i)) = m.row(static_cast<Eigen::Index>(rows[i]));
    }
    return out;
}

std::vector<int> gather_labels(const std::vector<int>& labels, std::span<const std::size_t> rows) {
    std::vector<int> out(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) out[i] = labels[rows[i]];
    return out;
}

}  // namespace

ForwardCache forward(const MlpModel& model, const Eigen::MatrixXd& batch) {
    if (model.layers.empty()) throw Error(ErrorKind::InvalidDimension, "model has no layers");
    if (static_cast<std::size_t>(batch.cols()) != model.input_dim()) {
        throw Error(ErrorKind::DimensionMismatch,
                    "batch has " + std::to_string(batch.cols()) + " features, model expects " +
                        std::to_string(model.input_dim()));
    }
    ForwardCache cache;
    cache.revision = model.revision;
    Eigen::MatrixXd h = batch;
    for (std::size_t i = 0; i < model.layers.size(); ++i) {
        const DenseLayer& layer = model.layers[i];
        Eigen::MatrixXd z = h * layer.weights;
        z.rowwise() += layer.bias.transpose();
        cache.inputs.push_back(std::move(h));
        const bool last = i + 1 == model.layers.size();
        if (!last) h = activate(z, model.activation);
        cache.pre.push_back(std::move(z));
    }
    return cache;
}

Eigen::MatrixXd softmax(const Eigen::MatrixXd& logits) {
    const Eigen::VectorXd lse = row_log_sum_exp(logits);
    return (logits.colwise() - lse).array().exp().matrix();
}

double cross_entropy(const Eigen::MatrixXd& logits, std::span<const int> labels) {
    if (static_cast<std::size_t>(logits.rows()) != labels.size()) {
        throw Error(ErrorKind::DimensionMismatch, "labels do not match batch size");
    }
    const Eigen::VectorXd lse = row_log_sum_exp(logits);
    double total = 0.0;
    for (Eigen::Index r = 0; r < logits.rows(); ++r) {
        total += lse(r) - logits(r, labels[static_cast<std::size_t>(r)]);
    }
    return total / static_cast<double>(logits.rows());
}

Gradients backward(const MlpModel& model, const ForwardCache& cache,
                   std::span<const int> labels) {
    const std::size_t depth = model.layers.size();
    if (cache.revision != model.revision || cache.pre.size() != depth ||
        cache.inputs.size() != depth) {
        throw Error(ErrorKind::StaleCache, "forward cache does not belong to the current model");
    }
    for (std::size_t i = 0; i < depth; ++i) {
        if (cache.inputs[i].cols() != model.layers[i].weights.rows() ||
            cache.pre[i].cols() != model.layers[i].weights.cols()) {
            throw Error(ErrorKind::StaleCache, "forward cache shapes do not match the model");
        }
    }
    const Eigen::MatrixXd& logits = cache.logits();
    if (static_cast<std::size_t>(logits.rows()) != labels.size()) {
        throw Error(ErrorKind::DimensionMismatch, "labels do not match batch size");
    }

    const double batch = static_cast<double>(logits.rows());
    Eigen::MatrixXd delta = softmax(logits);
    for (Eigen::Index r = 0; r < delta.rows(); ++r) {
        delta(r, labels[static_cast<std::size_t>(r)]) -= 1.0;
    }
    delta /= batch;

    Gradients grads;
    grads.weights.resize(depth);
    grads.biases.resize(depth);
    for (std::size_t i = depth; i-- > 0;) {
        grads.weights[i] = cache.inputs[i].transpose() * delta;
        grads.biases[i] = delta.colwise().sum().transpose();
        if (i > 0) {
            delta = (delta * model.layers[i].weights.transpose()).cwiseProduct(
                activation_slope(cache.pre[i - 1], model.activation));
        }
    }
    return grads;
}

SyntheticDataset make_dataset(std::size_t n, double noise, std::uint64_t seed) {
    if (n < 4) throw Error(ErrorKind::InvalidConfig, "dataset needs at least 4 samples");
    if (!(noise >= 0.0)) throw Error(ErrorKind::InvalidConfig, "noise must be non-negative");

    auto rng = stream(seed, 0);
    std::normal_distribution<double> jitter(0.0, 1.0);
    const std::size_t upper = n / 2;
    const std::size_t lower = n - upper;

    SyntheticDataset data;
    data.features.resize(static_cast<Eigen::Index>(n), 2);
    data.labels.resize(n);
    auto angle = [](std::size_t k, std::size_t count) {
        return count == 1 ? 0.0
                          : std::numbers::pi * static_cast<double>(k) / static_cast<double>(count - 1);
    };
    for (std::size_t k = 0; k < n; ++k) {
        const bool first = k < upper;
        const double t = first ? angle(k, upper) : angle(k - upper, lower);
        double x = first ? std::cos(t) : 1.0 - std::cos(t);
        double y = first ? std::sin(t) : 0.5 - std::sin(t);
        if (noise > 0.0) {
            x += noise * jitter(rng);
            y += noise * jitter(rng);
        }
        data.features(static_cast<Eigen::Index>(k), 0) = x;
        data.features(static_cast<Eigen::Index>(k), 1) = y;
        data.labels[k] = first ? 0 : 1;
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    const auto n_train = static_cast<std::size_t>(std::llround(0.8 * static_cast<double>(n)));
    data.train.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
    data.validation.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train), order.end());
    return data;
}

double accuracy(const MlpModel& model, const SyntheticDataset& data,
                std::span<const std::size_t> rows) {
    if (rows.empty()) return 0.0;
    const ForwardCache cache = forward(model, gather_rows(data.features, rows));
    std::size_t correct = 0;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        Eigen::Index best = 0;
        cache.logits().row(static_cast<Eigen::Index>(i)).maxCoeff(&best);
        if (static_cast<int>(best) == data.labels[rows[i]]) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(rows.size());
}

double TrainingHistory::epoch5_validation() const {
    if (epochs.empty()) return 0.0;
    return epochs[std::min<std::size_t>(5, epochs.size()) - 1].validation_accuracy;
}

double TrainingHistory::final_validation() const {
    return epochs.empty() ? 0.0 : epochs.back().validation_accuracy;
}

namespace {

// Applies one optimizer step to a flattened tensor, counting sign changes.
void step_tensor(const OptimizerSpec& spec, OptimizerState& state, std::span<double> values,
                 std::span<const double> grad, std::vector<double>& before,
                 std::uint64_t& flips) {
    before.assign(values.begin(), values.end());
    step(spec, state, values, grad);
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (before[i] != 0.0 && std::signbit(before[i]) != std::signbit(values[i]) &&
            values[i] != 0.0) {
            ++flips;
        }
    }
}

EpochMetrics evaluate_epoch(const MlpModel& model, const SyntheticDataset& data,
                            std::int64_t epoch) {
    EpochMetrics m;
    m.epoch = epoch;
    m.train_accuracy = accuracy(model, data, data.train);
    m.validation_accuracy = accuracy(model, data, data.validation);
    const ForwardCache cache = forward(model, gather_rows(data.features, data.train));
    m.loss = cross_entropy(cache.logits(), gather_labels(data.labels, data.train));
    return m;
}

}  // namespace

TrainingHistory train(MlpModel& model, const SyntheticDataset& data, const TrainingConfig& config) {
    if (config.epochs < 1) throw Error(ErrorKind::InvalidConfig, "training needs epochs >= 1");
    if (config.batch_size == 0) throw Error(ErrorKind::InvalidConfig, "batch size must be positive");
    if (data.train.empty()) throw Error(ErrorKind::InvalidConfig, "training split is empty");
    validate(config.optimizer);

    const std::size_t depth = model.layers.size();
    std::vector<OptimizerState> weight_states, bias_states;
    for (const auto& layer : model.layers) {
        weight_states.push_back(init_state(static_cast<std::size_t>(layer.weights.size())));
        bias_states.push_back(init_state(static_cast<std::size_t>(layer.bias.size())));
    }

    auto rng = stream(config.seed, 1);
    std::vector<std::size_t> order = data.train;
    std::vector<double> scratch;
    TrainingHistory history;

    for (std::int64_t epoch = 1; epoch <= config.epochs && !history.diverged; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
            const std::size_t stop = std::min(order.size(), start + config.batch_size);
            const std::span<const std::size_t> rows(order.data() + start, stop - start);
            const std::vector<int> labels = gather_labels(data.labels, rows);
            const ForwardCache cache = forward(model, gather_rows(data.features, rows));
            const Gradients grads = backward(model, cache, labels);
            try {
                for (std::size_t i = 0; i < depth; ++i) {
                    auto& layer = model.layers[i];
                    step_tensor(config.optimizer, weight_states[i],
                                {layer.weights.data(), static_cast<std::size_t>(layer.weights.size())},
                                {grads.weights[i].data(), static_cast<std::size_t>(grads.weights[i].size())},
                                scratch, history.sign_flips);
                    step_tensor(config.optimizer, bias_states[i],
                                {layer.bias.data(), static_cast<std::size_t>(layer.bias.size())},
                                {grads.biases[i].data(), static_cast<std::size_t>(grads.biases[i].size())},
                                scratch, history.sign_flips);
                }
            } catch (const Error& e) {
                if (e.kind() != ErrorKind::Divergence && e.kind() != ErrorKind::NonFiniteGradient) {
                    throw;
                }
                history.diverged = true;
            }
            model.mark_modified();
            if (history.diverged) break;
            ++history.steps;
        }
        history.epochs.push_back(evaluate_epoch(model, data, epoch));
    }
    return history;
}

TrainingConfig sample_training_config(std::uint64_t seed, std::uint64_t index,
                                      const TrainingDistribution& dist) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
    std::mt19937_64 rng(seq);
    std::gamma_distribution<double> gamma(dist.gain_shape, dist.gain_scale);
    std::normal_distribution<double> epochs(dist.epochs_mean, dist.epochs_std);

    TrainingConfig config;
    do {
        config.gain = gamma(rng);
    } while (config.gain < kMinGain);
    config.epochs = round_iterations(dist.epochs_std > 0.0 ? epochs(rng) : dist.epochs_mean);
    config.batch_size = dist.batch_size;
    config.seed = seed ^ (0x9e3779b97f4a7c15ULL * (index + 1));
    return config;
}

MeanStd mean_std(const std::vector<double>& values) {
    MeanStd out;
    if (values.empty()) return out;
    out.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
    if (values.size() > 1) {
        double ss = 0.0;
        for (double v : values) ss += (v - out.mean) * (v - out.mean);
        out.std = std::sqrt(ss / static_cast<double>(values.size() - 1));
    }
    return out;
}

std::vector<ProtocolSummary> run_gain_protocol(const ToyProtocol& protocol,
                                               const std::vector<OptimizerSpec>& optimizers,
                                               unsigned parallelism) {
    if (protocol.runs == 0) throw Error(ErrorKind::InvalidConfig, "protocol needs runs >= 1");
    const SyntheticDataset data =
        make_dataset(protocol.dataset_size, protocol.dataset_noise, protocol.dataset_seed);

    std::vector<std::size_t> dims{2};
    dims.insert(dims.end(), protocol.hidden.begin(), protocol.hidden.end());
    dims.push_back(2);

    std::vector<TrainingConfig> configs(protocol.runs);
    for (std::size_t i = 0; i < protocol.runs; ++i) {
        configs[i] = sample_training_config(protocol.seed, i, protocol.distribution);
    }

    std::vector<ProtocolSummary> out(optimizers.size());
    for (std::size_t o = 0; o < optimizers.size(); ++o) {
        validate(optimizers[o]);
        out[o].optimizer = optimizers[o];
        out[o].configs = configs;
        for (auto& c : out[o].configs) c.optimizer = optimizers[o];
        out[o].runs.resize(protocol.runs);
    }

    parallel_for(optimizers.size() * protocol.runs, parallelism, [&](std::size_t k) {
        const std::size_t o = k / protocol.runs;
        const std::size_t i = k % protocol.runs;
        const TrainingConfig& config = out[o].configs[i];
        auto init_rng = stream(config.seed, 2);
        MlpModel model = make_mlp(dims, protocol.activation, config.gain, init_rng, protocol.init);
        out[o].runs[i] = train(model, data, config);
    });

    for (auto& summary : out) {
        std::vector<double> e5, fin;
        for (const auto& run : summary.runs) {
            e5.push_back(run.epoch5_validation());
            fin.push_back(run.final_validation());
            summary.sign_flips += run.sign_flips;
            summary.diverged += run.diverged ? 1 : 0;
        }
        summary.epoch5 = mean_std(e5);
        summary.final = mean_std(fin);
    }
    return out;
}

}  // namespace altopt
