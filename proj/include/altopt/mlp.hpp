#pragma once

// Small fully connected classifier trained with the pluggable optimizers.
// Softmax + mean cross-entropy on top of affine layers with ReLU or tanh
// hidden activations. Every weight matrix and bias vector owns its own
// OptimizerState.

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "altopt/optim.hpp"

namespace altopt {

enum class Activation { Relu, Tanh };

// FanProduct: std = gain * sqrt(2 / (fan_in * fan_out))
// FanSum:     std = gain * sqrt(2 / (fan_in + fan_out))   (Glorot)
enum class XavierMode { FanProduct, FanSum };

std::string_view to_string(Activation activation);
Activation parse_activation(std::string_view name);
std::string_view to_string(XavierMode mode);
XavierMode parse_xavier_mode(std::string_view name);

inline constexpr double kBiasInit = 0.01;

double xavier_std(std::size_t fan_in, std::size_t fan_out, double gain, XavierMode mode);

/// fan_in x fan_out matrix of i.i.d. N(0, xavier_std) entries.
Eigen::MatrixXd xavier_init(std::size_t fan_in, std::size_t fan_out, double gain,
                            std::mt19937_64& rng, XavierMode mode = XavierMode::FanProduct);

struct DenseLayer {
    Eigen::MatrixXd weights;  // fan_in x fan_out
    Eigen::VectorXd bias;     // fan_out
};

struct MlpModel {
    std::vector<DenseLayer> layers;
    Activation activation = Activation::Relu;
    std::uint64_t revision = 0;  // bumped on every parameter change

    std::size_t input_dim() const { return layers.front().weights.rows(); }
    std::size_t output_dim() const { return layers.back().weights.cols(); }
    std::size_t parameter_count() const;
    void mark_modified() { ++revision; }
};

/// dims = {input, hidden..., classes}; weights from xavier_init, biases 0.01.
MlpModel make_mlp(std::span<const std::size_t> dims, Activation activation, double gain,
                  std::mt19937_64& rng, XavierMode mode = XavierMode::FanProduct);

struct ForwardCache {
    std::vector<Eigen::MatrixXd> inputs;  // input of each layer (batch x fan_in)
    std::vector<Eigen::MatrixXd> pre;     // pre-activation of each layer (batch x fan_out)
    std::uint64_t revision = 0;

    const Eigen::MatrixXd& logits() const { return pre.back(); }
};

ForwardCache forward(const MlpModel& model, const Eigen::MatrixXd& batch);

/// Mean cross-entropy of softmax(logits), computed with log-sum-exp.
double cross_entropy(const Eigen::MatrixXd& logits, std::span<const int> labels);
Eigen::MatrixXd softmax(const Eigen::MatrixXd& logits);

struct Gradients {
    std::vector<Eigen::MatrixXd> weights;
    std::vector<Eigen::VectorXd> biases;
};

/// Exact gradient of the mean cross-entropy. Throws StaleCache if the model
/// changed since `cache` was produced or the shapes disagree.
Gradients backward(const MlpModel& model, const ForwardCache& cache, std::span<const int> labels);

struct SyntheticDataset {
    Eigen::MatrixXd features;  // n x 2
    std::vector<int> labels;   // 0 or 1
    std::vector<std::size_t> train;
    std::vector<std::size_t> validation;
};

/// Two interleaving half-moons with Gaussian noise, shuffled, 80/20 split.
SyntheticDataset make_dataset(std::size_t n, double noise, std::uint64_t seed);

struct TrainingConfig {
    double gain = 1.0;
    std::int64_t epochs = 60;
    std::size_t batch_size = 16;
    OptimizerSpec optimizer;
    std::uint64_t seed = 0;
};

struct EpochMetrics {
    std::int64_t epoch = 0;  // 1-based
    double train_accuracy = 0.0;
    double validation_accuracy = 0.0;
    double loss = 0.0;  // mean cross-entropy over the training split
};

struct TrainingHistory {
    std::vector<EpochMetrics> epochs;
    bool diverged = false;
    std::uint64_t steps = 0;
    // Coordinates that were non-zero and changed sign, counted per step.
    std::uint64_t sign_flips = 0;

    /// Validation accuracy after epoch 5 (or the last epoch if fewer ran).
    double epoch5_validation() const;
    double final_validation() const;
};

double accuracy(const MlpModel& model, const SyntheticDataset& data,
                std::span<const std::size_t> rows);

TrainingHistory train(MlpModel& model, const SyntheticDataset& data, const TrainingConfig& config);

// Randomized training configurations: gain ~ Gamma(shape, scale) redrawn
// below 1e-3, epochs ~ N(mean, std) rounded and clamped to >= 1.
struct TrainingDistribution {
    double gain_shape = 1.0;
    double gain_scale = 2.5;
    double epochs_mean = 60.0;
    double epochs_std = 10.0;
    std::size_t batch_size = 16;
};

inline constexpr double kMinGain = 1e-3;

/// Deterministic in (seed, index); optimizer left at its default.
TrainingConfig sample_training_config(std::uint64_t seed, std::uint64_t index,
                                      const TrainingDistribution& dist = {});

struct ToyProtocol {
    std::size_t dataset_size = 400;
    double dataset_noise = 0.1;
    std::uint64_t dataset_seed = 7;
    std::vector<std::size_t> hidden{16, 16};
    Activation activation = Activation::Relu;
    XavierMode init = XavierMode::FanProduct;
    std::size_t runs = 10;
    std::uint64_t seed = 2024;
    TrainingDistribution distribution;
};

struct MeanStd {
    double mean = 0.0;
    double std = 0.0;
};

MeanStd mean_std(const std::vector<double>& values);

struct ProtocolSummary {
    OptimizerSpec optimizer;
    std::vector<TrainingConfig> configs;
    std::vector<TrainingHistory> runs;
    MeanStd epoch5;
    MeanStd final;
    std::uint64_t sign_flips = 0;
    std::size_t diverged = 0;
};

/// Trains one model per sampled configuration for every optimizer. Run i
/// uses the same gain, epochs, initial weights and batch order for all
/// optimizers.
std::vector<ProtocolSummary> run_gain_protocol(const ToyProtocol& protocol,
                                               const std::vector<OptimizerSpec>& optimizers,
                                               unsigned parallelism = 1);

}  // namespace altopt
