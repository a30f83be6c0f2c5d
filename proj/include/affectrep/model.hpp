#pragma once

// Two-layer unidirectional LSTM regressor with a per-step affine + tanh head,
// trained with the concordance (CCC) loss and Adam with coupled L2 decay.
// One instance learns one target channel; mu-like and sigma-like channels
// are trained as independent models.

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace affectrep {

/// Steps in rows, feature dimensions in columns.
using FeatureMatrix = Eigen::MatrixXd;

struct ModelConfig {
    std::size_t input_dim = 0;
    std::size_t hidden_dim = 64;
    std::size_t layers = 2;
    std::uint64_t seed = 0;

    void validate() const;
};

struct TrainConfig {
    double learning_rate = 1e-3;
    double weight_decay = 1e-4;
    std::size_t max_epochs = 100;
    std::size_t segment_length = 19;
    std::size_t batch_size = 8;
    bool scale_targets = true;
    double target_limit = 0.9;

    void validate() const;
};

/// Affine target map z = scale * y + offset used during training.
struct TargetScaling {
    double scale = 1.0;
    double offset = 0.0;

    double apply(double y) const noexcept { return scale * y + offset; }
    double invert(double z) const noexcept { return (z - offset) / scale; }

    /// Maps [min(targets), max(targets)] onto [-limit, limit].
    static TargetScaling fit(std::span<const double> targets, double limit);
};

struct ParameterBlock {
    std::string name;
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::size_t offset = 0;

    std::size_t size() const noexcept { return rows * cols; }
};

std::vector<ParameterBlock> parameter_layout(const ModelConfig& config);
std::size_t parameter_count(const ModelConfig& config);

/// A training example: feature rows paired with one target per step.
struct Sequence {
    FeatureMatrix features;
    std::vector<double> targets;
};

class LstmRegressor {
public:
    explicit LstmRegressor(ModelConfig config);
    LstmRegressor(ModelConfig config, std::vector<double> weights);

    const ModelConfig& config() const noexcept { return config_; }
    const std::vector<double>& weights() const noexcept { return weights_; }
    std::vector<double>& weights() noexcept { return weights_; }
    const std::vector<ParameterBlock>& layout() const noexcept { return layout_; }

    /// Uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)] with fan_in = hidden_dim, from config.seed.
    void initialize();

    /// One output in (-1, 1) per row of `features`; step n sees rows <= n only.
    std::vector<double> forward(const FeatureMatrix& features) const;

    /// Mean over `batch` of 1 - ccc(forward(features), targets). Segments whose
    /// targets are constant are skipped; `skipped` receives their count. The
    /// gradient (if non-null) is resized to parameter_count and overwritten.
    double batch_loss(std::span<const Sequence* const> batch, std::vector<double>* gradient,
                      std::size_t* skipped = nullptr) const;

private:
    ModelConfig config_;
    std::vector<ParameterBlock> layout_;
    std::vector<double> weights_;
};

/// Loss value and gradient of 1 - ccc with respect to the predictions.
/// Degenerate segments (guarded denominator) give loss 1 and a zero gradient.
double ccc_loss_gradient(std::span<const double> pred, std::span<const double> target,
                         std::span<double> grad);

struct AdamState {
    std::vector<double> m;
    std::vector<double> v;
    std::size_t step = 0;
};

/// One Adam update with L2 decay folded into the gradient (g += decay * w).
void adam_step(std::span<double> weights, std::span<const double> gradient, AdamState& state,
               double learning_rate, double weight_decay, double beta1 = 0.9, double beta2 = 0.999,
               double eps = 1e-8);

struct TrainedModel {
    ModelConfig config;
    std::vector<double> weights;
    TargetScaling scaling;
    std::size_t best_epoch = 0;
    double best_validation_loss = 1.0;
    std::size_t skipped_segments = 0;
    std::vector<double> validation_history;  // index 0 = initial weights

    LstmRegressor regressor() const { return LstmRegressor(config, weights); }
};

/// Cuts a sequence into consecutive segments of `length`; a remainder of at
/// least two steps becomes a shorter final segment.
std::vector<Sequence> segment(const Sequence& seq, std::size_t length);

/// Trains on `train`, selecting the epoch with the lowest validation CCC loss
/// (epoch 0 is the initial weights). Targets are in original units.
TrainedModel train(std::span<const Sequence> train, std::span<const Sequence> validation,
                   const ModelConfig& model_config, const TrainConfig& train_config);

/// forward() mapped back through the stored target scaling.
std::vector<double> predict(const TrainedModel& model, const FeatureMatrix& features);

struct GradientCheckResult {
    double max_relative_error = 0.0;
    double max_absolute_error = 0.0;
    std::vector<double> analytic;
    std::vector<double> numeric;
};

/// Analytic batch-loss gradient against central finite differences with step h.
GradientCheckResult gradient_check(const LstmRegressor& model, std::span<const Sequence> batch,
                                   double h = 1e-5);

void save_checkpoint(const TrainedModel& model, const std::filesystem::path& path);
TrainedModel load_checkpoint(const std::filesystem::path& path);

}  // namespace affectrep
