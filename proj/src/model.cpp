#include "affectrep/model.hpp"

#include "affectrep/error.hpp"
#include "affectrep/metrics.hpp"
#include "affectrep/text_io.hpp"

#include <json.hpp>

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <sstream>

namespace affectrep {

using Eigen::MatrixXd;
using Eigen::VectorXd;

void ModelConfig::validate() const {
    if (input_dim == 0 || hidden_dim == 0) {
        fail(ErrorKind::config, "model dimensions must be positive");
    }
    if (layers != 2) {
        fail(ErrorKind::config, "the regressor has exactly two recurrent layers");
    }
}

void TrainConfig::validate() const {
    if (!(learning_rate >= 0.0) || !(weight_decay >= 0.0)) {
        fail(ErrorKind::config, "learning rate and weight decay must be non-negative");
    }
    if (segment_length < 2) {
        fail(ErrorKind::config, "segment_length must be at least 2");
    }
    if (batch_size == 0) {
        fail(ErrorKind::config, "batch_size must be positive");
    }
    if (!(target_limit > 0.0 && target_limit < 1.0)) {
        fail(ErrorKind::config, "target_limit must lie in (0, 1)");
    }
}

TargetScaling TargetScaling::fit(std::span<const double> targets, double limit) {
    require(!targets.empty(), "target scaling: no targets");
    const auto [lo, hi] = std::minmax_element(targets.begin(), targets.end());
    if (!(*hi > *lo)) {
        fail(ErrorKind::training, "target scaling: training targets are constant");
    }
    TargetScaling s;
    s.scale = 2.0 * limit / (*hi - *lo);
    s.offset = -limit - s.scale * *lo;
    return s;
}

std::vector<ParameterBlock> parameter_layout(const ModelConfig& config) {
    const std::size_t h = config.hidden_dim;
    std::vector<ParameterBlock> blocks;
    std::size_t offset = 0;
    auto add = [&](std::string name, std::size_t rows, std::size_t cols) {
        blocks.push_back({std::move(name), rows, cols, offset});
        offset += rows * cols;
    };
    for (std::size_t l = 0; l < config.layers; ++l) {
        const std::size_t in = l == 0 ? config.input_dim : h;
        const std::string p = "lstm" + std::to_string(l) + ".";
        add(p + "w_input", 4 * h, in);
        add(p + "w_hidden", 4 * h, h);
        add(p + "bias", 4 * h, 1);
    }
    add("head.weight", 1, h);
    add("head.bias", 1, 1);
    return blocks;
}

std::size_t parameter_count(const ModelConfig& config) {
    const auto layout = parameter_layout(config);
    return layout.back().offset + layout.back().size();
}

namespace {

using ConstMap = Eigen::Map<const MatrixXd>;
using MutMap = Eigen::Map<MatrixXd>;

ConstMap view(const std::vector<double>& w, const ParameterBlock& b) {
    return ConstMap(w.data() + b.offset, static_cast<Eigen::Index>(b.rows), static_cast<Eigen::Index>(b.cols));
}

MutMap view(std::vector<double>& w, const ParameterBlock& b) {
    return MutMap(w.data() + b.offset, static_cast<Eigen::Index>(b.rows), static_cast<Eigen::Index>(b.cols));
}

MatrixXd sigmoid(const MatrixXd& z) { return (1.0 / (1.0 + (-z.array()).exp())).matrix(); }

// Activations of one layer for a batch of equal-length sequences; one
// H x B (or 4H x B) matrix per step. Gate rows: input, forget, cell, output.
struct LayerTrace {
    std::vector<MatrixXd> input;
    std::vector<MatrixXd> gates;
    std::vector<MatrixXd> cell;
    std::vector<MatrixXd> cell_tanh;
    std::vector<MatrixXd> hidden;
};

struct BatchTrace {
    std::vector<LayerTrace> layers;
    MatrixXd output;  // L x B, post-tanh
};

BatchTrace run_forward(const ModelConfig& cfg, const std::vector<ParameterBlock>& layout,
                       const std::vector<double>& w, std::span<const FeatureMatrix* const> feats) {
    const auto h = static_cast<Eigen::Index>(cfg.hidden_dim);
    const auto batch = static_cast<Eigen::Index>(feats.size());
    const auto steps = feats.front()->rows();

    BatchTrace tr;
    tr.layers.resize(cfg.layers);

    std::vector<MatrixXd> below(static_cast<std::size_t>(steps));
    for (Eigen::Index t = 0; t < steps; ++t) {
        MatrixXd x(feats.front()->cols(), batch);
        for (Eigen::Index b = 0; b < batch; ++b) {
            x.col(b) = feats[static_cast<std::size_t>(b)]->row(t).transpose();
        }
        below[static_cast<std::size_t>(t)] = std::move(x);
    }

    for (std::size_t l = 0; l < cfg.layers; ++l) {
        const auto wx = view(w, layout[3 * l]);
        const auto wh = view(w, layout[3 * l + 1]);
        const auto bias = view(w, layout[3 * l + 2]);
        LayerTrace& lt = tr.layers[l];
        MatrixXd hid = MatrixXd::Zero(h, batch);
        MatrixXd cell = MatrixXd::Zero(h, batch);
        for (Eigen::Index t = 0; t < steps; ++t) {
            const MatrixXd& x = below[static_cast<std::size_t>(t)];
            MatrixXd z = wx * x + wh * hid;
            z.colwise() += bias.col(0);
            MatrixXd gates(4 * h, batch);
            gates.topRows(2 * h) = sigmoid(z.topRows(2 * h));
            gates.middleRows(2 * h, h) = z.middleRows(2 * h, h).array().tanh().matrix();
            gates.bottomRows(h) = sigmoid(z.bottomRows(h));
            cell = (gates.middleRows(h, h).array() * cell.array() +
                    gates.topRows(h).array() * gates.middleRows(2 * h, h).array())
                       .matrix();
            MatrixXd ct = cell.array().tanh().matrix();
            hid = (gates.bottomRows(h).array() * ct.array()).matrix();
            lt.input.push_back(x);
            lt.gates.push_back(std::move(gates));
            lt.cell.push_back(cell);
            lt.cell_tanh.push_back(std::move(ct));
            lt.hidden.push_back(hid);
        }
        below = lt.hidden;
    }

    const auto head_w = view(w, layout[3 * cfg.layers]);
    const double head_b = w[layout[3 * cfg.layers + 1].offset];
    tr.output.resize(steps, batch);
    for (Eigen::Index t = 0; t < steps; ++t) {
        tr.output.row(t) = ((head_w * below[static_cast<std::size_t>(t)]).array() + head_b).tanh().matrix();
    }
    return tr;
}

// Accumulates dLoss/dWeights into `grad` given dLoss/dOutput (L x B).
void run_backward(const ModelConfig& cfg, const std::vector<ParameterBlock>& layout,
                  const std::vector<double>& w, const BatchTrace& tr, const MatrixXd& d_out,
                  std::vector<double>& grad) {
    const auto h = static_cast<Eigen::Index>(cfg.hidden_dim);
    const auto steps = tr.output.rows();
    const auto batch = tr.output.cols();
    const std::size_t top = cfg.layers - 1;

    const auto head_w = view(w, layout[3 * cfg.layers]);
    auto g_head_w = view(grad, layout[3 * cfg.layers]);
    double& g_head_b = grad[layout[3 * cfg.layers + 1].offset];

    std::vector<MatrixXd> d_above(static_cast<std::size_t>(steps));
    for (Eigen::Index t = 0; t < steps; ++t) {
        const auto ti = static_cast<std::size_t>(t);
        const Eigen::RowVectorXd y = tr.output.row(t);
        const Eigen::RowVectorXd da = (d_out.row(t).array() * (1.0 - y.array().square())).matrix();
        g_head_w += da * tr.layers[top].hidden[ti].transpose();
        g_head_b += da.sum();
        d_above[ti] = head_w.transpose() * da;
    }

    for (std::size_t l = cfg.layers; l-- > 0;) {
        const auto wx = view(w, layout[3 * l]);
        const auto wh = view(w, layout[3 * l + 1]);
        auto g_wx = view(grad, layout[3 * l]);
        auto g_wh = view(grad, layout[3 * l + 1]);
        auto g_b = view(grad, layout[3 * l + 2]);
        const LayerTrace& lt = tr.layers[l];

        MatrixXd dh_next = MatrixXd::Zero(h, batch);
        MatrixXd dc_next = MatrixXd::Zero(h, batch);
        std::vector<MatrixXd> d_below(l > 0 ? static_cast<std::size_t>(steps) : 0);
        MatrixXd dz(4 * h, batch);
        for (Eigen::Index t = steps; t-- > 0;) {
            const auto ti = static_cast<std::size_t>(t);
            const auto& gates = lt.gates[ti];
            const auto i = gates.topRows(h).array();
            const auto f = gates.middleRows(h, h).array();
            const auto g = gates.middleRows(2 * h, h).array();
            const auto o = gates.bottomRows(h).array();
            const auto ct = lt.cell_tanh[ti].array();

            const MatrixXd dh = d_above[ti] + dh_next;
            const Eigen::ArrayXXd dc = dc_next.array() + dh.array() * o * (1.0 - ct.square());
            const Eigen::ArrayXXd c_prev =
                t > 0 ? Eigen::ArrayXXd(lt.cell[ti - 1].array()) : Eigen::ArrayXXd::Zero(h, batch);

            dz.topRows(h) = (dc * g * i * (1.0 - i)).matrix();
            dz.middleRows(h, h) = (dc * c_prev * f * (1.0 - f)).matrix();
            dz.middleRows(2 * h, h) = (dc * i * (1.0 - g.square())).matrix();
            dz.bottomRows(h) = (dh.array() * ct * o * (1.0 - o)).matrix();
            dc_next = (dc * f).matrix();

            g_wx.noalias() += dz * lt.input[ti].transpose();
            if (t > 0) {
                g_wh.noalias() += dz * lt.hidden[ti - 1].transpose();
            }
            g_b.col(0) += dz.rowwise().sum();
            dh_next.noalias() = wh.transpose() * dz;
            if (l > 0) {
                d_below[ti].noalias() = wx.transpose() * dz;
            }
        }
        if (l > 0) {
            d_above = std::move(d_below);
        }
    }
}

bool has_variance(std::span<const double> v) {
    return std::any_of(v.begin(), v.end(), [&](double x) { return x != v.front(); });
}

}  // namespace

LstmRegressor::LstmRegressor(ModelConfig config) : config_(config) {
    config_.validate();
    layout_ = parameter_layout(config_);
    weights_.assign(parameter_count(config_), 0.0);
}

LstmRegressor::LstmRegressor(ModelConfig config, std::vector<double> weights)
    : config_(config), weights_(std::move(weights)) {
    config_.validate();
    layout_ = parameter_layout(config_);
    if (weights_.size() != parameter_count(config_)) {
        fail(ErrorKind::config, "weight count does not match the model layout");
    }
}

void LstmRegressor::initialize() {
    std::mt19937_64 rng(config_.seed);
    const double bound = 1.0 / std::sqrt(static_cast<double>(config_.hidden_dim));
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (double& w : weights_) {
        w = dist(rng);
    }
}

std::vector<double> LstmRegressor::forward(const FeatureMatrix& features) const {
    if (static_cast<std::size_t>(features.cols()) != config_.input_dim) {
        fail(ErrorKind::invalid_input, "forward: feature dimension " + std::to_string(features.cols()) +
                                           " does not match input_dim " +
                                           std::to_string(config_.input_dim));
    }
    if (features.rows() == 0) {
        return {};
    }
    const FeatureMatrix* one[] = {&features};
    const BatchTrace tr = run_forward(config_, layout_, weights_, one);
    return {tr.output.data(), tr.output.data() + tr.output.rows()};
}

double ccc_loss_gradient(std::span<const double> pred, std::span<const double> target,
                         std::span<double> grad) {
    require(pred.size() == target.size() && pred.size() == grad.size() && pred.size() >= 2,
            "ccc_loss_gradient: size mismatch");
    const double n = static_cast<double>(pred.size());
    const double mp = std::accumulate(pred.begin(), pred.end(), 0.0) / n;
    const double mt = std::accumulate(target.begin(), target.end(), 0.0) / n;
    double vp = 0.0, vt = 0.0, cov = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        vp += (pred[i] - mp) * (pred[i] - mp);
        vt += (target[i] - mt) * (target[i] - mt);
        cov += (pred[i] - mp) * (target[i] - mt);
    }
    vp /= n;
    vt /= n;
    cov /= n;
    const double gap = mp - mt;
    const double den = vp + vt + gap * gap;
    if (den < kCccGuard) {
        std::fill(grad.begin(), grad.end(), 0.0);
        return 1.0;
    }
    const double rho = 2.0 * cov / den;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double d_num = 2.0 * (target[i] - mt) / n;
        const double d_den = 2.0 * (pred[i] - mp) / n + 2.0 * gap / n;
        grad[i] = -(d_num * den - 2.0 * cov * d_den) / (den * den);
    }
    return 1.0 - rho;
}

double LstmRegressor::batch_loss(std::span<const Sequence* const> batch, std::vector<double>* gradient,
                                 std::size_t* skipped) const {
    if (gradient) {
        gradient->assign(weights_.size(), 0.0);
    }
    std::map<Eigen::Index, std::vector<const Sequence*>> by_length;
    std::size_t skip = 0;
    for (const Sequence* s : batch) {
        if (static_cast<std::size_t>(s->features.cols()) != config_.input_dim) {
            fail(ErrorKind::invalid_input, "batch_loss: feature dimension mismatch");
        }
        if (s->targets.size() != static_cast<std::size_t>(s->features.rows())) {
            fail(ErrorKind::invalid_input, "batch_loss: target/feature length mismatch");
        }
        if (s->targets.size() < 2 || !has_variance(s->targets)) {
            ++skip;
            continue;
        }
        by_length[s->features.rows()].push_back(s);
    }
    if (skipped) {
        *skipped = skip;
    }
    const std::size_t counted = batch.size() - skip;
    if (counted == 0) {
        return 0.0;
    }

    double total = 0.0;
    const double weight = 1.0 / static_cast<double>(counted);
    for (const auto& [steps, group] : by_length) {
        std::vector<const FeatureMatrix*> feats;
        for (const Sequence* s : group) {
            feats.push_back(&s->features);
        }
        const BatchTrace tr = run_forward(config_, layout_, weights_, feats);
        MatrixXd d_out(steps, static_cast<Eigen::Index>(group.size()));
        std::vector<double> pred(static_cast<std::size_t>(steps));
        std::vector<double> g(static_cast<std::size_t>(steps));
        for (std::size_t b = 0; b < group.size(); ++b) {
            const auto col = tr.output.col(static_cast<Eigen::Index>(b));
            std::copy(col.data(), col.data() + steps, pred.begin());
            total += ccc_loss_gradient(pred, group[b]->targets, g);
            for (Eigen::Index t = 0; t < steps; ++t) {
                d_out(t, static_cast<Eigen::Index>(b)) = weight * g[static_cast<std::size_t>(t)];
            }
        }
        if (gradient) {
            run_backward(config_, layout_, weights_, tr, d_out, *gradient);
        }
    }
    return total * weight;
}

void adam_step(std::span<double> weights, std::span<const double> gradient, AdamState& state,
               double learning_rate, double weight_decay, double beta1, double beta2, double eps) {
    require(weights.size() == gradient.size(), "adam_step: size mismatch");
    if (state.m.size() != weights.size()) {
        state.m.assign(weights.size(), 0.0);
        state.v.assign(weights.size(), 0.0);
        state.step = 0;
    }
    ++state.step;
    const double c1 = 1.0 - std::pow(beta1, static_cast<double>(state.step));
    const double c2 = 1.0 - std::pow(beta2, static_cast<double>(state.step));
    for (std::size_t i = 0; i < weights.size(); ++i) {
        const double g = gradient[i] + weight_decay * weights[i];
        state.m[i] = beta1 * state.m[i] + (1.0 - beta1) * g;
        state.v[i] = beta2 * state.v[i] + (1.0 - beta2) * g * g;
        const double m_hat = state.m[i] / c1;
        const double v_hat = state.v[i] / c2;
        weights[i] -= learning_rate * m_hat / (std::sqrt(v_hat) + eps);
    }
}

std::vector<Sequence> segment(const Sequence& seq, std::size_t length) {
    require(length >= 2, "segment: length must be at least 2");
    const auto total = static_cast<std::size_t>(seq.features.rows());
    std::vector<Sequence> out;
    for (std::size_t start = 0; start < total; start += length) {
        const std::size_t len = std::min(length, total - start);
        if (len < 2) {
            break;
        }
        Sequence s;
        s.features = seq.features.middleRows(static_cast<Eigen::Index>(start), static_cast<Eigen::Index>(len));
        s.targets.assign(seq.targets.begin() + static_cast<std::ptrdiff_t>(start),
                         seq.targets.begin() + static_cast<std::ptrdiff_t>(start + len));
        out.push_back(std::move(s));
    }
    return out;
}

namespace {

Sequence scaled(const Sequence& s, const TargetScaling& scaling) {
    Sequence out{s.features, s.targets};
    for (double& t : out.targets) {
        t = scaling.apply(t);
    }
    return out;
}

double validation_loss(const LstmRegressor& model, std::span<const Sequence> validation) {
    std::vector<double> pred;
    std::vector<double> truth;
    for (const auto& s : validation) {
        const auto p = model.forward(s.features);
        pred.insert(pred.end(), p.begin(), p.end());
        truth.insert(truth.end(), s.targets.begin(), s.targets.end());
    }
    return ccc_loss(pred, truth);
}

}  // namespace

TrainedModel train(std::span<const Sequence> train_set, std::span<const Sequence> validation,
                   const ModelConfig& model_config, const TrainConfig& train_config) {
    model_config.validate();
    train_config.validate();
    if (train_set.empty()) {
        fail(ErrorKind::training, "train: no training sequences");
    }

    std::vector<double> all_targets;
    for (const auto& s : train_set) {
        if (s.targets.size() != static_cast<std::size_t>(s.features.rows())) {
            fail(ErrorKind::training, "train: target/feature length mismatch");
        }
        all_targets.insert(all_targets.end(), s.targets.begin(), s.targets.end());
    }
    if (all_targets.empty()) {
        fail(ErrorKind::training, "train: no training steps");
    }

    TrainedModel result;
    result.config = model_config;
    result.scaling = train_config.scale_targets ? TargetScaling::fit(all_targets, train_config.target_limit)
                                                : TargetScaling{};

    std::vector<Sequence> segments;
    for (const auto& s : train_set) {
        for (auto& seg : segment(scaled(s, result.scaling), train_config.segment_length)) {
            if (has_variance(seg.targets)) {
                segments.push_back(std::move(seg));
            } else {
                ++result.skipped_segments;
            }
        }
    }
    if (segments.empty()) {
        fail(ErrorKind::training, "train: every training segment has constant targets");
    }

    std::vector<Sequence> val_scaled;
    for (const auto& s : validation.empty() ? train_set : validation) {
        val_scaled.push_back(scaled(s, result.scaling));
    }

    LstmRegressor model(model_config);
    model.initialize();
    result.weights = model.weights();
    result.best_validation_loss = validation_loss(model, val_scaled);
    result.validation_history.push_back(result.best_validation_loss);

    std::mt19937_64 rng(model_config.seed ^ 0x9e3779b97f4a7c15ULL);
    AdamState adam;
    std::vector<std::size_t> order(segments.size());
    std::vector<double> grad;
    for (std::size_t epoch = 1; epoch <= train_config.max_epochs; ++epoch) {
        std::iota(order.begin(), order.end(), 0);
        std::shuffle(order.begin(), order.end(), rng);
        // Equal-length segments share a batch so each batch runs as one matrix pass.
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            return segments[a].targets.size() < segments[b].targets.size();
        });
        std::vector<std::vector<const Sequence*>> batches;
        for (std::size_t idx : order) {
            const Sequence* s = &segments[idx];
            if (batches.empty() || batches.back().size() == train_config.batch_size ||
                batches.back().front()->targets.size() != s->targets.size()) {
                batches.emplace_back();
            }
            batches.back().push_back(s);
        }
        std::shuffle(batches.begin(), batches.end(), rng);

        for (const auto& batch : batches) {
            model.batch_loss(batch, &grad);
            adam_step(model.weights(), grad, adam, train_config.learning_rate, train_config.weight_decay);
        }

        const double loss = validation_loss(model, val_scaled);
        if (!std::isfinite(loss)) {
            fail(ErrorKind::training, "train: validation loss diverged at epoch " + std::to_string(epoch));
        }
        result.validation_history.push_back(loss);
        if (loss < result.best_validation_loss) {
            result.best_validation_loss = loss;
            result.best_epoch = epoch;
            result.weights = model.weights();
        }
    }
    return result;
}

std::vector<double> predict(const TrainedModel& model, const FeatureMatrix& features) {
    if (!(std::isfinite(model.scaling.scale) && model.scaling.scale != 0.0 &&
          std::isfinite(model.scaling.offset))) {
        fail(ErrorKind::invalid_input, "predict: missing or invalid target scaling");
    }
    auto out = model.regressor().forward(features);
    for (double& v : out) {
        v = model.scaling.invert(v);
    }
    return out;
}

GradientCheckResult gradient_check(const LstmRegressor& model, std::span<const Sequence> batch, double h) {
    std::vector<const Sequence*> ptrs;
    for (const auto& s : batch) {
        ptrs.push_back(&s);
    }
    GradientCheckResult r;
    model.batch_loss(ptrs, &r.analytic);

    LstmRegressor probe = model;
    r.numeric.resize(r.analytic.size());
    for (std::size_t i = 0; i < r.analytic.size(); ++i) {
        const double w0 = probe.weights()[i];
        probe.weights()[i] = w0 + h;
        const double up = probe.batch_loss(ptrs, nullptr);
        probe.weights()[i] = w0 - h;
        const double down = probe.batch_loss(ptrs, nullptr);
        probe.weights()[i] = w0;
        r.numeric[i] = (up - down) / (2.0 * h);

        const double abs_err = std::abs(r.analytic[i] - r.numeric[i]);
        const double scale = std::abs(r.analytic[i]) + std::abs(r.numeric[i]);
        r.max_absolute_error = std::max(r.max_absolute_error, abs_err);
        if (scale > 1e-8) {
            r.max_relative_error = std::max(r.max_relative_error, abs_err / scale);
        }
    }
    return r;
}

namespace {

constexpr const char* kCheckpointMagic = "AFFECTREP-CHECKPOINT";
constexpr int kCheckpointVersion = 1;

}  // namespace

void save_checkpoint(const TrainedModel& model, const std::filesystem::path& path) {
    nlohmann::ordered_json header;
    header["format_version"] = kCheckpointVersion;
    header["config"] = {{"input_dim", model.config.input_dim},
                        {"hidden_dim", model.config.hidden_dim},
                        {"layers", model.config.layers},
                        {"head", "affine+tanh"},
                        {"seed", model.config.seed}};
    header["scaling"] = {{"scale", model.scaling.scale}, {"offset", model.scaling.offset}};
    header["best_epoch"] = model.best_epoch;
    header["best_validation_loss"] = model.best_validation_loss;
    header["skipped_segments"] = model.skipped_segments;
    nlohmann::ordered_json layout = nlohmann::ordered_json::array();
    for (const auto& b : parameter_layout(model.config)) {
        layout.push_back({{"name", b.name}, {"rows", b.rows}, {"cols", b.cols}, {"offset", b.offset},
                          {"order", "column-major"}});
    }
    header["layout"] = layout;
    header["weight_count"] = model.weights.size();
    header["weight_encoding"] = "float64-le";

    std::string blob;
    blob.reserve(model.weights.size() * 8);
    for (double w : model.weights) {
        auto bits = std::bit_cast<std::uint64_t>(w);
        for (int k = 0; k < 8; ++k) {
            blob.push_back(static_cast<char>((bits >> (8 * k)) & 0xffu));
        }
    }
    write_file_atomic(path, std::string(kCheckpointMagic) + " " + std::to_string(kCheckpointVersion) + "\n" +
                                header.dump() + "\n" + blob);
}

TrainedModel load_checkpoint(const std::filesystem::path& path) {
    const std::string data = read_file(path);
    const auto first_nl = data.find('\n');
    const auto second_nl = first_nl == std::string::npos ? std::string::npos : data.find('\n', first_nl + 1);
    if (second_nl == std::string::npos ||
        data.substr(0, first_nl) != std::string(kCheckpointMagic) + " " + std::to_string(kCheckpointVersion)) {
        fail(ErrorKind::io, "not a checkpoint file: " + path.string());
    }
    const auto header = nlohmann::json::parse(data.substr(first_nl + 1, second_nl - first_nl - 1));

    TrainedModel m;
    m.config.input_dim = header.at("config").at("input_dim");
    m.config.hidden_dim = header.at("config").at("hidden_dim");
    m.config.layers = header.at("config").at("layers");
    m.config.seed = header.at("config").at("seed");
    m.scaling.scale = header.at("scaling").at("scale");
    m.scaling.offset = header.at("scaling").at("offset");
    m.best_epoch = header.at("best_epoch");
    m.best_validation_loss = header.at("best_validation_loss");
    m.skipped_segments = header.at("skipped_segments");
    const std::size_t count = header.at("weight_count");
    if (count != parameter_count(m.config) || data.size() - second_nl - 1 != count * 8) {
        fail(ErrorKind::io, "checkpoint weight block does not match its layout: " + path.string());
    }
    m.weights.resize(count);
    const auto* bytes = reinterpret_cast<const unsigned char*>(data.data() + second_nl + 1);
    for (std::size_t i = 0; i < count; ++i) {
        std::uint64_t bits = 0;
        for (int k = 0; k < 8; ++k) {
            bits |= static_cast<std::uint64_t>(bytes[8 * i + static_cast<std::size_t>(k)]) << (8 * k);
        }
        m.weights[i] = std::bit_cast<double>(bits);
    }
    return m;
}

}  // namespace affectrep
