#include "ptme/mlp.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>

#include "ptme/error.hpp"
#include "ptme/rng.hpp"

namespace ptme {

static_assert(std::endian::native == std::endian::little,
              "model files are written in host order and assume little-endian");

MlpSpec MlpSpec::for_dim(std::size_t input_dim) {
    MlpSpec s;
    s.input_dim = input_dim;
    s.hidden_dims = {static_cast<std::size_t>(std::lround(1.5 * static_cast<double>(input_dim))),
                     input_dim};
    return s;
}

MlpSpec MlpSpec::for_space(const DesignSpace& space) {
    MlpSpec s = for_dim(space.dim());
    s.input_lower = space.lower();
    s.input_upper = space.upper();
    return s;
}

MlpModel::MlpModel(MlpSpec spec, std::vector<DenseLayer> layers)
    : spec_(std::move(spec)), layers_(std::move(layers)) {
    const std::size_t d = spec_.input_dim;
    if (d == 0) throw ConfigError("network input dimension must be positive");
    if (layers_.size() != spec_.hidden_dims.size() + 1)
        throw DimensionError("layer count does not match the network spec");
    std::size_t fan_in = d;
    for (std::size_t l = 0; l < layers_.size(); ++l) {
        const std::size_t fan_out =
            l < spec_.hidden_dims.size() ? spec_.hidden_dims[l] : spec_.output_dim;
        if (static_cast<std::size_t>(layers_[l].weight.rows()) != fan_out ||
            static_cast<std::size_t>(layers_[l].weight.cols()) != fan_in ||
            static_cast<std::size_t>(layers_[l].bias.size()) != fan_out)
            throw DimensionError("layer " + std::to_string(l) + " shape mismatch");
        fan_in = fan_out;
    }

    input_offset_ = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(d));
    input_scale_ = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(d));
    if (!spec_.input_lower.empty() || !spec_.input_upper.empty()) {
        if (spec_.input_lower.size() != d || spec_.input_upper.size() != d)
            throw DimensionError("input bounds do not match input dimension");
        for (std::size_t j = 0; j < d; ++j) {
            const double range = spec_.input_upper[j] - spec_.input_lower[j];
            input_offset_[static_cast<Eigen::Index>(j)] = spec_.input_lower[j];
            input_scale_[static_cast<Eigen::Index>(j)] = range > 0.0 ? 1.0 / range : 0.0;
        }
    }
}

void MlpModel::set_target_normalization(double mean, double scale) {
    if (!std::isfinite(mean) || !std::isfinite(scale) || scale <= 0.0)
        throw DomainError("target normalization must be finite with positive scale");
    target_mean_ = mean;
    target_scale_ = scale;
}

Eigen::VectorXd MlpModel::normalize_input(std::span<const double> x) const {
    if (x.size() != spec_.input_dim)
        throw DimensionError("sample has " + std::to_string(x.size()) + " entries, model expects " +
                             std::to_string(spec_.input_dim));
    Eigen::Map<const Eigen::VectorXd> raw(x.data(), static_cast<Eigen::Index>(x.size()));
    return ((raw - input_offset_).array() * input_scale_.array()).matrix();
}

Eigen::MatrixXd MlpModel::normalize_inputs(const DesignMatrix& x) const {
    if (static_cast<std::size_t>(x.cols()) != spec_.input_dim)
        throw DimensionError("design matrix width does not match model input dimension");
    Eigen::MatrixXd out = x.transpose();
    out.colwise() -= input_offset_;
    out.array().colwise() *= input_scale_.array();
    return out;
}

Eigen::RowVectorXd MlpModel::forward_normalized(const Eigen::MatrixXd& inputs) const {
    Eigen::MatrixXd act = inputs;
    for (std::size_t l = 0; l < layers_.size(); ++l) {
        Eigen::MatrixXd z = layers_[l].weight * act;
        z.colwise() += layers_[l].bias;
        if (l + 1 < layers_.size()) z = z.cwiseMax(0.0);
        act = std::move(z);
    }
    return act.row(0);
}

double MlpModel::predict(std::span<const double> x) const {
    Eigen::VectorXd act = normalize_input(x);
    for (std::size_t l = 0; l < layers_.size(); ++l) {
        Eigen::VectorXd z = layers_[l].weight * act + layers_[l].bias;
        if (l + 1 < layers_.size()) z = z.cwiseMax(0.0);
        act = std::move(z);
    }
    return target_mean_ + target_scale_ * act[0];
}

std::vector<double> MlpModel::predict(const DesignMatrix& x) const {
    const Eigen::RowVectorXd out = forward_normalized(normalize_inputs(x));
    std::vector<double> y(static_cast<std::size_t>(out.size()));
    for (Eigen::Index i = 0; i < out.size(); ++i)
        y[static_cast<std::size_t>(i)] = target_mean_ + target_scale_ * out[i];
    return y;
}

std::size_t MlpModel::parameter_count() const {
    std::size_t n = 0;
    for (const auto& l : layers_) n += static_cast<std::size_t>(l.weight.size() + l.bias.size());
    return n;
}

bool MlpModel::all_finite() const {
    for (const auto& l : layers_) {
        if (!l.weight.allFinite() || !l.bias.allFinite()) return false;
    }
    return true;
}

MlpModel build(const MlpSpec& spec, std::uint64_t seed) {
    if (spec.input_dim == 0) throw ConfigError("network input dimension must be positive");
    if (spec.output_dim != 1) throw ConfigError("surrogate networks have a single output");
    Rng rng(seed);
    std::vector<DenseLayer> layers;
    std::size_t fan_in = spec.input_dim;
    for (std::size_t l = 0; l <= spec.hidden_dims.size(); ++l) {
        const std::size_t fan_out = l < spec.hidden_dims.size() ? spec.hidden_dims[l] : spec.output_dim;
        if (fan_out == 0) throw ConfigError("hidden layer width must be positive");
        const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
        DenseLayer layer;
        layer.weight.resize(static_cast<Eigen::Index>(fan_out), static_cast<Eigen::Index>(fan_in));
        for (Eigen::Index r = 0; r < layer.weight.rows(); ++r)
            for (Eigen::Index c = 0; c < layer.weight.cols(); ++c)
                layer.weight(r, c) = rng.uniform(-bound, bound);
        layer.bias = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(fan_out));
        layers.push_back(std::move(layer));
        fan_in = fan_out;
    }
    return MlpModel(spec, std::move(layers));
}

double predict(const MlpModel& model, std::span<const double> x) { return model.predict(x); }

namespace {

/// Forward/backward scratch for one mini-batch.
struct Workspace {
    std::vector<Eigen::MatrixXd> pre;   // pre-activations per layer
    std::vector<Eigen::MatrixXd> post;  // activations per layer (post[0] = input)
    Eigen::MatrixXd delta;
    Eigen::MatrixXd delta_prev;
};

/// Returns the batch MSE; fills `grads` with its gradients.
double backprop(const std::vector<DenseLayer>& layers, const Eigen::MatrixXd& inputs,
                const Eigen::RowVectorXd& targets, std::vector<DenseLayer>& grads, Workspace& ws) {
    const std::size_t depth = layers.size();
    const double batch = static_cast<double>(inputs.cols());
    ws.pre.resize(depth);
    ws.post.resize(depth + 1);
    ws.post[0] = inputs;
    for (std::size_t l = 0; l < depth; ++l) {
        ws.pre[l].noalias() = layers[l].weight * ws.post[l];
        ws.pre[l].colwise() += layers[l].bias;
        if (l + 1 < depth)
            ws.post[l + 1] = ws.pre[l].cwiseMax(0.0);
        else
            ws.post[l + 1] = ws.pre[l];
    }
    const Eigen::RowVectorXd residual = ws.post[depth].row(0) - targets;
    const double loss = residual.squaredNorm() / batch;

    ws.delta = (2.0 / batch) * residual;
    for (std::size_t l = depth; l-- > 0;) {
        grads[l].weight.noalias() = ws.delta * ws.post[l].transpose();
        grads[l].bias = ws.delta.rowwise().sum();
        if (l == 0) break;
        ws.delta_prev.noalias() = layers[l].weight.transpose() * ws.delta;
        ws.delta = (ws.pre[l - 1].array() > 0.0).select(ws.delta_prev.array(), 0.0).matrix();
    }
    return loss;
}

std::vector<DenseLayer> zero_like(const std::vector<DenseLayer>& layers) {
    std::vector<DenseLayer> out(layers.size());
    for (std::size_t l = 0; l < layers.size(); ++l) {
        out[l].weight = Eigen::MatrixXd::Zero(layers[l].weight.rows(), layers[l].weight.cols());
        out[l].bias = Eigen::VectorXd::Zero(layers[l].bias.size());
    }
    return out;
}

Eigen::RowVectorXd normalized_targets(const MlpModel& model, const std::vector<double>& y) {
    Eigen::RowVectorXd t(static_cast<Eigen::Index>(y.size()));
    for (std::size_t i = 0; i < y.size(); ++i)
        t[static_cast<Eigen::Index>(i)] = (y[i] - model.target_mean()) / model.target_scale();
    return t;
}

void check_dataset(const MlpModel& model, const Dataset& data) {
    if (data.size() == 0) throw DimensionError("dataset is empty");
    if (static_cast<std::size_t>(data.x.rows()) != data.y.size())
        throw DimensionError("dataset has mismatched x rows and y length");
    if (static_cast<std::size_t>(data.x.cols()) != model.input_dim())
        throw DimensionError("dataset width does not match model input dimension");
}

}  // namespace

void adam_update(std::span<double> params, std::span<const double> grads, AdamState& state,
                 const TrainParams& hp) {
    if (params.size() != grads.size()) throw DimensionError("Adam parameter/gradient size mismatch");
    if (state.first.size() != params.size()) {
        state.first.assign(params.size(), 0.0);
        state.second.assign(params.size(), 0.0);
    }
    ++state.step;
    const double c1 = 1.0 - std::pow(hp.adam_beta1, static_cast<double>(state.step));
    const double c2 = 1.0 - std::pow(hp.adam_beta2, static_cast<double>(state.step));
    using Array = Eigen::Map<Eigen::ArrayXd>;
    const auto n = static_cast<Eigen::Index>(params.size());
    Array p(params.data(), n), m(state.first.data(), n), v(state.second.data(), n);
    const Eigen::Map<const Eigen::ArrayXd> g(grads.data(), n);
    m = hp.adam_beta1 * m + (1.0 - hp.adam_beta1) * g;
    v = hp.adam_beta2 * v + (1.0 - hp.adam_beta2) * g * g;
    p -= hp.learning_rate * (m / c1) / ((v / c2).sqrt() + hp.adam_epsilon);
}

LossAndGradients loss_and_gradients(const MlpModel& model, const Dataset& batch) {
    check_dataset(model, batch);
    LossAndGradients out;
    out.gradients = zero_like(model.layers());
    Workspace ws;
    out.loss = backprop(model.layers(), model.normalize_inputs(batch.x),
                        normalized_targets(model, batch.y), out.gradients, ws);
    return out;
}

TrainResult train(MlpModel model, const Dataset& data, const TrainParams& params,
                  std::uint64_t seed) {
    check_dataset(model, data);
    if (params.epochs < 0 || params.batch_size == 0)
        throw ConfigError("epochs must be non-negative and batch size positive");

    const std::size_t n = data.size();
    const double mean = std::accumulate(data.y.begin(), data.y.end(), 0.0) / static_cast<double>(n);
    double var = 0.0;
    for (double v : data.y) var += (v - mean) * (v - mean);
    var /= static_cast<double>(n);
    const double scale = std::sqrt(var);
    model.set_target_normalization(mean, scale > 1e-12 * std::max(1.0, std::abs(mean)) ? scale : 1.0);

    const Eigen::MatrixXd inputs = model.normalize_inputs(data.x);
    const Eigen::RowVectorXd targets = normalized_targets(model, data.y);

    TrainResult result;
    {
        const Eigen::RowVectorXd out = model.forward_normalized(inputs);
        result.initial_mse = (out - targets).squaredNorm() / static_cast<double>(n);
    }

    auto& layers = model.layers();
    std::vector<DenseLayer> grads = zero_like(layers);
    std::vector<AdamState> weight_state(layers.size());
    std::vector<AdamState> bias_state(layers.size());
    Workspace ws;
    Eigen::MatrixXd batch_x;
    Eigen::RowVectorXd batch_t;

    Rng rng(seed);
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    const auto span_of = [](auto& m) { return std::span(m.data(), static_cast<std::size_t>(m.size())); };

    result.epoch_mse.reserve(static_cast<std::size_t>(params.epochs));
    for (int epoch = 1; epoch <= params.epochs; ++epoch) {
        rng.shuffle(std::span<std::size_t>(order));
        double epoch_loss = 0.0;
        for (std::size_t start = 0; start < n; start += params.batch_size) {
            const std::size_t b = std::min(params.batch_size, n - start);
            batch_x.resize(inputs.rows(), static_cast<Eigen::Index>(b));
            batch_t.resize(static_cast<Eigen::Index>(b));
            for (std::size_t k = 0; k < b; ++k) {
                batch_x.col(static_cast<Eigen::Index>(k)) = inputs.col(static_cast<Eigen::Index>(order[start + k]));
                batch_t[static_cast<Eigen::Index>(k)] = targets[static_cast<Eigen::Index>(order[start + k])];
            }
            const double loss = backprop(layers, batch_x, batch_t, grads, ws);
            if (!std::isfinite(loss))
                throw DivergenceError(epoch, "training diverged: non-finite loss in epoch " +
                                                 std::to_string(epoch));
            epoch_loss += loss * static_cast<double>(b);
            for (std::size_t l = 0; l < layers.size(); ++l) {
                adam_update(span_of(layers[l].weight), span_of(grads[l].weight), weight_state[l], params);
                adam_update(span_of(layers[l].bias), span_of(grads[l].bias), bias_state[l], params);
            }
        }
        result.epoch_mse.push_back(epoch_loss / static_cast<double>(n));
    }
    result.final_mse = result.epoch_mse.empty() ? result.initial_mse : result.epoch_mse.back();
    result.model = std::move(model);
    return result;
}

double gradient_check(const MlpModel& model, const Dataset& batch, double step) {
    const LossAndGradients analytic = loss_and_gradients(model, batch);
    const Eigen::MatrixXd inputs = model.normalize_inputs(batch.x);
    const Eigen::RowVectorXd targets = normalized_targets(model, batch.y);
    const auto loss_of = [&](const std::vector<DenseLayer>& layers) {
        MlpModel probe(model.spec(), layers);
        const Eigen::RowVectorXd out = probe.forward_normalized(inputs);
        return (out - targets).squaredNorm() / static_cast<double>(targets.size());
    };

    std::vector<DenseLayer> layers = model.layers();
    double worst = 0.0;
    const auto compare = [&](double& param, double grad) {
        const double saved = param;
        param = saved + step;
        const double up = loss_of(layers);
        param = saved - step;
        const double down = loss_of(layers);
        param = saved;
        const double numeric = (up - down) / (2.0 * step);
        const double denom = std::max({std::abs(grad), std::abs(numeric), 1e-6});
        worst = std::max(worst, std::abs(grad - numeric) / denom);
    };
    for (std::size_t l = 0; l < layers.size(); ++l) {
        for (Eigen::Index i = 0; i < layers[l].weight.size(); ++i)
            compare(layers[l].weight.data()[i], analytic.gradients[l].weight.data()[i]);
        for (Eigen::Index i = 0; i < layers[l].bias.size(); ++i)
            compare(layers[l].bias.data()[i], analytic.gradients[l].bias.data()[i]);
    }
    return worst;
}

namespace {

constexpr std::uint8_t kModelVersion = 1;
constexpr char kModelMagic[7] = {'P', 'T', 'M', 'E', 'M', 'L', 'P'};

template <class T>
void put(std::ostream& out, T value) {
    out.write(reinterpret_cast<const char*>(&value), sizeof value);
}

template <class T>
T get(std::istream& in) {
    T value{};
    in.read(reinterpret_cast<char*>(&value), sizeof value);
    if (!in) throw ConfigError("model file is truncated");
    return value;
}

}  // namespace

void save_model(std::ostream& out, const MlpModel& model) {
    const MlpSpec& spec = model.spec();
    put<std::uint8_t>(out, kModelVersion);
    out.write(kModelMagic, sizeof kModelMagic);
    put<std::uint64_t>(out, spec.input_dim);
    put<std::uint64_t>(out, spec.hidden_dims.size());
    for (auto h : spec.hidden_dims) put<std::uint64_t>(out, h);
    put<std::uint64_t>(out, spec.output_dim);
    put<std::uint8_t>(out, spec.input_lower.empty() ? 0 : 1);
    for (double v : spec.input_lower) put<double>(out, v);
    for (double v : spec.input_upper) put<double>(out, v);
    put<double>(out, model.target_mean());
    put<double>(out, model.target_scale());
    for (const auto& layer : model.layers()) {
        for (Eigen::Index r = 0; r < layer.weight.rows(); ++r)
            for (Eigen::Index c = 0; c < layer.weight.cols(); ++c) put<double>(out, layer.weight(r, c));
        for (Eigen::Index r = 0; r < layer.bias.size(); ++r) put<double>(out, layer.bias[r]);
    }
    if (!out) throw ConfigError("failed writing model");
}

MlpModel load_model(std::istream& in) {
    const auto version = get<std::uint8_t>(in);
    if (version != kModelVersion)
        throw ConfigError("unsupported model file version " + std::to_string(version));
    char magic[sizeof kModelMagic];
    in.read(magic, sizeof magic);
    if (!in || std::memcmp(magic, kModelMagic, sizeof magic) != 0)
        throw ConfigError("not a model file (bad magic)");
    MlpSpec spec;
    spec.input_dim = get<std::uint64_t>(in);
    const auto hidden = get<std::uint64_t>(in);
    if (hidden > 64) throw ConfigError("implausible hidden layer count in model file");
    for (std::uint64_t i = 0; i < hidden; ++i) spec.hidden_dims.push_back(get<std::uint64_t>(in));
    spec.output_dim = get<std::uint64_t>(in);
    if (get<std::uint8_t>(in)) {
        spec.input_lower.resize(spec.input_dim);
        spec.input_upper.resize(spec.input_dim);
        for (auto& v : spec.input_lower) v = get<double>(in);
        for (auto& v : spec.input_upper) v = get<double>(in);
    }
    const double mean = get<double>(in);
    const double scale = get<double>(in);
    std::vector<DenseLayer> layers;
    std::size_t fan_in = spec.input_dim;
    for (std::size_t l = 0; l <= spec.hidden_dims.size(); ++l) {
        const std::size_t fan_out = l < spec.hidden_dims.size() ? spec.hidden_dims[l] : spec.output_dim;
        DenseLayer layer;
        layer.weight.resize(static_cast<Eigen::Index>(fan_out), static_cast<Eigen::Index>(fan_in));
        for (Eigen::Index r = 0; r < layer.weight.rows(); ++r)
            for (Eigen::Index c = 0; c < layer.weight.cols(); ++c) layer.weight(r, c) = get<double>(in);
        layer.bias.resize(static_cast<Eigen::Index>(fan_out));
        for (Eigen::Index r = 0; r < layer.bias.size(); ++r) layer.bias[r] = get<double>(in);
        layers.push_back(std::move(layer));
        fan_in = fan_out;
    }
    MlpModel model(std::move(spec), std::move(layers));
    model.set_target_normalization(mean, scale);
    return model;
}

void save_model(const std::string& path, const MlpModel& model) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot open '" + path + "' for writing");
    save_model(out, model);
}

MlpModel load_model(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open model file '" + path + "'");
    return load_model(in);
}

}  // namespace ptme
