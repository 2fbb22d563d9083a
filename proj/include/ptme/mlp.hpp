#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "ptme/design_space.hpp"

namespace ptme {

/// Dense ReLU network shape. Inputs are mapped affinely from
/// [input_lower, input_upper] to [0, 1] before the first layer; empty bounds
/// mean the identity map.
struct MlpSpec {
    std::size_t input_dim = 0;
    std::vector<std::size_t> hidden_dims;
    std::size_t output_dim = 1;
    std::vector<double> input_lower;
    std::vector<double> input_upper;

    /// Two hidden layers: round(1.5 * D) then D.
    static MlpSpec for_dim(std::size_t input_dim);
    static MlpSpec for_space(const DesignSpace& space);
};

struct DenseLayer {
    Eigen::MatrixXd weight;  // out x in
    Eigen::VectorXd bias;
};

struct TrainParams {
    int epochs = 100;
    std::size_t batch_size = 32;
    double learning_rate = 1.0e-4;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_epsilon = 1.0e-8;
};

class MlpModel {
public:
    MlpModel() = default;
    MlpModel(MlpSpec spec, std::vector<DenseLayer> layers);

    const MlpSpec& spec() const noexcept { return spec_; }
    std::size_t input_dim() const noexcept { return spec_.input_dim; }

    std::vector<DenseLayer>& layers() noexcept { return layers_; }
    const std::vector<DenseLayer>& layers() const noexcept { return layers_; }

    double target_mean() const noexcept { return target_mean_; }
    double target_scale() const noexcept { return target_scale_; }
    void set_target_normalization(double mean, double scale);

    /// Raw sample -> normalized network input.
    Eigen::VectorXd normalize_input(std::span<const double> x) const;
    /// Raw samples (one per row) -> normalized inputs (one per column).
    Eigen::MatrixXd normalize_inputs(const DesignMatrix& x) const;

    double predict(std::span<const double> x) const;
    std::vector<double> predict(const DesignMatrix& x) const;

    /// Network output in normalized target units for normalized inputs.
    Eigen::RowVectorXd forward_normalized(const Eigen::MatrixXd& inputs) const;

    std::size_t parameter_count() const;
    bool all_finite() const;

private:
    MlpSpec spec_;
    std::vector<DenseLayer> layers_;
    Eigen::VectorXd input_offset_;
    Eigen::VectorXd input_scale_;
    double target_mean_ = 0.0;
    double target_scale_ = 1.0;
};

/// Glorot-uniform weights (bound sqrt(6 / (fan_in + fan_out))), zero biases.
MlpModel build(const MlpSpec& spec, std::uint64_t seed);

double predict(const MlpModel& model, std::span<const double> x);

struct TrainResult {
    MlpModel model;
    double initial_mse = 0.0;  // full training set, before the first update
    std::vector<double> epoch_mse;  // running mean of mini-batch losses per epoch
    double final_mse = 0.0;
};

/// Mini-batch Adam on mean squared error in standardized target units. Sets
/// the model's target normalization from the training targets.
TrainResult train(MlpModel model, const Dataset& data, const TrainParams& params,
                  std::uint64_t seed);

struct LossAndGradients {
    double loss = 0.0;
    std::vector<DenseLayer> gradients;  // same shapes as the model layers
};

/// Batch MSE in normalized target units and its exact parameter gradients.
LossAndGradients loss_and_gradients(const MlpModel& model, const Dataset& batch);

/// Maximum relative error between backprop and central finite differences
/// (step 1e-5) over every parameter.
double gradient_check(const MlpModel& model, const Dataset& batch, double step = 1.0e-5);

/// Adam moment state over a flat parameter vector.
struct AdamState {
    std::vector<double> first;
    std::vector<double> second;
    long step = 0;
};

/// One bias-corrected Adam update. `step` in the state is incremented first.
void adam_update(std::span<double> params, std::span<const double> grads, AdamState& state,
                 const TrainParams& hp);

/// Binary model container: version byte, magic "PTMEMLP", dims, input
/// bounds, target normalization, then each layer's weights (row-major) and
/// biases, all little-endian.
void save_model(std::ostream& out, const MlpModel& model);
MlpModel load_model(std::istream& in);
void save_model(const std::string& path, const MlpModel& model);
MlpModel load_model(const std::string& path);

}  // namespace ptme
