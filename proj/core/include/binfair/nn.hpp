#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string_view>
#include <variant>
#include <vector>

#include <Eigen/Dense>

namespace binfair {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

enum class Activation { sigmoid, relu, identity, softmax };
enum class BinaryMode { stochastic, deterministic, expected };

std::string_view to_string(Activation a);
std::string_view to_string(BinaryMode m);
Activation parse_activation(std::string_view s);
BinaryMode parse_binary_mode(std::string_view s);

/// Bernoulli parameters are kept inside [kThetaFloor, 1 - kThetaFloor] so that
/// entropies stay finite and sampling never degenerates.
inline constexpr double kThetaFloor = 1e-7;

/// Full-precision layer: activation(W x + b).
struct DenseLayer {
  Matrix weights;  // out_dim x in_dim
  Vector bias;     // out_dim
  Activation activation = Activation::relu;

  std::size_t in_dim() const { return static_cast<std::size_t>(weights.cols()); }
  std::size_t out_dim() const { return static_cast<std::size_t>(weights.rows()); }
};

/// Layer of stochastically quantized binary neurons.
///
/// Neuron i computes theta_i = sigmoid(mean_j(w_ij * t_j) [+ b_i]); the mean
/// runs over the previous layer's width. The emitted activation depends on
/// the mode: a Bernoulli(theta_i) draw, the indicator [mean_j(w_ij t_j) >= 0.5],
/// or theta_i itself.
struct StochasticBinaryLayer {
  Matrix weights;  // width x in_dim
  Vector bias;     // width when include_bias, otherwise empty
  BinaryMode mode = BinaryMode::stochastic;
  bool include_bias = false;

  std::size_t in_dim() const { return static_cast<std::size_t>(weights.cols()); }
  std::size_t out_dim() const { return static_cast<std::size_t>(weights.rows()); }
};

using Layer = std::variant<DenseLayer, StochasticBinaryLayer>;

/// Layer layout for init_params. The stochastic layer sits after `hidden`
/// and before `head`; with an empty head it is the penultimate layer.
struct NetworkConfig {
  std::size_t input_dim = 0;
  std::vector<std::size_t> hidden;
  Activation hidden_activation = Activation::relu;
  std::size_t binary_width = 8;
  bool binary_bias = false;
  std::vector<std::size_t> head;
  /// 2 gives a single sigmoid output, more gives a softmax.
  std::size_t num_classes = 2;
};

/// Ordered layer stack holding exactly one stochastic binary layer; every
/// other layer is full precision.
class Network {
 public:
  explicit Network(std::vector<Layer> layers);

  const std::vector<Layer>& layers() const { return layers_; }
  std::size_t size() const { return layers_.size(); }
  std::size_t stochastic_index() const { return stochastic_index_; }
  bool hybrid() const { return true; }

  std::size_t input_dim() const;
  std::size_t output_dim() const;
  std::size_t binary_width() const { return binary_layer().out_dim(); }

  const StochasticBinaryLayer& binary_layer() const;
  StochasticBinaryLayer& binary_layer();

  /// Weight matrix and bias of layer k, whatever its kind.
  Matrix& weights(std::size_t k);
  const Matrix& weights(std::size_t k) const;
  Vector& bias(std::size_t k);
  const Vector& bias(std::size_t k) const;

  std::size_t parameter_count() const;

  /// Throws ConfigError on incompatible dimensions, NumericError on
  /// non-finite parameters.
  void validate() const;

 private:
  std::vector<Layer> layers_;
  std::size_t stochastic_index_ = 0;
};

/// Per-batch record of a forward pass.
struct BatchTrace {
  BinaryMode mode = BinaryMode::expected;
  /// activations[0] is the input batch; activations[k + 1] is the output of
  /// layer k. For the binary layer that is the emitted activation.
  std::vector<Matrix> activations;
  /// Pre-activation of each layer. For the binary layer this is the
  /// weighted mean fed to the sigmoid.
  std::vector<Matrix> preactivations;
  Matrix theta;    // batch x width, clamped Bernoulli parameters
  Matrix samples;  // batch x width, emitted binary-layer activation

  const Matrix& output() const { return activations.back(); }
  std::size_t batch_size() const { return static_cast<std::size_t>(activations.front().rows()); }
};

/// One weight/bias gradient pair per layer, shaped like the network.
struct LayerGradient {
  Matrix weights;
  Vector bias;
};
using Gradients = std::vector<LayerGradient>;

/// Runs the network on `batch` (rows are examples). `seed` drives the
/// Bernoulli draws in stochastic mode; `mode` overrides the layer's mode.
BatchTrace forward(const Network& net, const Matrix& batch, std::uint64_t seed,
                   std::optional<BinaryMode> mode = std::nullopt);

/// Backpropagates `output_grad` (dLoss/dOutput, batch x output_dim) and the
/// optional direct `theta_grad` (dLoss/dTheta, batch x width) through the
/// trace. The sampling step is treated as the identity on theta
/// (straight-through), so the result is exact in expected mode.
Gradients backward(const Network& net, const BatchTrace& trace, const Matrix& output_grad,
                   const Matrix* theta_grad = nullptr);

Gradients zero_gradients(const Network& net);

struct AdamState {
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::uint64_t step = 0;
  Gradients first_moment;
  Gradients second_moment;

  static AdamState for_network(const Network& net, double learning_rate = 1e-4);
};

/// One bias-corrected ADAM update of every parameter of `net`.
void adam_step(Network& net, const Gradients& grads, AdamState& state);

/// Glorot-uniform weights, zero biases, deterministic in `seed`.
Network init_params(const NetworkConfig& config, std::uint64_t seed);

}  // namespace binfair
