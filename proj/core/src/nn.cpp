#include "binfair/nn.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "binfair/errors.hpp"
#include "binfair/rng.hpp"

namespace binfair {

std::string_view to_string(Activation a) {
  switch (a) {
    case Activation::sigmoid: return "sigmoid";
    case Activation::relu: return "relu";
    case Activation::identity: return "identity";
    case Activation::softmax: return "softmax";
  }
  return "?";
}

std::string_view to_string(BinaryMode m) {
  switch (m) {
    case BinaryMode::stochastic: return "stochastic";
    case BinaryMode::deterministic: return "deterministic";
    case BinaryMode::expected: return "expected";
  }
  return "?";
}

Activation parse_activation(std::string_view s) {
  if (s == "sigmoid") return Activation::sigmoid;
  if (s == "relu") return Activation::relu;
  if (s == "identity") return Activation::identity;
  if (s == "softmax") return Activation::softmax;
  throw ConfigError("unknown activation '" + std::string(s) + "'");
}

BinaryMode parse_binary_mode(std::string_view s) {
  if (s == "stochastic") return BinaryMode::stochastic;
  if (s == "deterministic") return BinaryMode::deterministic;
  if (s == "expected") return BinaryMode::expected;
  throw ConfigError("unknown binary mode '" + std::string(s) + "'");
}

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

double clamp_theta(double t) { return std::clamp(t, kThetaFloor, 1.0 - kThetaFloor); }

void apply_activation(Activation act, Matrix& z) {
  switch (act) {
    case Activation::sigmoid:
      z = z.unaryExpr([](double v) { return sigmoid(v); });
      break;
    case Activation::relu:
      z = z.cwiseMax(0.0);
      break;
    case Activation::identity:
      break;
    case Activation::softmax:
      for (Eigen::Index r = 0; r < z.rows(); ++r) {
        auto row = z.row(r);
        row.array() -= row.maxCoeff();
        row = row.array().exp().matrix();
        row /= row.sum();
      }
      break;
  }
}

// Gradient w.r.t. the pre-activation given the gradient w.r.t. the output.
Matrix activation_backward(Activation act, const Matrix& pre, const Matrix& out, const Matrix& grad) {
  switch (act) {
    case Activation::sigmoid:
      return (grad.array() * out.array() * (1.0 - out.array())).matrix();
    case Activation::relu:
      return (grad.array() * (pre.array() > 0.0).cast<double>()).matrix();
    case Activation::identity:
      return grad;
    case Activation::softmax: {
      Matrix dz(grad.rows(), grad.cols());
      for (Eigen::Index r = 0; r < grad.rows(); ++r) {
        const double dot = grad.row(r).dot(out.row(r));
        dz.row(r) = (out.row(r).array() * (grad.row(r).array() - dot)).matrix();
      }
      return dz;
    }
  }
  return grad;
}

void check_finite(const Matrix& m, std::size_t layer) {
  if (!m.allFinite()) throw NumericError(layer, "non-finite activation");
}

}  // namespace

Network::Network(std::vector<Layer> layers) : layers_(std::move(layers)) {
  for (std::size_t k = 0; k < layers_.size(); ++k)
    if (std::holds_alternative<StochasticBinaryLayer>(layers_[k])) stochastic_index_ = k;
  validate();
}

void Network::validate() const {
  if (layers_.empty()) throw ConfigError("network has no layers");
  std::size_t stochastic_count = 0;
  for (std::size_t k = 0; k < layers_.size(); ++k) {
    if (std::holds_alternative<StochasticBinaryLayer>(layers_[k])) {
      ++stochastic_count;
      const auto& b = std::get<StochasticBinaryLayer>(layers_[k]);
      if (b.out_dim() == 0) throw ConfigError("stochastic layer must have at least one neuron");
      if (b.include_bias && static_cast<std::size_t>(b.bias.size()) != b.out_dim())
        throw ConfigError("stochastic layer bias size mismatch");
      if (!b.include_bias && b.bias.size() != 0)
        throw ConfigError("stochastic layer has a bias but include_bias is off");
    } else {
      const auto& d = std::get<DenseLayer>(layers_[k]);
      if (static_cast<std::size_t>(d.bias.size()) != d.out_dim())
        throw ConfigError("dense layer " + std::to_string(k) + " bias size mismatch");
      if (d.activation == Activation::softmax && k + 1 != layers_.size())
        throw ConfigError("softmax is only allowed on the output layer");
    }
    if (k > 0) {
      const std::size_t prev_out = std::visit([](const auto& l) { return l.out_dim(); }, layers_[k - 1]);
      const std::size_t in = std::visit([](const auto& l) { return l.in_dim(); }, layers_[k]);
      if (prev_out != in)
        throw ConfigError("layer " + std::to_string(k) + " expects " + std::to_string(in) +
                          " inputs but layer " + std::to_string(k - 1) + " emits " + std::to_string(prev_out));
    }
    if (!weights(k).allFinite() || !bias(k).allFinite()) throw NumericError(k, "non-finite parameter");
  }
  if (stochastic_count != 1)
    throw ConfigError("network must contain exactly one stochastic binary layer, found " +
                      std::to_string(stochastic_count));
}

std::size_t Network::input_dim() const {
  return std::visit([](const auto& l) { return l.in_dim(); }, layers_.front());
}

std::size_t Network::output_dim() const {
  return std::visit([](const auto& l) { return l.out_dim(); }, layers_.back());
}

const StochasticBinaryLayer& Network::binary_layer() const {
  return std::get<StochasticBinaryLayer>(layers_[stochastic_index_]);
}

StochasticBinaryLayer& Network::binary_layer() {
  return std::get<StochasticBinaryLayer>(layers_[stochastic_index_]);
}

Matrix& Network::weights(std::size_t k) {
  return std::visit([](auto& l) -> Matrix& { return l.weights; }, layers_.at(k));
}
const Matrix& Network::weights(std::size_t k) const {
  return std::visit([](const auto& l) -> const Matrix& { return l.weights; }, layers_.at(k));
}
Vector& Network::bias(std::size_t k) {
  return std::visit([](auto& l) -> Vector& { return l.bias; }, layers_.at(k));
}
const Vector& Network::bias(std::size_t k) const {
  return std::visit([](const auto& l) -> const Vector& { return l.bias; }, layers_.at(k));
}

std::size_t Network::parameter_count() const {
  std::size_t n = 0;
  for (std::size_t k = 0; k < layers_.size(); ++k)
    n += static_cast<std::size_t>(weights(k).size() + bias(k).size());
  return n;
}

BatchTrace forward(const Network& net, const Matrix& batch, std::uint64_t seed, std::optional<BinaryMode> mode) {
  if (static_cast<std::size_t>(batch.cols()) != net.input_dim())
    throw ConfigError("batch has " + std::to_string(batch.cols()) + " columns, network expects " +
                      std::to_string(net.input_dim()));

  BatchTrace trace;
  trace.mode = mode.value_or(net.binary_layer().mode);
  trace.activations.reserve(net.size() + 1);
  trace.preactivations.reserve(net.size());
  trace.activations.push_back(batch);
  Rng rng(seed);

  for (std::size_t k = 0; k < net.size(); ++k) {
    const Matrix& x = trace.activations.back();
    if (const auto* dense = std::get_if<DenseLayer>(&net.layers()[k])) {
      Matrix z = x * dense->weights.transpose();
      z.rowwise() += dense->bias.transpose();
      Matrix a = z;
      apply_activation(dense->activation, a);
      check_finite(a, k);
      trace.preactivations.push_back(std::move(z));
      trace.activations.push_back(std::move(a));
      continue;
    }

    const auto& bin = std::get<StochasticBinaryLayer>(net.layers()[k]);
    Matrix pre = (x * bin.weights.transpose()) / static_cast<double>(bin.in_dim());
    if (bin.include_bias) pre.rowwise() += bin.bias.transpose();
    check_finite(pre, k);

    Matrix theta = pre.unaryExpr([](double v) { return clamp_theta(sigmoid(v)); });
    Matrix emitted(theta.rows(), theta.cols());
    switch (trace.mode) {
      case BinaryMode::stochastic:
        for (Eigen::Index r = 0; r < theta.rows(); ++r)
          for (Eigen::Index i = 0; i < theta.cols(); ++i)
            emitted(r, i) = rng.bernoulli(theta(r, i)) ? 1.0 : 0.0;
        break;
      case BinaryMode::deterministic:
        emitted = (pre.array() >= 0.5).cast<double>().matrix();
        break;
      case BinaryMode::expected:
        emitted = theta;
        break;
    }
    trace.theta = std::move(theta);
    trace.samples = emitted;
    trace.preactivations.push_back(std::move(pre));
    trace.activations.push_back(std::move(emitted));
  }
  return trace;
}

Gradients zero_gradients(const Network& net) {
  Gradients g(net.size());
  for (std::size_t k = 0; k < net.size(); ++k) {
    g[k].weights = Matrix::Zero(net.weights(k).rows(), net.weights(k).cols());
    g[k].bias = Vector::Zero(net.bias(k).size());
  }
  return g;
}

Gradients backward(const Network& net, const BatchTrace& trace, const Matrix& output_grad, const Matrix* theta_grad) {
  if (trace.activations.size() != net.size() + 1 || trace.preactivations.size() != net.size())
    throw ContractViolation("trace does not belong to this network (layer count)");
  for (std::size_t k = 0; k < net.size(); ++k) {
    if (trace.activations[k].cols() != net.weights(k).cols() ||
        trace.activations[k + 1].cols() != net.weights(k).rows())
      throw ContractViolation("trace does not belong to this network (layer " + std::to_string(k) + ")");
  }
  const Eigen::Index rows = trace.activations.front().rows();
  if (output_grad.rows() != rows || output_grad.cols() != trace.output().cols())
    throw ContractViolation("output gradient shape does not match the trace");
  if (theta_grad && (theta_grad->rows() != rows || theta_grad->cols() != trace.theta.cols()))
    throw ContractViolation("theta gradient shape does not match the trace");

  Gradients grads(net.size());
  Matrix g = output_grad;
  for (std::size_t k = net.size(); k-- > 0;) {
    const Matrix& x = trace.activations[k];
    Matrix dpre;
    double scale = 1.0;
    if (const auto* dense = std::get_if<DenseLayer>(&net.layers()[k])) {
      dpre = activation_backward(dense->activation, trace.preactivations[k], trace.activations[k + 1], g);
    } else {
      const auto& bin = std::get<StochasticBinaryLayer>(net.layers()[k]);
      // straight-through: d(sample)/d(theta) := 1
      Matrix dtheta = g;
      if (theta_grad) dtheta += *theta_grad;
      const Matrix& pre = trace.preactivations[k];
      dpre.resize(pre.rows(), pre.cols());
      for (Eigen::Index r = 0; r < pre.rows(); ++r) {
        for (Eigen::Index i = 0; i < pre.cols(); ++i) {
          const double s = sigmoid(pre(r, i));
          const bool clamped = s <= kThetaFloor || s >= 1.0 - kThetaFloor;
          dpre(r, i) = clamped ? 0.0 : dtheta(r, i) * s * (1.0 - s);
        }
      }
      scale = 1.0 / static_cast<double>(bin.in_dim());
    }
    grads[k].weights = (dpre.transpose() * x) * scale;
    grads[k].bias = net.bias(k).size() > 0 ? Vector(dpre.colwise().sum().transpose()) : Vector();
    if (k > 0) g = (dpre * net.weights(k)) * scale;
  }
  return grads;
}

AdamState AdamState::for_network(const Network& net, double learning_rate) {
  AdamState s;
  s.learning_rate = learning_rate;
  s.first_moment = zero_gradients(net);
  s.second_moment = zero_gradients(net);
  return s;
}

void adam_step(Network& net, const Gradients& grads, AdamState& state) {
  if (grads.size() != net.size()) throw ContractViolation("gradient set has the wrong layer count");
  if (state.first_moment.empty()) {
    state.first_moment = zero_gradients(net);
    state.second_moment = zero_gradients(net);
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(state.beta1, t);
  const double c2 = 1.0 - std::pow(state.beta2, t);

  auto update = [&](auto& param, const auto& grad, auto& m, auto& v) {
    if (param.size() != grad.size() || m.size() != grad.size())
      throw ContractViolation("ADAM shape mismatch");
    m = state.beta1 * m + (1.0 - state.beta1) * grad;
    v = state.beta2 * v + (1.0 - state.beta2) * grad.cwiseProduct(grad);
    param.array() -= state.learning_rate * (m.array() / c1) / ((v.array() / c2).sqrt() + state.epsilon);
  };
  for (std::size_t k = 0; k < net.size(); ++k) {
    update(net.weights(k), grads[k].weights, state.first_moment[k].weights, state.second_moment[k].weights);
    update(net.bias(k), grads[k].bias, state.first_moment[k].bias, state.second_moment[k].bias);
  }
}

Network init_params(const NetworkConfig& config, std::uint64_t seed) {
  if (config.input_dim == 0) throw ConfigError("input_dim must be positive");
  if (config.binary_width == 0) throw ConfigError("binary_width must be positive");
  if (config.num_classes < 2) throw ConfigError("num_classes must be at least 2");
  if (config.hidden_activation == Activation::softmax) throw ConfigError("softmax is not a hidden activation");

  Rng rng(seed);
  auto glorot = [&](std::size_t out, std::size_t in) {
    const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
    Matrix w(out, in);
    for (Eigen::Index r = 0; r < w.rows(); ++r)
      for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = rng.uniform(-limit, limit);
    return w;
  };

  std::vector<Layer> layers;
  std::size_t width = config.input_dim;
  for (std::size_t h : config.hidden) {
    layers.emplace_back(DenseLayer{glorot(h, width), Vector::Zero(h), config.hidden_activation});
    width = h;
  }
  StochasticBinaryLayer bin;
  bin.weights = glorot(config.binary_width, width);
  if (config.binary_bias) bin.bias = Vector::Zero(config.binary_width);
  bin.include_bias = config.binary_bias;
  layers.emplace_back(std::move(bin));
  width = config.binary_width;
  for (std::size_t h : config.head) {
    layers.emplace_back(DenseLayer{glorot(h, width), Vector::Zero(h), config.hidden_activation});
    width = h;
  }
  const std::size_t outputs = config.num_classes == 2 ? 1 : config.num_classes;
  layers.emplace_back(DenseLayer{glorot(outputs, width), Vector::Zero(outputs),
                                 config.num_classes == 2 ? Activation::sigmoid : Activation::softmax});
  return Network(std::move(layers));
}

}  // namespace binfair
