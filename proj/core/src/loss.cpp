#include <algorithm>
#include <cmath>

#include "binfair/errors.hpp"
#include "binfair/info_theory.hpp"
#include "binfair/training.hpp"

namespace binfair {

namespace {

constexpr double kProbFloor = 1e-12;

void check_labels(const Matrix& output, std::span<const int> labels) {
  if (static_cast<std::size_t>(output.rows()) != labels.size())
    throw ContractViolation("label vector length does not match the batch");
  const auto classes = output.cols() == 1 ? 2 : output.cols();
  for (int y : labels)
    if (y < 0 || y >= classes) throw DataError("label " + std::to_string(y) + " outside the output range");
}

}  // namespace

std::string_view to_string(Variant v) {
  return v == Variant::binary_bernoulli ? "binary_bernoulli" : "binary_mi";
}

Variant parse_variant(std::string_view s) {
  if (s == "bernoulli" || s == "binary_bernoulli" || s == "BinaryBernoulli") return Variant::binary_bernoulli;
  if (s == "mi" || s == "binary_mi" || s == "BinaryMI") return Variant::binary_mi;
  throw ConfigError("unknown variant '" + std::string(s) + "' (expected bernoulli or mi)");
}

void TrainConfig::validate() const {
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw ConfigError("gamma must lie in [0, 1]");
  if (epochs == 0) throw ConfigError("epochs must be positive");
  if (batch_size == 0) throw ConfigError("batch_size must be positive");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) throw ConfigError("learning_rate must be positive");
  if (hidden_layers > 0 && hidden_width == 0) throw ConfigError("hidden_width must be positive");
  if (binary_width == 0) throw ConfigError("binary_width must be positive");
  if (hidden_activation == Activation::softmax) throw ConfigError("softmax is only allowed on the output layer");
  if (variant == Variant::binary_mi && binary_width > kSoftHistogramMaxWidth)
    throw ConfigError("binary_mi trains on soft histograms and supports at most " +
                      std::to_string(kSoftHistogramMaxWidth) + " stochastic neurons");
}

NetworkConfig TrainConfig::network_config(std::size_t input_dim, std::size_t num_classes) const {
  NetworkConfig nc;
  nc.input_dim = input_dim;
  nc.hidden.assign(hidden_layers, hidden_width);
  nc.hidden_activation = hidden_activation;
  nc.binary_width = binary_width;
  nc.binary_bias = binary_bias;
  nc.num_classes = num_classes;
  return nc;
}

TrainConfig preset(std::string_view dataset, Variant variant) {
  struct Row {
    std::string_view name;
    double gamma[2];
    std::size_t batch[2];
    std::size_t layers[2];
    std::size_t width[2];
  };
  // {BinaryBernoulli, BinaryMI}
  static constexpr Row kRows[] = {
      {"compas", {0.23, 0.16}, {175, 242}, {3, 2}, {20, 10}},
      {"banks", {0.60, 0.03}, {240, 153}, {1, 5}, {30, 40}},
      {"adult", {0.04, 0.01}, {225, 228}, {3, 4}, {50, 50}},
  };
  const std::size_t v = variant == Variant::binary_bernoulli ? 0 : 1;
  for (const auto& row : kRows) {
    if (row.name != dataset) continue;
    TrainConfig cfg;
    cfg.variant = variant;
    cfg.gamma = row.gamma[v];
    cfg.batch_size = row.batch[v];
    cfg.hidden_layers = row.layers[v];
    cfg.hidden_width = row.width[v];
    cfg.epochs = 100;
    cfg.learning_rate = 1e-4;
    return cfg;
  }
  throw ConfigError("no preset for dataset '" + std::string(dataset) + "' (expected compas, banks or adult)");
}

double cross_entropy(const Matrix& output, std::span<const int> labels) {
  check_labels(output, labels);
  double total = 0.0;
  for (Eigen::Index r = 0; r < output.rows(); ++r) {
    const int y = labels[static_cast<std::size_t>(r)];
    double p = output.cols() == 1 ? (y == 1 ? output(r, 0) : 1.0 - output(r, 0)) : output(r, y);
    total -= std::log(std::max(p, kProbFloor));
  }
  return total / static_cast<double>(output.rows());
}

LossResult compute_loss(const BatchTrace& trace, std::span<const int> labels, std::span<const int> groups,
                        const TrainConfig& cfg) {
  cfg.validate();
  const Matrix& out = trace.output();
  check_labels(out, labels);
  if (static_cast<std::size_t>(trace.theta.cols()) != cfg.binary_width)
    throw ConfigError("trace width " + std::to_string(trace.theta.cols()) + " does not match binary_width " +
                      std::to_string(cfg.binary_width));

  LossResult res;
  const auto n = static_cast<double>(out.rows());
  res.ce_term = cross_entropy(out, labels);
  res.output_grad = Matrix::Zero(out.rows(), out.cols());
  for (Eigen::Index r = 0; r < out.rows(); ++r) {
    const int y = labels[static_cast<std::size_t>(r)];
    if (out.cols() == 1) {
      const double p = out(r, 0);
      if (y == 1 && p > kProbFloor) res.output_grad(r, 0) = -1.0 / (p * n);
      if (y == 0 && 1.0 - p > kProbFloor) res.output_grad(r, 0) = 1.0 / ((1.0 - p) * n);
    } else if (out(r, y) > kProbFloor) {
      res.output_grad(r, y) = -1.0 / (out(r, y) * n);
    }
  }
  res.output_grad *= 1.0 - cfg.gamma;

  std::vector<int> g(groups.begin(), groups.end());
  if (cfg.variant == Variant::binary_bernoulli) {
    const GroupedThetas grouped(trace.theta, std::move(g));
    res.mi_term = layer_mi_bound(grouped).bits;
    res.theta_grad = cfg.gamma > 0.0 ? Matrix(cfg.gamma * layer_mi_bound_gradient(grouped))
                                     : Matrix::Zero(trace.theta.rows(), trace.theta.cols());
  } else {
    res.mi_term = joint_mi(trace.theta, groups, HistogramKind::soft).bits;
    res.theta_grad = cfg.gamma > 0.0 ? Matrix(cfg.gamma * joint_mi_soft_gradient(trace.theta, groups))
                                     : Matrix::Zero(trace.theta.rows(), trace.theta.cols());
  }
  res.total = cfg.gamma * res.mi_term + (1.0 - cfg.gamma) * res.ce_term;
  return res;
}

}  // namespace binfair
