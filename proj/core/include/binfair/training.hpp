#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "binfair/data.hpp"
#include "binfair/metrics.hpp"
#include "binfair/nn.hpp"

namespace binfair {

/// Which mutual-information term the loss minimises.
enum class Variant {
  /// Sum of per-neuron I(T_i; S), the upper bound on the layer MI.
  binary_bernoulli,
  /// Joint I(T; S) from soft histograms of the whole layer.
  binary_mi,
};

std::string_view to_string(Variant v);
/// Accepts "bernoulli"/"binary_bernoulli" and "mi"/"binary_mi".
Variant parse_variant(std::string_view s);

struct TrainConfig {
  double gamma = 0.5;
  Variant variant = Variant::binary_bernoulli;
  std::size_t epochs = 100;
  std::size_t batch_size = 128;
  double learning_rate = 1e-4;
  std::size_t hidden_layers = 2;
  std::size_t hidden_width = 20;
  std::size_t binary_width = 8;
  Activation hidden_activation = Activation::relu;
  bool binary_bias = false;
  std::uint64_t seed = 0;

  /// Throws ConfigError on gamma outside [0, 1], zero sizes, or a binary
  /// width beyond the histogram capacity of the variant.
  void validate() const;

  NetworkConfig network_config(std::size_t input_dim, std::size_t num_classes) const;
};

/// Best published settings for the three fairness datasets ("compas",
/// "banks", "adult").
TrainConfig preset(std::string_view dataset, Variant variant);

struct LossResult {
  double total = 0.0;
  double mi_term = 0.0;  // bits
  double ce_term = 0.0;  // nats
  /// dLoss/dOutput, batch x output_dim, already weighted by (1 - gamma).
  Matrix output_grad;
  /// dLoss/dTheta, batch x width, already weighted by gamma.
  Matrix theta_grad;
};

/// Cross-entropy of the network output against integer labels. A single
/// output column is read as P(Y = 1).
double cross_entropy(const Matrix& output, std::span<const int> labels);

/// gamma * MI(theta, groups) + (1 - gamma) * cross_entropy(output, labels).
LossResult compute_loss(const BatchTrace& trace, std::span<const int> labels, std::span<const int> groups,
                        const TrainConfig& cfg);

struct EpochRecord {
  std::size_t epoch = 0;  // 0 is the untrained network
  double loss = 0.0;
  double mi_term = 0.0;
  double ce_term = 0.0;
  double layer_mi_bound = 0.0;
  double train_auc = 0.0;
};

/// Raised when the loss or a parameter becomes non-finite. Carries the
/// network as it was before the failing step.
class TrainingDiverged : public std::runtime_error {
 public:
  TrainingDiverged(const std::string& what, Network last_good, std::size_t epoch, std::size_t step)
      : std::runtime_error(what), last_good_(std::move(last_good)), epoch_(epoch), step_(step) {}

  const Network& last_good() const { return last_good_; }
  std::size_t epoch() const { return epoch_; }
  std::size_t step() const { return step_; }

 private:
  Network last_good_;
  std::size_t epoch_;
  std::size_t step_;
};

struct FitResult {
  Network network;
  std::vector<EpochRecord> log;
};

/// Minibatch ADAM with a seeded shuffle every epoch. The log holds one
/// record per epoch measured on the full training set, plus epoch 0.
FitResult fit(const Dataset& ds, const TrainConfig& cfg);

/// Fixed seed for the sampled pass of evaluate().
inline constexpr std::uint64_t kEvaluationSeed = 0x5eed'e7a1'0000'0001ULL;

/// Y-metrics from expected-mode scores; MI estimates from one sampled pass.
/// With more than two classes AUC, GPA and AUDC are one-vs-rest macro
/// averages over the classes where they are defined.
MetricsReport evaluate(const Network& net, const Dataset& ds, std::uint64_t seed = kEvaluationSeed);

enum class RepresentationMode { sampled, expected };

/// Activations of the stochastic layer, one row per example.
Matrix extract_representations(const Network& net, const Dataset& ds, RepresentationMode mode,
                               std::uint64_t seed = kEvaluationSeed);

/// Scores of the positive class (binary) or the class probabilities.
Matrix predict_proba(const Network& net, const Matrix& features);

// ---------------------------------------------------------------------------
// Invariance probe

enum class ProbeKind { logistic, extra_trees };

std::string_view to_string(ProbeKind k);
ProbeKind parse_probe_kind(std::string_view s);

struct ProbeOptions {
  ProbeKind kind = ProbeKind::logistic;
  double test_fraction = 0.3;
  double l2 = 1e-3;
  std::size_t iterations = 400;
  std::size_t trees = 50;
  std::size_t max_depth = 8;
  std::uint64_t seed = 0;
};

struct ProbeReport {
  ProbeKind kind = ProbeKind::logistic;
  double accuracy = 0.0;
  double majority_rate = 0.0;
  /// |accuracy - majority_rate|
  double adrg = 0.0;
  double auc = 0.0;
  std::size_t train_size = 0;
  std::size_t test_size = 0;
};

/// Trains a classifier to predict the group from `reps` on a stratified
/// split and reports its held-out performance. The majority rate is taken
/// on the held-out part.
ProbeReport probe_invariance(const Matrix& reps, std::span<const int> groups, const ProbeOptions& opts = {});

// ---------------------------------------------------------------------------
// Gamma sweep and hyperparameter search

struct TradeoffPoint {
  double gamma = 0.0;
  double auc = 0.0;
  double one_minus_gpa = 0.0;
  double one_minus_audc = 0.0;
  double layer_mi_bound = 0.0;
  double joint_mi = 0.0;
  double accuracy = 0.0;
  std::uint64_t seed = 0;
  std::size_t fold = 0;
  std::size_t repeat = 0;
};

struct SweepOptions {
  /// Outer folds used per repeat (1..3). Each trial trains on the other
  /// outer folds and is evaluated on this one.
  std::size_t folds = SplitPlan::kFolds;
  std::size_t jobs = 1;
};

struct SweepSummary {
  std::vector<TradeoffPoint> points;  // sorted by (gamma, repeat, fold)
  /// Pearson correlations over all points; NaN when a series is constant.
  double corr_gamma_fairness = 0.0;  // corr(gamma, 1 - GPA)
  double corr_gamma_auc = 0.0;
  /// Kendall tau between gamma and the per-gamma mean of 1 - GPA.
  double kendall_gamma_fairness = 0.0;
  /// Point closest under L1 to AUC = 1, 1 - GPA = 1.
  TradeoffPoint best;
};

/// Needs at least three distinct gamma values; otherwise the correlation
/// is undefined and UndefinedMetric is thrown.
SweepSummary gamma_sweep(const Dataset& ds, const TrainConfig& base, std::span<const double> gammas,
                         std::size_t repeats, const SweepOptions& opts = {});

double pearson(std::span<const double> x, std::span<const double> y);
double kendall_tau(std::span<const double> x, std::span<const double> y);

/// Uniform sampling ranges. Integer ranges are inclusive; the learning
/// rate is drawn log-uniformly.
struct SearchSpace {
  double gamma_min = 0.0, gamma_max = 1.0;
  std::size_t batch_min = 64, batch_max = 256;
  std::size_t layers_min = 1, layers_max = 5;
  std::vector<std::size_t> widths = {10, 20, 30, 40, 50};
  std::vector<std::size_t> binary_widths = {8};
  double lr_min = 1e-4, lr_max = 1e-4;
  std::vector<Variant> variants = {Variant::binary_bernoulli};

  /// Throws ConfigError when a range is inverted or a list is empty.
  void validate() const;
};

struct SearchTrial {
  std::size_t index = 0;
  TrainConfig config;
  double auc = 0.0;
  double gpa = 0.0;
  double audc = 0.0;
  double objective = 0.0;  // auc + (1 - gpa) + (1 - audc), fold mean
};

struct SearchResult {
  TrainConfig best;
  double best_objective = 0.0;
  std::vector<SearchTrial> trials;
};

/// Seeded random search maximising AUC + (1 - GPA) + (1 - AUDC) averaged
/// over three stratified folds of `ds`. Ties keep the earlier trial.
SearchResult random_search(const Dataset& ds, const TrainConfig& base, const SearchSpace& space,
                           std::size_t budget, std::uint64_t seed);

double search_objective(const MetricsReport& m);

// ---------------------------------------------------------------------------
// Config files (JSON)

TrainConfig train_config_from_json(std::string_view text, const TrainConfig& defaults = {});
std::string train_config_to_json(const TrainConfig& cfg);
SearchSpace search_space_from_json(std::string_view text);
std::string search_space_to_json(const SearchSpace& space);

}  // namespace binfair
