#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "binfair/nn.hpp"

// Information-theoretic quantities over a layer of binary stochastic
// neurons. All logarithms are base 2, so every result is in bits.

namespace binfair {

/// Widest layer whose joint distribution is enumerated densely from theta.
inline constexpr std::size_t kSoftHistogramMaxWidth = 14;
/// Widest layer that can be counted from hard samples.
inline constexpr std::size_t kHardHistogramMaxWidth = 24;

/// Bernoulli parameters of one batch together with the group (sensitive
/// attribute value) of each row. Groups absent from the batch simply do not
/// appear; p(s) is renormalised over the groups that are present.
class GroupedThetas {
 public:
  GroupedThetas(Matrix theta, std::vector<int> groups);

  const Matrix& theta() const { return theta_; }
  const std::vector<int>& groups() const { return groups_; }
  std::size_t rows() const { return static_cast<std::size_t>(theta_.rows()); }
  std::size_t width() const { return static_cast<std::size_t>(theta_.cols()); }

  /// Distinct group labels present, ascending.
  const std::vector<int>& present_groups() const { return present_; }
  /// Empirical p(s), aligned with present_groups(); sums to 1.
  const std::vector<double>& group_weights() const { return weights_; }
  /// Index into present_groups() for each row.
  const std::vector<std::size_t>& group_slot() const { return slot_; }

 private:
  Matrix theta_;
  std::vector<int> groups_;
  std::vector<int> present_;
  std::vector<double> weights_;
  std::vector<std::size_t> slot_;
};

/// Mutual-information value plus a flag raised when fewer than two groups
/// were present (the value is then 0 by definition).
struct MiEstimate {
  double bits = 0.0;
  bool single_group = false;
};

/// Entropy of a Bernoulli(theta) variable, 0 log 0 = 0.
double bernoulli_entropy(double theta);

/// I(T_i; S) = H(mean theta_i) - sum_s p(s) H(mean theta_i | S = s).
MiEstimate neuron_mi(const GroupedThetas& g, std::size_t neuron);

/// dI(T_i;S)/dtheta for every row of column `neuron`.
Vector neuron_mi_gradient(const GroupedThetas& g, std::size_t neuron);

/// Sum over neurons of I(T_i; S); an upper bound on I(T; S).
MiEstimate layer_mi_bound(const GroupedThetas& g);

/// Gradient of layer_mi_bound with respect to every theta entry.
Matrix layer_mi_bound_gradient(const GroupedThetas& g);

enum class HistogramKind { hard, soft };

/// Probability mass over binary activation vectors of a layer of `width`
/// neurons. Keys pack the vector with neuron 0 as the most significant bit,
/// so key order equals lexicographic order of the bit strings.
class JointHistogram {
 public:
  JointHistogram(std::size_t width, HistogramKind kind, std::map<std::uint32_t, double> mass);

  std::size_t width() const { return width_; }
  HistogramKind kind() const { return kind_; }
  const std::map<std::uint32_t, double>& mass() const { return mass_; }

  double probability(std::uint32_t key) const;
  /// P(T_i = 1).
  double marginal(std::size_t neuron) const;

  std::string bitstring(std::uint32_t key) const;

  /// One `bitvector<TAB>probability` line per entry, lexicographic order.
  std::string dump() const;

 private:
  std::size_t width_;
  HistogramKind kind_;
  std::map<std::uint32_t, double> mass_;
};

/// Frequencies of the distinct rows of a 0/1 matrix.
JointHistogram joint_histogram_hard(const Matrix& samples);
JointHistogram joint_histogram_hard(const Matrix& samples, std::span<const std::size_t> rows);

/// Expected histogram under independent Bernoulli(theta) draws per row:
/// mass[v] = mean over rows of prod_i theta_i^v_i (1 - theta_i)^(1 - v_i).
JointHistogram joint_histogram_soft(const Matrix& theta);
JointHistogram joint_histogram_soft(const Matrix& theta, std::span<const std::size_t> rows);

double histogram_entropy(const JointHistogram& h);

/// I(T; S) = H(T) - sum_s p(s) H(T | S = s) with histograms of the given kind.
/// `values` holds 0/1 samples for the hard kind and theta for the soft kind.
MiEstimate joint_mi(const Matrix& values, std::span<const int> groups, HistogramKind kind);

/// Gradient of the soft-histogram joint MI with respect to theta.
Matrix joint_mi_soft_gradient(const Matrix& theta, std::span<const int> groups);

/// Hard-count joint MI after drawing `resamples` Bernoulli realisations per
/// row. Reduces sampling noise of the histogram at a linear cost.
MiEstimate joint_mi_resampled(const Matrix& theta, std::span<const int> groups, std::size_t resamples,
                              std::uint64_t seed);

/// Sum of marginal entropies minus joint entropy.
double total_correlation(const JointHistogram& h);

/// TC(T) - sum_s p(s) TC(T | S = s); equals the slack of the per-neuron bound.
double informativeness(const JointHistogram& joint, std::span<const JointHistogram> conditionals,
                       std::span<const double> group_weights);

}  // namespace binfair
