#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace binfair {

/// Positive-class scores with binary labels and group labels.
struct ScoredBatch {
  std::vector<double> scores;
  std::vector<int> labels;  // 0 or 1
  std::vector<int> groups;

  std::size_t size() const { return scores.size(); }
  /// Throws DataError unless lengths agree, scores are finite, labels binary.
  void validate() const;
};

/// Mann-Whitney AUC; tied scores share their mid-rank.
double auc(const ScoredBatch& batch);

/// Accuracy restricted to the positives of group `gi` and the negatives of
/// group `gj`; an example is predicted positive when score >= threshold.
double group_pairwise_accuracy(const ScoredBatch& batch, int gi, int gj, double threshold = 0.5);

/// |A(gi > gj) - A(gj > gi)|. With K > 2 groups, the maximum over the pairs
/// whose cells are all non-empty.
double gpa(const ScoredBatch& batch, double threshold = 0.5);

/// Largest absolute difference of positive-prediction rates between groups.
double y_discrim(const ScoredBatch& batch, double threshold);

/// y_discrim at `points` equispaced thresholds covering [0, 1] inclusive.
std::vector<double> discrimination_curve(const ScoredBatch& batch, std::size_t points = 100);

/// Trapezoidal area of a curve sampled at equispaced points of [0, 1].
double curve_area(std::span<const double> values);

/// Area under the discrimination curve over 100 thresholds.
double audc(const ScoredBatch& batch);

/// Metrics of one evaluated model. AUC is higher-is-better; GPA and AUDC
/// are lower-is-better.
struct MetricsReport {
  double auc = 0.0;
  double gpa = 0.0;
  double audc = 0.0;
  double accuracy = 0.0;
  double layer_mi_bound = 0.0;
  double joint_mi = 0.0;
};

}  // namespace binfair
