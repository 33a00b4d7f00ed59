#include "binfair/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "binfair/errors.hpp"

namespace binfair {

namespace {

std::vector<int> present_groups(const ScoredBatch& b) {
  std::vector<int> g(b.groups);
  std::sort(g.begin(), g.end());
  g.erase(std::unique(g.begin(), g.end()), g.end());
  return g;
}

}  // namespace

void ScoredBatch::validate() const {
  if (labels.size() != scores.size() || groups.size() != scores.size())
    throw DataError("scores, labels and groups must have equal lengths");
  for (double s : scores)
    if (!std::isfinite(s)) throw DataError("non-finite score");
  for (int y : labels)
    if (y != 0 && y != 1) throw DataError("labels must be 0 or 1");
}

double auc(const ScoredBatch& batch) {
  batch.validate();
  const std::size_t n = batch.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return batch.scores[a] < batch.scores[b]; });

  double positive_rank_sum = 0.0;
  std::size_t positives = 0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && batch.scores[order[j]] == batch.scores[order[i]]) ++j;
    const double midrank = 0.5 * static_cast<double>(i + 1 + j);  // mean of ranks i+1..j
    for (std::size_t k = i; k < j; ++k) {
      if (batch.labels[order[k]] == 1) {
        positive_rank_sum += midrank;
        ++positives;
      }
    }
    i = j;
  }
  const std::size_t negatives = n - positives;
  if (positives == 0 || negatives == 0) throw UndefinedMetric("AUC needs both positive and negative labels");
  const auto np = static_cast<double>(positives);
  const double u = positive_rank_sum - np * (np + 1.0) / 2.0;
  return u / (np * static_cast<double>(negatives));
}

double group_pairwise_accuracy(const ScoredBatch& batch, int gi, int gj, double threshold) {
  batch.validate();
  std::size_t pos = 0, pos_correct = 0, neg = 0, neg_correct = 0;
  for (std::size_t k = 0; k < batch.size(); ++k) {
    const bool predicted = batch.scores[k] >= threshold;
    if (batch.labels[k] == 1 && batch.groups[k] == gi) {
      ++pos;
      pos_correct += predicted ? 1 : 0;
    } else if (batch.labels[k] == 0 && batch.groups[k] == gj) {
      ++neg;
      neg_correct += predicted ? 0 : 1;
    }
  }
  if (pos == 0) throw UndefinedMetric("no positives in group " + std::to_string(gi));
  if (neg == 0) throw UndefinedMetric("no negatives in group " + std::to_string(gj));
  return static_cast<double>(pos_correct + neg_correct) / static_cast<double>(pos + neg);
}

double gpa(const ScoredBatch& batch, double threshold) {
  const auto groups = present_groups(batch);
  if (groups.size() < 2) throw UndefinedMetric("GPA needs at least two groups");
  if (groups.size() == 2) {
    const double ab = group_pairwise_accuracy(batch, groups[0], groups[1], threshold);
    const double ba = group_pairwise_accuracy(batch, groups[1], groups[0], threshold);
    return std::abs(ab - ba);
  }
  // With more groups, pairs with an empty cell are skipped.
  double worst = 0.0;
  std::size_t defined = 0;
  std::string last_error;
  for (std::size_t a = 0; a < groups.size(); ++a) {
    for (std::size_t b = a + 1; b < groups.size(); ++b) {
      try {
        const double ab = group_pairwise_accuracy(batch, groups[a], groups[b], threshold);
        const double ba = group_pairwise_accuracy(batch, groups[b], groups[a], threshold);
        worst = std::max(worst, std::abs(ab - ba));
        ++defined;
      } catch (const UndefinedMetric& e) {
        last_error = e.what();
      }
    }
  }
  if (defined == 0) throw UndefinedMetric("GPA undefined for every group pair (" + last_error + ")");
  return worst;
}

double y_discrim(const ScoredBatch& batch, double threshold) {
  batch.validate();
  const auto groups = present_groups(batch);
  if (groups.size() < 2) throw UndefinedMetric("yDiscrim needs at least two non-empty groups");
  std::vector<double> positive(groups.size(), 0.0), count(groups.size(), 0.0);
  for (std::size_t k = 0; k < batch.size(); ++k) {
    const auto s = static_cast<std::size_t>(std::lower_bound(groups.begin(), groups.end(), batch.groups[k]) - groups.begin());
    count[s] += 1.0;
    if (batch.scores[k] >= threshold) positive[s] += 1.0;
  }
  double lo = 1.0, hi = 0.0;
  for (std::size_t s = 0; s < groups.size(); ++s) {
    const double rate = positive[s] / count[s];
    lo = std::min(lo, rate);
    hi = std::max(hi, rate);
  }
  return hi - lo;
}

std::vector<double> discrimination_curve(const ScoredBatch& batch, std::size_t points) {
  if (points < 2) throw ConfigError("discrimination curve needs at least two thresholds");
  std::vector<double> curve(points);
  for (std::size_t k = 0; k < points; ++k)
    curve[k] = y_discrim(batch, static_cast<double>(k) / static_cast<double>(points - 1));
  return curve;
}

double curve_area(std::span<const double> values) {
  if (values.size() < 2) throw ConfigError("curve needs at least two points");
  const double h = 1.0 / static_cast<double>(values.size() - 1);
  double area = 0.0;
  for (std::size_t k = 0; k + 1 < values.size(); ++k) area += 0.5 * (values[k] + values[k + 1]) * h;
  return area;
}

double audc(const ScoredBatch& batch) {
  const auto curve = discrimination_curve(batch, 100);
  return curve_area(curve);
}

}  // namespace binfair
