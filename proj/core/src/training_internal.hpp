#pragma once

#include <span>
#include <vector>

#include "binfair/metrics.hpp"
#include "binfair/nn.hpp"

namespace binfair::detail {

/// One scored batch for a binary output, one per class for a softmax.
std::vector<ScoredBatch> one_vs_rest(const Matrix& proba, std::span<const int> labels, std::span<const int> groups);

/// Mean of `metric` over the batches where it is defined.
double macro_metric(const std::vector<ScoredBatch>& batches, double (*metric)(const ScoredBatch&));

double accuracy(const Matrix& proba, std::span<const int> labels);

MetricsReport evaluate_split(const Network& net, const Matrix& features, std::span<const int> labels,
                             std::span<const int> groups, std::uint64_t seed);

}  // namespace binfair::detail
