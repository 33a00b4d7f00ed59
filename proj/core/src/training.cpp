#include <algorithm>
#include <cmath>
#include <numeric>

#include "binfair/errors.hpp"
#include "binfair/info_theory.hpp"
#include "binfair/rng.hpp"
#include "binfair/training.hpp"
#include "training_internal.hpp"

namespace binfair {

namespace detail {

std::vector<ScoredBatch> one_vs_rest(const Matrix& proba, std::span<const int> labels, std::span<const int> groups) {
  std::vector<ScoredBatch> out;
  const auto n = static_cast<std::size_t>(proba.rows());
  if (proba.cols() == 1) {
    ScoredBatch b;
    b.scores.resize(n);
    for (std::size_t r = 0; r < n; ++r) b.scores[r] = proba(static_cast<Eigen::Index>(r), 0);
    b.labels.assign(labels.begin(), labels.end());
    b.groups.assign(groups.begin(), groups.end());
    out.push_back(std::move(b));
    return out;
  }
  for (Eigen::Index c = 0; c < proba.cols(); ++c) {
    ScoredBatch b;
    b.scores.resize(n);
    b.labels.resize(n);
    for (std::size_t r = 0; r < n; ++r) {
      b.scores[r] = proba(static_cast<Eigen::Index>(r), c);
      b.labels[r] = labels[r] == c ? 1 : 0;
    }
    b.groups.assign(groups.begin(), groups.end());
    out.push_back(std::move(b));
  }
  return out;
}

double macro_metric(const std::vector<ScoredBatch>& batches, double (*metric)(const ScoredBatch&)) {
  double total = 0.0;
  std::size_t defined = 0;
  std::string last_error;
  for (const auto& b : batches) {
    try {
      total += metric(b);
      ++defined;
    } catch (const UndefinedMetric& e) {
      last_error = e.what();
    }
  }
  if (defined == 0) throw UndefinedMetric(last_error.empty() ? "metric undefined for every class" : last_error);
  return total / static_cast<double>(defined);
}

double accuracy(const Matrix& proba, std::span<const int> labels) {
  std::size_t hits = 0;
  for (Eigen::Index r = 0; r < proba.rows(); ++r) {
    int pred;
    if (proba.cols() == 1) {
      pred = proba(r, 0) >= 0.5 ? 1 : 0;
    } else {
      Eigen::Index arg;
      proba.row(r).maxCoeff(&arg);
      pred = static_cast<int>(arg);
    }
    if (pred == labels[static_cast<std::size_t>(r)]) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(proba.rows());
}

MetricsReport evaluate_split(const Network& net, const Matrix& features, std::span<const int> labels,
                             std::span<const int> groups, std::uint64_t seed) {
  MetricsReport rep;
  const Matrix proba = predict_proba(net, features);
  const auto batches = one_vs_rest(proba, labels, groups);
  rep.auc = macro_metric(batches, [](const ScoredBatch& b) { return auc(b); });
  rep.gpa = macro_metric(batches, [](const ScoredBatch& b) { return gpa(b); });
  rep.audc = macro_metric(batches, [](const ScoredBatch& b) { return audc(b); });
  rep.accuracy = accuracy(proba, labels);

  const BatchTrace sampled = forward(net, features, seed, BinaryMode::stochastic);
  const GroupedThetas hard(sampled.samples, std::vector<int>(groups.begin(), groups.end()));
  rep.layer_mi_bound = layer_mi_bound(hard).bits;
  rep.joint_mi = sampled.samples.cols() <= static_cast<Eigen::Index>(kHardHistogramMaxWidth)
                     ? joint_mi(sampled.samples, groups, HistogramKind::hard).bits
                     : std::nan("");
  return rep;
}

}  // namespace detail

Matrix predict_proba(const Network& net, const Matrix& features) {
  return forward(net, features, 0, BinaryMode::expected).output();
}

FitResult fit(const Dataset& ds, const TrainConfig& cfg) {
  cfg.validate();
  ds.validate();
  const auto classes = static_cast<std::size_t>(ds.num_classes());
  Network net = init_params(cfg.network_config(ds.dim(), classes), derive_seed(cfg.seed, "init"));
  AdamState adam = AdamState::for_network(net, cfg.learning_rate);

  FitResult result{net, {}};
  auto record = [&](std::size_t epoch) {
    const BatchTrace trace = forward(net, ds.features, derive_seed(cfg.seed, "log", epoch), BinaryMode::stochastic);
    const LossResult loss = compute_loss(trace, ds.labels, ds.groups, cfg);
    EpochRecord rec;
    rec.epoch = epoch;
    rec.loss = loss.total;
    rec.mi_term = loss.mi_term;
    rec.ce_term = loss.ce_term;
    rec.layer_mi_bound = layer_mi_bound(GroupedThetas(trace.theta, ds.groups)).bits;
    const Matrix proba = predict_proba(net, ds.features);
    try {
      rec.train_auc = detail::macro_metric(detail::one_vs_rest(proba, ds.labels, ds.groups),
                                           [](const ScoredBatch& b) { return auc(b); });
    } catch (const UndefinedMetric&) {
      rec.train_auc = std::nan("");
    }
    result.log.push_back(rec);
  };
  record(0);

  const std::size_t n = ds.size();
  const std::size_t batch = std::min(cfg.batch_size, n);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::size_t step = 0;
  Network last_good = net;
  Matrix xb;
  std::vector<int> yb, sb;
  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    Rng shuffle(derive_seed(cfg.seed, "shuffle", epoch));
    shuffle.shuffle(order);
    for (std::size_t start = 0; start < n; start += batch, ++step) {
      const std::size_t stop = std::min(start + batch, n);
      const auto rows = static_cast<Eigen::Index>(stop - start);
      xb.resize(rows, ds.features.cols());
      yb.resize(static_cast<std::size_t>(rows));
      sb.resize(static_cast<std::size_t>(rows));
      for (std::size_t k = start; k < stop; ++k) {
        xb.row(static_cast<Eigen::Index>(k - start)) = ds.features.row(static_cast<Eigen::Index>(order[k]));
        yb[k - start] = ds.labels[order[k]];
        sb[k - start] = ds.groups[order[k]];
      }
      last_good = net;
      try {
        const BatchTrace trace = forward(net, xb, derive_seed(cfg.seed, "sampling", step), BinaryMode::stochastic);
        const LossResult loss = compute_loss(trace, yb, sb, cfg);
        if (!std::isfinite(loss.total))
          throw TrainingDiverged("non-finite loss at epoch " + std::to_string(epoch) + ", step " +
                                     std::to_string(step),
                                 last_good, epoch, step);
        const Gradients grads = backward(net, trace, loss.output_grad, &loss.theta_grad);
        adam_step(net, grads, adam);
        net.validate();
      } catch (const NumericError& e) {
        throw TrainingDiverged(std::string("training diverged: ") + e.what(), last_good, epoch, step);
      }
    }
    try {
      record(epoch);
    } catch (const NumericError& e) {
      throw TrainingDiverged(std::string("training diverged: ") + e.what(), last_good, epoch, step - 1);
    }
  }
  result.network = std::move(net);
  return result;
}

MetricsReport evaluate(const Network& net, const Dataset& ds, std::uint64_t seed) {
  ds.validate();
  return detail::evaluate_split(net, ds.features, ds.labels, ds.groups, seed);
}

Matrix extract_representations(const Network& net, const Dataset& ds, RepresentationMode mode, std::uint64_t seed) {
  const BatchTrace trace =
      forward(net, ds.features, seed, mode == RepresentationMode::sampled ? BinaryMode::stochastic : BinaryMode::expected);
  return mode == RepresentationMode::sampled ? trace.samples : trace.theta;
}

}  // namespace binfair
