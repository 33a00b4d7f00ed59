#include "binfair/info_theory.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "binfair/errors.hpp"
#include "binfair/rng.hpp"

namespace binfair {

namespace {

// Derivative of the Bernoulli entropy, log2((1 - p) / p), kept finite at 0 and 1.
double entropy_slope(double p) {
  p = std::clamp(p, 1e-15, 1.0 - 1e-15);
  return std::log2((1.0 - p) / p);
}

double plogp(double p) { return p > 0.0 ? -p * std::log2(p) : 0.0; }

struct GroupIndex {
  std::vector<int> labels;
  std::vector<std::size_t> slot;
  std::vector<std::size_t> counts;
  std::vector<std::vector<std::size_t>> members;
};

GroupIndex index_groups(std::span<const int> groups) {
  GroupIndex idx;
  idx.labels.assign(groups.begin(), groups.end());
  std::sort(idx.labels.begin(), idx.labels.end());
  idx.labels.erase(std::unique(idx.labels.begin(), idx.labels.end()), idx.labels.end());
  idx.counts.assign(idx.labels.size(), 0);
  idx.members.assign(idx.labels.size(), {});
  idx.slot.resize(groups.size());
  for (std::size_t r = 0; r < groups.size(); ++r) {
    const auto it = std::lower_bound(idx.labels.begin(), idx.labels.end(), groups[r]);
    const auto s = static_cast<std::size_t>(it - idx.labels.begin());
    idx.slot[r] = s;
    ++idx.counts[s];
    idx.members[s].push_back(r);
  }
  return idx;
}

void check_rows(const Matrix& values, std::span<const int> groups) {
  if (values.rows() == 0) throw DataError("empty batch");
  if (static_cast<std::size_t>(values.rows()) != groups.size())
    throw ContractViolation("group vector length does not match the number of rows");
}

void check_soft_width(std::size_t width) {
  if (width > kSoftHistogramMaxWidth)
    throw CapacityError("soft histogram needs 2^" + std::to_string(width) + " cells; widths above " +
                        std::to_string(kSoftHistogramMaxWidth) +
                        " are not supported, use hard counting or a narrower stochastic layer");
}

void check_hard_width(std::size_t width) {
  if (width > kHardHistogramMaxWidth)
    throw CapacityError("hard histogram supports at most " + std::to_string(kHardHistogramMaxWidth) +
                        " neurons, got " + std::to_string(width));
}

// Product-Bernoulli probabilities of all 2^m vectors for one row. Neuron 0
// ends up as the most significant bit of the index.
void row_products(const Matrix& theta, Eigen::Index row, std::vector<double>& out) {
  const auto m = static_cast<std::size_t>(theta.cols());
  out.assign(std::size_t{1} << m, 0.0);
  out[0] = 1.0;
  std::size_t size = 1;
  for (std::size_t i = 0; i < m; ++i) {
    const double t = theta(row, static_cast<Eigen::Index>(i));
    for (std::size_t k = size; k-- > 0;) {
      const double v = out[k];
      out[2 * k + 1] = v * t;
      out[2 * k] = v * (1.0 - t);
    }
    size *= 2;
  }
}

// Unnormalised soft counts over the given rows.
std::vector<double> soft_counts(const Matrix& theta, std::span<const std::size_t> rows) {
  std::vector<double> total(std::size_t{1} << theta.cols(), 0.0);
  std::vector<double> p;
  for (std::size_t r : rows) {
    row_products(theta, static_cast<Eigen::Index>(r), p);
    for (std::size_t v = 0; v < p.size(); ++v) total[v] += p[v];
  }
  return total;
}

double dense_entropy(const std::vector<double>& counts, double n) {
  double h = 0.0;
  for (double c : counts) h += plogp(c / n);
  return h;
}

std::uint32_t row_key(const Matrix& samples, Eigen::Index r) {
  std::uint32_t key = 0;
  for (Eigen::Index i = 0; i < samples.cols(); ++i) {
    const double v = samples(r, i);
    if (v != 0.0 && v != 1.0)
      throw DomainError("hard histogram requires 0/1 entries, row " + std::to_string(r) + " has " + std::to_string(v));
    key = (key << 1) | (v == 1.0 ? 1u : 0u);
  }
  return key;
}

std::vector<std::size_t> all_rows(const Matrix& m) {
  std::vector<std::size_t> rows(static_cast<std::size_t>(m.rows()));
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  return rows;
}

}  // namespace

GroupedThetas::GroupedThetas(Matrix theta, std::vector<int> groups)
    : theta_(std::move(theta)), groups_(std::move(groups)) {
  check_rows(theta_, groups_);
  auto idx = index_groups(groups_);
  present_ = std::move(idx.labels);
  slot_ = std::move(idx.slot);
  weights_.resize(present_.size());
  for (std::size_t s = 0; s < present_.size(); ++s)
    weights_[s] = static_cast<double>(idx.counts[s]) / static_cast<double>(groups_.size());
}

double bernoulli_entropy(double theta) {
  if (!(theta >= 0.0 && theta <= 1.0)) throw DomainError("bernoulli_entropy: theta outside [0, 1]");
  return plogp(theta) + plogp(1.0 - theta);
}

MiEstimate neuron_mi(const GroupedThetas& g, std::size_t neuron) {
  if (neuron >= g.width()) throw ConfigError("neuron index " + std::to_string(neuron) + " out of range");
  const std::size_t k = g.present_groups().size();
  if (k < 2) return {0.0, true};

  std::vector<double> sums(k, 0.0);
  std::vector<double> counts(k, 0.0);
  double total = 0.0;
  const auto col = g.theta().col(static_cast<Eigen::Index>(neuron));
  for (std::size_t r = 0; r < g.rows(); ++r) {
    const double t = col(static_cast<Eigen::Index>(r));
    sums[g.group_slot()[r]] += t;
    counts[g.group_slot()[r]] += 1.0;
    total += t;
  }
  double conditional = 0.0;
  for (std::size_t s = 0; s < k; ++s) conditional += g.group_weights()[s] * bernoulli_entropy(sums[s] / counts[s]);
  return {bernoulli_entropy(total / static_cast<double>(g.rows())) - conditional, false};
}

Vector neuron_mi_gradient(const GroupedThetas& g, std::size_t neuron) {
  if (neuron >= g.width()) throw ConfigError("neuron index " + std::to_string(neuron) + " out of range");
  const std::size_t k = g.present_groups().size();
  const auto n = static_cast<double>(g.rows());
  Vector grad = Vector::Zero(static_cast<Eigen::Index>(g.rows()));
  if (k < 2) return grad;

  std::vector<double> sums(k, 0.0);
  std::vector<double> counts(k, 0.0);
  const auto col = g.theta().col(static_cast<Eigen::Index>(neuron));
  for (std::size_t r = 0; r < g.rows(); ++r) {
    sums[g.group_slot()[r]] += col(static_cast<Eigen::Index>(r));
    counts[g.group_slot()[r]] += 1.0;
  }
  const double slope_all = entropy_slope(col.mean());
  std::vector<double> slope_group(k);
  for (std::size_t s = 0; s < k; ++s) slope_group[s] = entropy_slope(sums[s] / counts[s]);
  for (std::size_t r = 0; r < g.rows(); ++r)
    grad(static_cast<Eigen::Index>(r)) = (slope_all - slope_group[g.group_slot()[r]]) / n;
  return grad;
}

MiEstimate layer_mi_bound(const GroupedThetas& g) {
  MiEstimate out;
  out.single_group = g.present_groups().size() < 2;
  for (std::size_t i = 0; i < g.width(); ++i) out.bits += neuron_mi(g, i).bits;
  return out;
}

Matrix layer_mi_bound_gradient(const GroupedThetas& g) {
  Matrix grad(static_cast<Eigen::Index>(g.rows()), static_cast<Eigen::Index>(g.width()));
  for (std::size_t i = 0; i < g.width(); ++i) grad.col(static_cast<Eigen::Index>(i)) = neuron_mi_gradient(g, i);
  return grad;
}

JointHistogram::JointHistogram(std::size_t width, HistogramKind kind, std::map<std::uint32_t, double> mass)
    : width_(width), kind_(kind), mass_(std::move(mass)) {
  if (width_ == 0) throw ConfigError("histogram width must be positive");
  check_hard_width(width_);
  double total = 0.0;
  for (const auto& [key, p] : mass_) {
    if (key >> width_ != 0) throw DomainError("histogram key exceeds width");
    if (!(p >= 0.0)) throw DomainError("negative histogram mass");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-9) throw DomainError("histogram masses sum to " + std::to_string(total));
}

double JointHistogram::probability(std::uint32_t key) const {
  const auto it = mass_.find(key);
  return it == mass_.end() ? 0.0 : it->second;
}

double JointHistogram::marginal(std::size_t neuron) const {
  if (neuron >= width_) throw ConfigError("neuron index out of range");
  const std::uint32_t bit = 1u << (width_ - 1 - neuron);
  double p = 0.0;
  for (const auto& [key, mass] : mass_)
    if (key & bit) p += mass;
  return p;
}

std::string JointHistogram::bitstring(std::uint32_t key) const {
  std::string s(width_, '0');
  for (std::size_t i = 0; i < width_; ++i)
    if (key & (1u << (width_ - 1 - i))) s[i] = '1';
  return s;
}

std::string JointHistogram::dump() const {
  std::string out;
  char buf[40];
  for (const auto& [key, p] : mass_) {
    std::snprintf(buf, sizeof buf, "%.17g", p);
    out += bitstring(key);
    out += '\t';
    out += buf;
    out += '\n';
  }
  return out;
}

JointHistogram joint_histogram_hard(const Matrix& samples) { return joint_histogram_hard(samples, all_rows(samples)); }

JointHistogram joint_histogram_hard(const Matrix& samples, std::span<const std::size_t> rows) {
  const auto width = static_cast<std::size_t>(samples.cols());
  check_hard_width(width);
  if (rows.empty()) throw DataError("cannot build a histogram from zero rows");
  std::map<std::uint32_t, std::size_t> counts;
  for (std::size_t r : rows) ++counts[row_key(samples, static_cast<Eigen::Index>(r))];
  std::map<std::uint32_t, double> mass;
  const auto n = static_cast<double>(rows.size());
  for (const auto& [key, c] : counts) mass.emplace(key, static_cast<double>(c) / n);
  return JointHistogram(width, HistogramKind::hard, std::move(mass));
}

JointHistogram joint_histogram_soft(const Matrix& theta) { return joint_histogram_soft(theta, all_rows(theta)); }

JointHistogram joint_histogram_soft(const Matrix& theta, std::span<const std::size_t> rows) {
  const auto width = static_cast<std::size_t>(theta.cols());
  check_soft_width(width);
  if (rows.empty()) throw DataError("cannot build a histogram from zero rows");
  if (!((theta.array() >= 0.0).all() && (theta.array() <= 1.0).all()))
    throw DomainError("soft histogram requires theta in [0, 1]");
  const auto counts = soft_counts(theta, rows);
  const auto n = static_cast<double>(rows.size());
  std::map<std::uint32_t, double> mass;
  for (std::size_t v = 0; v < counts.size(); ++v)
    if (counts[v] > 0.0) mass.emplace(static_cast<std::uint32_t>(v), counts[v] / n);
  return JointHistogram(width, HistogramKind::soft, std::move(mass));
}

double histogram_entropy(const JointHistogram& h) {
  double out = 0.0;
  for (const auto& [key, p] : h.mass()) out += plogp(p);
  return out;
}

MiEstimate joint_mi(const Matrix& values, std::span<const int> groups, HistogramKind kind) {
  check_rows(values, groups);
  const auto idx = index_groups(groups);
  if (idx.labels.size() < 2) return {0.0, true};
  const auto n = static_cast<double>(groups.size());

  if (kind == HistogramKind::soft) {
    check_soft_width(static_cast<std::size_t>(values.cols()));
    if (!((values.array() >= 0.0).all() && (values.array() <= 1.0).all()))
      throw DomainError("soft joint MI requires theta in [0, 1]");
    std::vector<double> total(std::size_t{1} << values.cols(), 0.0);
    double conditional = 0.0;
    for (std::size_t s = 0; s < idx.labels.size(); ++s) {
      const auto counts = soft_counts(values, idx.members[s]);
      for (std::size_t v = 0; v < counts.size(); ++v) total[v] += counts[v];
      const auto ns = static_cast<double>(idx.counts[s]);
      conditional += (ns / n) * dense_entropy(counts, ns);
    }
    return {dense_entropy(total, n) - conditional, false};
  }

  const auto rows = all_rows(values);
  double conditional = 0.0;
  for (std::size_t s = 0; s < idx.labels.size(); ++s)
    conditional += (static_cast<double>(idx.counts[s]) / n) * histogram_entropy(joint_histogram_hard(values, idx.members[s]));
  return {histogram_entropy(joint_histogram_hard(values, rows)) - conditional, false};
}

Matrix joint_mi_soft_gradient(const Matrix& theta, std::span<const int> groups) {
  check_rows(theta, groups);
  const auto m = static_cast<std::size_t>(theta.cols());
  check_soft_width(m);
  Matrix grad = Matrix::Zero(theta.rows(), theta.cols());
  const auto idx = index_groups(groups);
  if (idx.labels.size() < 2) return grad;

  const auto n = static_cast<double>(groups.size());
  const std::size_t cells = std::size_t{1} << m;
  std::vector<std::vector<double>> group_counts(idx.labels.size());
  std::vector<double> total(cells, 0.0);
  for (std::size_t s = 0; s < idx.labels.size(); ++s) {
    group_counts[s] = soft_counts(theta, idx.members[s]);
    for (std::size_t v = 0; v < cells; ++v) total[v] += group_counts[s][v];
  }

  // dI/dP_r(v) = (log2 p(v | s_r) - log2 p(v)) / n; constants cancel because
  // each row's cell probabilities sum to one.
  std::vector<std::vector<double>> weight(idx.labels.size(), std::vector<double>(cells, 0.0));
  for (std::size_t s = 0; s < idx.labels.size(); ++s) {
    const auto ns = static_cast<double>(idx.counts[s]);
    for (std::size_t v = 0; v < cells; ++v) {
      const double p = total[v] / n;
      const double ps = group_counts[s][v] / ns;
      if (p > 0.0 && ps > 0.0) weight[s][v] = (std::log2(ps) - std::log2(p)) / n;
    }
  }

  std::vector<double> prob;
  for (Eigen::Index r = 0; r < theta.rows(); ++r) {
    row_products(theta, r, prob);
    const auto& w = weight[idx.slot[static_cast<std::size_t>(r)]];
    for (std::size_t i = 0; i < m; ++i) {
      const double t = theta(r, static_cast<Eigen::Index>(i));
      const std::size_t bit = std::size_t{1} << (m - 1 - i);
      double acc = 0.0;
      for (std::size_t v = 0; v < cells; ++v) {
        if (v & bit) continue;
        const std::size_t on = v | bit;
        // probability of the other neurons' configuration
        const double rest = t >= 0.5 ? prob[on] / t : prob[v] / (1.0 - t);
        acc += rest * (w[on] - w[v]);
      }
      grad(r, static_cast<Eigen::Index>(i)) = acc;
    }
  }
  return grad;
}

MiEstimate joint_mi_resampled(const Matrix& theta, std::span<const int> groups, std::size_t resamples,
                              std::uint64_t seed) {
  check_rows(theta, groups);
  if (resamples == 0) throw ConfigError("resamples must be positive");
  Rng rng(seed);
  Matrix samples(theta.rows() * static_cast<Eigen::Index>(resamples), theta.cols());
  std::vector<int> repeated;
  repeated.reserve(static_cast<std::size_t>(samples.rows()));
  Eigen::Index out = 0;
  for (Eigen::Index r = 0; r < theta.rows(); ++r) {
    for (std::size_t k = 0; k < resamples; ++k, ++out) {
      for (Eigen::Index i = 0; i < theta.cols(); ++i) samples(out, i) = rng.bernoulli(theta(r, i)) ? 1.0 : 0.0;
      repeated.push_back(groups[static_cast<std::size_t>(r)]);
    }
  }
  return joint_mi(samples, repeated, HistogramKind::hard);
}

double total_correlation(const JointHistogram& h) {
  double marginals = 0.0;
  for (std::size_t i = 0; i < h.width(); ++i) marginals += bernoulli_entropy(std::clamp(h.marginal(i), 0.0, 1.0));
  return marginals - histogram_entropy(h);
}

double informativeness(const JointHistogram& joint, std::span<const JointHistogram> conditionals,
                       std::span<const double> group_weights) {
  if (conditionals.size() != group_weights.size())
    throw ConfigError("one weight per conditional histogram is required");
  double conditional_tc = 0.0;
  for (std::size_t s = 0; s < conditionals.size(); ++s) {
    if (conditionals[s].width() != joint.width()) throw ConfigError("histogram widths differ");
    conditional_tc += group_weights[s] * total_correlation(conditionals[s]);
  }
  return total_correlation(joint) - conditional_tc;
}

}  // namespace binfair
