#include <algorithm>
#include <cmath>
#include <numeric>

#include "binfair/errors.hpp"
#include "binfair/rng.hpp"
#include "binfair/training.hpp"
#include "training_internal.hpp"

namespace binfair {

namespace {

struct Split {
  std::vector<std::size_t> train, test;
};

// Stratified by class code; every class must land on both sides.
Split stratified_split(std::span<const int> codes, std::size_t classes, double test_fraction, std::uint64_t seed) {
  std::vector<std::vector<std::size_t>> by_class(classes);
  for (std::size_t r = 0; r < codes.size(); ++r) by_class[static_cast<std::size_t>(codes[r])].push_back(r);
  Rng rng(seed);
  Split split;
  for (std::size_t c = 0; c < classes; ++c) {
    auto& rows = by_class[c];
    if (rows.size() < 2)
      throw DataError("probe split is degenerate: group code " + std::to_string(c) + " has fewer than 2 rows");
    rng.shuffle(rows);
    auto n_test = static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(rows.size())));
    n_test = std::clamp<std::size_t>(n_test, 1, rows.size() - 1);
    split.test.insert(split.test.end(), rows.begin(), rows.begin() + static_cast<std::ptrdiff_t>(n_test));
    split.train.insert(split.train.end(), rows.begin() + static_cast<std::ptrdiff_t>(n_test), rows.end());
  }
  std::sort(split.train.begin(), split.train.end());
  std::sort(split.test.begin(), split.test.end());
  return split;
}

Matrix take_rows(const Matrix& m, std::span<const std::size_t> rows) {
  Matrix out(static_cast<Eigen::Index>(rows.size()), m.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = m.row(static_cast<Eigen::Index>(rows[i]));
  return out;
}

void softmax_rows(Matrix& z) {
  for (Eigen::Index r = 0; r < z.rows(); ++r) {
    const double mx = z.row(r).maxCoeff();
    z.row(r) = (z.row(r).array() - mx).exp();
    z.row(r) /= z.row(r).sum();
  }
}

// Multinomial logistic regression, L2 on the weights, full-batch ADAM.
Matrix logistic_probe(const Matrix& xtr, std::span<const int> ytr, const Matrix& xte, std::size_t classes,
                      const ProbeOptions& opts) {
  // z-score with training statistics
  const Eigen::RowVectorXd mean = xtr.colwise().mean();
  Eigen::RowVectorXd sd = ((xtr.rowwise() - mean).array().square().colwise().mean()).sqrt();
  for (Eigen::Index c = 0; c < sd.size(); ++c)
    if (!(sd(c) > 1e-12)) sd(c) = 1.0;
  const Matrix a = (xtr.rowwise() - mean).array().rowwise() / sd.array();
  const Matrix b = (xte.rowwise() - mean).array().rowwise() / sd.array();

  const auto k = static_cast<Eigen::Index>(classes);
  Matrix onehot = Matrix::Zero(a.rows(), k);
  for (std::size_t r = 0; r < ytr.size(); ++r) onehot(static_cast<Eigen::Index>(r), ytr[r]) = 1.0;

  Matrix w = Matrix::Zero(a.cols(), k);
  Eigen::RowVectorXd bias = Eigen::RowVectorXd::Zero(k);
  Matrix mw = Matrix::Zero(w.rows(), w.cols()), vw = mw;
  Eigen::RowVectorXd mb = Eigen::RowVectorXd::Zero(k), vb = mb;
  constexpr double lr = 0.05, b1 = 0.9, b2 = 0.999, eps = 1e-8;
  const double n = static_cast<double>(a.rows());
  for (std::size_t t = 1; t <= opts.iterations; ++t) {
    Matrix p = (a * w).rowwise() + bias;
    softmax_rows(p);
    const Matrix d = (p - onehot) / n;
    const Matrix gw = a.transpose() * d + opts.l2 * w;
    const Eigen::RowVectorXd gb = d.colwise().sum();
    mw = b1 * mw + (1 - b1) * gw;
    vw = b2 * vw + (1 - b2) * gw.cwiseProduct(gw);
    mb = b1 * mb + (1 - b1) * gb;
    vb = b2 * vb + (1 - b2) * gb.cwiseProduct(gb);
    const double c1 = 1 - std::pow(b1, static_cast<double>(t)), c2 = 1 - std::pow(b2, static_cast<double>(t));
    w.array() -= lr * (mw.array() / c1) / ((vw.array() / c2).sqrt() + eps);
    bias.array() -= lr * (mb.array() / c1) / ((vb.array() / c2).sqrt() + eps);
  }
  Matrix p = (b * w).rowwise() + bias;
  softmax_rows(p);
  return p;
}

struct TreeNode {
  int feature = -1;  // -1 for a leaf
  double threshold = 0.0;
  int left = -1, right = -1;
  std::vector<double> proba;
};

class ExtraTree {
 public:
  ExtraTree(const Matrix& x, std::span<const int> y, std::size_t classes, std::size_t max_depth, Rng& rng)
      : x_(x), y_(y), classes_(classes), max_depth_(max_depth), rng_(rng) {
    std::vector<std::size_t> rows(static_cast<std::size_t>(x.rows()));
    std::iota(rows.begin(), rows.end(), std::size_t{0});
    build(rows, 0);
  }

  void accumulate(const Matrix& x, Matrix& proba) const {
    for (Eigen::Index r = 0; r < x.rows(); ++r) {
      int node = 0;
      while (nodes_[static_cast<std::size_t>(node)].feature >= 0) {
        const auto& nd = nodes_[static_cast<std::size_t>(node)];
        node = x(r, nd.feature) <= nd.threshold ? nd.left : nd.right;
      }
      const auto& leaf = nodes_[static_cast<std::size_t>(node)].proba;
      for (std::size_t c = 0; c < classes_; ++c) proba(r, static_cast<Eigen::Index>(c)) += leaf[c];
    }
  }

 private:
  int build(std::vector<std::size_t>& rows, std::size_t depth) {
    const int id = static_cast<int>(nodes_.size());
    nodes_.emplace_back();
    std::vector<double> counts(classes_, 0.0);
    for (std::size_t r : rows) counts[static_cast<std::size_t>(y_[r])] += 1.0;
    const bool pure = std::count_if(counts.begin(), counts.end(), [](double c) { return c > 0; }) <= 1;
    if (depth < max_depth_ && rows.size() >= 4 && !pure) {
      // a handful of random (feature, threshold) candidates, best Gini wins
      const std::size_t tries = std::max<std::size_t>(1, static_cast<std::size_t>(std::sqrt(static_cast<double>(x_.cols()))));
      double best_score = -1.0;
      int best_feature = -1;
      double best_threshold = 0.0;
      for (std::size_t t = 0; t < tries; ++t) {
        const auto f = static_cast<Eigen::Index>(rng_.below(static_cast<std::uint64_t>(x_.cols())));
        double lo = x_(static_cast<Eigen::Index>(rows[0]), f), hi = lo;
        for (std::size_t r : rows) {
          lo = std::min(lo, x_(static_cast<Eigen::Index>(r), f));
          hi = std::max(hi, x_(static_cast<Eigen::Index>(r), f));
        }
        if (!(hi > lo)) continue;
        const double thr = rng_.uniform(lo, hi);
        std::vector<double> left(classes_, 0.0), right(classes_, 0.0);
        double nl = 0, nr = 0;
        for (std::size_t r : rows) {
          if (x_(static_cast<Eigen::Index>(r), f) <= thr) {
            left[static_cast<std::size_t>(y_[r])] += 1;
            nl += 1;
          } else {
            right[static_cast<std::size_t>(y_[r])] += 1;
            nr += 1;
          }
        }
        if (nl == 0 || nr == 0) continue;
        double score = 0.0;
        for (std::size_t c = 0; c < classes_; ++c) score += left[c] * left[c] / nl + right[c] * right[c] / nr;
        if (score > best_score) {
          best_score = score;
          best_feature = static_cast<int>(f);
          best_threshold = thr;
        }
      }
      if (best_feature >= 0) {
        std::vector<std::size_t> l, r;
        for (std::size_t row : rows)
          (x_(static_cast<Eigen::Index>(row), best_feature) <= best_threshold ? l : r).push_back(row);
        nodes_[static_cast<std::size_t>(id)].feature = best_feature;
        nodes_[static_cast<std::size_t>(id)].threshold = best_threshold;
        const int li = build(l, depth + 1);
        const int ri = build(r, depth + 1);
        nodes_[static_cast<std::size_t>(id)].left = li;
        nodes_[static_cast<std::size_t>(id)].right = ri;
        return id;
      }
    }
    const double total = static_cast<double>(rows.size());
    for (auto& c : counts) c /= total;
    nodes_[static_cast<std::size_t>(id)].proba = std::move(counts);
    return id;
  }

  const Matrix& x_;
  std::span<const int> y_;
  std::size_t classes_;
  std::size_t max_depth_;
  Rng& rng_;
  std::vector<TreeNode> nodes_;
};

Matrix extra_trees_probe(const Matrix& xtr, std::span<const int> ytr, const Matrix& xte, std::size_t classes,
                         const ProbeOptions& opts) {
  Rng rng(derive_seed(opts.seed, "probe/trees"));
  Matrix proba = Matrix::Zero(xte.rows(), static_cast<Eigen::Index>(classes));
  for (std::size_t t = 0; t < opts.trees; ++t) ExtraTree(xtr, ytr, classes, opts.max_depth, rng).accumulate(xte, proba);
  return proba / static_cast<double>(opts.trees);
}

}  // namespace

std::string_view to_string(ProbeKind k) { return k == ProbeKind::logistic ? "logistic" : "extra_trees"; }

ProbeKind parse_probe_kind(std::string_view s) {
  if (s == "logistic") return ProbeKind::logistic;
  if (s == "extra_trees" || s == "trees") return ProbeKind::extra_trees;
  throw ConfigError("unknown probe kind '" + std::string(s) + "' (expected logistic or extra_trees)");
}

ProbeReport probe_invariance(const Matrix& reps, std::span<const int> groups, const ProbeOptions& opts) {
  if (static_cast<std::size_t>(reps.rows()) != groups.size())
    throw ContractViolation("representation rows do not match the group vector");
  if (!(opts.test_fraction > 0.0 && opts.test_fraction < 1.0)) throw ConfigError("test_fraction must lie in (0, 1)");
  if (opts.kind == ProbeKind::extra_trees && opts.trees == 0) throw ConfigError("trees must be positive");

  std::vector<int> present(groups.begin(), groups.end());
  std::sort(present.begin(), present.end());
  present.erase(std::unique(present.begin(), present.end()), present.end());
  if (present.size() < 2) throw DataError("probe needs at least two groups");
  std::vector<int> codes(groups.size());
  for (std::size_t r = 0; r < groups.size(); ++r)
    codes[r] = static_cast<int>(std::lower_bound(present.begin(), present.end(), groups[r]) - present.begin());

  const std::size_t classes = present.size();
  const Split split = stratified_split(codes, classes, opts.test_fraction, derive_seed(opts.seed, "probe/split"));
  std::vector<int> ytr, yte;
  for (std::size_t r : split.train) ytr.push_back(codes[r]);
  for (std::size_t r : split.test) yte.push_back(codes[r]);
  const Matrix xtr = take_rows(reps, split.train);
  const Matrix xte = take_rows(reps, split.test);

  const Matrix proba = opts.kind == ProbeKind::logistic ? logistic_probe(xtr, ytr, xte, classes, opts)
                                                        : extra_trees_probe(xtr, ytr, xte, classes, opts);

  ProbeReport rep;
  rep.kind = opts.kind;
  rep.train_size = split.train.size();
  rep.test_size = split.test.size();
  std::vector<double> counts(classes, 0.0);
  for (int y : yte) counts[static_cast<std::size_t>(y)] += 1.0;
  rep.majority_rate = *std::max_element(counts.begin(), counts.end()) / static_cast<double>(yte.size());
  rep.accuracy = detail::accuracy(classes == 2 ? Matrix(proba.col(1)) : proba, yte);
  rep.adrg = std::abs(rep.accuracy - rep.majority_rate);
  const std::vector<int> none(yte.size(), 0);
  rep.auc = detail::macro_metric(detail::one_vs_rest(classes == 2 ? Matrix(proba.col(1)) : proba, yte, none),
                                 [](const ScoredBatch& b) { return auc(b); });
  return rep;
}

}  // namespace binfair
