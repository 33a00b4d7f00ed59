#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <numeric>
#include <set>
#include <thread>
#include <tuple>

#include "binfair/errors.hpp"
#include "binfair/rng.hpp"
#include "binfair/training.hpp"

namespace binfair {

namespace {

// Trains on `train` and evaluates on `test`, standardizing with training rows only.
MetricsReport run_trial(const Dataset& ds, const TrainConfig& cfg, std::span<const std::size_t> train,
                        std::span<const std::size_t> test) {
  Dataset tr = ds.subset(train);
  Dataset te = ds.subset(test);
  std::vector<std::size_t> rows(tr.size());
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  const Standardizer z = Standardizer::fit(tr, rows);
  z.apply(tr);
  z.apply(te);
  const FitResult fitted = fit(tr, cfg);
  return evaluate(fitted.network, te);
}

// Runs task(i) for i in [0, count) on up to `jobs` threads; rethrows the
// first failure by index so the reported error does not depend on timing.
template <typename Task>
void parallel_for(std::size_t count, std::size_t jobs, Task task) {
  jobs = std::clamp<std::size_t>(jobs, 1, std::max<std::size_t>(count, 1));
  std::vector<std::exception_ptr> errors(count);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        task(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t j = 0; j < jobs; ++j) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

double l1_to_ideal(const TradeoffPoint& p) { return (1.0 - p.auc) + (1.0 - p.one_minus_gpa); }

std::size_t draw_int(Rng& rng, std::size_t lo, std::size_t hi) {
  return lo + static_cast<std::size_t>(rng.below(static_cast<std::uint64_t>(hi - lo + 1)));
}

template <typename T>
const T& draw_from(Rng& rng, const std::vector<T>& items) {
  return items[static_cast<std::size_t>(rng.below(items.size()))];
}

}  // namespace

double pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw ContractViolation("pearson needs equally long series");
  if (x.size() < 2) return std::nan("");
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx <= 0.0 || syy <= 0.0) return std::nan("");
  return sxy / std::sqrt(sxx * syy);
}

// Tau-b, so ties in either series are handled.
double kendall_tau(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw ContractViolation("kendall_tau needs equally long series");
  double concordant = 0.0, discordant = 0.0, ties_x = 0.0, ties_y = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    for (std::size_t j = i + 1; j < x.size(); ++j) {
      const double dx = x[i] - x[j], dy = y[i] - y[j];
      if (dx == 0.0 && dy == 0.0) continue;
      if (dx == 0.0) {
        ties_x += 1;
      } else if (dy == 0.0) {
        ties_y += 1;
      } else if ((dx > 0) == (dy > 0)) {
        concordant += 1;
      } else {
        discordant += 1;
      }
    }
  }
  const double denom = std::sqrt((concordant + discordant + ties_x) * (concordant + discordant + ties_y));
  return denom > 0.0 ? (concordant - discordant) / denom : std::nan("");
}

SweepSummary gamma_sweep(const Dataset& ds, const TrainConfig& base, std::span<const double> gammas,
                         std::size_t repeats, const SweepOptions& opts) {
  const std::set<double> distinct(gammas.begin(), gammas.end());
  if (distinct.size() < 3)
    throw UndefinedMetric("gamma correlation is undefined with fewer than 3 distinct gamma values");
  for (double g : distinct)
    if (!(g >= 0.0 && g <= 1.0)) throw ConfigError("gamma values must lie in [0, 1]");
  if (repeats == 0) throw ConfigError("repeats must be positive");
  if (opts.folds == 0 || opts.folds > SplitPlan::kFolds) throw ConfigError("folds must be between 1 and 3");
  base.validate();

  const SplitPlan plan = make_splits(ds, derive_seed(base.seed, "sweep/splits"));
  struct Job {
    double gamma;
    std::size_t repeat, fold;
  };
  std::vector<Job> jobs;
  for (double g : distinct)
    for (std::size_t r = 0; r < repeats; ++r)
      for (std::size_t f = 0; f < opts.folds; ++f) jobs.push_back({g, r, f});

  std::vector<TradeoffPoint> points(jobs.size());
  parallel_for(jobs.size(), opts.jobs, [&](std::size_t i) {
    const Job& job = jobs[i];
    TrainConfig cfg = base;
    cfg.gamma = job.gamma;
    // same seed for every gamma of a repeat
    cfg.seed = derive_seed(derive_seed(base.seed, "sweep/repeat", job.repeat), "fold", job.fold);
    const MetricsReport m = run_trial(ds, cfg, plan.outer_train(job.fold), plan.outer[job.fold]);
    TradeoffPoint& p = points[i];
    p.gamma = job.gamma;
    p.auc = m.auc;
    p.one_minus_gpa = 1.0 - m.gpa;
    p.one_minus_audc = 1.0 - m.audc;
    p.layer_mi_bound = m.layer_mi_bound;
    p.joint_mi = m.joint_mi;
    p.accuracy = m.accuracy;
    p.seed = cfg.seed;
    p.fold = job.fold;
    p.repeat = job.repeat;
  });

  SweepSummary out;
  out.points = std::move(points);
  std::sort(out.points.begin(), out.points.end(), [](const TradeoffPoint& a, const TradeoffPoint& b) {
    return std::tie(a.gamma, a.repeat, a.fold) < std::tie(b.gamma, b.repeat, b.fold);
  });
  std::vector<double> g, fair, aucs;
  for (const auto& p : out.points) {
    g.push_back(p.gamma);
    fair.push_back(p.one_minus_gpa);
    aucs.push_back(p.auc);
  }
  out.corr_gamma_fairness = pearson(g, fair);
  out.corr_gamma_auc = pearson(g, aucs);

  std::vector<double> grid(distinct.begin(), distinct.end()), mean_fair;
  for (double gamma : grid) {
    double total = 0.0, count = 0.0;
    for (const auto& p : out.points)
      if (p.gamma == gamma) {
        total += p.one_minus_gpa;
        count += 1;
      }
    mean_fair.push_back(total / count);
  }
  out.kendall_gamma_fairness = kendall_tau(grid, mean_fair);

  out.best = *std::min_element(out.points.begin(), out.points.end(), [](const auto& a, const auto& b) {
    return l1_to_ideal(a) < l1_to_ideal(b);
  });
  return out;
}

void SearchSpace::validate() const {
  if (!(gamma_min >= 0.0 && gamma_max <= 1.0 && gamma_min <= gamma_max)) throw ConfigError("invalid gamma range");
  if (batch_min == 0 || batch_min > batch_max) throw ConfigError("invalid batch size range");
  if (layers_min > layers_max) throw ConfigError("invalid hidden layer range");
  if (!(lr_min > 0.0 && lr_min <= lr_max)) throw ConfigError("invalid learning rate range");
  if (widths.empty()) throw ConfigError("search space has no hidden widths");
  if (binary_widths.empty()) throw ConfigError("search space has no binary widths");
  if (variants.empty()) throw ConfigError("search space has no variants");
}

double search_objective(const MetricsReport& m) { return m.auc + (1.0 - m.gpa) + (1.0 - m.audc); }

SearchResult random_search(const Dataset& ds, const TrainConfig& base, const SearchSpace& space, std::size_t budget,
                           std::uint64_t seed) {
  if (budget == 0) throw ConfigError("search budget must be at least 1");
  space.validate();

  std::vector<std::size_t> rows(ds.size());
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  const auto folds = stratified_folds(ds, rows, SplitPlan::kFolds, derive_seed(seed, "search/folds"));

  Rng rng(derive_seed(seed, "search/sample"));
  SearchResult result;
  for (std::size_t t = 0; t < budget; ++t) {
    SearchTrial trial;
    trial.index = t;
    TrainConfig cfg = base;
    cfg.gamma = rng.uniform(space.gamma_min, space.gamma_max);
    cfg.batch_size = draw_int(rng, space.batch_min, space.batch_max);
    cfg.hidden_layers = draw_int(rng, space.layers_min, space.layers_max);
    cfg.hidden_width = draw_from(rng, space.widths);
    cfg.binary_width = draw_from(rng, space.binary_widths);
    cfg.learning_rate = std::exp(rng.uniform(std::log(space.lr_min), std::log(space.lr_max)));
    cfg.variant = draw_from(rng, space.variants);
    cfg.seed = derive_seed(seed, "search/trial", t);
    cfg.validate();
    trial.config = cfg;

    for (std::size_t f = 0; f < folds.size(); ++f) {
      std::vector<std::size_t> train;
      for (std::size_t o = 0; o < folds.size(); ++o)
        if (o != f) train.insert(train.end(), folds[o].begin(), folds[o].end());
      std::sort(train.begin(), train.end());
      const MetricsReport m = run_trial(ds, cfg, train, folds[f]);
      trial.auc += m.auc;
      trial.gpa += m.gpa;
      trial.audc += m.audc;
    }
    const double k = static_cast<double>(folds.size());
    trial.auc /= k;
    trial.gpa /= k;
    trial.audc /= k;
    trial.objective = trial.auc + (1.0 - trial.gpa) + (1.0 - trial.audc);
    if (t == 0 || trial.objective > result.best_objective) {
      result.best = cfg;
      result.best_objective = trial.objective;
    }
    result.trials.push_back(std::move(trial));
  }
  return result;
}

}  // namespace binfair
