#include <doctest.h>

#include <cmath>
#include <limits>
#include <string>

#include "binfair/data.hpp"
#include "binfair/errors.hpp"
#include "binfair/info_theory.hpp"
#include "binfair/rng.hpp"
#include "binfair/training.hpp"
#include "instances.hpp"
#include "oracles.hpp"

using namespace binfair;

namespace {

/// Features, labels and groups drawn independently of each other.
Dataset unrelated(std::size_t n, std::size_t d, std::uint64_t seed) {
  Rng rng(seed);
  Dataset ds;
  ds.features.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  for (Eigen::Index r = 0; r < ds.features.rows(); ++r) {
    for (Eigen::Index c = 0; c < ds.features.cols(); ++c) ds.features(r, c) = rng.normal();
    ds.labels.push_back(rng.bernoulli(0.5) ? 1 : 0);
    ds.groups.push_back(rng.bernoulli(0.5) ? 1 : 0);
  }
  return ds;
}

/// Y = [x0 + x1 > 0] with a margin, S a coin.
Dataset separable(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  Dataset ds;
  ds.features.resize(static_cast<Eigen::Index>(n), 3);
  for (Eigen::Index r = 0; r < ds.features.rows(); ++r) {
    const int y = rng.bernoulli(0.5) ? 1 : 0;
    const double side = y ? 1.0 : -1.0;
    ds.features(r, 0) = side * (0.5 + rng.uniform());
    ds.features(r, 1) = side * (0.5 + rng.uniform());
    ds.features(r, 2) = rng.normal();
    ds.labels.push_back(y);
    ds.groups.push_back(rng.bernoulli(0.5) ? 1 : 0);
  }
  return ds;
}

TrainConfig small_config() {
  TrainConfig cfg;
  cfg.epochs = 3;
  cfg.batch_size = 64;
  cfg.hidden_layers = 1;
  cfg.hidden_width = 8;
  cfg.binary_width = 4;
  cfg.learning_rate = 1e-3;
  cfg.seed = 1;
  return cfg;
}

bool same_log(const std::vector<EpochRecord>& a, const std::vector<EpochRecord>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i].epoch != b[i].epoch || a[i].loss != b[i].loss || a[i].mi_term != b[i].mi_term ||
        a[i].ce_term != b[i].ce_term || a[i].layer_mi_bound != b[i].layer_mi_bound ||
        a[i].train_auc != b[i].train_auc)
      return false;
  return true;
}

bool same_point(const TradeoffPoint& a, const TradeoffPoint& b) {
  return a.gamma == b.gamma && a.auc == b.auc && a.one_minus_gpa == b.one_minus_gpa &&
         a.one_minus_audc == b.one_minus_audc && a.layer_mi_bound == b.layer_mi_bound && a.joint_mi == b.joint_mi &&
         a.accuracy == b.accuracy && a.seed == b.seed && a.fold == b.fold && a.repeat == b.repeat;
}

}  // namespace

TEST_CASE("train config validation") {
  TrainConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.gamma = 1.1;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg.gamma = -0.1;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = TrainConfig{};
  cfg.epochs = 0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = TrainConfig{};
  cfg.variant = Variant::binary_mi;
  cfg.binary_width = kSoftHistogramMaxWidth + 1;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg.variant = Variant::binary_bernoulli;
  CHECK_NOTHROW(cfg.validate());
  cfg.hidden_activation = Activation::softmax;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("variants and presets") {
  CHECK(parse_variant("bernoulli") == Variant::binary_bernoulli);
  CHECK(parse_variant("mi") == Variant::binary_mi);
  CHECK(parse_variant(to_string(Variant::binary_mi)) == Variant::binary_mi);
  CHECK_THROWS_AS(parse_variant("adversarial"), ConfigError);
  const auto compas = preset("compas", Variant::binary_bernoulli);
  CHECK(compas.gamma == 0.23);
  CHECK(compas.batch_size == 175);
  CHECK(compas.hidden_layers == 3);
  CHECK(compas.hidden_width == 20);
  const auto adult = preset("adult", Variant::binary_mi);
  CHECK(adult.gamma == 0.01);
  CHECK(adult.batch_size == 228);
  CHECK(adult.epochs == 100);
  CHECK(adult.learning_rate == 1e-4);
  CHECK_THROWS_AS(preset("mnist", Variant::binary_mi), ConfigError);
}

TEST_CASE("cross entropy") {
  Matrix single(2, 1);
  single << 0.8, 0.3;
  const std::vector<int> y{1, 0};
  CHECK(cross_entropy(single, y) == doctest::Approx(-(std::log(0.8) + std::log(0.7)) / 2).epsilon(1e-15));
  Matrix multi(1, 3);
  multi << 0.2, 0.5, 0.3;
  const std::vector<int> y2{2};
  CHECK(cross_entropy(multi, y2) == doctest::Approx(-std::log(0.3)).epsilon(1e-15));
  const std::vector<int> bad{3};
  CHECK_THROWS_AS(cross_entropy(multi, bad), DataError);
}

TEST_CASE("loss on a tiny batch equals the hand-composed mix") {
  std::mt19937_64 gen(3);
  NetworkConfig nc;
  nc.input_dim = 3;
  nc.hidden = {5};
  nc.binary_width = 2;
  nc.num_classes = 2;
  const auto net = init_params(nc, 9);
  Matrix x(4, 3);
  std::normal_distribution<double> normal;
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = 2 * normal(gen);
  const std::vector<int> labels{1, 0, 0, 1};
  const std::vector<int> groups{0, 1, 1, 0};
  const auto trace = forward(net, x, 0, BinaryMode::expected);

  instances::ThetaInstance inst;
  inst.m = 2;
  inst.k = 2;
  inst.theta = trace.theta;
  inst.groups = groups;
  const auto table = inst.table();
  long double ce = 0;
  for (std::size_t r = 0; r < 4; ++r) {
    const long double p = trace.output()(static_cast<Eigen::Index>(r), 0);
    ce -= std::log(labels[r] ? p : 1 - p);
  }
  ce /= 4;

  for (double gamma : {0.0, 0.3, 0.7, 1.0}) {
    TrainConfig cfg;
    cfg.gamma = gamma;
    cfg.binary_width = 2;
    cfg.variant = Variant::binary_bernoulli;
    const auto bern = compute_loss(trace, labels, groups, cfg);
    const long double bound = oracle::neuron_mi(table, 0) + oracle::neuron_mi(table, 1);
    CHECK(std::abs(bern.total - static_cast<double>(gamma * bound + (1 - gamma) * ce)) <= 1e-9);
    CHECK(std::abs(bern.mi_term - static_cast<double>(bound)) <= 1e-9);

    cfg.variant = Variant::binary_mi;
    const auto joint = compute_loss(trace, labels, groups, cfg);
    const long double mi = oracle::mutual_information(table);
    CHECK(std::abs(joint.total - static_cast<double>(gamma * mi + (1 - gamma) * ce)) <= 1e-9);
  }
}

TEST_CASE("loss endpoints") {
  NetworkConfig nc;
  nc.input_dim = 2;
  nc.hidden = {4};
  nc.binary_width = 3;
  const auto net = init_params(nc, 4);
  Matrix x = Matrix::Random(6, 2) * 3;
  const std::vector<int> labels{1, 0, 0, 1, 1, 0};
  const std::vector<int> groups{0, 1, 1, 0, 0, 1};
  const auto trace = forward(net, x, 0, BinaryMode::expected);
  for (Variant v : {Variant::binary_bernoulli, Variant::binary_mi}) {
    TrainConfig cfg;
    cfg.variant = v;
    cfg.binary_width = 3;
    cfg.gamma = 0.0;
    const auto ce_only = compute_loss(trace, labels, groups, cfg);
    CHECK(ce_only.total == cross_entropy(trace.output(), labels));
    CHECK(ce_only.theta_grad.isZero(0.0));
    cfg.gamma = 1.0;
    const auto mi_only = compute_loss(trace, labels, groups, cfg);
    CHECK(mi_only.total == mi_only.mi_term);
    CHECK(mi_only.output_grad.isZero(0.0));
    // labels no longer matter
    const std::vector<int> flipped{0, 1, 1, 0, 0, 1};
    CHECK(compute_loss(trace, flipped, groups, cfg).total == mi_only.total);
  }
  TrainConfig wrong;
  wrong.binary_width = 5;
  CHECK_THROWS_AS(compute_loss(trace, labels, groups, wrong), ConfigError);
}

TEST_CASE("fit on separable data without the MI term") {
  const auto ds = separable(600, 1);
  TrainConfig cfg = small_config();
  cfg.gamma = 0.0;
  cfg.epochs = 100;
  cfg.learning_rate = 1e-2;
  const auto result = fit(ds, cfg);
  REQUIRE(result.log.size() == 101);
  CHECK(result.log.front().epoch == 0);
  CHECK(result.log.back().train_auc >= 0.95);
  CHECK(result.log.back().ce_term < result.log.front().ce_term);
}

TEST_CASE("high gamma drives the layer bound down") {
  TabularSpec spec;
  spec.n = 2000;
  spec.seed = 5;
  const auto ds = gen_synthetic_tabular(spec);
  TrainConfig cfg = small_config();
  cfg.gamma = 0.9;
  cfg.epochs = 30;
  cfg.binary_width = 8;
  cfg.hidden_width = 20;
  cfg.learning_rate = 1e-2;
  const auto result = fit(ds, cfg);
  CHECK(result.log.back().layer_mi_bound <= 0.1 * result.log.front().layer_mi_bound);
}

TEST_CASE("fit is deterministic given the seed") {
  const auto ds = gen_synthetic_tabular(500, 6, 0.5, 2);
  for (Variant v : {Variant::binary_bernoulli, Variant::binary_mi}) {
    TrainConfig cfg = small_config();
    cfg.variant = v;
    const auto a = fit(ds, cfg);
    const auto b = fit(ds, cfg);
    CHECK(same_log(a.log, b.log));
    CHECK(a.network.weights(0) == b.network.weights(0));
    cfg.seed = 2;
    CHECK_FALSE(same_log(a.log, fit(ds, cfg).log));
  }
}

TEST_CASE("divergence is reported with the last good network") {
  const auto ds = separable(64, 2);
  TrainConfig cfg = small_config();
  cfg.hidden_activation = Activation::identity;
  cfg.learning_rate = 1e300;
  cfg.gamma = 0.0;
  try {
    fit(ds, cfg);
    FAIL("expected TrainingDiverged");
  } catch (const TrainingDiverged& e) {
    CHECK(e.last_good().input_dim() == 3);
    CHECK(std::string(e.what()).find("diverged") != std::string::npos);
  }
}

TEST_CASE("evaluation of an untrained network") {
  const auto ds = unrelated(5000, 6, 3);
  TrainConfig cfg = small_config();
  const auto net = init_params(cfg.network_config(ds.dim(), 2), 11);
  const auto report = evaluate(net, ds);
  CHECK(std::abs(report.auc - 0.5) <= 0.05);
  // groups are independent of everything the network sees
  CHECK(report.joint_mi <= 0.02);
  CHECK(report.layer_mi_bound >= 0.0);
  const auto again = evaluate(net, ds);
  CHECK(again.auc == report.auc);
  CHECK(again.gpa == report.gpa);
  CHECK(again.audc == report.audc);
  CHECK(again.joint_mi == report.joint_mi);
  CHECK(again.layer_mi_bound == report.layer_mi_bound);
}

TEST_CASE("multi-class evaluation averages one-vs-rest") {
  BiasedImageSpec spec;
  spec.classes = 3;
  spec.train_size = 300;
  spec.test_size = 300;
  const auto test = gen_biased_images(spec).second;
  TrainConfig cfg = small_config();
  const auto net = init_params(cfg.network_config(test.dim(), 3), 1);
  const auto report = evaluate(net, test);
  CHECK(report.auc >= 0.0);
  CHECK(report.auc <= 1.0);
  CHECK(predict_proba(net, test.features).cols() == 3);
  CHECK(predict_proba(net, test.features).row(0).sum() == doctest::Approx(1.0));
}

TEST_CASE("representations") {
  const auto ds = unrelated(5000, 4, 4);
  TrainConfig cfg = small_config();
  const auto net = init_params(cfg.network_config(ds.dim(), 2), 5);
  const Matrix sampled = extract_representations(net, ds, RepresentationMode::sampled);
  const Matrix expected = extract_representations(net, ds, RepresentationMode::expected);
  CHECK(sampled.rows() == 5000);
  CHECK(sampled.cols() == 4);
  CHECK((sampled.array() * (1 - sampled.array())).isZero(0.0));
  CHECK(expected.minCoeff() > 0.0);
  CHECK(expected.maxCoeff() < 1.0);
  const Vector diff = sampled.colwise().mean() - expected.colwise().mean();
  CHECK(diff.cwiseAbs().maxCoeff() <= 0.02);
  CHECK(extract_representations(net, ds, RepresentationMode::sampled) == sampled);
}

TEST_CASE("probe") {
  Rng rng(6);
  std::vector<int> groups;
  for (int i = 0; i < 5000; ++i) groups.push_back(rng.bernoulli(0.6) ? 1 : 0);
  SUBCASE("perfect leakage") {
    Matrix reps(5000, 1);
    for (Eigen::Index r = 0; r < reps.rows(); ++r) reps(r, 0) = groups[static_cast<std::size_t>(r)];
    for (ProbeKind kind : {ProbeKind::logistic, ProbeKind::extra_trees}) {
      ProbeOptions opts;
      opts.kind = kind;
      const auto report = probe_invariance(reps, groups, opts);
      CHECK(report.accuracy >= 0.99);
      CHECK(std::abs(report.adrg - (1 - report.majority_rate)) <= 0.01);
      CHECK(report.auc >= 0.99);
      CHECK(report.train_size + report.test_size == 5000);
      CHECK(report.test_size == doctest::Approx(1500).epsilon(0.01));
    }
  }
  SUBCASE("pure noise") {
    Matrix reps(5000, 4);
    for (Eigen::Index i = 0; i < reps.size(); ++i) reps.data()[i] = rng.bernoulli(0.5) ? 1.0 : 0.0;
    for (ProbeKind kind : {ProbeKind::logistic, ProbeKind::extra_trees}) {
      ProbeOptions opts;
      opts.kind = kind;
      const auto report = probe_invariance(reps, groups, opts);
      CHECK(report.adrg <= 0.05);
      CHECK(report.majority_rate == doctest::Approx(0.6).epsilon(0.05));
    }
  }
  SUBCASE("errors") {
    const std::vector<int> lonely{0, 0, 0, 0, 1};
    CHECK_THROWS_AS(probe_invariance(Matrix::Zero(5, 1), lonely, {}), DataError);
    const std::vector<int> single{0, 0, 0, 0};
    CHECK_THROWS_AS(probe_invariance(Matrix::Zero(4, 1), single, {}), DataError);
    CHECK(parse_probe_kind("extra_trees") == ProbeKind::extra_trees);
    CHECK_THROWS_AS(parse_probe_kind("forest"), ConfigError);
  }
}

TEST_CASE("correlation helpers") {
  const std::vector<double> x{0, 1, 2, 3};
  const std::vector<double> up{1, 3, 5, 7};
  const std::vector<double> down{4, 3, 2, 1};
  const std::vector<double> flat{2, 2, 2, 2};
  CHECK(pearson(x, up) == doctest::Approx(1.0));
  CHECK(pearson(x, down) == doctest::Approx(-1.0));
  CHECK(std::isnan(pearson(x, flat)));
  CHECK(kendall_tau(x, up) == doctest::Approx(1.0));
  CHECK(kendall_tau(x, down) == doctest::Approx(-1.0));
  // one swapped pair out of six
  const std::vector<double> swapped{0, 2, 1, 3};
  CHECK(kendall_tau(x, swapped) == doctest::Approx(4.0 / 6.0));
}

TEST_CASE("gamma sweep") {
  const auto ds = gen_synthetic_tabular(300, 4, 0.5, 7);
  TrainConfig base = small_config();
  base.epochs = 2;
  const std::vector<double> one{0.5};
  CHECK_THROWS_AS(gamma_sweep(ds, base, one, 1), UndefinedMetric);
  const std::vector<double> repeated{0.5, 0.5, 0.1};
  CHECK_THROWS_AS(gamma_sweep(ds, base, repeated, 1), UndefinedMetric);

  const std::vector<double> gammas{0.6, 0.0, 0.3};
  SweepOptions opts;
  opts.folds = 2;
  const auto serial = gamma_sweep(ds, base, gammas, 2, opts);
  REQUIRE(serial.points.size() == 3 * 2 * 2);
  CHECK(serial.points.front().gamma == 0.0);
  CHECK(serial.points.back().gamma == 0.6);
  CHECK(serial.points[0].seed == serial.points[4].seed);  // same seed across gammas
  opts.jobs = 3;
  const auto threaded = gamma_sweep(ds, base, gammas, 2, opts);
  for (std::size_t i = 0; i < serial.points.size(); ++i) CHECK(same_point(serial.points[i], threaded.points[i]));
  CHECK(serial.corr_gamma_fairness == threaded.corr_gamma_fairness);
  for (const auto& p : serial.points) {
    CHECK(std::isfinite(p.auc));
    CHECK(p.one_minus_gpa >= 0.0);
    CHECK(p.one_minus_gpa <= 1.0);
  }
  double best = std::numeric_limits<double>::infinity();
  for (const auto& p : serial.points) best = std::min(best, (1 - p.auc) + (1 - p.one_minus_gpa));
  CHECK((1 - serial.best.auc) + (1 - serial.best.one_minus_gpa) == best);
}

TEST_CASE("random search") {
  const auto ds = gen_synthetic_tabular(300, 4, 0.5, 8);
  TrainConfig base = small_config();
  base.epochs = 1;
  SearchSpace space;
  space.layers_max = 2;
  space.widths = {4, 8};
  space.binary_widths = {3, 4};
  space.lr_min = 1e-3;
  space.lr_max = 1e-2;
  space.variants = {Variant::binary_bernoulli, Variant::binary_mi};

  const auto single = random_search(ds, base, space, 1, 3);
  REQUIRE(single.trials.size() == 1);
  CHECK(train_config_to_json(single.best) == train_config_to_json(single.trials[0].config));
  CHECK(single.best_objective == single.trials[0].objective);

  const auto a = random_search(ds, base, space, 3, 4);
  const auto b = random_search(ds, base, space, 3, 4);
  REQUIRE(a.trials.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(train_config_to_json(a.trials[i].config) == train_config_to_json(b.trials[i].config));
    CHECK(a.trials[i].objective == b.trials[i].objective);
    const auto& c = a.trials[i].config;
    CHECK(c.hidden_layers >= 1);
    CHECK(c.hidden_layers <= 2);
    CHECK(c.learning_rate >= 1e-3);
    CHECK(c.learning_rate <= 1e-2);
    CHECK(c.epochs == 1);
    CHECK(a.trials[i].objective <= a.best_objective);
  }
  CHECK_THROWS_AS(random_search(ds, base, space, 0, 4), ConfigError);
  SearchSpace empty = space;
  empty.widths.clear();
  CHECK_THROWS_AS(random_search(ds, base, empty, 1, 4), ConfigError);
}

TEST_CASE("search objective bounds") {
  MetricsReport perfect;
  perfect.auc = 1.0;
  perfect.gpa = 0.0;
  perfect.audc = 0.0;
  CHECK(search_objective(perfect) == 3.0);
  MetricsReport worst;
  worst.auc = 0.0;
  worst.gpa = 1.0;
  worst.audc = 1.0;
  CHECK(search_objective(worst) == 0.0);
}

TEST_CASE("config files") {
  TrainConfig cfg;
  cfg.gamma = 0.25;
  cfg.variant = Variant::binary_mi;
  cfg.epochs = 7;
  cfg.hidden_activation = Activation::sigmoid;
  cfg.seed = 99;
  const auto text = train_config_to_json(cfg);
  CHECK(train_config_to_json(train_config_from_json(text)) == text);

  const auto partial = train_config_from_json(R"({"gamma": 0.4, "variant": "mi"})");
  CHECK(partial.gamma == 0.4);
  CHECK(partial.variant == Variant::binary_mi);
  CHECK(partial.epochs == TrainConfig{}.epochs);
  CHECK_THROWS_AS(train_config_from_json(R"({"gama": 0.4})"), ConfigError);
  CHECK_THROWS_AS(train_config_from_json(R"({"gamma": "high"})"), ConfigError);
  CHECK_THROWS_AS(train_config_from_json("{"), ConfigError);
  CHECK_THROWS_AS(train_config_from_json(R"({"gamma": 3})"), ConfigError);

  SearchSpace space;
  space.widths = {16, 32};
  space.variants = {Variant::binary_mi};
  const auto space_text = search_space_to_json(space);
  CHECK(search_space_to_json(search_space_from_json(space_text)) == space_text);
  const auto ranged = search_space_from_json(R"({"gamma": [0.1, 0.9], "batch_size": [32, 64]})");
  CHECK(ranged.gamma_min == 0.1);
  CHECK(ranged.batch_max == 64);
  CHECK_THROWS_AS(search_space_from_json(R"({"gamma": [0.1]})"), ConfigError);
}
