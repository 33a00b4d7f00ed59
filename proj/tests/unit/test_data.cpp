#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <string>

#include "binfair/data.hpp"
#include "binfair/errors.hpp"
#include "binfair/training.hpp"

using namespace binfair;
namespace fs = std::filesystem;

namespace {

CsvSchema toy_schema() {
  CsvSchema s;
  s.label_column = "label";
  s.group_column = "group";
  s.categorical_columns = {"colour"};
  return s;
}

fs::path scratch_dir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("binfair_test_data_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::vector<std::size_t> all_rows(const Dataset& ds) {
  std::vector<std::size_t> rows(ds.size());
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  return rows;
}

/// Plug-in I(A;B) in bits from paired integer codes.
double empirical_mi(const std::vector<int>& a, const std::vector<int>& b) {
  std::map<std::pair<int, int>, double> joint;
  std::map<int, double> pa, pb;
  const double n = static_cast<double>(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    joint[{a[i], b[i]}] += 1 / n;
    pa[a[i]] += 1 / n;
    pb[b[i]] += 1 / n;
  }
  double mi = 0;
  for (const auto& [key, p] : joint) mi += p * std::log2(p / (pa[key.first] * pb[key.second]));
  return mi;
}

bool same_dataset(const Dataset& a, const Dataset& b) {
  return a.features == b.features && a.labels == b.labels && a.groups == b.groups &&
         a.feature_names == b.feature_names && a.numeric_mask == b.numeric_mask && a.metadata == b.metadata;
}

void write_be32(std::ofstream& out, std::uint32_t v) {
  const char bytes[4] = {static_cast<char>(v >> 24), static_cast<char>(v >> 16), static_cast<char>(v >> 8),
                         static_cast<char>(v)};
  out.write(bytes, 4);
}

}  // namespace

TEST_CASE("dataset validation") {
  Dataset ds;
  ds.features = Matrix::Zero(3, 2);
  ds.labels = {0, 1, 0};
  ds.groups = {0, 1, 1};
  CHECK_NOTHROW(ds.validate());
  CHECK(ds.num_classes() == 2);
  CHECK(ds.num_groups() == 2);
  auto gap = ds;
  gap.groups = {0, 2, 2};
  CHECK_THROWS_AS(gap.validate(), DataError);
  auto short_labels = ds;
  short_labels.labels.pop_back();
  CHECK_THROWS_AS(short_labels.validate(), DataError);
  auto nan = ds;
  nan.features(1, 1) = std::nan("");
  CHECK_THROWS_AS(nan.validate(), DataError);
  const std::vector<std::size_t> rows{2, 0};
  const auto sub = ds.subset(rows);
  CHECK(sub.labels == std::vector<int>{0, 0});
  CHECK(sub.groups == std::vector<int>{1, 0});
  const std::vector<std::size_t> bad{5};
  CHECK_THROWS_AS(ds.subset(bad), ContractViolation);
}

TEST_CASE("csv one-hot encoding") {
  std::istringstream in("age,colour,score,label,group\n30,red,1.5,yes,a\n40,blue,2.5,no,b\n");
  auto schema = toy_schema();
  schema.standardize = false;
  const auto ds = load_csv(in, schema);
  // two numerics plus one column per observed level
  CHECK(ds.dim() == 2 + 2);
  CHECK(ds.feature_names == std::vector<std::string>{"age", "colour=blue", "colour=red", "score"});
  CHECK(ds.numeric_mask == std::vector<bool>{true, false, false, true});
  CHECK(ds.features(0, 2) == 1.0);
  CHECK(ds.features(1, 1) == 1.0);
  CHECK(ds.labels == std::vector<int>{1, 0});  // lexicographic: no < yes
  CHECK(ds.groups == std::vector<int>{0, 1});
}

TEST_CASE("csv with a three-level categorical") {
  std::istringstream in("x,colour,label,group\n1,red,0,0\n2,green,1,1\n3,blue,0,1\n");
  auto schema = toy_schema();
  schema.standardize = false;
  const auto ds = load_csv(in, schema);
  CHECK(ds.dim() == 1 + 3);
}

TEST_CASE("csv errors") {
  SUBCASE("missing column is named") {
    std::istringstream in("x,label\n1,0\n");
    try {
      load_csv(in, toy_schema());
      FAIL("expected DataError");
    } catch (const DataError& e) {
      CHECK(std::string(e.what()).find("'group'") != std::string::npos);
    }
  }
  SUBCASE("unparseable cell reports the row") {
    std::istringstream in("x,label,group\n1,0,0\n2,1,1\nabc,0,1\n");
    CsvSchema s{"label", "group", {}, {}, std::nullopt, false, ','};
    try {
      load_csv(in, s);
      FAIL("expected DataError");
    } catch (const DataError& e) {
      CHECK(std::string(e.what()).find("data row 3") != std::string::npos);
    }
  }
  SUBCASE("ragged row") {
    std::istringstream in("x,label,group\n1,0\n");
    CsvSchema s{"label", "group", {}, {}, std::nullopt, false, ','};
    CHECK_THROWS_AS(load_csv(in, s), DataError);
  }
}

TEST_CASE("csv cleaning") {
  std::istringstream in("x,k,label,group\n1,5,0,0\n,5,1,1\n3,5,,1\n5,5,1,0\n7,5,0,1\n");
  CsvSchema s{"label", "group", {}, {}, std::nullopt, false, ','};
  const auto ds = load_csv(in, s);
  CHECK(ds.size() == 4);
  CHECK(ds.metadata.at("rows_dropped") == "1");
  CHECK(ds.dim() == 1);  // constant k is skipped
  CHECK(ds.metadata.at("warnings").find("'k' is constant") != std::string::npos);
  CHECK(ds.features(1, 0) == 5.0);  // median of 1, 5, 7
}

TEST_CASE("range-coded groups") {
  std::istringstream in("age;x;y\n20;1;0\n30;2;1\n70;3;0\n");
  CsvSchema s{"y", "age", {}, {"x"}, std::pair{25.0, 65.0}, false, ';'};
  const auto ds = load_csv(in, s);
  CHECK(ds.groups == std::vector<int>{1, 0, 1});
}

TEST_CASE("standardization") {
  auto ds = gen_synthetic_tabular(500, 4, 0.3, 1);
  std::vector<std::size_t> train;
  for (std::size_t i = 0; i < ds.size(); i += 2) train.push_back(i);
  const auto stats = Standardizer::fit(ds, train);
  stats.apply(ds);
  for (Eigen::Index j = 0; j < ds.features.cols(); ++j) {
    double mean = 0, var = 0;
    for (std::size_t r : train) mean += ds.features(static_cast<Eigen::Index>(r), j);
    mean /= static_cast<double>(train.size());
    for (std::size_t r : train) var += std::pow(ds.features(static_cast<Eigen::Index>(r), j) - mean, 2);
    var /= static_cast<double>(train.size());
    CHECK(std::abs(mean) <= 1e-9);
    CHECK(std::abs(var - 1) <= 1e-9);
  }
  Dataset one_hot;
  one_hot.features = Matrix::Identity(2, 2);
  one_hot.numeric_mask = {false, false};
  one_hot.labels = {0, 1};
  one_hot.groups = {0, 1};
  const auto rows = all_rows(one_hot);
  Standardizer::fit(one_hot, rows).apply(one_hot);
  CHECK(one_hot.features == Matrix::Identity(2, 2));
}

TEST_CASE("splits partition the rows") {
  const auto ds = gen_synthetic_tabular(900, 4, 0.5, 2);
  const auto plan = make_splits(ds, 7);
  CHECK(plan.stratified_by_group);
  std::vector<std::size_t> seen;
  for (const auto& f : plan.outer) seen.insert(seen.end(), f.begin(), f.end());
  std::sort(seen.begin(), seen.end());
  CHECK(seen == all_rows(ds));
  for (std::size_t f = 0; f < 3; ++f) {
    std::vector<std::size_t> inner;
    for (const auto& g : plan.inner[f]) inner.insert(inner.end(), g.begin(), g.end());
    std::sort(inner.begin(), inner.end());
    CHECK(inner == plan.outer_train(f));
  }
}

TEST_CASE("balanced n = 90 gives folds of 30") {
  Dataset ds;
  ds.features = Matrix::Zero(90, 1);
  for (int i = 0; i < 90; ++i) ds.labels.push_back(i % 2), ds.groups.push_back((i / 2) % 3);
  const auto plan = make_splits(ds, 1);
  for (const auto& f : plan.outer) CHECK(f.size() == 30);
}

TEST_CASE("folds keep (Y, S) proportions within one sample") {
  const auto ds = gen_synthetic_tabular(1003, 3, 0.4, 3);
  const auto plan = make_splits(ds, 11);
  std::map<std::pair<int, int>, double> global;
  for (std::size_t i = 0; i < ds.size(); ++i) global[{ds.labels[i], ds.groups[i]}] += 1;
  for (const auto& fold : plan.outer) {
    std::map<std::pair<int, int>, double> local;
    for (std::size_t r : fold) local[{ds.labels[r], ds.groups[r]}] += 1;
    for (const auto& [cell, count] : global) {
      const double expected = count * static_cast<double>(fold.size()) / static_cast<double>(ds.size());
      CHECK(std::abs(local[cell] - expected) <= 1.0 + 1e-9);
    }
  }
}

TEST_CASE("split determinism and fallbacks") {
  const auto ds = gen_synthetic_tabular(300, 3, 0.5, 4);
  CHECK(make_splits(ds, 5).outer == make_splits(ds, 5).outer);
  CHECK(make_splits(ds, 5).inner == make_splits(ds, 5).inner);
  CHECK(make_splits(ds, 5).outer != make_splits(ds, 6).outer);

  Dataset rare;
  rare.features = Matrix::Zero(12, 1);
  rare.labels = {0, 1, 0, 1, 0, 1, 0, 1, 0, 1, 0, 1};
  rare.groups = {0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 1};
  const auto plan = make_splits(rare, 1);
  CHECK_FALSE(plan.stratified_by_group);
  CHECK_FALSE(plan.warnings.empty());

  Dataset tiny;
  tiny.features = Matrix::Zero(8, 1);
  tiny.labels = {0, 1, 0, 1, 0, 1, 0, 1};
  tiny.groups = {0, 0, 1, 1, 0, 0, 1, 1};
  CHECK_THROWS_AS(make_splits(tiny, 1), DataError);
}

TEST_CASE("synthetic tabular dependence levels") {
  auto rate = [](const Dataset& ds, int s) {
    double pos = 0, total = 0;
    for (std::size_t i = 0; i < ds.size(); ++i)
      if (ds.groups[i] == s) total += 1, pos += ds.labels[i];
    return pos / total;
  };
  const auto independent = gen_synthetic_tabular(10000, 6, 0.0, 8);
  CHECK(std::abs(rate(independent, 1) - rate(independent, 0)) <= 0.05);
  const auto copy = gen_synthetic_tabular(10000, 6, 1.0, 8);
  CHECK(copy.labels == copy.groups);
  CHECK(copy.metadata.at("generator") == "tabular");
  CHECK_THROWS_AS(gen_synthetic_tabular(1000, 6, 1.2, 8), ConfigError);
  CHECK_THROWS_AS(gen_synthetic_tabular(50, 6, 0.5, 8), ConfigError);
  CHECK_THROWS_AS(gen_synthetic_tabular(1000, 1, 0.5, 8), ConfigError);
}

TEST_CASE("synthetic tabular groups are learnable from the features") {
  const auto ds = gen_synthetic_tabular(10000, 10, 0.5, 9);
  ProbeOptions opts;
  opts.seed = 1;
  const auto report = probe_invariance(ds.features, ds.groups, opts);
  CHECK(report.accuracy >= 0.8);
}

TEST_CASE("synthetic generators are deterministic") {
  CHECK(same_dataset(gen_synthetic_tabular(400, 5, 0.5, 3), gen_synthetic_tabular(400, 5, 0.5, 3)));
  CHECK_FALSE(same_dataset(gen_synthetic_tabular(400, 5, 0.5, 3), gen_synthetic_tabular(400, 5, 0.5, 4)));
  BiasedImageSpec spec;
  spec.train_size = 300;
  spec.test_size = 100;
  spec.seed = 5;
  const auto a = gen_biased_images(spec);
  const auto b = gen_biased_images(spec);
  CHECK(same_dataset(a.first, b.first));
  CHECK(same_dataset(a.second, b.second));
}

TEST_CASE("biased images layout") {
  BiasedImageSpec spec;
  spec.train_size = 200;
  spec.test_size = 50;
  const auto [train, test] = gen_biased_images(spec);
  CHECK(train.size() == 200);
  CHECK(test.size() == 50);
  CHECK(train.dim() == 8 * 8 * 3);
  CHECK(train.features.minCoeff() >= 0.0);
  CHECK(train.features.maxCoeff() <= 1.0);
  CHECK(train.num_classes() == 10);
  const auto palette = default_palette();
  CHECK(palette.size() == 10);
  for (std::size_t i = 0; i < palette.size(); ++i)
    for (std::size_t j = i + 1; j < palette.size(); ++j) CHECK_FALSE(palette[i] == palette[j]);
}

TEST_CASE("biased image spec validation") {
  BiasedImageSpec spec;
  spec.rho = 0.05;
  CHECK_THROWS_AS(spec.validate(), ConfigError);
  spec.rho = 1.01;
  CHECK_THROWS_AS(spec.validate(), ConfigError);
  spec.rho = 0.5;
  spec.palette = default_palette();
  spec.palette[3] = spec.palette[4];
  CHECK_THROWS_AS(spec.validate(), ConfigError);
}

TEST_CASE("background bias levels") {
  BiasedImageSpec spec;
  spec.train_size = 10000;
  spec.test_size = 10000;
  spec.seed = 21;
  auto matched = [](const Dataset& ds) {
    double m = 0;
    for (std::size_t i = 0; i < ds.size(); ++i) m += ds.labels[i] == ds.groups[i];
    return m / static_cast<double>(ds.size());
  };
  SUBCASE("rho = 1") {
    spec.rho = 1.0;
    CHECK(matched(gen_biased_images(spec).first) == 1.0);
  }
  SUBCASE("rho = 0.99") {
    spec.rho = 0.99;
    const auto [train, test] = gen_biased_images(spec);
    CHECK(std::abs(matched(train) - 0.99) <= 0.005);
    CHECK(empirical_mi(test.labels, test.groups) <= 0.01);
  }
  SUBCASE("rho = 1/C") {
    spec.rho = 0.1;
    const auto train = gen_biased_images(spec).first;
    std::vector<std::vector<double>> counts(10, std::vector<double>(10, 0));
    std::vector<double> rows(10, 0), cols(10, 0);
    for (std::size_t i = 0; i < train.size(); ++i) {
      counts[static_cast<std::size_t>(train.labels[i])][static_cast<std::size_t>(train.groups[i])] += 1;
      rows[static_cast<std::size_t>(train.labels[i])] += 1;
      cols[static_cast<std::size_t>(train.groups[i])] += 1;
    }
    double chi2 = 0;
    for (std::size_t c = 0; c < 10; ++c)
      for (std::size_t g = 0; g < 10; ++g) {
        const double e = rows[c] * cols[g] / static_cast<double>(train.size());
        chi2 += (counts[c][g] - e) * (counts[c][g] - e) / e;
      }
    // 81 degrees of freedom; 124.84 is the 0.999 quantile
    CHECK(chi2 < 124.84);
  }
}

TEST_CASE("dataset cache round trip") {
  const auto dir = scratch_dir("roundtrip");
  std::istringstream in("age,colour,score,label,group\n30,red,1.5,yes,a\n40,blue,2.5,no,b\n35,red,,no,a\n");
  const auto csv = load_csv(in, toy_schema(), "toy.csv");
  save_dataset(dir / "toy.bin", csv);
  CHECK(same_dataset(load_dataset(dir / "toy.bin"), csv));

  const auto synth = gen_synthetic_tabular(300, 4, 0.5, 2);
  std::stringstream buffer;
  write_dataset(buffer, synth);
  CHECK(same_dataset(read_dataset(buffer), synth));

  std::string bytes;
  {
    std::stringstream again;
    write_dataset(again, synth);
    bytes = again.str();
  }
  CHECK(bytes.substr(0, 8) == "BFDATSET");
  std::istringstream truncated(bytes.substr(0, bytes.size() / 2));
  CHECK_THROWS_AS(read_dataset(truncated), DataError);
  std::string wrong_version = bytes;
  wrong_version[8] = 9;
  std::istringstream versioned(wrong_version);
  CHECK_THROWS_AS(read_dataset(versioned), DataError);
  std::istringstream garbage("not a dataset at all");
  CHECK_THROWS_AS(read_dataset(garbage), DataError);
  fs::remove_all(dir);
}

TEST_CASE("dataset sidecar") {
  Dataset ds;
  ds.features = Matrix::Zero(3, 1);
  ds.labels = {0, 1, 1};
  ds.groups = {1, 0, 1};
  ds.feature_names = {"x"};
  ds.metadata["source"] = "unit";
  const std::string expected =
      "{\n"
      "  \"schema_version\": 1,\n"
      "  \"n\": 3,\n"
      "  \"d\": 1,\n"
      "  \"classes\": 2,\n"
      "  \"groups\": 2,\n"
      "  \"class_counts\": [\n    1,\n    2\n  ],\n"
      "  \"group_counts\": [\n    1,\n    2\n  ],\n"
      "  \"feature_names\": [\n    \"x\"\n  ],\n"
      "  \"metadata\": {\n    \"source\": \"unit\"\n  }\n"
      "}\n";
  CHECK(dataset_sidecar_json(ds) == expected);
}

TEST_CASE("idx reader") {
  const auto dir = scratch_dir("idx");
  {
    std::ofstream out(dir / "images.idx", std::ios::binary);
    write_be32(out, 0x00000803);
    write_be32(out, 2);
    write_be32(out, 2);
    write_be32(out, 2);
    const unsigned char pixels[8] = {0, 255, 51, 102, 1, 2, 3, 4};
    out.write(reinterpret_cast<const char*>(pixels), 8);
  }
  {
    std::ofstream out(dir / "labels.idx", std::ios::binary);
    write_be32(out, 0x00000801);
    write_be32(out, 2);
    const unsigned char labels[2] = {7, 3};
    out.write(reinterpret_cast<const char*>(labels), 2);
  }
  {
    std::ofstream out(dir / "floats.idx", std::ios::binary);
    write_be32(out, 0x00000D01);
    write_be32(out, 1);
  }
  const auto images = read_idx_images(dir / "images.idx");
  CHECK(images.rows() == 2);
  CHECK(images.cols() == 4);
  CHECK(images(0, 1) == 1.0);
  CHECK(images(0, 2) == doctest::Approx(0.2));
  CHECK(images(1, 3) == doctest::Approx(4.0 / 255.0));
  CHECK(read_idx_labels(dir / "labels.idx") == std::vector<int>{7, 3});
  CHECK_THROWS_AS(read_idx_images(dir / "floats.idx"), DataError);
  CHECK_THROWS_AS(read_idx_images(dir / "missing.idx"), DataError);
  fs::remove_all(dir);
}
