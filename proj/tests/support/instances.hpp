#pragma once

// Random enumerable instances shared by the unit and acceptance tests.

#include <algorithm>
#include <random>
#include <vector>

#include "binfair/nn.hpp"
#include "oracles.hpp"

namespace instances {

/// Integer counts c[t][s]; the empirical joint of the expanded rows is
/// exactly c / total.
struct CountInstance {
  std::size_t m = 0, k = 0;
  std::vector<std::vector<int>> counts;
  binfair::Matrix samples;
  std::vector<int> groups;

  oracle::JointTable table() const {
    oracle::JointTable j{m, k, std::vector<std::vector<oracle::real>>(counts.size(), std::vector<oracle::real>(k, 0))};
    oracle::real total = static_cast<oracle::real>(groups.size());
    for (std::size_t t = 0; t < counts.size(); ++t)
      for (std::size_t s = 0; s < k; ++s) j.p[t][s] = counts[t][s] / total;
    return j;
  }
};

inline CountInstance random_counts(std::mt19937_64& gen, std::size_t m, std::size_t k, int max_count = 12) {
  std::uniform_int_distribution<int> c(0, max_count);
  std::uniform_real_distribution<double> u(0, 1);
  CountInstance inst;
  inst.m = m;
  inst.k = k;
  inst.counts.assign(std::size_t{1} << m, std::vector<int>(k, 0));
  for (auto& row : inst.counts)
    for (auto& v : row) v = u(gen) < 0.2 ? 0 : c(gen);
  for (std::size_t s = 0; s < k; ++s) inst.counts[0][s] += 1;  // every group present
  std::size_t n = 0;
  for (const auto& row : inst.counts)
    for (int v : row) n += static_cast<std::size_t>(v);
  inst.samples.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(m));
  Eigen::Index r = 0;
  for (std::size_t t = 0; t < inst.counts.size(); ++t)
    for (std::size_t s = 0; s < k; ++s)
      for (int rep = 0; rep < inst.counts[t][s]; ++rep, ++r) {
        for (std::size_t i = 0; i < m; ++i)
          inst.samples(r, static_cast<Eigen::Index>(i)) = static_cast<double>(oracle::bit(t, i, m));
        inst.groups.push_back(static_cast<int>(s));
      }
  return inst;
}

/// Per-row Bernoulli parameters; the soft joint is the row average of
/// product laws, tabulated independently here.
struct ThetaInstance {
  std::size_t m = 0, k = 0;
  binfair::Matrix theta;
  std::vector<int> groups;

  oracle::JointTable table() const {
    oracle::JointTable j{m, k, std::vector<std::vector<oracle::real>>(std::size_t{1} << m, std::vector<oracle::real>(k, 0))};
    const auto n = static_cast<oracle::real>(theta.rows());
    for (Eigen::Index r = 0; r < theta.rows(); ++r)
      for (std::size_t t = 0; t < j.p.size(); ++t) {
        oracle::real prod = 1;
        for (std::size_t i = 0; i < m; ++i) {
          const oracle::real th = theta(r, static_cast<Eigen::Index>(i));
          prod *= oracle::bit(t, i, m) ? th : 1 - th;
        }
        j.p[t][static_cast<std::size_t>(groups[static_cast<std::size_t>(r)])] += prod / n;
      }
    return j;
  }
};

inline ThetaInstance random_thetas(std::mt19937_64& gen, std::size_t m, std::size_t k, std::size_t rows) {
  std::uniform_real_distribution<double> u(0.02, 0.98);
  ThetaInstance inst;
  inst.m = m;
  inst.k = k;
  inst.theta.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(m));
  for (Eigen::Index r = 0; r < inst.theta.rows(); ++r)
    for (Eigen::Index i = 0; i < inst.theta.cols(); ++i) inst.theta(r, i) = u(gen);
  for (std::size_t r = 0; r < rows; ++r) inst.groups.push_back(static_cast<int>(r % k));
  std::shuffle(inst.groups.begin(), inst.groups.end(), gen);
  return inst;
}

}  // namespace instances
