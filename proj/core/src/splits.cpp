#include <algorithm>
#include <map>
#include <numeric>

#include "binfair/data.hpp"
#include "binfair/errors.hpp"
#include "binfair/rng.hpp"

namespace binfair {

std::vector<std::vector<std::size_t>> stratified_folds(const Dataset& ds, std::span<const std::size_t> rows,
                                                       std::size_t k, std::uint64_t seed, bool* used_group_strata) {
  if (k < 2) throw ConfigError("need at least two folds");
  if (rows.size() < k) throw DataError("fewer rows than folds");

  auto build_cells = [&](bool with_group) {
    std::map<std::pair<int, int>, std::vector<std::size_t>> cells;
    for (std::size_t r : rows) cells[{ds.labels.at(r), with_group ? ds.groups.at(r) : 0}].push_back(r);
    return cells;
  };
  auto cells = build_cells(true);
  const bool joint = std::all_of(cells.begin(), cells.end(), [k](const auto& c) { return c.second.size() >= k; });
  if (!joint) cells = build_cells(false);
  if (used_group_strata) *used_group_strata = joint;

  // Round-robin dealing with an offset carried across cells keeps every
  // cell's per-fold count within one of |cell| / k and the fold sizes within one.
  Rng rng(seed);
  std::vector<std::vector<std::size_t>> folds(k);
  std::size_t offset = 0;
  for (auto& [key, members] : cells) {
    rng.shuffle(members);
    for (std::size_t j = 0; j < members.size(); ++j) folds[(offset + j) % k].push_back(members[j]);
    offset += members.size();
  }
  for (auto& f : folds) std::sort(f.begin(), f.end());
  return folds;
}

std::vector<std::size_t> SplitPlan::outer_train(std::size_t fold) const {
  std::vector<std::size_t> rows;
  for (std::size_t f = 0; f < outer.size(); ++f)
    if (f != fold) rows.insert(rows.end(), outer[f].begin(), outer[f].end());
  std::sort(rows.begin(), rows.end());
  return rows;
}

SplitPlan make_splits(const Dataset& ds, std::uint64_t seed) {
  constexpr std::size_t k = SplitPlan::kFolds;
  if (ds.size() < k * k) throw DataError("dataset has " + std::to_string(ds.size()) + " rows; at least 9 are needed");
  SplitPlan plan;
  plan.seed = seed;
  std::vector<std::size_t> all(ds.size());
  std::iota(all.begin(), all.end(), std::size_t{0});

  bool joint = true;
  plan.outer = stratified_folds(ds, all, k, derive_seed(seed, "splits/outer"), &joint);
  plan.stratified_by_group = joint;
  if (!joint) plan.warnings.push_back("outer folds: a (Y, S) cell has fewer than 3 rows; stratified on Y only");

  for (std::size_t f = 0; f < k; ++f) {
    const auto train = plan.outer_train(f);
    plan.inner.push_back(stratified_folds(ds, train, k, derive_seed(seed, "splits/inner", f), &joint));
    if (!joint) {
      plan.stratified_by_group = false;
      plan.warnings.push_back("inner folds of outer fold " + std::to_string(f) + ": stratified on Y only");
    }
  }
  return plan;
}

}  // namespace binfair
