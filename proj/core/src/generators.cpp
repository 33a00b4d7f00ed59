#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>

#include "binfair/data.hpp"
#include "binfair/errors.hpp"
#include "binfair/rng.hpp"

namespace binfair {

namespace {

std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// 8x8 digit glyphs, '#' = foreground.
constexpr std::array<std::array<const char*, 8>, 10> kGlyphs = {{
    {"..####..", ".#....#.", ".#...##.", ".#..#.#.", ".#.#..#.", ".##...#.", ".#....#.", "..####.."},
    {"...##...", "..###...", ".#.##...", "...##...", "...##...", "...##...", "...##...", ".######."},
    {"..####..", ".#....#.", "......#.", ".....#..", "....#...", "...#....", "..#.....", ".######."},
    {"..####..", ".#....#.", "......#.", "...###..", "......#.", "......#.", ".#....#.", "..####.."},
    {"....##..", "...#.#..", "..#..#..", ".#...#..", ".######.", ".....#..", ".....#..", ".....#.."},
    {".######.", ".#......", ".#......", ".#####..", "......#.", "......#.", ".#....#.", "..####.."},
    {"..####..", ".#......", ".#......", ".#####..", ".#....#.", ".#....#.", ".#....#.", "..####.."},
    {".######.", "......#.", ".....#..", "....#...", "...#....", "...#....", "...#....", "...#...."},
    {"..####..", ".#....#.", ".#....#.", "..####..", ".#....#.", ".#....#.", ".#....#.", "..####.."},
    {"..####..", ".#....#.", ".#....#.", "..#####.", "......#.", "......#.", "......#.", "..####.."},
}};

constexpr std::size_t kGlyphSide = 8;
constexpr Rgb kForeground{1.0, 1.0, 1.0};

}  // namespace

Dataset gen_synthetic_tabular(std::size_t n, std::size_t d, double mi_ys, std::uint64_t seed) {
  TabularSpec spec;
  spec.n = n;
  spec.d = d;
  spec.mi_ys = mi_ys;
  spec.seed = seed;
  return gen_synthetic_tabular(spec);
}

Dataset gen_synthetic_tabular(const TabularSpec& spec) {
  if (spec.n < 100) throw ConfigError("synthetic tabular data needs n >= 100");
  if (spec.d < 2) throw ConfigError("synthetic tabular data needs d >= 2");
  if (!(spec.mi_ys >= 0.0 && spec.mi_ys <= 1.0))
    throw ConfigError("dependence level mi_ys must lie in [0, 1]; " + fmt_double(spec.mi_ys) + " is infeasible");

  Rng rng(spec.seed);
  const std::size_t label_dims = (spec.d + 1) / 2;
  Dataset ds;
  ds.features.resize(static_cast<Eigen::Index>(spec.n), static_cast<Eigen::Index>(spec.d));
  ds.labels.resize(spec.n);
  ds.groups.resize(spec.n);
  for (std::size_t i = 0; i < spec.n; ++i) {
    const int s = rng.bernoulli(0.5) ? 1 : 0;
    const double p_y = 0.5 + (s - 0.5) * spec.mi_ys;
    const int y = rng.bernoulli(p_y) ? 1 : 0;
    ds.groups[i] = s;
    ds.labels[i] = y;
    for (std::size_t j = 0; j < spec.d; ++j) {
      const double centre = j < label_dims ? spec.label_signal * (2 * y - 1) : spec.group_signal * (2 * s - 1);
      ds.features(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rng.normal(centre, 1.0);
    }
  }
  for (std::size_t j = 0; j < spec.d; ++j)
    ds.feature_names.push_back((j < label_dims ? "y_feature_" : "s_feature_") + std::to_string(j));
  ds.numeric_mask.assign(spec.d, true);
  ds.metadata = {{"source", "synthetic"},
                 {"generator", "tabular"},
                 {"n", std::to_string(spec.n)},
                 {"d", std::to_string(spec.d)},
                 {"mi_ys", fmt_double(spec.mi_ys)},
                 {"label_signal", fmt_double(spec.label_signal)},
                 {"group_signal", fmt_double(spec.group_signal)},
                 {"seed", std::to_string(spec.seed)},
                 {"classes", "2"},
                 {"groups", "2"}};
  ds.validate();
  return ds;
}

std::vector<Rgb> default_palette() {
  return {{0.90, 0.10, 0.10}, {0.10, 0.70, 0.10}, {0.10, 0.20, 0.90}, {0.90, 0.80, 0.10}, {0.80, 0.10, 0.80},
          {0.10, 0.80, 0.80}, {0.95, 0.50, 0.10}, {0.50, 0.10, 0.70}, {0.50, 0.30, 0.10}, {0.40, 0.40, 0.40}};
}

void BiasedImageSpec::validate() const {
  if (classes < 2 || classes > kGlyphs.size())
    throw ConfigError("classes must be between 2 and " + std::to_string(kGlyphs.size()));
  if (side < kGlyphSide) throw ConfigError("image side must be at least 8");
  const std::size_t colours = palette.empty() ? default_palette().size() : palette.size();
  if (colours < classes) throw ConfigError("palette needs one colour per class");
  const auto& p = palette.empty() ? default_palette() : palette;
  for (std::size_t a = 0; a < classes; ++a)
    for (std::size_t b = a + 1; b < classes; ++b)
      if (p[a] == p[b]) throw ConfigError("palette colours must be pairwise distinct");
  if (!(rho >= 1.0 / static_cast<double>(classes) && rho <= 1.0))
    throw ConfigError("rho must lie in [1/classes, 1]");
  if (train_size == 0 || test_size == 0) throw ConfigError("split sizes must be positive");
  if (!(flip_noise >= 0.0 && flip_noise < 0.5)) throw ConfigError("flip_noise must lie in [0, 0.5)");
  if (!(pixel_noise >= 0.0)) throw ConfigError("pixel_noise must be non-negative");
  if (max_shift < 0) throw ConfigError("max_shift must be non-negative");
}

std::pair<Dataset, Dataset> gen_biased_images(const BiasedImageSpec& spec) {
  spec.validate();
  std::vector<Rgb> palette = spec.palette.empty() ? default_palette() : spec.palette;
  palette.resize(spec.classes);
  const std::size_t side = spec.side;
  const std::size_t d = side * side * 3;
  const auto C = static_cast<std::uint64_t>(spec.classes);
  const auto margin = static_cast<int>((side - kGlyphSide) / 2);

  auto make = [&](std::size_t n, bool biased, std::uint64_t seed) {
    Rng rng(seed);
    Dataset ds;
    ds.features.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
    ds.labels.resize(n);
    ds.groups.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      const auto c = static_cast<int>(rng.below(C));
      int colour;
      if (biased) {
        if (rng.bernoulli(spec.rho)) {
          colour = c;
        } else {
          // uniform over the other colours
          colour = static_cast<int>(rng.below(C - 1));
          if (colour >= c) ++colour;
        }
      } else {
        colour = static_cast<int>(rng.below(C));
      }
      ds.labels[i] = c;
      ds.groups[i] = colour;
      const int span = 2 * spec.max_shift + 1;
      const int dx = static_cast<int>(rng.below(static_cast<std::uint64_t>(span))) - spec.max_shift;
      const int dy = static_cast<int>(rng.below(static_cast<std::uint64_t>(span))) - spec.max_shift;
      const auto& glyph = kGlyphs[static_cast<std::size_t>(c)];
      const Rgb& bg = palette[static_cast<std::size_t>(colour)];
      for (std::size_t y = 0; y < side; ++y) {
        for (std::size_t x = 0; x < side; ++x) {
          const int gy = static_cast<int>(y) - margin - dy;
          const int gx = static_cast<int>(x) - margin - dx;
          bool on = gy >= 0 && gx >= 0 && gy < static_cast<int>(kGlyphSide) && gx < static_cast<int>(kGlyphSide) &&
                    glyph[static_cast<std::size_t>(gy)][gx] == '#';
          if (rng.bernoulli(spec.flip_noise)) on = !on;
          const Rgb& px = on ? kForeground : bg;
          const auto base = static_cast<Eigen::Index>((y * side + x) * 3);
          const double channels[3] = {px.r, px.g, px.b};
          for (int ch = 0; ch < 3; ++ch) {
            double v = channels[ch];
            if (spec.pixel_noise > 0.0) v += rng.normal(0.0, spec.pixel_noise);
            ds.features(static_cast<Eigen::Index>(i), base + ch) = std::clamp(v, 0.0, 1.0);
          }
        }
      }
    }
    ds.feature_names.reserve(d);
    for (std::size_t p = 0; p < side * side; ++p)
      for (const char* ch : {"r", "g", "b"}) ds.feature_names.push_back("px" + std::to_string(p) + "_" + ch);
    ds.numeric_mask.assign(d, false);
    ds.metadata = {{"source", "synthetic"},
                   {"generator", "biased_images"},
                   {"split", biased ? "train" : "test"},
                   {"rho", fmt_double(biased ? spec.rho : 1.0 / static_cast<double>(spec.classes))},
                   {"side", std::to_string(side)},
                   {"flip_noise", fmt_double(spec.flip_noise)},
                   {"pixel_noise", fmt_double(spec.pixel_noise)},
                   {"max_shift", std::to_string(spec.max_shift)},
                   {"seed", std::to_string(spec.seed)},
                   {"classes", std::to_string(spec.classes)},
                   {"groups", std::to_string(spec.classes)}};
    return ds;
  };

  return {make(spec.train_size, true, derive_seed(spec.seed, "images/train")),
          make(spec.test_size, false, derive_seed(spec.seed, "images/test"))};
}

}  // namespace binfair
