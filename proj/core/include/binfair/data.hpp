#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "binfair/nn.hpp"

namespace binfair {

/// Features X, class labels Y (0..C-1) and sensitive groups S (0..K-1).
struct Dataset {
  Matrix features;  // n x d
  std::vector<int> labels;
  std::vector<int> groups;
  std::vector<std::string> feature_names;
  /// true for columns that z-scoring applies to (numeric, not one-hot).
  std::vector<bool> numeric_mask;
  /// Provenance: source, generator parameters, load warnings.
  std::map<std::string, std::string> metadata;

  std::size_t size() const { return labels.size(); }
  std::size_t dim() const { return static_cast<std::size_t>(features.cols()); }
  int num_classes() const;
  int num_groups() const;

  /// Throws DataError on inconsistent sizes, non-finite features, or empty
  /// classes/groups in 0..max.
  void validate() const;

  /// Rows in the given order; metadata is copied.
  Dataset subset(std::span<const std::size_t> rows) const;
};

// ---------------------------------------------------------------------------
// CSV ingestion

struct CsvSchema {
  std::string label_column;
  std::string group_column;
  std::vector<std::string> categorical_columns;
  /// Feature columns to keep; empty keeps every non-label, non-group column.
  std::vector<std::string> feature_columns;
  /// When set, the group is 0 for values inside [first, second] and 1
  /// otherwise (e.g. age bands) instead of one code per distinct value.
  std::optional<std::pair<double, double>> group_inside_range;
  /// Standardize numeric columns with statistics of all loaded rows.
  bool standardize = true;
  char delimiter = ',';
};

/// Documented column layouts for the public fairness datasets. The data
/// itself is not shipped.
CsvSchema compas_schema();
CsvSchema adult_schema();
CsvSchema bank_schema();

/// One-hot encodes categoricals, median-imputes missing numerics, drops rows
/// with a missing label or group, maps label/group strings to integer codes
/// (numeric order when all values parse as numbers, lexicographic otherwise).
/// Constant numeric columns are dropped and listed in metadata["warnings"].
Dataset load_csv(const std::filesystem::path& path, const CsvSchema& schema);
Dataset load_csv(std::istream& in, const CsvSchema& schema, const std::string& source = "<stream>");

/// Z-score statistics of the numeric columns fitted on a subset of rows.
class Standardizer {
 public:
  static Standardizer fit(const Dataset& ds, std::span<const std::size_t> rows);
  void apply(Dataset& ds) const;

  const Vector& mean() const { return mean_; }
  const Vector& stddev() const { return stddev_; }

 private:
  Vector mean_;
  Vector stddev_;
  std::vector<bool> mask_;
};

// ---------------------------------------------------------------------------
// Cross-validation splits

/// Three outer folds; for each outer fold, three inner folds partitioning
/// the remaining (outer-training) rows. All index sets refer to dataset rows.
struct SplitPlan {
  static constexpr std::size_t kFolds = 3;

  std::vector<std::vector<std::size_t>> outer;
  std::vector<std::vector<std::vector<std::size_t>>> inner;
  std::uint64_t seed = 0;
  /// false when some (Y, S) cell was too small and only Y was stratified.
  bool stratified_by_group = true;
  std::vector<std::string> warnings;

  /// Rows of every outer fold except `fold`, ascending.
  std::vector<std::size_t> outer_train(std::size_t fold) const;
};

SplitPlan make_splits(const Dataset& ds, std::uint64_t seed);

/// `k` disjoint folds over `rows`, stratified by (Y, S) when every cell has
/// at least k members and by Y alone otherwise.
std::vector<std::vector<std::size_t>> stratified_folds(const Dataset& ds, std::span<const std::size_t> rows,
                                                       std::size_t k, std::uint64_t seed,
                                                       bool* used_group_strata = nullptr);

// ---------------------------------------------------------------------------
// Synthetic generators

struct TabularSpec {
  std::size_t n = 4000;
  std::size_t d = 10;
  /// 0: Y independent of S; 1: Y = S. P(Y=1 | S=s) = 1/2 + (s - 1/2) * mi_ys.
  double mi_ys = 0.5;
  /// Mean shift of the label-driven features, in noise standard deviations.
  double label_signal = 0.2;
  /// Mean shift of the group-driven features.
  double group_signal = 1.2;
  std::uint64_t seed = 0;
};

/// S ~ Bernoulli(1/2), Y | S as above. The first ceil(d/2) features are
/// Gaussian clusters around +-label_signal driven by Y, the rest around
/// +-group_signal driven by S, all with unit noise.
Dataset gen_synthetic_tabular(const TabularSpec& spec);
Dataset gen_synthetic_tabular(std::size_t n, std::size_t d, double mi_ys, std::uint64_t seed);

struct Rgb {
  double r = 0, g = 0, b = 0;
  bool operator==(const Rgb&) const = default;
};

struct BiasedImageSpec {
  std::size_t classes = 10;
  std::size_t side = 8;
  /// Background colours; empty selects the built-in 10-colour palette.
  std::vector<Rgb> palette;
  /// Probability that a training image of class c gets background colour c.
  double rho = 0.99;
  std::size_t train_size = 5000;
  std::size_t test_size = 2000;
  /// Per-pixel probability of flipping glyph/background membership.
  double flip_noise = 0.03;
  /// Standard deviation of additive per-channel noise, clipped to [0, 1].
  double pixel_noise = 0.05;
  /// Maximum glyph translation in pixels along each axis.
  int max_shift = 0;
  std::uint64_t seed = 0;

  void validate() const;
};

std::vector<Rgb> default_palette();

/// Glyph images on coloured backgrounds. In the training split, class c uses
/// background c with probability rho and a uniformly chosen other colour
/// otherwise; in the test split the background is uniform over the palette.
/// Group label = background colour index. Features are side*side*3 channel
/// values in [0, 1], pixel-major (r, g, b per pixel).
std::pair<Dataset, Dataset> gen_biased_images(const BiasedImageSpec& spec);

// ---------------------------------------------------------------------------
// Persistence

/// Current version of the dataset cache layout (see docs/FORMATS.md).
inline constexpr std::uint32_t kDatasetFormatVersion = 1;

void write_dataset(std::ostream& out, const Dataset& ds);
Dataset read_dataset(std::istream& in);
void save_dataset(const std::filesystem::path& path, const Dataset& ds);
Dataset load_dataset(const std::filesystem::path& path);

/// JSON sidecar with n, d, class/group counts, feature names and metadata.
std::string dataset_sidecar_json(const Dataset& ds);

/// IDX (MNIST-style) reader: returns the tensor flattened to rows of the
/// trailing dimensions, scaled to [0, 1] for unsigned-byte data.
Matrix read_idx_images(const std::filesystem::path& path);
std::vector<int> read_idx_labels(const std::filesystem::path& path);

}  // namespace binfair
