#include <fstream>

#include <json.hpp>

#include "binary_io.hpp"
#include "binfair/data.hpp"
#include "binfair/errors.hpp"

namespace binfair {

namespace {

constexpr char kMagic[9] = "BFDATSET";

std::uint32_t read_be32(std::istream& in) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4)) throw DataError("truncated IDX header");
  return (std::uint32_t{b[0]} << 24) | (std::uint32_t{b[1]} << 16) | (std::uint32_t{b[2]} << 8) | b[3];
}

struct IdxHeader {
  std::uint8_t type = 0;
  std::vector<std::uint32_t> dims;
};

IdxHeader read_idx_header(std::istream& in) {
  unsigned char magic[4];
  if (!in.read(reinterpret_cast<char*>(magic), 4) || magic[0] != 0 || magic[1] != 0)
    throw DataError("not an IDX file");
  IdxHeader h;
  h.type = magic[2];
  if (h.type != 0x08) throw DataError("only unsigned-byte IDX files are supported");
  for (int i = 0; i < magic[3]; ++i) h.dims.push_back(read_be32(in));
  if (h.dims.empty()) throw DataError("IDX file has no dimensions");
  return h;
}

}  // namespace

void write_dataset(std::ostream& out, const Dataset& ds) {
  ds.validate();
  detail::write_magic(out, kMagic);
  detail::write_le<std::uint32_t>(out, kDatasetFormatVersion);
  detail::write_le<std::uint64_t>(out, ds.size());
  detail::write_le<std::uint64_t>(out, ds.dim());
  detail::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(ds.feature_names.size()));
  for (const auto& name : ds.feature_names) detail::write_string(out, name);
  detail::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(ds.numeric_mask.size()));
  for (bool b : ds.numeric_mask) detail::write_le<std::uint8_t>(out, b ? 1 : 0);
  detail::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(ds.metadata.size()));
  for (const auto& [k, v] : ds.metadata) {
    detail::write_string(out, k);
    detail::write_string(out, v);
  }
  for (Eigen::Index r = 0; r < ds.features.rows(); ++r)
    for (Eigen::Index c = 0; c < ds.features.cols(); ++c) detail::write_le<double>(out, ds.features(r, c));
  for (int y : ds.labels) detail::write_le<std::int32_t>(out, y);
  for (int s : ds.groups) detail::write_le<std::int32_t>(out, s);
  if (!out) throw DataError("failed writing dataset");
}

Dataset read_dataset(std::istream& in) {
  detail::expect_magic(in, kMagic, "dataset");
  const auto version = detail::read_le<std::uint32_t>(in);
  if (version != kDatasetFormatVersion) throw DataError("unsupported dataset format version " + std::to_string(version));
  const auto n = detail::read_le<std::uint64_t>(in);
  const auto d = detail::read_le<std::uint64_t>(in);
  if (n == 0 || d == 0 || n > (1ull << 32) || d > (1ull << 24)) throw DataError("implausible dataset shape");
  Dataset ds;
  const auto names = detail::read_le<std::uint32_t>(in);
  if (names != 0 && names != d) throw DataError("feature name count mismatch");
  for (std::uint32_t i = 0; i < names; ++i) ds.feature_names.push_back(detail::read_string(in));
  const auto mask = detail::read_le<std::uint32_t>(in);
  if (mask != 0 && mask != d) throw DataError("numeric mask size mismatch");
  for (std::uint32_t i = 0; i < mask; ++i) ds.numeric_mask.push_back(detail::read_le<std::uint8_t>(in) != 0);
  const auto meta = detail::read_le<std::uint32_t>(in);
  for (std::uint32_t i = 0; i < meta; ++i) {
    auto k = detail::read_string(in);
    ds.metadata[std::move(k)] = detail::read_string(in);
  }
  ds.features.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  for (Eigen::Index r = 0; r < ds.features.rows(); ++r)
    for (Eigen::Index c = 0; c < ds.features.cols(); ++c) ds.features(r, c) = detail::read_le<double>(in);
  ds.labels.resize(n);
  ds.groups.resize(n);
  for (auto& y : ds.labels) y = detail::read_le<std::int32_t>(in);
  for (auto& s : ds.groups) s = detail::read_le<std::int32_t>(in);
  ds.validate();
  return ds;
}

void save_dataset(const std::filesystem::path& path, const Dataset& ds) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot open " + path.string() + " for writing");
  write_dataset(out, ds);
}

Dataset load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  return read_dataset(in);
}

std::string dataset_sidecar_json(const Dataset& ds) {
  nlohmann::ordered_json j;
  j["schema_version"] = kDatasetFormatVersion;
  j["n"] = ds.size();
  j["d"] = ds.dim();
  j["classes"] = ds.num_classes();
  j["groups"] = ds.num_groups();
  std::vector<std::size_t> class_counts(static_cast<std::size_t>(ds.num_classes()), 0);
  std::vector<std::size_t> group_counts(static_cast<std::size_t>(ds.num_groups()), 0);
  for (int y : ds.labels) ++class_counts[static_cast<std::size_t>(y)];
  for (int s : ds.groups) ++group_counts[static_cast<std::size_t>(s)];
  j["class_counts"] = class_counts;
  j["group_counts"] = group_counts;
  j["feature_names"] = ds.feature_names;
  j["metadata"] = ds.metadata;
  return j.dump(2) + "\n";
}

Matrix read_idx_images(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  const auto h = read_idx_header(in);
  std::size_t cols = 1;
  for (std::size_t i = 1; i < h.dims.size(); ++i) cols *= h.dims[i];
  Matrix out(static_cast<Eigen::Index>(h.dims[0]), static_cast<Eigen::Index>(cols));
  std::vector<unsigned char> buf(cols);
  for (Eigen::Index r = 0; r < out.rows(); ++r) {
    if (!in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(cols)))
      throw DataError("truncated IDX payload in " + path.string());
    for (std::size_t c = 0; c < cols; ++c) out(r, static_cast<Eigen::Index>(c)) = buf[c] / 255.0;
  }
  return out;
}

std::vector<int> read_idx_labels(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  const auto h = read_idx_header(in);
  if (h.dims.size() != 1) throw DataError("IDX label file must be one-dimensional");
  std::vector<int> labels(h.dims[0]);
  for (auto& y : labels) {
    char c;
    if (!in.get(c)) throw DataError("truncated IDX labels in " + path.string());
    y = static_cast<unsigned char>(c);
  }
  return labels;
}

}  // namespace binfair
