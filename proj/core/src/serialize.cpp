#include "binfair/serialize.hpp"

#include <fstream>
#include <string>

#include "binary_io.hpp"
#include "binfair/errors.hpp"

namespace binfair {

namespace {

constexpr char kMagic[9] = "BFNETWRK";

enum class LayerKind : std::uint8_t { dense = 0, binary = 1 };

std::uint8_t activation_code(Activation a) { return static_cast<std::uint8_t>(a); }
std::uint8_t mode_code(BinaryMode m) { return static_cast<std::uint8_t>(m); }

void write_params(std::ostream& out, const Matrix& w, const Vector& b) {
  for (Eigen::Index r = 0; r < w.rows(); ++r)
    for (Eigen::Index c = 0; c < w.cols(); ++c) detail::write_le<double>(out, w(r, c));
  for (Eigen::Index i = 0; i < b.size(); ++i) detail::write_le<double>(out, b(i));
}

void read_params(std::istream& in, Matrix& w, Vector& b) {
  for (Eigen::Index r = 0; r < w.rows(); ++r)
    for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = detail::read_le<double>(in);
  for (Eigen::Index i = 0; i < b.size(); ++i) b(i) = detail::read_le<double>(in);
}

}  // namespace

void write_network(std::ostream& out, const Network& net) {
  detail::write_magic(out, kMagic);
  detail::write_le<std::uint32_t>(out, kNetworkFormatVersion);
  detail::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(net.size()));
  for (const auto& layer : net.layers()) {
    if (const auto* d = std::get_if<DenseLayer>(&layer)) {
      detail::write_le<std::uint8_t>(out, static_cast<std::uint8_t>(LayerKind::dense));
      detail::write_le<std::uint8_t>(out, activation_code(d->activation));
      detail::write_le<std::uint8_t>(out, 1);
      detail::write_le<std::uint8_t>(out, 0);
    } else {
      const auto& s = std::get<StochasticBinaryLayer>(layer);
      detail::write_le<std::uint8_t>(out, static_cast<std::uint8_t>(LayerKind::binary));
      detail::write_le<std::uint8_t>(out, mode_code(s.mode));
      detail::write_le<std::uint8_t>(out, s.include_bias ? 1 : 0);
      detail::write_le<std::uint8_t>(out, 0);
    }
    const auto [in_dim, out_dim] = std::visit([](const auto& l) { return std::pair{l.in_dim(), l.out_dim()}; }, layer);
    detail::write_le<std::uint64_t>(out, in_dim);
    detail::write_le<std::uint64_t>(out, out_dim);
  }
  detail::write_le<std::uint64_t>(out, net.parameter_count());
  for (std::size_t k = 0; k < net.size(); ++k) write_params(out, net.weights(k), net.bias(k));
  if (!out) throw DataError("failed writing network");
}

Network read_network(std::istream& in) {
  detail::expect_magic(in, kMagic, "network");
  const auto version = detail::read_le<std::uint32_t>(in);
  if (version != kNetworkFormatVersion)
    throw DataError("unsupported network format version " + std::to_string(version));
  const auto count = detail::read_le<std::uint32_t>(in);
  if (count == 0 || count > 4096) throw DataError("implausible layer count " + std::to_string(count));

  std::vector<Layer> layers;
  layers.reserve(count);
  for (std::uint32_t k = 0; k < count; ++k) {
    const auto kind = detail::read_le<std::uint8_t>(in);
    const auto code = detail::read_le<std::uint8_t>(in);
    const auto has_bias = detail::read_le<std::uint8_t>(in);
    (void)detail::read_le<std::uint8_t>(in);
    const auto in_dim = detail::read_le<std::uint64_t>(in);
    const auto out_dim = detail::read_le<std::uint64_t>(in);
    if (in_dim == 0 || out_dim == 0 || in_dim > (1u << 24) || out_dim > (1u << 24))
      throw DataError("implausible layer shape in network file");
    const auto rows = static_cast<Eigen::Index>(out_dim);
    const auto cols = static_cast<Eigen::Index>(in_dim);
    if (kind == static_cast<std::uint8_t>(LayerKind::dense)) {
      if (code > activation_code(Activation::softmax)) throw DataError("bad activation code");
      layers.emplace_back(DenseLayer{Matrix(rows, cols), Vector(rows), static_cast<Activation>(code)});
    } else if (kind == static_cast<std::uint8_t>(LayerKind::binary)) {
      if (code > mode_code(BinaryMode::expected)) throw DataError("bad binary mode code");
      StochasticBinaryLayer s;
      s.weights = Matrix(rows, cols);
      s.include_bias = has_bias != 0;
      if (s.include_bias) s.bias = Vector(rows);
      s.mode = static_cast<BinaryMode>(code);
      layers.emplace_back(std::move(s));
    } else {
      throw DataError("unknown layer kind " + std::to_string(kind));
    }
  }
  const auto params = detail::read_le<std::uint64_t>(in);
  std::size_t expected = 0;
  for (auto& layer : layers)
    std::visit([&](auto& l) { expected += static_cast<std::size_t>(l.weights.size() + l.bias.size()); }, layer);
  if (params != expected) throw DataError("parameter count does not match the layer table");
  for (auto& layer : layers) std::visit([&](auto& l) { read_params(in, l.weights, l.bias); }, layer);
  return Network(std::move(layers));
}

void save_network(const std::filesystem::path& path, const Network& net) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot open " + path.string() + " for writing");
  write_network(out, net);
}

Network load_network(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  return read_network(in);
}

}  // namespace binfair
