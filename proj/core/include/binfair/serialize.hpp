#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>

#include "binfair/nn.hpp"

namespace binfair {

/// Current version of the network file layout (see docs/FORMATS.md).
inline constexpr std::uint32_t kNetworkFormatVersion = 1;

void write_network(std::ostream& out, const Network& net);
Network read_network(std::istream& in);

void save_network(const std::filesystem::path& path, const Network& net);
Network load_network(const std::filesystem::path& path);

}  // namespace binfair
