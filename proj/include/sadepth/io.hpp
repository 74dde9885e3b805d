#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "sadepth/core.hpp"

// Readers and writers for depth maps:
//   PFM    - 32-bit float, rows stored bottom-to-top, sign of the scale
//            field selects endianness (negative = little-endian).
//   PGM-16 - binary Netpbm "P5" with maxval 65535, big-endian samples.
namespace sadepth::io {

using Bytes = std::vector<std::uint8_t>;

/// Malformed input. `offset` is the byte position where parsing failed.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& message, std::size_t offset);
  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

/// "Pf" -> DepthMap (validity = finite and > 0); "PF" -> NormalField, where
/// (0, 0, 0) marks an invalid normal and any other sample must have z == 1.
std::variant<DepthMap, NormalField> read_pfm(std::span<const std::uint8_t> bytes);

/// read_pfm that insists on a single-channel file.
DepthMap read_pfm_depth(std::span<const std::uint8_t> bytes);

/// Header "Pf\n<w> <h>\n-1.0\n", little-endian payload, invalid pixels as 0.
Bytes write_pfm(const DepthMap& map);

/// Header "PF\n<w> <h>\n-1.0\n"; invalid normals as (0, 0, 0).
Bytes write_pfm(const NormalField& field);

inline constexpr double kDefaultDepthScale = 0.001;

/// Depth = raw * depth_scale meters; raw 0 is a sensor hole.
DepthMap read_pgm16(std::span<const std::uint8_t> bytes, double depth_scale = kDefaultDepthScale);

/// Inverse of read_pgm16 (values rounded to the nearest unit, invalid -> 0).
Bytes write_pgm16(const DepthMap& map, double depth_scale = kDefaultDepthScale);

/// Binary 8-bit PGM.
Bytes write_pgm8(const Grid<std::uint8_t>& pixels);

/// Decodes an 8-bit "P5" file (maxval 255).
Grid<std::uint8_t> read_pgm8(std::span<const std::uint8_t> bytes);

Bytes read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

/// Dispatches on extension: ".pfm" -> read_pfm_depth, ".pgm" -> read_pgm16.
DepthMap load_depth(const std::filesystem::path& path, double depth_scale = kDefaultDepthScale);

}  // namespace sadepth::io
