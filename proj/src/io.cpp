#include "sadepth/io.hpp"

#include <bit>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>
#include <sstream>

namespace sadepth::io {
namespace {

constexpr std::uint64_t kMaxDimension = 1u << 20;

class Cursor {
 public:
  explicit Cursor(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  std::size_t offset() const { return pos_; }
  std::size_t remaining() const { return bytes_.size() - pos_; }

  std::string take(std::size_t n) {
    if (remaining() < n) throw ParseError("truncated header", bytes_.size());
    std::string out(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
    pos_ += n;
    return out;
  }

  // Whitespace and, for Netpbm, '#' comments running to end of line.
  void skip_space(bool comments) {
    const std::size_t start = pos_;
    while (pos_ < bytes_.size()) {
      const auto ch = bytes_[pos_];
      if (std::isspace(ch)) {
        ++pos_;
      } else if (comments && ch == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else {
        break;
      }
    }
    if (pos_ == start) {
      throw ParseError(pos_ == bytes_.size() ? "truncated header" : "expected whitespace", pos_);
    }
  }

  std::uint64_t unsigned_token(const char* what) {
    const std::size_t start = pos_;
    std::uint64_t value = 0;
    while (pos_ < bytes_.size() && std::isdigit(bytes_[pos_])) {
      value = value * 10 + static_cast<std::uint64_t>(bytes_[pos_] - '0');
      if (value > kMaxDimension * 64) throw ParseError(std::string(what) + " too large", start);
      ++pos_;
    }
    if (pos_ == start) {
      throw ParseError(pos_ == bytes_.size() ? "truncated header" : std::string("bad ") + what, pos_);
    }
    return value;
  }

  double real_token(const char* what) {
    const std::size_t start = pos_;
    while (pos_ < bytes_.size() && !std::isspace(bytes_[pos_])) ++pos_;
    if (pos_ == start) throw ParseError(std::string("bad ") + what, start);
    const std::string text(reinterpret_cast<const char*>(bytes_.data() + start), pos_ - start);
    char* end = nullptr;
    const double value = std::strtod(text.c_str(), &end);
    if (end != text.c_str() + text.size() || !std::isfinite(value)) {
      throw ParseError(std::string("bad ") + what, start);
    }
    return value;
  }

  // Exactly one whitespace byte separates the header from the payload.
  void single_space() {
    if (pos_ >= bytes_.size()) throw ParseError("truncated header", pos_);
    if (!std::isspace(bytes_[pos_])) throw ParseError("expected whitespace", pos_);
    ++pos_;
  }

  std::span<const std::uint8_t> payload(std::uint64_t n) {
    if (remaining() < n) throw ParseError("truncated payload", bytes_.size());
    auto out = bytes_.subspan(pos_, static_cast<std::size_t>(n));
    pos_ += static_cast<std::size_t>(n);
    return out;
  }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

void check_dimensions(std::uint64_t w, std::uint64_t h, std::size_t offset) {
  if (w == 0 || h == 0) throw ParseError("empty image", offset);
  if (w > kMaxDimension || h > kMaxDimension) throw ParseError("image too large", offset);
}

float decode_float(const std::uint8_t* p, bool little) {
  std::uint32_t bits = 0;
  for (int i = 0; i < 4; ++i) {
    const int shift = little ? 8 * i : 8 * (3 - i);
    bits |= static_cast<std::uint32_t>(p[i]) << shift;
  }
  return std::bit_cast<float>(bits);
}

void append_float_le(Bytes& out, float value) {
  const auto bits = std::bit_cast<std::uint32_t>(value);
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(bits >> (8 * i)));
}

void append_text(Bytes& out, const std::string& text) { out.insert(out.end(), text.begin(), text.end()); }

Bytes pfm_header(char kind, int width, int height) {
  Bytes out;
  std::ostringstream s;
  s << 'P' << kind << '\n' << width << ' ' << height << '\n' << "-1.0\n";
  append_text(out, s.str());
  return out;
}

struct NetpbmHeader {
  std::uint64_t width = 0;
  std::uint64_t height = 0;
  std::uint64_t maxval = 0;
};

NetpbmHeader read_pgm_header(Cursor& cur) {
  const std::string magic = cur.take(2);
  if (magic != "P5") throw ParseError("bad magic", 0);
  NetpbmHeader h;
  cur.skip_space(true);
  const std::size_t dims_at = cur.offset();
  h.width = cur.unsigned_token("width");
  cur.skip_space(true);
  h.height = cur.unsigned_token("height");
  check_dimensions(h.width, h.height, dims_at);
  cur.skip_space(true);
  h.maxval = cur.unsigned_token("maxval");
  cur.single_space();
  return h;
}

}  // namespace

ParseError::ParseError(const std::string& message, std::size_t offset)
    : std::runtime_error(message + " at byte " + std::to_string(offset)), offset_(offset) {}

std::variant<DepthMap, NormalField> read_pfm(std::span<const std::uint8_t> bytes) {
  Cursor cur(bytes);
  const std::string magic = cur.take(2);
  int channels = 0;
  if (magic == "Pf") {
    channels = 1;
  } else if (magic == "PF") {
    channels = 3;
  } else {
    throw ParseError("bad magic", 0);
  }
  cur.skip_space(false);
  const std::size_t dims_at = cur.offset();
  const std::uint64_t w = cur.unsigned_token("width");
  cur.skip_space(false);
  const std::uint64_t h = cur.unsigned_token("height");
  check_dimensions(w, h, dims_at);
  cur.skip_space(false);
  const std::size_t scale_at = cur.offset();
  const double scale = cur.real_token("scale");
  if (scale == 0.0) throw ParseError("zero scale", scale_at);
  cur.single_space();
  const bool little = scale < 0.0;
  const std::size_t data_at = cur.offset();
  const auto payload = cur.payload(w * h * static_cast<std::uint64_t>(channels) * 4);

  const int width = static_cast<int>(w);
  const int height = static_cast<int>(h);
  auto sample = [&](int file_row, int col, int ch) {
    const std::size_t i = (static_cast<std::size_t>(file_row) * width + col) * channels + ch;
    return static_cast<double>(decode_float(payload.data() + 4 * i, little));
  };

  if (channels == 1) {
    Grid<double> values(height, width);
    for (int fr = 0; fr < height; ++fr) {
      for (int c = 0; c < width; ++c) values(height - 1 - fr, c) = sample(fr, c, 0);
    }
    return DepthMap(std::move(values));
  }

  NormalField field{Grid<Normal>(height, width, Normal{0.0, 0.0, 1.0}), Grid<std::uint8_t>(height, width, 0)};
  for (int fr = 0; fr < height; ++fr) {
    for (int c = 0; c < width; ++c) {
      const Normal n{sample(fr, c, 0), sample(fr, c, 1), sample(fr, c, 2)};
      const int r = height - 1 - fr;
      if (n[0] == 0.0 && n[1] == 0.0 && n[2] == 0.0) continue;
      if (n[2] != 1.0 || !std::isfinite(n[0]) || !std::isfinite(n[1])) {
        const std::size_t at = data_at + 12 * (static_cast<std::size_t>(fr) * width + c);
        throw ParseError("normal sample must be (x, y, 1) or (0, 0, 0)", at);
      }
      field.vectors(r, c) = n;
      field.valid(r, c) = 1;
    }
  }
  return field;
}

DepthMap read_pfm_depth(std::span<const std::uint8_t> bytes) {
  auto result = read_pfm(bytes);
  if (auto* map = std::get_if<DepthMap>(&result)) return std::move(*map);
  throw ParseError("expected a single-channel PFM", 0);
}

Bytes write_pfm(const DepthMap& map) {
  Bytes out = pfm_header('f', map.width(), map.height());
  for (int r = map.height() - 1; r >= 0; --r) {
    for (int c = 0; c < map.width(); ++c) {
      append_float_le(out, map.is_valid(r, c) ? static_cast<float>(map(r, c)) : 0.0f);
    }
  }
  return out;
}

Bytes write_pfm(const NormalField& field) {
  Bytes out = pfm_header('F', field.width(), field.height());
  for (int r = field.height() - 1; r >= 0; --r) {
    for (int c = 0; c < field.width(); ++c) {
      const Normal n = field.is_valid(r, c) ? field(r, c) : Normal{0.0, 0.0, 0.0};
      for (double v : n) append_float_le(out, static_cast<float>(v));
    }
  }
  return out;
}

DepthMap read_pgm16(std::span<const std::uint8_t> bytes, double depth_scale) {
  if (!(depth_scale > 0.0) || !std::isfinite(depth_scale)) {
    throw std::invalid_argument("read_pgm16: depth scale must be positive");
  }
  Cursor cur(bytes);
  const std::size_t start = 0;
  const NetpbmHeader h = read_pgm_header(cur);
  if (h.maxval != 65535) throw ParseError("maxval must be 65535", start);
  const auto payload = cur.payload(h.width * h.height * 2);
  const int width = static_cast<int>(h.width);
  const int height = static_cast<int>(h.height);
  Grid<double> values(height, width);
  Grid<std::uint8_t> valid(height, width, 0);
  for (int r = 0; r < height; ++r) {
    for (int c = 0; c < width; ++c) {
      const std::size_t i = 2 * (static_cast<std::size_t>(r) * width + c);
      const unsigned raw = (static_cast<unsigned>(payload[i]) << 8) | payload[i + 1];
      values(r, c) = raw * depth_scale;
      valid(r, c) = raw != 0 ? 1 : 0;
    }
  }
  return DepthMap(std::move(values), std::move(valid));
}

Bytes write_pgm16(const DepthMap& map, double depth_scale) {
  if (!(depth_scale > 0.0)) throw std::invalid_argument("write_pgm16: depth scale must be positive");
  Bytes out;
  append_text(out, "P5\n" + std::to_string(map.width()) + " " + std::to_string(map.height()) + "\n65535\n");
  for (int r = 0; r < map.height(); ++r) {
    for (int c = 0; c < map.width(); ++c) {
      long raw = 0;
      if (map.is_valid(r, c)) {
        raw = std::lround(map(r, c) / depth_scale);
        if (raw > 65535) throw std::invalid_argument("write_pgm16: depth exceeds 16-bit range");
        raw = std::max(raw, 1L);
      }
      out.push_back(static_cast<std::uint8_t>(raw >> 8));
      out.push_back(static_cast<std::uint8_t>(raw & 0xff));
    }
  }
  return out;
}

Bytes write_pgm8(const Grid<std::uint8_t>& pixels) {
  Bytes out;
  append_text(out, "P5\n" + std::to_string(pixels.width()) + " " + std::to_string(pixels.height()) + "\n255\n");
  const auto data = pixels.data();
  out.insert(out.end(), data.begin(), data.end());
  return out;
}

Grid<std::uint8_t> read_pgm8(std::span<const std::uint8_t> bytes) {
  Cursor cur(bytes);
  const NetpbmHeader h = read_pgm_header(cur);
  if (h.maxval != 255) throw ParseError("maxval must be 255", 0);
  const auto payload = cur.payload(h.width * h.height);
  Grid<std::uint8_t> out(static_cast<int>(h.height), static_cast<int>(h.width));
  std::copy(payload.begin(), payload.end(), out.data().begin());
  return out;
}

Bytes read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return Bytes(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

DepthMap load_depth(const std::filesystem::path& path, double depth_scale) {
  const auto ext = path.extension().string();
  const Bytes bytes = read_file(path);
  if (ext == ".pfm") return read_pfm_depth(bytes);
  if (ext == ".pgm") return read_pgm16(bytes, depth_scale);
  throw std::invalid_argument("unsupported depth file extension: " + path.string());
}

}  // namespace sadepth::io
