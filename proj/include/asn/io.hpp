#pragma once

// File formats.
//
// Raster ("ASNR v1"): the four magic bytes "ASNR", then little-endian u32
// version (1), width, height, channels and dtype tag (1 = float32,
// 2 = uint8 mask, 3 = int32 segments), then the row-major, channel-interleaved
// little-endian payload. Depth maps are stored as 1-channel float32 with an
// optional companion uint8 mask; normal maps as 3-channel float32 with
// invalid pixels written as zero vectors; guidance maps as C-channel float32.
//
// Intrinsics: UTF-8 text with one "key = value" line for each of fx, fy, cx,
// cy, width and height. Blank lines and lines starting with '#' are ignored.
//
// Results: CSV with a header row, floating point printed with 9 significant
// digits. Writers go through a temporary file that is renamed into place.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

#include "asn/core_types.hpp"

namespace asn {

static_assert(std::endian::native == std::endian::little, "ASNR I/O assumes a little-endian host");

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& message, std::size_t offset)
      : std::runtime_error(message + " (at byte " + std::to_string(offset) + ")"), message_(message), offset_(offset) {}
  [[nodiscard]] const std::string& message() const { return message_; }
  [[nodiscard]] std::size_t offset() const { return offset_; }

 private:
  std::string message_;
  std::size_t offset_;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class DType : std::uint32_t { float32 = 1, uint8 = 2, int32 = 3 };

struct RasterFile {
  std::uint32_t width = 0;
  std::uint32_t height = 0;
  std::uint32_t channels = 1;
  std::variant<std::vector<float>, std::vector<std::uint8_t>, std::vector<std::int32_t>> payload;

  [[nodiscard]] DType dtype() const { return static_cast<DType>(payload.index() + 1); }
  [[nodiscard]] std::size_t element_count() const {
    return static_cast<std::size_t>(width) * height * channels;
  }

  friend bool operator==(const RasterFile&, const RasterFile&) = default;
};

inline constexpr std::uint32_t kRasterVersion = 1;
inline constexpr std::size_t kRasterHeaderBytes = 24;

namespace detail {

inline std::size_t dtype_size(DType t) {
  switch (t) {
    case DType::float32:
    case DType::int32:
      return 4;
    case DType::uint8:
      return 1;
  }
  return 0;
}

inline void append_u32(std::string& out, std::uint32_t x) {
  for (int b = 0; b < 4; ++b) out.push_back(static_cast<char>((x >> (8 * b)) & 0xffu));
}

inline std::uint32_t read_u32(const std::string& in, std::size_t offset) {
  std::uint32_t x = 0;
  for (int b = 0; b < 4; ++b) x |= static_cast<std::uint32_t>(static_cast<unsigned char>(in[offset + b])) << (8 * b);
  return x;
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace detail

// Writes `bytes` to a sibling temporary file, then renames it over `path`.
inline void write_file_atomic(const std::filesystem::path& path, const std::string& bytes) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("write failed: " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("rename to " + path.string() + " failed: " + ec.message());
}

inline std::string encode_raster(const RasterFile& r) {
  if (r.channels == 0) throw ContractError("raster: zero channels");
  std::string out = "ASNR";
  detail::append_u32(out, kRasterVersion);
  detail::append_u32(out, r.width);
  detail::append_u32(out, r.height);
  detail::append_u32(out, r.channels);
  detail::append_u32(out, static_cast<std::uint32_t>(r.dtype()));
  std::visit(
      [&](const auto& data) {
        if (data.size() != r.element_count()) throw ContractError("raster: payload length disagrees with header");
        const auto* bytes = reinterpret_cast<const char*>(data.data());
        out.append(bytes, data.size() * sizeof(data[0]));
      },
      r.payload);
  return out;
}

inline RasterFile decode_raster(const std::string& bytes) {
  if (bytes.size() < kRasterHeaderBytes) throw ParseError("truncated raster header", bytes.size());
  if (bytes.compare(0, 4, "ASNR") != 0) throw ParseError("bad magic", 0);
  const auto version = detail::read_u32(bytes, 4);
  if (version != kRasterVersion) throw ParseError("unsupported version " + std::to_string(version), 4);
  RasterFile r;
  r.width = detail::read_u32(bytes, 8);
  r.height = detail::read_u32(bytes, 12);
  r.channels = detail::read_u32(bytes, 16);
  if (r.channels == 0) throw ParseError("zero channels", 16);
  const auto tag = detail::read_u32(bytes, 20);
  if (tag < 1 || tag > 3) throw ParseError("unknown dtype tag " + std::to_string(tag), 20);
  const auto dtype = static_cast<DType>(tag);

  // Three u32 factors times the element size fit in 128 bits.
  const unsigned __int128 elements = static_cast<unsigned __int128>(r.width) * r.height * r.channels;
  const unsigned __int128 payload = elements * detail::dtype_size(dtype);
  const auto available = bytes.size() - kRasterHeaderBytes;
  if (payload > available) throw ParseError("payload shorter than declared dimensions", bytes.size());
  if (payload < available) {
    throw ParseError("trailing bytes after payload", kRasterHeaderBytes + static_cast<std::size_t>(payload));
  }
  const auto n = static_cast<std::size_t>(elements);
  const char* src = bytes.data() + kRasterHeaderBytes;
  switch (dtype) {
    case DType::float32: {
      std::vector<float> v(n);
      std::memcpy(v.data(), src, n * 4);
      r.payload = std::move(v);
      break;
    }
    case DType::uint8: {
      std::vector<std::uint8_t> v(n);
      std::memcpy(v.data(), src, n);
      r.payload = std::move(v);
      break;
    }
    case DType::int32: {
      std::vector<std::int32_t> v(n);
      std::memcpy(v.data(), src, n * 4);
      r.payload = std::move(v);
      break;
    }
  }
  return r;
}

inline void write_raster(const RasterFile& r, const std::filesystem::path& path) {
  write_file_atomic(path, encode_raster(r));
}

inline RasterFile read_raster(const std::filesystem::path& path) {
  const std::string bytes = detail::read_file(path);
  try {
    return decode_raster(bytes);
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.message(), e.offset());
  }
}

// --- typed conversions ------------------------------------------------------

template <typename T>
const std::vector<T>& payload_as(const RasterFile& r, const char* what) {
  if (!std::holds_alternative<std::vector<T>>(r.payload)) {
    throw ParseError(std::string(what) + ": unexpected dtype", 20);
  }
  return std::get<std::vector<T>>(r.payload);
}

inline RasterFile to_raster(const DepthMap& d) {
  std::vector<float> v(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) v[i] = d.mask()[i] ? static_cast<float>(d.values()[i]) : 0.0f;
  return {static_cast<std::uint32_t>(d.width()), static_cast<std::uint32_t>(d.height()), 1, std::move(v)};
}

inline RasterFile mask_raster(std::span<const std::uint8_t> mask, int width, int height) {
  return {static_cast<std::uint32_t>(width), static_cast<std::uint32_t>(height), 1,
          std::vector<std::uint8_t>(mask.begin(), mask.end())};
}

// Without a mask, positive finite depths are valid.
inline DepthMap depth_from_raster(const RasterFile& r, const RasterFile* mask = nullptr) {
  if (r.channels != 1) throw ParseError("depth raster must have one channel", 16);
  const auto& src = payload_as<float>(r, "depth");
  std::vector<double> values(src.begin(), src.end());
  std::vector<std::uint8_t> valid(values.size());
  if (mask) {
    if (mask->width != r.width || mask->height != r.height || mask->channels != 1) {
      throw ParseError("mask raster dimensions disagree with depth", 8);
    }
    const auto& m = payload_as<std::uint8_t>(*mask, "mask");
    for (std::size_t i = 0; i < valid.size(); ++i) valid[i] = m[i] != 0;
  } else {
    for (std::size_t i = 0; i < valid.size(); ++i) valid[i] = std::isfinite(values[i]) && values[i] > 0.0;
  }
  return {static_cast<int>(r.width), static_cast<int>(r.height), std::move(values), std::move(valid)};
}

inline RasterFile to_raster(const NormalMap& n) {
  std::vector<float> v(n.size() * 3);
  for (std::size_t i = 0; i < n.size(); ++i) {
    for (int c = 0; c < 3; ++c) v[3 * i + c] = n.mask()[i] ? static_cast<float>(n.values()[i][c]) : 0.0f;
  }
  return {static_cast<std::uint32_t>(n.width()), static_cast<std::uint32_t>(n.height()), 3, std::move(v)};
}

// Zero vectors mark invalid pixels. Stored vectors are renormalized in double
// precision, which only moves them by float rounding.
inline NormalMap normals_from_raster(const RasterFile& r) {
  if (r.channels != 3) throw ParseError("normal raster must have three channels", 16);
  const auto& src = payload_as<float>(r, "normals");
  const std::size_t n = src.size() / 3;
  std::vector<Vec3> normals(n, Vec3::Zero());
  std::vector<std::uint8_t> valid(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    const Vec3 x(src[3 * i], src[3 * i + 1], src[3 * i + 2]);
    const double len = x.norm();
    if (!(len > 0.0) || !std::isfinite(len)) continue;
    normals[i] = x / len;
    valid[i] = 1;
  }
  return {static_cast<int>(r.width), static_cast<int>(r.height), std::move(normals), std::move(valid)};
}

inline RasterFile to_raster(const GuidanceFeatureMap& f) {
  std::vector<float> v(f.data().begin(), f.data().end());
  return {static_cast<std::uint32_t>(f.width()), static_cast<std::uint32_t>(f.height()),
          static_cast<std::uint32_t>(f.channels()), std::move(v)};
}

// Features are multiplied by `scale` on load; the kernel uses unnormalized
// feature distances, so externally produced maps may need rescaling.
inline GuidanceFeatureMap guidance_from_raster(const RasterFile& r, double scale = 1.0) {
  const auto& src = payload_as<float>(r, "guidance");
  std::vector<double> v(src.size());
  for (std::size_t i = 0; i < src.size(); ++i) v[i] = scale * src[i];
  return {static_cast<int>(r.width), static_cast<int>(r.height), static_cast<int>(r.channels), std::move(v)};
}

inline RasterFile to_raster(const SegmentMap& s) {
  return {static_cast<std::uint32_t>(s.width()), static_cast<std::uint32_t>(s.height()), 1,
          std::vector<std::int32_t>(s.labels().begin(), s.labels().end())};
}

inline SegmentMap segments_from_raster(const RasterFile& r) {
  if (r.channels != 1) throw ParseError("segment raster must have one channel", 16);
  const auto& src = payload_as<std::int32_t>(r, "segments");
  return {static_cast<int>(r.width), static_cast<int>(r.height), src};
}

// --- intrinsics ---------------------------------------------------------------

inline std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.9g", x);
  return buf;
}

inline std::string encode_intrinsics(const Intrinsics& k) {
  std::ostringstream out;
  char buf[64];
  for (const auto& [key, value] : {std::pair{"fx", k.fx}, {"fy", k.fy}, {"cx", k.cx}, {"cy", k.cy}}) {
    std::snprintf(buf, sizeof buf, "%s = %.17g\n", key, value);
    out << buf;
  }
  out << "width = " << k.width << "\nheight = " << k.height << "\n";
  return out.str();
}

inline Intrinsics decode_intrinsics(const std::string& text) {
  std::map<std::string, std::string> fields;
  std::istringstream in(text);
  std::string line;
  std::size_t offset = 0;
  const auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    const auto e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
  };
  while (std::getline(in, line)) {
    const std::size_t line_offset = offset;
    offset += line.size() + 1;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) throw ParseError("intrinsics: expected 'key = value'", line_offset);
    const std::string key = trim(t.substr(0, eq));
    const std::string value = trim(t.substr(eq + 1));
    static const char* const kKeys[] = {"fx", "fy", "cx", "cy", "width", "height"};
    if (std::find(std::begin(kKeys), std::end(kKeys), key) == std::end(kKeys)) {
      throw ParseError("intrinsics: unknown key '" + key + "'", line_offset);
    }
    if (fields.count(key)) throw ParseError("intrinsics: duplicate key '" + key + "'", line_offset);
    fields[key] = value;
  }
  const auto number = [&](const char* key) {
    const auto it = fields.find(key);
    if (it == fields.end()) throw ParseError(std::string("intrinsics: missing key '") + key + "'", text.size());
    std::size_t used = 0;
    double x = 0.0;
    try {
      x = std::stod(it->second, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != it->second.size()) {
      throw ParseError(std::string("intrinsics: bad number for '") + key + "'", 0);
    }
    return x;
  };
  Intrinsics k;
  k.fx = number("fx");
  k.fy = number("fy");
  k.cx = number("cx");
  k.cy = number("cy");
  const double w = number("width");
  const double h = number("height");
  if (w != std::floor(w) || h != std::floor(h) || w < 1 || h < 1 || w > 1 << 30 || h > 1 << 30) {
    throw ParseError("intrinsics: width/height must be positive integers", 0);
  }
  k.width = static_cast<int>(w);
  k.height = static_cast<int>(h);
  try {
    k.validate();
  } catch (const ContractError& e) {
    throw ParseError(e.what(), 0);
  }
  return k;
}

inline Intrinsics read_intrinsics(const std::filesystem::path& path) {
  try {
    return decode_intrinsics(detail::read_file(path));
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.message(), e.offset());
  }
}

inline void write_intrinsics(const Intrinsics& k, const std::filesystem::path& path) {
  write_file_atomic(path, encode_intrinsics(k));
}

// --- CSV --------------------------------------------------------------------

using CsvCell = std::variant<std::string, double, long long>;
using CsvRow = std::vector<CsvCell>;

struct CsvTable {
  // Written as "# ..." lines ahead of the header.
  std::vector<std::string> comments;
  std::vector<std::string> header;
  std::vector<CsvRow> rows;
};

inline std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

inline std::string encode_csv(const CsvTable& table) {
  std::string out;
  for (const auto& c : table.comments) out += "# " + c + "\n";
  for (std::size_t i = 0; i < table.header.size(); ++i) {
    out += (i ? "," : "") + csv_escape(table.header[i]);
  }
  out += "\n";
  for (const auto& row : table.rows) {
    if (row.size() != table.header.size()) throw ContractError("csv: row width differs from header");
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out += ",";
      std::visit(
          [&](const auto& x) {
            using T = std::decay_t<decltype(x)>;
            if constexpr (std::is_same_v<T, std::string>) {
              out += csv_escape(x);
            } else if constexpr (std::is_same_v<T, double>) {
              out += format_double(x);
            } else {
              out += std::to_string(x);
            }
          },
          row[i]);
    }
    out += "\n";
  }
  return out;
}

inline void write_csv(const CsvTable& table, const std::filesystem::path& path) {
  write_file_atomic(path, encode_csv(table));
}

// 64-bit FNV-1a, hex encoded; identifies an experiment configuration.
inline std::string config_hash(const std::string& config) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : config) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace asn
