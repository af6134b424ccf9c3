#include "hsprior/cube_io.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iterator>
#include <map>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "hsprior/error.hpp"

namespace hsprior {

namespace {

constexpr std::string_view kMagic = "ENVI\n";

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

std::size_t parse_count(const std::map<std::string, std::string>& header, const std::string& key) {
  const auto it = header.find(key);
  if (it == header.end()) throw FormatError(key, "missing header key");
  std::size_t value = 0;
  const std::string& text = it->second;
  const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || end != text.data() + text.size()) throw FormatError(key, "not an integer: '" + text + "'");
  return value;
}

double parse_real(const std::string& key, const std::string& text) {
  std::istringstream in(text);
  in.imbue(std::locale::classic());
  double value = 0.0;
  in >> value;
  if (in.fail() || !in.eof() || !std::isfinite(value)) throw FormatError(key, "not a finite number: '" + text + "'");
  return value;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("path", "cannot open '" + path.string() + "'");
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void atomic_write(const std::filesystem::path& path, std::string_view bytes, bool overwrite) {
  if (path.empty()) throw Error("output path is empty");
  if (!overwrite && std::filesystem::exists(path)) {
    throw Error("'" + path.string() + "' exists and overwriting is disabled");
  }
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write '" + tmp.string() + "'");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error("write to '" + tmp.string() + "' failed");
  }
  std::filesystem::rename(tmp, path);
}

void put_le32(std::string& out, float value) {
  const auto bits = std::bit_cast<std::uint32_t>(value);
  for (int shift = 0; shift < 32; shift += 8) out.push_back(static_cast<char>((bits >> shift) & 0xffu));
}

float get_le32(const unsigned char* p) {
  const std::uint32_t bits = std::uint32_t{p[0]} | (std::uint32_t{p[1]} << 8) | (std::uint32_t{p[2]} << 16) |
                             (std::uint32_t{p[3]} << 24);
  return std::bit_cast<float>(bits);
}

}  // namespace

std::string encode_cube(const HyperCube& cube, ValueRange range) {
  if (!(range.max > range.min)) throw Error("value range must have max > min");
  const std::string body = fmt::format(
      "samples = {}\nlines = {}\nbands = {}\ndata type = 4\ninterleave = bsq\nbyte order = 0\n"
      "data min = {}\ndata max = {}\n",
      cube.cols(), cube.rows(), cube.bands(), range.min, range.max);
  // The offset line counts itself; grow the digit count until it is consistent.
  std::size_t offset = kMagic.size() + body.size();
  std::string offset_line;
  for (;;) {
    offset_line = fmt::format("header offset = {}\n", offset);
    const std::size_t total = kMagic.size() + offset_line.size() + body.size();
    if (total == offset) break;
    offset = total;
  }
  std::string out;
  out.reserve(offset + cube.size() * 4);
  out += kMagic;
  out += offset_line;
  out += body;
  const double span = range.max - range.min;
  for (double v : cube.values()) put_le32(out, static_cast<float>(range.min + v * span));
  return out;
}

void write_cube(const std::filesystem::path& path, const HyperCube& cube, ValueRange range, bool overwrite) {
  if (path.empty()) throw Error("output path is empty");
  atomic_write(path, encode_cube(cube, range), overwrite);
}

LoadedCube read_cube(const std::filesystem::path& path) {
  const std::string bytes = read_file(path);
  if (bytes.compare(0, kMagic.size(), kMagic) != 0) throw FormatError("magic", "file does not start with 'ENVI'");

  static const std::set<std::string> known{"samples",    "lines",    "bands",    "header offset", "data type",
                                           "interleave", "byte order", "data min", "data max",     "description",
                                           "file type"};
  std::map<std::string, std::string> header;
  std::size_t pos = kMagic.size();
  std::size_t offset = 0;
  bool have_offset = false;
  while (pos < bytes.size() && (!have_offset || pos < offset)) {
    const std::size_t eol = bytes.find('\n', pos);
    if (eol == std::string::npos) throw FormatError("header", "unterminated header line");
    const std::string_view line(bytes.data() + pos, eol - pos);
    pos = eol + 1;
    if (trim(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw FormatError("header", "line without '=': '" + std::string(line) + "'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (!known.contains(key)) throw FormatError(key, "bad header key");
    if (header.contains(key)) throw FormatError(key, "duplicate header key");
    header[key] = value;
    if (key == "header offset") {
      offset = parse_count(header, key);
      have_offset = true;
    }
  }
  if (!have_offset) throw FormatError("header offset", "missing header key");
  if (pos != offset) throw FormatError("header offset", "does not match the end of the header text");

  const std::size_t cols = parse_count(header, "samples");
  const std::size_t rows = parse_count(header, "lines");
  const std::size_t bands = parse_count(header, "bands");
  if (cols == 0 || rows == 0 || bands == 0) throw FormatError("samples/lines/bands", "extents must be positive");
  if (parse_count(header, "data type") != 4) throw FormatError("data type", "only 4 (32-bit float) is supported");
  if (header.contains("interleave") && header["interleave"] != "bsq") {
    throw FormatError("interleave", "only bsq is supported, got '" + header["interleave"] + "'");
  }
  if (header.contains("byte order") && parse_count(header, "byte order") != 0) {
    throw FormatError("byte order", "only little-endian (0) is supported");
  }
  const std::size_t count = rows * cols * bands;
  if (bytes.size() - offset != count * 4) {
    throw FormatError("payload", "payload length mismatch: header needs " + std::to_string(count * 4) +
                                     " bytes, file has " + std::to_string(bytes.size() - offset));
  }

  std::vector<double> values(count);
  const auto* payload = reinterpret_cast<const unsigned char*>(bytes.data() + offset);
  for (std::size_t i = 0; i < count; ++i) {
    values[i] = get_le32(payload + 4 * i);
    if (!std::isfinite(values[i])) throw FormatError("payload", "non-finite value at element " + std::to_string(i));
  }

  ValueRange range;
  const bool has_min = header.contains("data min"), has_max = header.contains("data max");
  if (has_min != has_max) throw FormatError(has_min ? "data max" : "data min", "must accompany its counterpart");
  if (has_min) {
    range = {parse_real("data min", header["data min"]), parse_real("data max", header["data max"])};
    if (!(range.max > range.min)) throw FormatError("data max", "must exceed data min");
  } else {
    const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
    if (*lo < 0.0 || *hi > 1.0) range = {*lo, *hi > *lo ? *hi : *lo + 1.0};
  }
  const double span = range.max - range.min;
  for (double& v : values) v = std::clamp((v - range.min) / span, 0.0, 1.0);
  return {HyperCube(rows, cols, bands, std::move(values)), range};
}

Mask read_mask(const std::filesystem::path& path) {
  LoadedCube loaded = read_cube(path);
  try {
    return Mask(std::move(loaded.cube));
  } catch (const Error& e) {
    throw FormatError("payload", std::string("not a mask: ") + e.what());
  }
}

void write_mask(const std::filesystem::path& path, const Mask& mask, bool overwrite) {
  write_cube(path, mask.cube(), {}, overwrite);
}

void export_falsecolor(const HyperCube& cube, std::array<std::size_t, 3> bands, const std::filesystem::path& path) {
  for (std::size_t b : bands) {
    if (b >= cube.bands()) {
      throw ShapeError("bands", "band " + std::to_string(b) + " out of range for " + std::to_string(cube.bands()) +
                                    " bands");
    }
  }
  std::string out = fmt::format("P6\n{} {}\n255\n", cube.cols(), cube.rows());
  std::array<std::span<const double>, 3> planes;
  std::array<double, 3> lo{}, span{};
  for (int c = 0; c < 3; ++c) {
    planes[c] = cube.band(bands[c]);
    const auto [mn, mx] = std::minmax_element(planes[c].begin(), planes[c].end());
    lo[c] = *mn;
    span[c] = *mx - *mn;
  }
  for (std::size_t p = 0; p < cube.band_size(); ++p) {
    for (int c = 0; c < 3; ++c) {
      const double level = span[c] > 0.0 ? (planes[c][p] - lo[c]) / span[c] * 255.0 : 128.0;
      out.push_back(static_cast<char>(static_cast<unsigned char>(std::lround(std::clamp(level, 0.0, 255.0)))));
    }
  }
  atomic_write(path, out, true);
}

}  // namespace hsprior
