#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <string>

#include "hsprior/cube.hpp"

namespace hsprior {

/// Linear map between stored values and the normalized [0, 1] scale:
/// stored = min + normalized * (max - min).
struct ValueRange {
  double min = 0.0;
  double max = 1.0;

  friend bool operator==(const ValueRange&, const ValueRange&) = default;
};

struct LoadedCube {
  HyperCube cube;  ///< normalized to [0, 1]
  ValueRange range;
};

/// Reads a single-file cube: an ENVI-style text header ("ENVI" magic line,
/// key = value lines, `header offset` locating the payload) followed by a
/// little-endian float32 band-sequential payload.
///
/// Values are normalized with the header's `data min`/`data max` when present.
/// Otherwise data already inside [0, 1] is kept as is and anything else is
/// min-max stretched. Throws FormatError naming the offending field.
LoadedCube read_cube(const std::filesystem::path& path);

/// Writes `cube` (normalized values) mapped back through `range`. Output
/// bytes depend only on the arguments. The file is written to a temporary
/// sibling and renamed into place. Throws Error if `path` is empty, or exists
/// and `overwrite` is false.
void write_cube(const std::filesystem::path& path, const HyperCube& cube, ValueRange range = {},
                bool overwrite = true);

/// The exact bytes write_cube produces.
std::string encode_cube(const HyperCube& cube, ValueRange range = {});

/// Mask container: a cube file whose values are exactly 0 or 1.
Mask read_mask(const std::filesystem::path& path);
void write_mask(const std::filesystem::path& path, const Mask& mask, bool overwrite = true);

/// Binary PPM (P6) with the three given bands as R, G, B, each min-max
/// stretched to 0..255; a constant band maps to mid-gray 128.
void export_falsecolor(const HyperCube& cube, std::array<std::size_t, 3> bands, const std::filesystem::path& path);

}  // namespace hsprior
