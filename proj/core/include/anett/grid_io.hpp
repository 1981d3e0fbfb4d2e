#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>

#include "anett/grid.hpp"

namespace anett {

// .grd files: a text header followed by a raw little-endian float32 payload.
//
//   ANETT-GRID 1
//   dtype f32le
//   kind image|sinogram|grid
//   shape <rows> <cols>
//   extent <row_lo> <row_hi> <col_lo> <col_hi>
//   end
//   <rows*cols float32 values, row-major>
//
// Values are stored in single precision, so read(write(g)) equals g rounded
// to float; any grid read from a file writes back to identical bytes.

class GridIoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};
class MalformedHeaderError : public GridIoError {
 public:
  using GridIoError::GridIoError;
};
class TruncatedPayloadError : public GridIoError {
 public:
  using GridIoError::GridIoError;
};
class DtypeMismatchError : public GridIoError {
 public:
  using GridIoError::GridIoError;
};

enum class GridKind { kGrid, kImage, kSinogram };

struct GridFile {
  GridKind kind = GridKind::kGrid;
  Grid grid;
  // Physical extent along rows then columns.
  double extent[4] = {0.0, 0.0, 0.0, 0.0};
};

void write_grid(const Grid& grid, const std::filesystem::path& path);
void write_grid(const Image& image, const std::filesystem::path& path);
void write_grid(const Sinogram& sinogram, const std::filesystem::path& path);

GridFile read_grid(const std::filesystem::path& path);
Image read_image(const std::filesystem::path& path);
Sinogram read_sinogram(const std::filesystem::path& path);

// In-memory variants used by the file functions.
std::string encode_grid(const GridFile& file);
GridFile decode_grid(const std::string& bytes);

// 16-bit binary PGM; values clamped to [0, peak] and scaled to 0..65535.
// Row 0 of the image (y = -1) becomes the bottom row of the picture.
void write_pgm16(const Grid& grid, const std::filesystem::path& path, double peak = 1.0);

}  // namespace anett
