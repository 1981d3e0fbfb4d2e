#include "anett/grid_io.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <sstream>

namespace anett {

namespace {

constexpr const char* kMagic = "ANETT-GRID";
constexpr int kVersion = 1;

const char* kind_name(GridKind kind) {
  switch (kind) {
    case GridKind::kImage:
      return "image";
    case GridKind::kSinogram:
      return "sinogram";
    case GridKind::kGrid:
      break;
  }
  return "grid";
}

GridKind parse_kind(const std::string& name) {
  if (name == "image") return GridKind::kImage;
  if (name == "sinogram") return GridKind::kSinogram;
  if (name == "grid") return GridKind::kGrid;
  throw MalformedHeaderError("grid header: unknown kind '" + name + "'");
}

void put_f32le(std::string& out, float v) {
  const auto bits = std::bit_cast<std::uint32_t>(v);
  for (int b = 0; b < 4; ++b) out.push_back(static_cast<char>((bits >> (8 * b)) & 0xffu));
}

float get_f32le(const char* p) {
  std::uint32_t bits = 0;
  for (int b = 0; b < 4; ++b) {
    bits |= static_cast<std::uint32_t>(static_cast<unsigned char>(p[b])) << (8 * b);
  }
  return std::bit_cast<float>(bits);
}

// Reads one '\n'-terminated header line starting at pos.
std::string header_line(const std::string& bytes, std::size_t& pos) {
  const auto nl = bytes.find('\n', pos);
  if (nl == std::string::npos || nl - pos > 256) {
    throw MalformedHeaderError("grid header: unterminated line");
  }
  std::string line = bytes.substr(pos, nl - pos);
  pos = nl + 1;
  return line;
}

std::istringstream expect_key(const std::string& line, const std::string& key) {
  std::istringstream in(line);
  std::string got;
  in >> got;
  if (got != key) throw MalformedHeaderError("grid header: expected '" + key + "', got '" + line + "'");
  return in;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FileNotFoundError("file not found: " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const std::filesystem::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw GridIoError("cannot open for writing: " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw GridIoError("write failed: " + path.string());
}

}  // namespace

std::string encode_grid(const GridFile& file) {
  if (!file.grid.all_finite()) throw std::invalid_argument("write_grid: non-finite values");
  std::ostringstream header;
  header << std::setprecision(17);
  header << kMagic << ' ' << kVersion << '\n';
  header << "dtype f32le\n";
  header << "kind " << kind_name(file.kind) << '\n';
  header << "shape " << file.grid.rows() << ' ' << file.grid.cols() << '\n';
  header << "extent " << file.extent[0] << ' ' << file.extent[1] << ' ' << file.extent[2] << ' '
         << file.extent[3] << '\n';
  header << "end\n";
  std::string out = header.str();
  out.reserve(out.size() + 4 * file.grid.size());
  for (double v : file.grid.values()) put_f32le(out, static_cast<float>(v));
  return out;
}

GridFile decode_grid(const std::string& bytes) {
  std::size_t pos = 0;
  GridFile file;
  {
    auto in = expect_key(header_line(bytes, pos), kMagic);
    int version = 0;
    if (!(in >> version) || version != kVersion) {
      throw MalformedHeaderError("grid header: unsupported version");
    }
  }
  {
    auto in = expect_key(header_line(bytes, pos), "dtype");
    std::string dtype;
    in >> dtype;
    if (dtype != "f32le") throw DtypeMismatchError("grid file: dtype '" + dtype + "', expected f32le");
  }
  {
    auto in = expect_key(header_line(bytes, pos), "kind");
    std::string kind;
    in >> kind;
    file.kind = parse_kind(kind);
  }
  std::size_t rows = 0;
  std::size_t cols = 0;
  {
    auto in = expect_key(header_line(bytes, pos), "shape");
    if (!(in >> rows >> cols) || rows == 0 || cols == 0 || rows > (1u << 16) || cols > (1u << 16)) {
      throw MalformedHeaderError("grid header: bad shape");
    }
  }
  {
    auto in = expect_key(header_line(bytes, pos), "extent");
    for (double& e : file.extent) {
      if (!(in >> e)) throw MalformedHeaderError("grid header: bad extent");
    }
  }
  expect_key(header_line(bytes, pos), "end");

  const std::size_t count = rows * cols;
  const std::size_t available = bytes.size() - pos;
  if (available < 4 * count) {
    throw TruncatedPayloadError("grid file: payload has " + std::to_string(available / 4) +
                                " floats, header declares " + std::to_string(count));
  }
  if (available > 4 * count) throw MalformedHeaderError("grid file: trailing bytes after payload");
  std::vector<double> values(count);
  for (std::size_t i = 0; i < count; ++i) values[i] = get_f32le(bytes.data() + pos + 4 * i);
  file.grid = Grid(rows, cols, std::move(values));
  return file;
}

void write_grid(const Grid& grid, const std::filesystem::path& path) {
  GridFile file{GridKind::kGrid, grid, {0.0, static_cast<double>(grid.rows()), 0.0,
                                        static_cast<double>(grid.cols())}};
  write_file(path, encode_grid(file));
}

void write_grid(const Image& image, const std::filesystem::path& path) {
  GridFile file{GridKind::kImage, image, {-1.0, 1.0, -1.0, 1.0}};
  write_file(path, encode_grid(file));
}

void write_grid(const Sinogram& sinogram, const std::filesystem::path& path) {
  const double h = sinogram.detector_half_width();
  GridFile file{GridKind::kSinogram, sinogram, {0.0, std::numbers::pi, -h, h}};
  write_file(path, encode_grid(file));
}

GridFile read_grid(const std::filesystem::path& path) { return decode_grid(read_file(path)); }

Image read_image(const std::filesystem::path& path) {
  GridFile file = read_grid(path);
  if (file.kind == GridKind::kSinogram) throw GridIoError(path.string() + ": expected image, found sinogram");
  return Image(std::move(file.grid));
}

Sinogram read_sinogram(const std::filesystem::path& path) {
  GridFile file = read_grid(path);
  if (file.kind == GridKind::kImage) throw GridIoError(path.string() + ": expected sinogram, found image");
  const double half_width = file.kind == GridKind::kSinogram ? file.extent[3] : 1.5;
  return Sinogram(std::move(file.grid), half_width);
}

void write_pgm16(const Grid& grid, const std::filesystem::path& path, double peak) {
  if (!(peak > 0.0)) throw std::invalid_argument("write_pgm16: peak must be positive");
  std::string out = "P5\n" + std::to_string(grid.cols()) + " " + std::to_string(grid.rows()) + "\n65535\n";
  for (std::size_t r = grid.rows(); r-- > 0;) {
    for (std::size_t c = 0; c < grid.cols(); ++c) {
      const double v = std::clamp(grid(r, c), 0.0, peak) / peak;
      const auto q = static_cast<std::uint16_t>(std::lround(v * 65535.0));
      out.push_back(static_cast<char>(q >> 8));
      out.push_back(static_cast<char>(q & 0xff));
    }
  }
  write_file(path, out);
}

}  // namespace anett
