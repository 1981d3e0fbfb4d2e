#include "anett/grid.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace anett {

Grid::Grid(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), values_(rows * cols, fill) {}

Grid::Grid(std::size_t rows, std::size_t cols, std::vector<double> values)
    : rows_(rows), cols_(cols), values_(std::move(values)) {
  if (values_.size() != rows * cols) {
    throw ShapeError("grid: " + std::to_string(values_.size()) + " values for shape " +
                     std::to_string(rows) + "x" + std::to_string(cols));
  }
}

bool Grid::all_finite() const {
  for (double v : values_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

namespace {

void check_side(std::size_t rows, std::size_t cols) {
  if (rows != cols || rows < Image::kMinSide) {
    throw ShapeError("image must be square with side >= 8, got " + std::to_string(rows) + "x" +
                     std::to_string(cols));
  }
}

}  // namespace

Image::Image(std::size_t side, double fill) : Grid(side, side, fill) { check_side(side, side); }

Image::Image(std::size_t side, std::vector<double> values)
    : Grid(side, side, std::move(values)) {
  check_side(side, side);
}

Image::Image(Grid grid) : Grid(std::move(grid)) { check_side(rows_, cols_); }

Sinogram::Sinogram(std::size_t n_angles, std::size_t n_detectors, double detector_half_width)
    : Grid(n_angles, n_detectors), half_width_(detector_half_width) {}

Sinogram::Sinogram(Grid grid, double detector_half_width)
    : Grid(std::move(grid)), half_width_(detector_half_width) {}

void require_same_shape(const Grid& a, const Grid& b, const char* what) {
  if (!a.same_shape(b)) {
    throw ShapeError(std::string(what) + ": shape mismatch " + std::to_string(a.rows()) + "x" +
                     std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + "x" +
                     std::to_string(b.cols()));
  }
}

double dot(const Grid& a, const Grid& b) {
  require_same_shape(a, b, "dot");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double squared_norm(const Grid& x) {
  double s = 0.0;
  for (double v : x.values()) s += v * v;
  return s;
}

// Scaled accumulation keeps the result exact to rounding even for values
// near the overflow/underflow range.
double l2_norm(const Grid& x) {
  double scale = 0.0;
  double ssq = 1.0;
  for (double v : x.values()) {
    if (v == 0.0) continue;
    const double a = std::fabs(v);
    if (scale < a) {
      ssq = 1.0 + ssq * (scale / a) * (scale / a);
      scale = a;
    } else {
      ssq += (a / scale) * (a / scale);
    }
  }
  return scale * std::sqrt(ssq);
}

double mean(const Grid& x) {
  if (x.empty()) throw ShapeError("mean of empty grid");
  double s = 0.0;
  for (double v : x.values()) s += v;
  return s / static_cast<double>(x.size());
}

double mse(const Grid& x, const Grid& ref) {
  require_same_shape(x, ref, "mse");
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = x[i] - ref[i];
    s += d * d;
  }
  return s / static_cast<double>(x.size());
}

namespace {

double psnr_from_mse(double err, double peak) {
  if (!(peak > 0.0)) throw std::invalid_argument("psnr: peak must be positive");
  if (err == 0.0) return kPsnrCap;
  return std::min(kPsnrCap, 10.0 * std::log10(peak * peak / err));
}

}  // namespace

double psnr(const Grid& x, const Grid& ref, double peak) {
  return psnr_from_mse(mse(x, ref), peak);
}

double psnr(const Grid& x, const Grid& ref, const Grid& mask, double peak) {
  require_same_shape(x, ref, "psnr");
  require_same_shape(x, mask, "psnr mask");
  double s = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (mask[i] == 0.0) continue;
    const double d = x[i] - ref[i];
    s += d * d;
    ++count;
  }
  if (count == 0) throw std::invalid_argument("psnr: empty mask");
  return psnr_from_mse(s / static_cast<double>(count), peak);
}

Grid disc_mask(const Image& like, double radius, double cx, double cy) {
  Grid mask(like.side(), like.side());
  for (std::size_t r = 0; r < like.side(); ++r) {
    const double y = like.center(r) - cy;
    for (std::size_t c = 0; c < like.side(); ++c) {
      const double x = like.center(c) - cx;
      if (x * x + y * y <= radius * radius) mask(r, c) = 1.0;
    }
  }
  return mask;
}

}  // namespace anett
