#pragma once

#include <concepts>
#include <cstddef>
#include <span>
#include <vector>

#include "anett/error.hpp"

namespace anett {

// Dense row-major 2-D array of doubles.
class Grid {
 public:
  Grid() = default;
  Grid(std::size_t rows, std::size_t cols, double fill = 0.0);
  Grid(std::size_t rows, std::size_t cols, std::vector<double> values);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return values_.size(); }
  bool empty() const { return values_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return values_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return values_[r * cols_ + c]; }
  double& operator[](std::size_t i) { return values_[i]; }
  double operator[](std::size_t i) const { return values_[i]; }

  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }
  double* data() { return values_.data(); }
  const double* data() const { return values_.data(); }

  bool same_shape(const Grid& other) const {
    return rows_ == other.rows_ && cols_ == other.cols_;
  }
  bool all_finite() const;

  friend bool operator==(const Grid&, const Grid&) = default;

 protected:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> values_;
};

// Square image on the physical domain [-1,1]^2. Row index r maps to the
// y coordinate, column index c to x; pixel centers sit at -1 + (i + 1/2) * 2/n.
class Image : public Grid {
 public:
  static constexpr std::size_t kMinSide = 8;

  Image() = default;
  explicit Image(std::size_t side, double fill = 0.0);
  Image(std::size_t side, std::vector<double> values);
  // Adopt a grid; it must be square with side >= kMinSide.
  explicit Image(Grid grid);

  std::size_t side() const { return rows_; }
  double pixel_size() const { return 2.0 / static_cast<double>(rows_); }
  double center(std::size_t index) const {
    return -1.0 + (static_cast<double>(index) + 0.5) * pixel_size();
  }
  // Continuous index of a coordinate; integer results hit pixel centers.
  double index_of(double coord) const { return (coord + 1.0) / pixel_size() - 0.5; }

  friend bool operator==(const Image&, const Image&) = default;
};

// Parallel-beam data: rows are angles in [0, pi), columns are detector
// bins equidistant over [-detector_half_width, detector_half_width].
class Sinogram : public Grid {
 public:
  Sinogram() = default;
  Sinogram(std::size_t n_angles, std::size_t n_detectors, double detector_half_width = 1.5);
  Sinogram(Grid grid, double detector_half_width = 1.5);

  std::size_t n_angles() const { return rows_; }
  std::size_t n_detectors() const { return cols_; }
  double detector_half_width() const { return half_width_; }

  friend bool operator==(const Sinogram&, const Sinogram&) = default;

 private:
  double half_width_ = 1.5;
};

// Grid-like types share the arithmetic helpers below and keep their own type.
template <class G>
concept GridLike = std::derived_from<G, Grid>;

void require_same_shape(const Grid& a, const Grid& b, const char* what);

template <GridLike G>
G axpy(double a, const G& x, const G& y) {
  require_same_shape(x, y, "axpy");
  G out = y;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a * x[i] + y[i];
  return out;
}

template <GridLike G>
G scaled(double a, const G& x) {
  G out = x;
  for (double& v : out.values()) v *= a;
  return out;
}

template <GridLike G>
G difference(const G& x, const G& y) {
  return axpy(-1.0, y, x);
}

double dot(const Grid& a, const Grid& b);
double l2_norm(const Grid& x);
double squared_norm(const Grid& x);
double mean(const Grid& x);

// PSNR value reported for identical inputs.
inline constexpr double kPsnrCap = 300.0;

double mse(const Grid& x, const Grid& ref);
double psnr(const Grid& x, const Grid& ref, double peak = 1.0);
// PSNR restricted to pixels where mask is nonzero.
double psnr(const Grid& x, const Grid& ref, const Grid& mask, double peak);

// Indicator of pixel centers with |x| <= radius.
Grid disc_mask(const Image& like, double radius, double cx = 0.0, double cy = 0.0);

}  // namespace anett
