#pragma once

#include <cstddef>
#include <memory>
#include <string>
#include <vector>

#include "anett/grid.hpp"

namespace anett {

// Parallel-beam acquisition geometry. Angle k is k*pi/n_angles (half-open
// [0, pi)); detector bin j is centered at -half_width + (j + 1/2) * spacing.
struct Geometry {
  std::size_t image_side = 128;
  std::size_t n_angles = 60;
  std::size_t n_detectors = 192;
  double detector_half_width = 1.5;

  // Defaults with n_detectors = ceil(1.5 * side).
  static Geometry for_image(std::size_t side, std::size_t n_angles = 60);

  void validate() const;
  double angle(std::size_t k) const;
  double detector_spacing() const;
  double detector_position(std::size_t j) const;
  std::vector<double> angles() const;

  Sinogram make_sinogram() const { return Sinogram(n_angles, n_detectors, detector_half_width); }

  friend bool operator==(const Geometry&, const Geometry&) = default;
};

// Line integrals by Joseph's method: walk the axis most aligned with the ray,
// interpolate linearly across the other, and weight by the step length.
Sinogram radon_forward(const Image& u, const Geometry& g);

// Literal transpose of radon_forward (same weights, accumulated).
Image radon_adjoint(const Sinogram& y, const Geometry& g);

enum class FbpFilter { kRamLak, kHann };

FbpFilter parse_fbp_filter(const std::string& name);

// Filtered backprojection: ramp filtering per angle in the frequency domain
// (zero padded to a power of two >= 2 * n_detectors), then linear-interpolated
// backprojection with angular weight pi / n_angles.
Image fbp(const Sinogram& y, const Geometry& g, FbpFilter filter = FbpFilter::kRamLak);

// The operator K of the data model y = K u + z together with its adjoint and
// an approximate inverse K#.
class ForwardOperator {
 public:
  virtual ~ForwardOperator() = default;
  virtual Sinogram apply(const Image& u) const = 0;
  virtual Image adjoint(const Sinogram& y) const = 0;
  virtual Image pseudo_inverse(const Sinogram& y) const = 0;
  virtual std::size_t image_side() const = 0;
};

class RadonOperator final : public ForwardOperator {
 public:
  explicit RadonOperator(Geometry geometry, FbpFilter filter = FbpFilter::kRamLak);

  Sinogram apply(const Image& u) const override { return radon_forward(u, geometry_); }
  Image adjoint(const Sinogram& y) const override { return radon_adjoint(y, geometry_); }
  Image pseudo_inverse(const Sinogram& y) const override { return fbp(y, geometry_, filter_); }
  std::size_t image_side() const override { return geometry_.image_side; }

  const Geometry& geometry() const { return geometry_; }

 private:
  Geometry geometry_;
  FbpFilter filter_;
};

// K = I; the "sinogram" is an n x n copy of the image.
class IdentityOperator final : public ForwardOperator {
 public:
  explicit IdentityOperator(std::size_t side) : side_(side) {}

  Sinogram apply(const Image& u) const override;
  Image adjoint(const Sinogram& y) const override;
  Image pseudo_inverse(const Sinogram& y) const override { return adjoint(y); }
  std::size_t image_side() const override { return side_; }

 private:
  std::size_t side_;
};

}  // namespace anett
