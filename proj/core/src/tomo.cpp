#include "anett/tomo.hpp"

#include <fftw3.h>

#include <cmath>
#include <complex>
#include <mutex>
#include <numbers>
#include <stdexcept>

namespace anett {

Geometry Geometry::for_image(std::size_t side, std::size_t n_angles) {
  Geometry g;
  g.image_side = side;
  g.n_angles = n_angles;
  g.n_detectors = (3 * side + 1) / 2;
  return g;
}

void Geometry::validate() const {
  if (n_angles < 1) throw std::invalid_argument("geometry: n_angles must be >= 1");
  if (n_detectors < 2) throw std::invalid_argument("geometry: n_detectors must be >= 2");
  if (image_side < Image::kMinSide) throw std::invalid_argument("geometry: image side must be >= 8");
  if (!(detector_half_width > 0.0)) throw std::invalid_argument("geometry: detector half width must be positive");
}

double Geometry::angle(std::size_t k) const {
  return std::numbers::pi * static_cast<double>(k) / static_cast<double>(n_angles);
}

double Geometry::detector_spacing() const {
  return 2.0 * detector_half_width / static_cast<double>(n_detectors);
}

double Geometry::detector_position(std::size_t j) const {
  return -detector_half_width + (static_cast<double>(j) + 0.5) * detector_spacing();
}

std::vector<double> Geometry::angles() const {
  std::vector<double> out(n_angles);
  for (std::size_t k = 0; k < n_angles; ++k) out[k] = angle(k);
  return out;
}

namespace {

void check_image(const Image& u, const Geometry& g) {
  g.validate();
  if (u.side() != g.image_side) {
    throw ShapeError("radon: image side " + std::to_string(u.side()) + " does not match geometry side " +
                     std::to_string(g.image_side));
  }
}

void check_sinogram(const Grid& y, const Geometry& g) {
  g.validate();
  if (y.rows() != g.n_angles || y.cols() != g.n_detectors) {
    throw ShapeError("radon: sinogram " + std::to_string(y.rows()) + "x" + std::to_string(y.cols()) +
                     " does not match geometry " + std::to_string(g.n_angles) + "x" +
                     std::to_string(g.n_detectors));
  }
}

// Visits every (row, col, weight) the Joseph ray for bin (angle k, detector j)
// touches. Forward and adjoint both go through here so they are exact transposes.
template <class Visit>
void walk_ray(const Geometry& g, double cos_phi, double sin_phi, double s, Visit&& visit) {
  const auto n = static_cast<std::ptrdiff_t>(g.image_side);
  const double h = 2.0 / static_cast<double>(n);
  const bool along_x = std::fabs(sin_phi) >= std::fabs(cos_phi);
  const double drive = along_x ? sin_phi : cos_phi;
  const double other = along_x ? cos_phi : sin_phi;
  const double weight = h / std::fabs(drive);
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const double t = -1.0 + (static_cast<double>(i) + 0.5) * h;
    const double coord = (s - t * other) / drive;
    const double fi = (coord + 1.0) / h - 0.5;
    if (fi <= -1.0 || fi >= static_cast<double>(n)) continue;
    const double fl = std::floor(fi);
    const auto i0 = static_cast<std::ptrdiff_t>(fl);
    const double frac = fi - fl;
    // along_x: i walks columns, the interpolated index is a row.
    if (i0 >= 0 && frac < 1.0) {
      if (along_x) visit(i0, i, weight * (1.0 - frac));
      else visit(i, i0, weight * (1.0 - frac));
    }
    if (i0 + 1 < n && frac > 0.0) {
      if (along_x) visit(i0 + 1, i, weight * frac);
      else visit(i, i0 + 1, weight * frac);
    }
  }
}

}  // namespace

Sinogram radon_forward(const Image& u, const Geometry& g) {
  check_image(u, g);
  Sinogram y = g.make_sinogram();
  const auto n = static_cast<std::ptrdiff_t>(g.image_side);
  for (std::size_t k = 0; k < g.n_angles; ++k) {
    const double phi = g.angle(k);
    const double c = std::cos(phi);
    const double s = std::sin(phi);
    for (std::size_t j = 0; j < g.n_detectors; ++j) {
      double acc = 0.0;
      walk_ray(g, c, s, g.detector_position(j), [&](std::ptrdiff_t r, std::ptrdiff_t col, double w) {
        acc += w * u.data()[r * n + col];
      });
      y(k, j) = acc;
    }
  }
  return y;
}

Image radon_adjoint(const Sinogram& y, const Geometry& g) {
  check_sinogram(y, g);
  Image u(g.image_side);
  const auto n = static_cast<std::ptrdiff_t>(g.image_side);
  for (std::size_t k = 0; k < g.n_angles; ++k) {
    const double phi = g.angle(k);
    const double c = std::cos(phi);
    const double s = std::sin(phi);
    for (std::size_t j = 0; j < g.n_detectors; ++j) {
      const double v = y(k, j);
      if (v == 0.0) continue;
      walk_ray(g, c, s, g.detector_position(j), [&](std::ptrdiff_t r, std::ptrdiff_t col, double w) {
        u.data()[r * n + col] += w * v;
      });
    }
  }
  return u;
}

FbpFilter parse_fbp_filter(const std::string& name) {
  if (name == "ram-lak" || name == "ramlak") return FbpFilter::kRamLak;
  if (name == "hann") return FbpFilter::kHann;
  throw std::invalid_argument("unknown fbp filter '" + name + "' (expected ram-lak or hann)");
}

namespace {

// The FFTW planner is not thread safe; execution on the planned arrays is.
std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

std::size_t next_pow2(std::size_t v) {
  std::size_t p = 1;
  while (p < v) p <<= 1;
  return p;
}

class FftPair {
 public:
  explicit FftPair(std::size_t n)
      : n_(n),
        real_(fftw_alloc_real(n)),
        spec_(fftw_alloc_complex(n / 2 + 1)) {
    std::lock_guard lock(fftw_planner_mutex());
    const int len = static_cast<int>(n);
    forward_ = fftw_plan_dft_r2c_1d(len, real_, spec_, FFTW_ESTIMATE);
    backward_ = fftw_plan_dft_c2r_1d(len, spec_, real_, FFTW_ESTIMATE);
  }
  ~FftPair() {
    std::lock_guard lock(fftw_planner_mutex());
    fftw_destroy_plan(forward_);
    fftw_destroy_plan(backward_);
    fftw_free(real_);
    fftw_free(spec_);
  }
  FftPair(const FftPair&) = delete;
  FftPair& operator=(const FftPair&) = delete;

  double* real() { return real_; }
  std::complex<double>* spectrum() { return reinterpret_cast<std::complex<double>*>(spec_); }
  std::size_t bins() const { return n_ / 2 + 1; }
  void forward() { fftw_execute(forward_); }
  void backward() { fftw_execute(backward_); }

 private:
  std::size_t n_;
  double* real_;
  fftw_complex* spec_;
  fftw_plan forward_{};
  fftw_plan backward_{};
};

// Frequency response of the band-limited ramp: transform of the exact
// spatial-domain Ram-Lak kernel, scaled by the detector spacing.
std::vector<double> ramp_response(FftPair& fft, std::size_t padded, double spacing, FbpFilter filter) {
  const auto half = static_cast<std::ptrdiff_t>(padded / 2);
  double* h = fft.real();
  for (std::size_t i = 0; i < padded; ++i) h[i] = 0.0;
  h[0] = 1.0 / (4.0 * spacing * spacing);
  for (std::ptrdiff_t k = 1; k < half; k += 2) {
    const double v = -1.0 / (std::numbers::pi * std::numbers::pi * static_cast<double>(k * k) * spacing * spacing);
    h[k] = v;
    h[static_cast<std::ptrdiff_t>(padded) - k] = v;
  }
  fft.forward();
  std::vector<double> response(fft.bins());
  for (std::size_t m = 0; m < response.size(); ++m) {
    double r = fft.spectrum()[m].real() * spacing;
    if (filter == FbpFilter::kHann) {
      r *= 0.5 * (1.0 + std::cos(std::numbers::pi * static_cast<double>(m) / static_cast<double>(half)));
    }
    response[m] = r;
  }
  return response;
}

}  // namespace

Image fbp(const Sinogram& y, const Geometry& g, FbpFilter filter) {
  check_sinogram(y, g);
  const std::size_t nd = g.n_detectors;
  const std::size_t padded = next_pow2(2 * nd);
  const double ds = g.detector_spacing();
  FftPair fft(padded);
  const std::vector<double> response = ramp_response(fft, padded, ds, filter);

  Grid filtered(g.n_angles, nd);
  for (std::size_t k = 0; k < g.n_angles; ++k) {
    double* buf = fft.real();
    for (std::size_t i = 0; i < padded; ++i) buf[i] = i < nd ? y(k, i) : 0.0;
    fft.forward();
    for (std::size_t m = 0; m < response.size(); ++m) fft.spectrum()[m] *= response[m];
    fft.backward();
    for (std::size_t i = 0; i < nd; ++i) filtered(k, i) = buf[i] / static_cast<double>(padded);
  }

  Image u(g.image_side);
  const std::size_t n = g.image_side;
  const double angular_weight = std::numbers::pi / static_cast<double>(g.n_angles);
  for (std::size_t k = 0; k < g.n_angles; ++k) {
    const double phi = g.angle(k);
    const double c = std::cos(phi);
    const double s = std::sin(phi);
    const double* q = &filtered(k, 0);
    for (std::size_t r = 0; r < n; ++r) {
      const double yy = u.center(r);
      for (std::size_t col = 0; col < n; ++col) {
        const double t = (u.center(col) * c + yy * s + g.detector_half_width) / ds - 0.5;
        const double fl = std::floor(t);
        const auto j0 = static_cast<std::ptrdiff_t>(fl);
        const double frac = t - fl;
        double v = 0.0;
        if (j0 >= 0 && j0 < static_cast<std::ptrdiff_t>(nd)) v += (1.0 - frac) * q[j0];
        if (j0 + 1 >= 0 && j0 + 1 < static_cast<std::ptrdiff_t>(nd)) v += frac * q[j0 + 1];
        u(r, col) += angular_weight * v;
      }
    }
  }
  return u;
}

RadonOperator::RadonOperator(Geometry geometry, FbpFilter filter)
    : geometry_(geometry), filter_(filter) {
  geometry_.validate();
}

Sinogram IdentityOperator::apply(const Image& u) const {
  if (u.side() != side_) throw ShapeError("identity operator: image side mismatch");
  return Sinogram(static_cast<const Grid&>(u), 1.0);
}

Image IdentityOperator::adjoint(const Sinogram& y) const {
  if (y.rows() != side_ || y.cols() != side_) throw ShapeError("identity operator: data shape mismatch");
  return Image(static_cast<const Grid&>(y));
}

}  // namespace anett
