#include "tensor_ops.hpp"

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cmath>
#include <stdexcept>

#include "anett/error.hpp"

namespace anett::ops {

namespace {

// Copy of x with `pad` zeros around every plane.
Tensor padded(const Tensor& x, std::size_t pad) {
  Tensor p(x.channels, x.height + 2 * pad, x.width + 2 * pad);
  for (std::size_t c = 0; c < x.channels; ++c) {
    const double* src = x.plane(c);
    double* dst = p.plane(c);
    for (std::size_t r = 0; r < x.height; ++r) {
      std::copy(src + r * x.width, src + (r + 1) * x.width, dst + (r + pad) * p.width + pad);
    }
  }
  return p;
}

constexpr std::size_t kBlock = 4;

// Correlates a padded input with weights w[co][ci][ky][kx] (double), writing
// an unpadded output of size height x width. Output channels are processed in
// blocks so each input row load feeds several accumulators.
void correlate(const Tensor& xp, const std::vector<double>& w, const std::vector<double>& bias, std::size_t cout,
               std::size_t k, Tensor& y) {
  const std::size_t cin = xp.channels;
  const std::size_t width = y.width;
  const std::size_t wp = xp.width;
  std::vector<double> acc(kBlock * width);
  for (std::size_t co0 = 0; co0 < cout; co0 += kBlock) {
    const std::size_t nb = std::min(kBlock, cout - co0);
    for (std::size_t r = 0; r < y.height; ++r) {
      for (std::size_t b = 0; b < nb; ++b) {
        std::fill(acc.begin() + b * width, acc.begin() + (b + 1) * width, bias.empty() ? 0.0 : bias[co0 + b]);
      }
      double* a0 = acc.data();
      double* a1 = a0 + width;
      double* a2 = a1 + width;
      double* a3 = a2 + width;
      for (std::size_t ci = 0; ci < cin; ++ci) {
        for (std::size_t ky = 0; ky < k; ++ky) {
          const double* row = xp.plane(ci) + (r + ky) * wp;
          for (std::size_t kx = 0; kx < k; ++kx) {
            const double* src = row + kx;
            const std::size_t tap = (ci * k + ky) * k + kx;
            if (nb == kBlock) {
              const double w0 = w[(co0 + 0) * cin * k * k + tap];
              const double w1 = w[(co0 + 1) * cin * k * k + tap];
              const double w2 = w[(co0 + 2) * cin * k * k + tap];
              const double w3 = w[(co0 + 3) * cin * k * k + tap];
              for (std::size_t q = 0; q < width; ++q) {
                const double v = src[q];
                a0[q] += w0 * v;
                a1[q] += w1 * v;
                a2[q] += w2 * v;
                a3[q] += w3 * v;
              }
            } else {
              for (std::size_t b = 0; b < nb; ++b) {
                const double wv = w[(co0 + b) * cin * k * k + tap];
                double* ab = acc.data() + b * width;
                for (std::size_t q = 0; q < width; ++q) ab[q] += wv * src[q];
              }
            }
          }
        }
      }
      for (std::size_t b = 0; b < nb; ++b) {
        std::copy(acc.begin() + b * width, acc.begin() + (b + 1) * width, y.plane(co0 + b) + r * width);
      }
    }
  }
}

}  // namespace

Tensor conv2d(const Tensor& x, const float* weight, const float* bias, const ConvShape& shape) {
  if (x.channels != shape.in_channels) throw ShapeError("conv2d: input channel mismatch");
  const std::size_t k = shape.kernel;
  std::vector<double> w(weight, weight + shape.weight_count());
  std::vector<double> b;
  if (bias) b.assign(bias, bias + shape.out_channels);
  Tensor y(shape.out_channels, x.height, x.width);
  correlate(k == 1 ? x : padded(x, k / 2), w, b, shape.out_channels, k, y);
  return y;
}

void conv2d_backward(const Tensor& x, const float* weight, const ConvShape& shape, const Tensor& grad_y,
                     Tensor* grad_x, double* grad_w, double* grad_b) {
  if (grad_y.channels != shape.out_channels || grad_y.height != x.height || grad_y.width != x.width ||
      x.channels != shape.in_channels) {
    throw ShapeError("conv2d_backward: gradient shape mismatch");
  }
  const std::size_t k = shape.kernel;
  const std::size_t pad = k / 2;
  const std::size_t cin = shape.in_channels;
  const std::size_t cout = shape.out_channels;
  const std::size_t width = x.width;

  if (grad_b) {
    for (std::size_t co = 0; co < cout; ++co) {
      const double* gy = grad_y.plane(co);
      double s = 0.0;
      for (std::size_t i = 0; i < grad_y.plane_size(); ++i) s += gy[i];
      grad_b[co] += s;
    }
  }

  if (grad_w) {
    const Tensor xp = k == 1 ? x : padded(x, pad);
    std::vector<double> acc(k * k);
    for (std::size_t co = 0; co < cout; ++co) {
      for (std::size_t ci = 0; ci < cin; ++ci) {
        std::fill(acc.begin(), acc.end(), 0.0);
        for (std::size_t r = 0; r < x.height; ++r) {
          const double* g = grad_y.plane(co) + r * width;
          for (std::size_t ky = 0; ky < k; ++ky) {
            const double* row = xp.plane(ci) + (r + ky) * xp.width;
            for (std::size_t kx = 0; kx < k; ++kx) {
              const double* src = row + kx;
              double s = 0.0;
#pragma omp simd reduction(+ : s)
              for (std::size_t q = 0; q < width; ++q) s += g[q] * src[q];
              acc[ky * k + kx] += s;
            }
          }
        }
        double* gw = grad_w + (co * cin + ci) * k * k;
        for (std::size_t t = 0; t < k * k; ++t) gw[t] += acc[t];
      }
    }
  }

  if (grad_x) {
    // Input gradient = correlation of the padded output gradient with the
    // spatially flipped, channel-transposed kernel.
    std::vector<double> flipped(shape.weight_count());
    for (std::size_t co = 0; co < cout; ++co) {
      for (std::size_t ci = 0; ci < cin; ++ci) {
        for (std::size_t t = 0; t < k * k; ++t) {
          flipped[(ci * cout + co) * k * k + (k * k - 1 - t)] = weight[(co * cin + ci) * k * k + t];
        }
      }
    }
    Tensor gx(cin, x.height, x.width);
    correlate(k == 1 ? grad_y : padded(grad_y, pad), flipped, {}, cin, k, gx);
    if (grad_x->data.empty()) {
      *grad_x = std::move(gx);
    } else {
      add_into(*grad_x, gx);
    }
  }
}

namespace {

// exp via 2^k * e^r with |r| <= ln2/2 and a degree-13 Taylor polynomial;
// relative error below 3e-16, about twice as fast as std::exp here.
double exp_reduced(double x) {
  x = x < -700.0 ? -700.0 : (x > 700.0 ? 700.0 : x);
  const double k = std::floor(x * 1.4426950408889634 + 0.5);
  const double r = (x - k * 6.93147180369123816490e-01) - k * 1.90821492927058770002e-10;
  double p = 1.0 / 6227020800.0;
  p = p * r + 1.0 / 479001600.0;
  p = p * r + 1.0 / 39916800.0;
  p = p * r + 1.0 / 3628800.0;
  p = p * r + 1.0 / 362880.0;
  p = p * r + 1.0 / 40320.0;
  p = p * r + 1.0 / 5040.0;
  p = p * r + 1.0 / 720.0;
  p = p * r + 1.0 / 120.0;
  p = p * r + 1.0 / 24.0;
  p = p * r + 1.0 / 6.0;
  p = p * r + 0.5;
  p = p * r + 1.0;
  p = p * r + 1.0;
  return p * std::bit_cast<double>((static_cast<std::int64_t>(k) + 1023) << 52);
}

double sigmoid(double v) { return 1.0 / (1.0 + exp_reduced(-v)); }

}  // namespace

Tensor silu(const Tensor& pre) {
  Tensor y = pre;
  for (double& v : y.data) v *= sigmoid(v);
  return y;
}

Tensor silu_backward(const Tensor& pre, const Tensor& grad_y) {
  if (!pre.same_shape(grad_y)) throw ShapeError("silu_backward: shape mismatch");
  Tensor g = grad_y;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double v = pre.data[i];
    const double s = sigmoid(v);
    g.data[i] *= s * (1.0 + v * (1.0 - s));
  }
  return g;
}

Tensor avg_pool2(const Tensor& x) {
  if (x.height % 2 != 0 || x.width % 2 != 0) throw ShapeError("avg_pool2: odd spatial size");
  Tensor y(x.channels, x.height / 2, x.width / 2);
  for (std::size_t c = 0; c < x.channels; ++c) {
    const double* in = x.plane(c);
    double* out = y.plane(c);
    for (std::size_t r = 0; r < y.height; ++r) {
      const double* a = in + 2 * r * x.width;
      const double* b = a + x.width;
      for (std::size_t q = 0; q < y.width; ++q) {
        out[r * y.width + q] = 0.25 * (a[2 * q] + a[2 * q + 1] + b[2 * q] + b[2 * q + 1]);
      }
    }
  }
  return y;
}

Tensor avg_pool2_backward(const Tensor& grad_y) {
  Tensor g(grad_y.channels, grad_y.height * 2, grad_y.width * 2);
  for (std::size_t c = 0; c < g.channels; ++c) {
    const double* in = grad_y.plane(c);
    double* out = g.plane(c);
    for (std::size_t r = 0; r < g.height; ++r) {
      for (std::size_t q = 0; q < g.width; ++q) {
        out[r * g.width + q] = 0.25 * in[(r / 2) * grad_y.width + q / 2];
      }
    }
  }
  return g;
}

Tensor upsample2(const Tensor& x) {
  Tensor y(x.channels, x.height * 2, x.width * 2);
  for (std::size_t c = 0; c < x.channels; ++c) {
    const double* in = x.plane(c);
    double* out = y.plane(c);
    for (std::size_t r = 0; r < y.height; ++r) {
      for (std::size_t q = 0; q < y.width; ++q) out[r * y.width + q] = in[(r / 2) * x.width + q / 2];
    }
  }
  return y;
}

Tensor upsample2_backward(const Tensor& grad_y) {
  if (grad_y.height % 2 != 0 || grad_y.width % 2 != 0) throw ShapeError("upsample2_backward: odd size");
  Tensor g(grad_y.channels, grad_y.height / 2, grad_y.width / 2);
  for (std::size_t c = 0; c < g.channels; ++c) {
    const double* in = grad_y.plane(c);
    double* out = g.plane(c);
    for (std::size_t r = 0; r < g.height; ++r) {
      const double* a = in + 2 * r * grad_y.width;
      const double* b = a + grad_y.width;
      for (std::size_t q = 0; q < g.width; ++q) {
        out[r * g.width + q] = a[2 * q] + a[2 * q + 1] + b[2 * q] + b[2 * q + 1];
      }
    }
  }
  return g;
}

Tensor concat(const Tensor& a, const Tensor& b) {
  if (a.height != b.height || a.width != b.width) throw ShapeError("concat: spatial size mismatch");
  Tensor y(a.channels + b.channels, a.height, a.width);
  std::copy(a.data.begin(), a.data.end(), y.data.begin());
  std::copy(b.data.begin(), b.data.end(), y.data.begin() + static_cast<std::ptrdiff_t>(a.size()));
  return y;
}

void split(const Tensor& grad, std::size_t first_channels, Tensor& grad_a, Tensor& grad_b) {
  if (first_channels > grad.channels) throw ShapeError("split: too many channels");
  grad_a = Tensor(first_channels, grad.height, grad.width);
  grad_b = Tensor(grad.channels - first_channels, grad.height, grad.width);
  const auto cut = grad.data.begin() + static_cast<std::ptrdiff_t>(grad_a.size());
  std::copy(grad.data.begin(), cut, grad_a.data.begin());
  std::copy(cut, grad.data.end(), grad_b.data.begin());
}

void add_into(Tensor& acc, const Tensor& x) {
  if (acc.data.empty()) {
    acc = x;
    return;
  }
  if (!acc.same_shape(x)) throw ShapeError("add_into: shape mismatch");
  for (std::size_t i = 0; i < acc.size(); ++i) acc.data[i] += x.data[i];
}

}  // namespace anett::ops
