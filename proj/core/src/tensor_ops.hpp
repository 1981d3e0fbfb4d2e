#pragma once

// Layer kernels for the fixed network vocabulary: same-padded convolution,
// SiLU, 2x average pooling, 2x nearest upsampling, channel concatenation.
// Each forward has a hand-derived backward; weights are float32, activations double.

#include <cstddef>

#include "anett/tensor.hpp"

namespace anett::ops {

struct ConvShape {
  std::size_t in_channels;
  std::size_t out_channels;
  std::size_t kernel;  // odd
  std::size_t weight_count() const { return out_channels * in_channels * kernel * kernel; }
};

Tensor conv2d(const Tensor& x, const float* weight, const float* bias, const ConvShape& shape);

// Accumulates into grad_x / grad_w / grad_b; any of them may be null.
void conv2d_backward(const Tensor& x, const float* weight, const ConvShape& shape, const Tensor& grad_y,
                     Tensor* grad_x, double* grad_w, double* grad_b);

Tensor silu(const Tensor& pre);
Tensor silu_backward(const Tensor& pre, const Tensor& grad_y);

Tensor avg_pool2(const Tensor& x);
Tensor avg_pool2_backward(const Tensor& grad_y);

Tensor upsample2(const Tensor& x);
Tensor upsample2_backward(const Tensor& grad_y);

Tensor concat(const Tensor& a, const Tensor& b);
// Splits a gradient of concat(a, b) back into its two parts.
void split(const Tensor& grad, std::size_t first_channels, Tensor& grad_a, Tensor& grad_b);

void add_into(Tensor& acc, const Tensor& x);

}  // namespace anett::ops
