#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace anett {

// Channels x height x width feature map, one contiguous row-major plane per channel.
struct Tensor {
  std::size_t channels = 0;
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<double> data;

  Tensor() = default;
  Tensor(std::size_t c, std::size_t h, std::size_t w, double fill = 0.0)
      : channels(c), height(h), width(w), data(c * h * w, fill) {}

  std::size_t size() const { return data.size(); }
  std::size_t plane_size() const { return height * width; }
  double* plane(std::size_t c) { return data.data() + c * plane_size(); }
  const double* plane(std::size_t c) const { return data.data() + c * plane_size(); }
  bool same_shape(const Tensor& o) const {
    return channels == o.channels && height == o.height && width == o.width;
  }

  friend bool operator==(const Tensor&, const Tensor&) = default;
};

}  // namespace anett
