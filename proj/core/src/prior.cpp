#include "anett/prior.hpp"

#include <algorithm>
#include <stdexcept>
#include <utility>

namespace anett {

NetworkPrior::NetworkPrior(std::shared_ptr<const NetworkParams> theta, std::shared_ptr<const NetworkParams> kappa)
    : theta_(std::move(theta)), kappa_(std::move(kappa)) {
  if (!theta_) throw std::invalid_argument("NetworkPrior: autoencoder parameters required");
  if (theta_->arch.kind != NetKind::kAutoencoder) throw ShapeError("NetworkPrior: theta is not an autoencoder");
  if (kappa_ && kappa_->arch.kind != NetKind::kAdapter) throw ShapeError("NetworkPrior: kappa is not an adapter");
}

PriorValue NetworkPrior::evaluate(const Image& u) const {
  PriorValue v{anett::encode(u, *theta_), {}};
  v.output = decode(v.code, *theta_);
  if (kappa_) v.output = adapt(v.output, *kappa_);
  return v;
}

Linearization NetworkPrior::linearize(const Image& u) const {
  auto tape = std::make_shared<ModelTape>(trace_model(u, *theta_, kappa_.get()));
  Linearization lin{tape->code(), tape->output(), {}};
  lin.pullback = [tape, theta = theta_, kappa = kappa_](const LatentCode* a, const Image* b) {
    return backprop_model(*tape, *theta, kappa.get(), a, b, {true, false}).input;
  };
  return lin;
}

namespace {

LatentCode single_level(const Image& u, double weight) {
  Tensor t(1, u.side(), u.side());
  std::copy(u.values().begin(), u.values().end(), t.data.begin());
  return LatentCode{{std::move(t)}, {weight}};
}

Image image_from(std::size_t side, const std::vector<double>& v) { return Image(side, v); }

}  // namespace

LatentCode IdentityPrior::encode(const Image& u) const { return single_level(u, weight_); }

Linearization IdentityPrior::linearize(const Image& u) const {
  Linearization lin{encode(u), u, {}};
  const std::size_t side = u.side();
  lin.pullback = [side](const LatentCode* a, const Image* b) {
    Image g(side);
    if (a) {
      if (a->levels.size() != 1 || a->levels[0].size() != g.size()) throw ShapeError("IdentityPrior: cotangent");
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += a->levels[0].data[i];
    }
    if (b) {
      require_same_shape(g, *b, "IdentityPrior pullback");
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += (*b)[i];
    }
    return g;
  };
  return lin;
}

AffinePrior::AffinePrior(std::size_t side, std::vector<double> a, std::size_t code_size, std::vector<double> b,
                         std::vector<double> offset, double weight)
    : side_(side), code_size_(code_size), a_(std::move(a)), b_(std::move(b)), offset_(std::move(offset)),
      weight_(weight) {
  const std::size_t n = side * side;
  if (a_.size() != code_size_ * n || b_.size() != n * n || offset_.size() != n) {
    throw ShapeError("AffinePrior: matrix sizes do not match the image side");
  }
}

LatentCode AffinePrior::encode(const Image& u) const {
  const std::size_t n = side_ * side_;
  if (u.size() != n) throw ShapeError("AffinePrior: image side mismatch");
  Tensor t(1, 1, code_size_);
  for (std::size_t r = 0; r < code_size_; ++r) {
    double s = 0.0;
    for (std::size_t c = 0; c < n; ++c) s += a_[r * n + c] * u[c];
    t.data[r] = s;
  }
  return LatentCode{{std::move(t)}, {weight_}};
}

Image AffinePrior::apply(const Image& u) const {
  const std::size_t n = side_ * side_;
  if (u.size() != n) throw ShapeError("AffinePrior: image side mismatch");
  std::vector<double> out(offset_);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < n; ++c) out[r] += b_[r * n + c] * u[c];
  }
  return image_from(side_, out);
}

Linearization AffinePrior::linearize(const Image& u) const {
  Linearization lin{encode(u), apply(u), {}};
  lin.pullback = [this](const LatentCode* a, const Image* b) {
    const std::size_t n = side_ * side_;
    std::vector<double> g(n, 0.0);
    if (a) {
      if (a->levels.size() != 1 || a->levels[0].size() != code_size_) throw ShapeError("AffinePrior: cotangent");
      for (std::size_t r = 0; r < code_size_; ++r) {
        for (std::size_t c = 0; c < n; ++c) g[c] += a_[r * n + c] * a->levels[0].data[r];
      }
    }
    if (b) {
      if (b->size() != n) throw ShapeError("AffinePrior: cotangent");
      for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t c = 0; c < n; ++c) g[c] += b_[r * n + c] * (*b)[r];
      }
    }
    return image_from(side_, g);
  };
  return lin;
}

}  // namespace anett
