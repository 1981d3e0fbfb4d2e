#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <vector>

#include "anett/grid.hpp"
#include "anett/net.hpp"

namespace anett {

// E(u) and N(u) at one point together with the transposed Jacobians there.
struct Linearization {
  LatentCode code;
  Image output;
  // J_E^T a + J_N^T b; either cotangent may be null.
  std::function<Image(const LatentCode* a, const Image* b)> pullback;
};

struct PriorValue {
  LatentCode code;
  Image output;
};

// The pair (E, N) entering the regularizer.
class Prior {
 public:
  virtual ~Prior() = default;
  virtual LatentCode encode(const Image& u) const = 0;
  virtual Image apply(const Image& u) const = 0;
  // E(u) and N(u) sharing one encoder pass where possible.
  virtual PriorValue evaluate(const Image& u) const { return {encode(u), apply(u)}; }
  virtual Linearization linearize(const Image& u) const = 0;
};

// E = E_theta and N = U_kappa o D_theta o E_theta (kappa optional).
class NetworkPrior final : public Prior {
 public:
  NetworkPrior(std::shared_ptr<const NetworkParams> theta, std::shared_ptr<const NetworkParams> kappa = nullptr);

  LatentCode encode(const Image& u) const override { return anett::encode(u, *theta_); }
  Image apply(const Image& u) const override { return full_model(u, *theta_, kappa_.get()); }
  PriorValue evaluate(const Image& u) const override;
  Linearization linearize(const Image& u) const override;

  const NetworkParams& theta() const { return *theta_; }
  const NetworkParams* kappa() const { return kappa_.get(); }

 private:
  std::shared_ptr<const NetworkParams> theta_;
  std::shared_ptr<const NetworkParams> kappa_;
};

// E(u) = u as a single level with the given weight, N(u) = u.
class IdentityPrior final : public Prior {
 public:
  explicit IdentityPrior(double weight = 1.0) : weight_(weight) {}

  LatentCode encode(const Image& u) const override;
  Image apply(const Image& u) const override { return u; }
  Linearization linearize(const Image& u) const override;

 private:
  double weight_;
};

// E(u) = A u (one level, weight w), N(u) = B u + b, with A and B dense
// row-major matrices acting on the flattened image. Meant for small sides.
class AffinePrior final : public Prior {
 public:
  AffinePrior(std::size_t side, std::vector<double> a, std::size_t code_size, std::vector<double> b,
              std::vector<double> offset, double weight = 1.0);

  LatentCode encode(const Image& u) const override;
  Image apply(const Image& u) const override;
  Linearization linearize(const Image& u) const override;

 private:
  std::size_t side_;
  std::size_t code_size_;
  std::vector<double> a_;
  std::vector<double> b_;
  std::vector<double> offset_;
  double weight_;
};

}  // namespace anett
