#pragma once

#include <cstddef>
#include <iosfwd>
#include <vector>

#include "anett/grid.hpp"
#include "anett/net.hpp"
#include "anett/prior.hpp"
#include "anett/tomo.hpp"

namespace anett {

struct SolverConfig {
  double alpha = 1e-5;
  double c = 1e2;
  double rho = 2.0;
  std::size_t outer = 50;
  std::size_t inner = 10;
  double stepsize = 0.5;
  double momentum = 0.8;
  // Halvings allowed per inner step before the u-update gives up.
  std::size_t max_halvings = 20;

  static SolverConfig noise_free();
  static SolverConfig noisy();
  static SolverConfig adversarial();

  void validate() const;
};

// sign(v) * max(|v| - t, 0).
double soft_threshold(double v, double t);

// Componentwise soft_threshold(E(u) + eta, alpha * w_l / rho); e_u = E(u).
LatentCode xi_update(const LatentCode& e_u, const LatentCode& eta, double alpha, double rho);

// Data of the u-subproblem
//   ||K u - y||^2 + (alpha c / 2) ||u - N(u)||^2 + (rho / 2) ||E(u) - xi + eta||^2.
struct USubproblem {
  const Sinogram& y;
  const ForwardOperator& op;
  const Prior& prior;
  const LatentCode& xi;
  const LatentCode& eta;
  double alpha_c;
  double rho;
};

double u_objective(const Image& u, const USubproblem& p);
Image u_gradient(const Image& u, const USubproblem& p);

struct UUpdateResult {
  Image u;
  LatentCode code;  // E(u)
  Image output;     // N(u)
  Sinogram projection;  // K u
  double objective_start = 0.0;
  double objective_end = 0.0;
  std::size_t steps = 0;  // accepted steps
};

// Heavy-ball descent from u0 with momentum reset on entry. A step that
// raises the objective is retried with half the stepsize (and without the
// momentum term); after max_halvings failures the best iterate is returned.
UUpdateResult u_update(const Image& u0, const USubproblem& p, std::size_t inner, double stepsize, double momentum,
                       std::size_t max_halvings = 20);

struct IterationRecord {
  std::size_t iteration = 0;
  double objective = 0.0;        // ||Ku - y||^2 + alpha R_c(u)
  double data_residual = 0.0;    // ||Ku - y||
  double primal_residual = 0.0;  // ||E(u) - xi||
};

struct SolveResult {
  Image u;
  Image initial;
  std::vector<IterationRecord> history;
};

// ADMM from u0 = N(K# y), xi0 = E(u0), eta0 = 0.
SolveResult admm_solve(const Sinogram& y, const ForwardOperator& op, const Prior& prior, const SolverConfig& cfg);

// One line per record: iteration objective data_residual primal_residual.
void write_history(std::ostream& out, const std::vector<IterationRecord>& history);

}  // namespace anett
