#include "anett/solver.hpp"

#include <cmath>
#include <ostream>
#include <stdexcept>
#include <string>

#include "anett/regularizer.hpp"

namespace anett {

SolverConfig SolverConfig::noise_free() { return {1e-5, 1e2, 2.0, 50, 10, 0.5}; }
SolverConfig SolverConfig::noisy() { return {5e-4, 1e1, 2.0, 100, 10, 0.1}; }
SolverConfig SolverConfig::adversarial() { return {1e-5, 1e1, 2.0, 50, 10, 0.5}; }

void SolverConfig::validate() const {
  if (!(alpha > 0.0) || !(c > 0.0) || !(rho > 0.0) || !(stepsize > 0.0)) {
    throw std::invalid_argument("SolverConfig: alpha, c, rho and stepsize must be > 0");
  }
  if (outer < 1 || inner < 1) throw std::invalid_argument("SolverConfig: outer and inner must be >= 1");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw std::invalid_argument("SolverConfig: momentum must be in [0, 1)");
}

double soft_threshold(double v, double t) {
  if (!(t >= 0.0)) throw std::invalid_argument("soft_threshold: negative threshold");
  if (v > t) return v - t;
  if (v < -t) return v + t;
  return 0.0;
}

LatentCode xi_update(const LatentCode& e_u, const LatentCode& eta, double alpha, double rho) {
  require_same_shape(e_u, eta, "xi_update");
  if (!(alpha >= 0.0) || !(rho > 0.0)) throw std::invalid_argument("xi_update: need alpha >= 0, rho > 0");
  LatentCode xi = e_u;
  for (std::size_t l = 0; l < xi.levels.size(); ++l) {
    const double t = alpha * e_u.weights[l] / rho;
    auto& out = xi.levels[l].data;
    const auto& shift = eta.levels[l].data;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = soft_threshold(out[i] + shift[i], t);
  }
  return xi;
}

namespace {

// Everything known about one evaluation point of the u-subproblem.
struct Point {
  Image u;
  Sinogram projection;
  Linearization lin;
  LatentCode coupling;  // E(u) - xi + eta
  double objective = 0.0;
};

Point evaluate(Image u, const USubproblem& p) {
  Point pt{std::move(u), {}, {}, {}, 0.0};
  pt.projection = p.op.apply(pt.u);
  pt.lin = p.prior.linearize(pt.u);
  pt.coupling = axpy(1.0, p.eta, axpy(-1.0, p.xi, pt.lin.code));
  const Sinogram misfit = difference(pt.projection, p.y);
  pt.objective = squared_norm(misfit) + 0.5 * p.alpha_c * squared_norm(difference(pt.u, pt.lin.output)) +
                 0.5 * p.rho * squared_norm(pt.coupling);
  return pt;
}

Image gradient(const Point& pt, const USubproblem& p) {
  Image g = scaled(2.0, p.op.adjoint(difference(pt.projection, p.y)));
  if (p.alpha_c != 0.0) g = axpy(1.0, grad_augmented(pt.u, pt.lin, p.alpha_c), g);
  if (p.rho != 0.0) {
    LatentCode cot = pt.coupling;
    for (auto& level : cot.levels) {
      for (double& v : level.data) v *= p.rho;
    }
    g = axpy(1.0, pt.lin.pullback(&cot, nullptr), g);
  }
  return g;
}

void check_subproblem(const USubproblem& p) {
  if (!(p.alpha_c >= 0.0) || !(p.rho >= 0.0)) throw std::invalid_argument("u-update: weights must be >= 0");
  require_same_shape(p.xi, p.eta, "u-update");
}

}  // namespace

double u_objective(const Image& u, const USubproblem& p) {
  check_subproblem(p);
  return evaluate(u, p).objective;
}

Image u_gradient(const Image& u, const USubproblem& p) {
  check_subproblem(p);
  return gradient(evaluate(u, p), p);
}

UUpdateResult u_update(const Image& u0, const USubproblem& p, std::size_t inner, double stepsize, double momentum,
                       std::size_t max_halvings) {
  check_subproblem(p);
  if (!(stepsize > 0.0) || inner < 1) throw std::invalid_argument("u-update: need stepsize > 0 and inner >= 1");

  Point cur = evaluate(u0, p);
  if (std::isnan(cur.objective)) throw DivergenceError("u-update: objective is NaN at the starting point");
  UUpdateResult res;
  res.objective_start = cur.objective;

  double step = stepsize;
  Image velocity;
  for (std::size_t it = 0; it < inner; ++it) {
    const Image g = gradient(cur, p);
    if (!g.all_finite()) throw DivergenceError("u-update: gradient is not finite");
    if (velocity.empty() && l2_norm(g) == 0.0) break;  // stationary
    Image direction = velocity.empty() ? g : axpy(momentum, velocity, g);

    bool accepted = false;
    for (std::size_t h = 0; h <= max_halvings; ++h) {
      Point trial = evaluate(axpy(-step, direction, cur.u), p);
      if (std::isfinite(trial.objective) && trial.objective <= cur.objective) {
        cur = std::move(trial);
        velocity = std::move(direction);
        accepted = true;
        break;
      }
      step *= 0.5;
      direction = g;
    }
    if (!accepted) break;
    ++res.steps;
  }

  res.objective_end = cur.objective;
  res.u = std::move(cur.u);
  res.code = std::move(cur.lin.code);
  res.output = std::move(cur.lin.output);
  res.projection = std::move(cur.projection);
  return res;
}

SolveResult admm_solve(const Sinogram& y, const ForwardOperator& op, const Prior& prior, const SolverConfig& cfg) {
  cfg.validate();
  if (!y.all_finite()) throw std::invalid_argument("admm_solve: data contains NaN/Inf");

  SolveResult out;
  out.initial = prior.apply(op.pseudo_inverse(y));
  Image u = out.initial;
  LatentCode xi = prior.encode(u);
  LatentCode eta = xi.zeros_like();

  out.history.reserve(cfg.outer);
  for (std::size_t k = 1; k <= cfg.outer; ++k) {
    const USubproblem sub{y, op, prior, xi, eta, cfg.alpha * cfg.c, cfg.rho};
    UUpdateResult upd = u_update(u, sub, cfg.inner, cfg.stepsize, cfg.momentum, cfg.max_halvings);
    u = std::move(upd.u);

    xi = xi_update(upd.code, eta, cfg.alpha, cfg.rho);
    const LatentCode gap = axpy(-1.0, xi, upd.code);
    eta = axpy(1.0, gap, eta);

    IterationRecord rec;
    rec.iteration = k;
    const double misfit = squared_norm(difference(upd.projection, y));
    const double reg = weighted_lq(upd.code, 1.0) + 0.5 * cfg.c * squared_norm(difference(u, upd.output));
    rec.objective = misfit + cfg.alpha * reg;
    rec.data_residual = std::sqrt(misfit);
    rec.primal_residual = std::sqrt(squared_norm(gap));
    if (!std::isfinite(rec.objective)) {
      throw DivergenceError("admm_solve: objective not finite at iteration " + std::to_string(k));
    }
    out.history.push_back(rec);
  }
  out.u = std::move(u);
  return out;
}

void write_history(std::ostream& out, const std::vector<IterationRecord>& history) {
  out << "iteration objective data_residual primal_residual\n";
  const auto old = out.precision(17);
  for (const auto& r : history) {
    out << r.iteration << ' ' << r.objective << ' ' << r.data_residual << ' ' << r.primal_residual << '\n';
  }
  out.precision(old);
}

}  // namespace anett
