#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "anett/grid.hpp"
#include "anett/phantoms.hpp"
#include "anett/prior.hpp"
#include "anett/solver.hpp"
#include "anett/tomo.hpp"

namespace anett {

enum class ScenarioTag { kNoiseFree, kNoisy, kAdversarial, kConvergence };

// "noise-free", "noisy-5pct", "adversarial", "convergence-study".
const char* scenario_name(ScenarioTag tag);
ScenarioTag parse_scenario(const std::string& name);

struct ScenarioConfig {
  ScenarioTag tag = ScenarioTag::kNoiseFree;
  Geometry geometry;
  FbpFilter filter = FbpFilter::kRamLak;
  SolverConfig solver;
  double noise_level = 0.0;  // relative to mean(y)
  double disc_radius = 0.08;
  double disc_intensity = 1.0;
  std::uint64_t seed = 1;
  std::size_t threads = 1;
  // Per-phantom images and solver logs go here when set.
  std::filesystem::path output_dir;

  // Solver row and noise level for the tag.
  static ScenarioConfig defaults(ScenarioTag tag);
};

enum class Method { kFbp, kPost, kAnett };
const char* method_name(Method m);

struct MetricRow {
  std::size_t phantom = 0;
  Method method = Method::kFbp;
  double psnr = 0.0;
  double data_residual = 0.0;  // ||K u - y||
  double reg_value = 0.0;      // R_c(u), q = 1
  double disc_psnr = 0.0;      // NaN without a disc
  double flat_variance = 0.0;  // variance of u - truth over flat regions of truth
};

struct PhantomFailure {
  std::size_t phantom = 0;
  std::string message;
};

struct ScenarioReport {
  ScenarioTag tag = ScenarioTag::kNoiseFree;
  std::vector<MetricRow> rows;  // ordered by phantom, then method
  std::vector<PhantomFailure> failures;

  // Median of a column over phantoms for one method.
  double median(Method m, double MetricRow::*field) const;
};

// Pixels whose 5x5 neighborhood in truth is constant and nonzero.
Grid flat_region_mask(const Image& truth);
// Variance of (u - truth) over the nonzero entries of mask.
double masked_variance(const Image& u, const Image& truth, const Grid& mask);
// Pixels within radius + 2 pixel widths of the disc center.
Grid disc_region_mask(const Image& like, const Disc& disc);

// For each phantom: y = K u (+ disc, + noise), then FBP, post-processing
// N(K# y) and ADMM. A phantom whose solve throws is listed in failures.
ScenarioReport run_scenario(const ScenarioConfig& cfg, const std::vector<Image>& phantoms, const Prior& prior);

// Header row then one record per line, fixed column order.
void write_metrics(std::ostream& out, const ScenarioReport& report);

struct ConvergenceConfig {
  Geometry geometry;
  FbpFilter filter = FbpFilter::kRamLak;
  SolverConfig solver = SolverConfig::noisy();  // alpha is replaced per leg
  double delta0 = 0.05;  // relative noise level of leg 0
  std::size_t legs = 5;  // k = 0..legs
  double tau = 0.01;     // alpha_k = tau * delta_k
  double smoothing = 1e-6;
  std::uint64_t seed = 1;
  bool exact_leg = true;  // extra delta = 0 solve

  void validate() const;
};

struct ConvergenceLeg {
  double delta = 0.0;  // relative noise level
  double noise_norm = 0.0;
  double alpha = 0.0;
  double error = 0.0;     // ||u - u+||
  double bregman = 0.0;   // smoothed absolute Bregman distance
  double data_residual = 0.0;
  double fbp_residual = 0.0;  // ||K K# y - y||
};

struct ConvergenceReport {
  std::vector<ConvergenceLeg> legs;
  std::optional<ConvergenceLeg> exact;
  double slope = 0.0;  // least-squares slope of log bregman vs log delta

  // ||u_k - u+|| <= (1 + tol) ||u_{k-1} - u+|| for all k.
  bool errors_nonincreasing(double tol = 0.1) const;
};

ConvergenceReport convergence_study(const ConvergenceConfig& cfg, const Image& truth, const Prior& prior);

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

void write_convergence(std::ostream& out, const ConvergenceReport& report);

}  // namespace anett
