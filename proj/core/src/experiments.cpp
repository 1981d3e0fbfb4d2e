#include "anett/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <thread>

#include "anett/grid_io.hpp"
#include "anett/regularizer.hpp"

namespace anett {

const char* scenario_name(ScenarioTag tag) {
  switch (tag) {
    case ScenarioTag::kNoiseFree:
      return "noise-free";
    case ScenarioTag::kNoisy:
      return "noisy-5pct";
    case ScenarioTag::kAdversarial:
      return "adversarial";
    case ScenarioTag::kConvergence:
      return "convergence-study";
  }
  return "?";
}

ScenarioTag parse_scenario(const std::string& name) {
  for (auto tag : {ScenarioTag::kNoiseFree, ScenarioTag::kNoisy, ScenarioTag::kAdversarial, ScenarioTag::kConvergence}) {
    if (name == scenario_name(tag)) return tag;
  }
  throw std::invalid_argument("unknown scenario '" + name +
                              "' (expected noise-free, noisy-5pct, adversarial or convergence-study)");
}

ScenarioConfig ScenarioConfig::defaults(ScenarioTag tag) {
  ScenarioConfig cfg;
  cfg.tag = tag;
  switch (tag) {
    case ScenarioTag::kNoiseFree:
      cfg.solver = SolverConfig::noise_free();
      break;
    case ScenarioTag::kNoisy:
    case ScenarioTag::kConvergence:
      cfg.solver = SolverConfig::noisy();
      cfg.noise_level = 0.05;
      break;
    case ScenarioTag::kAdversarial:
      cfg.solver = SolverConfig::adversarial();
      break;
  }
  return cfg;
}

const char* method_name(Method m) {
  switch (m) {
    case Method::kFbp:
      return "fbp";
    case Method::kPost:
      return "post";
    case Method::kAnett:
      return "anett";
  }
  return "?";
}

double ScenarioReport::median(Method m, double MetricRow::*field) const {
  std::vector<double> v;
  for (const auto& r : rows) {
    if (r.method == m) v.push_back(r.*field);
  }
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

Grid flat_region_mask(const Image& truth) {
  const std::size_t n = truth.side();
  Grid mask(n, n);
  for (std::size_t r = 2; r + 2 < n; ++r) {
    for (std::size_t c = 2; c + 2 < n; ++c) {
      const double v = truth(r, c);
      if (v <= 0.0) continue;
      bool flat = true;
      for (std::size_t i = r - 2; i <= r + 2 && flat; ++i) {
        for (std::size_t j = c - 2; j <= c + 2; ++j) {
          if (truth(i, j) != v) {
            flat = false;
            break;
          }
        }
      }
      if (flat) mask(r, c) = 1.0;
    }
  }
  return mask;
}

double masked_variance(const Image& u, const Image& truth, const Grid& mask) {
  require_same_shape(u, truth, "masked_variance");
  require_same_shape(u, mask, "masked_variance");
  double sum = 0.0;
  double sum2 = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    if (mask[i] == 0.0) continue;
    const double e = u[i] - truth[i];
    sum += e;
    sum2 += e * e;
    ++count;
  }
  if (count == 0) return std::numeric_limits<double>::quiet_NaN();
  const double m = sum / static_cast<double>(count);
  return std::max(sum2 / static_cast<double>(count) - m * m, 0.0);
}

Grid disc_region_mask(const Image& like, const Disc& disc) {
  return disc_mask(like, disc.radius + 2.0 * like.pixel_size(), disc.cx, disc.cy);
}

namespace {

constexpr std::uint64_t kScenarioNoiseStream = 21;
constexpr std::uint64_t kConvergenceNoiseStream = 22;

struct PhantomOutcome {
  std::vector<MetricRow> rows;
  std::optional<std::string> error;
};

std::string phantom_stem(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "phantom_%03zu", index);
  return buf;
}

PhantomOutcome solve_phantom(const ScenarioConfig& cfg, const RadonOperator& op, const Prior& prior,
                             const Image& phantom, std::size_t index) {
  PhantomOutcome out;
  Image truth = phantom;
  std::optional<Disc> disc;
  if (cfg.tag == ScenarioTag::kAdversarial) {
    disc = place_disc(phantom, cfg.disc_radius, cfg.disc_intensity);
    truth = add_disc(phantom, *disc);
  }
  Sinogram y = op.apply(truth);
  if (cfg.noise_level > 0.0) {
    Rng rng(derive_seed(cfg.seed, kScenarioNoiseStream, index));
    y = add_noise(y, cfg.noise_level, rng);
  }

  const Image u_fbp = op.pseudo_inverse(y);
  const Image u_post = prior.apply(u_fbp);
  SolveResult solved = admm_solve(y, op, prior, cfg.solver);

  const Grid flat = flat_region_mask(truth);
  const std::optional<Grid> disc_roi = disc ? std::optional<Grid>(disc_region_mask(truth, *disc)) : std::nullopt;
  const RegParams reg{1.0, cfg.solver.c, 0.0};

  auto row = [&](Method m, const Image& u) {
    MetricRow r;
    r.phantom = index;
    r.method = m;
    r.psnr = psnr(u, truth);
    r.data_residual = l2_norm(difference(op.apply(u), y));
    r.reg_value = reg_value(u, prior, reg);
    r.disc_psnr = disc_roi ? psnr(u, truth, *disc_roi, 1.0) : std::numeric_limits<double>::quiet_NaN();
    r.flat_variance = masked_variance(u, truth, flat);
    return r;
  };
  out.rows = {row(Method::kFbp, u_fbp), row(Method::kPost, u_post), row(Method::kAnett, solved.u)};

  if (!cfg.output_dir.empty()) {
    const auto stem = cfg.output_dir / phantom_stem(index);
    write_grid(truth, stem.string() + "_truth.grd");
    write_grid(y, stem.string() + "_data.grd");
    write_grid(u_fbp, stem.string() + "_fbp.grd");
    write_grid(u_post, stem.string() + "_post.grd");
    write_grid(solved.u, stem.string() + "_anett.grd");
    std::ofstream log(stem.string() + "_solver.log");
    write_history(log, solved.history);
  }
  return out;
}

}  // namespace

ScenarioReport run_scenario(const ScenarioConfig& cfg, const std::vector<Image>& phantoms, const Prior& prior) {
  if (cfg.tag == ScenarioTag::kConvergence) {
    throw std::invalid_argument("run_scenario: use convergence_study for the convergence-study tag");
  }
  cfg.solver.validate();
  cfg.geometry.validate();
  if (phantoms.empty()) throw std::invalid_argument("run_scenario: no phantoms");
  if (!cfg.output_dir.empty()) std::filesystem::create_directories(cfg.output_dir);

  const RadonOperator op(cfg.geometry, cfg.filter);
  std::vector<PhantomOutcome> outcomes(phantoms.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < phantoms.size(); i = next++) {
      try {
        outcomes[i] = solve_phantom(cfg, op, prior, phantoms[i], i);
      } catch (const std::exception& e) {
        outcomes[i].error = e.what();
      }
    }
  };
  const std::size_t n_threads = std::clamp<std::size_t>(cfg.threads, 1, phantoms.size());
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  ScenarioReport report;
  report.tag = cfg.tag;
  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    if (outcomes[i].error) {
      report.failures.push_back({i, *outcomes[i].error});
    } else {
      report.rows.insert(report.rows.end(), outcomes[i].rows.begin(), outcomes[i].rows.end());
    }
  }
  return report;
}

void write_metrics(std::ostream& out, const ScenarioReport& report) {
  out << "phantom method psnr data_residual reg_value disc_psnr flat_variance\n";
  const auto old = out.precision(10);
  for (const auto& r : report.rows) {
    out << r.phantom << ' ' << method_name(r.method) << ' ' << r.psnr << ' ' << r.data_residual << ' ' << r.reg_value
        << ' ' << r.disc_psnr << ' ' << r.flat_variance << '\n';
  }
  for (const auto& f : report.failures) out << "# failed phantom " << f.phantom << ": " << f.message << '\n';
  out.precision(old);
}

void ConvergenceConfig::validate() const {
  geometry.validate();
  solver.validate();
  if (!(delta0 > 0.0) || !(tau > 0.0) || !(smoothing > 0.0)) {
    throw std::invalid_argument("convergence study: delta0, tau and smoothing must be > 0");
  }
}

bool ConvergenceReport::errors_nonincreasing(double tol) const {
  for (std::size_t k = 1; k < legs.size(); ++k) {
    if (legs[k].error > (1.0 + tol) * legs[k - 1].error) return false;
  }
  return true;
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("loglog_slope: need >= 2 matching points");
  double mx = 0.0, my = 0.0;
  const double n = static_cast<double>(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0)) throw std::invalid_argument("loglog_slope: values must be positive");
    mx += std::log(x[i]) / n;
    my += std::log(y[i]) / n;
  }
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = std::log(x[i]) - mx;
    sxy += dx * (std::log(y[i]) - my);
    sxx += dx * dx;
  }
  return sxy / sxx;
}

ConvergenceReport convergence_study(const ConvergenceConfig& cfg, const Image& truth, const Prior& prior) {
  cfg.validate();
  const RadonOperator op(cfg.geometry, cfg.filter);
  const Sinogram y = op.apply(truth);
  const double scale = mean(y);

  Sinogram draw = cfg.geometry.make_sinogram();
  Rng rng(derive_seed(cfg.seed, kConvergenceNoiseStream, 0));
  std::normal_distribution<double> normal(0.0, 1.0);
  for (double& v : draw.values()) v = normal(rng);

  const RegParams reg{1.0, cfg.solver.c, cfg.smoothing};
  auto run_leg = [&](double delta, double alpha) {
    ConvergenceLeg leg;
    leg.delta = delta;
    leg.alpha = alpha;
    const Sinogram y_delta = axpy(delta * scale, draw, y);
    leg.noise_norm = l2_norm(difference(y_delta, y));
    SolverConfig sc = cfg.solver;
    sc.alpha = alpha;
    const SolveResult solved = admm_solve(y_delta, op, prior, sc);
    leg.error = l2_norm(difference(solved.u, truth));
    leg.bregman = bregman_distance(solved.u, truth, prior, reg);
    leg.data_residual = l2_norm(difference(op.apply(solved.u), y_delta));
    leg.fbp_residual = l2_norm(difference(op.apply(op.pseudo_inverse(y_delta)), y_delta));
    return leg;
  };

  ConvergenceReport report;
  std::vector<double> deltas, distances;
  for (std::size_t k = 0; k <= cfg.legs; ++k) {
    const double delta = std::ldexp(cfg.delta0, -static_cast<int>(k));
    report.legs.push_back(run_leg(delta, cfg.tau * delta));
    deltas.push_back(delta);
    distances.push_back(std::max(report.legs.back().bregman, std::numeric_limits<double>::min()));
  }
  report.slope = loglog_slope(deltas, distances);
  if (cfg.exact_leg) report.exact = run_leg(0.0, 0.5 * report.legs.back().alpha);
  return report;
}

void write_convergence(std::ostream& out, const ConvergenceReport& report) {
  out << "delta noise_norm alpha error bregman data_residual fbp_residual\n";
  const auto old = out.precision(10);
  auto line = [&](const ConvergenceLeg& l) {
    out << l.delta << ' ' << l.noise_norm << ' ' << l.alpha << ' ' << l.error << ' ' << l.bregman << ' '
        << l.data_residual << ' ' << l.fbp_residual << '\n';
  };
  for (const auto& l : report.legs) line(l);
  if (report.exact) line(*report.exact);
  out << "# slope " << report.slope << '\n';
  out.precision(old);
}

}  // namespace anett
