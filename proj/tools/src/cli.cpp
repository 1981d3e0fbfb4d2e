#include "cli.hpp"

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "anett/experiments.hpp"
#include "anett/grid_io.hpp"
#include "anett/net.hpp"
#include "anett/phantoms.hpp"
#include "anett/prior.hpp"
#include "anett/regularizer.hpp"
#include "anett/solver.hpp"
#include "anett/tomo.hpp"
#include "anett/training.hpp"
#include "config_args.hpp"

namespace fs = std::filesystem;

namespace anett::cli {

namespace {

// Default output location: $ANETT_OUTPUT_DIR if set, else the working directory.
fs::path output_root() {
  const char* env = std::getenv("ANETT_OUTPUT_DIR");
  return env && *env ? fs::path(env) : fs::current_path();
}

fs::path or_default(const std::string& given, const fs::path& fallback) {
  return given.empty() ? output_root() / fallback : fs::path(given);
}

std::vector<std::size_t> parse_channels(const std::string& text) {
  std::vector<std::size_t> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t pos = 0;
    const unsigned long v = std::stoul(item, &pos);
    if (pos != item.size() || v == 0) throw std::invalid_argument("bad channel list '" + text + "'");
    out.push_back(v);
  }
  if (out.empty()) throw std::invalid_argument("empty channel list");
  return out;
}

fs::path manifest_path(const std::string& data) {
  const fs::path p(data);
  return fs::is_directory(p) ? p / "manifest.txt" : p;
}

void write_file(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw std::runtime_error("cannot write " + path.string());
}

// Optional overrides of the solver row chosen by --scenario.
struct SolverFlags {
  std::optional<double> alpha, c, rho, stepsize, momentum;
  std::optional<std::size_t> outer, inner;

  void attach(CLI::App* app) {
    app->add_option("--alpha", alpha, "Regularization weight");
    app->add_option("--c", c, "Augmentation weight");
    app->add_option("--rho", rho, "ADMM penalty");
    app->add_option("--outer", outer, "ADMM iterations");
    app->add_option("--inner", inner, "Max gradient steps per u-update");
    app->add_option("--stepsize", stepsize, "u-update step");
    app->add_option("--momentum", momentum, "Heavy-ball momentum");
  }

  SolverConfig apply(SolverConfig cfg) const {
    if (alpha) cfg.alpha = *alpha;
    if (c) cfg.c = *c;
    if (rho) cfg.rho = *rho;
    if (outer) cfg.outer = *outer;
    if (inner) cfg.inner = *inner;
    if (stepsize) cfg.stepsize = *stepsize;
    if (momentum) cfg.momentum = *momentum;
    return cfg;
  }
};

struct GeometryFlags {
  std::size_t angles = 60;
  std::size_t detectors = 0;
  std::string filter = "ram-lak";

  void attach(CLI::App* app) {
    app->add_option("--angles", angles, "Number of projection angles")->capture_default_str();
    app->add_option("--detectors", detectors, "Detector bins (0: ceil(1.5 n))");
    app->add_option("--filter", filter, "FBP filter: ram-lak or hann")->capture_default_str();
  }

  Geometry geometry(std::size_t side) const {
    Geometry g = Geometry::for_image(side, angles);
    if (detectors) g.n_detectors = detectors;
    g.validate();
    return g;
  }
};

std::shared_ptr<const NetworkParams> load_model(const std::string& path, NetKind kind) {
  if (path.empty()) throw std::invalid_argument("a model path is required");
  return std::make_shared<const NetworkParams>(load_params(path, kind));
}

std::unique_ptr<Prior> network_prior(const std::string& theta, const std::string& kappa) {
  auto t = load_model(theta, NetKind::kAutoencoder);
  auto k = kappa.empty() ? nullptr : load_model(kappa, NetKind::kAdapter);
  return std::make_unique<NetworkPrior>(t, k);
}

void print_summary(std::ostream& out, const NetworkParams& p) {
  out << "arch " << p.arch.to_string() << '\n';
  out << "seed " << p.seed << '\n';
  out << "arrays " << p.arrays.size() << '\n';
  out << "parameters " << p.count() << '\n';
  out << "l2 " << std::sqrt(p.squared_norm()) << '\n';
}

void print_solver(std::ostream& out, const SolverConfig& s) {
  out << "alpha " << s.alpha << "\nc " << s.c << "\nrho " << s.rho << "\nouter " << s.outer << "\ninner " << s.inner
      << "\nstepsize " << s.stepsize << "\nmomentum " << s.momentum << '\n';
}

}  // namespace

int run(int argc, char** argv) { return run(argc, argv, std::cout, std::cerr); }

int run(int argc, char** argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Sparse aNETT reconstruction for sparse-view CT", "anett"};
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app.require_subcommand(1);
  app.fallthrough(false);

  auto add_config = [](CLI::App* sub) {
    // Consumed before parsing by expand_config; registered for --help.
    sub->add_option("--config", "Flat key=value file with defaults for any flag");
  };

  // make-data ---------------------------------------------------------------
  auto* make_data = app.add_subcommand("make-data", "Generate the phantom dataset and its manifest");
  std::string md_out;
  std::uint64_t md_seed = 1;
  DatasetCounts md_counts;
  std::size_t md_side = 128;
  make_data->add_option("--out", md_out, "Output directory (default $ANETT_OUTPUT_DIR/data)");
  make_data->add_option("--seed", md_seed, "Master seed")->capture_default_str();
  make_data->add_option("--train", md_counts.train, "Training images")->capture_default_str();
  make_data->add_option("--val", md_counts.val, "Validation images")->capture_default_str();
  make_data->add_option("--test", md_counts.test, "Test images")->capture_default_str();
  make_data->add_option("--size", md_side, "Image side in pixels")->capture_default_str();
  add_config(make_data);

  // train-ae ----------------------------------------------------------------
  auto* train_ae = app.add_subcommand("train-ae", "Train the sparse denoising autoencoder");
  std::string ae_data, ae_out, ae_log, ae_channels = "8,16,32";
  TrainConfig ae_cfg;
  std::uint64_t ae_init_seed = 7;
  train_ae->add_option("--data", ae_data, "Dataset manifest or directory")->required();
  train_ae->add_option("--out", ae_out, "Parameter file (default $ANETT_OUTPUT_DIR/theta.params)");
  train_ae->add_option("--log", ae_log, "Training log (default <out>.log)");
  train_ae->add_option("--epochs", ae_cfg.epochs)->capture_default_str();
  train_ae->add_option("--batch", ae_cfg.batch_size)->capture_default_str();
  train_ae->add_option("--lr", ae_cfg.learning_rate)->capture_default_str();
  train_ae->add_option("--eta", ae_cfg.eta, "l1 weight on the code")->capture_default_str();
  train_ae->add_option("--beta", ae_cfg.beta, "Weight decay")->capture_default_str();
  train_ae->add_option("--max-noise", ae_cfg.max_noise, "Upper bound of p")->capture_default_str();
  train_ae->add_option("--perturbation", ae_cfg.perturbation)->capture_default_str();
  train_ae->add_option("--seed", ae_cfg.seed, "Training seed")->capture_default_str();
  train_ae->add_option("--init-seed", ae_init_seed, "Initialization seed")->capture_default_str();
  train_ae->add_option("--channels", ae_channels, "Encoder channels")->capture_default_str();
  add_config(train_ae);

  // train-adapter -----------------------------------------------------------
  auto* train_ad = app.add_subcommand("train-adapter", "Train the operator adaptation network");
  std::string ad_data, ad_theta, ad_out, ad_log, ad_channels = "8,16";
  TrainConfig ad_cfg;
  std::uint64_t ad_init_seed = 11;
  GeometryFlags ad_geo;
  train_ad->add_option("--data", ad_data, "Dataset manifest or directory")->required();
  train_ad->add_option("--theta", ad_theta, "Trained autoencoder")->required();
  train_ad->add_option("--out", ad_out, "Parameter file (default $ANETT_OUTPUT_DIR/kappa.params)");
  train_ad->add_option("--log", ad_log, "Training log (default <out>.log)");
  train_ad->add_option("--epochs", ad_cfg.epochs)->capture_default_str();
  train_ad->add_option("--batch", ad_cfg.batch_size)->capture_default_str();
  train_ad->add_option("--lr", ad_cfg.learning_rate)->capture_default_str();
  train_ad->add_option("--gamma", ad_cfg.gamma, "Weight decay")->capture_default_str();
  train_ad->add_option("--seed", ad_cfg.seed)->capture_default_str();
  train_ad->add_option("--init-seed", ad_init_seed)->capture_default_str();
  train_ad->add_option("--channels", ad_channels)->capture_default_str();
  ad_geo.attach(train_ad);
  add_config(train_ad);

  // reconstruct -------------------------------------------------------------
  auto* recon = app.add_subcommand("reconstruct", "Reconstruct one sinogram with ADMM");
  std::string rc_in, rc_out, rc_log, rc_theta, rc_kappa, rc_scenario = "noise-free", rc_operator = "radon",
                                                          rc_prior = "network";
  std::string rc_filter = "ram-lak";
  std::size_t rc_size = 128;
  SolverFlags rc_solver;
  recon->add_option("--sinogram", rc_in, "Input data grid file")->required();
  recon->add_option("--out", rc_out, "Output image grid file")->required();
  recon->add_option("--log", rc_log, "Per-iteration solver log");
  recon->add_option("--theta", rc_theta, "Trained autoencoder");
  recon->add_option("--kappa", rc_kappa, "Trained adapter");
  recon->add_option("--scenario", rc_scenario, "Scenario whose solver defaults to start from")->capture_default_str();
  recon->add_option("--operator", rc_operator, "radon or identity")->capture_default_str();
  recon->add_option("--prior", rc_prior, "network or identity")->capture_default_str();
  recon->add_option("--size", rc_size, "Image side; angles and detectors come from the data")->capture_default_str();
  recon->add_option("--filter", rc_filter, "FBP filter for the initial guess")->capture_default_str();
  rc_solver.attach(recon);
  add_config(recon);

  // benchmark ---------------------------------------------------------------
  auto* bench = app.add_subcommand("benchmark", "Run a scenario over the test phantoms");
  std::string bm_scenario, bm_data, bm_theta, bm_kappa, bm_out;
  std::size_t bm_count = 0, bm_threads = 1;
  std::uint64_t bm_seed = 1;
  std::optional<double> bm_noise;
  bool bm_no_images = false;
  GeometryFlags bm_geo;
  SolverFlags bm_solver;
  bench->add_option("--scenario", bm_scenario, "noise-free, noisy-5pct or adversarial")->required();
  bench->add_option("--theta", bm_theta, "Trained autoencoder")->required();
  bench->add_option("--kappa", bm_kappa, "Trained adapter");
  bench->add_option("--data", bm_data, "Dataset manifest or directory")->required();
  bench->add_option("--out", bm_out, "Output directory (default $ANETT_OUTPUT_DIR/<scenario>)");
  bench->add_option("--phantoms", bm_count, "Number of test phantoms (0: all)")->capture_default_str();
  bench->add_option("--threads", bm_threads, "Concurrent solves")->capture_default_str();
  bench->add_option("--seed", bm_seed, "Noise seed")->capture_default_str();
  bench->add_option("--noise", bm_noise, "Relative noise level (overrides the scenario)");
  bench->add_flag("--no-images", bm_no_images, "Only write the metric table");
  bm_geo.attach(bench);
  bm_solver.attach(bench);
  add_config(bench);

  // convergence-study -------------------------------------------------------
  auto* conv = app.add_subcommand("convergence-study", "Error and Bregman distance for shrinking noise");
  std::string cs_data, cs_theta, cs_kappa, cs_out;
  std::size_t cs_phantom = 0;
  ConvergenceConfig cs_cfg;
  GeometryFlags cs_geo;
  SolverFlags cs_solver;
  conv->add_option("--theta", cs_theta, "Trained autoencoder")->required();
  conv->add_option("--kappa", cs_kappa, "Trained adapter");
  conv->add_option("--data", cs_data, "Dataset manifest or directory")->required();
  conv->add_option("--out", cs_out, "Report file (default $ANETT_OUTPUT_DIR/convergence.txt)");
  conv->add_option("--phantom", cs_phantom, "Test phantom index")->capture_default_str();
  conv->add_option("--legs", cs_cfg.legs, "Halvings of delta")->capture_default_str();
  conv->add_option("--delta0", cs_cfg.delta0, "Relative noise of the first leg")->capture_default_str();
  conv->add_option("--tau", cs_cfg.tau, "alpha = tau * delta")->capture_default_str();
  conv->add_option("--smoothing", cs_cfg.smoothing, "l1 smoothing for the Bregman distance")->capture_default_str();
  conv->add_option("--seed", cs_cfg.seed)->capture_default_str();
  cs_geo.attach(conv);
  cs_solver.attach(conv);
  add_config(conv);

  // inspect -----------------------------------------------------------------
  auto* inspect = app.add_subcommand("inspect", "Print model, grid, manifest or scenario summaries");
  std::string in_model, in_grid, in_manifest, in_scenario;
  inspect->add_option("--model", in_model, "Parameter file");
  inspect->add_option("--grid", in_grid, "Grid file");
  inspect->add_option("--manifest", in_manifest, "Dataset manifest");
  inspect->add_option("--scenario", in_scenario, "Scenario whose defaults to print");
  add_config(inspect);

  if (argc < 2) {
    err << app.help();
    return 2;
  }

  try {
    std::vector<std::string> args(argv, argv + argc);
    args = expand_config(args);
    std::vector<char*> ptrs;
    for (auto& a : args) ptrs.push_back(a.data());
    app.parse(static_cast<int>(ptrs.size()), ptrs.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    if (code != 0) err << app.help();
    return code;
  } catch (const std::exception& e) {
    err << "anett: error: " << e.what() << '\n';
    return 1;
  }

  try {
    if (*make_data) {
      const fs::path dir = or_default(md_out, "data");
      const Dataset d = make_dataset(md_seed, md_counts, md_side);
      const auto entries = write_dataset(d, dir);
      out << "wrote " << entries.size() << " images to " << dir.string() << '\n';
    } else if (*train_ae) {
      const auto manifest = manifest_path(ae_data);
      const auto train = load_split(manifest, Split::kTrain);
      const auto val = load_split(manifest, Split::kVal);
      const fs::path model = or_default(ae_out, "theta.params");
      const NetworkParams init =
          NetworkParams::initialize(Architecture::autoencoder(parse_channels(ae_channels)), ae_init_seed);
      const TrainResult res = train_autoencoder(train, val, init, ae_cfg, [&](const EpochRecord& r) {
        out << "epoch " << r.epoch << " train " << r.train_loss << " val " << r.val_loss << std::endl;
      });
      save_params(res.best, model);
      std::ostringstream log;
      write_train_log(log, res.log);
      write_file(ae_log.empty() ? fs::path(model.string() + ".log") : fs::path(ae_log), log.str());
      out << "best epoch " << res.best_epoch << " val " << res.best_val_loss << '\n';
    } else if (*train_ad) {
      const auto manifest = manifest_path(ad_data);
      const auto theta = load_model(ad_theta, NetKind::kAutoencoder);
      const auto train_images = load_split(manifest, Split::kTrain);
      const auto val_images = load_split(manifest, Split::kVal);
      if (train_images.empty() || val_images.empty()) throw std::invalid_argument("dataset has an empty split");
      const RadonOperator op(ad_geo.geometry(train_images.front().side()), parse_fbp_filter(ad_geo.filter));
      const auto train = make_adapter_dataset(train_images, op);
      const auto val = make_adapter_dataset(val_images, op);
      const fs::path model = or_default(ad_out, "kappa.params");
      const NetworkParams init =
          NetworkParams::initialize(Architecture::adapter(parse_channels(ad_channels)), ad_init_seed);
      const TrainResult res = train_adapter(train, val, *theta, init, ad_cfg, [&](const EpochRecord& r) {
        out << "epoch " << r.epoch << " train " << r.train_loss << " val " << r.val_loss << std::endl;
      });
      save_params(res.best, model);
      std::ostringstream log;
      write_train_log(log, res.log);
      write_file(ad_log.empty() ? fs::path(model.string() + ".log") : fs::path(ad_log), log.str());
      out << "best epoch " << res.best_epoch << " val " << res.best_val_loss << '\n';
    } else if (*recon) {
      const SolverConfig cfg = rc_solver.apply(ScenarioConfig::defaults(parse_scenario(rc_scenario)).solver);
      std::unique_ptr<Prior> prior;
      if (rc_prior == "identity") {
        prior = std::make_unique<IdentityPrior>(1.0);
      } else if (rc_prior == "network") {
        prior = network_prior(rc_theta, rc_kappa);
      } else {
        throw std::invalid_argument("unknown prior '" + rc_prior + "' (expected network or identity)");
      }
      const GridFile in = read_grid(rc_in);
      std::unique_ptr<ForwardOperator> op;
      Sinogram y;
      if (rc_operator == "identity") {
        y = Sinogram(in.grid, 1.0);
        op = std::make_unique<IdentityOperator>(in.grid.rows());
      } else if (rc_operator == "radon") {
        const double half_width = in.kind == GridKind::kSinogram ? in.extent[3] : 1.5;
        y = Sinogram(in.grid, half_width);
        const Geometry g{rc_size, y.n_angles(), y.n_detectors(), half_width};
        g.validate();
        op = std::make_unique<RadonOperator>(g, parse_fbp_filter(rc_filter));
      } else {
        throw std::invalid_argument("unknown operator '" + rc_operator + "' (expected radon or identity)");
      }
      const SolveResult res = admm_solve(y, *op, *prior, cfg);
      write_grid(res.u, rc_out);
      if (!rc_log.empty()) {
        std::ostringstream log;
        write_history(log, res.history);
        write_file(rc_log, log.str());
      }
      const auto& last = res.history.back();
      out << "objective " << last.objective << " data_residual " << last.data_residual << " primal_residual "
          << last.primal_residual << '\n';
    } else if (*bench) {
      ScenarioConfig cfg = ScenarioConfig::defaults(parse_scenario(bm_scenario));
      const auto prior = network_prior(bm_theta, bm_kappa);
      auto phantoms = load_split(manifest_path(bm_data), Split::kTest);
      if (phantoms.empty()) throw std::invalid_argument("dataset has no test images");
      if (bm_count && bm_count < phantoms.size()) phantoms.resize(bm_count);
      cfg.geometry = bm_geo.geometry(phantoms.front().side());
      cfg.filter = parse_fbp_filter(bm_geo.filter);
      cfg.solver = bm_solver.apply(cfg.solver);
      if (bm_noise) cfg.noise_level = *bm_noise;
      cfg.seed = bm_seed;
      cfg.threads = bm_threads;
      const fs::path dir = or_default(bm_out, bm_scenario);
      if (!bm_no_images) cfg.output_dir = dir;
      const ScenarioReport report = run_scenario(cfg, phantoms, *prior);
      std::ostringstream table;
      write_metrics(table, report);
      write_file(dir / "metrics.txt", table.str());
      for (Method m : {Method::kFbp, Method::kPost, Method::kAnett}) {
        out << method_name(m) << " median psnr " << report.median(m, &MetricRow::psnr) << " data_residual "
            << report.median(m, &MetricRow::data_residual) << '\n';
      }
      for (const auto& f : report.failures) err << "phantom " << f.phantom << " failed: " << f.message << '\n';
      if (!report.failures.empty()) return 3;
    } else if (*conv) {
      const auto prior = network_prior(cs_theta, cs_kappa);
      const auto phantoms = load_split(manifest_path(cs_data), Split::kTest);
      if (cs_phantom >= phantoms.size()) throw std::invalid_argument("--phantom is out of range");
      cs_cfg.geometry = cs_geo.geometry(phantoms[cs_phantom].side());
      cs_cfg.filter = parse_fbp_filter(cs_geo.filter);
      cs_cfg.solver = cs_solver.apply(cs_cfg.solver);
      const ConvergenceReport report = convergence_study(cs_cfg, phantoms[cs_phantom], *prior);
      std::ostringstream text;
      write_convergence(text, report);
      write_file(or_default(cs_out, "convergence.txt"), text.str());
      out << text.str();
    } else if (*inspect) {
      bool any = false;
      if (!in_model.empty()) {
        print_summary(out, load_params(in_model));
        any = true;
      }
      if (!in_grid.empty()) {
        const GridFile g = read_grid(in_grid);
        out << "shape " << g.grid.rows() << ' ' << g.grid.cols() << "\nmean " << mean(g.grid) << "\nl2 "
            << l2_norm(g.grid) << '\n';
        any = true;
      }
      if (!in_manifest.empty()) {
        std::size_t counts[3] = {0, 0, 0};
        for (const auto& e : read_manifest(in_manifest)) ++counts[static_cast<int>(e.split)];
        out << "train " << counts[0] << "\nval " << counts[1] << "\ntest " << counts[2] << '\n';
        any = true;
      }
      if (!in_scenario.empty()) {
        const ScenarioConfig cfg = ScenarioConfig::defaults(parse_scenario(in_scenario));
        out << "scenario " << scenario_name(cfg.tag) << "\nnoise " << cfg.noise_level << '\n';
        print_solver(out, cfg.solver);
        any = true;
      }
      if (!any) throw std::invalid_argument("inspect: give --model, --grid, --manifest or --scenario");
    }
  } catch (const std::exception& e) {
    err << "anett: error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

}  // namespace anett::cli
