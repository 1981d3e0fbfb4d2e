#include "anett/training.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <stdexcept>
#include <string>

namespace anett {

void TrainConfig::validate() const {
  if (!(eta >= 0.0) || !(beta >= 0.0) || !(gamma >= 0.0)) {
    throw std::invalid_argument("TrainConfig: eta, beta, gamma must be >= 0");
  }
  if (epochs < 1) throw std::invalid_argument("TrainConfig: epochs must be >= 1");
  if (batch_size < 1) throw std::invalid_argument("TrainConfig: batch_size must be >= 1");
  if (!(learning_rate > 0.0)) throw std::invalid_argument("TrainConfig: learning_rate must be > 0");
  if (perturbation != "gaussian-mean") {
    throw std::invalid_argument("TrainConfig: unknown perturbation scheme '" + perturbation + "'");
  }
  if (!(max_noise >= 0.0)) throw std::invalid_argument("TrainConfig: max_noise must be >= 0");
}

Image perturb_with_fraction(const Image& u, double p, Rng& rng) {
  const double sd = p * mean(u);
  if (sd == 0.0) return u;
  std::normal_distribution<double> normal(0.0, std::abs(sd));
  Image out = u;
  for (double& v : out.values()) v += normal(rng);
  return out;
}

Image perturb(const Image& u, Rng& rng, double max_fraction) {
  const double p = std::uniform_real_distribution<double>(0.0, max_fraction)(rng);
  return perturb_with_fraction(u, p, rng);
}

namespace {

// eta * w_l * sign(xi) per entry, 0 at exact zeros.
LatentCode l1_subgradient(const LatentCode& code, double eta) {
  LatentCode g = code;
  for (std::size_t l = 0; l < g.levels.size(); ++l) {
    const double s = eta * code.weights[l];
    for (double& v : g.levels[l].data) v = v > 0.0 ? s : (v < 0.0 ? -s : 0.0);
  }
  return g;
}

double weighted_l1(const LatentCode& code) {
  double total = 0.0;
  for (std::size_t l = 0; l < code.levels.size(); ++l) {
    double s = 0.0;
    for (double v : code.levels[l].data) s += std::abs(v);
    total += code.weights[l] * s;
  }
  return total;
}

void add_decay(ParamGrads& grads, const NetworkParams& p, double weight) {
  if (weight == 0.0) return;
  for (std::size_t a = 0; a < grads.size(); ++a) {
    for (std::size_t i = 0; i < grads[a].size(); ++i) grads[a][i] += 2.0 * weight * p.arrays[a][i];
  }
}

}  // namespace

LossEval ae_loss_at(const Image& u, const Image& x, const NetworkParams& theta, double eta, double beta,
                    bool want_grads) {
  require_same_shape(u, x, "ae_loss");
  LossEval out;
  const ModelTape tape = trace_model(x, theta, nullptr);
  const Image residual = difference(tape.output(), u);
  out.terms.reconstruction = squared_norm(residual);
  out.terms.sparsity = eta * weighted_l1(tape.code());
  out.terms.decay = beta * theta.squared_norm();
  if (want_grads) {
    const Image out_cot = scaled(2.0, residual);
    const LatentCode code_cot = l1_subgradient(tape.code(), eta);
    out.grads = backprop_model(tape, theta, nullptr, &code_cot, &out_cot, {false, true}).theta;
    add_decay(out.grads, theta, beta);
  }
  return out;
}

LossEval ae_loss(const Image& u, const NetworkParams& theta, const TrainConfig& cfg, Rng& rng, bool want_grads) {
  return ae_loss_at(u, perturb(u, rng, cfg.max_noise), theta, cfg.eta, cfg.beta, want_grads);
}

LossEval adapter_loss_at(const Image& u, const Image& a, const NetworkParams& kappa, double gamma,
                         bool want_grads) {
  require_same_shape(u, a, "adapter_loss");
  LossEval out;
  const AdapterTape tape = trace_adapt(a, kappa);
  const Image residual = difference(tape.output, u);
  out.terms.reconstruction = squared_norm(residual);
  out.terms.decay = gamma * kappa.squared_norm();
  if (want_grads) {
    out.grads = backprop_adapt(tape, kappa, scaled(2.0, residual), {false, true}).params;
    add_decay(out.grads, kappa, gamma);
  }
  return out;
}

namespace {

constexpr std::uint64_t kShuffleStream = 11;
constexpr std::uint64_t kNoiseStream = 12;
constexpr std::uint64_t kValStream = 13;

// Per-example loss; `epoch_seed` and the example index fix any randomness.
using ExampleLoss = std::function<LossEval(const NetworkParams&, std::size_t index, std::uint64_t seed, bool grads)>;

void check_finite(double v, const char* what, std::size_t epoch) {
  if (!std::isfinite(v)) {
    throw DivergenceError(std::string(what) + " loss is not finite at epoch " + std::to_string(epoch));
  }
}

TrainResult run_training(std::size_t n_train, std::size_t n_val, const NetworkParams& init, const TrainConfig& cfg,
                         const ExampleLoss& train_loss, const ExampleLoss& val_loss, const EpochCallback& on_epoch) {
  if (n_train == 0 || n_val == 0) throw std::invalid_argument("training: empty dataset");
  init.validate();

  auto validate = [&](const NetworkParams& p) {
    double s = 0.0;
    for (std::size_t i = 0; i < n_val; ++i) {
      s += val_loss(p, i, derive_seed(cfg.seed, kValStream, i), false).terms.total();
    }
    return s / static_cast<double>(n_val);
  };

  NetworkParams params = init;
  AdamState state = AdamState::for_params(params);
  TrainResult res;

  double initial_train = 0.0;
  for (std::size_t i = 0; i < n_train; ++i) {
    initial_train += train_loss(params, i, derive_seed(derive_seed(cfg.seed, kNoiseStream, 0), 0, i), false)
                         .terms.total();
  }
  EpochRecord rec0{0, initial_train / static_cast<double>(n_train), validate(params)};
  check_finite(rec0.val_loss, "validation", 0);
  res.log.push_back(rec0);
  res.best = params;
  res.best_val_loss = rec0.val_loss;
  if (on_epoch) on_epoch(rec0);

  std::vector<std::size_t> order(n_train);
  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), 0);
    Rng shuffle_rng(derive_seed(cfg.seed, kShuffleStream, epoch));
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    const std::uint64_t epoch_seed = derive_seed(cfg.seed, kNoiseStream, epoch);

    double total = 0.0;
    for (std::size_t start = 0; start < n_train; start += cfg.batch_size) {
      const std::size_t stop = std::min(start + cfg.batch_size, n_train);
      const double inv = 1.0 / static_cast<double>(stop - start);
      ParamGrads grads = zero_grads(params);
      for (std::size_t k = start; k < stop; ++k) {
        const std::size_t i = order[k];
        LossEval ev = train_loss(params, i, derive_seed(epoch_seed, 0, i), true);
        check_finite(ev.terms.total(), "training", epoch);
        total += ev.terms.total();
        add_scaled(grads, inv, ev.grads);
      }
      adam_step(params, grads, state, cfg.learning_rate);
    }
    if (!params.all_finite()) throw DivergenceError("training: parameters not finite at epoch " + std::to_string(epoch));

    EpochRecord rec{epoch, total / static_cast<double>(n_train), validate(params)};
    check_finite(rec.val_loss, "validation", epoch);
    res.log.push_back(rec);
    if (rec.val_loss < res.best_val_loss) {
      res.best_val_loss = rec.val_loss;
      res.best_epoch = epoch;
      res.best = params;
    }
    if (on_epoch) on_epoch(rec);
  }
  return res;
}

}  // namespace

TrainResult train_autoencoder(const std::vector<Image>& train, const std::vector<Image>& val,
                              const NetworkParams& init, const TrainConfig& cfg, const EpochCallback& on_epoch) {
  cfg.validate();
  if (init.arch.kind != NetKind::kAutoencoder) throw ShapeError("train_autoencoder: parameters are not an autoencoder");
  auto loss_on = [&cfg](const std::vector<Image>& set) {
    return [&cfg, images = &set](const NetworkParams& p, std::size_t i, std::uint64_t seed, bool grads) {
      Rng rng(seed);
      return ae_loss((*images)[i], p, cfg, rng, grads);
    };
  };
  return run_training(train.size(), val.size(), init, cfg, loss_on(train), loss_on(val), on_epoch);
}

std::vector<AdapterPair> make_adapter_dataset(const std::vector<Image>& images, const ForwardOperator& op) {
  if (images.empty()) throw std::invalid_argument("make_adapter_dataset: no images");
  std::vector<AdapterPair> pairs;
  pairs.reserve(2 * images.size());
  for (const Image& u : images) {
    if (u.side() != op.image_side()) throw ShapeError("make_adapter_dataset: image side does not match geometry");
    pairs.push_back({op.pseudo_inverse(op.apply(u)), u});
  }
  for (const Image& u : images) pairs.push_back({u, u});
  return pairs;
}

TrainResult train_adapter(const std::vector<AdapterPair>& train, const std::vector<AdapterPair>& val,
                          const NetworkParams& theta, const NetworkParams& init, const TrainConfig& cfg,
                          const EpochCallback& on_epoch) {
  cfg.validate();
  if (theta.arch.kind != NetKind::kAutoencoder) throw ShapeError("train_adapter: theta is not an autoencoder");
  if (init.arch.kind != NetKind::kAdapter) throw ShapeError("train_adapter: parameters are not an adapter");

  // theta is frozen, so N^a(v) is computed once.
  auto precompute = [&theta](const std::vector<AdapterPair>& set) {
    std::vector<Image> out;
    out.reserve(set.size());
    for (const auto& p : set) out.push_back(autoencode(p.input, theta));
    return out;
  };
  const std::vector<Image> train_in = precompute(train);
  const std::vector<Image> val_in = precompute(val);

  auto loss_on = [&cfg](const std::vector<AdapterPair>& set, const std::vector<Image>& inputs) {
    return [&cfg, pairs = &set, in = &inputs](const NetworkParams& p, std::size_t i, std::uint64_t, bool grads) {
      return adapter_loss_at((*pairs)[i].target, (*in)[i], p, cfg.gamma, grads);
    };
  };
  return run_training(train.size(), val.size(), init, cfg, loss_on(train, train_in), loss_on(val, val_in), on_epoch);
}

double code_sparsity(const LatentCode& code, double threshold) {
  std::size_t small = 0;
  std::size_t total = 0;
  for (const auto& level : code.levels) {
    for (double v : level.data) small += std::abs(v) < threshold ? 1 : 0;
    total += level.size();
  }
  return total == 0 ? 0.0 : static_cast<double>(small) / static_cast<double>(total);
}

void write_train_log(std::ostream& out, const std::vector<EpochRecord>& log) {
  out << "epoch train_loss val_loss\n";
  const auto old = out.precision(10);
  for (const auto& r : log) out << r.epoch << ' ' << r.train_loss << ' ' << r.val_loss << '\n';
  out.precision(old);
}

}  // namespace anett
