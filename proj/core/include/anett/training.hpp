#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "anett/grid.hpp"
#include "anett/net.hpp"
#include "anett/phantoms.hpp"
#include "anett/tomo.hpp"

namespace anett {

struct TrainConfig {
  double eta = 1e-3;    // l1 weight on the code
  double beta = 1e-5;   // weight decay for theta
  double gamma = 1e-5;  // weight decay for kappa
  std::size_t epochs = 100;
  std::size_t batch_size = 8;
  double learning_rate = 1e-3;
  std::uint64_t seed = 1;
  // Perturbation scheme; "gaussian-mean" is white noise with std p * mean(u), p ~ U[0, max_noise].
  std::string perturbation = "gaussian-mean";
  double max_noise = 0.1;

  void validate() const;
};

// u + eps with eps white Gaussian of std p * mean(u), p ~ U[0, max_fraction].
Image perturb(const Image& u, Rng& rng, double max_fraction = 0.1);
Image perturb_with_fraction(const Image& u, double p, Rng& rng);

struct LossTerms {
  double reconstruction = 0.0;
  double sparsity = 0.0;  // eta * ||E||_{1,w}, already weighted
  double decay = 0.0;     // beta * ||theta||^2, already weighted

  double total() const { return reconstruction + sparsity + decay; }
};

struct LossEval {
  LossTerms terms;
  ParamGrads grads;  // empty unless requested
};

// ||N(x) - u||^2 + eta ||E(x)||_{1,w} + beta ||theta||^2 for input x = u + eps.
// The l1 subgradient is 0 at exact zeros.
LossEval ae_loss_at(const Image& u, const Image& x, const NetworkParams& theta, double eta, double beta,
                    bool want_grads);
// Same with x = perturb(u, rng).
LossEval ae_loss(const Image& u, const NetworkParams& theta, const TrainConfig& cfg, Rng& rng, bool want_grads);

// ||U(a) - u||^2 + gamma ||kappa||^2 where a = N^a(v) is precomputed.
LossEval adapter_loss_at(const Image& u, const Image& a, const NetworkParams& kappa, double gamma, bool want_grads);

struct EpochRecord {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
};

struct TrainResult {
  NetworkParams best;
  std::size_t best_epoch = 0;
  double best_val_loss = 0.0;
  std::vector<EpochRecord> log;  // epoch 0 is the initial snapshot
};

using EpochCallback = std::function<void(const EpochRecord&)>;

// Minibatch Adam on the autoencoder loss; returns the snapshot with the smallest
// validation loss (validation perturbations are fixed by cfg.seed).
TrainResult train_autoencoder(const std::vector<Image>& train, const std::vector<Image>& val,
                              const NetworkParams& init, const TrainConfig& cfg, const EpochCallback& on_epoch = {});

struct AdapterPair {
  Image input;   // v
  Image target;  // u
};

// [(K# K u_i, u_i)...] followed by [(u_i, u_i)...].
std::vector<AdapterPair> make_adapter_dataset(const std::vector<Image>& images, const ForwardOperator& op);

// Minimizes the mean of ||U(N^a(v)) - u||^2 + gamma ||kappa||^2 with theta frozen.
TrainResult train_adapter(const std::vector<AdapterPair>& train, const std::vector<AdapterPair>& val,
                          const NetworkParams& theta, const NetworkParams& init, const TrainConfig& cfg,
                          const EpochCallback& on_epoch = {});

// Fraction of code entries with magnitude below threshold.
double code_sparsity(const LatentCode& code, double threshold = 1e-3);

// "epoch train_loss val_loss" header, then one record per line.
void write_train_log(std::ostream& out, const std::vector<EpochRecord>& log);

}  // namespace anett
