#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "anett/grid.hpp"
#include "anett/tensor.hpp"

namespace anett {

// Multi-scale latent coefficients E(u). levels[l] holds the coefficient
// stack emitted after downsampling step l + 1; weights[l] is its l1 weight.
struct LatentCode {
  std::vector<Tensor> levels;
  std::vector<double> weights;

  std::size_t size() const;
  bool same_shape(const LatentCode& other) const;
  LatentCode zeros_like() const;

  friend bool operator==(const LatentCode&, const LatentCode&) = default;
};

// Default per-level weights 2^-l, l = 1..levels.
std::vector<double> dyadic_weights(std::size_t levels);

void require_same_shape(const LatentCode& a, const LatentCode& b, const char* what);
double dot(const LatentCode& a, const LatentCode& b);
double squared_norm(const LatentCode& x);
// a * x + y
LatentCode axpy(double a, const LatentCode& x, const LatentCode& y);

enum class NetKind { kAutoencoder, kAdapter };

// Architecture descriptor; determines every parameter array shape.
//
// Autoencoder (channels c_1..c_L): per scale 3x3 conv -> SiLU -> 2x average
// pooling, then a 1x1 head emitting latent_channels detail grids (plus
// coarse_channels at the last scale). The decoder mirrors it with nearest
// upsampling, concatenating each level's code, and a final 3x3 conv.
//
// Adapter (channels c_0, c_1): residual two-scale U-Net
//   out = v + head(SiLU(merge([up(SiLU(conv1(pool(e0)))), e0]))),  e0 = SiLU(conv0(v)),
// with the 3x3 head initialized to zero.
struct Architecture {
  NetKind kind = NetKind::kAutoencoder;
  std::vector<std::size_t> channels = {8, 16, 32};
  std::size_t latent_channels = 3;
  std::size_t coarse_channels = 1;
  std::size_t kernel = 3;

  static Architecture autoencoder(std::vector<std::size_t> channels = {8, 16, 32});
  static Architecture adapter(std::vector<std::size_t> channels = {8, 16});

  std::size_t levels() const { return channels.size(); }
  void validate() const;
  // Number of parameter arrays and their lengths, in storage order.
  std::vector<std::size_t> array_sizes() const;
  // Image sides must be a multiple of this.
  std::size_t side_multiple() const;

  std::string to_string() const;
  static Architecture parse(const std::string& text);

  friend bool operator==(const Architecture&, const Architecture&) = default;
};

// Trainable arrays (weights then bias for every layer, descriptor order).
// Stored in single precision so the parameter file round-trips exactly.
struct NetworkParams {
  Architecture arch;
  std::uint64_t seed = 0;
  std::vector<std::vector<float>> arrays;

  // Fan-in scaled uniform weights, zero biases, zero adapter head.
  static NetworkParams initialize(const Architecture& arch, std::uint64_t seed);

  std::size_t count() const;
  bool all_finite() const;
  void validate() const;
  double squared_norm() const;

  friend bool operator==(const NetworkParams&, const NetworkParams&) = default;
};

// Gradient arrays matching NetworkParams::arrays.
using ParamGrads = std::vector<std::vector<double>>;

ParamGrads zero_grads(const NetworkParams& params);
void add_scaled(ParamGrads& acc, double a, const ParamGrads& g);

// Parameter file: text header (format version, architecture descriptor, seed,
// array count) then each array as little-endian float32 in descriptor order.
void save_params(const NetworkParams& params, const std::filesystem::path& path);
NetworkParams load_params(const std::filesystem::path& path);
// Load and require a given architecture kind.
NetworkParams load_params(const std::filesystem::path& path, NetKind expected);

// ---------------------------------------------------------------------------
// Forward evaluation.

LatentCode encode(const Image& u, const NetworkParams& theta);
Image decode(const LatentCode& code, const NetworkParams& theta);
// decode(encode(u)).
Image autoencode(const Image& u, const NetworkParams& theta);
Image adapt(const Image& v, const NetworkParams& kappa);
// U(D(E(u))); with kappa == nullptr this is the plain autoencoder.
Image full_model(const Image& u, const NetworkParams& theta, const NetworkParams* kappa);

// ---------------------------------------------------------------------------
// Recorded forward passes for reverse mode.

struct EncoderTape {
  std::vector<Tensor> inputs;  // input of each scale's 3x3 conv
  std::vector<Tensor> pre;     // pre-activations
  std::vector<Tensor> pooled;  // input of each scale's 1x1 head
  LatentCode code;
};

struct DecoderTape {
  std::vector<Tensor> inputs;  // input of each scale's 3x3 conv, indexed by scale
  std::vector<Tensor> pre;
  Tensor final_input;
  Image output;
};

struct AdapterTape {
  Tensor input;
  Tensor pre0, act0, pooled, pre1, merged, pre2, act2;
  Image output;
};

// Everything needed to pull cotangents back through N = U o D o E at u.
struct ModelTape {
  EncoderTape encoder;
  DecoderTape decoder;
  AdapterTape adapter;
  bool has_adapter = false;

  const LatentCode& code() const { return encoder.code; }
  const Image& output() const { return has_adapter ? adapter.output : decoder.output; }
};

EncoderTape trace_encode(const Image& u, const NetworkParams& theta);
DecoderTape trace_decode(const LatentCode& code, const NetworkParams& theta);
AdapterTape trace_adapt(const Image& v, const NetworkParams& kappa);
ModelTape trace_model(const Image& u, const NetworkParams& theta, const NetworkParams* kappa);

// Which reverse-mode products to form.
struct GradRequest {
  bool input = true;
  bool params = false;
};

struct EncoderGrads {
  Image input;
  ParamGrads params;
};
struct DecoderGrads {
  LatentCode code;
  ParamGrads params;
};
struct AdapterGrads {
  Image input;
  ParamGrads params;
};
struct ModelGrads {
  Image input;
  ParamGrads theta;
  ParamGrads kappa;
};

EncoderGrads backprop_encode(const EncoderTape& tape, const NetworkParams& theta, const LatentCode& cot,
                             GradRequest req);
DecoderGrads backprop_decode(const DecoderTape& tape, const NetworkParams& theta, const Image& cot,
                             GradRequest req);
AdapterGrads backprop_adapt(const AdapterTape& tape, const NetworkParams& kappa, const Image& cot,
                            GradRequest req);
// Pulls back a cotangent on the code and/or on the output (either may be null).
ModelGrads backprop_model(const ModelTape& tape, const NetworkParams& theta, const NetworkParams* kappa,
                          const LatentCode* code_cot, const Image* output_cot, GradRequest req);

// ---------------------------------------------------------------------------
// Vector-Jacobian products of the individual maps.

Image vjp_input_encode(const Image& u, const NetworkParams& theta, const LatentCode& cot);
LatentCode vjp_input_decode(const LatentCode& code, const NetworkParams& theta, const Image& cot);
Image vjp_input_autoencode(const Image& u, const NetworkParams& theta, const Image& cot);
Image vjp_input_adapt(const Image& v, const NetworkParams& kappa, const Image& cot);
Image vjp_input_full(const Image& u, const NetworkParams& theta, const NetworkParams& kappa, const Image& cot);

ParamGrads vjp_params_encode(const Image& u, const NetworkParams& theta, const LatentCode& cot);
ParamGrads vjp_params_decode(const LatentCode& code, const NetworkParams& theta, const Image& cot);
ParamGrads vjp_params_autoencode(const Image& u, const NetworkParams& theta, const Image& cot);
ParamGrads vjp_params_adapt(const Image& v, const NetworkParams& kappa, const Image& cot);

// ---------------------------------------------------------------------------
// Adam with beta1 = 0.9, beta2 = 0.999, eps = 1e-8 and bias correction.

struct AdamState {
  std::vector<std::vector<double>> first;
  std::vector<std::vector<double>> second;
  std::uint64_t step = 0;

  static AdamState for_params(const NetworkParams& params);
};

struct AdamHyper {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

void adam_step(NetworkParams& params, const ParamGrads& grads, AdamState& state, double lr,
               const AdamHyper& hyper = {});

// Scalar-array version used by the optimizer and its tests.
void adam_step(std::span<double> params, std::span<const double> grads, std::span<double> first,
               std::span<double> second, std::uint64_t step, double lr, const AdamHyper& hyper = {});

}  // namespace anett
