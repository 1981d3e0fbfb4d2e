#include "anett/net.hpp"

#include <cmath>
#include <random>
#include <sstream>
#include <stdexcept>

#include "tensor_ops.hpp"

namespace anett {

// ---------------------------------------------------------------------------
// LatentCode helpers

std::size_t LatentCode::size() const {
  std::size_t n = 0;
  for (const Tensor& t : levels) n += t.size();
  return n;
}

bool LatentCode::same_shape(const LatentCode& other) const {
  if (levels.size() != other.levels.size()) return false;
  for (std::size_t l = 0; l < levels.size(); ++l) {
    if (!levels[l].same_shape(other.levels[l])) return false;
  }
  return true;
}

LatentCode LatentCode::zeros_like() const {
  LatentCode z;
  z.weights = weights;
  for (const Tensor& t : levels) z.levels.emplace_back(t.channels, t.height, t.width);
  return z;
}

std::vector<double> dyadic_weights(std::size_t levels) {
  std::vector<double> w(levels);
  for (std::size_t l = 0; l < levels; ++l) w[l] = std::ldexp(1.0, -static_cast<int>(l + 1));
  return w;
}

void require_same_shape(const LatentCode& a, const LatentCode& b, const char* what) {
  if (!a.same_shape(b)) throw ShapeError(std::string(what) + ": latent code shape mismatch");
}

double dot(const LatentCode& a, const LatentCode& b) {
  require_same_shape(a, b, "dot");
  double s = 0.0;
  for (std::size_t l = 0; l < a.levels.size(); ++l) {
    const auto& x = a.levels[l].data;
    const auto& y = b.levels[l].data;
    for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
  }
  return s;
}

double squared_norm(const LatentCode& x) { return dot(x, x); }

LatentCode axpy(double a, const LatentCode& x, const LatentCode& y) {
  require_same_shape(x, y, "axpy");
  LatentCode out = y;
  for (std::size_t l = 0; l < out.levels.size(); ++l) {
    auto& o = out.levels[l].data;
    const auto& xv = x.levels[l].data;
    for (std::size_t i = 0; i < o.size(); ++i) o[i] += a * xv[i];
  }
  return out;
}

// ---------------------------------------------------------------------------
// Architecture

Architecture Architecture::autoencoder(std::vector<std::size_t> channels) {
  Architecture a;
  a.kind = NetKind::kAutoencoder;
  a.channels = std::move(channels);
  return a;
}

Architecture Architecture::adapter(std::vector<std::size_t> channels) {
  Architecture a;
  a.kind = NetKind::kAdapter;
  a.channels = std::move(channels);
  a.latent_channels = 0;
  a.coarse_channels = 0;
  return a;
}

void Architecture::validate() const {
  if (kernel % 2 == 0 || kernel == 0) throw std::invalid_argument("architecture: kernel must be odd");
  for (std::size_t c : channels) {
    if (c == 0) throw std::invalid_argument("architecture: zero channel count");
  }
  if (kind == NetKind::kAutoencoder) {
    if (channels.empty()) throw std::invalid_argument("architecture: autoencoder needs >= 1 scale");
    if (latent_channels == 0) throw std::invalid_argument("architecture: latent_channels must be >= 1");
  } else if (channels.size() != 2) {
    throw std::invalid_argument("architecture: adapter needs exactly 2 channel counts");
  }
}

namespace {

using ops::ConvShape;

// Convolution layers in storage order; layer i owns arrays 2i (weight) and 2i+1 (bias).
std::vector<ConvShape> layer_shapes(const Architecture& a) {
  std::vector<ConvShape> layers;
  const std::size_t k = a.kernel;
  if (a.kind == NetKind::kAutoencoder) {
    const std::size_t levels = a.levels();
    auto latent = [&](std::size_t l) { return a.latent_channels + (l + 1 == levels ? a.coarse_channels : 0); };
    for (std::size_t l = 0; l < levels; ++l) layers.push_back({l == 0 ? 1 : a.channels[l - 1], a.channels[l], k});
    for (std::size_t l = 0; l < levels; ++l) layers.push_back({a.channels[l], latent(l), 1});
    for (std::size_t l = 0; l < levels; ++l) {
      const std::size_t in = l + 1 == levels ? latent(l) : a.channels[l + 1] + latent(l);
      layers.push_back({in, a.channels[l], k});
    }
    layers.push_back({a.channels[0], 1, k});
  } else {
    const std::size_t c0 = a.channels[0];
    const std::size_t c1 = a.channels[1];
    layers.push_back({1, c0, k});
    layers.push_back({c0, c1, k});
    layers.push_back({c1 + c0, c0, 1});
    layers.push_back({c0, 1, k});
  }
  return layers;
}

// Layer indices inside layer_shapes().
struct AeLayout {
  std::size_t levels;
  std::size_t enc(std::size_t l) const { return l; }
  std::size_t head(std::size_t l) const { return levels + l; }
  std::size_t dec(std::size_t l) const { return 2 * levels + l; }
  std::size_t out() const { return 3 * levels; }
};

enum AdapterLayer : std::size_t { kConv0 = 0, kConv1 = 1, kMerge = 2, kHead = 3 };

std::string join(const std::vector<std::size_t>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ',';
    s += std::to_string(v[i]);
  }
  return s;
}

}  // namespace

std::vector<std::size_t> Architecture::array_sizes() const {
  std::vector<std::size_t> sizes;
  for (const ConvShape& s : layer_shapes(*this)) {
    sizes.push_back(s.weight_count());
    sizes.push_back(s.out_channels);
  }
  return sizes;
}

std::size_t Architecture::side_multiple() const {
  return kind == NetKind::kAutoencoder ? (std::size_t{1} << levels()) : 2;
}

std::string Architecture::to_string() const {
  std::ostringstream out;
  out << "kind=" << (kind == NetKind::kAutoencoder ? "autoencoder" : "adapter") << " channels=" << join(channels)
      << " latent=" << latent_channels << " coarse=" << coarse_channels << " kernel=" << kernel;
  return out.str();
}

namespace {

std::size_t parse_count(const std::string& key, const std::string& value) {
  std::size_t used = 0;
  unsigned long v = 0;
  try {
    v = std::stoul(value, &used);
  } catch (const std::logic_error&) {
    used = 0;
  }
  if (used == 0 || used != value.size()) {
    throw std::invalid_argument("architecture: bad value '" + value + "' for " + key);
  }
  return v;
}

}  // namespace

Architecture Architecture::parse(const std::string& text) {
  Architecture a;
  std::istringstream in(text);
  std::string token;
  bool have_kind = false;
  while (in >> token) {
    const auto eq = token.find('=');
    if (eq == std::string::npos) throw std::invalid_argument("architecture: bad token '" + token + "'");
    const std::string key = token.substr(0, eq);
    const std::string value = token.substr(eq + 1);
    if (key == "kind") {
      if (value == "autoencoder") a.kind = NetKind::kAutoencoder;
      else if (value == "adapter") a.kind = NetKind::kAdapter;
      else throw std::invalid_argument("architecture: unknown kind '" + value + "'");
      have_kind = true;
    } else if (key == "channels") {
      a.channels.clear();
      std::istringstream list(value);
      std::string item;
      while (std::getline(list, item, ',')) a.channels.push_back(parse_count(key, item));
    } else if (key == "latent") {
      a.latent_channels = parse_count(key, value);
    } else if (key == "coarse") {
      a.coarse_channels = parse_count(key, value);
    } else if (key == "kernel") {
      a.kernel = parse_count(key, value);
    } else {
      throw std::invalid_argument("architecture: unknown key '" + key + "'");
    }
  }
  if (!have_kind) throw std::invalid_argument("architecture: missing kind");
  a.validate();
  return a;
}

// ---------------------------------------------------------------------------
// NetworkParams

NetworkParams NetworkParams::initialize(const Architecture& arch, std::uint64_t seed) {
  arch.validate();
  NetworkParams p;
  p.arch = arch;
  p.seed = seed;
  std::mt19937_64 rng(seed);
  const auto layers = layer_shapes(arch);
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const ConvShape& s = layers[i];
    std::vector<float> w(s.weight_count(), 0.0f);
    const bool zero_head = arch.kind == NetKind::kAdapter && i == kHead;
    if (!zero_head) {
      const double fan_in = static_cast<double>(s.in_channels * s.kernel * s.kernel);
      const double bound = std::sqrt(6.0 / fan_in);
      std::uniform_real_distribution<double> dist(-bound, bound);
      for (float& v : w) v = static_cast<float>(dist(rng));
    }
    p.arrays.push_back(std::move(w));
    p.arrays.emplace_back(s.out_channels, 0.0f);
  }
  return p;
}

std::size_t NetworkParams::count() const {
  std::size_t n = 0;
  for (const auto& a : arrays) n += a.size();
  return n;
}

bool NetworkParams::all_finite() const {
  for (const auto& a : arrays) {
    for (float v : a) {
      if (!std::isfinite(v)) return false;
    }
  }
  return true;
}

void NetworkParams::validate() const {
  arch.validate();
  const auto sizes = arch.array_sizes();
  if (sizes.size() != arrays.size()) throw ShapeError("network params: array count does not match descriptor");
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    if (arrays[i].size() != sizes[i]) throw ShapeError("network params: array " + std::to_string(i) + " has wrong size");
  }
}

double NetworkParams::squared_norm() const {
  double s = 0.0;
  for (const auto& a : arrays) {
    for (float v : a) s += static_cast<double>(v) * static_cast<double>(v);
  }
  return s;
}

ParamGrads zero_grads(const NetworkParams& params) {
  ParamGrads g;
  g.reserve(params.arrays.size());
  for (const auto& a : params.arrays) g.emplace_back(a.size(), 0.0);
  return g;
}

void add_scaled(ParamGrads& acc, double a, const ParamGrads& g) {
  if (acc.empty()) {
    acc = g;
    for (auto& arr : acc) {
      for (double& v : arr) v *= a;
    }
    return;
  }
  if (acc.size() != g.size()) throw ShapeError("add_scaled: gradient layout mismatch");
  for (std::size_t i = 0; i < acc.size(); ++i) {
    if (acc[i].size() != g[i].size()) throw ShapeError("add_scaled: gradient layout mismatch");
    for (std::size_t j = 0; j < acc[i].size(); ++j) acc[i][j] += a * g[i][j];
  }
}

// ---------------------------------------------------------------------------
// Forward passes

namespace {

Tensor to_tensor(const Image& u) {
  Tensor t(1, u.side(), u.side());
  std::copy(u.values().begin(), u.values().end(), t.data.begin());
  return t;
}

Image to_image(const Tensor& t) {
  if (t.channels != 1 || t.height != t.width) throw ShapeError("network output is not a single square plane");
  return Image(t.height, t.data);
}

void check_kind(const NetworkParams& p, NetKind kind) {
  if (p.arch.kind != kind) {
    throw ShapeError(kind == NetKind::kAutoencoder ? "expected autoencoder parameters" : "expected adapter parameters");
  }
  p.validate();
}

void check_side(std::size_t side, const Architecture& a) {
  if (side % a.side_multiple() != 0) {
    throw ShapeError("image side " + std::to_string(side) + " is not a multiple of " +
                     std::to_string(a.side_multiple()));
  }
}

struct Layer {
  const float* w;
  const float* b;
  ConvShape shape;
};

Layer layer(const NetworkParams& p, const std::vector<ConvShape>& shapes, std::size_t i) {
  return {p.arrays[2 * i].data(), p.arrays[2 * i + 1].data(), shapes[i]};
}

Tensor run(const Layer& l, const Tensor& x) { return ops::conv2d(x, l.w, l.b, l.shape); }

// Backward through one layer; param grads land in arrays 2i, 2i+1 when grads != null.
Tensor run_back(const Layer& l, std::size_t index, const Tensor& x, const Tensor& gy, ParamGrads* grads,
                bool want_input) {
  Tensor gx;
  double* gw = grads ? (*grads)[2 * index].data() : nullptr;
  double* gb = grads ? (*grads)[2 * index + 1].data() : nullptr;
  ops::conv2d_backward(x, l.w, l.shape, gy, want_input ? &gx : nullptr, gw, gb);
  return gx;
}

}  // namespace

EncoderTape trace_encode(const Image& u, const NetworkParams& theta) {
  check_kind(theta, NetKind::kAutoencoder);
  check_side(u.side(), theta.arch);
  const auto shapes = layer_shapes(theta.arch);
  const AeLayout at{theta.arch.levels()};
  EncoderTape tape;
  tape.code.weights = dyadic_weights(at.levels);
  Tensor x = to_tensor(u);
  for (std::size_t l = 0; l < at.levels; ++l) {
    Tensor pre = run(layer(theta, shapes, at.enc(l)), x);
    Tensor pooled = ops::avg_pool2(ops::silu(pre));
    tape.code.levels.push_back(run(layer(theta, shapes, at.head(l)), pooled));
    tape.inputs.push_back(std::move(x));
    tape.pre.push_back(std::move(pre));
    x = pooled;
    tape.pooled.push_back(std::move(pooled));
  }
  return tape;
}

namespace {

void check_code(const LatentCode& code, const NetworkParams& theta) {
  const auto shapes = layer_shapes(theta.arch);
  const AeLayout at{theta.arch.levels()};
  if (code.levels.size() != at.levels) throw ShapeError("latent code has wrong number of levels");
  const std::size_t side = code.levels.back().height << at.levels;
  for (std::size_t l = 0; l < at.levels; ++l) {
    const Tensor& t = code.levels[l];
    if (t.channels != shapes[at.head(l)].out_channels || t.height != (side >> (l + 1)) || t.width != t.height) {
      throw ShapeError("latent code level " + std::to_string(l + 1) + " does not match descriptor");
    }
  }
}

}  // namespace

DecoderTape trace_decode(const LatentCode& code, const NetworkParams& theta) {
  check_kind(theta, NetKind::kAutoencoder);
  check_code(code, theta);
  const auto shapes = layer_shapes(theta.arch);
  const AeLayout at{theta.arch.levels()};
  DecoderTape tape;
  tape.inputs.resize(at.levels);
  tape.pre.resize(at.levels);
  Tensor act;
  for (std::size_t l = at.levels; l-- > 0;) {
    Tensor in = l + 1 == at.levels ? code.levels[l] : ops::concat(ops::upsample2(act), code.levels[l]);
    tape.pre[l] = run(layer(theta, shapes, at.dec(l)), in);
    act = ops::silu(tape.pre[l]);
    tape.inputs[l] = std::move(in);
  }
  tape.final_input = ops::upsample2(act);
  tape.output = to_image(run(layer(theta, shapes, at.out()), tape.final_input));
  return tape;
}

AdapterTape trace_adapt(const Image& v, const NetworkParams& kappa) {
  check_kind(kappa, NetKind::kAdapter);
  check_side(v.side(), kappa.arch);
  const auto shapes = layer_shapes(kappa.arch);
  AdapterTape t;
  t.input = to_tensor(v);
  t.pre0 = run(layer(kappa, shapes, kConv0), t.input);
  t.act0 = ops::silu(t.pre0);
  t.pooled = ops::avg_pool2(t.act0);
  t.pre1 = run(layer(kappa, shapes, kConv1), t.pooled);
  t.merged = ops::concat(ops::upsample2(ops::silu(t.pre1)), t.act0);
  t.pre2 = run(layer(kappa, shapes, kMerge), t.merged);
  t.act2 = ops::silu(t.pre2);
  Tensor correction = run(layer(kappa, shapes, kHead), t.act2);
  Image out = v;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += correction.data[i];
  t.output = std::move(out);
  return t;
}

ModelTape trace_model(const Image& u, const NetworkParams& theta, const NetworkParams* kappa) {
  ModelTape tape;
  tape.encoder = trace_encode(u, theta);
  tape.decoder = trace_decode(tape.encoder.code, theta);
  if (kappa) {
    tape.adapter = trace_adapt(tape.decoder.output, *kappa);
    tape.has_adapter = true;
  }
  return tape;
}

LatentCode encode(const Image& u, const NetworkParams& theta) { return trace_encode(u, theta).code; }

Image decode(const LatentCode& code, const NetworkParams& theta) { return trace_decode(code, theta).output; }

Image autoencode(const Image& u, const NetworkParams& theta) { return decode(encode(u, theta), theta); }

Image adapt(const Image& v, const NetworkParams& kappa) { return trace_adapt(v, kappa).output; }

Image full_model(const Image& u, const NetworkParams& theta, const NetworkParams* kappa) {
  Image a = autoencode(u, theta);
  return kappa ? adapt(a, *kappa) : a;
}

// ---------------------------------------------------------------------------
// Reverse mode

EncoderGrads backprop_encode(const EncoderTape& tape, const NetworkParams& theta, const LatentCode& cot,
                             GradRequest req) {
  require_same_shape(tape.code, cot, "backprop_encode");
  const auto shapes = layer_shapes(theta.arch);
  const AeLayout at{theta.arch.levels()};
  EncoderGrads out;
  ParamGrads* pg = nullptr;
  if (req.params) {
    out.params = zero_grads(theta);
    pg = &out.params;
  }
  // Gradient arriving at pooled[l] from the scale above.
  Tensor from_above;
  for (std::size_t l = at.levels; l-- > 0;) {
    Tensor g = run_back(layer(theta, shapes, at.head(l)), at.head(l), tape.pooled[l], cot.levels[l], pg, true);
    if (!from_above.data.empty()) ops::add_into(g, from_above);
    Tensor gpre = ops::silu_backward(tape.pre[l], ops::avg_pool2_backward(g));
    const bool need_input = l > 0 || req.input;
    from_above = run_back(layer(theta, shapes, at.enc(l)), at.enc(l), tape.inputs[l], gpre, pg, need_input);
  }
  if (req.input) out.input = to_image(from_above);
  return out;
}

DecoderGrads backprop_decode(const DecoderTape& tape, const NetworkParams& theta, const Image& cot,
                             GradRequest req) {
  if (!cot.same_shape(tape.output)) throw ShapeError("backprop_decode: cotangent shape mismatch");
  const auto shapes = layer_shapes(theta.arch);
  const AeLayout at{theta.arch.levels()};
  DecoderGrads out;
  ParamGrads* pg = nullptr;
  if (req.params) {
    out.params = zero_grads(theta);
    pg = &out.params;
  }
  out.code.weights = dyadic_weights(at.levels);
  out.code.levels.resize(at.levels);
  Tensor g = run_back(layer(theta, shapes, at.out()), at.out(), tape.final_input, to_tensor(cot), pg, true);
  g = ops::upsample2_backward(g);
  for (std::size_t l = 0; l < at.levels; ++l) {
    Tensor gpre = ops::silu_backward(tape.pre[l], g);
    Tensor gin = run_back(layer(theta, shapes, at.dec(l)), at.dec(l), tape.inputs[l], gpre, pg, true);
    if (l + 1 == at.levels) {
      out.code.levels[l] = std::move(gin);
    } else {
      Tensor gup;
      ops::split(gin, theta.arch.channels[l + 1], gup, out.code.levels[l]);
      g = ops::upsample2_backward(gup);
    }
  }
  return out;
}

AdapterGrads backprop_adapt(const AdapterTape& t, const NetworkParams& kappa, const Image& cot, GradRequest req) {
  if (!cot.same_shape(t.output)) throw ShapeError("backprop_adapt: cotangent shape mismatch");
  const auto shapes = layer_shapes(kappa.arch);
  AdapterGrads out;
  ParamGrads* pg = nullptr;
  if (req.params) {
    out.params = zero_grads(kappa);
    pg = &out.params;
  }
  const Tensor gc = to_tensor(cot);
  Tensor g = run_back(layer(kappa, shapes, kHead), kHead, t.act2, gc, pg, true);
  g = run_back(layer(kappa, shapes, kMerge), kMerge, t.merged, ops::silu_backward(t.pre2, g), pg, true);
  Tensor gup;
  Tensor gskip;
  ops::split(g, kappa.arch.channels[1], gup, gskip);
  Tensor gpre1 = ops::silu_backward(t.pre1, ops::upsample2_backward(gup));
  Tensor gpool = run_back(layer(kappa, shapes, kConv1), kConv1, t.pooled, gpre1, pg, true);
  Tensor gact0 = ops::avg_pool2_backward(gpool);
  ops::add_into(gact0, gskip);
  Tensor gin = run_back(layer(kappa, shapes, kConv0), kConv0, t.input, ops::silu_backward(t.pre0, gact0), pg,
                        req.input);
  if (req.input) {
    ops::add_into(gin, gc);
    out.input = to_image(gin);
  }
  return out;
}

ModelGrads backprop_model(const ModelTape& tape, const NetworkParams& theta, const NetworkParams* kappa,
                          const LatentCode* code_cot, const Image* output_cot, GradRequest req) {
  if (tape.has_adapter != (kappa != nullptr)) throw std::invalid_argument("backprop_model: adapter mismatch");
  ModelGrads out;
  LatentCode code_grad = tape.code().zeros_like();
  if (code_cot) code_grad = axpy(1.0, *code_cot, code_grad);
  if (output_cot) {
    Image dec_cot = *output_cot;
    if (kappa) {
      AdapterGrads ag = backprop_adapt(tape.adapter, *kappa, *output_cot, {true, req.params});
      dec_cot = std::move(ag.input);
      out.kappa = std::move(ag.params);
    }
    DecoderGrads dg = backprop_decode(tape.decoder, theta, dec_cot, {true, req.params});
    code_grad = axpy(1.0, dg.code, code_grad);
    out.theta = std::move(dg.params);
  }
  EncoderGrads eg = backprop_encode(tape.encoder, theta, code_grad, req);
  if (req.params) {
    if (out.theta.empty()) out.theta = std::move(eg.params);
    else add_scaled(out.theta, 1.0, eg.params);
    if (kappa && out.kappa.empty()) out.kappa = zero_grads(*kappa);
  }
  if (req.input) out.input = std::move(eg.input);
  return out;
}

Image vjp_input_encode(const Image& u, const NetworkParams& theta, const LatentCode& cot) {
  return backprop_encode(trace_encode(u, theta), theta, cot, {true, false}).input;
}

LatentCode vjp_input_decode(const LatentCode& code, const NetworkParams& theta, const Image& cot) {
  return backprop_decode(trace_decode(code, theta), theta, cot, {true, false}).code;
}

Image vjp_input_autoencode(const Image& u, const NetworkParams& theta, const Image& cot) {
  return backprop_model(trace_model(u, theta, nullptr), theta, nullptr, nullptr, &cot, {true, false}).input;
}

Image vjp_input_adapt(const Image& v, const NetworkParams& kappa, const Image& cot) {
  return backprop_adapt(trace_adapt(v, kappa), kappa, cot, {true, false}).input;
}

Image vjp_input_full(const Image& u, const NetworkParams& theta, const NetworkParams& kappa, const Image& cot) {
  return backprop_model(trace_model(u, theta, &kappa), theta, &kappa, nullptr, &cot, {true, false}).input;
}

ParamGrads vjp_params_encode(const Image& u, const NetworkParams& theta, const LatentCode& cot) {
  return backprop_encode(trace_encode(u, theta), theta, cot, {false, true}).params;
}

ParamGrads vjp_params_decode(const LatentCode& code, const NetworkParams& theta, const Image& cot) {
  return backprop_decode(trace_decode(code, theta), theta, cot, {false, true}).params;
}

ParamGrads vjp_params_autoencode(const Image& u, const NetworkParams& theta, const Image& cot) {
  return backprop_model(trace_model(u, theta, nullptr), theta, nullptr, nullptr, &cot, {false, true}).theta;
}

ParamGrads vjp_params_adapt(const Image& v, const NetworkParams& kappa, const Image& cot) {
  return backprop_adapt(trace_adapt(v, kappa), kappa, cot, {false, true}).params;
}

}  // namespace anett
