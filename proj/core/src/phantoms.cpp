#include "anett/phantoms.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "anett/error.hpp"
#include "anett/grid_io.hpp"

namespace anett {

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream, std::uint64_t index) {
  auto mix = [](std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  return mix(mix(mix(master) ^ stream) ^ index);
}

namespace {

struct Ellipse {
  double cx, cy, a, b, phi, value;

  bool contains(double x, double y) const {
    const double c = std::cos(phi);
    const double s = std::sin(phi);
    const double dx = x - cx;
    const double dy = y - cy;
    const double p = (c * dx + s * dy) / a;
    const double q = (-s * dx + c * dy) / b;
    return p * p + q * q <= 1.0;
  }
};

double uniform(Rng& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }

}  // namespace

Image random_phantom(Rng& rng, std::size_t side, const PhantomOptions& opt) {
  if (opt.min_ellipses > opt.max_ellipses || opt.min_axis <= 0.0 || opt.min_axis > opt.max_axis) {
    throw std::invalid_argument("random_phantom: inconsistent options");
  }
  const double body_max = std::min(0.9, opt.support_radius);
  const Ellipse body{uniform(rng, -0.03, 0.03),
                     uniform(rng, -0.03, 0.03),
                     uniform(rng, 0.7, body_max - 0.03),
                     uniform(rng, 0.55, body_max - 0.03),
                     uniform(rng, -0.2, 0.2),
                     uniform(rng, 0.2, 0.5)};

  const std::size_t k =
      std::uniform_int_distribution<std::size_t>(opt.min_ellipses, opt.max_ellipses)(rng);
  std::vector<Ellipse> inner;
  inner.reserve(k);
  for (std::size_t i = 0; i < k; ++i) {
    const double r = opt.center_radius * std::sqrt(uniform(rng, 0.0, 1.0));
    const double t = uniform(rng, 0.0, 2.0 * std::numbers::pi);
    inner.push_back({r * std::cos(t), r * std::sin(t), uniform(rng, opt.min_axis, opt.max_axis),
                     uniform(rng, opt.min_axis, opt.max_axis), uniform(rng, 0.0, std::numbers::pi),
                     uniform(rng, opt.min_intensity, opt.max_intensity)});
  }

  Image u(side);
  const double r2 = opt.support_radius * opt.support_radius;
  for (std::size_t row = 0; row < side; ++row) {
    const double y = u.center(row);
    for (std::size_t col = 0; col < side; ++col) {
      const double x = u.center(col);
      if (x * x + y * y > r2 || !body.contains(x, y)) continue;
      double v = body.value;
      for (const auto& e : inner) {
        if (e.contains(x, y)) v += e.value;
      }
      u(row, col) = std::max(v, 0.0);
    }
  }
  const double peak = *std::max_element(u.values().begin(), u.values().end());
  if (peak > 0.0) {
    for (double& v : u.values()) v /= peak;
  }
  return u;
}

Image random_phantom(std::uint64_t seed, std::size_t side, const PhantomOptions& options) {
  Rng rng(seed);
  return random_phantom(rng, side, options);
}

Sinogram add_noise(const Sinogram& y, double level, Rng& rng) {
  if (!(level >= 0.0)) throw std::invalid_argument("add_noise: level must be >= 0");
  if (level == 0.0) return y;
  const double scale = level * mean(y);
  std::normal_distribution<double> normal(0.0, 1.0);
  Sinogram out = y;
  for (double& v : out.values()) v += scale * normal(rng);
  return out;
}

Image add_disc(const Image& u, const Disc& d) {
  if (!(d.radius > 0.0) || d.cx - d.radius < -1.0 || d.cx + d.radius > 1.0 || d.cy - d.radius < -1.0 ||
      d.cy + d.radius > 1.0) {
    throw std::invalid_argument("add_disc: disc must lie inside [-1,1]^2");
  }
  Image out = u;
  const double r2 = d.radius * d.radius;
  for (std::size_t row = 0; row < u.side(); ++row) {
    const double dy = u.center(row) - d.cy;
    for (std::size_t col = 0; col < u.side(); ++col) {
      const double dx = u.center(col) - d.cx;
      if (dx * dx + dy * dy <= r2) out(row, col) = d.intensity;
    }
  }
  return out;
}

Disc place_disc(const Image& u, double radius, double intensity, double reach) {
  const double step = 0.05;
  const double hood = 2.0 * radius;
  Disc best{0.0, 0.0, radius, intensity};
  double best_score = std::numeric_limits<double>::infinity();
  const int steps = static_cast<int>(std::floor(reach / step));
  for (int iy = -steps; iy <= steps; ++iy) {
    for (int ix = -steps; ix <= steps; ++ix) {
      const double cx = ix * step;
      const double cy = iy * step;
      if (cx * cx + cy * cy > reach * reach) continue;
      double sum = 0.0;
      double sum2 = 0.0;
      std::size_t count = 0;
      bool inside_body = true;
      for (std::size_t row = 0; row < u.side() && inside_body; ++row) {
        const double dy = u.center(row) - cy;
        if (std::abs(dy) > hood) continue;
        for (std::size_t col = 0; col < u.side(); ++col) {
          const double dx = u.center(col) - cx;
          if (dx * dx + dy * dy > hood * hood) continue;
          const double v = u(row, col);
          if (v <= 0.0) {
            inside_body = false;
            break;
          }
          sum += v;
          sum2 += v * v;
          ++count;
        }
      }
      if (!inside_body || count == 0) continue;
      const double m = sum / static_cast<double>(count);
      const double var = std::max(sum2 / static_cast<double>(count) - m * m, 0.0);
      if (var < best_score) {
        best_score = var;
        best.cx = cx;
        best.cy = cy;
      }
    }
  }
  return best;
}

const char* split_name(Split s) {
  switch (s) {
    case Split::kTrain:
      return "train";
    case Split::kVal:
      return "val";
    case Split::kTest:
      return "test";
  }
  return "?";
}

Dataset make_dataset(std::uint64_t master_seed, const DatasetCounts& counts, std::size_t side,
                     const PhantomOptions& options) {
  if (counts.train == 0 || counts.val == 0 || counts.test == 0) {
    throw std::invalid_argument("make_dataset: every split needs at least one image");
  }
  Dataset d;
  auto fill = [&](Split s, std::size_t n, std::vector<Image>& images, std::vector<std::uint64_t>& seeds) {
    images.reserve(n);
    seeds.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      const std::uint64_t seed = derive_seed(master_seed, static_cast<std::uint64_t>(s) + 1, i);
      seeds.push_back(seed);
      images.push_back(random_phantom(seed, side, options));
    }
  };
  fill(Split::kTrain, counts.train, d.train, d.train_seeds);
  fill(Split::kVal, counts.val, d.val, d.val_seeds);
  fill(Split::kTest, counts.test, d.test, d.test_seeds);
  return d;
}

Split parse_split(const std::string& name) {
  for (auto s : {Split::kTrain, Split::kVal, Split::kTest}) {
    if (name == split_name(s)) return s;
  }
  throw std::invalid_argument("unknown split '" + name + "'");
}

std::vector<ManifestEntry> write_dataset(const Dataset& data, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::vector<ManifestEntry> entries;
  auto emit = [&](Split s, const std::vector<Image>& images, const std::vector<std::uint64_t>& seeds) {
    for (std::size_t i = 0; i < images.size(); ++i) {
      char name[48];
      std::snprintf(name, sizeof name, "%s_%04zu.grd", split_name(s), i);
      write_grid(images[i], dir / name);
      entries.push_back({name, seeds[i], s});
    }
  };
  emit(Split::kTrain, data.train, data.train_seeds);
  emit(Split::kVal, data.val, data.val_seeds);
  emit(Split::kTest, data.test, data.test_seeds);

  std::ofstream out(dir / "manifest.txt");
  out << "path seed split\n";
  for (const auto& e : entries) out << e.path.string() << ' ' << e.seed << ' ' << split_name(e.split) << '\n';
  if (!out) throw std::runtime_error("cannot write manifest in " + dir.string());
  return entries;
}

std::vector<ManifestEntry> read_manifest(const std::filesystem::path& manifest) {
  std::ifstream in(manifest);
  if (!in) throw FileNotFoundError("manifest not found: " + manifest.string());
  std::string line;
  std::getline(in, line);
  if (line != "path seed split") throw std::runtime_error("malformed manifest header in " + manifest.string());
  std::vector<ManifestEntry> entries;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream fields(line);
    std::string path, split;
    std::uint64_t seed = 0;
    if (!(fields >> path >> seed >> split)) {
      throw std::runtime_error(manifest.string() + ":" + std::to_string(lineno) + ": malformed record");
    }
    entries.push_back({manifest.parent_path() / path, seed, parse_split(split)});
  }
  return entries;
}

std::vector<Image> load_split(const std::filesystem::path& manifest, Split split) {
  std::vector<Image> images;
  for (const auto& e : read_manifest(manifest)) {
    if (e.split == split) images.push_back(read_image(e.path));
  }
  return images;
}

}  // namespace anett
