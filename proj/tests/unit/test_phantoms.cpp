#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <numbers>
#include <set>

#include "anett/grid_io.hpp"
#include "anett/phantoms.hpp"
#include "anett/tomo.hpp"

namespace anett {
namespace {

namespace fs = std::filesystem;

TEST(Seeds, DeriveSeedIsStableAndSpreads) {
  EXPECT_EQ(derive_seed(1, 2, 3), derive_seed(1, 2, 3));
  std::set<std::uint64_t> seen;
  for (std::uint64_t s = 0; s < 3; ++s)
    for (std::uint64_t i = 0; i < 100; ++i) seen.insert(derive_seed(42, s, i));
  EXPECT_EQ(seen.size(), 300u);
}

TEST(Phantom, RangeSupportAndPeak) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Image u = random_phantom(seed, 64);
    double hi = 0.0;
    for (std::size_t r = 0; r < 64; ++r) {
      for (std::size_t c = 0; c < 64; ++c) {
        const double v = u(r, c);
        ASSERT_GE(v, 0.0);
        ASSERT_LE(v, 1.0);
        hi = std::max(hi, v);
        if (std::hypot(u.center(c), u.center(r)) > 0.95) {
          ASSERT_EQ(v, 0.0);
        }
      }
    }
    EXPECT_EQ(hi, 1.0);
  }
}

TEST(Phantom, DeterministicPerSeed) {
  EXPECT_EQ(random_phantom(std::uint64_t{7}, 32), random_phantom(std::uint64_t{7}, 32));
  EXPECT_NE(random_phantom(std::uint64_t{7}, 32), random_phantom(std::uint64_t{8}, 32));
  Rng a(5), b(5);
  EXPECT_EQ(random_phantom(a, 32), random_phantom(b, 32));
}

TEST(Noise, ZeroLevelIsExact) {
  const Geometry g = Geometry::for_image(32, 10);
  const Sinogram y = radon_forward(random_phantom(std::uint64_t{1}, 32), g);
  Rng rng(3);
  EXPECT_EQ(add_noise(y, 0.0, rng), y);
}

TEST(Noise, Statistics) {
  Sinogram y(100, 100);
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = 1.0 + static_cast<double>(i % 7);
  const double ybar = mean(y);
  Rng rng(11);
  const Sinogram z = add_noise(y, 0.05, rng);
  const Sinogram d = difference(z, y);
  const double m = mean(d);
  double var = 0.0;
  for (double v : d.values()) var += (v - m) * (v - m);
  const double sd = std::sqrt(var / static_cast<double>(d.size() - 1));
  EXPECT_NEAR(sd, 0.05 * ybar, 0.05 * 0.05 * ybar);
  EXPECT_LE(std::abs(mean(z) - ybar), 3.0 * 0.05 * ybar / std::sqrt(static_cast<double>(d.size())));
}

TEST(Disc, OverwritesInsideOnly) {
  const Image u(128, 0.3);
  const Disc disc{0.2, -0.1, 0.08, 1.0};
  const Image v = add_disc(u, disc);
  const auto col = static_cast<std::size_t>(std::lround(u.index_of(0.2)));
  const auto row = static_cast<std::size_t>(std::lround(u.index_of(-0.1)));
  EXPECT_EQ(v(row, col), 1.0);
  const auto far = static_cast<std::size_t>(std::lround(u.index_of(0.2 + 0.16)));
  EXPECT_EQ(v(row, far), 0.3);
}

TEST(Disc, AreaMatchesPixelCount) {
  const Image u(128);
  const double r = 0.08;
  const Image v = add_disc(u, {0.0, 0.0, r, 1.0});
  double count = 0.0;
  for (double x : v.values()) count += x;
  const double fraction = count / static_cast<double>(v.size());
  const double h = u.pixel_size();
  // boundary band of two pixel widths, relative to the domain area 4
  EXPECT_NEAR(fraction, std::numbers::pi * r * r / 4.0, 2.0 * std::numbers::pi * r * 2.0 * h / 4.0);
}

TEST(Disc, OutsideImageRejected) {
  EXPECT_THROW(add_disc(Image(32), {0.98, 0.0, 0.08, 1.0}), std::invalid_argument);
}

TEST(Disc, PlacementLandsInFlatInterior) {
  const Image u = random_phantom(std::uint64_t{21}, 128);
  const Disc d = place_disc(u);
  EXPECT_LE(std::hypot(d.cx, d.cy), 0.6 + 1e-12);
  EXPECT_EQ(d.radius, 0.08);
  const Grid near = disc_mask(u, 2.0 * d.radius, d.cx, d.cy);
  for (std::size_t i = 0; i < u.size(); ++i) {
    if (near[i] != 0.0) {
      EXPECT_GT(u[i], 0.0);
    }
  }
  EXPECT_EQ(place_disc(u).cx, d.cx);
}

TEST(Dataset, CountsAndDisjointness) {
  const DatasetCounts defaults;
  EXPECT_EQ(defaults.train, 400u);
  EXPECT_EQ(defaults.val, 50u);
  EXPECT_EQ(defaults.test, 50u);

  const Dataset d = make_dataset(9, {6, 3, 4}, 16);
  EXPECT_EQ(d.train.size(), 6u);
  EXPECT_EQ(d.val.size(), 3u);
  EXPECT_EQ(d.test.size(), 4u);
  for (const Image& a : d.train)
    for (const Image& b : d.test) EXPECT_NE(a, b);
  std::set<std::uint64_t> seeds(d.train_seeds.begin(), d.train_seeds.end());
  seeds.insert(d.test_seeds.begin(), d.test_seeds.end());
  EXPECT_EQ(seeds.size(), 10u);

  const Dataset again = make_dataset(9, {6, 3, 4}, 16);
  EXPECT_EQ(again.train, d.train);
  EXPECT_EQ(again.test_seeds, d.test_seeds);
  EXPECT_EQ(d.test[2], random_phantom(derive_seed(9, 3, 2), 16));
}

TEST(Dataset, ManifestRoundTrip) {
  const fs::path dir = fs::temp_directory_path() / "anett_manifest_test";
  fs::remove_all(dir);
  const Dataset d = make_dataset(3, {2, 1, 2}, 16);
  const auto written = write_dataset(d, dir);
  EXPECT_EQ(written.size(), 5u);
  const auto entries = read_manifest(dir / "manifest.txt");
  ASSERT_EQ(entries.size(), 5u);
  EXPECT_EQ(entries[0].seed, d.train_seeds[0]);
  EXPECT_EQ(entries[4].split, Split::kTest);
  const auto test = load_split(dir / "manifest.txt", Split::kTest);
  ASSERT_EQ(test.size(), 2u);
  for (std::size_t i = 0; i < test[1].size(); ++i) EXPECT_NEAR(test[1][i], d.test[1][i], 1e-7);
  EXPECT_THROW(read_manifest(dir / "missing.txt"), FileNotFoundError);
  fs::remove_all(dir);
}

TEST(Dataset, SplitNames) {
  EXPECT_STREQ(split_name(Split::kVal), "val");
  EXPECT_EQ(parse_split("test"), Split::kTest);
  EXPECT_THROW(parse_split("holdout"), std::invalid_argument);
}

}  // namespace
}  // namespace anett
