#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "anett/grid.hpp"

namespace anett {

using Rng = std::mt19937_64;

// splitmix64 mix of (master, stream, index); used for every derived seed so
// items can be generated independently and in any order.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream, std::uint64_t index);

struct PhantomOptions {
  std::size_t min_ellipses = 3;
  std::size_t max_ellipses = 12;
  double center_radius = 0.8;
  double min_axis = 0.05;
  double max_axis = 0.6;
  double min_intensity = -0.4;
  double max_intensity = 0.6;
  double support_radius = 0.95;
};

// Random ellipses inside a random body ellipse, clipped at 0 and rescaled to
// [0, 1]. Everything outside support_radius is zero.
Image random_phantom(Rng& rng, std::size_t side, const PhantomOptions& options = {});
Image random_phantom(std::uint64_t seed, std::size_t side, const PhantomOptions& options = {});

// y + level * mean(y) * delta with delta standard normal per bin.
Sinogram add_noise(const Sinogram& y, double level, Rng& rng);

struct Disc {
  double cx = 0.0;
  double cy = 0.0;
  double radius = 0.08;
  double intensity = 1.0;
};

// Sets pixels whose center lies inside the disc to its intensity.
Image add_disc(const Image& u, const Disc& disc);

// Center for a disc of the given radius where u varies least: candidates on a
// grid inside radius `reach`, scored by the variance of u over a neighborhood
// twice the disc radius. Ties go to the first candidate in raster order.
Disc place_disc(const Image& u, double radius = 0.08, double intensity = 1.0, double reach = 0.6);

enum class Split { kTrain = 0, kVal = 1, kTest = 2 };

const char* split_name(Split s);

struct DatasetCounts {
  std::size_t train = 400;
  std::size_t val = 50;
  std::size_t test = 50;
};

struct Dataset {
  std::vector<Image> train;
  std::vector<Image> val;
  std::vector<Image> test;
  std::vector<std::uint64_t> train_seeds;
  std::vector<std::uint64_t> val_seeds;
  std::vector<std::uint64_t> test_seeds;
};

// Phantom i of split s uses derive_seed(master, s, i).
Dataset make_dataset(std::uint64_t master_seed, const DatasetCounts& counts, std::size_t side,
                     const PhantomOptions& options = {});

// Manifest written next to a generated dataset: a header line, then one
// "path seed split" record per image; paths are relative to the manifest.
struct ManifestEntry {
  std::filesystem::path path;
  std::uint64_t seed = 0;
  Split split = Split::kTrain;
};

Split parse_split(const std::string& name);

// Writes every image as a grid file under dir plus dir/manifest.txt.
std::vector<ManifestEntry> write_dataset(const Dataset& data, const std::filesystem::path& dir);
std::vector<ManifestEntry> read_manifest(const std::filesystem::path& manifest);
// Loads the images of one split listed in a manifest, in listing order.
std::vector<Image> load_split(const std::filesystem::path& manifest, Split split);

}  // namespace anett
