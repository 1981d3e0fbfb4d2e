#include <bit>
#include <cstdint>
#include <fstream>
#include <sstream>

#include "anett/grid_io.hpp"
#include "anett/net.hpp"

namespace anett {

namespace {

constexpr const char* kMagic = "ANETT-PARAMS";
constexpr int kVersion = 1;

std::string next_line(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw MalformedHeaderError("parameter file: truncated header");
  return line;
}

std::string after_key(const std::string& line, const std::string& key) {
  if (line.rfind(key + " ", 0) != 0) {
    throw MalformedHeaderError("parameter file: expected '" + key + "', got '" + line + "'");
  }
  return line.substr(key.size() + 1);
}

}  // namespace

void save_params(const NetworkParams& params, const std::filesystem::path& path) {
  params.validate();
  if (!params.all_finite()) throw std::invalid_argument("save_params: non-finite parameters");
  std::ostringstream out;
  out << kMagic << ' ' << kVersion << '\n';
  out << "arch " << params.arch.to_string() << '\n';
  out << "seed " << params.seed << '\n';
  out << "arrays " << params.arrays.size() << '\n';
  out << "dtype f32le\n";
  out << "end\n";
  std::string bytes = out.str();
  for (const auto& a : params.arrays) {
    for (float v : a) {
      const auto bits = std::bit_cast<std::uint32_t>(v);
      for (int b = 0; b < 4; ++b) bytes.push_back(static_cast<char>((bits >> (8 * b)) & 0xffu));
    }
  }
  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file) throw GridIoError("cannot open for writing: " + path.string());
  file.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!file) throw GridIoError("write failed: " + path.string());
}

NetworkParams load_params(const std::filesystem::path& path) {
  std::ifstream file(path, std::ios::binary);
  if (!file) throw FileNotFoundError("model file not found: " + path.string());
  NetworkParams p;
  {
    std::istringstream in(next_line(file));
    std::string magic;
    int version = 0;
    in >> magic >> version;
    if (magic != kMagic) throw MalformedHeaderError("parameter file: bad magic in " + path.string());
    if (version != kVersion) throw MalformedHeaderError("parameter file: unsupported version");
  }
  try {
    p.arch = Architecture::parse(after_key(next_line(file), "arch"));
  } catch (const std::invalid_argument& e) {
    throw MalformedHeaderError(std::string("parameter file: ") + e.what());
  }
  p.seed = std::stoull(after_key(next_line(file), "seed"));
  const std::size_t count = std::stoul(after_key(next_line(file), "arrays"));
  if (after_key(next_line(file), "dtype") != "f32le") throw DtypeMismatchError("parameter file: dtype must be f32le");
  if (next_line(file) != "end") throw MalformedHeaderError("parameter file: missing end marker");

  const auto sizes = p.arch.array_sizes();
  if (count != sizes.size()) {
    throw ShapeError("parameter file: " + std::to_string(count) + " arrays but descriptor needs " +
                     std::to_string(sizes.size()));
  }
  for (std::size_t n : sizes) {
    std::vector<char> raw(4 * n);
    file.read(raw.data(), static_cast<std::streamsize>(raw.size()));
    if (file.gcount() != static_cast<std::streamsize>(raw.size())) {
      throw TruncatedPayloadError("parameter file: payload shorter than descriptor requires");
    }
    std::vector<float> a(n);
    for (std::size_t i = 0; i < n; ++i) {
      std::uint32_t bits = 0;
      for (int b = 0; b < 4; ++b) {
        bits |= static_cast<std::uint32_t>(static_cast<unsigned char>(raw[4 * i + b])) << (8 * b);
      }
      a[i] = std::bit_cast<float>(bits);
    }
    p.arrays.push_back(std::move(a));
  }
  if (file.peek() != std::char_traits<char>::eof()) {
    throw ShapeError("parameter file: payload longer than descriptor requires");
  }
  return p;
}

NetworkParams load_params(const std::filesystem::path& path, NetKind expected) {
  NetworkParams p = load_params(path);
  if (p.arch.kind != expected) {
    throw ShapeError(path.string() + ": expected " +
                     std::string(expected == NetKind::kAutoencoder ? "autoencoder" : "adapter") + " parameters");
  }
  return p;
}

}  // namespace anett
