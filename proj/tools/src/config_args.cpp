#include "config_args.hpp"

#include <fstream>
#include <stdexcept>

#include "anett/error.hpp"

namespace anett::cli {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

std::vector<std::pair<std::string, std::string>> read_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FileNotFoundError("config file not found: " + path.string());
  std::vector<std::pair<std::string, std::string>> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument(path.string() + ":" + std::to_string(lineno) + ": expected key=value");
    }
    std::string key = trim(t.substr(0, eq));
    if (key.rfind("--", 0) == 0) key = key.substr(2);
    if (key.empty()) throw std::invalid_argument(path.string() + ":" + std::to_string(lineno) + ": empty key");
    out.emplace_back(key, trim(t.substr(eq + 1)));
  }
  return out;
}

std::vector<std::string> expand_config(const std::vector<std::string>& args) {
  if (args.size() < 2) return args;
  std::vector<std::string> rest;
  std::vector<std::string> injected;
  for (std::size_t i = 2; i < args.size(); ++i) {
    std::string path;
    if (args[i] == "--config") {
      if (i + 1 >= args.size()) throw std::invalid_argument("--config requires a path");
      path = args[++i];
    } else if (args[i].rfind("--config=", 0) == 0) {
      path = args[i].substr(9);
    } else {
      rest.push_back(args[i]);
      continue;
    }
    for (const auto& [k, v] : read_config_file(path)) injected.push_back("--" + k + "=" + v);
  }
  std::vector<std::string> out{args[0], args[1]};
  out.insert(out.end(), injected.begin(), injected.end());
  out.insert(out.end(), rest.begin(), rest.end());
  return out;
}

}  // namespace anett::cli
