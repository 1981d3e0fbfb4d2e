#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace anett::cli {

// Parses a flat key=value file. Blank lines and lines starting with '#' are
// skipped; keys and values are trimmed. Malformed lines throw.
std::vector<std::pair<std::string, std::string>> read_config_file(const std::filesystem::path& path);

// Rewrites `prog sub [args...]` so that every key=value from a `--config
// <path>` (or `--config=<path>`) argument appears as `--key=value` right after
// the subcommand. Explicit arguments come later and therefore win.
std::vector<std::string> expand_config(const std::vector<std::string>& args);

}  // namespace anett::cli
