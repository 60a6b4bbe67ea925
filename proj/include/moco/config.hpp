#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "moco/dataset.hpp"
#include "moco/harness.hpp"

namespace moco {

/// Everything a CLI run needs. Every field has a default, so an empty file
/// runs the full desk-scale suite.
struct Config {
  std::uint64_t seed = 0;
  unsigned threads = 1;
  std::string out = "moco-out";
  std::string model_path;  // empty: <out>/model.json
  SyntheticConfig data;
  std::vector<std::size_t> hidden{32, 32};
  TrainConfig train;
  ExperimentSpec spec;
  bool norms_given = false;  // experiment.norms was set explicitly
};

/// Parses key = value lines with optional [section] headers; a key inside
/// [section] is addressed as "section.key". '#' starts a comment; values may
/// be quoted; lists are comma separated, optionally in [ ]. Unknown keys and
/// malformed values throw FormatError naming the key and line.
Config parse_config(const std::string& text);
Config load_config(const std::string& path);

/// Applies one "section.key" = value assignment.
void apply_setting(Config& config, const std::string& key, const std::string& value);

/// All accepted keys, sorted.
std::vector<std::string> config_keys();

}  // namespace moco
