#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"
#include "roughball/config.hpp"

namespace roughball {

struct RunOptions {
  std::filesystem::path out;  // empty: the config's output directory
  int threads = 1;
};

struct RunResult {
  std::filesystem::path directory;
  std::map<std::string, std::string> files;  // name -> content, manifest excluded
  nlohmann::json manifest;
  std::string manifest_sha256;
  std::vector<std::string> failures;  // failed assertions (violated verdicts and the like)
  std::vector<std::string> summary;   // one line per headline result
};

/**
 * Runs one experiment and writes its artifacts plus config.json and manifest.json.
 * Every file is written atomically and embeds the config hash; file contents depend
 * only on the config, never on `threads`. Module errors are rethrown with the
 * experiment name prefixed.
 */
RunResult run_experiment(const ExperimentConfig& config, const RunOptions& options);

}  // namespace roughball
