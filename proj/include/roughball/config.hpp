#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "roughball/g2.hpp"
#include "roughball/gaussian.hpp"

namespace roughball {

enum class ExperimentKind { sbp, entropy, quantize, empirical, inequalities, audit };

std::string to_string(ExperimentKind k);
ExperimentKind experiment_kind_from_string(const std::string& s);

struct ModelSpec {
  std::string kind = "brownian";  // brownian, fbm or custom
  int d = 1;
  double hurst = 0.5;             // fbm
  std::vector<double> tau;        // custom sigma2 table
  std::vector<double> sigma2;
  double rho = 1.0;               // custom; derived for brownian and fbm

  bool operator==(const ModelSpec&) const = default;
};

/**
 * A fully resolved experiment description. Common fields are typed; the
 * experiment-specific block `params` is validated and has every default filled
 * in, so the echo of a config parses back to an equal config.
 */
struct ExperimentConfig {
  ExperimentKind experiment = ExperimentKind::sbp;
  ModelSpec model;
  double alpha = 0.4;
  double horizon = 1.0;      // grid.T
  std::size_t steps = 1024;  // grid.N
  std::uint64_t seed = 0;
  std::size_t n = 100000;
  std::vector<double> eps;   // empty: chosen by the experiment
  NormVariant norm_variant = kDefaultNorm;
  std::string output;        // default out/<experiment>
  nlohmann::json params;

  bool operator==(const ExperimentConfig&) const = default;
};

/// Parses and validates a JSON document; throws ConfigError naming the offending key.
ExperimentConfig parse_config(const nlohmann::json& j);
ExperimentConfig parse_config_text(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);

/// The resolved config as JSON (every default written out).
nlohmann::json echo(const ExperimentConfig& config);

/// SHA-256 of the compact echo without the output directory, which only places results.
std::string config_hash(const ExperimentConfig& config);

CovarianceModel make_model(const ExperimentConfig& config);
std::vector<double> make_grid(const ExperimentConfig& config);

/// Resolves one entry of an inequalities check list (exposed for tests).
nlohmann::json resolve_check(const nlohmann::json& check, const std::string& key);

}  // namespace roughball
