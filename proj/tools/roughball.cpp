// roughball: run one experiment from a JSON config.
//
//   roughball <sbp|entropy|quantize|empirical|inequalities|audit> --config FILE
//             [--out DIR] [--threads K] [--strict]
//
// Exit codes: 0 ok, 1 failed assertion under --strict, 2 config error, 3 runtime error.

#include <algorithm>
#include <iostream>
#include <thread>

#include "CLI11.hpp"
#include "roughball/config.hpp"
#include "roughball/error.hpp"
#include "roughball/runner.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kStrictFailure = 1;
constexpr int kConfigError = 2;
constexpr int kRuntimeError = 3;

}  // namespace

int main(int argc, char** argv) {
  using namespace roughball;
  CLI::App app{"Rough-path small-ball, entropy and quantization experiments"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  int threads = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  bool strict = false;

  const std::vector<std::pair<std::string, std::string>> kinds = {
      {"sbp", "small-ball probability curve and index fit"},
      {"entropy", "covering numbers of a Cameron-Martin ball mesh against SBP bounds"},
      {"quantize", "Lloyd codebooks and the quantization lower bound"},
      {"empirical", "weighted and uniform empirical measures in Wasserstein distance"},
      {"inequalities", "Gaussian correlation, shift and isoperimetric checks"},
      {"audit", "covariance conditions and wavelet variances of the model"}};
  for (const auto& [name, help] : kinds) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("--config", config_path, "experiment config (JSON)")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", out_dir, "output directory (default: the config's output)");
    sub->add_option("--threads", threads, "worker threads")->envname("ROUGHBALL_THREADS")->check(CLI::PositiveNumber);
    sub->add_flag("--strict", strict, "exit with status 1 when any assertion fails");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kConfigError;
  }
  const std::string command = app.get_subcommands().front()->get_name();

  ExperimentConfig config;
  try {
    config = load_config(config_path);
    if (to_string(config.experiment) != command) {
      throw ConfigError("experiment", "config describes \"" + to_string(config.experiment) +
                                          "\" but the subcommand is \"" + command + "\"");
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigError;
  }

  RunResult result;
  try {
    RunOptions options;
    options.out = out_dir;
    options.threads = threads;
    result = run_experiment(config, options);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const InvalidArgument& e) {
    std::cerr << "invalid argument: " << e.what() << "\n";
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kRuntimeError;
  }

  for (const auto& line : result.summary) std::cout << line << "\n";
  std::cout << "wrote " << result.files.size() + 1 << " files to " << result.directory.string() << "\n";
  std::cout << "manifest sha256 " << result.manifest_sha256 << "\n";
  for (const auto& f : result.failures) std::cout << "FAILED " << f << "\n";
  if (strict && !result.failures.empty()) return kStrictFailure;
  return kOk;
}
