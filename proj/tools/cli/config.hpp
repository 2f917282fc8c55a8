#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <kgcp/eval.hpp>
#include <kgcp/model.hpp>
#include <kgcp/predictor.hpp>
#include <kgcp/trainer.hpp>

namespace kgcp::cli {

/// Schema violation. `field` is a dotted path such as "model.dim" or
/// "predictors[2].k".
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string field, const std::string& message)
      : std::runtime_error(field + ": " + message), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

struct DataConfig {
  std::filesystem::path train;
  std::filesystem::path valid;
  std::filesystem::path test;
  /// Set instead of the paths to generate a planted graph in memory.
  std::optional<SyntheticConfig> synthetic;
};

struct ModelConfig {
  ModelKind kind{ModelFamily::DistMult, 1};
  std::size_t dim = 64;
  TrainConfig train;
};

struct PredictorEntry {
  PredictorSpec spec;
  /// Overrides the run's epsilon for this predictor.
  std::optional<double> epsilon;
};

struct EvalConfig {
  bool filtered = true;
  unsigned filter_splits = kTrain | kValid;
  double epsilon = 0.1;
  std::size_t trials = 15;
  /// 0 means `cal_fraction` of the validation split.
  std::size_t n_cal = 0;
  double cal_fraction = 0.8;
  std::vector<std::size_t> calibration_sizes{10, 100, 200, 500};
  std::vector<double> epsilons{0.05, 0.1, 0.2, 0.3, 0.5};
  std::size_t bin_width = 100;
  std::size_t max_rank = 3000;
};

struct RunConfig {
  DataConfig data;
  ModelConfig model;
  std::vector<PredictorEntry> predictors;
  EvalConfig eval;
  std::uint64_t seed = 0;
  std::filesystem::path output_dir = "out";
};

/// Parses a JSON config. Relative paths resolve against `base_dir`.
/// Missing sections take their defaults; unknown keys are rejected.
RunConfig parse_run_config(const std::string& text, const std::filesystem::path& base_dir);
/// Reads, parses and checks dataset paths.
RunConfig load_run_config(const std::filesystem::path& path);

/// Checks that every dataset path exists.
void check_paths(const RunConfig& cfg);

/// Default predictor list: naive, platt, topk, negscore, softmax, minmax.
std::vector<PredictorEntry> default_predictors();

}  // namespace kgcp::cli
