#pragma once

// End-to-end comparison runs: simulate a dataset, fit every estimator,
// evaluate against an independent ground-truth sample, repeat over rounds.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "json.hpp"
#include "ppwgan/eval.hpp"
#include "ppwgan/mle.hpp"
#include "ppwgan/simulate.hpp"
#include "ppwgan/wgan.hpp"

namespace ppwgan {

struct DatasetSpec {
  std::string name;  // "SE" or "IP+SE+SC"
  std::vector<IntensityModel> models;
  std::vector<double> weights;
  bool is_mixture() const noexcept { return models.size() > 1; }
};

/// IP, SE, SC, NN, then the four uniform three-family mixtures.
const std::vector<std::string>& standard_dataset_names();
DatasetSpec dataset_spec(const std::string& name);

/// WGAN, MLE-IP, MLE-SE, MLE-SC, MLE-NN.
const std::vector<std::string>& standard_estimators();

struct ExperimentConfig {
  std::string preset = "desk";
  std::size_t count = 2000;
  std::size_t rounds = 1;
  /// Independent sequences drawn from the truth and from each fitted model
  /// for the empirical-intensity comparison.
  std::size_t eval_samples = 20000;
  /// Sequences drawn from each fitted model for the QQ slope.
  std::size_t qq_samples = 5000;
  double bin_width = kDefaultBinWidth;
  std::uint64_t seed = 1;
  std::vector<std::string> datasets;    // empty: all standard datasets
  std::vector<std::string> estimators;  // empty: all standard estimators
  TrainConfig train;
  FitConfig fit;

  void validate() const;
};

ExperimentConfig desk_preset();
/// Desk preset with 20000 sequences per dataset.
ExperimentConfig paper_preset();
ExperimentConfig preset_by_name(const std::string& name);

inline constexpr int kConfigVersion = 1;

nlohmann::json train_config_to_json(const TrainConfig& c);
/// Fields absent from `j` keep the values already in `base`.
TrainConfig train_config_from_json(const nlohmann::json& j, TrainConfig base,
                                   const std::string& path);
nlohmann::json fit_config_to_json(const FitConfig& c);
FitConfig fit_config_from_json(const nlohmann::json& j, FitConfig base, const std::string& path);
nlohmann::json experiment_to_json(const ExperimentConfig& c);
ExperimentConfig experiment_from_json(const nlohmann::json& j);

struct RoundResult {
  std::string dataset;
  std::size_t round = 0;
  std::vector<std::string> estimators;
  /// Per estimator; NaN where the estimator was not run.
  std::vector<double> intensity_deviation;
  /// Per estimator; NaN for mixtures (no single truth compensator).
  std::vector<double> qq_deviation;
  std::vector<NamedCurve> curves;  // truth first
  std::vector<NamedQq> qq_points;
};

/// Seed shared by every random choice of (dataset, round, purpose).
std::uint64_t round_seed(const ExperimentConfig& cfg, const std::string& dataset,
                         std::size_t round, std::uint64_t purpose);

RoundResult run_round(const ExperimentConfig& cfg, const std::string& dataset, std::size_t round,
                      std::ostream* progress = nullptr);

/// Runs every dataset and round and assembles the tables
/// intensity_deviation and qq_deviation plus round-0 charts.
Report run_experiment(const ExperimentConfig& cfg, std::ostream* progress = nullptr);

/// Exclusive marker file in an output directory, removed on destruction.
class DirectoryLock {
 public:
  explicit DirectoryLock(const std::filesystem::path& dir);
  ~DirectoryLock();
  DirectoryLock(const DirectoryLock&) = delete;
  DirectoryLock& operator=(const DirectoryLock&) = delete;

 private:
  std::filesystem::path path_;
};

}  // namespace ppwgan
