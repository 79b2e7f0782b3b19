#include "ppwgan/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fcntl.h>
#include <limits>
#include <ostream>
#include <unistd.h>

#include "ppwgan/neural.hpp"

namespace ppwgan {

using nlohmann::json;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

enum Purpose : std::uint64_t {
  kData = 1,
  kTruthSample = 2,
  kTrain = 3,
  kFit = 4,
  kModelSample = 5,
  kQqSample = 6,
};

std::size_t index_of(const std::vector<std::string>& names, const std::string& name) {
  const auto it = std::find(names.begin(), names.end(), name);
  return static_cast<std::size_t>(it - names.begin());
}

// Field readers for config objects; absent keys keep the default.
double read_number(const json& j, const char* key, double fallback, const std::string& path) {
  if (!j.contains(key)) return fallback;
  const json& v = j.at(key);
  if (!v.is_number()) throw ConfigError(path + "." + key + ": expected a number");
  return v.get<double>();
}

std::size_t read_count(const json& j, const char* key, std::size_t fallback,
                       const std::string& path) {
  if (!j.contains(key)) return fallback;
  const json& v = j.at(key);
  if (!v.is_number_integer() || v.get<long long>() < 0) {
    throw ConfigError(path + "." + key + ": expected a non-negative integer");
  }
  return v.get<std::size_t>();
}

std::vector<std::string> read_names(const json& j, const char* key,
                                    const std::vector<std::string>& fallback,
                                    const std::string& path) {
  if (!j.contains(key)) return fallback;
  const json& v = j.at(key);
  if (!v.is_array()) throw ConfigError(path + "." + key + ": expected an array of strings");
  std::vector<std::string> out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!v[i].is_string()) {
      throw ConfigError(path + "." + key + "[" + std::to_string(i) + "]: expected a string");
    }
    out.push_back(v[i].get<std::string>());
  }
  return out;
}

void check_object(const json& j, const std::string& path) {
  if (!j.is_object()) throw ConfigError(path + ": expected an object");
}

// Re-raises the active exception with `where` prepended, keeping its type.
[[noreturn]] void rethrow_with_context(const std::string& where) {
  try {
    throw;
  } catch (const DomainError& e) {
    throw DomainError(where + ": " + e.what());
  } catch (const NumericalError& e) {
    throw NumericalError(where + ": " + e.what());
  } catch (const IoError& e) {
    throw IoError(where + ": " + e.what());
  } catch (const ConfigError& e) {
    throw ConfigError(where + ": " + e.what());
  }
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

const std::vector<std::string>& standard_dataset_names() {
  static const std::vector<std::string> names = {"IP",       "SE",       "SC",       "NN",
                                                 "IP+SE+SC", "IP+SE+NN", "IP+SC+NN", "SE+SC+NN"};
  return names;
}

const std::vector<std::string>& standard_estimators() {
  static const std::vector<std::string> names = {"WGAN", "MLE-IP", "MLE-SE", "MLE-SC",
                                                 "MLE-NN"};
  return names;
}

DatasetSpec dataset_spec(const std::string& name) {
  DatasetSpec spec{name, {}, {}};
  std::size_t start = 0;
  while (true) {
    const auto plus = name.find('+', start);
    const std::string part = name.substr(start, plus - start);
    try {
      spec.models.push_back(presets::by_name(part));
    } catch (const DomainError&) {
      throw ConfigError("dataset '" + name + "': unknown family '" + part + "'");
    }
    if (plus == std::string::npos) break;
    start = plus + 1;
  }
  spec.weights.assign(spec.models.size(), 1.0 / static_cast<double>(spec.models.size()));
  return spec;
}

void ExperimentConfig::validate() const {
  if (preset != "desk" && preset != "paper") {
    throw ConfigError("experiment.preset: expected \"desk\" or \"paper\"");
  }
  if (count == 0) throw ConfigError("experiment.count: must be positive");
  if (rounds == 0) throw ConfigError("experiment.rounds: must be positive");
  if (eval_samples == 0) throw ConfigError("experiment.eval_samples: must be positive");
  if (qq_samples == 0) throw ConfigError("experiment.qq_samples: must be positive");
  if (!(bin_width > 0.0)) throw ConfigError("experiment.bin_width: must be positive");
  for (std::size_t i = 0; i < datasets.size(); ++i) {
    try {
      dataset_spec(datasets[i]);
    } catch (const ConfigError& e) {
      throw ConfigError("experiment.datasets[" + std::to_string(i) + "]: " + e.what());
    }
  }
  const auto& known = standard_estimators();
  for (std::size_t i = 0; i < estimators.size(); ++i) {
    if (index_of(known, estimators[i]) == known.size()) {
      throw ConfigError("experiment.estimators[" + std::to_string(i) + "]: unknown estimator '" +
                        estimators[i] + "'");
    }
  }
  train.validate();
}

ExperimentConfig desk_preset() {
  ExperimentConfig c;
  c.preset = "desk";
  c.count = 2000;
  c.train.max_iters = 4000;
  c.train.hidden_dim = 64;
  return c;
}

ExperimentConfig paper_preset() {
  ExperimentConfig c = desk_preset();
  c.preset = "paper";
  c.count = 20000;
  c.rounds = 10;
  return c;
}

ExperimentConfig preset_by_name(const std::string& name) {
  if (name == "desk") return desk_preset();
  if (name == "paper") return paper_preset();
  throw ConfigError("preset: expected \"desk\" or \"paper\", got \"" + name + "\"");
}

// ---------------------------------------------------------------------------

json train_config_to_json(const TrainConfig& c) {
  json j = {{"nu", c.nu},
            {"lr", c.lr},
            {"beta1", c.beta1},
            {"beta2", c.beta2},
            {"batch", c.batch},
            {"n_critic", c.n_critic},
            {"hidden_dim", c.hidden_dim},
            {"max_iters", c.max_iters},
            {"early_stop_window", c.early_stop_window},
            {"early_stop_slope", c.early_stop_slope},
            {"seed", c.seed}};
  if (c.noise_rate) j["noise_rate"] = *c.noise_rate;
  return j;
}

TrainConfig train_config_from_json(const json& j, TrainConfig c, const std::string& path) {
  check_object(j, path);
  c.nu = read_number(j, "nu", c.nu, path);
  c.lr = read_number(j, "lr", c.lr, path);
  c.beta1 = read_number(j, "beta1", c.beta1, path);
  c.beta2 = read_number(j, "beta2", c.beta2, path);
  c.batch = read_count(j, "batch", c.batch, path);
  c.n_critic = read_count(j, "n_critic", c.n_critic, path);
  c.hidden_dim = read_count(j, "hidden_dim", c.hidden_dim, path);
  c.max_iters = read_count(j, "max_iters", c.max_iters, path);
  c.early_stop_window = read_count(j, "early_stop_window", c.early_stop_window, path);
  c.early_stop_slope = read_number(j, "early_stop_slope", c.early_stop_slope, path);
  c.seed = read_count(j, "seed", c.seed, path);
  if (j.contains("noise_rate")) c.noise_rate = read_number(j, "noise_rate", 0.0, path);
  return c;
}

json fit_config_to_json(const FitConfig& c) {
  return {{"lr", c.lr},
          {"max_iters", c.max_iters},
          {"grad_tol", c.grad_tol},
          {"ip_kernels", c.ip_kernels},
          {"nn_hidden", c.nn_hidden},
          {"batch", c.batch},
          {"nn_batch", c.nn_batch},
          {"seed", c.seed}};
}

FitConfig fit_config_from_json(const json& j, FitConfig c, const std::string& path) {
  check_object(j, path);
  c.lr = read_number(j, "lr", c.lr, path);
  c.max_iters = read_count(j, "max_iters", c.max_iters, path);
  c.grad_tol = read_number(j, "grad_tol", c.grad_tol, path);
  c.ip_kernels = read_count(j, "ip_kernels", c.ip_kernels, path);
  c.nn_hidden = read_count(j, "nn_hidden", c.nn_hidden, path);
  c.batch = read_count(j, "batch", c.batch, path);
  c.nn_batch = read_count(j, "nn_batch", c.nn_batch, path);
  c.seed = read_count(j, "seed", c.seed, path);
  return c;
}

json experiment_to_json(const ExperimentConfig& c) {
  return {{"version", kConfigVersion},
          {"preset", c.preset},
          {"count", c.count},
          {"rounds", c.rounds},
          {"eval_samples", c.eval_samples},
          {"qq_samples", c.qq_samples},
          {"bin_width", c.bin_width},
          {"seed", c.seed},
          {"datasets", c.datasets.empty() ? standard_dataset_names() : c.datasets},
          {"estimators", c.estimators.empty() ? standard_estimators() : c.estimators},
          {"train", train_config_to_json(c.train)},
          {"fit", fit_config_to_json(c.fit)}};
}

ExperimentConfig experiment_from_json(const json& j) {
  const std::string path = "experiment";
  check_object(j, path);
  const auto version = read_count(j, "version", kConfigVersion, path);
  if (version != kConfigVersion) {
    throw ConfigError(path + ".version: unsupported version " + std::to_string(version));
  }
  ExperimentConfig c;
  if (j.contains("preset")) {
    if (!j["preset"].is_string()) throw ConfigError(path + ".preset: expected a string");
    c = preset_by_name(j["preset"].get<std::string>());
  }
  c.count = read_count(j, "count", c.count, path);
  c.rounds = read_count(j, "rounds", c.rounds, path);
  c.eval_samples = read_count(j, "eval_samples", c.eval_samples, path);
  c.qq_samples = read_count(j, "qq_samples", c.qq_samples, path);
  c.bin_width = read_number(j, "bin_width", c.bin_width, path);
  c.seed = read_count(j, "seed", c.seed, path);
  c.datasets = read_names(j, "datasets", c.datasets, path);
  c.estimators = read_names(j, "estimators", c.estimators, path);
  if (j.contains("train")) c.train = train_config_from_json(j["train"], c.train, path + ".train");
  if (j.contains("fit")) c.fit = fit_config_from_json(j["fit"], c.fit, path + ".fit");
  c.validate();
  return c;
}

// ---------------------------------------------------------------------------

std::uint64_t round_seed(const ExperimentConfig& cfg, const std::string& dataset,
                         std::size_t round, std::uint64_t purpose) {
  // Keyed by the position in the standard list so that a run over a subset
  // of datasets reproduces the corresponding rows of a full run.
  const auto& names = standard_dataset_names();
  std::uint64_t id = index_of(names, dataset);
  if (id == names.size()) id = std::hash<std::string>{}(dataset);
  return mix_ids({cfg.seed, id, round, purpose});
}

RoundResult run_round(const ExperimentConfig& cfg, const std::string& dataset, std::size_t round,
                      std::ostream* progress) {
  const DatasetSpec spec = dataset_spec(dataset);
  const Window window(presets::kHorizon);
  const auto& all = standard_estimators();
  const std::vector<std::string> estimators = cfg.estimators.empty() ? all : cfg.estimators;
  auto log = [&](const std::string& msg) {
    if (progress) *progress << "[" << dataset << " round " << round << "] " << msg << std::endl;
  };

  RoundResult out;
  out.dataset = dataset;
  out.round = round;
  out.estimators = estimators;
  out.intensity_deviation.assign(estimators.size(), kNaN);
  out.qq_deviation.assign(estimators.size(), kNaN);

  const Dataset train_data = make_dataset(spec.models, spec.weights, cfg.count, window,
                                          round_seed(cfg, dataset, round, kData));
  const Dataset truth_sample = make_dataset(spec.models, spec.weights, cfg.eval_samples, window,
                                            round_seed(cfg, dataset, round, kTruthSample));
  const IntensityCurve truth_curve = empirical_intensity(truth_sample, cfg.bin_width);
  out.curves.push_back({"truth", truth_curve});

  for (std::size_t e = 0; e < estimators.size(); ++e) {
    const std::string& name = estimators[e];
    const std::uint64_t est_id = index_of(all, name);
    const auto t0 = std::chrono::steady_clock::now();
    Dataset sample(window, {});
    Dataset qq_sample(window, {});
    try {
      const std::uint64_t sample_seed =
          mix_ids({round_seed(cfg, dataset, round, kModelSample), est_id});
      const std::uint64_t qq_seed = mix_ids({round_seed(cfg, dataset, round, kQqSample), est_id});
      if (name == "WGAN") {
        TrainConfig tc = cfg.train;
        tc.seed = round_seed(cfg, dataset, round, kTrain);
        const TrainResult r = train(train_data, tc);
        sample = sample_generator(r.generator, r.noise_rate, cfg.eval_samples, window,
                                  sample_seed);
        if (!spec.is_mixture()) {
          qq_sample = sample_generator(r.generator, r.noise_rate, cfg.qq_samples, window, qq_seed);
        }
      } else {
        FitConfig fc = cfg.fit;
        fc.seed = mix_ids({round_seed(cfg, dataset, round, kFit), est_id});
        const FittedModel fitted = fit(train_data, parse_family(name.substr(4)), fc);
        sample = sample_fitted(fitted, cfg.eval_samples, window, sample_seed);
        if (!spec.is_mixture()) {
          qq_sample = sample_fitted(fitted, cfg.qq_samples, window, qq_seed);
        }
      }
    } catch (...) {
      rethrow_with_context(dataset + " round " + std::to_string(round) + ", " + name);
    }
    const IntensityCurve curve = empirical_intensity(sample, cfg.bin_width);
    out.intensity_deviation[e] = intensity_deviation(truth_curve, curve);
    out.curves.push_back({name, curve});
    if (!spec.is_mixture()) {
      QqPoints points;
      const QqResult q = qq_slope(qq_sample, spec.models.front(), &points);
      out.qq_deviation[e] = q.slope_deviation;
      out.qq_points.push_back({name, std::move(points)});
    }
    char buf[160];
    std::snprintf(buf, sizeof buf, "%s: intensity deviation %.4g, qq deviation %.4g (%.1fs)",
                  name.c_str(), out.intensity_deviation[e], out.qq_deviation[e],
                  seconds_since(t0));
    log(buf);
  }
  return out;
}

Report run_experiment(const ExperimentConfig& cfg, std::ostream* progress) {
  cfg.validate();
  const std::vector<std::string> datasets =
      cfg.datasets.empty() ? standard_dataset_names() : cfg.datasets;
  const std::vector<std::string> estimators =
      cfg.estimators.empty() ? standard_estimators() : cfg.estimators;

  Report report;
  ReportTable intensity{"intensity_deviation", estimators, {}};
  ReportTable qq{"qq_deviation", estimators, {}};
  for (const auto& d : datasets) {
    ReportTable::Row irow{d, std::vector<std::vector<double>>(estimators.size())};
    ReportTable::Row qrow{d, std::vector<std::vector<double>>(estimators.size())};
    for (std::size_t r = 0; r < cfg.rounds; ++r) {
      RoundResult rr = run_round(cfg, d, r, progress);
      for (std::size_t e = 0; e < estimators.size(); ++e) {
        if (!std::isnan(rr.intensity_deviation[e])) {
          irow.values[e].push_back(rr.intensity_deviation[e]);
        }
        if (!std::isnan(rr.qq_deviation[e])) qrow.values[e].push_back(rr.qq_deviation[e]);
      }
      if (r == 0) {
        report.intensity_charts.emplace_back("intensity_" + d, std::move(rr.curves));
        if (!rr.qq_points.empty()) report.qq_charts.emplace_back("qq_" + d, std::move(rr.qq_points));
      }
    }
    intensity.rows.push_back(std::move(irow));
    qq.rows.push_back(std::move(qrow));
  }
  report.tables.push_back(std::move(intensity));
  report.tables.push_back(std::move(qq));
  return report;
}

// ---------------------------------------------------------------------------

DirectoryLock::DirectoryLock(const std::filesystem::path& dir) : path_(dir / ".ppwgan.lock") {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  const int fd = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
  if (fd < 0) {
    throw IoError("output directory " + dir.string() +
                  " is in use by another run (remove " + path_.string() + " if stale)");
  }
  ::close(fd);
}

DirectoryLock::~DirectoryLock() {
  std::error_code ec;
  std::filesystem::remove(path_, ec);
}

}  // namespace ppwgan
