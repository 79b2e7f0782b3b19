// ppwgan: command-line front end for simulation, training, fitting,
// evaluation and full reproduction runs.
//
// Exit codes: 0 ok, 2 usage / bad config, 3 domain, 4 numerical, 5 I/O.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "ppwgan/core.hpp"
#include "ppwgan/distance.hpp"
#include "ppwgan/eval.hpp"
#include "ppwgan/experiment.hpp"
#include "ppwgan/mle.hpp"
#include "ppwgan/neural.hpp"
#include "ppwgan/parallel.hpp"
#include "ppwgan/simulate.hpp"
#include "ppwgan/wgan.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace ppwgan;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitDomain = 3;
constexpr int kExitNumerical = 4;
constexpr int kExitIo = 5;

const char* const kQqMixtureRefusal =
    "QQ evaluation refused: for mixture datasets QQ evaluation is not feasible, because no "
    "single ground-truth compensator exists to time-change the events. Use --metric intensity.";

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path + ": invalid JSON: " + e.what());
  }
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw IoError("failed writing " + path.string());
}

fs::path prepare_out(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir + ": " + ec.message());
  return fs::path(dir);
}

// ---------------------------------------------------------------------------
// Simulation configs
//
//   {"version": 1, "model": {...} | "preset": "SC" | "mixture": [...],
//    "count": 2000, "seed": 7, "T": 15, "output": "data.jsonl"}
//
// Mixture components are {"model": {...}, "weight": w} or
// {"preset": "SE", "weight": w}; weights are normalised.

struct SimulationConfig {
  DatasetSpec spec;
  std::size_t count = 0;
  std::uint64_t seed = 0;
  double horizon = presets::kHorizon;
  std::string output = "data.jsonl";
};

IntensityModel component_model(const json& j, const std::string& path) {
  if (!j.is_object()) throw ConfigError(path + ": expected an object");
  if (j.contains("model")) return model_from_json(j["model"], path + ".model");
  if (j.contains("preset")) {
    if (!j["preset"].is_string()) throw ConfigError(path + ".preset: expected a string");
    try {
      return presets::by_name(j["preset"].get<std::string>());
    } catch (const DomainError& e) {
      throw ConfigError(path + ".preset: " + e.what());
    }
  }
  throw ConfigError(path + ": needs \"model\" or \"preset\"");
}

SimulationConfig simulation_from_json(const json& j) {
  const std::string path = "config";
  if (!j.is_object()) throw ConfigError(path + ": expected an object");
  if (j.contains("version") && j["version"] != kConfigVersion) {
    throw ConfigError(path + ".version: unsupported version");
  }
  SimulationConfig c;
  if (j.contains("mixture")) {
    const json& m = j["mixture"];
    if (!m.is_array() || m.empty()) {
      throw ConfigError(path + ".mixture: expected a non-empty array");
    }
    double total = 0.0;
    std::vector<std::string> names;
    for (std::size_t i = 0; i < m.size(); ++i) {
      const std::string p = path + ".mixture[" + std::to_string(i) + "]";
      c.spec.models.push_back(component_model(m[i], p));
      const double w = m[i].value("weight", 1.0);
      if (!(w > 0.0)) throw ConfigError(p + ".weight: must be positive");
      c.spec.weights.push_back(w);
      total += w;
      names.push_back(family_name(family_of(c.spec.models.back())));
    }
    for (double& w : c.spec.weights) w /= total;
    for (std::size_t i = 0; i < names.size(); ++i) c.spec.name += (i ? "+" : "") + names[i];
  } else {
    c.spec.models.push_back(component_model(j, path));
    c.spec.weights.push_back(1.0);
    c.spec.name = family_name(family_of(c.spec.models.front()));
  }
  for (std::size_t i = 0; i < c.spec.models.size(); ++i) {
    try {
      validate_model(c.spec.models[i]);
    } catch (const DomainError& e) {
      throw ConfigError(path + (c.spec.models.size() > 1 ? ".mixture[" + std::to_string(i) + "]"
                                                         : std::string{}) +
                        ": " + e.what());
    }
  }
  if (j.contains("count")) {
    if (!j["count"].is_number_integer() || j["count"].get<long long>() < 0) {
      throw ConfigError(path + ".count: expected a non-negative integer");
    }
    c.count = j["count"].get<std::size_t>();
  }
  if (j.contains("seed")) {
    if (!j["seed"].is_number_integer()) throw ConfigError(path + ".seed: expected an integer");
    c.seed = j["seed"].get<std::uint64_t>();
  }
  if (j.contains("T")) {
    if (!j["T"].is_number() || !(j["T"].get<double>() > 0.0)) {
      throw ConfigError(path + ".T: expected a positive number");
    }
    c.horizon = j["T"].get<double>();
  }
  if (j.contains("output")) {
    if (!j["output"].is_string()) throw ConfigError(path + ".output: expected a string");
    c.output = j["output"].get<std::string>();
  }
  return c;
}

// A truth or model given either as a preset name ("SC", "IP+SE+SC") or as a
// simulation config file.
DatasetSpec spec_from_argument(const std::string& arg) {
  if (fs::exists(arg)) return simulation_from_json(read_json_file(arg)).spec;
  return dataset_spec(arg);
}

// ---------------------------------------------------------------------------

struct Common {
  std::string out = ".";
};

int cmd_simulate(const std::string& config_path, const Common& common,
                 std::optional<std::size_t> count, std::optional<std::uint64_t> seed) {
  SimulationConfig c = simulation_from_json(read_json_file(config_path));
  if (count) c.count = *count;
  if (seed) c.seed = *seed;
  for (const auto& m : c.spec.models) {
    for (const auto& w : model_warnings(m)) std::cerr << "warning: " << w << "\n";
  }
  const Window window(c.horizon);
  const Dataset data = make_dataset(c.spec.models, c.spec.weights, c.count, window, c.seed);
  const fs::path out = prepare_out(common.out) / c.output;
  write_dataset(data, out.string());
  std::printf("wrote %s: %zu sequences, label %s, mean rate %.6g\n", out.string().c_str(),
              data.sequences.size(), data.label.c_str(), data.mean_event_rate());
  return 0;
}

struct TrainFlags {
  std::string config;
  std::optional<std::size_t> iters, k, batch;
  std::optional<std::uint64_t> seed;
  std::optional<double> nu, lr;
};

int cmd_train(const std::string& data_path, const Common& common, const TrainFlags& f) {
  TrainConfig cfg;
  if (!f.config.empty()) cfg = train_config_from_json(read_json_file(f.config), cfg, "train");
  if (f.iters) cfg.max_iters = *f.iters;
  if (f.k) cfg.hidden_dim = *f.k;
  if (f.batch) cfg.batch = *f.batch;
  if (f.seed) cfg.seed = *f.seed;
  if (f.nu) cfg.nu = *f.nu;
  if (f.lr) cfg.lr = *f.lr;
  cfg.validate();

  const Dataset data = read_dataset(data_path);
  const fs::path out = prepare_out(common.out);
  cfg.abort_checkpoint_path = (out / "checkpoint_abort.json").string();
  const TrainResult r = train(data, cfg);
  save_checkpoint(Checkpoint{r.generator, r.critic, data.window.horizon(), r.noise_rate,
                             r.generator_iterations},
                  (out / "checkpoint.json").string());
  std::ostringstream log;
  write_train_log(r.log, log, /*include_timing=*/true);
  write_text(out / "train_log.csv", log.str());
  std::printf("trained %zu generator iterations%s; wrote %s\n", r.generator_iterations,
              r.early_stopped ? " (early stop)" : "", (out / "checkpoint.json").string().c_str());
  return 0;
}

int cmd_fit(const std::string& data_path, const Common& common, const std::string& family_arg,
            const std::string& config, std::optional<std::size_t> iters,
            std::optional<std::uint64_t> seed) {
  Family family;
  try {
    family = parse_family(family_arg);
  } catch (const DomainError& e) {
    throw ConfigError(std::string("--family: ") + e.what());
  }
  FitConfig cfg;
  if (!config.empty()) cfg = fit_config_from_json(read_json_file(config), cfg, "fit");
  if (iters) cfg.max_iters = *iters;
  if (seed) cfg.seed = *seed;
  const Dataset data = read_dataset(data_path);
  const FittedModel fitted = fit(data, family, cfg);
  const fs::path out = prepare_out(common.out) / ("fitted_" + family_name(family) + ".json");
  write_text(out, fitted_to_json(fitted).dump(2) + "\n");
  std::printf("fitted %s: mean loglik %.6g after %zu iterations; wrote %s\n",
              family_name(family).c_str(), fitted.final_loglik, fitted.iterations,
              out.string().c_str());
  return 0;
}

// Something that can produce sample sequences: a checkpoint, a fitted model
// file, or a truth spec.
struct SampleSource {
  std::string name;
  std::function<Dataset(std::size_t, std::uint64_t)> sample;
};

SampleSource load_source(const std::string& arg, const Window& window) {
  if (fs::exists(arg) && fs::path(arg).extension() == ".json") {
    const json j = read_json_file(arg);
    if (j.is_object() && j.value("format", "") == "ppwgan-checkpoint") {
      auto ck = std::make_shared<Checkpoint>(checkpoint_from_json(j));
      if (ck->horizon != window.horizon()) {
        throw DomainError("checkpoint horizon does not match the truth window");
      }
      return {"WGAN", [ck, window](std::size_t n, std::uint64_t s) {
                return sample_generator(ck->generator, ck->noise_rate, n, window, s);
              }};
    }
    if (j.is_object() && j.contains("family")) {
      auto fitted = std::make_shared<FittedModel>(fitted_from_json(j));
      return {"MLE-" + family_name(family_of(fitted->model)),
              [fitted, window](std::size_t n, std::uint64_t s) {
                return sample_fitted(*fitted, n, window, s);
              }};
    }
  }
  auto spec = std::make_shared<DatasetSpec>(spec_from_argument(arg));
  return {spec->name, [spec, window](std::size_t n, std::uint64_t s) {
            return make_dataset(spec->models, spec->weights, n, window, s);
          }};
}

int cmd_evaluate(const std::string& truth_arg, const std::string& model_arg,
                 const std::string& metric, const Common& common, std::size_t samples,
                 std::uint64_t seed, double bin_width) {
  const DatasetSpec truth = spec_from_argument(truth_arg);
  if (metric == "qq" && truth.is_mixture()) {
    std::cerr << kQqMixtureRefusal << "\n";
    return kExitDomain;
  }
  const Window window(presets::kHorizon);
  const SampleSource source = load_source(model_arg, window);
  const Dataset generated = source.sample(samples, mix_ids({seed, 2}));
  const fs::path out = prepare_out(common.out);

  if (metric == "intensity") {
    const Dataset truth_sample =
        make_dataset(truth.models, truth.weights, samples, window, mix_ids({seed, 1}));
    const IntensityCurve a = empirical_intensity(truth_sample, bin_width);
    const IntensityCurve b = empirical_intensity(generated, bin_width);
    const double dev = intensity_deviation(a, b);
    std::ostringstream csv;
    csv << "bin_start,truth," << source.name << "\n";
    for (std::size_t j = 0; j < a.values.size(); ++j) {
      char buf[96];
      std::snprintf(buf, sizeof buf, "%.6g,%.6g,%.6g\n", a.bin_start(j), a.values[j],
                    b.values[j]);
      csv << buf;
    }
    write_text(out / "intensity.csv", csv.str());
    const NamedCurve curves[] = {{"truth " + truth.name, a}, {source.name, b}};
    std::ostringstream svg;
    write_intensity_svg(curves, "empirical intensity", svg);
    write_text(out / "intensity.svg", svg.str());
    char buf[128];
    std::snprintf(buf, sizeof buf, "metric,estimator,value\nintensity_deviation,%s,%.6g\n",
                  source.name.c_str(), dev);
    write_text(out / "summary.csv", buf);
    std::printf("intensity deviation %.6g\n", dev);
    return 0;
  }
  if (metric == "qq") {
    QqPoints points;
    const QqResult q = qq_slope(generated, truth.models.front(), &points);
    std::ostringstream csv;
    csv << "theoretical,empirical\n";
    for (std::size_t i = 0; i < points.theoretical.size(); ++i) {
      char buf[64];
      std::snprintf(buf, sizeof buf, "%.6g,%.6g\n", points.theoretical[i], points.empirical[i]);
      csv << buf;
    }
    write_text(out / "qq.csv", csv.str());
    const NamedQq series[] = {{source.name, std::move(points)}};
    std::ostringstream svg;
    write_qq_svg(series, "QQ against Exp(1)", svg);
    write_text(out / "qq.svg", svg.str());
    char buf[192];
    std::snprintf(buf, sizeof buf,
                  "metric,estimator,value\nqq_slope,%s,%.6g\nqq_slope_deviation,%s,%.6g\n",
                  source.name.c_str(), q.slope, source.name.c_str(), q.slope_deviation);
    write_text(out / "summary.csv", buf);
    std::printf("qq slope %.6g (deviation %.6g, %zu intervals)\n", q.slope, q.slope_deviation,
                q.sample_size);
    return 0;
  }
  throw ConfigError("--metric: expected qq or intensity");
}

struct ReproduceFlags {
  std::string preset = "desk";
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> iters, k, batch, count, rounds, eval_samples, qq_samples, fit_iters;
  std::optional<double> lr;
  std::vector<std::string> datasets, estimators;
};

int cmd_reproduce(const Common& common, const ReproduceFlags& f) {
  ExperimentConfig cfg = f.config.empty() ? preset_by_name(f.preset)
                                          : experiment_from_json(read_json_file(f.config));
  if (f.seed) cfg.seed = *f.seed;
  if (f.iters) cfg.train.max_iters = *f.iters;
  if (f.k) cfg.train.hidden_dim = *f.k;
  if (f.batch) cfg.train.batch = *f.batch;
  if (f.lr) cfg.train.lr = *f.lr;
  if (f.count) cfg.count = *f.count;
  if (f.rounds) cfg.rounds = *f.rounds;
  if (f.eval_samples) cfg.eval_samples = *f.eval_samples;
  if (f.qq_samples) cfg.qq_samples = *f.qq_samples;
  if (f.fit_iters) cfg.fit.max_iters = *f.fit_iters;
  if (!f.datasets.empty()) cfg.datasets = f.datasets;
  if (!f.estimators.empty()) cfg.estimators = f.estimators;
  cfg.validate();

  const fs::path out = prepare_out(common.out);
  DirectoryLock lock(out);
  write_text(out / "config.json", experiment_to_json(cfg).dump(2) + "\n");
  if (cfg.preset == "paper") {
    std::cerr << "warning: the full-scale preset (" << cfg.count << " sequences per dataset, "
              << cfg.rounds << " rounds) takes days on a single machine; wrote "
              << (out / "config.json").string()
              << ". Run it with: ppwgan reproduce --config " << (out / "config.json").string()
              << " --out <dir>\n";
    return 0;
  }
  const Report report = run_experiment(cfg, &std::cerr);
  emit_report(report, out);
  std::ostringstream table;
  write_table_csv(report.tables.front(), table);
  std::cout << table.str();
  return 0;
}

int cmd_distance(const std::string& a_path, const std::string& b_path, const Common& common,
                 const std::string& output) {
  const Dataset a = read_dataset(a_path);
  const Dataset b = read_dataset(b_path, a.window);
  const fs::path out = prepare_out(common.out) / output;
  std::ofstream csv(out, std::ios::binary);
  if (!csv) throw IoError("cannot open " + out.string() + " for writing");
  csv << "i,j,distance\n";
  std::vector<double> row(b.sequences.size());
  for (std::size_t i = 0; i < a.sequences.size(); ++i) {
    parallel::for_each_index(row.size(), [&](std::size_t j) {
      row[j] = star_distance(a.sequences[i], b.sequences[j], a.window);
    });
    for (std::size_t j = 0; j < row.size(); ++j) {
      char buf[80];
      std::snprintf(buf, sizeof buf, "%zu,%zu,%.17g\n", i, j, row[j]);
      csv << buf;
    }
  }
  if (!csv) throw IoError("failed writing " + out.string());
  std::printf("wrote %zu distances to %s\n", a.sequences.size() * b.sequences.size(),
              out.string().c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  parallel::configure_from_env();

  CLI::App app{"Intensity-free generative models for temporal point processes"};
  app.require_subcommand(1);
  Common common;

  auto* sim = app.add_subcommand("simulate", "Simulate a dataset from a JSON config");
  std::string sim_config;
  std::optional<std::size_t> sim_count;
  std::optional<std::uint64_t> sim_seed;
  sim->add_option("config", sim_config, "Simulation config (JSON)")->required();
  sim->add_option("--count", sim_count, "Override the sequence count");
  sim->add_option("--seed", sim_seed, "Override the seed");
  sim->add_option("--out", common.out, "Output directory");

  auto* tr = app.add_subcommand("train", "Train the WGAN generator on a dataset");
  std::string tr_data;
  TrainFlags tf;
  tr->add_option("data", tr_data, "Dataset (JSONL)")->required();
  tr->add_option("--config", tf.config, "Training config (JSON)");
  tr->add_option("--iters", tf.iters, "Generator iterations");
  tr->add_option("--seed", tf.seed, "Seed");
  tr->add_option("--nu", tf.nu, "Lipschitz penalty weight");
  tr->add_option("--k", tf.k, "Hidden units");
  tr->add_option("--batch", tf.batch, "Batch size");
  tr->add_option("--lr", tf.lr, "Adam learning rate");
  tr->add_option("--out", common.out, "Output directory");

  auto* ft = app.add_subcommand("fit", "Maximum-likelihood fit of a parametric family");
  std::string ft_data, ft_family, ft_config;
  std::optional<std::size_t> ft_iters;
  std::optional<std::uint64_t> ft_seed;
  ft->add_option("data", ft_data, "Dataset (JSONL)")->required();
  ft->add_option("--family", ft_family, "IP, SE, SC or NN")->required();
  ft->add_option("--config", ft_config, "Fit config (JSON)");
  ft->add_option("--iters", ft_iters, "Maximum optimizer iterations");
  ft->add_option("--seed", ft_seed, "Seed");
  ft->add_option("--out", common.out, "Output directory");

  auto* ev = app.add_subcommand("evaluate", "Compare a model with a ground truth");
  std::string ev_truth, ev_model, ev_metric;
  std::size_t ev_samples = 20000;
  std::uint64_t ev_seed = 0;
  double ev_bin = kDefaultBinWidth;
  ev->add_option("--truth", ev_truth, "Preset name (e.g. SC, IP+SE+SC) or simulation config")
      ->required();
  ev->add_option("--model", ev_model,
                 "Checkpoint, fitted-model file, preset name or simulation config")
      ->required();
  ev->add_option("--metric", ev_metric, "qq or intensity")
      ->required()
      ->check(CLI::IsMember({"qq", "intensity"}));
  ev->add_option("--samples", ev_samples, "Sequences drawn from truth and model");
  ev->add_option("--seed", ev_seed, "Seed");
  ev->add_option("--bin-width", ev_bin, "Empirical intensity bin width");
  ev->add_option("--out", common.out, "Output directory");

  auto* rp = app.add_subcommand("reproduce", "Run the full comparison over all datasets");
  ReproduceFlags rf;
  rp->add_option("--preset", rf.preset, "desk or paper")->check(CLI::IsMember({"desk", "paper"}));
  rp->add_option("--config", rf.config, "Experiment config (JSON); replaces the preset");
  rp->add_option("--seed", rf.seed, "Seed");
  rp->add_option("--iters", rf.iters, "WGAN generator iterations");
  rp->add_option("--k", rf.k, "WGAN hidden units");
  rp->add_option("--batch", rf.batch, "WGAN batch size");
  rp->add_option("--lr", rf.lr, "WGAN learning rate");
  rp->add_option("--count", rf.count, "Training sequences per dataset");
  rp->add_option("--rounds", rf.rounds, "Repetitions per dataset");
  rp->add_option("--eval-samples", rf.eval_samples, "Sequences per empirical intensity");
  rp->add_option("--qq-samples", rf.qq_samples, "Sequences per QQ slope");
  rp->add_option("--fit-iters", rf.fit_iters, "Maximum MLE optimizer iterations");
  rp->add_option("--datasets", rf.datasets, "Subset of datasets")->delimiter(',');
  rp->add_option("--estimators", rf.estimators, "Subset of estimators")->delimiter(',');
  rp->add_option("--out", common.out, "Output directory")->required();

  auto* ds = app.add_subcommand("distance", "Pairwise sequence distances between two datasets");
  std::string ds_a, ds_b, ds_output = "distances.csv";
  ds->add_option("a", ds_a, "First dataset")->required();
  ds->add_option("b", ds_b, "Second dataset")->required();
  ds->add_option("--output", ds_output, "File name inside --out");
  ds->add_option("--out", common.out, "Output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (*sim) return cmd_simulate(sim_config, common, sim_count, sim_seed);
    if (*tr) return cmd_train(tr_data, common, tf);
    if (*ft) return cmd_fit(ft_data, common, ft_family, ft_config, ft_iters, ft_seed);
    if (*ev) {
      return cmd_evaluate(ev_truth, ev_model, ev_metric, common, ev_samples, ev_seed, ev_bin);
    }
    if (*rp) return cmd_reproduce(common, rf);
    if (*ds) return cmd_distance(ds_a, ds_b, common, ds_output);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const DomainError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitDomain;
  } catch (const NumericalError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return kExitUsage;
}
