#include <cmath>
#include <filesystem>
#include <sstream>

#include "doctest.h"
#include "ppwgan/experiment.hpp"

using namespace ppwgan;

namespace {

ExperimentConfig tiny(const std::vector<std::string>& datasets,
                      const std::vector<std::string>& estimators) {
  ExperimentConfig c = desk_preset();
  c.count = 60;
  c.eval_samples = 200;
  c.qq_samples = 100;
  c.datasets = datasets;
  c.estimators = estimators;
  c.train.hidden_dim = 3;
  c.train.batch = 8;
  c.train.max_iters = 2;
  c.fit.max_iters = 20;
  c.fit.nn_hidden = 2;
  return c;
}

}  // namespace

TEST_CASE("dataset names expand to models and uniform weights") {
  const auto single = dataset_spec("SC");
  CHECK_FALSE(single.is_mixture());
  CHECK(family_of(single.models.front()) == Family::SC);
  const auto mix = dataset_spec("IP+SE+NN");
  REQUIRE(mix.models.size() == 3);
  CHECK(mix.is_mixture());
  CHECK(family_of(mix.models[2]) == Family::NN);
  for (double w : mix.weights) CHECK(w == doctest::Approx(1.0 / 3.0));
  CHECK_THROWS_AS(dataset_spec("SE+XX"), ConfigError);
  CHECK(standard_dataset_names().size() == 8);
  CHECK(standard_estimators().front() == "WGAN");
}

TEST_CASE("experiment config round-trips through JSON") {
  auto c = tiny({"SE"}, {"MLE-SE"});
  c.seed = 99;
  c.train.noise_rate = 2.5;
  const auto back = experiment_from_json(experiment_to_json(c));
  CHECK(experiment_to_json(back) == experiment_to_json(c));
  CHECK(back.train.noise_rate.value() == 2.5);
}

TEST_CASE("config errors carry the field path") {
  auto expect_path = [](const nlohmann::json& j, const std::string& path) {
    try {
      experiment_from_json(j);
      FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
      CHECK(std::string(e.what()).find(path) != std::string::npos);
    }
  };
  expect_path({{"version", 1}, {"count", "many"}}, "experiment.count");
  expect_path({{"version", 1}, {"train", {{"lr", -1.0}}}}, "train.lr");
  expect_path({{"version", 1}, {"datasets", {"SE", "QQ"}}}, "experiment.datasets[1]");
  expect_path({{"version", 1}, {"estimators", {"MLE-XX"}}}, "experiment.estimators[0]");
  expect_path({{"version", 7}}, "experiment.version");
  expect_path({{"version", 1}, {"preset", "huge"}}, "preset");
}

TEST_CASE("presets") {
  CHECK(desk_preset().count == 2000);
  CHECK(desk_preset().train.hidden_dim == 64);
  CHECK(paper_preset().count == 20000);
  CHECK(paper_preset().rounds == 10);
}

TEST_CASE("round seeds separate datasets, rounds and purposes") {
  const auto c = desk_preset();
  CHECK(round_seed(c, "SE", 0, 1) != round_seed(c, "SE", 1, 1));
  CHECK(round_seed(c, "SE", 0, 1) != round_seed(c, "SC", 0, 1));
  CHECK(round_seed(c, "SE", 0, 1) != round_seed(c, "SE", 0, 2));
  auto d = c;
  d.seed = 2;
  CHECK(round_seed(c, "SE", 0, 1) != round_seed(d, "SE", 0, 1));
}

TEST_CASE("a round fills every estimator and skips QQ on mixtures") {
  const auto c = tiny({}, {"WGAN", "MLE-SE"});
  const auto r = run_round(c, "SE", 0);
  REQUIRE(r.intensity_deviation.size() == 2);
  CHECK(std::isfinite(r.intensity_deviation[0]));
  CHECK(std::isfinite(r.intensity_deviation[1]));
  CHECK(std::isfinite(r.qq_deviation[1]));
  CHECK(r.curves.size() == 3);
  CHECK(r.curves.front().name == "truth");

  const auto m = run_round(c, "IP+SE+SC", 0);
  CHECK(std::isfinite(m.intensity_deviation[1]));
  CHECK(std::isnan(m.qq_deviation[1]));
  CHECK(m.qq_points.empty());
}

TEST_CASE("experiments are reproducible and subset runs match full runs") {
  const auto both = tiny({"SE", "SC"}, {"MLE-IP", "MLE-SC"});
  const auto one = tiny({"SC"}, {"MLE-IP", "MLE-SC"});
  const auto a = run_experiment(both);
  const auto b = run_experiment(both);
  const auto s = run_experiment(one);
  std::ostringstream ca, cb;
  write_table_csv(a.tables[0], ca);
  write_table_csv(b.tables[0], cb);
  CHECK(ca.str() == cb.str());
  REQUIRE(a.tables[0].rows.size() == 2);
  CHECK(a.tables[0].rows[1].values == s.tables[0].rows[0].values);
  CHECK(a.tables[0].name == "intensity_deviation");
  CHECK(a.tables[1].name == "qq_deviation");
}

TEST_CASE("directory lock is exclusive and released") {
  const auto dir = std::filesystem::temp_directory_path() / "ppwgan_lock_test";
  std::filesystem::remove_all(dir);
  {
    DirectoryLock lock(dir);
    CHECK(std::filesystem::exists(dir / ".ppwgan.lock"));
    CHECK_THROWS_AS(DirectoryLock{dir}, IoError);
  }
  CHECK_FALSE(std::filesystem::exists(dir / ".ppwgan.lock"));
  std::filesystem::remove_all(dir);
}
