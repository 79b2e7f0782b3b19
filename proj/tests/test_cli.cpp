#include <filesystem>
#include <string>

#include "cli_support.hpp"
#include "doctest.h"

using namespace ppwgan::testing;
namespace fs = std::filesystem;

namespace {

struct Scratch {
  fs::path dir;
  Scratch() : dir(fs::temp_directory_path() / "ppwgan_cli_test") {
    fs::remove_all(dir);
    fs::create_directories(dir);
  }
  ~Scratch() { fs::remove_all(dir); }
  std::string path(const std::string& name) const { return "'" + (dir / name).string() + "'"; }
  CliResult run(const std::string& args) const { return run_cli(args, dir); }
};

}  // namespace

TEST_CASE("simulate, fit, train, evaluate and distance end to end") {
  Scratch s;
  write_file(s.dir / "se.json",
             R"({"version": 1, "preset": "SE", "count": 40, "seed": 3, "output": "se.jsonl"})");
  auto r = s.run("simulate " + s.path("se.json") + " --out " + s.path(""));
  REQUIRE(r.code == 0);
  CHECK(fs::exists(s.dir / "se.jsonl"));

  r = s.run("fit " + s.path("se.jsonl") + " --family SE --iters 50 --out " + s.path(""));
  CHECK(r.code == 0);
  CHECK(fs::exists(s.dir / "fitted_SE.json"));

  r = s.run("train " + s.path("se.jsonl") + " --iters 2 --k 3 --batch 8 --out " + s.path(""));
  CHECK(r.code == 0);
  CHECK(fs::exists(s.dir / "checkpoint.json"));
  CHECK(slurp(s.dir / "train_log.csv").rfind("iter,phase,critic_loss", 0) == 0);

  r = s.run("evaluate --truth SE --model " + s.path("fitted_SE.json") +
            " --metric qq --samples 200 --out " + s.path(""));
  CHECK(r.code == 0);
  CHECK(fs::exists(s.dir / "qq.csv"));
  CHECK(fs::exists(s.dir / "qq.svg"));

  r = s.run("evaluate --truth SE --model " + s.path("checkpoint.json") +
            " --metric intensity --samples 200 --out " + s.path(""));
  CHECK(r.code == 0);
  CHECK(slurp(s.dir / "summary.csv").find("intensity_deviation,WGAN,") != std::string::npos);

  r = s.run("distance " + s.path("se.jsonl") + " " + s.path("se.jsonl") + " --out " + s.path(""));
  CHECK(r.code == 0);
  const auto csv = slurp(s.dir / "distances.csv");
  CHECK(csv.rfind("i,j,distance\n0,0,0\n", 0) == 0);
}

TEST_CASE("mixture config simulates a labelled mixture") {
  Scratch s;
  write_file(s.dir / "mix.json", R"({"mixture": [{"preset": "IP", "weight": 2},
      {"model": {"family": "SC", "eta": 1.0, "gamma": 0.2}}], "count": 20, "seed": 1})");
  const auto r = s.run("simulate " + s.path("mix.json") + " --out " + s.path(""));
  REQUIRE(r.code == 0);
  CHECK(slurp(s.dir / "data.jsonl").find("mixture:IP+SC") != std::string::npos);
}

TEST_CASE("QQ on a mixture is refused with exit code 3") {
  Scratch s;
  const auto r = s.run("evaluate --truth IP+SE+SC --model SE --metric qq --out " + s.path(""));
  CHECK(r.code == 3);
  CHECK(r.output.find("QQ evaluation refused") != std::string::npos);
}

TEST_CASE("exit codes for usage, config, domain and I/O errors") {
  Scratch s;
  CHECK(s.run("").code == 2);
  CHECK(s.run("frobnicate").code == 2);
  CHECK(s.run("fit").code == 2);

  write_file(s.dir / "bad.json", R"({"model": {"family": "SE", "mu": "one", "beta": 0.8, "omega": 1}})");
  auto r = s.run("simulate " + s.path("bad.json") + " --out " + s.path(""));
  CHECK(r.code == 2);
  CHECK(r.output.find("config.model.mu") != std::string::npos);

  CHECK(s.run("fit " + s.path("missing.jsonl") + " --family SE").code == 5);

  write_file(s.dir / "broken.jsonl", "{\"T\": 15}\n[1.0, 2.0\n");
  r = s.run("fit " + s.path("broken.jsonl") + " --family SE --out " + s.path(""));
  CHECK(r.code == 5);
  CHECK(r.output.find("line 2") != std::string::npos);

  write_file(s.dir / "outside.jsonl", "{\"T\": 15}\n[1.0, 22.0]\n");
  CHECK(s.run("fit " + s.path("outside.jsonl") + " --family SE --out " + s.path("")).code == 3);
  CHECK(s.run("fit " + s.path("outside.jsonl") + " --family XY").code == 2);
}

TEST_CASE("reproduce refuses a locked directory and writes its config") {
  Scratch s;
  write_file(s.dir / ".ppwgan.lock", "");
  CHECK(s.run("reproduce --out " + s.path("")).code == 5);
  fs::remove(s.dir / ".ppwgan.lock");
  const auto r = s.run("reproduce --preset paper --out " + s.path(""));
  CHECK(r.code == 0);
  CHECK(fs::exists(s.dir / "config.json"));
  CHECK_FALSE(fs::exists(s.dir / ".ppwgan.lock"));
}
