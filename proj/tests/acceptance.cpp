// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails. Pass criterion numbers as arguments to run a subset.
//
// Criteria 6 and 7 train the WGAN with reduced settings (see kWganIters and
// friends below); the desk preset itself needs about an hour per training on
// one core.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <set>
#include <string>
#include <vector>

#include "cli_support.hpp"
#include "ppwgan/distance.hpp"
#include "ppwgan/eval.hpp"
#include "ppwgan/experiment.hpp"
#include "ppwgan/mle.hpp"
#include "ppwgan/neural.hpp"
#include "ppwgan/simulate.hpp"
#include "support.hpp"

using namespace ppwgan;
using namespace ppwgan::testing;
namespace fs = std::filesystem;

namespace {

const Window kWindow(presets::kHorizon);

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

// Random sequence with a length drawn uniformly from [0, max_len].
EventSequence random_times(RngStream& rng, std::size_t max_len) {
  return random_sequence(rng, max_len, kWindow.horizon());
}

// ---------------------------------------------------------------------------

// Exact equality with the oracle is checked on times drawn from a 1/64 grid,
// where every sum involved is exact in double precision; on continuous times
// the oracle may pick a different optimal matching whose float sum rounds
// differently, so there the largest gap is reported alongside.
Outcome distance_correctness() {
  RngStream rng(101, 0);
  std::size_t oracle_mismatch = 0, l1_mismatch = 0;
  double worst_l1 = 0.0, worst_continuous = 0.0;
  for (int rep = 0; rep < 1000; ++rep) {
    const auto a = random_dyadic_sequence(rng, 6, kWindow.horizon());
    const auto b = random_dyadic_sequence(rng, 6, kWindow.horizon());
    const double d = star_distance(a, b, kWindow);
    if (d != star_distance_oracle(a, b, kWindow)) ++oracle_mismatch;
    const double gap = std::abs(d - counting_measure_l1(a, b, kWindow));
    worst_l1 = std::max(worst_l1, gap);
    if (gap > 1e-9) ++l1_mismatch;

    const auto x = random_times(rng, 6);
    const auto y = random_times(rng, 6);
    const double dc = star_distance(x, y, kWindow);
    worst_continuous = std::max(worst_continuous, std::abs(dc - star_distance_oracle(x, y, kWindow)));
    const double gap_c = std::abs(dc - counting_measure_l1(x, y, kWindow));
    worst_l1 = std::max(worst_l1, gap_c);
    if (gap_c > 1e-9) ++l1_mismatch;
  }
  return {oracle_mismatch == 0 && l1_mismatch == 0,
          std::to_string(oracle_mismatch) + " oracle mismatches on grid times, max |d - oracle| " +
              fmt("%.3g", worst_continuous) + " on continuous times, max |d - L1| " +
              fmt("%.3g", worst_l1)};
}

Outcome metric_axioms() {
  RngStream rng(102, 0);
  std::size_t violations = 0;
  double worst = 0.0;
  for (int rep = 0; rep < 10000; ++rep) {
    const auto x = random_times(rng, 10);
    const auto y = random_times(rng, 10);
    const auto z = random_times(rng, 10);
    const double xy = star_distance(x, y, kWindow);
    const double yx = star_distance(y, x, kWindow);
    const double xz = star_distance(x, z, kWindow);
    const double zy = star_distance(z, y, kWindow);
    const double xx = star_distance(x, x, kWindow);
    bool ok = std::abs(xy - yx) <= 1e-9 && std::abs(xx) <= 1e-9;
    // Distinct sequences are at positive distance.
    if (!(x == y) && !(xy > 0.0)) ok = false;
    worst = std::max(worst, xy - (xz + zy));
    if (xy > xz + zy + 1e-9) ok = false;
    if (!ok) ++violations;
  }
  return {violations == 0, std::to_string(violations) + " violating triples, max d(x,y) - d(x,z) - d(z,y) " +
                               fmt("%.3g", worst)};
}

Outcome gradient_fidelity() {
  constexpr double kStep = 1e-5, kTol = 1e-4, kFloor = 1e-6;
  RngStream rng(103, 0);
  double worst_g = 0.0, worst_c = 0.0, worst_gc = 0.0;
  for (int rep = 0; rep < 50; ++rep) {
    const std::size_t k = 1 + rng.below(8);
    const auto theta = random_weights<GeneratorParams>(k, rng, 0.5);
    const auto w = random_weights<CriticParams>(k, rng, 0.5);
    auto zeta = random_times(rng, 10);
    if (zeta.empty()) zeta = validate_sequence({rng.uniform(0.0, 15.0)}, kWindow);

    // Critic on a real-like sequence.
    {
      CriticTrace trace;
      critic_forward(w, zeta, &trace);
      CriticParams grad(k);
      std::vector<double> d_in(zeta.size());
      critic_backward(w, trace, 1.0, grad, d_in);
      const auto fd = numeric_gradient(
          w, [&](const CriticParams& p) { return critic_forward(p, zeta); }, kStep);
      worst_c = std::max(worst_c, worst_relative_error(grad.values(), fd, kFloor));
    }
    // Generator under a random linear read-out of its events.
    {
      std::vector<double> c(zeta.size());
      for (double& x : c) x = rng.uniform(-1.0, 1.0);
      GeneratorTrace trace;
      generator_forward(theta, zeta, kWindow, &trace);
      GeneratorParams grad(k);
      generator_backward(theta, trace, c, grad);
      const auto fd = numeric_gradient(
          theta,
          [&](const GeneratorParams& p) {
            const auto out = generator_forward(p, zeta, kWindow);
            double acc = 0.0;
            for (std::size_t j = 0; j < out.size(); ++j) acc += c[j] * out[j];
            return acc;
          },
          kStep);
      worst_g = std::max(worst_g, worst_relative_error(grad.values(), fd, kFloor));
    }
    // f_w(g_theta(zeta)) with respect to theta.
    {
      const std::vector<EventSequence> noise = {zeta};
      std::vector<GeneratorTrace> gt;
      std::vector<CriticTrace> ct;
      const auto fake = generator_forward_batch(theta, noise, kWindow, &gt, parallel::Exec::serial);
      critic_forward_batch(w, fake, &ct, parallel::Exec::serial);
      const std::vector<double> upstream = {1.0};
      const auto grad =
          generator_backward_batch(theta, w, gt, ct, upstream, parallel::Exec::serial);
      const auto fd = numeric_gradient(
          theta,
          [&](const GeneratorParams& p) {
            return critic_forward(w, generator_forward(p, zeta, kWindow));
          },
          kStep);
      worst_gc = std::max(worst_gc, worst_relative_error(grad.values(), fd, kFloor));
    }
  }
  const double worst = std::max({worst_g, worst_c, worst_gc});
  return {worst <= kTol, "max relative error generator " + fmt("%.2e", worst_g) + ", critic " +
                             fmt("%.2e", worst_c) + ", composed " + fmt("%.2e", worst_gc)};
}

Dataset simulate(const IntensityModel& m, std::size_t count, std::uint64_t seed) {
  const IntensityModel models[] = {m};
  const double weights[] = {1.0};
  return make_dataset(models, weights, count, kWindow, seed);
}

Outcome time_change_consistency() {
  bool ok = true;
  std::string detail;
  std::uint64_t seed = 104;
  for (const char* name : {"IP", "SE", "SC"}) {
    const auto m = presets::by_name(name);
    const auto r = qq_slope(simulate(m, 5000, seed++), m);
    ok = ok && r.slope_deviation <= 0.05;
    detail += std::string(detail.empty() ? "" : ", ") + name + " |slope - 1| = " +
              fmt("%.4f", r.slope_deviation);
  }
  return {ok, detail};
}

Outcome mle_recovery() {
  std::vector<double> mu, beta, eta, gamma;
  for (std::uint64_t s = 0; s < 10; ++s) {
    const auto se = fit(simulate(presets::standard_se(), 2000, 500 + s), Family::SE);
    mu.push_back(std::get<SeParams>(se.model).mu);
    beta.push_back(std::get<SeParams>(se.model).beta);
    const auto sc = fit(simulate(presets::standard_sc(), 2000, 600 + s), Family::SC);
    eta.push_back(std::get<ScParams>(sc.model).eta);
    gamma.push_back(std::get<ScParams>(sc.model).gamma);
  }
  const double m_mu = median_of(mu), m_beta = median_of(beta);
  const double m_eta = median_of(eta), m_gamma = median_of(gamma);
  auto within = [](double v, double truth) { return std::abs(v - truth) <= 0.15 * truth; };
  const bool ok = within(m_mu, 1.0) && within(m_beta, 0.8) && within(m_eta, 1.0) &&
                  within(m_gamma, 0.2);
  return {ok, "median mu " + fmt("%.4f", m_mu) + ", beta " + fmt("%.4f", m_beta) + ", eta " +
                  fmt("%.4f", m_eta) + ", gamma " + fmt("%.4f", m_gamma)};
}

// Criteria 6 and 7: the experiment pipeline with a reduced WGAN.
constexpr std::size_t kWganIters = 2000;
constexpr std::size_t kWganHidden = 16;
constexpr std::size_t kWganBatch = 64;
constexpr std::size_t kEvalSamples = 100000;
constexpr std::size_t kSeeds = 10;

ExperimentConfig reduced_desk(std::uint64_t seed, const std::vector<std::string>& estimators) {
  ExperimentConfig c = desk_preset();
  c.seed = seed;
  c.count = 2000;
  c.eval_samples = kEvalSamples;
  c.qq_samples = 200;
  c.estimators = estimators;
  c.train.max_iters = kWganIters;
  c.train.hidden_dim = kWganHidden;
  c.train.batch = kWganBatch;
  return c;
}

// Median intensity deviation per estimator over kSeeds rounds.
std::vector<double> median_deviations(const std::string& dataset,
                                      const std::vector<std::string>& estimators) {
  std::vector<std::vector<double>> per(estimators.size());
  for (std::uint64_t s = 1; s <= kSeeds; ++s) {
    const auto r = run_round(reduced_desk(s, estimators), dataset, 0);
    for (std::size_t e = 0; e < estimators.size(); ++e) {
      per[e].push_back(r.intensity_deviation[e]);
    }
    std::fprintf(stderr, "  [%s seed %llu]", dataset.c_str(), static_cast<unsigned long long>(s));
    for (std::size_t e = 0; e < estimators.size(); ++e) {
      std::fprintf(stderr, " %s %.4g", estimators[e].c_str(), r.intensity_deviation[e]);
    }
    std::fprintf(stderr, "\n");
  }
  std::vector<double> med;
  for (auto& v : per) med.push_back(median_of(v));
  return med;
}

Outcome misspecification_ordering() {
  const auto sc = median_deviations("SC", {"WGAN", "MLE-IP"});
  const bool sc_ok = sc[0] < sc[1] && sc[0] < 0.7 * sc[1];
  const auto nn = median_deviations("NN", {"WGAN", "MLE-IP", "MLE-SE", "MLE-SC"});
  const bool nn_ok = nn[0] < nn[1] && nn[0] < nn[2] && nn[0] < nn[3];
  return {sc_ok && nn_ok, "SC: WGAN " + fmt("%.4g", sc[0]) + " vs MLE-IP " + fmt("%.4g", sc[1]) +
                              "; NN: WGAN " + fmt("%.4g", nn[0]) + " vs IP " + fmt("%.4g", nn[1]) +
                              " / SE " + fmt("%.4g", nn[2]) + " / SC " + fmt("%.4g", nn[3])};
}

Outcome mixture_coverage() {
  const auto d = median_deviations("IP+SE+SC", {"WGAN", "MLE-IP"});
  return {d[0] < d[1], "IP+SE+SC: WGAN " + fmt("%.4g", d[0]) + " vs MLE-IP " + fmt("%.4g", d[1])};
}

struct Scratch {
  fs::path dir;
  explicit Scratch(const std::string& name) : dir(fs::temp_directory_path() / name) {
    fs::remove_all(dir);
    fs::create_directories(dir);
  }
  ~Scratch() { fs::remove_all(dir); }
};

Outcome determinism() {
  Scratch s("ppwgan_acceptance_determinism");
  // Desk preset with the sizes cut down so both runs finish in minutes. The
  // second run uses more threads than the first.
  const std::string flags =
      "reproduce --preset desk --seed 5 --count 200 --iters 20 --k 8 --batch 32 "
      "--eval-samples 2000 --qq-samples 500 --fit-iters 200 --out ";
  const auto a = run_cli(flags + "'" + (s.dir / "a").string() + "'", s.dir, "PPWGAN_THREADS=1");
  const auto b = run_cli(flags + "'" + (s.dir / "b").string() + "'", s.dir, "PPWGAN_THREADS=4");
  if (a.code != 0 || b.code != 0) {
    return {false, "reproduce exited with " + std::to_string(a.code) + " / " +
                       std::to_string(b.code)};
  }
  std::size_t compared = 0, differing = 0;
  for (const auto& entry : fs::directory_iterator(s.dir / "a")) {
    if (entry.path().extension() != ".csv") continue;
    ++compared;
    const auto other = s.dir / "b" / entry.path().filename();
    if (!fs::exists(other) || slurp(entry.path()) != slurp(other)) ++differing;
  }
  return {compared >= 2 && differing == 0,
          std::to_string(compared) + " CSV reports compared, " + std::to_string(differing) +
              " differ"};
}

Outcome qq_refusal() {
  Scratch s("ppwgan_acceptance_refusal");
  std::size_t refused = 0, total = 0;
  for (const auto& name : standard_dataset_names()) {
    if (!dataset_spec(name).is_mixture()) continue;
    ++total;
    const auto r = run_cli("evaluate --truth " + name + " --model SE --metric qq --out '" +
                               s.dir.string() + "'",
                           s.dir);
    if (r.code == 3 && r.output.find("QQ evaluation refused") != std::string::npos &&
        r.output.find("not feasible") != std::string::npos) {
      ++refused;
    }
  }
  return {total > 0 && refused == total,
          std::to_string(refused) + " of " + std::to_string(total) +
              " mixture datasets refused with exit code 3"};
}

struct Criterion {
  int id;
  const char* name;
  double budget_s;  // 0: no runtime bound
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> criteria = {
      {1, "distance correctness", 10, distance_correctness},
      {2, "metric axioms", 30, metric_axioms},
      {3, "gradient fidelity", 60, gradient_fidelity},
      {4, "simulator/time-change consistency", 300, time_change_consistency},
      {5, "MLE recovery", 600, mle_recovery},
      {6, "misspecification ordering", 45 * 60, misspecification_ordering},
      {7, "mixture coverage", 0, mixture_coverage},
      {8, "determinism", 0, determinism},
      {9, "QQ refusal", 0, qq_refusal},
  };
  std::set<int> wanted;
  for (int i = 1; i < argc; ++i) wanted.insert(std::atoi(argv[i]));

  int failed = 0;
  for (const auto& c : criteria) {
    if (!wanted.empty() && !wanted.count(c.id)) continue;
    const auto t0 = Clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    const double secs = seconds_since(t0);
    std::string detail = o.detail + "; " + fmt("%.1f s", secs);
    if (c.budget_s > 0 && secs > c.budget_s) {
      o.pass = false;
      detail += " (over the " + fmt("%.0f s", c.budget_s) + " budget)";
    }
    if (!o.pass) ++failed;
    std::printf("%s %d %s: %s\n", o.pass ? "PASS" : "FAIL", c.id, c.name, detail.c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
