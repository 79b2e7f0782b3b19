#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <vector>

#include "doctest.h"
#include "ppwgan/eval.hpp"
#include "ppwgan/simulate.hpp"

using namespace ppwgan;

namespace {
const Window kWindow(15.0);

Dataset sample(const IntensityModel& m, std::size_t count, std::uint64_t seed) {
  const IntensityModel models[] = {m};
  const double w[] = {1.0};
  return make_dataset(models, w, count, kWindow, seed);
}
}  // namespace

TEST_CASE("bin count covers the window") {
  CHECK(bin_count(15.0, 0.1) == 150);
  CHECK(bin_count(1.0, 0.3) == 4);
  CHECK(bin_count(1.0, 0.25) == 4);
}

TEST_CASE("empirical intensity on a hand-built dataset") {
  const Window w(1.0);
  Dataset d(w, {validate_sequence({0.1, 0.15, 0.7}, w), validate_sequence({0.6}, w)});
  const auto c = empirical_intensity(d, 0.5);
  REQUIRE(c.values.size() == 2);
  CHECK(c.values[0] == doctest::Approx(2.0));  // 2 events / 2 seqs / 0.5
  CHECK(c.values[1] == doctest::Approx(2.0));
  CHECK_THROWS_AS(empirical_intensity(Dataset(w, {})), DomainError);
}

TEST_CASE("property: area under the empirical intensity is the mean count") {
  const auto d = sample(presets::standard_se(), 400, 51);
  const auto c = empirical_intensity(d);
  double area = 0.0;
  for (double v : c.values) area += v * c.bin_width;
  CHECK(area == doctest::Approx(static_cast<double>(d.total_events()) / 400.0).epsilon(1e-12));
}

TEST_CASE("empirical intensity tracks the IP intensity") {
  const auto ip = presets::standard_ip();
  const auto d = sample(ip, 20000, 52);
  const auto c = empirical_intensity(d, 0.5);
  for (std::size_t j = 0; j < c.values.size(); ++j) {
    const double mid = c.bin_start(j) + 0.25;
    CHECK(c.values[j] == doctest::Approx(intensity_at(ip, mid, {}, kWindow)).epsilon(0.1));
  }
}

TEST_CASE("intensity deviation is an L1 distance") {
  IntensityCurve a{0.5, {1, 2, 3}}, b{0.5, {2, 2, 1}};
  CHECK(intensity_deviation(a, b) == doctest::Approx(1.5));
  CHECK(intensity_deviation(a, a) == 0.0);
  CHECK(intensity_deviation(a, b) == intensity_deviation(b, a));
}

TEST_CASE("QQ fit of exact exponential quantiles has slope one") {
  const std::size_t n = 999;
  std::vector<double> v;
  for (std::size_t i = 1; i <= n; ++i) v.push_back(-std::log(1.0 - double(i) / double(n + 1)));
  const auto r = qq_fit(v);
  CHECK(r.slope == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(std::abs(r.intercept) < 1e-12);
  CHECK(r.sample_size == n);
  // Doubling every value doubles the slope.
  for (double& x : v) x *= 2.0;
  CHECK(qq_fit(v).slope == doctest::Approx(2.0).epsilon(1e-12));
  CHECK_THROWS_AS(qq_fit(std::vector<double>{1.0}), DomainError);
}

TEST_CASE("censored QQ fit without censoring equals the plain fit") {
  RngStream rng(53, 0);
  std::vector<double> v;
  for (int i = 0; i < 500; ++i) v.push_back(rng.exponential(1.0));
  const std::vector<char> none(v.size(), 0);
  const auto a = qq_fit(v);
  const auto b = qq_fit_censored(v, none);
  CHECK(a.slope == doctest::Approx(b.slope).epsilon(1e-12));
  CHECK(a.intercept == doctest::Approx(b.intercept).epsilon(1e-9));
}

TEST_CASE("censored QQ fit removes the truncation bias") {
  // Exp(1) values cut at a random censoring time: dropping the censored ones
  // shrinks the slope, the survival-based positions do not.
  RngStream rng(54, 0);
  std::vector<double> vals, kept;
  std::vector<char> cens;
  for (int i = 0; i < 40000; ++i) {
    const double x = rng.exponential(1.0), c = rng.exponential(0.5);
    vals.push_back(std::min(x, c));
    cens.push_back(c < x);
    if (x <= c) kept.push_back(x);
  }
  CHECK(std::abs(qq_fit_censored(vals, cens).slope - 1.0) < 0.03);
  CHECK(qq_fit(kept).slope < 0.8);
}

TEST_CASE("QQ slope of a model against itself is close to one") {
  for (const char* name : {"IP", "SE", "SC"}) {
    CAPTURE(name);
    const auto m = presets::by_name(name);
    const auto r = qq_slope(sample(m, 1000, 55), m);
    CHECK(r.slope_deviation < 0.05);
  }
  // A process with twice the baseline rate is detected.
  const auto r = qq_slope(sample(SeParams{2.0, 0.8, 1.0}, 1000, 56), presets::standard_se());
  CHECK(r.slope_deviation > 0.1);
}

TEST_CASE("summary statistics") {
  const std::vector<double> v = {1, 2, 3, 4};
  CHECK(mean_of(v) == 2.5);
  CHECK(sample_std(v) == doctest::Approx(std::sqrt(5.0 / 3.0)));
  CHECK(sample_std(std::vector<double>{3}) == 0.0);
  CHECK(median_of({5, 1, 3}) == 3);
  CHECK(median_of({4, 1, 3, 2}) == 2.5);
}

TEST_CASE("table CSV layout") {
  ReportTable t{"intensity_deviation", {"A", "B"}, {{"SE", {{1.0, 3.0}, {}}}}};
  std::ostringstream out;
  write_table_csv(t, out);
  CHECK(out.str() == "dataset,A_mean,A_std,B_mean,B_std\nSE,2,1.41421,NA,NA\n");
}

TEST_CASE("charts are well-formed SVG with one series per curve") {
  std::vector<NamedCurve> curves = {{"truth", {0.5, {1, 2, 3}}}, {"WGAN", {0.5, {1, 1, 1}}}};
  std::ostringstream out;
  write_intensity_svg(curves, "SE", out);
  const auto s = out.str();
  CHECK(s.find("<svg") != std::string::npos);
  CHECK(s.find("</svg>") != std::string::npos);
  std::size_t lines = 0;
  for (auto p = s.find("<polyline"); p != std::string::npos; p = s.find("<polyline", p + 1)) ++lines;
  CHECK(lines == 2);
  CHECK(s.find("WGAN") != std::string::npos);
}

TEST_CASE("report files land in the output directory") {
  const auto dir = std::filesystem::temp_directory_path() / "ppwgan_eval_report";
  std::filesystem::remove_all(dir);
  Report r;
  r.tables.push_back({"t", {"A"}, {{"SE", {{1.0}}}}});
  r.intensity_charts.push_back({"intensity_SE", {{"truth", {0.5, {1, 2}}}}});
  emit_report(r, dir);
  CHECK(std::filesystem::exists(dir / "t.csv"));
  CHECK(std::filesystem::exists(dir / "intensity_SE.svg"));
  std::filesystem::remove_all(dir);
}
