#include <cmath>
#include <limits>
#include <sstream>
#include <string>

#include "doctest.h"
#include "ppwgan/core.hpp"
#include "support.hpp"

using namespace ppwgan;

TEST_CASE("window rejects non-positive or non-finite horizons") {
  CHECK_THROWS_AS(Window(0.0), DomainError);
  CHECK_THROWS_AS(Window(-1.0), DomainError);
  CHECK_THROWS_AS(Window(std::numeric_limits<double>::infinity()), DomainError);
  const Window w(15.0);
  CHECK(w.anchor() == 15.0);
  CHECK(w.contains(0.0));
  CHECK_FALSE(w.contains(15.0));
}

TEST_CASE("validate_sequence sorts and checks the window") {
  const Window w(10.0);
  const auto s = validate_sequence({3.0, 1.0, 2.5}, w);
  REQUIRE(s.size() == 3);
  CHECK(s[0] == 1.0);
  CHECK(s[1] == 2.5);
  CHECK(s[2] == 3.0);
  CHECK(s.horizon() == 10.0);
  CHECK_THROWS_AS(validate_sequence({1.0, 10.0}, w), DomainError);
  CHECK_THROWS_AS(validate_sequence({-0.5}, w), DomainError);
  CHECK_THROWS_AS(validate_sequence({std::nan("")}, w), DomainError);
}

TEST_CASE("tied events are separated by one ulp and reported") {
  ValidationNotes notes;
  const auto s = validate_sequence({2.0, 2.0, 2.0}, Window(5.0), &notes);
  CHECK(notes.ties_perturbed == 2);
  CHECK(s[0] < s[1]);
  CHECK(s[1] < s[2]);
  CHECK(s[2] - s[0] < 1e-12);
}

TEST_CASE("dataset rate and mixture label") {
  const Window w(5.0);
  Dataset d(w, {validate_sequence({1.0, 2.0}, w), validate_sequence({}, w)});
  CHECK(d.total_events() == 2);
  CHECK(d.mean_event_rate() == doctest::Approx(0.2));
  CHECK_FALSE(d.is_mixture());
  const std::vector<std::string> parts = {"IP", "SE"};
  d.label = mixture_label(parts);
  CHECK(d.is_mixture());
  CHECK(Dataset(w, {}).mean_event_rate() == 0.0);
}

TEST_CASE("dataset JSONL round-trip preserves every double") {
  RngStream rng(5, 0);
  const Window w(15.0);
  std::vector<EventSequence> seqs;
  for (int i = 0; i < 40; ++i) seqs.push_back(testing::random_sequence(rng, 12, 15.0));
  const Dataset d(w, seqs, "SE");
  std::stringstream io;
  write_dataset(d, io);
  const Dataset back = read_dataset(io, w);
  CHECK(back.label == "SE");
  CHECK(back.window == w);
  CHECK(back.sequences == d.sequences);
}

TEST_CASE("malformed JSONL reports the offending line") {
  auto parse_line = [](const std::string& text) -> std::size_t {
    std::istringstream in(text);
    try {
      read_dataset(in);
    } catch (const ParseError& e) {
      return e.line();
    }
    return 0;
  };
  CHECK(parse_line("{\"T\": 15}\n[1.0, 2.0]\n[1.0, oops]\n") == 3);
  CHECK(parse_line("{\"T\": 15}\n{\"a\": 1}\n") == 2);
  CHECK(parse_line("[1.0]\n") == 1);
  CHECK(parse_line("") == 0);  // no line to point at

  std::istringstream outside("{\"T\": 15}\n[1.0, 16.0]\n");
  CHECK_THROWS_AS(read_dataset(outside), DomainError);
  std::istringstream other_window("{\"T\": 10}\n[1.0]\n");
  CHECK_THROWS_AS(read_dataset(other_window, Window(15.0)), DomainError);
}

TEST_CASE("random streams are reproducible and independent per id") {
  RngStream a(7, 3), b(7, 3), c(7, 4);
  for (int i = 0; i < 100; ++i) {
    const auto x = a.next_u64();
    CHECK(x == b.next_u64());
    if (i == 0) CHECK(x != c.next_u64());
  }
  CHECK(mix_ids({1, 2}) != mix_ids({2, 1}));
  CHECK(mix_ids({1, 2}) == mix_ids({1, 2}));
}

TEST_CASE("uniform, exponential and normal draws have the right moments") {
  RngStream rng(11, 0);
  const int n = 200000;
  double su = 0, se = 0, sn = 0, sn2 = 0;
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform();
    CHECK_FALSE((u < 0.0 || u >= 1.0));
    su += u;
    se += rng.exponential(2.0);
    const double z = rng.normal();
    sn += z;
    sn2 += z * z;
  }
  CHECK(su / n == doctest::Approx(0.5).epsilon(0.01));
  CHECK(se / n == doctest::Approx(0.5).epsilon(0.01));
  CHECK(std::abs(sn / n) < 0.01);
  CHECK(sn2 / n == doctest::Approx(1.0).epsilon(0.01));
  CHECK_THROWS_AS(rng.below(0), DomainError);
}
