#pragma once

// Random instance generators shared by the unit, property and acceptance
// tests.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "ppwgan/core.hpp"
#include "ppwgan/neural.hpp"

namespace ppwgan::testing {

inline EventSequence random_sequence(RngStream& rng, std::size_t max_len, double T) {
  const std::size_t n = rng.below(max_len + 1);
  std::vector<double> t(n);
  for (double& x : t) x = rng.uniform(0.0, T);
  return validate_sequence(std::move(t), Window(T));
}

/// Times on a 1/64 grid: every sum and difference of a handful of them is
/// exact in double precision, so two summation orders agree bit-for-bit.
inline EventSequence random_dyadic_sequence(RngStream& rng, std::size_t max_len, double T) {
  const std::size_t n = rng.below(max_len + 1);
  const auto slots = static_cast<std::uint64_t>(T * 64.0);
  std::vector<double> t;
  while (t.size() < n) {
    const double x = static_cast<double>(rng.below(slots)) / 64.0;
    if (std::find(t.begin(), t.end(), x) == t.end()) t.push_back(x);
  }
  return validate_sequence(std::move(t), Window(T));
}

template <typename W>
W random_weights(std::size_t k, RngStream& rng, double scale) {
  W w(k);
  for (double& x : w.values()) x = rng.uniform(-scale, scale);
  return w;
}

/// Central differences of `loss` over every coordinate of `params`.
template <typename W, typename F>
std::vector<double> numeric_gradient(W params, F&& loss, double step) {
  std::vector<double> g(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double keep = params.values()[i];
    params.values()[i] = keep + step;
    const double up = loss(params);
    params.values()[i] = keep - step;
    const double down = loss(params);
    params.values()[i] = keep;
    g[i] = (up - down) / (2.0 * step);
  }
  return g;
}

/// |a - b| / max(|a|, |b|, floor).
inline double relative_error(double a, double b, double floor) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

inline double worst_relative_error(std::span<const double> analytic,
                                   std::span<const double> numeric, double floor) {
  double worst = 0.0;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    worst = std::max(worst, relative_error(analytic[i], numeric[i], floor));
  }
  return worst;
}

}  // namespace ppwgan::testing
