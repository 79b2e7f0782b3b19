#include "ppwgan/distance.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace ppwgan {

namespace {

void check_window(const EventSequence& xi, const EventSequence& rho, const Window& window) {
  if (!xi.compatible_with(window) || !rho.compatible_with(window)) {
    throw DomainError("sequence window does not match the distance window");
  }
}

}  // namespace

double star_distance(const EventSequence& xi, const EventSequence& rho,
                     const Window& window) {
  check_window(xi, rho, window);
  const auto& shorter = xi.size() <= rho.size() ? xi : rho;
  const auto& longer = xi.size() <= rho.size() ? rho : xi;
  const auto a = shorter.times();
  const auto b = longer.times();
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d += std::abs(a[i] - b[i]);
  const double anchor = window.anchor();
  for (std::size_t i = a.size(); i < b.size(); ++i) d += anchor - b[i];
  return d;
}

double star_distance_oracle(const EventSequence& xi, const EventSequence& rho,
                            const Window& window) {
  check_window(xi, rho, window);
  const auto& shorter = xi.size() <= rho.size() ? xi : rho;
  const auto& longer = xi.size() <= rho.size() ? rho : xi;
  if (longer.size() > kOracleMaxLength) {
    throw DomainError("permutation oracle limited to sequences of length <= " +
                      std::to_string(kOracleMaxLength));
  }
  const auto x = shorter.times();
  const auto y = longer.times();
  const double s = window.anchor();
  std::vector<std::size_t> sigma(y.size());
  std::iota(sigma.begin(), sigma.end(), 0);
  double best = std::numeric_limits<double>::infinity();
  do {
    double cost = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) cost += std::abs(x[i] - y[sigma[i]]);
    for (std::size_t i = x.size(); i < y.size(); ++i) cost += std::abs(s - y[sigma[i]]);
    best = std::min(best, cost);
  } while (std::next_permutation(sigma.begin(), sigma.end()));
  return best;
}

double counting_measure_l1(const EventSequence& xi, const EventSequence& rho,
                           const Window& window) {
  check_window(xi, rho, window);
  const auto a = xi.times();
  const auto b = rho.times();
  std::size_t i = 0;
  std::size_t j = 0;
  long long gap = 0;  // N_xi(t) - N_rho(t) on the current segment
  double prev = 0.0;
  double area = 0.0;
  while (i < a.size() || j < b.size()) {
    double t;
    if (j == b.size() || (i < a.size() && a[i] <= b[j])) {
      t = a[i];
    } else {
      t = b[j];
    }
    area += static_cast<double>(std::llabs(gap)) * (t - prev);
    prev = t;
    while (i < a.size() && a[i] == t) {
      ++gap;
      ++i;
    }
    while (j < b.size() && b[j] == t) {
      --gap;
      ++j;
    }
  }
  area += static_cast<double>(std::llabs(gap)) * (window.horizon() - prev);
  return area;
}

}  // namespace ppwgan
