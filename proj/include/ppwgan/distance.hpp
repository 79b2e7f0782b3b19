#pragma once

// Optimal-matching distance between event sequences on [0, T).
//
// Unmatched events of the longer sequence are charged against the anchor
// s = T. On the line the optimal matching pairs events in increasing order,
// and the resulting value equals the L1 area between the two counting
// functions.

#include "ppwgan/core.hpp"

namespace ppwgan {

/// O(n + m) closed form: sum_{i<=n} |t_i - tau_i| + sum_{i>n} (T - tau_i).
double star_distance(const EventSequence& xi, const EventSequence& rho,
                     const Window& window);

/// Minimum over all matchings by exhaustive permutation search. Test oracle;
/// the longer sequence may hold at most kOracleMaxLength events.
double star_distance_oracle(const EventSequence& xi, const EventSequence& rho,
                            const Window& window);
inline constexpr std::size_t kOracleMaxLength = 9;

/// Integral over [0, T) of |N_xi(t) - N_rho(t)|, accumulated segment by
/// segment between merged event times.
double counting_measure_l1(const EventSequence& xi, const EventSequence& rho,
                           const Window& window);

}  // namespace ppwgan
