#pragma once

// Internal helpers for the recurrent intensity family, shared by the
// simulator and the likelihood code.

#include <cmath>
#include <vector>

#include "ppwgan/simulate.hpp"

namespace ppwgan::detail {

/// h_out = tanh(A x + B h_in + b). h_in may be empty (zero state).
inline void nn_step(const NnIntensityParams& p, double x, const std::vector<double>& h_in,
                    std::vector<double>& h_out) {
  const std::size_t k = p.hidden_dim;
  h_out.resize(k);
  for (std::size_t r = 0; r < k; ++r) {
    double acc = p.input_weights[r] * x + p.hidden_bias[r];
    if (!h_in.empty()) {
      const double* row = p.recurrent.data() + r * k;
      for (std::size_t c = 0; c < k; ++c) acc += row[c] * h_in[c];
    }
    h_out[r] = std::tanh(acc);
  }
}

/// v . h + c
inline double nn_drive(const NnIntensityParams& p, const std::vector<double>& h) {
  double acc = p.readout_bias;
  for (std::size_t r = 0; r < p.hidden_dim; ++r) acc += p.readout[r] * h[r];
  return acc;
}

inline std::vector<double> nn_start_state(const NnIntensityParams& p) {
  std::vector<double> h;
  nn_step(p, p.start_input, {}, h);
  return h;
}

}  // namespace ppwgan::detail
