#pragma once

// Maximum-likelihood baselines for the parametric intensity families.
//
// loglik(seq) = sum_j log lambda(t_j | history) - integral_0^T lambda(s) ds
//
// Compensators are closed-form for IP (Gaussian CDF), SE (exponential-kernel
// recursion) and SC (piecewise exponential); the recurrent family integrates
// each inter-event interval with 16-node Gauss-Legendre quadrature.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "ppwgan/core.hpp"
#include "ppwgan/parallel.hpp"
#include "ppwgan/simulate.hpp"

namespace ppwgan {

/// Returns -infinity when the intensity is not positive at some event.
double loglik(const IntensityModel& model, const EventSequence& seq, const Window& window);

/// Integrated intensity over [0, t_1], [t_1, t_2], ..., [t_n, T]: n + 1
/// pieces, the last one being the censored tail.
std::vector<double> compensator(const IntensityModel& model, const EventSequence& seq,
                                const Window& window);

/// integral_0^T lambda computed without splitting at events where the family
/// allows it (IP, SE); otherwise the sum of compensator pieces.
double total_compensator(const IntensityModel& model, const EventSequence& seq,
                         const Window& window);

// ---------------------------------------------------------------------------
// Unconstrained coordinates: log for IP weights and widths and for all SE
// parameters; identity for IP centers, SC and NN weights. The NN start input
// is held fixed.

std::vector<double> to_unconstrained(const IntensityModel& model);
/// `shape` supplies the family, IP kernel count, NN hidden size and NN start
/// input.
IntensityModel from_unconstrained(const IntensityModel& shape, std::span<const double> u);

/// loglik plus its gradient with respect to the unconstrained coordinates,
/// added into `grad`.
double loglik_with_gradient(const IntensityModel& model, const EventSequence& seq,
                            const Window& window, std::span<double> grad);

// ---------------------------------------------------------------------------

struct FitConfig {
  /// 0 selects the family default (1e-2 parametric, 1e-3 NN).
  double lr = 0.0;
  std::size_t max_iters = 3000;
  double grad_tol = 1e-5;
  std::size_t ip_kernels = 3;
  std::size_t nn_hidden = 8;
  /// Sequences per gradient step; 0 uses the whole dataset. NN fits default
  /// to minibatches of nn_batch.
  std::size_t batch = 0;
  std::size_t nn_batch = 256;
  std::uint64_t seed = 0;
  parallel::Exec exec = parallel::Exec::threaded;
};

struct FittedModel {
  IntensityModel model;
  double final_loglik = 0.0;  // mean per sequence
  std::size_t iterations = 0;
  double gradient_norm = 0.0;
};

/// Starting point used by fit().
IntensityModel initial_model(const Dataset& data, Family family, const FitConfig& cfg);

/// Mean per-sequence log-likelihood.
double mean_loglik(const IntensityModel& model, const Dataset& data,
                   parallel::Exec exec = parallel::Exec::threaded);

FittedModel fit(const Dataset& data, Family family, const FitConfig& cfg = {});

Dataset sample_fitted(const FittedModel& fitted, std::size_t count, const Window& window,
                      std::uint64_t seed);

nlohmann::json fitted_to_json(const FittedModel& f);
FittedModel fitted_from_json(const nlohmann::json& j);

}  // namespace ppwgan
