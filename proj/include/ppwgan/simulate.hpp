#pragma once

// Parametric intensity families and ground-truth simulation.
//
//   IP  lambda(t) = sum_i alpha_i (2 pi sigma_i^2)^(-1/2) exp(-(t - c_i)^2 / sigma_i^2)
//   SE  lambda(t) = mu + beta * sum_{t_j < t} exp(-omega (t - t_j))
//   SC  lambda(t) = exp(eta t - gamma * N(t-))
//   NN  lambda(t) = softplus(v . h + w (t - t_last) + c),
//       h_j = tanh(A t_j + B h_{j-1} + b), h_0 = tanh(A u0 + b)

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"
#include "ppwgan/core.hpp"

namespace ppwgan {

struct IpParams {
  std::vector<double> weights;  // alpha
  std::vector<double> centers;  // c
  std::vector<double> sds;      // sigma
  std::size_t kernels() const noexcept { return weights.size(); }
};

struct SeParams {
  double mu = 0.0;
  double beta = 0.0;
  double omega = 1.0;
};

struct ScParams {
  double eta = 0.0;
  double gamma = 0.0;
};

struct NnIntensityParams {
  std::size_t hidden_dim = 0;
  std::vector<double> input_weights;  // k
  std::vector<double> recurrent;      // k x k, row-major
  std::vector<double> hidden_bias;    // k
  std::vector<double> readout;        // k
  double elapsed_weight = 0.0;
  double readout_bias = 0.0;
  /// Input fed once from the zero state to form the state before the first
  /// event. Drawn uniformly from [0, 1] when a random model is created.
  double start_input = 0.0;
};

using IntensityModel = std::variant<IpParams, SeParams, ScParams, NnIntensityParams>;

enum class Family { IP, SE, SC, NN };

Family family_of(const IntensityModel& model) noexcept;
std::string family_name(Family f);
Family parse_family(const std::string& name);

/// Throws DomainError on invalid parameters (shape mismatches, non-positive
/// widths, non-finite values).
void validate_model(const IntensityModel& model);
/// Non-fatal concerns, e.g. an explosive SE branching ratio beta / omega >= 1.
std::vector<std::string> model_warnings(const IntensityModel& model);

/// lambda(t | history). Only history entries strictly before t are used.
double intensity_at(const IntensityModel& model, double t,
                    std::span<const double> history, const Window& window);

double softplus(double x) noexcept;

/// Intensity-driven sampler (Ogata thinning). Construction precomputes any
/// model-wide bound, so reuse one sampler across many draws.
class Sampler {
 public:
  Sampler(IntensityModel model, Window window);

  EventSequence sample(RngStream& rng) const;

  const IntensityModel& model() const noexcept { return model_; }
  const Window& window() const noexcept { return window_; }

  /// Dominating rate used for IP proposals.
  double ip_bound() const noexcept { return ip_bound_; }

  static constexpr std::size_t kMaxEvents = 1'000'000;
  static constexpr int kMaxBoundDoublings = 40;

 private:
  EventSequence sample_ip(RngStream& rng) const;
  EventSequence sample_se(RngStream& rng) const;
  EventSequence sample_sc(RngStream& rng) const;
  EventSequence sample_nn(RngStream& rng) const;

  IntensityModel model_;
  Window window_;
  double ip_bound_ = 0.0;
};

EventSequence simulate_thinning(const IntensityModel& model, const Window& window,
                                RngStream& rng);

EventSequence simulate_homogeneous(double rate, const Window& window, RngStream& rng);

/// Draws `count` sequences; sequence i uses RngStream(seed, i) both for
/// picking its mixture component and for simulation, so the result does not
/// depend on scheduling. `components`, when given, receives the chosen
/// component per sequence.
Dataset make_dataset(std::span<const IntensityModel> models,
                     std::span<const double> mixture_weights, std::size_t count,
                     const Window& window, std::uint64_t seed,
                     std::vector<std::size_t>* components = nullptr);

// ---------------------------------------------------------------------------
// JSON parameter files

nlohmann::json model_to_json(const IntensityModel& model);
/// Throws ConfigError naming the offending field path (prefixed by `path`).
IntensityModel model_from_json(const nlohmann::json& j, const std::string& path = "model");

// ---------------------------------------------------------------------------
// Ground-truth configurations used by the synthetic experiments.

namespace presets {

constexpr double kHorizon = 15.0;

/// k = 3, alpha = [3, 7, 11], c = [1, 1, 1], sigma = [2, 3, 2].
IpParams standard_ip();
/// Same weights and widths with centers spread to [3, 7, 11]; not part of
/// the published configuration, shipped for multi-modal demonstrations.
IpParams spread_ip();
/// mu = 1.0, beta = 0.8, g(t) = exp(-t).
SeParams standard_se();
/// eta = 1.0, gamma = 0.2.
ScParams standard_sc();
/// Randomly initialised, then frozen, recurrent intensity.
NnIntensityParams random_nn(std::size_t hidden_dim, std::uint64_t seed);
NnIntensityParams standard_nn();

/// "IP", "SE", "SC", "NN" (the configurations above) or "IP-spread".
IntensityModel by_name(const std::string& name);

}  // namespace presets

}  // namespace ppwgan
