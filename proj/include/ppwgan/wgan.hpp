#pragma once

// Adversarial training of the sequence generator against a recurrent critic
// under the Wasserstein objective, with the Lipschitz condition imposed as a
// direct penalty on real/fake pairs:
//
//   L' = mean f(fake) - mean f(real) + nu * sum_pairs | |f(xi) - f(rho)| / d*(xi, rho) - 1 |
//
// The critic descends L'; the generator descends -mean f(g(zeta)).

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ppwgan/core.hpp"
#include "ppwgan/neural.hpp"
#include "ppwgan/parallel.hpp"

namespace ppwgan {

struct TrainConfig {
  double nu = 0.3;
  double lr = 1e-4;
  double beta1 = 0.5;
  double beta2 = 0.9;
  std::size_t batch = 256;
  std::size_t n_critic = 5;
  /// Noise rate; inferred from the data's mean event rate when unset.
  std::optional<double> noise_rate;
  std::size_t hidden_dim = 64;
  std::size_t max_iters = 4000;
  /// Stop once the least-squares slope of the per-iteration critic loss over
  /// this many trailing generator iterations is below early_stop_slope in
  /// magnitude. 0 disables.
  std::size_t early_stop_window = 0;
  double early_stop_slope = 1e-4;
  /// Cadences (in generator iterations) for the hooks below; 0 disables.
  std::size_t checkpoint_every = 0;
  std::size_t metric_every = 0;
  /// Where to dump the current weights if training aborts on a non-finite loss.
  std::string abort_checkpoint_path;
  std::uint64_t seed = 0;
  parallel::Exec exec = parallel::Exec::threaded;

  void validate() const;
};

/// Mean event rate of the data, the prior rate of the noise process.
double infer_noise_rate(const Dataset& data);

struct CriticLossTerms {
  double value = 0.0;
  double penalty_sum = 0.0;
  /// Mean |ratio - 1| over the pairs that entered the penalty (0 if none).
  double penalty_mean = 0.0;
  std::size_t pairs_used = 0;
  std::size_t skipped_pairs = 0;
  /// dL'/df for each real and fake score.
  std::vector<double> d_real;
  std::vector<double> d_fake;
};

/// Pairs closer than this are skipped: the Lipschitz ratio is undefined.
inline constexpr double kMinPairDistance = 1e-9;

/// L' from precomputed scores. Pair i couples real[i] with fake[pairing[i]];
/// pair_distances[i] is their sequence distance.
CriticLossTerms score_critic_loss(std::span<const double> real_scores,
                                  std::span<const double> fake_scores,
                                  std::span<const std::size_t> pairing,
                                  std::span<const double> pair_distances, double nu);

/// L' for a critic on a real and a fake batch of equal size.
CriticLossTerms critic_loss(const CriticParams& w, std::span<const EventSequence> real_batch,
                            std::span<const EventSequence> fake_batch, double nu,
                            std::span<const std::size_t> pairing, const Window& window);

enum class LogPhase { critic, generator };

struct TrainLogRow {
  std::size_t iter = 0;
  LogPhase phase = LogPhase::critic;
  /// Critic rows: L'. Generator rows: the generator loss -mean f(g(zeta)).
  double loss = 0.0;
  double penalty_mean = 0.0;
  std::size_t skipped_pairs = 0;
  double wall_ms = 0.0;
};

/// CSV: iter,phase,critic_loss,penalty_mean,skipped_pairs,wall_ms.
/// With include_timing = false the wall_ms column is written as 0 so logs of
/// identical runs compare byte-for-byte.
void write_train_log(std::span<const TrainLogRow> rows, std::ostream& out,
                     bool include_timing = true);

struct TrainHooks {
  std::function<void(std::size_t iter, const GeneratorParams&, const CriticParams&)>
      on_checkpoint;
  std::function<void(std::size_t iter, const GeneratorParams&)> on_metrics;
};

struct TrainResult {
  GeneratorParams generator;
  CriticParams critic;
  double noise_rate = 0.0;
  std::size_t generator_iterations = 0;
  bool early_stopped = false;
  std::vector<TrainLogRow> log;
};

/// Initial weights for a given config (what train() starts from).
std::pair<GeneratorParams, CriticParams> initial_weights(const TrainConfig& cfg);

TrainResult train(const Dataset& data, const TrainConfig& cfg, const TrainHooks& hooks = {});

}  // namespace ppwgan
