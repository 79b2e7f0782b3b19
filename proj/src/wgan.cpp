#include "ppwgan/wgan.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <deque>
#include <numeric>
#include <ostream>

#include "ppwgan/distance.hpp"
#include "ppwgan/simulate.hpp"

namespace ppwgan {

namespace {

enum StreamTag : std::uint64_t {
  kInitGenerator = 1,
  kInitCritic = 2,
  kRealBatch = 3,
  kNoiseBatch = 4,
  kPairing = 5,
  kGeneratorNoise = 6,
};

double sign(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

std::vector<std::size_t> random_pairing(std::size_t m, RngStream& rng) {
  std::vector<std::size_t> perm(m);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  for (std::size_t i = m; i > 1; --i) std::swap(perm[i - 1], perm[rng.below(i)]);
  return perm;
}

std::vector<EventSequence> noise_batch(double rate, std::size_t m, const Window& window,
                                       RngStream& rng) {
  std::vector<EventSequence> out;
  out.reserve(m);
  for (std::size_t i = 0; i < m; ++i) out.push_back(simulate_homogeneous(rate, window, rng));
  return out;
}

double trailing_slope(const std::deque<double>& ys) {
  const double n = static_cast<double>(ys.size());
  const double x_mean = (n - 1.0) / 2.0;
  double y_mean = 0.0;
  for (double y : ys) y_mean += y;
  y_mean /= n;
  double sxy = 0.0;
  double sxx = 0.0;
  for (std::size_t i = 0; i < ys.size(); ++i) {
    const double dx = static_cast<double>(i) - x_mean;
    sxy += dx * (ys[i] - y_mean);
    sxx += dx * dx;
  }
  return sxx > 0.0 ? sxy / sxx : 0.0;
}

}  // namespace

void TrainConfig::validate() const {
  if (!(nu >= 0.0)) throw ConfigError("train.nu: must be >= 0");
  if (!(lr > 0.0)) throw ConfigError("train.lr: must be positive");
  if (!(beta1 >= 0.0 && beta1 < 1.0)) throw ConfigError("train.beta1: must lie in [0, 1)");
  if (!(beta2 >= 0.0 && beta2 < 1.0)) throw ConfigError("train.beta2: must lie in [0, 1)");
  if (batch == 0) throw ConfigError("train.batch: must be positive");
  if (n_critic == 0) throw ConfigError("train.n_critic: must be positive");
  if (hidden_dim == 0) throw ConfigError("train.hidden_dim: must be positive");
  if (noise_rate && !(*noise_rate > 0.0)) throw ConfigError("train.noise_rate: must be positive");
}

double infer_noise_rate(const Dataset& data) {
  if (data.sequences.empty()) throw DomainError("cannot infer noise rate: dataset is empty");
  const double rate = data.mean_event_rate();
  if (!(rate > 0.0)) {
    throw DomainError("cannot infer noise rate: dataset contains no events");
  }
  return rate;
}

CriticLossTerms score_critic_loss(std::span<const double> real_scores,
                                  std::span<const double> fake_scores,
                                  std::span<const std::size_t> pairing,
                                  std::span<const double> pair_distances, double nu) {
  const std::size_t m = real_scores.size();
  if (m == 0 || fake_scores.size() != m) {
    throw DomainError("critic loss needs non-empty real and fake batches of equal size");
  }
  if (pairing.size() != m || pair_distances.size() != m) {
    throw DomainError("critic loss needs one pairing entry and distance per real sequence");
  }
  CriticLossTerms out;
  out.d_real.assign(m, -1.0 / static_cast<double>(m));
  out.d_fake.assign(m, 1.0 / static_cast<double>(m));
  double mean_real = 0.0;
  double mean_fake = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    mean_real += real_scores[i];
    mean_fake += fake_scores[i];
  }
  mean_real /= static_cast<double>(m);
  mean_fake /= static_cast<double>(m);

  for (std::size_t i = 0; i < m; ++i) {
    const std::size_t j = pairing[i];
    if (j >= m) throw DomainError("critic loss pairing index out of range");
    const double d = pair_distances[i];
    if (d < kMinPairDistance) {
      ++out.skipped_pairs;
      continue;
    }
    const double diff = real_scores[i] - fake_scores[j];
    const double ratio = std::abs(diff) / d;
    out.penalty_sum += std::abs(ratio - 1.0);
    ++out.pairs_used;
    if (nu != 0.0) {
      const double g = nu * sign(ratio - 1.0) * sign(diff) / d;
      out.d_real[i] += g;
      out.d_fake[j] -= g;
    }
  }
  out.penalty_mean =
      out.pairs_used > 0 ? out.penalty_sum / static_cast<double>(out.pairs_used) : 0.0;
  out.value = mean_fake - mean_real + nu * out.penalty_sum;
  return out;
}

CriticLossTerms critic_loss(const CriticParams& w, std::span<const EventSequence> real_batch,
                            std::span<const EventSequence> fake_batch, double nu,
                            std::span<const std::size_t> pairing, const Window& window) {
  if (real_batch.size() != fake_batch.size()) {
    throw DomainError("critic loss: real and fake batch sizes differ");
  }
  if (pairing.size() != real_batch.size()) {
    throw DomainError("critic loss: pairing must cover the batch");
  }
  const auto real = critic_forward_batch(w, real_batch, nullptr);
  const auto fake = critic_forward_batch(w, fake_batch, nullptr);
  std::vector<double> dist(real_batch.size());
  for (std::size_t i = 0; i < real_batch.size(); ++i) {
    if (pairing[i] >= fake_batch.size()) throw DomainError("critic loss: pairing out of range");
    dist[i] = star_distance(real_batch[i], fake_batch[pairing[i]], window);
  }
  return score_critic_loss(real, fake, pairing, dist, nu);
}

void write_train_log(std::span<const TrainLogRow> rows, std::ostream& out, bool include_timing) {
  out << "iter,phase,critic_loss,penalty_mean,skipped_pairs,wall_ms\n";
  char buf[256];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%zu,%s,%.17g,%.17g,%zu,%.3f\n", r.iter,
                  r.phase == LogPhase::critic ? "critic" : "generator", r.loss,
                  r.penalty_mean, r.skipped_pairs, include_timing ? r.wall_ms : 0.0);
    out << buf;
  }
}

std::pair<GeneratorParams, CriticParams> initial_weights(const TrainConfig& cfg) {
  RngStream g(cfg.seed, mix_ids({kInitGenerator}));
  RngStream c(cfg.seed, mix_ids({kInitCritic}));
  auto gen = GeneratorParams::random(cfg.hidden_dim, g);
  auto critic = CriticParams::random(cfg.hidden_dim, c);
  return {std::move(gen), std::move(critic)};
}

TrainResult train(const Dataset& data, const TrainConfig& cfg, const TrainHooks& hooks) {
  cfg.validate();
  const Window& window = data.window;
  const double noise_rate = cfg.noise_rate ? *cfg.noise_rate : infer_noise_rate(data);
  if (data.sequences.empty()) throw DomainError("cannot train on an empty dataset");

  auto [theta, w] = initial_weights(cfg);
  const AdamConfig adam{cfg.lr, cfg.beta1, cfg.beta2, 1e-8};
  AdamState theta_opt(theta.size(), adam);
  AdamState w_opt(w.size(), adam);

  TrainResult result{theta, w, noise_rate, 0, false, {}};
  const std::size_t m = cfg.batch;
  const auto clock_start = std::chrono::steady_clock::now();
  auto elapsed_ms = [&] {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() -
                                                     clock_start)
        .count();
  };
  auto abort_nonfinite = [&](std::size_t iter, const char* what) {
    if (!cfg.abort_checkpoint_path.empty()) {
      save_checkpoint({theta, w, window.horizon(), noise_rate, iter}, cfg.abort_checkpoint_path);
    }
    throw NumericalError(std::string("training aborted at iteration ") + std::to_string(iter) +
                         ": non-finite " + what);
  };

  std::deque<double> recent;
  std::vector<CriticTrace> real_traces;
  std::vector<CriticTrace> fake_traces;
  std::vector<GeneratorTrace> gen_traces;

  for (std::size_t iter = 0; iter < cfg.max_iters; ++iter) {
    double iter_loss = 0.0;
    for (std::size_t step = 0; step < cfg.n_critic; ++step) {
      RngStream real_rng(cfg.seed, mix_ids({kRealBatch, iter, step}));
      std::vector<EventSequence> real;
      real.reserve(m);
      for (std::size_t i = 0; i < m; ++i) {
        real.push_back(data.sequences[real_rng.below(data.sequences.size())]);
      }
      RngStream noise_rng(cfg.seed, mix_ids({kNoiseBatch, iter, step}));
      const auto noise = noise_batch(noise_rate, m, window, noise_rng);
      const auto fake = generator_forward_batch(theta, noise, window, nullptr, cfg.exec);

      const auto real_scores = critic_forward_batch(w, real, &real_traces, cfg.exec);
      const auto fake_scores = critic_forward_batch(w, fake, &fake_traces, cfg.exec);
      RngStream pair_rng(cfg.seed, mix_ids({kPairing, iter, step}));
      const auto pairing = random_pairing(m, pair_rng);
      std::vector<double> dist(m);
      parallel::for_each_index(
          m, [&](std::size_t i) { dist[i] = star_distance(real[i], fake[pairing[i]], window); },
          cfg.exec);

      const auto terms = score_critic_loss(real_scores, fake_scores, pairing, dist, cfg.nu);
      if (!std::isfinite(terms.value)) abort_nonfinite(iter, "critic loss");

      // One backward pass over the concatenated batch keeps the reduction
      // order fixed: real sequences first, then fake ones.
      std::vector<CriticTrace> traces;
      traces.reserve(2 * m);
      std::move(real_traces.begin(), real_traces.end(), std::back_inserter(traces));
      std::move(fake_traces.begin(), fake_traces.end(), std::back_inserter(traces));
      std::vector<double> upstream(terms.d_real);
      upstream.insert(upstream.end(), terms.d_fake.begin(), terms.d_fake.end());
      const auto grad = critic_backward_batch(w, traces, upstream, cfg.exec);
      if (!grad.all_finite()) abort_nonfinite(iter, "critic gradient");
      adam_step(w.values(), grad.values(), w_opt);

      iter_loss += terms.value;
      result.log.push_back(
          {iter, LogPhase::critic, terms.value, terms.penalty_mean, terms.skipped_pairs,
           elapsed_ms()});
    }

    RngStream gen_rng(cfg.seed, mix_ids({kGeneratorNoise, iter}));
    const auto noise = noise_batch(noise_rate, m, window, gen_rng);
    const auto fake = generator_forward_batch(theta, noise, window, &gen_traces, cfg.exec);
    const auto scores = critic_forward_batch(w, fake, &fake_traces, cfg.exec);
    double gen_loss = 0.0;
    for (double s : scores) gen_loss -= s;
    gen_loss /= static_cast<double>(m);
    if (!std::isfinite(gen_loss)) abort_nonfinite(iter, "generator loss");
    const std::vector<double> upstream(m, -1.0 / static_cast<double>(m));
    const auto grad =
        generator_backward_batch(theta, w, gen_traces, fake_traces, upstream, cfg.exec);
    if (!grad.all_finite()) abort_nonfinite(iter, "generator gradient");
    adam_step(theta.values(), grad.values(), theta_opt);
    result.log.push_back({iter, LogPhase::generator, gen_loss, 0.0, 0, elapsed_ms()});
    result.generator_iterations = iter + 1;

    if (cfg.checkpoint_every > 0 && hooks.on_checkpoint &&
        (iter + 1) % cfg.checkpoint_every == 0) {
      hooks.on_checkpoint(iter + 1, theta, w);
    }
    if (cfg.metric_every > 0 && hooks.on_metrics && (iter + 1) % cfg.metric_every == 0) {
      hooks.on_metrics(iter + 1, theta);
    }

    if (cfg.early_stop_window > 1) {
      recent.push_back(iter_loss / static_cast<double>(cfg.n_critic));
      if (recent.size() > cfg.early_stop_window) recent.pop_front();
      if (recent.size() == cfg.early_stop_window &&
          std::abs(trailing_slope(recent)) < cfg.early_stop_slope) {
        result.early_stopped = true;
        break;
      }
    }
  }

  result.generator = std::move(theta);
  result.critic = std::move(w);
  return result;
}

}  // namespace ppwgan
