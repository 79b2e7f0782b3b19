#pragma once

// Recurrent generator and critic over event sequences, their exact
// backpropagation through time, and Adam.
//
// Both networks share one cell layout with hidden size k:
//   h_i = tanh(A x_i + B h_{i-1} + b),   h_0 = 0
//   y_i = tanh(r . h_i + c)
// The generator maps noise times z_i to T (y_i + 1) / 2 and sorts the result;
// the critic scores a sequence by sum_i y_i.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "ppwgan/core.hpp"
#include "ppwgan/parallel.hpp"

namespace ppwgan {

/// Flat parameter block [A (k) | B (k x k, row-major) | b (k) | r (k) | c].
class RnnWeights {
 public:
  RnnWeights() = default;
  explicit RnnWeights(std::size_t hidden_dim);

  std::size_t hidden_dim() const noexcept { return k_; }
  std::size_t size() const noexcept { return values_.size(); }
  static std::size_t size_for(std::size_t k) noexcept { return k * k + 3 * k + 1; }

  std::span<double> values() noexcept { return values_; }
  std::span<const double> values() const noexcept { return values_; }

  std::span<double> input_weights() noexcept { return {values_.data(), k_}; }
  std::span<const double> input_weights() const noexcept { return {values_.data(), k_}; }
  std::span<double> recurrent() noexcept { return {values_.data() + k_, k_ * k_}; }
  std::span<const double> recurrent() const noexcept { return {values_.data() + k_, k_ * k_}; }
  std::span<double> hidden_bias() noexcept { return {values_.data() + k_ + k_ * k_, k_}; }
  std::span<const double> hidden_bias() const noexcept {
    return {values_.data() + k_ + k_ * k_, k_};
  }
  std::span<double> readout() noexcept { return {values_.data() + 2 * k_ + k_ * k_, k_}; }
  std::span<const double> readout() const noexcept {
    return {values_.data() + 2 * k_ + k_ * k_, k_};
  }
  double& readout_bias() noexcept { return values_.back(); }
  double readout_bias() const noexcept { return values_.back(); }

  bool all_finite() const noexcept;
  void set_zero() noexcept;
  /// Element-wise this += other. Shapes must match.
  void accumulate(const RnnWeights& other);

  friend bool operator==(const RnnWeights&, const RnnWeights&) = default;

 protected:
  std::size_t k_ = 0;
  std::vector<double> values_;
};

/// Generator weights (noise sequence -> event sequence).
class GeneratorParams : public RnnWeights {
 public:
  using RnnWeights::RnnWeights;
  /// Uniform in [-0.1/sqrt(k), 0.1/sqrt(k)].
  static GeneratorParams random(std::size_t hidden_dim, RngStream& rng);
};

/// Critic weights (event sequence -> score).
class CriticParams : public RnnWeights {
 public:
  using RnnWeights::RnnWeights;
  static CriticParams random(std::size_t hidden_dim, RngStream& rng);
};

// ---------------------------------------------------------------------------
// Forward / backward

/// Activations cached by generator_forward.
struct GeneratorTrace {
  std::vector<double> inputs;      // z_i
  std::vector<double> hidden;      // n x k
  std::vector<double> raw;         // y_i in (-1, 1), emission order
  std::vector<std::size_t> order;  // order[j] = emission index of sorted output j
  double horizon = 0.0;
};

/// Output has the input's length. Raw value i depends only on z_1..z_i.
EventSequence generator_forward(const GeneratorParams& theta, const EventSequence& zeta,
                                const Window& window, GeneratorTrace* trace = nullptr);

/// Accumulates dL/dtheta into `grad`, given dL/dt for the sorted output
/// times. Gradients follow the permutation chosen by the forward sort.
void generator_backward(const GeneratorParams& theta, const GeneratorTrace& trace,
                        std::span<const double> d_times, GeneratorParams& grad);

struct CriticTrace {
  std::vector<double> inputs;   // t_i
  std::vector<double> hidden;   // n x k
  std::vector<double> outputs;  // a_i
};

/// sum_i a_i; 0 for an empty sequence.
double critic_forward(const CriticParams& w, const EventSequence& rho,
                      CriticTrace* trace = nullptr);

/// Accumulates d_output * d f / d w into `grad`. When `d_inputs` is non-empty
/// it receives d_output * d f / d t_i (overwritten, one entry per event).
void critic_backward(const CriticParams& w, const CriticTrace& trace, double d_output,
                     CriticParams& grad, std::span<double> d_inputs = {});

// ---------------------------------------------------------------------------
// Batched kernels. Per-sequence work runs in parallel; per-sequence
// gradients are summed in index order, so Exec::threaded and Exec::serial
// produce bit-identical results.

std::vector<EventSequence> generator_forward_batch(const GeneratorParams& theta,
                                                   std::span<const EventSequence> noise,
                                                   const Window& window,
                                                   std::vector<GeneratorTrace>* traces,
                                                   parallel::Exec exec = parallel::Exec::threaded);

std::vector<double> critic_forward_batch(const CriticParams& w,
                                         std::span<const EventSequence> seqs,
                                         std::vector<CriticTrace>* traces,
                                         parallel::Exec exec = parallel::Exec::threaded);

/// Sum over sequences of upstream[i] * d f(seq_i) / d w.
CriticParams critic_backward_batch(const CriticParams& w, std::span<const CriticTrace> traces,
                                   std::span<const double> upstream,
                                   parallel::Exec exec = parallel::Exec::threaded);

/// Gradient of sum_i upstream[i] * f_w(g_theta(zeta_i)) with respect to theta.
GeneratorParams generator_backward_batch(const GeneratorParams& theta, const CriticParams& w,
                                         std::span<const GeneratorTrace> gen_traces,
                                         std::span<const CriticTrace> critic_traces,
                                         std::span<const double> upstream,
                                         parallel::Exec exec = parallel::Exec::threaded);

// ---------------------------------------------------------------------------
// Adam

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  AdamState() = default;
  AdamState(std::size_t n, AdamConfig c) : m(n, 0.0), v(n, 0.0), config(c) {}

  std::vector<double> m;
  std::vector<double> v;
  std::uint64_t step = 0;
  AdamConfig config;
};

/// One bias-corrected descent step: params -= lr * m_hat / (sqrt(v_hat) + eps).
void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state);

// ---------------------------------------------------------------------------
// Checkpoints

struct Checkpoint {
  GeneratorParams generator;
  CriticParams critic;
  double horizon = 0.0;
  double noise_rate = 0.0;
  std::uint64_t iteration = 0;
};

nlohmann::json weights_to_json(const RnnWeights& w);
void weights_from_json(const nlohmann::json& j, RnnWeights& out, const std::string& path);

nlohmann::json checkpoint_to_json(const Checkpoint& c);
Checkpoint checkpoint_from_json(const nlohmann::json& j);
void save_checkpoint(const Checkpoint& c, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

/// Samples `count` sequences from a trained generator using homogeneous noise
/// at `noise_rate`; sequence i draws its noise from RngStream(seed, i).
Dataset sample_generator(const GeneratorParams& theta, double noise_rate, std::size_t count,
                         const Window& window, std::uint64_t seed);

}  // namespace ppwgan
