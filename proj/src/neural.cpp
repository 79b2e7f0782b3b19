#include "ppwgan/neural.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "ppwgan/simulate.hpp"

namespace ppwgan {

using nlohmann::json;

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vec = Eigen::VectorXd;
using ConstVecMap = Eigen::Map<const Vec>;
using VecMap = Eigen::Map<Vec>;

// Shared cell forward: fills hidden (n x k) and outputs (n).
void cell_forward(const RnnWeights& w, std::span<const double> inputs,
                  std::vector<double>& hidden, std::vector<double>& outputs) {
  const auto k = static_cast<Eigen::Index>(w.hidden_dim());
  const std::size_t n = inputs.size();
  hidden.assign(n * w.hidden_dim(), 0.0);
  outputs.assign(n, 0.0);
  if (n == 0) return;

  ConstVecMap A(w.input_weights().data(), k);
  Eigen::Map<const RowMat> B(w.recurrent().data(), k, k);
  ConstVecMap b(w.hidden_bias().data(), k);
  ConstVecMap r(w.readout().data(), k);
  const double c = w.readout_bias();

  Vec pre(k);
  for (std::size_t i = 0; i < n; ++i) {
    pre.noalias() = A * inputs[i] + b;
    if (i > 0) pre.noalias() += B * ConstVecMap(hidden.data() + (i - 1) * k, k);
    VecMap h(hidden.data() + i * k, k);
    h = pre.array().tanh();
    outputs[i] = std::tanh(r.dot(h) + c);
  }
}

// Shared cell backward. d_out[i] = dL/dy_i. Accumulates into grad; writes
// dL/dx_i into d_inputs when non-empty.
void cell_backward(const RnnWeights& w, std::span<const double> inputs,
                   const std::vector<double>& hidden, const std::vector<double>& outputs,
                   std::span<const double> d_out, RnnWeights& grad,
                   std::span<double> d_inputs) {
  const std::size_t n = inputs.size();
  if (grad.hidden_dim() != w.hidden_dim()) {
    throw DomainError("gradient buffer hidden_dim does not match parameters");
  }
  if (d_out.size() != n || hidden.size() != n * w.hidden_dim() || outputs.size() != n) {
    throw DomainError("trace does not match the upstream gradient length");
  }
  if (!d_inputs.empty() && d_inputs.size() != n) {
    throw DomainError("input-gradient buffer has the wrong length");
  }
  if (n == 0) return;
  const auto k = static_cast<Eigen::Index>(w.hidden_dim());

  ConstVecMap A(w.input_weights().data(), k);
  Eigen::Map<const RowMat> B(w.recurrent().data(), k, k);
  ConstVecMap r(w.readout().data(), k);

  VecMap gA(grad.input_weights().data(), k);
  Eigen::Map<RowMat> gB(grad.recurrent().data(), k, k);
  VecMap gb(grad.hidden_bias().data(), k);
  VecMap gr(grad.readout().data(), k);
  double& gc = grad.readout_bias();

  Vec dh = Vec::Zero(k);  // dL/dh_i flowing back from step i+1
  Vec dpre(k);
  for (std::size_t i = n; i-- > 0;) {
    ConstVecMap h(hidden.data() + i * k, k);
    const double y = outputs[i];
    const double dy_pre = d_out[i] * (1.0 - y * y);
    gr.noalias() += dy_pre * h;
    gc += dy_pre;
    dh.noalias() += dy_pre * r;
    dpre = dh.array() * (1.0 - h.array().square());
    gA.noalias() += inputs[i] * dpre;
    gb += dpre;
    if (!d_inputs.empty()) d_inputs[i] = A.dot(dpre);
    if (i > 0) {
      ConstVecMap h_prev(hidden.data() + (i - 1) * k, k);
      gB.noalias() += dpre * h_prev.transpose();
      dh.noalias() = B.transpose() * dpre;
    }
  }
}

void check_finite(std::span<const double> v, const char* what) {
  for (double x : v) {
    if (!std::isfinite(x)) throw NumericalError(std::string(what) + ": non-finite activation");
  }
}

template <typename Params>
Params random_params(std::size_t k, RngStream& rng) {
  if (k == 0) throw DomainError("hidden_dim must be positive");
  Params p(k);
  const double scale = 0.1 / std::sqrt(static_cast<double>(k));
  for (double& v : p.values()) v = rng.uniform(-scale, scale);
  return p;
}

}  // namespace

// ---------------------------------------------------------------------------

RnnWeights::RnnWeights(std::size_t hidden_dim)
    : k_(hidden_dim), values_(size_for(hidden_dim), 0.0) {
  if (hidden_dim == 0) throw DomainError("hidden_dim must be positive");
}

bool RnnWeights::all_finite() const noexcept {
  return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

void RnnWeights::set_zero() noexcept { std::fill(values_.begin(), values_.end(), 0.0); }

void RnnWeights::accumulate(const RnnWeights& other) {
  if (other.k_ != k_) throw DomainError("cannot add parameter blocks of different shapes");
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += other.values_[i];
}

GeneratorParams GeneratorParams::random(std::size_t hidden_dim, RngStream& rng) {
  return random_params<GeneratorParams>(hidden_dim, rng);
}

CriticParams CriticParams::random(std::size_t hidden_dim, RngStream& rng) {
  return random_params<CriticParams>(hidden_dim, rng);
}

// ---------------------------------------------------------------------------

EventSequence generator_forward(const GeneratorParams& theta, const EventSequence& zeta,
                                const Window& window, GeneratorTrace* trace) {
  if (!zeta.compatible_with(window)) throw DomainError("noise sequence window mismatch");
  GeneratorTrace local;
  GeneratorTrace& tr = trace != nullptr ? *trace : local;
  const double T = window.horizon();
  tr.horizon = T;
  tr.inputs.assign(zeta.times().begin(), zeta.times().end());
  cell_forward(theta, tr.inputs, tr.hidden, tr.raw);
  check_finite(tr.raw, "generator");

  const std::size_t n = tr.raw.size();
  const double top = std::nextafter(T, 0.0);
  std::vector<double> times(n);
  for (std::size_t i = 0; i < n; ++i) {
    times[i] = std::clamp(0.5 * T * (tr.raw[i] + 1.0), 0.0, top);
  }
  tr.order.resize(n);
  std::iota(tr.order.begin(), tr.order.end(), std::size_t{0});
  std::stable_sort(tr.order.begin(), tr.order.end(),
                   [&](std::size_t a, std::size_t b) { return times[a] < times[b]; });
  std::vector<double> sorted(n);
  for (std::size_t j = 0; j < n; ++j) sorted[j] = times[tr.order[j]];
  return validate_sequence(std::move(sorted), window);
}

void generator_backward(const GeneratorParams& theta, const GeneratorTrace& trace,
                        std::span<const double> d_times, GeneratorParams& grad) {
  const std::size_t n = trace.raw.size();
  if (d_times.size() != n || trace.order.size() != n) {
    throw DomainError("generator_backward: upstream gradient length mismatch");
  }
  std::vector<double> d_raw(n);
  const double half_T = 0.5 * trace.horizon;
  for (std::size_t j = 0; j < n; ++j) d_raw[trace.order[j]] = d_times[j] * half_T;
  cell_backward(theta, trace.inputs, trace.hidden, trace.raw, d_raw, grad, {});
}

double critic_forward(const CriticParams& w, const EventSequence& rho, CriticTrace* trace) {
  CriticTrace local;
  CriticTrace& tr = trace != nullptr ? *trace : local;
  tr.inputs.assign(rho.times().begin(), rho.times().end());
  cell_forward(w, tr.inputs, tr.hidden, tr.outputs);
  double total = 0.0;
  for (double a : tr.outputs) total += a;
  if (!std::isfinite(total)) throw NumericalError("critic: non-finite output");
  return total;
}

void critic_backward(const CriticParams& w, const CriticTrace& trace, double d_output,
                     CriticParams& grad, std::span<double> d_inputs) {
  const std::vector<double> d_out(trace.outputs.size(), d_output);
  cell_backward(w, trace.inputs, trace.hidden, trace.outputs, d_out, grad, d_inputs);
}

// ---------------------------------------------------------------------------
// Batches

std::vector<EventSequence> generator_forward_batch(const GeneratorParams& theta,
                                                   std::span<const EventSequence> noise,
                                                   const Window& window,
                                                   std::vector<GeneratorTrace>* traces,
                                                   parallel::Exec exec) {
  std::vector<EventSequence> out(noise.size());
  if (traces != nullptr) traces->assign(noise.size(), {});
  parallel::for_each_index(
      noise.size(),
      [&](std::size_t i) {
        out[i] = generator_forward(theta, noise[i], window,
                                   traces != nullptr ? &(*traces)[i] : nullptr);
      },
      exec);
  return out;
}

std::vector<double> critic_forward_batch(const CriticParams& w,
                                         std::span<const EventSequence> seqs,
                                         std::vector<CriticTrace>* traces,
                                         parallel::Exec exec) {
  std::vector<double> out(seqs.size());
  if (traces != nullptr) traces->assign(seqs.size(), {});
  parallel::for_each_index(
      seqs.size(),
      [&](std::size_t i) {
        out[i] = critic_forward(w, seqs[i], traces != nullptr ? &(*traces)[i] : nullptr);
      },
      exec);
  return out;
}

CriticParams critic_backward_batch(const CriticParams& w, std::span<const CriticTrace> traces,
                                   std::span<const double> upstream, parallel::Exec exec) {
  if (upstream.size() != traces.size()) {
    throw DomainError("critic_backward_batch: one upstream weight per trace required");
  }
  std::vector<CriticParams> parts(traces.size(), CriticParams(w.hidden_dim()));
  parallel::for_each_index(
      traces.size(),
      [&](std::size_t i) {
        if (upstream[i] != 0.0) critic_backward(w, traces[i], upstream[i], parts[i]);
      },
      exec);
  CriticParams total(w.hidden_dim());
  for (const auto& p : parts) total.accumulate(p);
  return total;
}

GeneratorParams generator_backward_batch(const GeneratorParams& theta, const CriticParams& w,
                                         std::span<const GeneratorTrace> gen_traces,
                                         std::span<const CriticTrace> critic_traces,
                                         std::span<const double> upstream,
                                         parallel::Exec exec) {
  if (gen_traces.size() != critic_traces.size() || upstream.size() != gen_traces.size()) {
    throw DomainError("generator_backward_batch: batch sizes differ");
  }
  std::vector<GeneratorParams> parts(gen_traces.size(), GeneratorParams(theta.hidden_dim()));
  parallel::for_each_index(
      gen_traces.size(),
      [&](std::size_t i) {
        const auto& ct = critic_traces[i];
        std::vector<double> d_times(ct.inputs.size());
        CriticParams scratch(w.hidden_dim());
        critic_backward(w, ct, upstream[i], scratch, d_times);
        generator_backward(theta, gen_traces[i], d_times, parts[i]);
      },
      exec);
  GeneratorParams total(theta.hidden_dim());
  for (const auto& p : parts) total.accumulate(p);
  return total;
}

// ---------------------------------------------------------------------------

void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state) {
  if (params.size() != grads.size() || state.m.size() != params.size() ||
      state.v.size() != params.size()) {
    throw DomainError("adam_step: parameter, gradient and moment sizes differ");
  }
  const auto& cfg = state.config;
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(cfg.beta1, t);
  const double c2 = 1.0 - std::pow(cfg.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i];
    state.m[i] = cfg.beta1 * state.m[i] + (1.0 - cfg.beta1) * g;
    state.v[i] = cfg.beta2 * state.v[i] + (1.0 - cfg.beta2) * g * g;
    const double m_hat = state.m[i] / c1;
    const double v_hat = state.v[i] / c2;
    params[i] -= cfg.lr * m_hat / (std::sqrt(v_hat) + cfg.epsilon);
  }
}

// ---------------------------------------------------------------------------
// Checkpoints

json weights_to_json(const RnnWeights& w) {
  auto vec = [](std::span<const double> s) { return std::vector<double>(s.begin(), s.end()); };
  return {{"hidden_dim", w.hidden_dim()},
          {"input_weights", vec(w.input_weights())},
          {"recurrent", vec(w.recurrent())},
          {"hidden_bias", vec(w.hidden_bias())},
          {"readout", vec(w.readout())},
          {"readout_bias", w.readout_bias()}};
}

void weights_from_json(const json& j, RnnWeights& out, const std::string& path) {
  auto get_vec = [&](const char* key, std::span<double> dst) {
    if (!j.contains(key) || !j[key].is_array() || j[key].size() != dst.size()) {
      throw ConfigError(path + "." + key + ": expected an array of " +
                        std::to_string(dst.size()) + " numbers");
    }
    for (std::size_t i = 0; i < dst.size(); ++i) {
      if (!j[key][i].is_number()) {
        throw ConfigError(path + "." + key + "[" + std::to_string(i) + "]: expected a number");
      }
      dst[i] = j[key][i].get<double>();
    }
  };
  if (!j.is_object() || !j.contains("hidden_dim") || !j["hidden_dim"].is_number_unsigned()) {
    throw ConfigError(path + ".hidden_dim: expected a positive integer");
  }
  const auto k = j["hidden_dim"].get<std::size_t>();
  if (k != out.hidden_dim()) {
    throw ConfigError(path + ".hidden_dim: expected " + std::to_string(out.hidden_dim()));
  }
  get_vec("input_weights", out.input_weights());
  get_vec("recurrent", out.recurrent());
  get_vec("hidden_bias", out.hidden_bias());
  get_vec("readout", out.readout());
  if (!j.contains("readout_bias") || !j["readout_bias"].is_number()) {
    throw ConfigError(path + ".readout_bias: expected a number");
  }
  out.readout_bias() = j["readout_bias"].get<double>();
}

json checkpoint_to_json(const Checkpoint& c) {
  return {{"format", "ppwgan-checkpoint"},
          {"version", 1},
          {"hidden_dim", c.generator.hidden_dim()},
          {"horizon", c.horizon},
          {"noise_rate", c.noise_rate},
          {"iteration", c.iteration},
          {"generator", weights_to_json(c.generator)},
          {"critic", weights_to_json(c.critic)}};
}

Checkpoint checkpoint_from_json(const json& j) {
  if (!j.is_object() || j.value("format", "") != "ppwgan-checkpoint") {
    throw ConfigError("checkpoint.format: expected \"ppwgan-checkpoint\"");
  }
  if (j.value("version", 0) != 1) throw ConfigError("checkpoint.version: unsupported version");
  if (!j.contains("hidden_dim") || !j["hidden_dim"].is_number_unsigned()) {
    throw ConfigError("checkpoint.hidden_dim: expected a positive integer");
  }
  const auto k = j["hidden_dim"].get<std::size_t>();
  if (k == 0) throw ConfigError("checkpoint.hidden_dim: expected a positive integer");
  Checkpoint c{GeneratorParams(k), CriticParams(k)};
  for (const char* key : {"horizon", "noise_rate"}) {
    if (!j.contains(key) || !j[key].is_number()) {
      throw ConfigError(std::string("checkpoint.") + key + ": expected a number");
    }
  }
  c.horizon = j["horizon"].get<double>();
  c.noise_rate = j["noise_rate"].get<double>();
  c.iteration = j.value("iteration", std::uint64_t{0});
  if (!j.contains("generator") || !j.contains("critic")) {
    throw ConfigError("checkpoint: generator and critic blocks are required");
  }
  weights_from_json(j["generator"], c.generator, "checkpoint.generator");
  weights_from_json(j["critic"], c.critic, "checkpoint.critic");
  return c;
}

void save_checkpoint(const Checkpoint& c, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << checkpoint_to_json(c).dump(1) << '\n';
  if (!out) throw IoError("failed writing '" + path + "'");
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ParseError(std::string("checkpoint: ") + e.what(), 0);
  }
  return checkpoint_from_json(j);
}

Dataset sample_generator(const GeneratorParams& theta, double noise_rate, std::size_t count,
                         const Window& window, std::uint64_t seed) {
  std::vector<EventSequence> out(count);
  parallel::for_each_index(count, [&](std::size_t i) {
    RngStream rng(seed, i);
    out[i] = generator_forward(theta, simulate_homogeneous(noise_rate, window, rng), window);
  });
  return Dataset(window, std::move(out), "WGAN");
}

}  // namespace ppwgan
