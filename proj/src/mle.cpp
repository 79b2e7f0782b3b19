#include "ppwgan/mle.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>

#include "nn_intensity.hpp"
#include "ppwgan/neural.hpp"

namespace ppwgan {

using nlohmann::json;

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Positive half of the 16-node Gauss-Legendre rule on [-1, 1].
constexpr std::array<std::array<double, 2>, 8> kGaussLegendre16 = {{
    {0.095012509837637454, 0.18945061045506859},
    {0.28160355077925892, 0.18260341504492361},
    {0.45801677765722737, 0.16915651939500262},
    {0.61787624440264377, 0.14959598881657676},
    {0.755404408355003, 0.12462897125553403},
    {0.86563120238783176, 0.095158511682492591},
    {0.9445750230732326, 0.062253523938647706},
    {0.98940093499164994, 0.027152459411754037},
}};

template <typename F>
void for_each_node(double a, double b, F&& f) {
  const double half = 0.5 * (b - a);
  const double mid = 0.5 * (a + b);
  for (const auto& [x, w] : kGaussLegendre16) {
    f(mid - half * x, half * w);
    f(mid + half * x, half * w);
  }
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// (e^x - 1) / x and (e^x (x - 1) + 1) / x^2, both stable near 0.
double phi1(double x) { return std::abs(x) < 1e-8 ? 1.0 + 0.5 * x : std::expm1(x) / x; }
double phi2(double x) {
  if (std::abs(x) < 1e-4) return 0.5 + x / 3.0 + x * x / 8.0;
  return (std::exp(x) * (x - 1.0) + 1.0) / (x * x);
}

constexpr double kInvSqrt2Pi = 0.3989422804014327;     // 1 / sqrt(2 pi)
constexpr double kIpMassScale = 0.35355339059327373;   // 1 / (2 sqrt 2)
constexpr double kTwoOverSqrtPi = 1.1283791670955126;  // 2 / sqrt(pi)

// ---------------------------------------------------------------------------
// IP

double ip_kernel(const IpParams& p, std::size_t i, double t) {
  const double z = (t - p.centers[i]) / p.sds[i];
  return p.weights[i] * kInvSqrt2Pi / p.sds[i] * std::exp(-z * z);
}

double ip_mass(const IpParams& p, std::size_t i, double a, double b) {
  const double s = p.sds[i];
  const double c = p.centers[i];
  return p.weights[i] * kIpMassScale * (std::erf((b - c) / s) - std::erf((a - c) / s));
}

double ip_loglik(const IpParams& p, std::span<const double> t, double T, std::span<double> g) {
  const std::size_t k = p.kernels();
  const bool want = !g.empty();
  double ll = 0.0;
  std::vector<double> kv(k);
  for (double tj : t) {
    double lam = 0.0;
    for (std::size_t i = 0; i < k; ++i) lam += (kv[i] = ip_kernel(p, i, tj));
    if (!(lam > 0.0)) return kNegInf;
    ll += std::log(lam);
    if (want) {
      for (std::size_t i = 0; i < k; ++i) {
        const double z = (tj - p.centers[i]) / p.sds[i];
        g[3 * i] += kv[i] / lam;
        g[3 * i + 1] += kv[i] * 2.0 * z / p.sds[i] / lam;
        g[3 * i + 2] += kv[i] * (2.0 * z * z - 1.0) / lam;
      }
    }
  }
  for (std::size_t i = 0; i < k; ++i) {
    const double mass = ip_mass(p, i, 0.0, T);
    ll -= mass;
    if (want) {
      const double s = p.sds[i];
      const double zT = (T - p.centers[i]) / s;
      const double z0 = (0.0 - p.centers[i]) / s;
      const double eT = std::exp(-zT * zT);
      const double e0 = std::exp(-z0 * z0);
      const double scale = p.weights[i] * kIpMassScale * kTwoOverSqrtPi;
      g[3 * i] -= mass;
      g[3 * i + 1] -= scale * (-eT + e0) / s;
      g[3 * i + 2] -= scale * (-zT * eT + z0 * e0);
    }
  }
  return ll;
}

// ---------------------------------------------------------------------------
// SE

double se_loglik(const SeParams& p, std::span<const double> t, double T, std::span<double> g) {
  const bool want = !g.empty();
  double ll = 0.0;
  double A = 0.0;  // sum_{i<j} exp(-omega (t_j - t_i))
  double B = 0.0;  // d A / d omega
  double d_mu = 0.0, d_beta = 0.0, d_omega = 0.0;
  for (std::size_t j = 0; j < t.size(); ++j) {
    if (j > 0) {
      const double dt = t[j] - t[j - 1];
      const double decay = std::exp(-p.omega * dt);
      B = decay * (B - dt * (1.0 + A));
      A = decay * (1.0 + A);
    }
    const double lam = p.mu + p.beta * A;
    if (!(lam > 0.0)) return kNegInf;
    ll += std::log(lam);
    d_mu += 1.0 / lam;
    d_beta += A / lam;
    d_omega += p.beta * B / lam;
  }
  ll -= p.mu * T;
  d_mu -= T;
  for (double ti : t) {
    const double r = T - ti;
    const double e = std::exp(-p.omega * r);
    ll -= p.beta / p.omega * (1.0 - e);
    d_beta -= (1.0 - e) / p.omega;
    d_omega -= p.beta * (-(1.0 - e) / (p.omega * p.omega) + r * e / p.omega);
  }
  if (want) {
    g[0] += d_mu * p.mu;
    g[1] += d_beta * p.beta;
    g[2] += d_omega * p.omega;
  }
  return ll;
}

std::vector<double> se_pieces(const SeParams& p, std::span<const double> t, double T) {
  std::vector<double> out;
  out.reserve(t.size() + 1);
  double excite = 0.0;  // right-limit sum at the previous event
  double prev = 0.0;
  auto piece = [&](double end) {
    const double dt = end - prev;
    return p.mu * dt + p.beta / p.omega * excite * (-std::expm1(-p.omega * dt));
  };
  for (double tj : t) {
    out.push_back(piece(tj));
    excite = excite * std::exp(-p.omega * (tj - prev)) + 1.0;
    prev = tj;
  }
  out.push_back(piece(T));
  return out;
}

// ---------------------------------------------------------------------------
// SC

double sc_piece(const ScParams& p, double a, double b, std::size_t count) {
  const double dt = b - a;
  return std::exp(p.eta * a - p.gamma * static_cast<double>(count)) * dt * phi1(p.eta * dt);
}

double sc_loglik(const ScParams& p, std::span<const double> t, double T, std::span<double> g) {
  const bool want = !g.empty();
  double ll = 0.0;
  double d_eta = 0.0, d_gamma = 0.0;
  double prev = 0.0;
  for (std::size_t j = 0; j <= t.size(); ++j) {
    const double end = j < t.size() ? t[j] : T;
    const double n_before = static_cast<double>(j);
    const double dt = end - prev;
    const double base = std::exp(p.eta * prev - p.gamma * n_before);
    const double piece = base * dt * phi1(p.eta * dt);
    ll -= piece;
    if (want) {
      // d/d eta of integral_a^b e^{eta s} ds = a * piece + e^{eta a} dt^2 phi2(eta dt)
      d_eta -= prev * piece + base * dt * dt * phi2(p.eta * dt);
      d_gamma += n_before * piece;
    }
    if (j < t.size()) {
      ll += p.eta * end - p.gamma * n_before;
      d_eta += end;
      d_gamma -= n_before;
    }
    prev = end;
  }
  if (want) {
    g[0] += d_eta;
    g[1] += d_gamma;
  }
  return ll;
}

// ---------------------------------------------------------------------------
// NN

struct NnLayout {
  std::size_t k;
  std::size_t A() const { return 0; }
  std::size_t B() const { return k; }
  std::size_t b() const { return k + k * k; }
  std::size_t v() const { return 2 * k + k * k; }
  std::size_t w() const { return 3 * k + k * k; }
  std::size_t c() const { return 3 * k + k * k + 1; }
  std::size_t size() const { return 3 * k + k * k + 2; }
};

// Runs the recurrence over the events, storing h_0..h_n (h_0 is the start state).
std::vector<double> nn_states(const NnIntensityParams& p, std::span<const double> t) {
  const std::size_t k = p.hidden_dim;
  std::vector<double> states((t.size() + 1) * k);
  std::vector<double> h = detail::nn_start_state(p);
  std::vector<double> next;
  std::copy(h.begin(), h.end(), states.begin());
  for (std::size_t j = 0; j < t.size(); ++j) {
    detail::nn_step(p, t[j], h, next);
    h.swap(next);
    std::copy(h.begin(), h.end(), states.begin() + static_cast<std::ptrdiff_t>((j + 1) * k));
  }
  return states;
}

double nn_drive_at(const NnIntensityParams& p, const std::vector<double>& states,
                   std::size_t j) {
  double s = p.readout_bias;
  for (std::size_t r = 0; r < p.hidden_dim; ++r) s += p.readout[r] * states[j * p.hidden_dim + r];
  return s;
}

std::vector<double> nn_pieces(const NnIntensityParams& p, std::span<const double> t, double T) {
  const auto states = nn_states(p, t);
  std::vector<double> out;
  out.reserve(t.size() + 1);
  double prev = 0.0;
  for (std::size_t j = 0; j <= t.size(); ++j) {
    const double end = j < t.size() ? t[j] : T;
    const double s = nn_drive_at(p, states, j);
    double acc = 0.0;
    for_each_node(prev, end, [&](double x, double wq) {
      acc += wq * softplus(s + p.elapsed_weight * (x - prev));
    });
    out.push_back(acc);
    prev = end;
  }
  return out;
}

double nn_loglik(const NnIntensityParams& p, std::span<const double> t, double T,
                 std::span<double> g) {
  const std::size_t k = p.hidden_dim;
  const NnLayout L{k};
  const bool want = !g.empty();
  const auto states = nn_states(p, t);
  const std::size_t n = t.size();
  std::vector<double> d_drive(n + 1, 0.0);
  double d_w = 0.0;
  double ll = 0.0;
  double prev = 0.0;
  for (std::size_t j = 0; j <= n; ++j) {
    const double end = j < n ? t[j] : T;
    const double dt = end - prev;
    const double s = nn_drive_at(p, states, j);
    if (j < n) {
      const double x = s + p.elapsed_weight * dt;
      const double lam = softplus(x);
      if (!(lam > 0.0)) return kNegInf;
      ll += std::log(lam);
      const double dlog = sigmoid(x) / lam;
      d_drive[j] += dlog;
      d_w += dlog * dt;
    }
    for_each_node(prev, end, [&](double x, double wq) {
      const double tau = x - prev;
      const double z = s + p.elapsed_weight * tau;
      ll -= wq * softplus(z);
      if (want) {
        const double sg = wq * sigmoid(z);
        d_drive[j] -= sg;
        d_w -= sg * tau;
      }
    });
    prev = end;
  }
  if (!want) return ll;

  g[L.w()] += d_w;
  std::vector<double> dh(k, 0.0);
  std::vector<double> dpre(k);
  for (std::size_t j = n + 1; j-- > 0;) {
    const double* h = states.data() + j * k;
    g[L.c()] += d_drive[j];
    for (std::size_t r = 0; r < k; ++r) {
      g[L.v() + r] += d_drive[j] * h[r];
      dh[r] += d_drive[j] * p.readout[r];
    }
    for (std::size_t r = 0; r < k; ++r) dpre[r] = dh[r] * (1.0 - h[r] * h[r]);
    const double input = j > 0 ? t[j - 1] : p.start_input;
    for (std::size_t r = 0; r < k; ++r) {
      g[L.A() + r] += dpre[r] * input;
      g[L.b() + r] += dpre[r];
    }
    std::fill(dh.begin(), dh.end(), 0.0);
    if (j > 0) {
      const double* h_prev = states.data() + (j - 1) * k;
      for (std::size_t r = 0; r < k; ++r) {
        const double* row = p.recurrent.data() + r * k;
        double* grow = g.data() + L.B() + r * k;
        for (std::size_t c = 0; c < k; ++c) {
          grow[c] += dpre[r] * h_prev[c];
          dh[c] += row[c] * dpre[r];
        }
      }
    }
  }
  return ll;
}

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

std::size_t coordinate_count(const IntensityModel& m) {
  return std::visit(overloaded{[](const IpParams& p) { return 3 * p.kernels(); },
                               [](const SeParams&) { return std::size_t{3}; },
                               [](const ScParams&) { return std::size_t{2}; },
                               [](const NnIntensityParams& p) {
                                 return NnLayout{p.hidden_dim}.size();
                               }},
                    m);
}

void check_window(const EventSequence& seq, const Window& window) {
  if (!seq.compatible_with(window)) throw DomainError("sequence window mismatch");
}

}  // namespace

// ---------------------------------------------------------------------------

double loglik_with_gradient(const IntensityModel& model, const EventSequence& seq,
                            const Window& window, std::span<double> grad) {
  check_window(seq, window);
  if (!grad.empty() && grad.size() != coordinate_count(model)) {
    throw DomainError("gradient buffer does not match the model's coordinate count");
  }
  const auto t = seq.times();
  const double T = window.horizon();
  return std::visit(overloaded{[&](const IpParams& p) { return ip_loglik(p, t, T, grad); },
                               [&](const SeParams& p) { return se_loglik(p, t, T, grad); },
                               [&](const ScParams& p) { return sc_loglik(p, t, T, grad); },
                               [&](const NnIntensityParams& p) {
                                 return nn_loglik(p, t, T, grad);
                               }},
                    model);
}

double loglik(const IntensityModel& model, const EventSequence& seq, const Window& window) {
  return loglik_with_gradient(model, seq, window, {});
}

std::vector<double> compensator(const IntensityModel& model, const EventSequence& seq,
                                const Window& window) {
  check_window(seq, window);
  const auto t = seq.times();
  const double T = window.horizon();
  return std::visit(
      overloaded{
          [&](const IpParams& p) {
            std::vector<double> out;
            double prev = 0.0;
            for (std::size_t j = 0; j <= t.size(); ++j) {
              const double end = j < t.size() ? t[j] : T;
              double acc = 0.0;
              for (std::size_t i = 0; i < p.kernels(); ++i) acc += ip_mass(p, i, prev, end);
              out.push_back(acc);
              prev = end;
            }
            return out;
          },
          [&](const SeParams& p) { return se_pieces(p, t, T); },
          [&](const ScParams& p) {
            std::vector<double> out;
            double prev = 0.0;
            for (std::size_t j = 0; j <= t.size(); ++j) {
              const double end = j < t.size() ? t[j] : T;
              out.push_back(sc_piece(p, prev, end, j));
              prev = end;
            }
            return out;
          },
          [&](const NnIntensityParams& p) { return nn_pieces(p, t, T); }},
      model);
}

double total_compensator(const IntensityModel& model, const EventSequence& seq,
                         const Window& window) {
  check_window(seq, window);
  const double T = window.horizon();
  if (const auto* ip = std::get_if<IpParams>(&model)) {
    double acc = 0.0;
    for (std::size_t i = 0; i < ip->kernels(); ++i) acc += ip_mass(*ip, i, 0.0, T);
    return acc;
  }
  if (const auto* se = std::get_if<SeParams>(&model)) {
    double acc = se->mu * T;
    for (double ti : seq.times()) acc += se->beta / se->omega * (-std::expm1(-se->omega * (T - ti)));
    return acc;
  }
  double acc = 0.0;
  for (double piece : compensator(model, seq, window)) acc += piece;
  return acc;
}

// ---------------------------------------------------------------------------

std::vector<double> to_unconstrained(const IntensityModel& model) {
  return std::visit(
      overloaded{
          [](const IpParams& p) {
            std::vector<double> u;
            for (std::size_t i = 0; i < p.kernels(); ++i) {
              u.push_back(std::log(p.weights[i]));
              u.push_back(p.centers[i]);
              u.push_back(std::log(p.sds[i]));
            }
            return u;
          },
          [](const SeParams& p) {
            return std::vector<double>{std::log(p.mu), std::log(p.beta), std::log(p.omega)};
          },
          [](const ScParams& p) { return std::vector<double>{p.eta, p.gamma}; },
          [](const NnIntensityParams& p) {
            std::vector<double> u;
            u.insert(u.end(), p.input_weights.begin(), p.input_weights.end());
            u.insert(u.end(), p.recurrent.begin(), p.recurrent.end());
            u.insert(u.end(), p.hidden_bias.begin(), p.hidden_bias.end());
            u.insert(u.end(), p.readout.begin(), p.readout.end());
            u.push_back(p.elapsed_weight);
            u.push_back(p.readout_bias);
            return u;
          }},
      model);
}

IntensityModel from_unconstrained(const IntensityModel& shape, std::span<const double> u) {
  if (u.size() != coordinate_count(shape)) {
    throw DomainError("coordinate vector does not match the model shape");
  }
  return std::visit(
      overloaded{
          [&](const IpParams& p) -> IntensityModel {
            IpParams out;
            for (std::size_t i = 0; i < p.kernels(); ++i) {
              out.weights.push_back(std::exp(u[3 * i]));
              out.centers.push_back(u[3 * i + 1]);
              out.sds.push_back(std::exp(u[3 * i + 2]));
            }
            return out;
          },
          [&](const SeParams&) -> IntensityModel {
            return SeParams{std::exp(u[0]), std::exp(u[1]), std::exp(u[2])};
          },
          [&](const ScParams&) -> IntensityModel { return ScParams{u[0], u[1]}; },
          [&](const NnIntensityParams& p) -> IntensityModel {
            const NnLayout L{p.hidden_dim};
            const std::size_t k = p.hidden_dim;
            NnIntensityParams out;
            out.hidden_dim = k;
            auto slice = [&](std::size_t off, std::size_t len) {
              return std::vector<double>(u.begin() + static_cast<std::ptrdiff_t>(off),
                                         u.begin() + static_cast<std::ptrdiff_t>(off + len));
            };
            out.input_weights = slice(L.A(), k);
            out.recurrent = slice(L.B(), k * k);
            out.hidden_bias = slice(L.b(), k);
            out.readout = slice(L.v(), k);
            out.elapsed_weight = u[L.w()];
            out.readout_bias = u[L.c()];
            out.start_input = p.start_input;
            return out;
          }},
      shape);
}

// ---------------------------------------------------------------------------
// Fitting

IntensityModel initial_model(const Dataset& data, Family family, const FitConfig& cfg) {
  const double T = data.window.horizon();
  const double rate = std::max(data.mean_event_rate(), 1e-3);
  switch (family) {
    case Family::IP: {
      const std::size_t k = std::max<std::size_t>(cfg.ip_kernels, 1);
      IpParams p;
      const double mean_count = rate * T;
      for (std::size_t i = 0; i < k; ++i) {
        p.centers.push_back((static_cast<double>(i) + 0.5) * T / static_cast<double>(k));
        p.sds.push_back(T / static_cast<double>(k));
        // Each kernel carries about alpha / sqrt(2) events over the line.
        p.weights.push_back(mean_count * std::numbers::sqrt2 / static_cast<double>(k));
      }
      return p;
    }
    case Family::SE:
      return SeParams{0.5 * rate, 0.5, 1.0};
    case Family::SC:
      return ScParams{0.1, 0.1};
    case Family::NN: {
      NnIntensityParams p;
      const std::size_t k = std::max<std::size_t>(cfg.nn_hidden, 1);
      RngStream rng(cfg.seed, mix_ids({0x6d6c65ULL, k}));
      const double scale = 0.1 / std::sqrt(static_cast<double>(k));
      p.hidden_dim = k;
      p.input_weights.resize(k);
      p.recurrent.resize(k * k);
      p.hidden_bias.resize(k);
      p.readout.resize(k);
      for (auto* v : {&p.input_weights, &p.recurrent, &p.hidden_bias, &p.readout}) {
        for (double& x : *v) x = rng.uniform(-scale, scale);
      }
      p.elapsed_weight = 0.0;
      // softplus^{-1}(rate)
      p.readout_bias = rate > 30.0 ? rate : std::log(std::expm1(rate));
      p.start_input = 0.5;
      return p;
    }
  }
  throw DomainError("unknown family");
}

namespace {

struct Objective {
  double value;
  std::vector<double> grad;
};

Objective mean_objective(const IntensityModel& model, const Dataset& data,
                         std::span<const std::size_t> idx, parallel::Exec exec) {
  const std::size_t dim = coordinate_count(model);
  const std::size_t n = idx.size();
  std::vector<double> values(n);
  std::vector<double> grads(n * dim, 0.0);
  parallel::for_each_index(
      n,
      [&](std::size_t i) {
        values[i] = loglik_with_gradient(model, data.sequences[idx[i]], data.window,
                                         std::span<double>(grads.data() + i * dim, dim));
      },
      exec);
  Objective out{0.0, std::vector<double>(dim, 0.0)};
  for (std::size_t i = 0; i < n; ++i) {
    out.value += values[i];
    for (std::size_t d = 0; d < dim; ++d) out.grad[d] += grads[i * dim + d];
  }
  out.value /= static_cast<double>(n);
  for (double& g : out.grad) g /= static_cast<double>(n);
  return out;
}

}  // namespace

double mean_loglik(const IntensityModel& model, const Dataset& data, parallel::Exec exec) {
  if (data.sequences.empty()) throw DomainError("mean_loglik: dataset is empty");
  std::vector<double> values(data.sequences.size());
  parallel::for_each_index(
      values.size(),
      [&](std::size_t i) { values[i] = loglik(model, data.sequences[i], data.window); }, exec);
  double acc = 0.0;
  for (double v : values) acc += v;
  return acc / static_cast<double>(values.size());
}

FittedModel fit(const Dataset& data, Family family, const FitConfig& cfg) {
  if (data.sequences.empty()) throw DomainError("cannot fit a model to an empty dataset");
  const IntensityModel shape = initial_model(data, family, cfg);
  std::vector<double> u = to_unconstrained(shape);
  double lr = cfg.lr > 0.0 ? cfg.lr : (family == Family::NN ? 1e-3 : 1e-2);
  AdamState opt(u.size(), AdamConfig{lr, 0.9, 0.999, 1e-8});

  const std::size_t n = data.sequences.size();
  std::size_t batch = cfg.batch > 0 ? cfg.batch : (family == Family::NN ? cfg.nn_batch : 0);
  if (batch == 0 || batch >= n) batch = n;
  const bool full = batch == n;
  std::vector<std::size_t> all(n);
  for (std::size_t i = 0; i < n; ++i) all[i] = i;

  FittedModel best{shape, -std::numeric_limits<double>::infinity(), 0, 0.0};
  std::vector<double> best_u = u;
  constexpr std::size_t kFullEvalEvery = 50;
  int backtracks = 0;

  std::size_t iter = 0;
  for (; iter < cfg.max_iters; ++iter) {
    IntensityModel model = from_unconstrained(shape, u);
    std::vector<std::size_t> idx;
    if (full) {
      idx = all;
    } else {
      RngStream rng(cfg.seed, mix_ids({0x666974ULL, iter}));
      idx.resize(batch);
      for (auto& i : idx) i = rng.below(n);
    }
    Objective obj = mean_objective(model, data, idx, cfg.exec);
    const bool finite = std::isfinite(obj.value) &&
                        std::all_of(obj.grad.begin(), obj.grad.end(),
                                    [](double g) { return std::isfinite(g); });
    if (!finite) {
      if (std::isnan(obj.value) && backtracks > 30) {
        throw NumericalError("fit " + family_name(family) + ": log-likelihood diverged (NaN) at "
                             "iteration " + std::to_string(iter) + ", best mean loglik " +
                             std::to_string(best.final_loglik));
      }
      if (++backtracks > 60) {
        throw NumericalError("fit " + family_name(family) + ": no finite log-likelihood "
                             "after repeated step halving at iteration " +
                             std::to_string(iter));
      }
      u = best_u;
      opt = AdamState(u.size(), AdamConfig{opt.config.lr * 0.5, 0.9, 0.999, 1e-8});
      continue;
    }
    double norm = 0.0;
    for (double g : obj.grad) norm += g * g;
    norm = std::sqrt(norm);

    double tracked = obj.value;
    if (!full && (iter % kFullEvalEvery == 0)) {
      tracked = mean_loglik(model, data, cfg.exec);
    }
    if ((full || iter % kFullEvalEvery == 0) && tracked > best.final_loglik) {
      best.model = model;
      best.final_loglik = tracked;
      best.gradient_norm = norm;
      best_u = u;
    }
    if (full && norm < cfg.grad_tol) break;

    // Maximise: step along -(-grad).
    std::vector<double> neg(obj.grad.size());
    for (std::size_t d = 0; d < neg.size(); ++d) neg[d] = -obj.grad[d];
    adam_step(u, neg, opt);
  }
  best.iterations = iter;
  if (!full) {
    // Final iterate competes with the periodic snapshots.
    IntensityModel last = from_unconstrained(shape, u);
    const double v = mean_loglik(last, data, cfg.exec);
    if (std::isfinite(v) && v > best.final_loglik) {
      best.model = last;
      best.final_loglik = v;
    }
  }
  if (!std::isfinite(best.final_loglik)) {
    throw NumericalError("fit " + family_name(family) + ": no finite log-likelihood reached");
  }
  return best;
}

Dataset sample_fitted(const FittedModel& fitted, std::size_t count, const Window& window,
                      std::uint64_t seed) {
  const IntensityModel models[] = {fitted.model};
  const double weights[] = {1.0};
  Dataset d = make_dataset(models, weights, count, window, seed);
  d.label = "MLE-" + family_name(family_of(fitted.model));
  return d;
}

json fitted_to_json(const FittedModel& f) {
  json j = model_to_json(f.model);
  j["diagnostics"] = {{"final_loglik", f.final_loglik},
                      {"iterations", f.iterations},
                      {"gradient_norm", f.gradient_norm}};
  return j;
}

FittedModel fitted_from_json(const json& j) {
  FittedModel f{model_from_json(j, "fitted")};
  if (j.contains("diagnostics") && j["diagnostics"].is_object()) {
    const auto& d = j["diagnostics"];
    f.final_loglik = d.value("final_loglik", 0.0);
    f.iterations = d.value("iterations", std::size_t{0});
    f.gradient_norm = d.value("gradient_norm", 0.0);
  }
  return f;
}

}  // namespace ppwgan
