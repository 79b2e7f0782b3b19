#include "ppwgan/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <sstream>

#include "nn_intensity.hpp"
#include "ppwgan/parallel.hpp"

namespace ppwgan {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

bool all_finite(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

double ip_intensity(const IpParams& p, double t) {
  double acc = 0.0;
  for (std::size_t i = 0; i < p.kernels(); ++i) {
    const double sd = p.sds[i];
    const double z = (t - p.centers[i]) / sd;
    acc += p.weights[i] / (std::sqrt(2.0 * std::numbers::pi) * sd) * std::exp(-z * z);
  }
  return acc;
}

}  // namespace

double softplus(double x) noexcept {
  return x > 30.0 ? x : std::log1p(std::exp(x));
}

Family family_of(const IntensityModel& model) noexcept {
  return static_cast<Family>(model.index());
}

std::string family_name(Family f) {
  switch (f) {
    case Family::IP: return "IP";
    case Family::SE: return "SE";
    case Family::SC: return "SC";
    case Family::NN: return "NN";
  }
  return "?";
}

Family parse_family(const std::string& name) {
  if (name == "IP") return Family::IP;
  if (name == "SE") return Family::SE;
  if (name == "SC") return Family::SC;
  if (name == "NN") return Family::NN;
  throw DomainError("unknown intensity family '" + name + "' (expected IP, SE, SC or NN)");
}

void validate_model(const IntensityModel& model) {
  std::visit(
      overloaded{
          [](const IpParams& p) {
            if (p.kernels() == 0) throw DomainError("IP: at least one kernel required");
            if (p.centers.size() != p.kernels() || p.sds.size() != p.kernels()) {
              throw DomainError("IP: weights, centers and sds must have equal length");
            }
            if (!all_finite(p.weights) || !all_finite(p.centers) || !all_finite(p.sds)) {
              throw DomainError("IP: parameters must be finite");
            }
            for (std::size_t i = 0; i < p.kernels(); ++i) {
              if (!(p.sds[i] > 0.0)) throw DomainError("IP: sds must be positive");
              if (p.weights[i] < 0.0) throw DomainError("IP: weights must be non-negative");
            }
          },
          [](const SeParams& p) {
            if (!std::isfinite(p.mu) || !std::isfinite(p.beta) || !std::isfinite(p.omega)) {
              throw DomainError("SE: parameters must be finite");
            }
            if (p.mu < 0.0 || p.beta < 0.0) throw DomainError("SE: mu and beta must be >= 0");
            if (!(p.omega > 0.0)) throw DomainError("SE: omega must be positive");
          },
          [](const ScParams& p) {
            if (!std::isfinite(p.eta) || !std::isfinite(p.gamma)) {
              throw DomainError("SC: parameters must be finite");
            }
          },
          [](const NnIntensityParams& p) {
            const std::size_t k = p.hidden_dim;
            if (k == 0) throw DomainError("NN: hidden_dim must be positive");
            if (p.input_weights.size() != k || p.hidden_bias.size() != k ||
                p.readout.size() != k || p.recurrent.size() != k * k) {
              throw DomainError("NN: weight shapes do not match hidden_dim");
            }
            if (!all_finite(p.input_weights) || !all_finite(p.recurrent) ||
                !all_finite(p.hidden_bias) || !all_finite(p.readout) ||
                !std::isfinite(p.elapsed_weight) || !std::isfinite(p.readout_bias) ||
                !std::isfinite(p.start_input)) {
              throw DomainError("NN: parameters must be finite");
            }
          }},
      model);
}

std::vector<std::string> model_warnings(const IntensityModel& model) {
  std::vector<std::string> out;
  if (const auto* se = std::get_if<SeParams>(&model)) {
    if (se->beta / se->omega >= 1.0) {
      std::ostringstream msg;
      msg << "SE branching ratio beta/omega = " << se->beta / se->omega
          << " >= 1: the process is not stationary";
      out.push_back(msg.str());
    }
  }
  return out;
}

double intensity_at(const IntensityModel& model, double t, std::span<const double> history,
                    const Window& window) {
  if (!window.contains(t)) {
    std::ostringstream msg;
    msg << "intensity requested at t = " << t << " outside [0, " << window.horizon() << ")";
    throw DomainError(msg.str());
  }
  const auto before = history.subspan(
      0, static_cast<std::size_t>(std::lower_bound(history.begin(), history.end(), t) -
                                  history.begin()));
  return std::visit(
      overloaded{
          [&](const IpParams& p) { return ip_intensity(p, t); },
          [&](const SeParams& p) {
            double excite = 0.0;
            for (double ti : before) excite += std::exp(-p.omega * (t - ti));
            return p.mu + p.beta * excite;
          },
          [&](const ScParams& p) {
            return std::exp(p.eta * t - p.gamma * static_cast<double>(before.size()));
          },
          [&](const NnIntensityParams& p) {
            std::vector<double> h = detail::nn_start_state(p);
            std::vector<double> next;
            double last = 0.0;
            for (double ti : before) {
              detail::nn_step(p, ti, h, next);
              h.swap(next);
              last = ti;
            }
            return softplus(detail::nn_drive(p, h) + p.elapsed_weight * (t - last));
          }},
      model);
}

// ---------------------------------------------------------------------------
// Thinning

Sampler::Sampler(IntensityModel model, Window window)
    : model_(std::move(model)), window_(window) {
  validate_model(model_);
  if (const auto* ip = std::get_if<IpParams>(&model_)) {
    double peak = 0.0;
    const double T = window_.horizon();
    const auto steps = static_cast<std::size_t>(std::ceil(T / 1e-3));
    for (std::size_t i = 0; i <= steps; ++i) {
      peak = std::max(peak, ip_intensity(*ip, std::min(T, static_cast<double>(i) * 1e-3)));
    }
    ip_bound_ = 1.2 * peak;
  }
}

EventSequence Sampler::sample(RngStream& rng) const {
  switch (family_of(model_)) {
    case Family::IP: return sample_ip(rng);
    case Family::SE: return sample_se(rng);
    case Family::SC: return sample_sc(rng);
    case Family::NN: return sample_nn(rng);
  }
  throw DomainError("unknown family");
}

namespace {

[[noreturn]] void bound_failure(const char* family) {
  throw NumericalError(std::string(family) +
                       ": thinning bound violated after repeated doubling");
}

void check_growth(std::size_t n, const char* family) {
  if (n >= Sampler::kMaxEvents) {
    throw NumericalError(std::string(family) + ": more than " +
                         std::to_string(Sampler::kMaxEvents) +
                         " events in one window; intensity is explosive");
  }
}

}  // namespace

EventSequence Sampler::sample_ip(RngStream& rng) const {
  const auto& p = std::get<IpParams>(model_);
  const double T = window_.horizon();
  double bound = ip_bound_;
  if (bound <= 0.0) return SequenceAccess::trusted({}, T);
  for (int attempt = 0; attempt <= kMaxBoundDoublings; ++attempt) {
    std::vector<double> times;
    bool violated = false;
    double t = 0.0;
    while (true) {
      t += rng.exponential(bound);
      if (t >= T) break;
      const double lam = ip_intensity(p, t);
      if (lam > bound) {
        violated = true;
        break;
      }
      if (rng.uniform() * bound < lam) {
        times.push_back(t);
        check_growth(times.size(), "IP");
      }
    }
    if (!violated) return SequenceAccess::trusted(std::move(times), T);
    bound *= 2.0;
  }
  bound_failure("IP");
}

EventSequence Sampler::sample_se(RngStream& rng) const {
  const auto& p = std::get<SeParams>(model_);
  const double T = window_.horizon();
  std::vector<double> times;
  double t = 0.0;
  double excite = 0.0;  // sum_j exp(-omega (t - t_j)) at the current t
  while (true) {
    // The exponential kernel only decays between events, so the current
    // right-limit intensity dominates the rest of the gap.
    const double bound = p.mu + p.beta * excite;
    if (!(bound > 0.0)) break;
    if (!std::isfinite(bound)) throw NumericalError("SE: non-finite intensity bound");
    const double next = t + rng.exponential(bound);
    if (next >= T) break;
    excite *= std::exp(-p.omega * (next - t));
    t = next;
    const double lam = p.mu + p.beta * excite;
    if (rng.uniform() * bound < lam) {
      times.push_back(t);
      check_growth(times.size(), "SE");
      excite += 1.0;
    }
  }
  return SequenceAccess::trusted(std::move(times), T);
}

EventSequence Sampler::sample_sc(RngStream& rng) const {
  const auto& p = std::get<ScParams>(model_);
  const double T = window_.horizon();
  const double segment = p.eta != 0.0 ? std::min(T, 1.0 / std::abs(p.eta)) : T;
  std::vector<double> times;
  double t = 0.0;
  double penalty = 0.0;  // gamma * N(t)
  while (t < T) {
    const double seg_end = std::min(T, t + segment);
    // exp(eta s - penalty) is monotone in s, so an endpoint bounds the segment.
    const double bound = std::exp(std::max(p.eta * t, p.eta * seg_end) - penalty);
    if (!std::isfinite(bound) || bound <= 0.0) {
      throw NumericalError("SC: intensity bound is not a positive finite number");
    }
    const double next = t + rng.exponential(bound);
    if (next >= seg_end) {
      t = seg_end;
      continue;
    }
    t = next;
    const double lam = std::exp(p.eta * t - penalty);
    if (rng.uniform() * bound < lam) {
      times.push_back(t);
      check_growth(times.size(), "SC");
      penalty += p.gamma;
    }
  }
  return SequenceAccess::trusted(std::move(times), T);
}

EventSequence Sampler::sample_nn(RngStream& rng) const {
  const auto& p = std::get<NnIntensityParams>(model_);
  const double T = window_.horizon();
  const double segment =
      std::min(T, p.elapsed_weight != 0.0 ? std::min(1.0, 1.0 / std::abs(p.elapsed_weight))
                                          : T);
  std::vector<double> times;
  std::vector<double> h = detail::nn_start_state(p);
  std::vector<double> scratch;
  double drive = detail::nn_drive(p, h);
  double last = 0.0;
  double t = 0.0;
  auto rate = [&](double s) { return softplus(drive + p.elapsed_weight * (s - last)); };

  while (t < T) {
    const double seg_end = std::min(T, t + segment);
    // Pre-activation is affine in time between events, so the endpoints
    // bound softplus; doubling only guards against rounding surprises.
    double bound = std::max(rate(t), rate(seg_end));
    if (!std::isfinite(bound)) throw NumericalError("NN: non-finite intensity bound");
    if (bound <= 0.0) {
      t = seg_end;
      continue;
    }
    bool accepted_or_left = false;
    for (int attempt = 0; attempt <= kMaxBoundDoublings && !accepted_or_left; ++attempt) {
      const double next = t + rng.exponential(bound);
      if (next >= seg_end) {
        t = seg_end;
        accepted_or_left = true;
        break;
      }
      const double lam = rate(next);
      if (lam > bound) {
        bound *= 2.0;
        continue;
      }
      t = next;
      accepted_or_left = true;
      if (rng.uniform() * bound < lam) {
        times.push_back(t);
        check_growth(times.size(), "NN");
        detail::nn_step(p, t, h, scratch);
        h.swap(scratch);
        drive = detail::nn_drive(p, h);
        last = t;
      }
    }
    if (!accepted_or_left) bound_failure("NN");
  }
  return SequenceAccess::trusted(std::move(times), T);
}

EventSequence simulate_thinning(const IntensityModel& model, const Window& window,
                                RngStream& rng) {
  return Sampler(model, window).sample(rng);
}

EventSequence simulate_homogeneous(double rate, const Window& window, RngStream& rng) {
  if (!(rate > 0.0) || !std::isfinite(rate)) {
    throw DomainError("homogeneous rate must be positive and finite");
  }
  const double T = window.horizon();
  std::vector<double> times;
  double t = rng.exponential(rate);
  while (t < T) {
    times.push_back(t);
    check_growth(times.size(), "homogeneous");
    t += rng.exponential(rate);
  }
  return SequenceAccess::trusted(std::move(times), T);
}

Dataset make_dataset(std::span<const IntensityModel> models,
                     std::span<const double> mixture_weights, std::size_t count,
                     const Window& window, std::uint64_t seed,
                     std::vector<std::size_t>* components) {
  if (models.empty()) throw DomainError("make_dataset: model list is empty");
  if (mixture_weights.size() != models.size()) {
    throw DomainError("make_dataset: one mixture weight per model required");
  }
  double total = 0.0;
  for (double w : mixture_weights) {
    if (!(w >= 0.0)) throw DomainError("make_dataset: mixture weights must be >= 0");
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-12) {
    throw DomainError("make_dataset: mixture weights must sum to 1");
  }

  std::vector<Sampler> samplers;
  samplers.reserve(models.size());
  for (const auto& m : models) samplers.emplace_back(m, window);

  std::vector<double> cumulative(mixture_weights.size());
  std::partial_sum(mixture_weights.begin(), mixture_weights.end(), cumulative.begin());

  std::vector<EventSequence> seqs(count);
  std::vector<std::size_t> picked(count, 0);
  parallel::for_each_index(count, [&](std::size_t i) {
    RngStream rng(seed, i);
    std::size_t c = 0;
    if (models.size() > 1) {
      const double u = rng.uniform() * total;
      while (c + 1 < models.size() && u >= cumulative[c]) ++c;
    }
    picked[i] = c;
    seqs[i] = samplers[c].sample(rng);
  });
  if (components != nullptr) *components = std::move(picked);

  std::string label;
  if (models.size() == 1) {
    label = family_name(family_of(models.front()));
  } else {
    std::vector<std::string> names;
    for (const auto& m : models) names.push_back(family_name(family_of(m)));
    label = mixture_label(names);
  }
  return Dataset(window, std::move(seqs), std::move(label));
}

// ---------------------------------------------------------------------------
// JSON

using nlohmann::json;

json model_to_json(const IntensityModel& model) {
  return std::visit(
      overloaded{
          [](const IpParams& p) -> json {
            return {{"family", "IP"}, {"weights", p.weights}, {"centers", p.centers},
                    {"sds", p.sds}};
          },
          [](const SeParams& p) -> json {
            return {{"family", "SE"}, {"mu", p.mu}, {"beta", p.beta}, {"omega", p.omega}};
          },
          [](const ScParams& p) -> json {
            return {{"family", "SC"}, {"eta", p.eta}, {"gamma", p.gamma}};
          },
          [](const NnIntensityParams& p) -> json {
            return {{"family", "NN"},
                    {"hidden_dim", p.hidden_dim},
                    {"input_weights", p.input_weights},
                    {"recurrent", p.recurrent},
                    {"hidden_bias", p.hidden_bias},
                    {"readout", p.readout},
                    {"elapsed_weight", p.elapsed_weight},
                    {"readout_bias", p.readout_bias},
                    {"start_input", p.start_input}};
          }},
      model);
}

namespace {

const json& field(const json& j, const std::string& key, const std::string& path) {
  if (!j.is_object()) throw ConfigError(path + ": expected an object");
  auto it = j.find(key);
  if (it == j.end()) throw ConfigError(path + "." + key + ": missing field");
  return *it;
}

double number_field(const json& j, const std::string& key, const std::string& path) {
  const json& v = field(j, key, path);
  if (!v.is_number()) throw ConfigError(path + "." + key + ": expected a number");
  return v.get<double>();
}

std::vector<double> vector_field(const json& j, const std::string& key,
                                 const std::string& path) {
  const json& v = field(j, key, path);
  if (!v.is_array()) throw ConfigError(path + "." + key + ": expected an array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!v[i].is_number()) {
      throw ConfigError(path + "." + key + "[" + std::to_string(i) + "]: expected a number");
    }
    out.push_back(v[i].get<double>());
  }
  return out;
}

}  // namespace

IntensityModel model_from_json(const json& j, const std::string& path) {
  const json& fam = field(j, "family", path);
  if (!fam.is_string()) throw ConfigError(path + ".family: expected a string");
  Family family;
  try {
    family = parse_family(fam.get<std::string>());
  } catch (const DomainError& e) {
    throw ConfigError(path + ".family: " + e.what());
  }
  IntensityModel model;
  switch (family) {
    case Family::IP:
      model = IpParams{vector_field(j, "weights", path), vector_field(j, "centers", path),
                       vector_field(j, "sds", path)};
      break;
    case Family::SE:
      model = SeParams{number_field(j, "mu", path), number_field(j, "beta", path),
                       number_field(j, "omega", path)};
      break;
    case Family::SC:
      model = ScParams{number_field(j, "eta", path), number_field(j, "gamma", path)};
      break;
    case Family::NN: {
      NnIntensityParams p;
      const double k = number_field(j, "hidden_dim", path);
      if (!(k >= 1.0) || k != std::floor(k)) {
        throw ConfigError(path + ".hidden_dim: expected a positive integer");
      }
      p.hidden_dim = static_cast<std::size_t>(k);
      p.input_weights = vector_field(j, "input_weights", path);
      p.recurrent = vector_field(j, "recurrent", path);
      p.hidden_bias = vector_field(j, "hidden_bias", path);
      p.readout = vector_field(j, "readout", path);
      p.elapsed_weight = number_field(j, "elapsed_weight", path);
      p.readout_bias = number_field(j, "readout_bias", path);
      p.start_input = number_field(j, "start_input", path);
      model = std::move(p);
      break;
    }
  }
  try {
    validate_model(model);
  } catch (const DomainError& e) {
    throw ConfigError(path + ": " + e.what());
  }
  return model;
}

// ---------------------------------------------------------------------------

namespace presets {

IpParams standard_ip() { return {{3.0, 7.0, 11.0}, {1.0, 1.0, 1.0}, {2.0, 3.0, 2.0}}; }

IpParams spread_ip() { return {{3.0, 7.0, 11.0}, {3.0, 7.0, 11.0}, {2.0, 3.0, 2.0}}; }

SeParams standard_se() { return {1.0, 0.8, 1.0}; }

ScParams standard_sc() { return {1.0, 0.2}; }

NnIntensityParams random_nn(std::size_t hidden_dim, std::uint64_t seed) {
  if (hidden_dim == 0) throw DomainError("random_nn: hidden_dim must be positive");
  RngStream rng(seed, mix_ids({0x4e4eULL, hidden_dim}));
  const std::size_t k = hidden_dim;
  const double rec_scale = 1.0 / std::sqrt(static_cast<double>(k));
  NnIntensityParams p;
  p.hidden_dim = k;
  p.input_weights.resize(k);
  p.recurrent.resize(k * k);
  p.hidden_bias.resize(k);
  p.readout.resize(k);
  for (auto& w : p.input_weights) w = rng.uniform(-0.4, 0.4);
  for (auto& w : p.recurrent) w = rng.uniform(-rec_scale, rec_scale);
  for (auto& w : p.hidden_bias) w = rng.uniform(-1.0, 1.0);
  for (auto& w : p.readout) w = rng.uniform(-1.0, 1.0);
  p.elapsed_weight = rng.uniform(-0.5, 0.5);
  p.readout_bias = rng.uniform(0.5, 1.5);
  p.start_input = rng.uniform();
  return p;
}

NnIntensityParams standard_nn() { return random_nn(8, 20180101); }

IntensityModel by_name(const std::string& name) {
  if (name == "IP") return standard_ip();
  if (name == "IP-spread") return spread_ip();
  if (name == "SE") return standard_se();
  if (name == "SC") return standard_sc();
  if (name == "NN") return standard_nn();
  throw ConfigError("unknown preset '" + name + "' (expected IP, IP-spread, SE, SC or NN)");
}

}  // namespace presets

}  // namespace ppwgan
