#include "ppwgan/core.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>

#include "json.hpp"

namespace ppwgan {

using nlohmann::json;

Window::Window(double horizon) : horizon_(horizon) {
  if (!(horizon > 0.0) || !std::isfinite(horizon)) {
    throw DomainError("window horizon must be positive and finite, got " +
                      std::to_string(horizon));
  }
}

EventSequence SequenceAccess::trusted(std::vector<double> times, double horizon) {
#ifndef NDEBUG
  for (std::size_t i = 0; i < times.size(); ++i) {
    assert(times[i] >= 0.0 && times[i] < horizon);
    assert(i == 0 || times[i - 1] < times[i]);
  }
#endif
  EventSequence seq;
  seq.times_ = std::move(times);
  seq.horizon_ = horizon;
  return seq;
}

EventSequence validate_sequence(std::vector<double> times, const Window& window,
                                ValidationNotes* notes) {
  const double horizon = window.horizon();
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (!window.contains(times[i])) {
      std::ostringstream msg;
      msg << "event time at index " << i << " (" << times[i]
          << ") lies outside [0, " << horizon << ")";
      throw DomainError(msg.str());
    }
  }
  if (!std::is_sorted(times.begin(), times.end())) {
    std::sort(times.begin(), times.end());
  }

  std::size_t perturbed = 0;
  constexpr double inf = std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i < times.size(); ++i) {
    if (times[i] <= times[i - 1]) {
      times[i] = std::nextafter(times[i - 1], inf);
      ++perturbed;
    }
  }
  // Forward nudging can walk off the top of the window when ties sit right
  // below T; pull such runs back down.
  if (!times.empty() && times.back() >= horizon) {
    times.back() = std::nextafter(horizon, 0.0);
    for (std::size_t i = times.size() - 1; i-- > 0;) {
      if (times[i] < times[i + 1]) break;
      times[i] = std::nextafter(times[i + 1], -inf);
    }
    if (times.front() < 0.0) {
      throw DomainError("cannot separate tied events inside the window");
    }
  }
  if (notes != nullptr) notes->ties_perturbed += perturbed;
  return SequenceAccess::trusted(std::move(times), horizon);
}

// ---------------------------------------------------------------------------

Dataset::Dataset(Window w, std::vector<EventSequence> seqs, std::string lbl)
    : window(w), sequences(std::move(seqs)), label(std::move(lbl)) {
  for (std::size_t i = 0; i < sequences.size(); ++i) {
    const auto& s = sequences[i];
    if (!s.compatible_with(window) ||
        (!s.empty() && !window.contains(s.times().back()))) {
      throw DomainError("sequence " + std::to_string(i) +
                        " does not belong to a window with T = " +
                        std::to_string(window.horizon()));
    }
  }
}

std::size_t Dataset::total_events() const noexcept {
  std::size_t total = 0;
  for (const auto& s : sequences) total += s.size();
  return total;
}

double Dataset::mean_event_rate() const noexcept {
  if (sequences.empty()) return 0.0;
  return static_cast<double>(total_events()) /
         (static_cast<double>(sequences.size()) * window.horizon());
}

bool Dataset::is_mixture() const noexcept { return label.rfind("mixture:", 0) == 0; }

std::string mixture_label(std::span<const std::string> components) {
  std::string out = "mixture:";
  for (std::size_t i = 0; i < components.size(); ++i) {
    if (i) out += '+';
    out += components[i];
  }
  return out;
}

// ---------------------------------------------------------------------------
// JSONL

void write_dataset(const Dataset& data, std::ostream& out) {
  json header = {{"T", data.window.horizon()}, {"label", data.label}};
  out << header.dump() << '\n';
  for (const auto& seq : data.sequences) {
    json line = json::array();
    for (double t : seq.times()) line.push_back(t);
    out << line.dump() << '\n';
  }
}

void write_dataset(const Dataset& data, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  write_dataset(data, out);
  out.flush();
  if (!out) throw IoError("failed writing '" + path + "'");
}

Dataset read_dataset(std::istream& in, std::optional<Window> expected,
                     ValidationNotes* notes) {
  std::string line;
  std::size_t lineno = 0;
  std::optional<Window> window;
  std::string label;

  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") != std::string::npos) break;
  }
  if (line.find_first_not_of(" \t\r") == std::string::npos) {
    throw ParseError("missing header object", lineno);
  }
  try {
    json header = json::parse(line);
    if (!header.is_object() || !header.contains("T") || !header["T"].is_number()) {
      throw ParseError("header must be an object with numeric field \"T\"", lineno);
    }
    window.emplace(header["T"].get<double>());
    if (header.contains("label")) {
      if (!header["label"].is_string()) {
        throw ParseError("header field \"label\" must be a string", lineno);
      }
      label = header["label"].get<std::string>();
    }
  } catch (const json::exception& e) {
    throw ParseError(std::string("invalid header: ") + e.what(), lineno);
  }
  if (expected && !(*expected == *window)) {
    throw DomainError("dataset window T = " + std::to_string(window->horizon()) +
                      " does not match expected T = " +
                      std::to_string(expected->horizon()));
  }

  std::vector<EventSequence> seqs;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::vector<double> times;
    try {
      json arr = json::parse(line);
      if (!arr.is_array()) throw ParseError("expected a JSON array", lineno);
      times.reserve(arr.size());
      for (const auto& v : arr) {
        if (!v.is_number()) throw ParseError("array entries must be numbers", lineno);
        times.push_back(v.get<double>());
      }
    } catch (const json::exception& e) {
      throw ParseError(e.what(), lineno);
    }
    try {
      seqs.push_back(validate_sequence(std::move(times), *window, notes));
    } catch (const DomainError& e) {
      throw DomainError("line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return Dataset(*window, std::move(seqs), std::move(label));
}

Dataset read_dataset(const std::string& path, std::optional<Window> expected,
                     ValidationNotes* notes) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  return read_dataset(in, expected, notes);
}

// ---------------------------------------------------------------------------
// RNG

namespace {

constexpr std::uint64_t splitmix64(std::uint64_t& state) noexcept {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::mt19937_64 seeded_engine(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t state = seed ^ 0x6a09e667f3bcc909ULL;
  std::uint64_t words64[4];
  words64[0] = splitmix64(state);
  state ^= stream * 0xd1b54a32d192ed03ULL;
  words64[1] = splitmix64(state);
  words64[2] = splitmix64(state);
  words64[3] = splitmix64(state);
  std::uint32_t words[8];
  for (int i = 0; i < 4; ++i) {
    words[2 * i] = static_cast<std::uint32_t>(words64[i]);
    words[2 * i + 1] = static_cast<std::uint32_t>(words64[i] >> 32);
  }
  std::seed_seq seq(std::begin(words), std::end(words));
  return std::mt19937_64(seq);
}

}  // namespace

std::uint64_t mix_ids(std::initializer_list<std::uint64_t> ids) noexcept {
  std::uint64_t state = 0x243f6a8885a308d3ULL;
  std::uint64_t out = 0;
  for (std::uint64_t id : ids) {
    state ^= id;
    out = splitmix64(state);
    state = out;
  }
  return out;
}

RngStream::RngStream(std::uint64_t seed, std::uint64_t stream_id)
    : seed_(seed), stream_id_(stream_id), engine_(seeded_engine(seed, stream_id)) {}

double RngStream::uniform() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double RngStream::uniform_open() {
  return (static_cast<double>(engine_() >> 12) + 0.5) * 0x1.0p-52;
}

double RngStream::exponential(double rate) { return -std::log(uniform_open()) / rate; }

double RngStream::normal() {
  const double u1 = uniform_open();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::size_t RngStream::below(std::size_t n) {
  if (n == 0) throw DomainError("RngStream::below requires n > 0");
  // Reject the incomplete top block so every residue is equally likely.
  const std::uint64_t bound = static_cast<std::uint64_t>(n);
  const std::uint64_t limit = (~std::uint64_t{0}) - ((~std::uint64_t{0}) % bound);
  std::uint64_t x;
  do {
    x = engine_();
  } while (x >= limit);
  return static_cast<std::size_t>(x % bound);
}

}  // namespace ppwgan
