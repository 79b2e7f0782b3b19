#pragma once

// Domain types shared by every module: observation windows, event sequences,
// datasets, errors and the reproducible random stream.

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <iosfwd>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace ppwgan {

// ---------------------------------------------------------------------------
// Errors

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input outside the mathematical domain of an operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Non-finite values, failed bounds, divergence.
class NumericalError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

/// Invalid configuration; the message carries the offending field path.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Malformed input text. `line()` is 1-based; 0 when unknown.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

// ---------------------------------------------------------------------------
// Window

/// Observation interval [0, T). The anchor used to charge unmatched events
/// in the sequence distance is pinned to T.
class Window {
 public:
  explicit Window(double horizon);

  double horizon() const noexcept { return horizon_; }
  double anchor() const noexcept { return horizon_; }

  bool contains(double t) const noexcept { return t >= 0.0 && t < horizon_; }

  friend bool operator==(const Window&, const Window&) = default;

 private:
  double horizon_;
};

// ---------------------------------------------------------------------------
// EventSequence

/// Strictly increasing event times inside a window. Instances are only
/// produced by validate_sequence (or trusted internal paths that establish
/// the same invariant), so holders may rely on ordering.
class EventSequence {
 public:
  EventSequence() = default;

  std::span<const double> times() const noexcept { return times_; }
  std::size_t size() const noexcept { return times_.size(); }
  bool empty() const noexcept { return times_.empty(); }
  double operator[](std::size_t i) const { return times_[i]; }
  /// Horizon of the window this sequence was validated against (0 for a
  /// default-constructed sequence, which is compatible with any window).
  double horizon() const noexcept { return horizon_; }

  bool compatible_with(const Window& w) const noexcept {
    return horizon_ == 0.0 || horizon_ == w.horizon();
  }

  friend bool operator==(const EventSequence& a, const EventSequence& b) {
    return a.times_ == b.times_;
  }

 private:
  friend struct SequenceAccess;
  std::vector<double> times_;
  double horizon_ = 0.0;
};

/// Builds sequences whose invariant the caller already established
/// (simulators emit times in increasing order). Checked in debug builds.
struct SequenceAccess {
  static EventSequence trusted(std::vector<double> times, double horizon);
};

struct ValidationNotes {
  std::size_t ties_perturbed = 0;
};

/// Sorts ascending, nudges duplicates apart by one ulp, and checks the window.
/// Throws DomainError naming the offending input index when a time lies
/// outside [0, T).
EventSequence validate_sequence(std::vector<double> times, const Window& window,
                                ValidationNotes* notes = nullptr);

// ---------------------------------------------------------------------------
// Dataset

struct Dataset {
  Dataset(Window w, std::vector<EventSequence> seqs, std::string lbl = {});

  Window window;
  std::vector<EventSequence> sequences;
  std::string label;

  std::size_t total_events() const noexcept;
  /// Total events / (sequence count * T); 0 for a dataset without sequences.
  double mean_event_rate() const noexcept;

  /// Labels of the form "mixture:A+B+C" mark mixture datasets.
  bool is_mixture() const noexcept;
};

std::string mixture_label(std::span<const std::string> components);

// JSON Lines: a header object {"T": <real>, "label": <string>} followed by
// one JSON array of increasing reals per sequence.
void write_dataset(const Dataset& data, std::ostream& out);
void write_dataset(const Dataset& data, const std::string& path);
Dataset read_dataset(std::istream& in, std::optional<Window> expected = {},
                     ValidationNotes* notes = nullptr);
Dataset read_dataset(const std::string& path, std::optional<Window> expected = {},
                     ValidationNotes* notes = nullptr);

// ---------------------------------------------------------------------------
// Random streams

/// Combines identifiers into one 64-bit stream id (splitmix64 chaining).
std::uint64_t mix_ids(std::initializer_list<std::uint64_t> ids) noexcept;

/// Reproducible random stream keyed by (seed, stream_id). Draws are derived
/// from raw 64-bit engine output only, so they do not depend on the standard
/// library's distribution implementations.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream_id);

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t stream_id() const noexcept { return stream_id_; }

  std::uint64_t next_u64() { return engine_(); }
  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  /// Uniform on (0, 1).
  double uniform_open();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double exponential(double rate);
  double normal();
  /// Uniform integer in [0, n).
  std::size_t below(std::size_t n);

 private:
  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::mt19937_64 engine_;
};

}  // namespace ppwgan
