// Copyright 2026 The skillmpc Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef SKILLMPC_CORE_H_
#define SKILLMPC_CORE_H_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iostream>
#include <limits>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace skillmpc {

// -- errors -- //

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad shapes, out-of-range indices, non-finite inputs.
class InvalidInput : public Error {
 public:
  using Error::Error;
};

// A language-model reply with no recoverable expert score.
class ParseFailure : public Error {
 public:
  using Error::Error;
};

// Chat endpoint unreachable after all retries.
class BackendUnavailable : public Error {
 public:
  using Error::Error;
};

// Non-finite loss or gradient; the update that raised it was not applied.
class NumericalFailure : public Error {
 public:
  using Error::Error;
};

// Bad configuration file; message carries the JSON field path.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// -- logging -- //

enum class LogLevel { kDebug = 0, kInfo = 1, kWarning = 2, kError = 3, kOff = 4 };

inline LogLevel& GlobalLogLevel() {
  static LogLevel level = LogLevel::kWarning;
  return level;
}

inline void Log(LogLevel level, const std::string& message) {
  if (level < GlobalLogLevel()) return;
  static constexpr const char* kNames[] = {"debug", "info", "warning", "error"};
  std::cerr << "[skillmpc " << kNames[static_cast<int>(level)] << "] "
            << message << "\n";
}

// -- vectors -- //

using Vec = std::vector<double>;

inline bool AllFinite(std::span<const double> values) {
  return std::all_of(values.begin(), values.end(),
                     [](double v) { return std::isfinite(v); });
}

inline void CheckFinite(std::span<const double> values, const char* what) {
  if (values.empty()) {
    throw InvalidInput(std::string(what) + ": empty vector");
  }
  if (!AllFinite(values)) {
    throw InvalidInput(std::string(what) + ": non-finite entry");
  }
}

inline void CheckDim(std::span<const double> values, std::size_t expected,
                     const char* what) {
  if (values.size() != expected) {
    throw InvalidInput(std::string(what) + ": expected dimension " +
                       std::to_string(expected) + ", got " +
                       std::to_string(values.size()));
  }
}

inline double Dot(std::span<const double> a, std::span<const double> b) {
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) sum += a[i] * b[i];
  return sum;
}

inline double MaxAbs(std::span<const double> a) {
  double m = 0.0;
  for (double v : a) m = std::max(m, std::abs(v));
  return m;
}

// -- simplex -- //

// A point on the probability simplex. Entries lie in [0, 1] and sum to one
// within kTolerance; construction validates and never silently rescales.
class Simplex {
 public:
  static constexpr double kTolerance = 1e-9;

  explicit Simplex(Vec weights) : weights_(std::move(weights)) {
    CheckFinite(weights_, "Simplex");
    double sum = 0.0;
    for (double w : weights_) {
      if (w < 0.0 || w > 1.0) {
        throw InvalidInput("Simplex: entry outside [0, 1]");
      }
      sum += w;
    }
    if (std::abs(sum - 1.0) > kTolerance) {
      throw InvalidInput("Simplex: entries sum to " + std::to_string(sum));
    }
  }

  // Divides non-negative weights by their sum. Use after arithmetic that can
  // drift off the simplex.
  static Simplex Normalized(Vec weights) {
    CheckFinite(weights, "Simplex::Normalized");
    double sum = 0.0;
    for (double w : weights) {
      if (w < 0.0) throw InvalidInput("Simplex::Normalized: negative weight");
      sum += w;
    }
    if (!(sum > 0.0)) throw InvalidInput("Simplex::Normalized: zero mass");
    for (double& w : weights) w /= sum;
    return Simplex(std::move(weights));
  }

  static Simplex Uniform(std::size_t k) {
    if (k == 0) throw InvalidInput("Simplex::Uniform: k must be positive");
    return Simplex(Vec(k, 1.0 / static_cast<double>(k)));
  }

  std::size_t size() const { return weights_.size(); }
  double operator[](std::size_t i) const { return weights_[i]; }
  const Vec& weights() const { return weights_; }
  std::size_t Argmax() const {
    return static_cast<std::size_t>(
        std::max_element(weights_.begin(), weights_.end()) - weights_.begin());
  }

 private:
  Vec weights_;
};

// exp(s_i - max s) / sum_j exp(s_j - max s).
inline Simplex Softmax(std::span<const double> scores) {
  CheckFinite(scores, "Softmax");
  const double top = *std::max_element(scores.begin(), scores.end());
  Vec out(scores.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    out[i] = std::exp(scores[i] - top);
    sum += out[i];
  }
  for (double& v : out) v /= sum;
  return Simplex(std::move(out));
}

inline Vec ClampAction(std::span<const double> action, double lo, double hi) {
  if (!(lo < hi)) throw InvalidInput("ClampAction: lo must be below hi");
  Vec out(action.begin(), action.end());
  for (double& v : out) v = std::clamp(v, lo, hi);
  return out;
}

inline constexpr double kActionLow = -1.0;
inline constexpr double kActionHigh = 1.0;

inline Vec ClampToBox(std::span<const double> action) {
  return ClampAction(action, kActionLow, kActionHigh);
}

// -- random numbers -- //

inline constexpr std::uint64_t Mix64(std::uint64_t x) {
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// Purpose tags for deriving independent child streams.
enum class StreamTag : std::uint64_t {
  kEnvironment = 1,
  kPlanner = 2,
  kModelInit = 3,
  kReplay = 4,
  kEvaluation = 5,
  kEncoder = 6,
  kEpisode = 7,
  kCheck = 8,
};

// Counter-based generator: draw n is a pure function of (seed, stream_id, n),
// so streams handed to different workers never interact.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream_id)
      : seed_(seed),
        stream_id_(stream_id),
        key_(Mix64(seed ^ Mix64(stream_id + 0x632BE59BD9B4E019ULL))) {}

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_id_; }
  std::uint64_t counter() const { return counter_; }

  // Independent child stream for (purpose, index), e.g. one per planner
  // candidate or per environment instance.
  RngStream Derive(StreamTag tag, std::uint64_t index) const {
    return Derive(static_cast<std::uint64_t>(tag), index);
  }
  RngStream Derive(std::uint64_t tag, std::uint64_t index) const {
    const std::uint64_t child =
        Mix64(stream_id_ ^ Mix64(tag * 0x9E3779B97F4A7C15ULL + index + 1));
    return RngStream(seed_, child);
  }

  std::uint64_t NextU64() {
    ++counter_;
    return Mix64(key_ + counter_ * 0x9E3779B97F4A7C15ULL);
  }

  // Uniform on [0, 1).
  double Uniform() {
    return static_cast<double>(NextU64() >> 11) * 0x1.0p-53;
  }
  double Uniform(double lo, double hi) { return lo + (hi - lo) * Uniform(); }

  // Uniform integer on [0, n).
  std::uint64_t UniformInt(std::uint64_t n) {
    return static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>(NextU64()) * n) >> 64);
  }

  // Standard normal via Box-Muller; consumes two draws per call.
  double Normal() {
    const double u1 = 1.0 - Uniform();
    const double u2 = Uniform();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * std::numbers::pi * u2);
  }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace skillmpc

#endif  // SKILLMPC_CORE_H_
