#pragma once

// Shared vocabulary types, the error type, and the deterministic parallel
// evaluation helpers used by every other header.

#include <Eigen/Dense>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <limits>
#include <mutex>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

namespace ultracarl {

/// Upper bound on m + n. Keeps every small vector on the stack.
inline constexpr int kMaxAxes = 8;

using Vector = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, kMaxAxes, 1>;
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxAxes, kMaxAxes>;

enum class ErrorCode {
  dimension_mismatch,
  degenerate_frame,
  not_on_boundary,
  unsupported_shape,
  invalid_domain,
  not_timelike,
  empty_region,
  invalid_params,
  non_finite,
  node_cap_exceeded,
  boundary_nonvanishing,
  collar_violation,
  calibration_failure,
  config,
};

inline const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::dimension_mismatch: return "dimension_mismatch";
    case ErrorCode::degenerate_frame: return "degenerate_frame";
    case ErrorCode::not_on_boundary: return "not_on_boundary";
    case ErrorCode::unsupported_shape: return "unsupported_shape";
    case ErrorCode::invalid_domain: return "invalid_domain";
    case ErrorCode::not_timelike: return "not_timelike";
    case ErrorCode::empty_region: return "empty_region";
    case ErrorCode::invalid_params: return "invalid_params";
    case ErrorCode::non_finite: return "non_finite";
    case ErrorCode::node_cap_exceeded: return "node_cap_exceeded";
    case ErrorCode::boundary_nonvanishing: return "boundary_nonvanishing";
    case ErrorCode::collar_violation: return "collar_violation";
    case ErrorCode::calibration_failure: return "calibration_failure";
    case ErrorCode::config: return "config";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Number of time (m) and space (n) dimensions.
class Signature {
 public:
  Signature(int m, int n) : m_(m), n_(n) {
    if (m < 1 || n < 1) {
      throw Error(ErrorCode::dimension_mismatch,
                  "signature requires m >= 1 and n >= 1, got m=" + std::to_string(m) +
                      " n=" + std::to_string(n));
    }
    if (m + n > kMaxAxes) {
      throw Error(ErrorCode::dimension_mismatch,
                  "m + n must not exceed " + std::to_string(kMaxAxes));
    }
  }

  int m() const noexcept { return m_; }
  int n() const noexcept { return n_; }
  int dim() const noexcept { return m_ + n_; }

  friend bool operator==(const Signature&, const Signature&) = default;

 private:
  int m_;
  int n_;
};

/// A point (t, x) of R^m x R^n in Cartesian coordinates.
struct SpaceTimePoint {
  Vector t;
  Vector x;

  /// Concatenated (t, x) coordinates.
  Vector stacked() const {
    Vector out(t.size() + x.size());
    out << t, x;
    return out;
  }
};

/// The point p = (t(p), x(p)) about which null coordinates are centred.
using ReferencePoint = SpaceTimePoint;

inline SpaceTimePoint make_point(std::initializer_list<double> t, std::initializer_list<double> x) {
  SpaceTimePoint q;
  q.t.resize(static_cast<Eigen::Index>(t.size()));
  q.x.resize(static_cast<Eigen::Index>(x.size()));
  Eigen::Index i = 0;
  for (double v : t) q.t[i++] = v;
  i = 0;
  for (double v : x) q.x[i++] = v;
  return q;
}

inline Vector make_vector(std::span<const double> values) {
  Vector v(static_cast<Eigen::Index>(values.size()));
  for (std::size_t i = 0; i < values.size(); ++i) v[static_cast<Eigen::Index>(i)] = values[i];
  return v;
}

inline Vector zeros(int size) { return Vector::Zero(size); }

inline void check_dims(const SpaceTimePoint& q, const Signature& sig, const char* name) {
  if (q.t.size() != sig.m()) {
    throw Error(ErrorCode::dimension_mismatch,
                std::string(name) + ".t has length " + std::to_string(q.t.size()) +
                    ", expected m=" + std::to_string(sig.m()));
  }
  if (q.x.size() != sig.n()) {
    throw Error(ErrorCode::dimension_mismatch,
                std::string(name) + ".x has length " + std::to_string(q.x.size()) +
                    ", expected n=" + std::to_string(sig.n()));
  }
}

inline bool all_finite(const SpaceTimePoint& q) { return q.t.allFinite() && q.x.allFinite(); }

inline std::string describe(const SpaceTimePoint& q) {
  std::string s = "(t=[";
  for (Eigen::Index i = 0; i < q.t.size(); ++i) s += (i ? "," : "") + std::to_string(q.t[i]);
  s += "], x=[";
  for (Eigen::Index i = 0; i < q.x.size(); ++i) s += (i ? "," : "") + std::to_string(q.x[i]);
  return s + "])";
}

// ---------------------------------------------------------------------------
// Deterministic parallel evaluation.

struct Parallelism {
  unsigned workers = 1;
};

/// Calls fn(i) for i in [0, count). Work is split into contiguous chunks;
/// any exception is rethrown from the lowest-index chunk that failed, so the
/// observable behaviour does not depend on the worker count.
template <class Fn>
void parallel_for(std::size_t count, const Parallelism& par, Fn&& fn) {
  const std::size_t workers = std::max<std::size_t>(1, std::min<std::size_t>(par.workers, count));
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::thread> threads;
  threads.reserve(workers);
  const std::size_t chunk = (count + workers - 1) / workers;
  for (std::size_t w = 0; w < workers; ++w) {
    threads.emplace_back([&, w] {
      const std::size_t lo = w * chunk;
      const std::size_t hi = std::min(count, lo + chunk);
      try {
        for (std::size_t i = lo; i < hi; ++i) fn(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : threads) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

/// Pairwise (tree) summation in index order. The result is a pure function of
/// the input sequence.
inline double pairwise_sum(std::span<const double> values) {
  constexpr std::size_t kLeaf = 16;
  if (values.size() <= kLeaf) {
    double s = 0.0;
    for (double v : values) s += v;
    return s;
  }
  const std::size_t half = values.size() / 2;
  return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

// ---------------------------------------------------------------------------
// Portable random numbers. The standard distributions are implementation
// defined, so seeded suites would differ between standard libraries.

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  /// Uniform double in [0, 1).
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal via Box-Muller (cosine branch only).
  double normal() {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }

  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) { return next() % n; }

  /// splitmix64 step.
  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

 private:
  std::uint64_t state_;
};

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

/// Shortest round-trip decimal form of v.
inline std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

}  // namespace ultracarl
