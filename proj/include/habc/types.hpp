#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace habc {

/// Thrown when two objects that must agree on a dimension do not.
class shape_error : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Thrown when an operation is called with a violated precondition.
class precondition_error : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

using Vector = std::vector<double>;

// theta. Kept as a plain vector because the samplers do arithmetic on it in
// every step; validation lives in check_parameters().
using ParameterVector = Vector;

inline void check_parameters(const ParameterVector& theta) {
  if (theta.empty()) throw shape_error("parameter vector must have dim >= 1");
  for (double v : theta) {
    if (!std::isfinite(v)) throw std::domain_error("parameter vector has a non-finite entry");
  }
}

inline void check_same_dim(std::size_t a, std::size_t b, const char* what) {
  if (a != b) {
    throw shape_error(std::string(what) + ": dimension mismatch (" + std::to_string(a) +
                      " vs " + std::to_string(b) + ")");
  }
}

/// Explicit RNG seeds, one per simulation replicate.
struct SeedVector {
  std::vector<std::uint64_t> seeds;

  SeedVector() = default;
  explicit SeedVector(std::vector<std::uint64_t> s) : seeds(std::move(s)) {}

  std::size_t size() const { return seeds.size(); }
  std::uint64_t operator[](std::size_t i) const { return seeds[i]; }
  std::uint64_t& operator[](std::size_t i) { return seeds[i]; }
  bool operator==(const SeedVector&) const = default;
};

/// Simulator output statistics. A degenerate vector carries non-finite
/// statistics (e.g. population overflow) and maps to log-likelihood -inf.
struct SummaryVector {
  Vector stats;
  bool degenerate = false;

  SummaryVector() = default;
  explicit SummaryVector(Vector s) : stats(std::move(s)) {
    for (double v : stats) {
      if (!std::isfinite(v)) degenerate = true;
    }
  }

  std::size_t size() const { return stats.size(); }
  double operator[](std::size_t j) const { return stats[j]; }
  bool operator==(const SummaryVector&) const = default;

  static SummaryVector make_degenerate(std::size_t dim) {
    SummaryVector s;
    s.stats.assign(dim, std::nan(""));
    s.degenerate = true;
    return s;
  }
};

/// Per-statistic kernel widths; every entry strictly positive.
class EpsilonVector {
 public:
  EpsilonVector() = default;
  explicit EpsilonVector(Vector widths) : widths_(std::move(widths)) {
    if (widths_.empty()) throw shape_error("epsilon vector must have dim >= 1");
    for (double w : widths_) {
      if (!(w > 0.0) || !std::isfinite(w)) throw std::domain_error("epsilon entries must be > 0");
    }
  }

  std::size_t size() const { return widths_.size(); }
  double operator[](std::size_t j) const { return widths_[j]; }
  const Vector& widths() const { return widths_; }

 private:
  Vector widths_;
};

}  // namespace habc
