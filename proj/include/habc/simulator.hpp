#pragma once

#include <cstdint>
#include <string>

#include "habc/prior.hpp"
#include "habc/types.hpp"

namespace habc {

struct SimulatorSpec {
  std::size_t param_dim = 0;
  std::size_t stat_dim = 0;
  PriorSpec prior;
  std::string name;
};

/// A simulator viewed as a deterministic function x = f(theta, seed).
///
/// Implementations must be pure: identical (theta, seed) give bit-identical
/// statistics, and concurrent calls are safe.
class Simulator {
 public:
  virtual ~Simulator() = default;

  virtual const SimulatorSpec& spec() const = 0;

  /// False when theta is outside the simulator's domain. Callers treat such
  /// points as zero likelihood instead of calling simulate().
  virtual bool accepts(const ParameterVector& theta) const {
    (void)theta;
    return true;
  }

  virtual SummaryVector simulate(const ParameterVector& theta, std::uint64_t seed) const = 0;
};

}  // namespace habc
