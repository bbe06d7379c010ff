#pragma once

// Enumerable toy simulator for exactness checks of the Metropolis kernels.
//
// theta is continuous but f only depends on which unit cell it falls in
// (cells centred on the integers -half_width..half_width); the seed enters
// through seed mod K. Under a normal prior the marginal target over cells
// and the conditional target over seed residues can be normalised by
// enumeration.

#include <cmath>
#include <vector>

#include "habc/simulator.hpp"

namespace habc {

class ToySimulator final : public Simulator {
 public:
  /// table[c][k]: statistic for cell c (left to right) and seed residue k.
  ToySimulator(std::vector<std::vector<double>> table, double prior_sd = 1.0) : table_(std::move(table)) {
    if (table_.empty() || table_.size() % 2 == 0) {
      throw precondition_error("ToySimulator needs an odd, non-zero number of cells");
    }
    residues_ = table_.front().size();
    for (const auto& row : table_) check_same_dim(row.size(), residues_, "ToySimulator table row");
    spec_.param_dim = 1;
    spec_.stat_dim = 1;
    spec_.prior.factors = {UnivariatePrior::normal(0.0, prior_sd)};
    spec_.name = "toy";
  }

  const SimulatorSpec& spec() const override { return spec_; }

  bool accepts(const ParameterVector& theta) const override {
    return theta.size() == 1 && std::abs(theta[0]) < half_width() + 0.5;
  }

  SummaryVector simulate(const ParameterVector& theta, std::uint64_t seed) const override {
    if (!accepts(theta)) return SummaryVector::make_degenerate(1);
    return SummaryVector(Vector{table_[cell_of(theta[0])][residue_of(seed)]});
  }

  std::size_t cells() const { return table_.size(); }
  std::size_t residues() const { return residues_; }
  int half_width() const { return static_cast<int>(table_.size() / 2); }

  std::size_t cell_of(double theta) const {
    return static_cast<std::size_t>(std::lround(theta) + half_width());
  }
  std::size_t residue_of(std::uint64_t seed) const { return static_cast<std::size_t>(seed % residues_); }
  double value(std::size_t cell, std::size_t residue) const { return table_[cell][residue]; }

  double cell_lower(std::size_t cell) const { return static_cast<double>(cell) - half_width() - 0.5; }
  double cell_upper(std::size_t cell) const { return cell_lower(cell) + 1.0; }

 private:
  std::vector<std::vector<double>> table_;
  std::size_t residues_ = 0;
  SimulatorSpec spec_;
};

}  // namespace habc
