#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "leo/autograd.hpp"

namespace leo::num {

struct FdOptions {
  /// Tensors larger than this are checked on a random coordinate sample.
  std::size_t full_check_limit = 10000;
  std::size_t sampled_coords = 64;
  std::uint64_t seed = 0x5eed;
  /// Denominator floor of the relative error, so that two tiny gradients
  /// that agree in absolute terms are not flagged.
  double rel_floor = 1e-6;
};

struct FdParamReport {
  std::string name;
  std::size_t coords_checked = 0;
  double max_rel_error = 0.0;
  double max_abs_fd = 0.0;
  double max_abs_analytic = 0.0;
  std::size_t flagged = 0;
};

struct FdReport {
  std::vector<FdParamReport> params;
  double max_rel_error = 0.0;
  std::size_t flagged = 0;
  bool passed() const noexcept { return flagged == 0; }
};

/// Rebuilds the loss from scratch each time it is called; must be a pure
/// function of the parameter values (fix every RNG seed inside).
using LossBuilder = std::function<Var(Graph&)>;

/// Compares reverse-mode gradients against central differences
/// (L(w+h) - L(w-h)) / 2h coordinate by coordinate.
FdReport finite_difference_check(const LossBuilder& build, ParameterStore& params, double h, double tol,
                                 const FdOptions& opts = {});

}  // namespace leo::num
