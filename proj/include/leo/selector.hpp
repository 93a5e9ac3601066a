#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "leo/autograd.hpp"
#include "leo/rng.hpp"

namespace leo::model {

struct SelectorConfig {
  std::size_t d = 150;
  std::vector<std::size_t> hidden{100, 100, 100};
  double retain = 0.8;
};

/// Hidden layers "selector.dense<i>" and the scalar head "selector.head".
void init_selector(num::ParameterStore& store, const SelectorConfig& cfg, Rng& rng);

/// Row-wise selection probabilities: rows (n x d) -> p (n x 1).
num::Var selector_probabilities(num::Graph& g, num::ParameterStore& store, const SelectorConfig& cfg, num::Var rows,
                                bool train, Rng& rng);

/// Eval-mode p for every row of an L x d statement matrix.
std::vector<double> selector_forward(const num::Tensor& X, num::ParameterStore& store, const SelectorConfig& cfg);

inline constexpr double kUniformClamp = 1e-12;

/// -log(-log u), u clamped to [1e-12, 1 - 1e-12].
double gumbel_from_uniform(double u);
std::vector<double> sample_gumbel(std::size_t n, Rng& rng);
/// a_i - b_i for n independent Gumbel pairs (a drawn before b).
num::Tensor gumbel_difference(std::size_t n, Rng& rng);

/// sigmoid((log(p / (1 - p)) + a - b) / nu)
double relax_bernoulli(double p, double a, double b, double nu);

/// Row i of the result is z[i] * X[i].
num::Tensor apply_mask(const num::Tensor& X, std::span<const double> z);

enum class GateMode { expected, hard };

/// expected: z = p; hard: z = 1[p > 0.5].
std::vector<double> deterministic_mask(std::span<const double> p, GateMode mode);

}  // namespace leo::model
