#include "leo/selector.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "leo/errors.hpp"
#include "leo/layers.hpp"

namespace leo::model {

using num::Graph;
using num::Tensor;
using num::Var;

namespace {
std::string layer_name(std::size_t i) { return "selector.dense" + std::to_string(i); }
}  // namespace

void init_selector(num::ParameterStore& store, const SelectorConfig& cfg, Rng& rng) {
  std::size_t in = cfg.d;
  for (std::size_t i = 0; i < cfg.hidden.size(); ++i) {
    add_dense(store, layer_name(i), num::ParamGroup::selector, in, cfg.hidden[i], rng);
    in = cfg.hidden[i];
  }
  add_dense(store, "selector.head", num::ParamGroup::selector, in, 1, rng);
}

Var selector_probabilities(Graph& g, num::ParameterStore& store, const SelectorConfig& cfg, Var rows, bool train,
                           Rng& rng) {
  Var h = rows;
  for (std::size_t i = 0; i < cfg.hidden.size(); ++i) {
    h = g.relu(dense(g, store, layer_name(i), h));
    h = g.dropout(h, cfg.retain, rng, train);
  }
  return g.sigmoid(dense(g, store, "selector.head", h));
}

std::vector<double> selector_forward(const Tensor& X, num::ParameterStore& store, const SelectorConfig& cfg) {
  if (X.rank() != 2 || X.cols() != cfg.d) {
    throw UsageError("selector_forward: expected an L x " + std::to_string(cfg.d) + " matrix, got " +
                     num::shape_string(X.shape()));
  }
  Graph g(false);
  Rng unused(0);
  Var p = selector_probabilities(g, store, cfg, g.constant(X), false, unused);
  return g.value(p).data();
}

double gumbel_from_uniform(double u) {
  u = std::clamp(u, kUniformClamp, 1.0 - kUniformClamp);
  return -std::log(-std::log(u));
}

std::vector<double> sample_gumbel(std::size_t n, Rng& rng) {
  std::vector<double> out(n);
  for (auto& v : out) v = gumbel_from_uniform(rng.uniform());
  return out;
}

Tensor gumbel_difference(std::size_t n, Rng& rng) {
  Tensor t({n, 1});
  for (std::size_t i = 0; i < n; ++i) {
    const double a = gumbel_from_uniform(rng.uniform());
    const double b = gumbel_from_uniform(rng.uniform());
    t[i] = a - b;
  }
  return t;
}

double relax_bernoulli(double p, double a, double b, double nu) {
  if (!(nu > 0.0)) throw UsageError("relax_bernoulli: temperature must be positive");
  p = std::clamp(p, 1e-12, 1.0 - 1e-12);
  const double t = (std::log(p) - std::log1p(-p) + a - b) / nu;
  if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}

Tensor apply_mask(const Tensor& X, std::span<const double> z) {
  if (z.size() != X.rows()) {
    throw UsageError("apply_mask: " + std::to_string(z.size()) + " gates for " + std::to_string(X.rows()) + " rows");
  }
  Tensor out = X;
  for (std::size_t i = 0; i < X.rows(); ++i) {
    for (auto& v : out.row(i)) v *= z[i];
  }
  return out;
}

std::vector<double> deterministic_mask(std::span<const double> p, GateMode mode) {
  std::vector<double> z(p.begin(), p.end());
  if (mode == GateMode::hard) {
    for (auto& v : z) v = v > 0.5 ? 1.0 : 0.0;
  }
  return z;
}

}  // namespace leo::model
