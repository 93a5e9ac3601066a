#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "leo/errors.hpp"
#include "leo/gradcheck.hpp"
#include "leo/selector.hpp"

using namespace leo;
using namespace leo::model;
using num::Tensor;

namespace {
SelectorConfig small_config() {
  SelectorConfig c;
  c.d = 4;
  c.hidden = {5, 5, 5};
  return c;
}
}  // namespace

TEST_CASE("selector probabilities") {
  const auto cfg = small_config();
  num::ParameterStore s;
  Rng rng(1);
  init_selector(s, cfg, rng);
  Rng xr(2);
  Tensor X({6, 4});
  for (auto& v : X.data()) v = 3.0 * (xr.uniform() - 0.5);
  SUBCASE("zero weights give one half everywhere") {
    for (auto& p : s) p.value.fill(0.0);
    for (double p : selector_forward(X, s, cfg)) CHECK(p == 0.5);
  }
  SUBCASE("zero rows with zero biases give one half") {
    for (auto& p : s)
      if (p.name.back() == 'b') p.value.fill(0.0);
    for (double p : selector_forward(Tensor({3, 4}), s, cfg)) CHECK(p == 0.5);
  }
  SUBCASE("strictly inside (0, 1)") {
    for (double p : selector_forward(X, s, cfg)) {
      CHECK(p > 0.0);
      CHECK(p < 1.0);
    }
  }
  SUBCASE("wrong width") { CHECK_THROWS_AS(selector_forward(Tensor({2, 3}), s, cfg), UsageError); }
}

TEST_CASE("Gumbel noise") {
  CHECK(gumbel_from_uniform(1.0 / std::exp(1.0)) == doctest::Approx(0.0).epsilon(1e-15));
  // The clamp keeps both ends finite: u -> 0 gives about -3.32, u -> 1 about +27.6.
  const double lo = gumbel_from_uniform(0.0), hi = gumbel_from_uniform(1.0);
  CHECK(std::isfinite(lo));
  CHECK(std::isfinite(hi));
  CHECK(lo == doctest::Approx(-std::log(-std::log(1e-12))));
  CHECK(hi > 27.0);
  Rng rng(3);
  const auto g = sample_gumbel(1000000, rng);
  double mean = 0.0;
  for (double v : g) mean += v;
  mean /= static_cast<double>(g.size());
  CHECK(std::abs(mean - 0.5772156649) < 0.01);
}

TEST_CASE("relaxed Bernoulli") {
  for (double nu : {0.1, 0.5, 1.0, 3.0}) CHECK(relax_bernoulli(0.5, 0.7, 0.7, nu) == doctest::Approx(0.5).epsilon(1e-15));
  // Low-temperature limit: 1 iff log p + a > log(1 - p) + b.
  CHECK(relax_bernoulli(0.6, 0.1, 0.3, 1e-4) > 0.999);  // log 0.6 + 0.1 > log 0.4 + 0.3
  CHECK(relax_bernoulli(0.6, 0.1, 0.6, 1e-4) < 0.001);  // log 0.6 + 0.1 < log 0.4 + 0.6
  CHECK_THROWS_AS(relax_bernoulli(0.5, 0, 0, 0.0), UsageError);

  Rng rng(4);
  int above = 0;
  const int draws = 100000;
  for (int i = 0; i < draws; ++i) {
    const auto a = gumbel_from_uniform(rng.uniform());
    const auto b = gumbel_from_uniform(rng.uniform());
    above += relax_bernoulli(0.7, a, b, 0.5) > 0.5;
  }
  CHECK(std::abs(static_cast<double>(above) / draws - 0.7) < 0.01);
}

TEST_CASE("property: thresholded gates are Bernoulli(p)") {
  Rng rng(5);
  for (double p : {0.1, 0.5, 0.9})
    for (double nu : {0.5, 1.0}) {
      int above = 0;
      const int draws = 100000;
      for (int i = 0; i < draws; ++i) {
        const auto a = gumbel_from_uniform(rng.uniform());
        const auto b = gumbel_from_uniform(rng.uniform());
        above += relax_bernoulli(p, a, b, nu) > 0.5;
      }
      CHECK(std::abs(static_cast<double>(above) / draws - p) < 0.01);
    }
}

TEST_CASE("property: gates are monotone in p") {
  Rng rng(6);
  for (int t = 0; t < 500; ++t) {
    const double a = gumbel_from_uniform(rng.uniform()), b = gumbel_from_uniform(rng.uniform());
    const double nu = 0.2 + rng.uniform();
    const double p1 = 0.01 + 0.98 * rng.uniform(), p2 = 0.01 + 0.98 * rng.uniform();
    const double lo = std::min(p1, p2), hi = std::max(p1, p2);
    CHECK(relax_bernoulli(lo, a, b, nu) <= relax_bernoulli(hi, a, b, nu));
  }
}

TEST_CASE("gradient through the relaxation matches finite differences") {
  const auto cfg = small_config();
  num::ParameterStore s;
  Rng rng(7);
  init_selector(s, cfg, rng);
  // Zero biases put rows whose inputs vanish exactly on a ReLU kink.
  for (auto& p : s)
    if (p.name.back() == 'b')
      for (auto& v : p.value.data()) v = 0.2 * (rng.uniform() - 0.5);
  Tensor X({5, 4});
  for (auto& v : X.data()) v = rng.uniform() - 0.5;
  Rng nr(8);
  const Tensor noise = gumbel_difference(5, nr);
  auto build = [&](num::Graph& g) {
    Rng unused(0);
    num::Var x = g.constant(X);
    num::Var p = selector_probabilities(g, s, cfg, x, false, unused);
    num::Var z = g.relaxed_bernoulli(p, noise, 0.5);
    return g.sum(g.tanh(g.mul(x, z)));
  };
  const auto rep = num::finite_difference_check(build, s, 1e-5, 1e-4);
  CHECK(rep.passed());
  CHECK(rep.max_rel_error < 1e-4);
}

TEST_CASE("relaxed_bernoulli op agrees with the scalar formula") {
  num::Graph g(false);
  const Tensor p = Tensor::matrix({{0.2}, {0.5}, {0.9}});
  const Tensor noise = Tensor::matrix({{0.3}, {-1.0}, {2.0}});
  const Tensor& z = g.value(g.relaxed_bernoulli(g.constant(p), noise, 0.7));
  for (std::size_t i = 0; i < 3; ++i) CHECK(z[i] == doctest::Approx(relax_bernoulli(p[i], noise[i], 0.0, 0.7)).epsilon(1e-14));
}

TEST_CASE("apply_mask") {
  const Tensor X = Tensor::matrix({{1, 2}, {3, 4}, {5, 6}, {7, 8}, {9, 10}});
  CHECK(apply_mask(X, std::vector<double>(5, 1.0)) == X);
  CHECK(apply_mask(X, std::vector<double>(5, 0.0)) == Tensor({5, 2}));
  const Tensor m = apply_mask(X, std::vector<double>{0, 1, 1, 0, 1});
  CHECK(m == Tensor::matrix({{0, 0}, {3, 4}, {5, 6}, {0, 0}, {9, 10}}));
  CHECK_THROWS_AS(apply_mask(X, std::vector<double>(4, 1.0)), UsageError);

  SUBCASE("commutes with row permutation") {
    const std::vector<double> z{0.1, 0.9, 0.5, 0.3, 0.7};
    const std::vector<std::size_t> perm{3, 0, 4, 1, 2};
    Tensor Xp({5, 2});
    std::vector<double> zp(5);
    for (std::size_t i = 0; i < 5; ++i) {
      std::copy_n(X.row(perm[i]).begin(), 2, Xp.row(i).begin());
      zp[i] = z[perm[i]];
    }
    const Tensor a = apply_mask(X, z), b = apply_mask(Xp, zp);
    for (std::size_t i = 0; i < 5; ++i) CHECK(std::equal(b.row(i).begin(), b.row(i).end(), a.row(perm[i]).begin()));
  }
}

TEST_CASE("deterministic gates") {
  const std::vector<double> p{0.9, 0.1};
  CHECK(deterministic_mask(p, GateMode::expected) == p);
  CHECK(deterministic_mask(p, GateMode::hard) == std::vector<double>{1, 0});
  CHECK(deterministic_mask(std::vector<double>(3, 0.5), GateMode::hard) == std::vector<double>(3, 0.0));
}
