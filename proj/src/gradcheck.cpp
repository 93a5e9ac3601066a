#include "leo/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "leo/errors.hpp"
#include "leo/rng.hpp"

namespace leo::num {
namespace {

double eval_loss(const LossBuilder& build) {
  Graph g(false);
  Var loss = build(g);
  return g.value(loss).item();
}

}  // namespace

FdReport finite_difference_check(const LossBuilder& build, ParameterStore& params, double h, double tol,
                                 const FdOptions& opts) {
  if (!(h >= 1e-6 && h <= 1e-4)) throw UsageError("finite_difference_check: h must lie in [1e-6, 1e-4]");

  {
    Graph g(true);
    Var loss = build(g);
    g.backward(loss);
  }
  std::vector<Tensor> analytic;
  for (const auto& p : params) analytic.push_back(p.grad);

  FdReport report;
  Rng rng(opts.seed);
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    Parameter& p = params.at(pi);
    FdParamReport pr;
    pr.name = p.name;

    std::vector<std::size_t> coords(p.value.size());
    std::iota(coords.begin(), coords.end(), std::size_t{0});
    if (coords.size() > opts.full_check_limit) {
      rng.shuffle(coords);
      coords.resize(std::max<std::size_t>(opts.sampled_coords, 32));
      std::sort(coords.begin(), coords.end());
    }

    for (std::size_t k : coords) {
      const double orig = p.value[k];
      p.value[k] = orig + h;
      const double up = eval_loss(build);
      p.value[k] = orig - h;
      const double down = eval_loss(build);
      p.value[k] = orig;

      const double fd = (up - down) / (2.0 * h);
      const double an = analytic[pi][k];
      const double denom = std::max({std::abs(fd), std::abs(an), opts.rel_floor});
      const double rel = std::abs(fd - an) / denom;
      pr.max_rel_error = std::max(pr.max_rel_error, rel);
      pr.max_abs_fd = std::max(pr.max_abs_fd, std::abs(fd));
      pr.max_abs_analytic = std::max(pr.max_abs_analytic, std::abs(an));
      if (rel > tol) ++pr.flagged;
      ++pr.coords_checked;
    }
    report.max_rel_error = std::max(report.max_rel_error, pr.max_rel_error);
    report.flagged += pr.flagged;
    report.params.push_back(std::move(pr));
  }
  return report;
}

}  // namespace leo::num
