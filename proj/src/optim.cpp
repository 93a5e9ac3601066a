#include "leo/optim.hpp"

#include <algorithm>
#include <cmath>

#include "leo/errors.hpp"

namespace leo::num {
namespace {

bool selected(ParamGroup g, std::span<const ParamGroup> groups) {
  return std::find(groups.begin(), groups.end(), g) != groups.end();
}

}  // namespace

void adam_update(ParameterStore& params, AdamState& state, std::span<const ParamGroup> groups) {
  for (const auto& p : params) {
    if (selected(p.group, groups) && !p.grad_ready) {
      throw UsageError("adam_update: no gradient for parameter '" + p.name + "'");
    }
  }
  if (state.m_.size() != params.size()) {
    if (!state.m_.empty()) throw UsageError("adam_update: optimizer state belongs to a different store");
    for (const auto& p : params) {
      state.m_.emplace_back(p.value.shape());
      state.v_.emplace_back(p.value.shape());
    }
  }

  ++state.step_;
  const double t = static_cast<double>(state.step_);
  const double c1 = 1.0 - std::pow(state.beta1, t);
  const double c2 = 1.0 - std::pow(state.beta2, t);

  std::size_t idx = 0;
  for (auto& p : params) {
    const std::size_t i = idx++;
    if (!selected(p.group, groups)) continue;
    Tensor& m = state.m_[i];
    Tensor& v = state.v_[i];
    const std::size_t cols = p.value.cols();
    std::vector<bool> pinned(p.value.rows(), false);
    for (std::size_t r : p.pinned_rows) pinned.at(r) = true;
    for (std::size_t k = 0; k < p.value.size(); ++k) {
      if (pinned[k / cols]) continue;
      const double gk = p.grad[k];
      m[k] = state.beta1 * m[k] + (1.0 - state.beta1) * gk;
      v[k] = state.beta2 * v[k] + (1.0 - state.beta2) * gk * gk;
      const double mhat = m[k] / c1;
      const double vhat = v[k] / c2;
      p.value[k] -= state.lr * mhat / (std::sqrt(vhat) + state.eps);
    }
    p.grad_ready = false;
  }
}

double global_norm(std::span<const Tensor* const> grads) {
  double s = 0.0;
  for (const Tensor* t : grads)
    for (double v : t->data()) s += v * v;
  return std::sqrt(s);
}

double clip_gradients(std::span<Tensor* const> grads, double max_norm) {
  if (!(max_norm > 0.0)) throw UsageError("clip_gradients: max_norm must be positive");
  std::vector<const Tensor*> view(grads.begin(), grads.end());
  const double norm = global_norm(view);
  if (norm > max_norm) {
    const double s = max_norm / norm;
    for (Tensor* t : grads)
      for (double& v : t->data()) v *= s;
  }
  return norm;
}

double clip_gradients(ParameterStore& params, double max_norm, std::span<const ParamGroup> groups) {
  std::vector<Tensor*> grads;
  for (auto& p : params)
    if (selected(p.group, groups)) grads.push_back(&p.grad);
  return clip_gradients(grads, max_norm);
}

}  // namespace leo::num
