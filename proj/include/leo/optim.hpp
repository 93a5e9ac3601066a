#pragma once

#include <cstdint>
#include <initializer_list>
#include <span>
#include <vector>

#include "leo/autograd.hpp"

namespace leo::num {

// Bias-corrected Adam. Moments are keyed by parameter index in the store the
// state is used with, so one AdamState must stay paired with one store.
class AdamState {
 public:
  explicit AdamState(double lr = 1e-3, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
      : lr(lr), beta1(beta1), beta2(beta2), eps(eps) {}

  double lr;
  double beta1;
  double beta2;
  double eps;

  std::uint64_t step() const noexcept { return step_; }

 private:
  friend void adam_update(ParameterStore&, AdamState&, std::span<const ParamGroup>);
  std::uint64_t step_ = 0;
  std::vector<Tensor> m_;
  std::vector<Tensor> v_;
};

/// One Adam step on every parameter whose group is listed; other groups are
/// untouched. Consumes the gradients (grad_ready is cleared).
void adam_update(ParameterStore& params, AdamState& state, std::span<const ParamGroup> groups);
inline void adam_update(ParameterStore& params, AdamState& state, std::initializer_list<ParamGroup> groups) {
  adam_update(params, state, std::span<const ParamGroup>(groups.begin(), groups.size()));
}

double global_norm(std::span<const Tensor* const> grads);

/// Rescales the tensors in place so their joint L2 norm is at most max_norm.
/// Returns the norm before clipping.
double clip_gradients(std::span<Tensor* const> grads, double max_norm);

/// Same, over the gradients of the listed groups.
double clip_gradients(ParameterStore& params, double max_norm, std::span<const ParamGroup> groups);
inline double clip_gradients(ParameterStore& params, double max_norm, std::initializer_list<ParamGroup> groups) {
  return clip_gradients(params, max_norm, std::span<const ParamGroup>(groups.begin(), groups.size()));
}

}  // namespace leo::num
