#pragma once

#include <string>

#include "leo/autograd.hpp"
#include "leo/rng.hpp"

namespace leo::model {

/// Glorot-uniform weight "<prefix>.w" (in x out) and zero bias "<prefix>.b".
void add_dense(num::ParameterStore& store, const std::string& prefix, num::ParamGroup group, std::size_t in,
               std::size_t out, Rng& rng);

/// x * W + b
num::Var dense(num::Graph& g, num::ParameterStore& store, const std::string& prefix, num::Var x);

num::Tensor glorot_uniform(num::Shape shape, std::size_t fan_in, std::size_t fan_out, Rng& rng);

}  // namespace leo::model
