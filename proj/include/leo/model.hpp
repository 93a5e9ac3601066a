#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "leo/autograd.hpp"
#include "leo/encoder.hpp"
#include "leo/rng.hpp"
#include "leo/selector.hpp"

namespace leo::model {

struct ClassifierConfig {
  std::size_t input = 0;  // L * d
  std::vector<std::size_t> hidden{100, 100};
  double retain = 0.8;
};

struct ModelConfig {
  std::size_t L = 100;
  EncoderConfig encoder;
  SelectorConfig selector;
  ClassifierConfig classifier;
};

/// Fills in the derived widths (selector input d, classifier input L * d).
ModelConfig make_model_config(std::size_t vocab_size, std::size_t L, std::size_t d,
                              std::vector<std::size_t> selector_hidden, std::vector<std::size_t> classifier_hidden,
                              double retain, double embed_retain);

/// Encoder, selector and classifier parameters in that insertion order.
num::ParameterStore init_model(const ModelConfig& cfg, std::uint64_t seed);

void init_classifier(num::ParameterStore& store, const ClassifierConfig& cfg, Rng& rng);

/// x (m x L*d) -> class probabilities (m x 2).
num::Var classifier_probabilities(num::Graph& g, num::ParameterStore& store, const ClassifierConfig& cfg, num::Var x,
                                  bool train, Rng& rng);

/// Everything inference needs for one function.
struct Inference {
  num::Tensor X;              // L x d
  std::size_t true_length = 0;
  std::vector<double> p;      // L selection probabilities
  std::vector<double> z;      // deterministic gate, zero on padded rows
  std::vector<double> probs;  // classifier output on X * z
};

/// Eval-mode forward pass of a batch of functions.
std::vector<Inference> infer(num::ParameterStore& store, const ModelConfig& cfg,
                             std::span<const TokenizedFunction* const> batch, GateMode mode);

}  // namespace leo::model
