#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "leo/autograd.hpp"
#include "leo/rng.hpp"

namespace leo::model {

struct EncoderConfig {
  std::size_t vocab_size = 2;
  std::size_t d = 150;  // embedding width and number of conv filters
  std::size_t kernel = 3;
  double embed_retain = 0.8;
};

inline constexpr const char* kEmbedding = "encoder.embedding";
inline constexpr const char* kConvKernel = "encoder.conv.kernel";
inline constexpr const char* kConvBias = "encoder.conv.bias";

/// Adds the embedding table (PAD row pinned at zero) and the conv layer.
void init_encoder(num::ParameterStore& store, const EncoderConfig& cfg, Rng& rng);

/// A function as token ids, one vector per statement.
struct TokenizedFunction {
  std::vector<std::vector<int>> statements;
  int label = 0;
};

/// L x d statement matrix; rows at or beyond true_length are zero.
struct EncodedFunction {
  num::Tensor matrix;
  std::size_t true_length = 0;
  int label = 0;
};

/// Graph-level encoding of a batch of functions.
struct BatchEncoding {
  num::Var statements;  // (real statements in the batch) x d, batch order
  num::Var padded;      // (m * L) x d, padding rows zero
  std::vector<std::size_t> dest_rows;     // row of each statement inside `padded`
  std::vector<std::size_t> true_lengths;  // per function, <= L
  std::size_t L = 0;
};

/// Embeds, drops out (train only), convolves, applies ReLU and max-pools
/// every statement of every function; only the first L statements of a
/// function are kept.
BatchEncoding encode_batch(num::Graph& g, num::ParameterStore& store, const EncoderConfig& cfg,
                           std::span<const TokenizedFunction* const> batch, std::size_t L, bool train, Rng& rng);

/// T x d embedding of one statement.
num::Tensor embed_statement(std::span<const int> ids, num::ParameterStore& store, const EncoderConfig& cfg,
                            bool train, Rng& rng);
/// Conv + ReLU + max over time of one embedded statement (T x d) -> d.
num::Tensor encode_statement(const num::Tensor& embedded, num::ParameterStore& store);
EncodedFunction encode_function(const TokenizedFunction& fn, num::ParameterStore& store, const EncoderConfig& cfg,
                                std::size_t L, bool train, Rng& rng);

}  // namespace leo::model
