#include "leo/encoder.hpp"

#include <algorithm>
#include <cmath>

#include "leo/errors.hpp"
#include "leo/layers.hpp"

namespace leo::model {

using num::Graph;
using num::ParamGroup;
using num::Segments;
using num::Tensor;
using num::Var;

num::Tensor glorot_uniform(num::Shape shape, std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  Tensor t(std::move(shape));
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  for (auto& v : t.data()) v = (2.0 * rng.uniform() - 1.0) * limit;
  return t;
}

void add_dense(num::ParameterStore& store, const std::string& prefix, ParamGroup group, std::size_t in,
               std::size_t out, Rng& rng) {
  store.add(prefix + ".w", group, glorot_uniform({in, out}, in, out, rng));
  store.add(prefix + ".b", group, Tensor({out}));
}

Var dense(Graph& g, num::ParameterStore& store, const std::string& prefix, Var x) {
  return g.add_bias(g.matmul(x, g.param(store, prefix + ".w")), g.param(store, prefix + ".b"));
}

void init_encoder(num::ParameterStore& store, const EncoderConfig& cfg, Rng& rng) {
  if (cfg.d == 0 || cfg.kernel == 0 || cfg.vocab_size < 2) {
    throw ConfigError("encoder needs d > 0, kernel >= 1 and a vocabulary with PAD/UNK");
  }
  Tensor emb({cfg.vocab_size, cfg.d});
  for (std::size_t i = cfg.d; i < emb.size(); ++i) emb[i] = (2.0 * rng.uniform() - 1.0) * 0.05;
  const std::size_t idx = store.add(kEmbedding, ParamGroup::encoder, std::move(emb));
  store.at(idx).pinned_rows = {0};
  store.add(kConvKernel, ParamGroup::encoder,
            glorot_uniform({cfg.kernel, cfg.d, cfg.d}, cfg.kernel * cfg.d, cfg.kernel * cfg.d, rng));
  store.add(kConvBias, ParamGroup::encoder, Tensor({cfg.d}));
}

BatchEncoding encode_batch(Graph& g, num::ParameterStore& store, const EncoderConfig& cfg,
                           std::span<const TokenizedFunction* const> batch, std::size_t L, bool train, Rng& rng) {
  BatchEncoding enc;
  enc.L = L;
  std::vector<int> ids;
  Segments segs;
  for (std::size_t b = 0; b < batch.size(); ++b) {
    const auto& stmts = batch[b]->statements;
    const std::size_t n = std::min(stmts.size(), L);
    enc.true_lengths.push_back(n);
    for (std::size_t s = 0; s < n; ++s) {
      segs.push_back({ids.size(), stmts[s].size()});
      ids.insert(ids.end(), stmts[s].begin(), stmts[s].end());
      enc.dest_rows.push_back(b * L + s);
    }
  }
  Var table = g.param(store, kEmbedding);
  Var e = g.embedding(table, ids);
  e = g.dropout(e, cfg.embed_retain, rng, train);
  Var conv = g.conv1d(e, g.param(store, kConvKernel), g.param(store, kConvBias), segs);
  conv = g.relu(conv);
  if (segs.empty()) {
    enc.statements = g.constant(Tensor({0, cfg.d}), "no_statements");
  } else {
    enc.statements = g.segment_max(conv, num::conv_output_segments(segs, cfg.kernel));
  }
  enc.padded = g.scatter_rows(enc.statements, enc.dest_rows, batch.size() * L);
  return enc;
}

Tensor embed_statement(std::span<const int> ids, num::ParameterStore& store, const EncoderConfig& cfg, bool train,
                       Rng& rng) {
  Graph g(false);
  Var e = g.embedding(g.param(store, kEmbedding), ids);
  e = g.dropout(e, cfg.embed_retain, rng, train);
  return g.value(e);
}

Tensor encode_statement(const Tensor& embedded, num::ParameterStore& store) {
  Graph g(false);
  Var x = g.constant(embedded);
  const Segments one{{0, embedded.rows()}};
  Var conv = g.relu(g.conv1d(x, g.param(store, kConvKernel), g.param(store, kConvBias), one));
  Var pooled = g.maxpool1d(conv);
  return g.value(pooled).reshaped({g.value(pooled).size()});
}

EncodedFunction encode_function(const TokenizedFunction& fn, num::ParameterStore& store, const EncoderConfig& cfg,
                                std::size_t L, bool train, Rng& rng) {
  Graph g(false);
  const TokenizedFunction* one[] = {&fn};
  BatchEncoding enc = encode_batch(g, store, cfg, one, L, train, rng);
  return EncodedFunction{g.value(enc.padded), enc.true_lengths[0], fn.label};
}

}  // namespace leo::model
