#include "leo/model.hpp"

#include <string>

#include "leo/errors.hpp"
#include "leo/layers.hpp"

namespace leo::model {

using num::Graph;
using num::Tensor;
using num::Var;

namespace {
std::string layer_name(std::size_t i) { return "classifier.dense" + std::to_string(i); }
}  // namespace

ModelConfig make_model_config(std::size_t vocab_size, std::size_t L, std::size_t d,
                              std::vector<std::size_t> selector_hidden, std::vector<std::size_t> classifier_hidden,
                              double retain, double embed_retain) {
  if (L == 0) throw ConfigError("L must be positive");
  ModelConfig cfg;
  cfg.L = L;
  cfg.encoder.vocab_size = vocab_size;
  cfg.encoder.d = d;
  cfg.encoder.embed_retain = embed_retain;
  cfg.selector.d = d;
  cfg.selector.hidden = std::move(selector_hidden);
  cfg.selector.retain = retain;
  cfg.classifier.input = L * d;
  cfg.classifier.hidden = std::move(classifier_hidden);
  cfg.classifier.retain = retain;
  return cfg;
}

void init_classifier(num::ParameterStore& store, const ClassifierConfig& cfg, Rng& rng) {
  std::size_t in = cfg.input;
  for (std::size_t i = 0; i < cfg.hidden.size(); ++i) {
    add_dense(store, layer_name(i), num::ParamGroup::classifier, in, cfg.hidden[i], rng);
    in = cfg.hidden[i];
  }
  add_dense(store, "classifier.head", num::ParamGroup::classifier, in, 2, rng);
}

num::ParameterStore init_model(const ModelConfig& cfg, std::uint64_t seed) {
  num::ParameterStore store;
  Rng enc_rng(derive_seed(seed, "init.encoder"));
  Rng sel_rng(derive_seed(seed, "init.selector"));
  Rng cls_rng(derive_seed(seed, "init.classifier"));
  init_encoder(store, cfg.encoder, enc_rng);
  init_selector(store, cfg.selector, sel_rng);
  init_classifier(store, cfg.classifier, cls_rng);
  return store;
}

Var classifier_probabilities(Graph& g, num::ParameterStore& store, const ClassifierConfig& cfg, Var x, bool train,
                             Rng& rng) {
  Var h = x;
  for (std::size_t i = 0; i < cfg.hidden.size(); ++i) {
    h = g.relu(dense(g, store, layer_name(i), h));
    h = g.dropout(h, cfg.retain, rng, train);
  }
  return g.softmax(dense(g, store, "classifier.head", h));
}

std::vector<Inference> infer(num::ParameterStore& store, const ModelConfig& cfg,
                             std::span<const TokenizedFunction* const> batch, GateMode mode) {
  Graph g(false);
  Rng unused(0);
  BatchEncoding enc = encode_batch(g, store, cfg.encoder, batch, cfg.L, false, unused);
  const Tensor& S = g.value(enc.statements);
  std::vector<double> p_rows;
  if (S.rows() > 0) p_rows = g.value(selector_probabilities(g, store, cfg.selector, enc.statements, false, unused)).data();
  const std::vector<double> z_rows = deterministic_mask(p_rows, mode);

  std::vector<Inference> out(batch.size());
  const std::size_t m = batch.size(), L = cfg.L, d = cfg.encoder.d;
  const Tensor& P = g.value(enc.padded);
  Tensor masked({m, L * d});
  for (std::size_t b = 0; b < m; ++b) {
    out[b].X = Tensor({L, d});
    std::copy_n(P.data().begin() + static_cast<std::ptrdiff_t>(b * L * d), L * d, out[b].X.data().begin());
    out[b].true_length = enc.true_lengths[b];
    // Padded rows keep the selector's p (it is computed for them too) but a zero gate.
    out[b].p.assign(L, 0.0);
    out[b].z.assign(L, 0.0);
  }
  for (std::size_t r = 0; r < enc.dest_rows.size(); ++r) {
    const std::size_t b = enc.dest_rows[r] / L, i = enc.dest_rows[r] % L;
    out[b].p[i] = p_rows[r];
    out[b].z[i] = z_rows[r];
    for (std::size_t j = 0; j < d; ++j) masked.at(b, i * d + j) = S.at(r, j) * z_rows[r];
  }
  if (m > 0) {
    // Padded rows of p: the selector on a zero row.
    const std::vector<double> pad_p = selector_forward(Tensor({1, d}), store, cfg.selector);
    for (auto& inf : out) {
      for (std::size_t i = inf.true_length; i < L; ++i) inf.p[i] = pad_p[0];
    }
    Var probs = classifier_probabilities(g, store, cfg.classifier, g.constant(std::move(masked)), false, unused);
    const Tensor& PR = g.value(probs);
    for (std::size_t b = 0; b < m; ++b) out[b].probs = {PR.at(b, 0), PR.at(b, 1)};
  }
  return out;
}

}  // namespace leo::model
