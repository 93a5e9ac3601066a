#include "leo/objective.hpp"

#include <algorithm>
#include <cmath>

#include "leo/errors.hpp"
#include "leo/kmeans.hpp"

namespace leo::objective {

using num::Graph;
using num::Tensor;
using num::Var;

double cross_entropy(std::span<const double> probs, int label) {
  if (label < 0 || static_cast<std::size_t>(label) >= probs.size()) {
    throw UsageError("cross_entropy: label " + std::to_string(label) + " out of range");
  }
  return -std::log(std::clamp(probs[static_cast<std::size_t>(label)], 1e-12, 1.0));
}

std::vector<double> flatten_representation(const Tensor& X) { return X.data(); }

double cosine_similarity(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size()) throw UsageError("cosine_similarity: length mismatch");
  double uv = 0.0, uu = 0.0, vv = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    uv += u[i] * v[i];
    uu += u[i] * u[i];
    vv += v[i] * v[i];
  }
  const double nu = std::sqrt(uu), nv = std::sqrt(vv);
  if (nu < 1e-12 || nv < 1e-12) return 0.0;
  return uv / (nu * nv);
}

ClusterAssignment assign_clusters(const Tensor& reps, std::span<const int> labels, std::size_t k,
                                  std::size_t max_iters, std::uint64_t seed) {
  if (labels.size() != reps.rows()) throw UsageError("assign_clusters: one label per row required");
  ClusterAssignment out;
  out.labels.assign(labels.size(), -1);
  std::vector<std::size_t> vuln;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] == 1) vuln.push_back(i);
  }
  if (vuln.empty()) return out;
  const std::size_t dim = reps.cols();
  Tensor pts({vuln.size(), dim});
  for (std::size_t r = 0; r < vuln.size(); ++r) {
    auto src = reps.row(vuln[r]);
    double n2 = 0.0;
    for (double v : src) n2 += v * v;
    const double n = std::sqrt(n2);
    if (n < 1e-12) continue;
    auto dst = pts.row(r);
    for (std::size_t j = 0; j < dim; ++j) dst[j] = src[j] / n;
  }
  const auto km = cluster::kmeans(pts, k, max_iters, seed);
  out.k = km.k;
  for (std::size_t r = 0; r < vuln.size(); ++r) out.labels[vuln[r]] = km.labels[r];
  return out;
}

Tensor positive_weights(std::span<const int> labels, const ClusterAssignment& assignment,
                        ContrastiveVariant variant) {
  const std::size_t m = labels.size();
  if (assignment.labels.size() != m) throw UsageError("contrastive loss: assignment does not cover the batch");
  Tensor w({m, m});
  for (std::size_t i = 0; i < m; ++i) {
    if (labels[i] != 1) continue;
    std::vector<std::size_t> pos;
    for (std::size_t c = 0; c < m; ++c) {
      if (c == i || labels[c] != 1) continue;
      if (variant == ContrastiveVariant::cluster && assignment.labels[c] != assignment.labels[i]) continue;
      pos.push_back(c);
    }
    for (std::size_t c : pos) w.at(i, c) = 1.0 / static_cast<double>(pos.size());
  }
  return w;
}

Var cluster_contrastive_loss(Graph& g, Var reps, std::span<const int> labels, const ClusterAssignment& assignment,
                             double tau, ContrastiveVariant variant) {
  if (!(tau > 0.0)) throw ConfigError("contrastive temperature must be positive");
  const std::size_t m = g.value(reps).rows();
  if (labels.size() != m) throw UsageError("contrastive loss: one label per row required");
  Tensor w = positive_weights(labels, assignment, variant);
  if (m < 2) return g.constant(Tensor::scalar(0.0), "ccl_empty");
  Tensor offdiag({m, m}, 1.0);
  for (std::size_t i = 0; i < m; ++i) offdiag.at(i, i) = 0.0;
  Var u = g.l2_normalize_rows(reps);
  Var sim = g.scale(g.matmul(u, g.transpose(u)), 1.0 / tau);
  Var logp = g.masked_log_softmax(sim, offdiag);
  Var weighted = g.mul(logp, g.constant(std::move(w), "positive_weights"));
  return g.scale(g.sum(weighted), -1.0);
}

double cluster_contrastive_loss(const Tensor& reps, std::span<const int> labels, const ClusterAssignment& assignment,
                                double tau, ContrastiveVariant variant) {
  Graph g(false);
  return g.value(cluster_contrastive_loss(g, g.constant(reps), labels, assignment, tau, variant)).item();
}

namespace {

std::vector<int> batch_labels(std::span<const model::TokenizedFunction* const> batch) {
  std::vector<int> y;
  y.reserve(batch.size());
  for (const auto* f : batch) {
    if (f->label != 0 && f->label != 1) throw UsageError("label must be 0 or 1");
    y.push_back(f->label);
  }
  return y;
}

struct Masked {
  Var flat;  // m x (L*d)
  std::vector<int> labels;
};

// Encode, gate the real statements with `gate(rows)`, scatter back to m x L x d.
template <class GateFn>
Masked masked_batch(Graph& g, num::ParameterStore& store, const model::ModelConfig& cfg,
                    std::span<const model::TokenizedFunction* const> batch, Rng& rng, ForcedGate force,
                    GateFn gate) {
  if (batch.empty()) throw UsageError("empty batch");
  const std::size_t m = batch.size(), L = cfg.L, d = cfg.encoder.d;
  auto enc = model::encode_batch(g, store, cfg.encoder, batch, L, true, rng);
  const std::size_t n = g.value(enc.statements).rows();
  Var z;
  if (force == ForcedGate::none) {
    z = gate(enc.statements);
  } else {
    z = g.constant(Tensor({n, 1}, force == ForcedGate::ones ? 1.0 : 0.0), "forced_gate");
  }
  Var gated = n == 0 ? enc.statements : g.mul(enc.statements, z);
  Var padded = g.scatter_rows(gated, enc.dest_rows, m * L);
  return {g.reshape(padded, {m, L * d}), batch_labels(batch)};
}

Var mean_ce(Graph& g, num::ParameterStore& store, const model::ModelConfig& cfg, Var flat,
            std::span<const int> labels, Rng& rng) {
  Var probs = model::classifier_probabilities(g, store, cfg.classifier, flat, true, rng);
  return g.mean(g.cross_entropy(probs, labels));
}

}  // namespace

LossTerms data_distribution_loss(Graph& g, num::ParameterStore& store, const model::ModelConfig& cfg,
                                 std::span<const model::TokenizedFunction* const> batch, double relax_temp, Rng& rng,
                                 ForcedGate force) {
  Masked mb = masked_batch(g, store, cfg, batch, rng, force, [&](Var rows) {
    const std::size_t n = g.value(rows).rows();
    Var half = g.constant(Tensor({n, 1}, 0.5), "half");
    return g.relaxed_bernoulli(half, model::gumbel_difference(n, rng), relax_temp);
  });
  LossTerms out;
  out.ce = mean_ce(g, store, cfg, mb.flat, mb.labels, rng);
  out.loss = out.ce;
  out.assignment.labels.assign(batch.size(), -1);
  return out;
}

LossTerms joint_loss(Graph& g, num::ParameterStore& store, const model::ModelConfig& cfg,
                     std::span<const model::TokenizedFunction* const> batch, const ContrastiveConfig& ccfg, double nu,
                     Rng& rng, std::uint64_t kmeans_seed, const std::optional<ClusterAssignment>& frozen,
                     ForcedGate force) {
  Masked mb = masked_batch(g, store, cfg, batch, rng, force, [&](Var rows) {
    Var p = model::selector_probabilities(g, store, cfg.selector, rows, true, rng);
    return g.relaxed_bernoulli(p, model::gumbel_difference(g.value(rows).rows(), rng), nu);
  });
  LossTerms out;
  out.ce = mean_ce(g, store, cfg, mb.flat, mb.labels, rng);
  out.loss = out.ce;
  if (ccfg.lambda > 0.0) {
    out.assignment = frozen ? *frozen
                            : assign_clusters(g.value(mb.flat), mb.labels, ccfg.k, ccfg.kmeans_iters, kmeans_seed);
    out.ccl = cluster_contrastive_loss(g, mb.flat, mb.labels, out.assignment, ccfg.tau, ccfg.variant);
    out.loss = g.add(out.ce, g.scale(out.ccl, ccfg.lambda));
  } else {
    out.assignment.labels.assign(batch.size(), -1);
  }
  return out;
}

}  // namespace leo::objective
