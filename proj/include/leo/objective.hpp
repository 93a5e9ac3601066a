#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "leo/autograd.hpp"
#include "leo/model.hpp"
#include "leo/rng.hpp"

namespace leo::objective {

/// -log probs[label], probs clamped to [1e-12, 1].
double cross_entropy(std::span<const double> probs, int label);

/// Row-major concatenation of the rows of an L x d matrix.
std::vector<double> flatten_representation(const num::Tensor& X);

/// u.v / (|u||v|); 0 when either norm is below 1e-12.
double cosine_similarity(std::span<const double> u, std::span<const double> v);

enum class ContrastiveVariant { cluster, supervised_class };

struct ContrastiveConfig {
  double tau = 0.5;
  double lambda = 0.1;
  std::size_t k = 3;
  ContrastiveVariant variant = ContrastiveVariant::cluster;
  std::size_t kmeans_iters = 10;
};

/// Cluster label per batch position; -1 for non-vulnerable samples.
struct ClusterAssignment {
  std::vector<int> labels;
  std::size_t k = 0;
};

/// k-means over the L2-normalized rows of the vulnerable samples.
ClusterAssignment assign_clusters(const num::Tensor& reps, std::span<const int> labels, std::size_t k,
                                  std::size_t max_iters, std::uint64_t seed);

/// Anchor-by-anchor positive weights: w[i][c] = 1/|C(i)| for every positive c
/// of a vulnerable anchor i, 0 elsewhere. Anchors without positives get a zero row.
num::Tensor positive_weights(std::span<const int> labels, const ClusterAssignment& assignment,
                             ContrastiveVariant variant);

/// Cluster-contrastive loss on reps (m x D) with cosine similarity and
/// temperature tau; the denominator runs over every other batch member.
num::Var cluster_contrastive_loss(num::Graph& g, num::Var reps, std::span<const int> labels,
                                  const ClusterAssignment& assignment, double tau, ContrastiveVariant variant);
double cluster_contrastive_loss(const num::Tensor& reps, std::span<const int> labels,
                                const ClusterAssignment& assignment, double tau, ContrastiveVariant variant);

/// Replaces the sampled gate; used by tests.
enum class ForcedGate { none, ones, zeros };

struct LossTerms {
  num::Var loss;
  num::Var ce;
  num::Var ccl;  // invalid when the contrastive term was not built
  ClusterAssignment assignment;
};

/// Mean cross-entropy of the classifier on X * r, r a relaxed Bernoulli(0.5)
/// gate per real statement. The selector is not part of this graph.
LossTerms data_distribution_loss(num::Graph& g, num::ParameterStore& store, const model::ModelConfig& cfg,
                                 std::span<const model::TokenizedFunction* const> batch, double relax_temp, Rng& rng,
                                 ForcedGate force = ForcedGate::none);

/// Mean cross-entropy on X * z, z sampled from the selector, plus
/// lambda * cluster-contrastive loss on the same masked representations.
/// A given `frozen` assignment replaces the per-batch k-means.
LossTerms joint_loss(num::Graph& g, num::ParameterStore& store, const model::ModelConfig& cfg,
                     std::span<const model::TokenizedFunction* const> batch, const ContrastiveConfig& ccfg, double nu,
                     Rng& rng, std::uint64_t kmeans_seed, const std::optional<ClusterAssignment>& frozen = std::nullopt,
                     ForcedGate force = ForcedGate::none);

}  // namespace leo::objective
