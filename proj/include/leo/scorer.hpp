#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "leo/tensor.hpp"

namespace leo::scoring {

enum class ScoringMode { pooled, concat_diagonal };

/// pooled: mean over the real rows of z_i * x_i (a d-vector);
/// concat_diagonal: the flattened L*d matrix X * z.
std::vector<double> scoring_representation(const num::Tensor& X, std::span<const double> z,
                                           std::size_t true_length, ScoringMode mode);

struct ClusterStat {
  std::vector<double> mean;
  num::Tensor inv_cov;  // dim x dim, or 1 x dim (diagonal) in concat_diagonal mode
  std::size_t count = 0;
  double epsilon = 0.0;
};

struct ClusterStatistics {
  ScoringMode mode = ScoringMode::pooled;
  std::size_t dim = 0;
  std::vector<ClusterStat> clusters;
};

/// Shrinkage used when none is given: max(1e-3 * trace / dim, 1e-6).
double default_shrinkage(double trace, std::size_t dim);

/// Statistics of one group of points (rows). Singletons get a zero covariance.
ClusterStat cluster_stat(const num::Tensor& points, ScoringMode mode, std::optional<double> epsilon = std::nullopt);

/// Inverse of a symmetric positive definite matrix via Cholesky. On failure
/// the diagonal shift grows tenfold, at most three times; `eps` is updated to
/// the shift that worked.
num::Tensor invert_spd(const num::Tensor& cov, double& eps);

/// k-means over the representations, then per-cluster mean and regularized
/// inverse covariance. Fewer points than k reduces k with a warning.
ClusterStatistics fit_cluster_statistics(const num::Tensor& reps, std::size_t k, std::uint64_t seed,
                                         ScoringMode mode = ScoringMode::pooled,
                                         std::optional<double> epsilon = std::nullopt,
                                         std::size_t max_iters = 100);

/// Minimum over clusters of (x - mu)^T S^-1 (x - mu).
double mahalanobis_score(std::span<const double> x, const ClusterStatistics& stats);

/// Nearest-rank quantile of validation ID scores.
double calibrate_threshold(std::span<const double> scores, double quantile = 0.95);

enum class Decision { id, ood };
/// OOD iff score > threshold.
inline Decision decide(double score, double threshold) { return score > threshold ? Decision::ood : Decision::id; }

/// 1 - max(probs).
double msp_score(std::span<const double> probs);

}  // namespace leo::scoring
