#include "leo/scorer.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

#include "leo/errors.hpp"
#include "leo/kmeans.hpp"
#include "leo/log.hpp"
#include "leo/metrics.hpp"

namespace leo::scoring {

using num::Tensor;

std::vector<double> scoring_representation(const Tensor& X, std::span<const double> z, std::size_t true_length,
                                           ScoringMode mode) {
  if (z.size() != X.rows()) throw UsageError("scoring_representation: gate length does not match rows");
  const std::size_t d = X.cols();
  const std::size_t n = std::min(true_length, X.rows());
  if (mode == ScoringMode::concat_diagonal) {
    std::vector<double> out(X.size(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < d; ++j) out[i * d + j] = z[i] * X.at(i, j);
    }
    return out;
  }
  std::vector<double> out(d, 0.0);
  if (n == 0) return out;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) out[j] += z[i] * X.at(i, j);
  }
  for (auto& v : out) v /= static_cast<double>(n);
  return out;
}

double default_shrinkage(double trace, std::size_t dim) {
  return std::max(1e-3 * trace / static_cast<double>(std::max<std::size_t>(dim, 1)), 1e-6);
}

Tensor invert_spd(const Tensor& cov, double& eps) {
  const auto n = static_cast<Eigen::Index>(cov.rows());
  Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> c(cov.data().data(), n, n);
  double shift = eps;
  for (int attempt = 0; attempt <= 3; ++attempt) {
    Eigen::MatrixXd a = c;
    a.diagonal().array() += shift;
    Eigen::LLT<Eigen::MatrixXd> llt(a);
    if (llt.info() == Eigen::Success) {
      Eigen::MatrixXd inv = llt.solve(Eigen::MatrixXd::Identity(n, n));
      inv = 0.5 * (inv + inv.transpose());
      Tensor out({cov.rows(), cov.rows()});
      for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) out.at(i, j) = inv(i, j);
      if (!out.all_finite()) break;
      eps = shift;
      return out;
    }
    shift = shift > 0.0 ? shift * 10.0 : 1e-6;
  }
  throw NumericError("covariance is not positive definite even after shrinkage");
}

ClusterStat cluster_stat(const Tensor& points, ScoringMode mode, std::optional<double> epsilon) {
  const std::size_t n = points.rows(), dim = points.cols();
  if (n == 0) throw UsageError("cluster_stat: no points");
  ClusterStat st;
  st.count = n;
  st.mean.assign(dim, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < dim; ++j) st.mean[j] += points.at(i, j);
  for (auto& v : st.mean) v /= static_cast<double>(n);
  const double denom = n > 1 ? static_cast<double>(n - 1) : 1.0;

  if (mode == ScoringMode::concat_diagonal) {
    std::vector<double> var(dim, 0.0);
    if (n > 1) {
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < dim; ++j) {
          const double t = points.at(i, j) - st.mean[j];
          var[j] += t * t;
        }
      for (auto& v : var) v /= denom;
    }
    double trace = 0.0;
    for (double v : var) trace += v;
    st.epsilon = epsilon ? *epsilon : default_shrinkage(trace, dim);
    st.inv_cov = Tensor({1, dim});
    for (std::size_t j = 0; j < dim; ++j) {
      const double v = var[j] + st.epsilon;
      if (!(v > 0.0)) throw NumericError("zero variance with zero shrinkage");
      st.inv_cov[j] = 1.0 / v;
    }
    return st;
  }

  Tensor cov({dim, dim});
  if (n > 1) {
    std::vector<double> c(dim);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < dim; ++j) c[j] = points.at(i, j) - st.mean[j];
      for (std::size_t a = 0; a < dim; ++a) {
        if (c[a] == 0.0) continue;
        for (std::size_t b = 0; b < dim; ++b) cov.at(a, b) += c[a] * c[b];
      }
    }
    for (auto& v : cov.data()) v /= denom;
  }
  double trace = 0.0;
  for (std::size_t j = 0; j < dim; ++j) trace += cov.at(j, j);
  st.epsilon = epsilon ? *epsilon : default_shrinkage(trace, dim);
  st.inv_cov = invert_spd(cov, st.epsilon);
  return st;
}

ClusterStatistics fit_cluster_statistics(const Tensor& reps, std::size_t k, std::uint64_t seed, ScoringMode mode,
                                         std::optional<double> epsilon, std::size_t max_iters) {
  if (reps.size() == 0 || reps.rows() == 0) throw UsageError("fit_cluster_statistics: no representations");
  if (k == 0) throw ConfigError("cluster count must be at least 1");
  if (reps.rows() < k) {
    log::warn("only " + std::to_string(reps.rows()) + " training representations; using that many clusters instead of " +
              std::to_string(k));
  }
  const auto km = cluster::kmeans(reps, k, max_iters, seed);
  ClusterStatistics stats;
  stats.mode = mode;
  stats.dim = reps.cols();
  for (std::size_t c = 0; c < km.k; ++c) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < km.labels.size(); ++i) {
      if (km.labels[i] == static_cast<int>(c)) members.push_back(i);
    }
    if (members.empty()) continue;
    Tensor pts({members.size(), stats.dim});
    for (std::size_t r = 0; r < members.size(); ++r) {
      std::copy_n(reps.row(members[r]).begin(), stats.dim, pts.row(r).begin());
    }
    stats.clusters.push_back(cluster_stat(pts, mode, epsilon));
  }
  return stats;
}

double mahalanobis_score(std::span<const double> x, const ClusterStatistics& stats) {
  if (x.size() != stats.dim) {
    throw UsageError("mahalanobis_score: representation has " + std::to_string(x.size()) + " entries, expected " +
                     std::to_string(stats.dim));
  }
  if (stats.clusters.empty()) throw UsageError("mahalanobis_score: no fitted clusters");
  const std::size_t dim = stats.dim;
  double best = std::numeric_limits<double>::infinity();
  std::vector<double> diff(dim);
  for (const auto& c : stats.clusters) {
    for (std::size_t j = 0; j < dim; ++j) diff[j] = x[j] - c.mean[j];
    double q = 0.0;
    if (stats.mode == ScoringMode::concat_diagonal) {
      for (std::size_t j = 0; j < dim; ++j) q += diff[j] * diff[j] * c.inv_cov[j];
    } else {
      for (std::size_t a = 0; a < dim; ++a) {
        const auto row = c.inv_cov.row(a);
        double s = 0.0;
        for (std::size_t b = 0; b < dim; ++b) s += row[b] * diff[b];
        q += diff[a] * s;
      }
    }
    best = std::min(best, std::max(q, 0.0));
  }
  return best;
}

double calibrate_threshold(std::span<const double> scores, double quantile) {
  if (scores.empty()) throw CalibrationError("no validation scores to calibrate on");
  if (!(quantile > 0.0 && quantile < 1.0)) throw CalibrationError("calibration quantile must be in (0, 1)");
  if (scores.size() < 20) log::warn("calibrating on fewer than 20 validation scores");
  return metrics::nearest_rank_quantile(scores, quantile);
}

double msp_score(std::span<const double> probs) {
  if (probs.empty()) throw UsageError("msp_score: empty probability vector");
  return 1.0 - *std::max_element(probs.begin(), probs.end());
}

}  // namespace leo::scoring
