#include "leo/kmeans.hpp"

#include <algorithm>
#include <limits>

#include "leo/errors.hpp"
#include "leo/rng.hpp"

namespace leo::cluster {

using num::Tensor;

double squared_distance(const double* a, const double* b, std::size_t dim) {
  double s = 0.0;
  for (std::size_t j = 0; j < dim; ++j) {
    const double t = a[j] - b[j];
    s += t * t;
  }
  return s;
}

namespace {

std::vector<std::size_t> seed_plus_plus(const Tensor& pts, std::size_t k, Rng& rng) {
  const std::size_t n = pts.rows(), dim = pts.cols();
  const double* P = pts.data().data();
  std::vector<std::size_t> chosen{static_cast<std::size_t>(rng.below(n))};
  std::vector<double> d2(n);
  for (std::size_t i = 0; i < n; ++i) d2[i] = squared_distance(P + i * dim, P + chosen[0] * dim, dim);
  while (chosen.size() < k) {
    double total = 0.0;
    for (double v : d2) total += v;
    std::size_t pick = n;
    if (total > 0.0) {
      const double r = rng.uniform() * total;
      double acc = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        acc += d2[i];
        if (d2[i] > 0.0 && acc > r) {
          pick = i;
          break;
        }
      }
      if (pick == n) {  // r landed in the rounding slack at the end
        for (std::size_t i = n; i-- > 0;) {
          if (d2[i] > 0.0) {
            pick = i;
            break;
          }
        }
      }
    } else {
      for (std::size_t i = 0; i < n && pick == n; ++i) {
        if (std::find(chosen.begin(), chosen.end(), i) == chosen.end()) pick = i;
      }
    }
    chosen.push_back(pick);
    for (std::size_t i = 0; i < n; ++i) {
      d2[i] = std::min(d2[i], squared_distance(P + i * dim, P + pick * dim, dim));
    }
  }
  return chosen;
}

// Nearest centroid per point (ties go to the lower index); returns inertia.
double assign(const Tensor& pts, const Tensor& cent, std::vector<int>& labels, std::vector<double>& dist) {
  const std::size_t n = pts.rows(), dim = pts.cols(), k = cent.rows();
  double inertia = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double best = std::numeric_limits<double>::infinity();
    int arg = 0;
    for (std::size_t c = 0; c < k; ++c) {
      const double d = squared_distance(pts.data().data() + i * dim, cent.data().data() + c * dim, dim);
      if (d < best) {
        best = d;
        arg = static_cast<int>(c);
      }
    }
    labels[i] = arg;
    dist[i] = best;
    inertia += best;
  }
  return inertia;
}

}  // namespace

KMeansResult kmeans(const Tensor& points, std::size_t k, std::size_t max_iters, std::uint64_t seed) {
  if (k == 0) throw UsageError("kmeans: K must be at least 1");
  KMeansResult res;
  const std::size_t n = points.size() == 0 ? 0 : points.rows();
  if (n == 0) return res;
  const std::size_t dim = points.cols();
  res.k = std::min(k, n);
  Rng rng(seed);
  const auto seeds = seed_plus_plus(points, res.k, rng);
  res.centroids = Tensor({res.k, dim});
  for (std::size_t c = 0; c < res.k; ++c) {
    std::copy_n(points.row(seeds[c]).begin(), dim, res.centroids.row(c).begin());
  }
  res.labels.assign(n, 0);
  std::vector<double> dist(n);
  res.inertia = assign(points, res.centroids, res.labels, dist);
  res.inertia_history.push_back(res.inertia);

  for (std::size_t it = 0; it < max_iters; ++it) {
    Tensor sums({res.k, dim});
    std::vector<std::size_t> counts(res.k, 0);
    for (std::size_t i = 0; i < n; ++i) {
      const auto c = static_cast<std::size_t>(res.labels[i]);
      ++counts[c];
      auto src = points.row(i);
      auto dst = sums.row(c);
      for (std::size_t j = 0; j < dim; ++j) dst[j] += src[j];
    }
    std::vector<bool> taken(n, false);
    for (std::size_t c = 0; c < res.k; ++c) {
      auto cen = res.centroids.row(c);
      if (counts[c] > 0) {
        auto s = sums.row(c);
        for (std::size_t j = 0; j < dim; ++j) cen[j] = s[j] / static_cast<double>(counts[c]);
        continue;
      }
      std::size_t far = n;
      for (std::size_t i = 0; i < n; ++i) {
        if (!taken[i] && (far == n || dist[i] > dist[far])) far = i;
      }
      taken[far] = true;
      std::copy_n(points.row(far).begin(), dim, cen.begin());
      dist[far] = 0.0;
    }
    const std::vector<int> before = res.labels;
    res.inertia = assign(points, res.centroids, res.labels, dist);
    res.inertia_history.push_back(res.inertia);
    res.iterations = it + 1;
    if (res.labels == before) break;
  }
  return res;
}

}  // namespace leo::cluster
