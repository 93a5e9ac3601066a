#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "leo/tensor.hpp"

namespace leo::cluster {

struct KMeansResult {
  std::vector<int> labels;   // one per point, in [0, k)
  num::Tensor centroids;     // k x dim
  std::size_t k = 0;         // min(requested, number of points)
  double inertia = 0.0;      // sum of squared distances to the assigned centroid
  std::vector<double> inertia_history;  // after each assignment step
  std::size_t iterations = 0;
};

/// Lloyd's algorithm with k-means++ seeding. Stops after max_iters updates or
/// once assignments stop changing. A cluster that goes empty is re-seeded with
/// the point farthest from its current centroid. Zero points give an empty
/// result with k = 0.
KMeansResult kmeans(const num::Tensor& points, std::size_t k, std::size_t max_iters, std::uint64_t seed);

double squared_distance(const double* a, const double* b, std::size_t dim);

}  // namespace leo::cluster
