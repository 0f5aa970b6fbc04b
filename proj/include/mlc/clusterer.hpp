#pragma once

#include "mlc/error.hpp"
#include "mlc/types.hpp"

#include <cstdint>
#include <deque>
#include <limits>
#include <random>
#include <string>

namespace mlc {

enum class ClusterMethod { Dbscan, KMeans, None };

ClusterMethod parse_cluster_method(const std::string& name);
std::string to_string(ClusterMethod m);

struct ClusterParams {
  double eps = 0.6;
  int min_samples = 4;
  ClusterMethod method = ClusterMethod::Dbscan;
  int k = 2;
  std::uint64_t seed = 0;

  void validate() const;
};

constexpr int kNoise = -1;

/// Density clustering on a precomputed distance matrix. A point is core when
/// at least `min_samples` points (itself included) lie within `eps`. Clusters
/// grow breadth-first from unvisited core points in index order; a border
/// point keeps the first cluster that reaches it.
template <typename Scalar>
LabelList dbscan(const Matrix<Scalar>& dist, double eps, int min_samples) {
  const Index n = dist.rows();
  if (dist.cols() != n) throw ShapeError("dbscan: distance matrix must be square");
  if (min_samples < 1) throw ConfigError("dbscan: min_samples must be >= 1");

  std::vector<IndexList> neighbors(static_cast<std::size_t>(n));
  std::vector<bool> core(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < n; ++j)
      if (i == j || dist(i, j) <= eps) neighbors[i].push_back(j);
    core[i] = static_cast<Index>(neighbors[i].size()) >= min_samples;
  }

  LabelList labels(static_cast<std::size_t>(n), kNoise);
  int next = 0;
  for (Index seed = 0; seed < n; ++seed) {
    if (!core[seed] || labels[seed] != kNoise) continue;
    const int c = next++;
    labels[seed] = c;
    std::deque<Index> queue{seed};
    while (!queue.empty()) {
      const Index q = queue.front();
      queue.pop_front();
      for (Index m : neighbors[q]) {
        if (labels[m] != kNoise) continue;
        labels[m] = c;
        if (core[m]) queue.push_back(m);
      }
    }
  }
  return labels;
}

struct KMeansResult {
  LabelList labels;
  MatrixD centroids;
  double inertia = 0.0;
  int iterations = 0;
};

/// Lloyd iterations with greedy farthest-point seeding. The first centroid is a
/// seeded uniform pick; each further one is the point farthest from all chosen
/// centroids. Stops after 100 iterations or when no centroid moves by 1e-6.
KMeansResult kmeans(const MatrixD& features, int k, std::uint64_t seed);

/// Noise removal and dense relabeling of the surviving clusters.
struct PseudoLabeling {
  LabelList labels;     // raw labels, -1 = noise
  IndexList kept;       // non-noise rows, ascending
  LabelList pseudo;     // dense label of each kept row, aligned with `kept`
  int num_classes = 0;

  /// Dense label of row i, or -1 when i was dropped.
  LabelList dense_by_row() const;
};

PseudoLabeling select_clean(const LabelList& labels);

struct ClusterQuality {
  double ari = 0.0;
  double purity = 0.0;
};

/// Adjusted Rand index and purity over the non-noise rows.
ClusterQuality cluster_quality(const LabelList& labels, const LabelList& truth);

}  // namespace mlc
