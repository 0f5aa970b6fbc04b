#include "mlc/clusterer.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <unordered_map>

namespace mlc {

ClusterMethod parse_cluster_method(const std::string& name) {
  if (name == "dbscan") return ClusterMethod::Dbscan;
  if (name == "kmeans") return ClusterMethod::KMeans;
  if (name == "none") return ClusterMethod::None;
  throw ConfigError("unknown cluster method '" + name + "'");
}

std::string to_string(ClusterMethod m) {
  switch (m) {
    case ClusterMethod::Dbscan: return "dbscan";
    case ClusterMethod::KMeans: return "kmeans";
    case ClusterMethod::None: return "none";
  }
  return "unknown";
}

void ClusterParams::validate() const {
  if (!(eps > 0.0 && eps <= 1.0)) throw ConfigError("eps must lie in (0, 1]");
  if (min_samples < 1) throw ConfigError("min_samples must be >= 1");
  if (method == ClusterMethod::KMeans && k < 2) throw ConfigError("k-means needs k >= 2");
}

KMeansResult kmeans(const MatrixD& features, int k, std::uint64_t seed) {
  const Index n = features.rows();
  if (k < 1 || k > n) throw ConfigError("k-means: k must lie in [1, N]");

  auto sqdist = [&](Index i, const MatrixD& c, Index j) { return (features.row(i) - c.row(j)).squaredNorm(); };

  KMeansResult out;
  out.centroids.resize(k, features.cols());
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<Index> pick(0, n - 1);
  out.centroids.row(0) = features.row(pick(rng));
  VectorD nearest(n);
  for (Index i = 0; i < n; ++i) nearest(i) = sqdist(i, out.centroids, 0);
  for (int c = 1; c < k; ++c) {
    Index far = 0;
    nearest.maxCoeff(&far);
    out.centroids.row(c) = features.row(far);
    for (Index i = 0; i < n; ++i) nearest(i) = std::min(nearest(i), sqdist(i, out.centroids, c));
  }

  out.labels.assign(static_cast<std::size_t>(n), 0);
  for (int iter = 1; iter <= 100; ++iter) {
    out.iterations = iter;
    VectorD own(n);
    for (Index i = 0; i < n; ++i) {
      int best = 0;
      double best_d = sqdist(i, out.centroids, 0);
      for (int c = 1; c < k; ++c) {
        const double d = sqdist(i, out.centroids, c);
        if (d < best_d) {
          best_d = d;
          best = c;
        }
      }
      out.labels[i] = best;
      own(i) = best_d;
    }

    MatrixD next = MatrixD::Zero(k, features.cols());
    std::vector<Index> count(static_cast<std::size_t>(k), 0);
    for (Index i = 0; i < n; ++i) {
      next.row(out.labels[i]) += features.row(i);
      ++count[out.labels[i]];
    }
    for (int c = 0; c < k; ++c) {
      if (count[c] > 0) {
        next.row(c) /= static_cast<double>(count[c]);
        continue;
      }
      // Empty cluster: re-seed at the point worst served by its centroid.
      Index worst = 0;
      own.maxCoeff(&worst);
      next.row(c) = features.row(worst);
      own(worst) = 0.0;
    }

    const double shift = (next - out.centroids).rowwise().norm().maxCoeff();
    out.centroids = std::move(next);
    if (shift < 1e-6) break;
  }

  out.inertia = 0.0;
  for (Index i = 0; i < n; ++i) {
    int best = 0;
    double best_d = sqdist(i, out.centroids, 0);
    for (int c = 1; c < k; ++c) {
      const double d = sqdist(i, out.centroids, c);
      if (d < best_d) {
        best_d = d;
        best = c;
      }
    }
    out.labels[i] = best;
    out.inertia += best_d;
  }
  return out;
}

LabelList PseudoLabeling::dense_by_row() const {
  LabelList out(labels.size(), kNoise);
  for (std::size_t k = 0; k < kept.size(); ++k) out[static_cast<std::size_t>(kept[k])] = pseudo[k];
  return out;
}

PseudoLabeling select_clean(const LabelList& labels) {
  PseudoLabeling out;
  out.labels = labels;
  std::unordered_map<int, int> remap;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0) continue;
    auto [it, inserted] = remap.try_emplace(labels[i], static_cast<int>(remap.size()));
    out.kept.push_back(static_cast<Index>(i));
    out.pseudo.push_back(it->second);
  }
  if (out.kept.empty()) throw EmptyCleanSet("every sample was labeled as noise");
  out.num_classes = static_cast<int>(remap.size());
  return out;
}

namespace {

double choose2(double x) { return x * (x - 1.0) / 2.0; }

}  // namespace

ClusterQuality cluster_quality(const LabelList& labels, const LabelList& truth) {
  if (labels.size() != truth.size()) throw ShapeError("cluster_quality: label/truth size mismatch");
  std::map<std::pair<int, int>, double> table;
  std::map<int, double> rows, cols;
  double n = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0) continue;
    table[{labels[i], truth[i]}] += 1;
    rows[labels[i]] += 1;
    cols[truth[i]] += 1;
    n += 1;
  }
  ClusterQuality q;
  if (n == 0) return q;

  std::map<int, double> best_in_cluster;
  for (const auto& [key, count] : table) best_in_cluster[key.first] = std::max(best_in_cluster[key.first], count);
  for (const auto& [c, count] : best_in_cluster) q.purity += count;
  q.purity /= n;

  double index = 0, sum_rows = 0, sum_cols = 0;
  for (const auto& [key, count] : table) index += choose2(count);
  for (const auto& [c, count] : rows) sum_rows += choose2(count);
  for (const auto& [c, count] : cols) sum_cols += choose2(count);
  const double total = choose2(n);
  const double expected = total > 0 ? sum_rows * sum_cols / total : 0.0;
  const double max_index = 0.5 * (sum_rows + sum_cols);
  if (max_index == expected) {
    // Both partitions trivial (all singletons or one block): ARI is 1 iff they agree.
    q.ari = (sum_rows == sum_cols) ? 1.0 : 0.0;
  } else {
    q.ari = (index - expected) / (max_index - expected);
  }
  return q;
}

}  // namespace mlc
