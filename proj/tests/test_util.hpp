#pragma once

// Shared helpers for the test binaries: seeded generators, temp dirs, and a
// central finite-difference gradient checker.

#include "mlc/types.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <functional>
#include <random>
#include <string>

#include <unistd.h>

namespace mlc::test {

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  double normal() { return normal_(gen_); }
  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(gen_); }
  long uniform_int(long lo, long hi) { return std::uniform_int_distribution<long>(lo, hi)(gen_); }

  MatrixD normal_matrix(Index rows, Index cols) {
    MatrixD m(rows, cols);
    for (Index r = 0; r < rows; ++r)
      for (Index c = 0; c < cols; ++c) m(r, c) = normal();
    return m;
  }

  VectorD unit_vector(Index dim) {
    VectorD v(dim);
    for (Index i = 0; i < dim; ++i) v(i) = normal();
    return v / v.norm();
  }

  MatrixD unit_rows(Index rows, Index cols) {
    MatrixD m(rows, cols);
    for (Index r = 0; r < rows; ++r) m.row(r) = unit_vector(cols).transpose();
    return m;
  }

  std::mt19937_64& engine() { return gen_; }

 private:
  std::mt19937_64 gen_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

struct TempDir {
  std::filesystem::path path;
  TempDir() {
    static int counter = 0;
    path = std::filesystem::temp_directory_path() /
           ("mlc_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path);
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
};

/// Central-difference gradient of `loss` with respect to every entry of
/// `param`, which is perturbed in place and restored.
inline MatrixD numeric_gradient(MatrixD& param, const std::function<double()>& loss, double h = 1e-5) {
  MatrixD g(param.rows(), param.cols());
  for (Index r = 0; r < param.rows(); ++r)
    for (Index c = 0; c < param.cols(); ++c) {
      const double saved = param(r, c);
      param(r, c) = saved + h;
      const double up = loss();
      param(r, c) = saved - h;
      const double down = loss();
      param(r, c) = saved;
      g(r, c) = (up - down) / (2 * h);
    }
  return g;
}

/// Entry-wise relative error |a - n| / max(|a|, |n|, floor).
inline double max_relative_error(const MatrixD& analytic, const MatrixD& numeric, double floor = 1e-6) {
  double worst = 0.0;
  for (Index r = 0; r < analytic.rows(); ++r)
    for (Index c = 0; c < analytic.cols(); ++c) {
      const double a = analytic(r, c), n = numeric(r, c);
      const double scale = std::max({std::abs(a), std::abs(n), floor});
      worst = std::max(worst, std::abs(a - n) / scale);
    }
  return worst;
}

/// True when two labelings induce the same partition (noise must match exactly).
inline bool same_partition(const LabelList& a, const LabelList& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if ((a[i] < 0) != (b[i] < 0)) return false;
    for (std::size_t j = 0; j < a.size(); ++j) {
      if (a[i] < 0 || a[j] < 0) continue;
      if ((a[i] == a[j]) != (b[i] == b[j])) return false;
    }
  }
  return true;
}

}  // namespace mlc::test

using namespace mlc::test;
