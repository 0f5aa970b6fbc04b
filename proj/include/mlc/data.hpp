#pragma once

#include "mlc/types.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

namespace mlc {

/// Unlabeled training data. Each row is its own hard label (`sample_ids[i] == i`);
/// `truth_ids` is populated only for synthetic or evaluation data.
struct Dataset {
  MatrixD inputs;
  IndexList sample_ids;
  LabelList camera_ids;
  std::optional<LabelList> truth_ids;

  Index size() const { return inputs.rows(); }
  Index dim() const { return inputs.cols(); }

  /// Throws DataError when the container invariants do not hold.
  void validate() const;
};

struct SynthConfig {
  int num_identities = 20;
  int samples_per_identity = 15;
  int input_dim = 32;
  double identity_sigma = 0.5;
  int num_cameras = 2;
  double camera_offset_scale = 0.5;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Gaussian identity blobs with a per-camera additive bias. Rows are grouped by
/// identity; the camera of the s-th sample of an identity is `s % num_cameras`.
Dataset generate_synthetic(const SynthConfig& cfg);

/// Splits off the last `per_identity` samples of every truth identity as a
/// query set. Both halves are re-indexed so that sample ids stay 0..N-1.
std::pair<Dataset, Dataset> split_holdout(const Dataset& data, int per_identity);

// EMB1 container: "EMB1", u32 rows, u32 cols, rows*cols little-endian f32.
void write_embeddings(const std::filesystem::path& path, const MatrixF& matrix);
MatrixF read_embeddings(const std::filesystem::path& path);

// EMD1 container: the EMB1 layout with an f64 payload, used for lossless state.
void write_embeddings_f64(const std::filesystem::path& path, const MatrixD& matrix);
MatrixD read_embeddings_f64(const std::filesystem::path& path);

struct ManifestRow {
  Index row = 0;
  int cam = 0;
  std::optional<int> truth_id;
};

void write_manifest(const std::filesystem::path& path, const std::vector<ManifestRow>& rows);
std::vector<ManifestRow> read_manifest(const std::filesystem::path& path);

/// A dataset directory holds `embeddings.emb` and `manifest.jsonl`.
void write_dataset(const std::filesystem::path& dir, const Dataset& data);
Dataset read_dataset(const std::filesystem::path& dir);

}  // namespace mlc
