#pragma once

// Checkpoint directory layout:
//   index.json   {"epoch", "rng", "has_head", "tensors": [{name, rows, cols, file, format}]}
//   config.txt   the training config in `key = value` form
//   *.emb        EMB1 (f32) exports of the extractor branches and memory bank
//   *.emd        EMD1 (f64) copies of all mutable state, used for exact resume

#include "mlc/extractor.hpp"

#include <filesystem>

namespace mlc {

/// Loads the extractor from a checkpoint, preferring the lossless copies.
ExtractorModel<double> load_model(const std::filesystem::path& dir);

}  // namespace mlc
