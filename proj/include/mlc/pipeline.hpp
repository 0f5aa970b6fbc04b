#pragma once

#include "mlc/clusterer.hpp"
#include "mlc/config.hpp"
#include "mlc/data.hpp"
#include "mlc/extractor.hpp"
#include "mlc/losses.hpp"
#include "mlc/memory_bank.hpp"

#include <filesystem>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace mlc {

enum class Phase { Warmup, MultiLabel, Joint };

std::string to_string(Phase p);

/// Warm-up for [0, warmup), multi-label for [warmup, joint_start), joint after.
Phase phase(int epoch, const TrainConfig& cfg);

struct EpochLog {
  int epoch = 0;
  Phase phase = Phase::Warmup;
  double loss_mmcl = 0.0;
  std::optional<double> loss_ce;
  std::optional<double> loss_tri;
  double alpha = 0.0;
  std::optional<int> num_classes;
  std::optional<double> noise_frac;

  std::string to_json() const;
};

/// Clusters f_all rows with the configured method (k-reciprocal Jaccard +
/// DBSCAN, or k-means on the raw features). `None` falls back to DBSCAN.
LabelList cluster_features(const MatrixD& features, const TrainConfig& cfg);

/// Called around every memory write with the bank before and after.
using BankObserver = std::function<void(Index row, const MatrixD& before, const MatrixD& after)>;

class Trainer {
 public:
  Trainer(TrainConfig cfg, Dataset data);

  /// Runs the next epoch according to the schedule.
  EpochLog run_epoch();

  int next_epoch() const { return epoch_; }
  bool finished() const { return epoch_ >= cfg_.total_epochs; }

  const TrainConfig& config() const { return cfg_; }
  const Dataset& data() const { return data_; }
  const ExtractorModel<double>& model() const { return model_; }
  const MemoryBank<double>& bank() const { return bank_; }
  const std::optional<ClassifierHead<double>>& head() const { return head_; }
  const std::optional<PseudoLabeling>& pseudo_labels() const { return pseudo_; }

  void set_bank_observer(BankObserver obs) { observer_ = std::move(obs); }

  /// f_all of every training row under the current model.
  MatrixD features() const;

  void save_checkpoint(const std::filesystem::path& dir) const;
  static Trainer resume(const std::filesystem::path& dir, Dataset data);

 private:
  struct BatchLoss {
    double mmcl = 0.0;
    double ce = 0.0;
    double tri = 0.0;
  };

  void refresh_clusters(EpochLog& log);
  std::vector<IndexList> full_batches();
  std::vector<IndexList> pk_batches();
  BatchLoss train_batch(const IndexList& rows, Phase ph, bool joint, double alpha);

  TrainConfig cfg_;
  Dataset data_;
  ExtractorModel<double> model_;
  OptimizerState<double> opt_;
  MemoryBank<double> bank_;
  std::optional<ClassifierHead<double>> head_;
  Matrix<double> head_velocity_;
  std::optional<PseudoLabeling> pseudo_;
  LabelList dense_labels_;
  std::vector<IndexList> class_members_;  // PK-eligible classes only
  std::mt19937_64 rng_;
  int epoch_ = 0;
  BankObserver observer_;
};

struct TrainMetrics {
  int epochs = 0;
  double loss_mmcl = 0.0;
  std::optional<double> loss_ce;
  std::optional<double> loss_tri;
  int num_classes = 0;
  double noise_frac = 0.0;
  std::optional<double> ari;
  std::optional<double> purity;

  std::string to_json() const;
};

struct TrainResult {
  std::vector<EpochLog> logs;
  TrainMetrics metrics;
  MatrixD features;  // final f_all of the training rows
  LabelList labels;  // clustering of `features` behind the reported metrics
  ExtractorModel<double> model;
};

struct RunOptions {
  std::optional<std::filesystem::path> out_dir;
  bool deterministic = false;
  int checkpoint_every = 0;
  std::optional<std::filesystem::path> resume_from;
};

/// Full schedule. With `out_dir` set, writes epoch_log.jsonl, metrics.json,
/// checkpoint/ and features/ under it.
TrainResult run_train(const TrainConfig& cfg, const Dataset& data, const RunOptions& opts = {});

}  // namespace mlc
