#pragma once

#include "mlc/clusterer.hpp"
#include "mlc/extractor.hpp"
#include "mlc/losses.hpp"
#include "mlc/rerank.hpp"

#include <cstdint>
#include <filesystem>
#include <string>

namespace mlc {

enum class BankInit { Zeros, Features };

/// Every training hyperparameter. The config file is flat `key = value` text
/// whose keys are exactly these member names.
struct TrainConfig {
  int total_epochs = 60;
  int warmup_epochs = 5;
  int joint_start_epoch = 15;
  double lr = 0.1;
  double momentum = 0.9;
  double weight_decay = 5e-4;
  int lr_decay_every = 30;
  int batch_size = 128;
  double t = 0.6;  // similarity threshold for positive prediction
  double delta = 5.0;
  double r = 1.0;
  int K1 = 20;
  int K2 = 6;
  int K_sample = 4;
  double eps_dbscan = 0.6;
  double lambda1 = 0.3;
  double lambda2 = 1.0;
  double epsilon_smooth = 0.1;
  double margin = 0.0;
  ClusterMethod cluster_method = ClusterMethod::Dbscan;
  std::uint64_t seed = 0;

  int branch_dim = 32;
  int pk_identities = 8;
  int pk_instances = 4;
  int kmeans_k = 0;
  double lambda_mix = 0.0;
  BankInit bank_init = BankInit::Zeros;
  int threads = 1;

  void validate() const;

  /// Same config with the warm-up/ML/joint lengths rescaled from the 5:10:45
  /// split of a 60-epoch run (rounded down, at least one epoch per phase).
  TrainConfig scaled_to(int epochs) const;

  LossWeights loss_weights() const { return {lambda1, lambda2, epsilon_smooth, margin, delta, r}; }
  RerankParams rerank_params() const { return {K1, K2, lambda_mix}; }
  ClusterParams cluster_params() const { return {eps_dbscan, K_sample, cluster_method, kmeans_k, seed}; }
  SgdSettings<double> sgd() const { return {lr, momentum, weight_decay}; }
};

TrainConfig parse_config(const std::string& text);
TrainConfig load_config(const std::filesystem::path& path);
std::string to_config_text(const TrainConfig& cfg);

}  // namespace mlc
