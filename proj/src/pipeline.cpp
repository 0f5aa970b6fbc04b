#include "mlc/pipeline.hpp"

#include "mlc/error.hpp"
#include "mlc/multilabel.hpp"
#include "mlc/objective.hpp"
#include "mlc/parallel.hpp"
#include "mlc/rerank.hpp"

#include "json.hpp"

#include <algorithm>
#include <fstream>
#include <iostream>
#include <numeric>

namespace mlc {

namespace fs = std::filesystem;
using nlohmann::json;

std::string to_string(Phase p) {
  switch (p) {
    case Phase::Warmup: return "WARMUP";
    case Phase::MultiLabel: return "ML";
    case Phase::Joint: return "JOINT";
  }
  return "UNKNOWN";
}

Phase phase(int epoch, const TrainConfig& cfg) {
  if (epoch < 0 || epoch >= cfg.total_epochs) throw ConfigError("epoch outside the schedule");
  if (epoch < cfg.warmup_epochs) return Phase::Warmup;
  if (epoch < cfg.joint_start_epoch) return Phase::MultiLabel;
  return Phase::Joint;
}

namespace {

template <typename T>
json optional_json(const std::optional<T>& v) {
  return v ? json(*v) : json(nullptr);
}

MatrixD extract_rows(const ExtractorModel<double>& model, const MatrixD& inputs, int threads) {
  MatrixD out(inputs.rows(), model.output_dim());
  parallel_for(inputs.rows(), threads,
               [&](Index i) { out.row(i) = extract(model, inputs.row(i).transpose()).all.transpose(); });
  return out;
}

}  // namespace

std::string EpochLog::to_json() const {
  json j;
  j["epoch"] = epoch;
  j["phase"] = to_string(phase);
  j["loss_mmcl"] = loss_mmcl;
  j["loss_ce"] = optional_json(loss_ce);
  j["loss_tri"] = optional_json(loss_tri);
  j["alpha"] = alpha;
  j["C"] = optional_json(num_classes);
  j["noise_frac"] = optional_json(noise_frac);
  return j.dump();
}

std::string TrainMetrics::to_json() const {
  json j;
  j["epochs"] = epochs;
  j["loss_mmcl"] = loss_mmcl;
  j["loss_ce"] = optional_json(loss_ce);
  j["loss_tri"] = optional_json(loss_tri);
  j["C"] = num_classes;
  j["noise_frac"] = noise_frac;
  j["ari"] = optional_json(ari);
  j["purity"] = optional_json(purity);
  return j.dump(2);
}

LabelList cluster_features(const MatrixD& features, const TrainConfig& cfg) {
  if (cfg.cluster_method == ClusterMethod::KMeans) return kmeans(features, cfg.kmeans_k, cfg.seed).labels;
  const MatrixD dist = pairwise_euclidean(features);
  const auto rerank = jaccard_matrix(dist, cfg.rerank_params());
  return dbscan(rerank.mixed, cfg.eps_dbscan, cfg.K_sample);
}

Trainer::Trainer(TrainConfig cfg, Dataset data)
    : cfg_(std::move(cfg)),
      data_(std::move(data)),
      model_(),
      opt_(),
      bank_(1, 1),
      rng_(cfg_.seed) {
  cfg_.validate();
  data_.validate();
  model_ = ExtractorModel<double>::random(data_.dim(), cfg_.branch_dim, cfg_.seed);
  opt_ = OptimizerState<double>::for_model(model_, cfg_.sgd());
  bank_ = MemoryBank<double>(data_.size(), model_.output_dim());
  if (cfg_.bank_init == BankInit::Features) {
    const MatrixD f = features();
    for (Index i = 0; i < f.rows(); ++i) bank_.assign(i, f.row(i).transpose());
  }
  rng_.seed(cfg_.seed ^ 0x9E3779B97F4A7C15ULL);
}

MatrixD Trainer::features() const { return extract_rows(model_, data_.inputs, cfg_.threads); }

void Trainer::refresh_clusters(EpochLog& log) {
  pseudo_.reset();
  class_members_.clear();
  dense_labels_.clear();

  const LabelList labels = cluster_features(features(), cfg_);
  try {
    pseudo_ = select_clean(labels);
  } catch (const EmptyCleanSet&) {
    std::cerr << "warning: epoch " << epoch_ << ": clustering left no clean samples, skipping SC losses\n";
    log.num_classes = 0;
    log.noise_frac = 1.0;
    return;
  }
  log.num_classes = pseudo_->num_classes;
  log.noise_frac = 1.0 - static_cast<double>(pseudo_->kept.size()) / static_cast<double>(data_.size());
  dense_labels_ = pseudo_->dense_by_row();

  std::vector<IndexList> members(static_cast<std::size_t>(pseudo_->num_classes));
  for (std::size_t k = 0; k < pseudo_->kept.size(); ++k) members[pseudo_->pseudo[k]].push_back(pseudo_->kept[k]);
  for (auto& m : members)
    if (m.size() >= 2) class_members_.push_back(std::move(m));
  if (class_members_.size() < 2 || pseudo_->num_classes < 2) {
    std::cerr << "warning: epoch " << epoch_ << ": fewer than two usable clusters, skipping SC losses\n";
    class_members_.clear();
    return;
  }

  if (!head_ || head_->num_classes() != pseudo_->num_classes) {
    head_ = ClassifierHead<double>::random(pseudo_->num_classes, model_.output_dim(), cfg_.seed + 7919ULL * (epoch_ + 1));
    head_velocity_ = MatrixD::Zero(head_->weights.rows(), head_->weights.cols());
  }
}

std::vector<IndexList> Trainer::full_batches() {
  IndexList order(static_cast<std::size_t>(data_.size()));
  std::iota(order.begin(), order.end(), Index{0});
  std::shuffle(order.begin(), order.end(), rng_);
  std::vector<IndexList> out;
  for (std::size_t s = 0; s < order.size(); s += static_cast<std::size_t>(cfg_.batch_size)) {
    const auto e = std::min(order.size(), s + static_cast<std::size_t>(cfg_.batch_size));
    out.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(s), order.begin() + static_cast<std::ptrdiff_t>(e));
  }
  return out;
}

std::vector<IndexList> Trainer::pk_batches() {
  const std::size_t num_classes = class_members_.size();
  const std::size_t p = std::min<std::size_t>(static_cast<std::size_t>(cfg_.pk_identities), num_classes);
  const auto k = static_cast<std::size_t>(cfg_.pk_instances);
  std::size_t clean = 0;
  for (const auto& m : class_members_) clean += m.size();
  const std::size_t count = std::max<std::size_t>(1, (clean + p * k - 1) / (p * k));

  // Cycling shuffled queues over classes and over each class's members.
  IndexList class_queue;
  std::vector<IndexList> member_queue(num_classes);
  auto next_class = [&] {
    if (class_queue.empty()) {
      class_queue.resize(num_classes);
      std::iota(class_queue.begin(), class_queue.end(), Index{0});
      std::shuffle(class_queue.begin(), class_queue.end(), rng_);
    }
    const Index c = class_queue.back();
    class_queue.pop_back();
    return c;
  };
  auto next_member = [&](Index c) {
    IndexList& q = member_queue[static_cast<std::size_t>(c)];
    if (q.empty()) {
      q = class_members_[static_cast<std::size_t>(c)];
      std::shuffle(q.begin(), q.end(), rng_);
    }
    const Index m = q.back();
    q.pop_back();
    return m;
  };

  std::vector<IndexList> out;
  for (std::size_t b = 0; b < count; ++b) {
    IndexList batch;
    IndexList chosen;
    while (chosen.size() < p) {
      const Index c = next_class();
      if (std::find(chosen.begin(), chosen.end(), c) == chosen.end()) chosen.push_back(c);
    }
    for (Index c : chosen)
      for (std::size_t i = 0; i < k; ++i) batch.push_back(next_member(c));
    out.push_back(std::move(batch));
  }
  return out;
}

Trainer::BatchLoss Trainer::train_batch(const IndexList& rows, Phase ph, bool joint, double alpha) {
  const auto b = static_cast<Index>(rows.size());
  MatrixD inputs(b, data_.dim());
  for (Index k = 0; k < b; ++k) inputs.row(k) = data_.inputs.row(rows[k]);

  BatchTargets targets;
  targets.positives.resize(rows.size());
  targets.negatives.resize(rows.size());
  const MatrixD current = extract_rows(model_, inputs, cfg_.threads);
  parallel_for(b, cfg_.threads, [&](Index k) {
    const Index i = rows[k];
    IndexList pos{i};
    if (ph != Phase::Warmup && bank_.touched(i)) pos = cycle_consistent_positives(bank_, i, cfg_.t).positives;
    targets.negatives[k] = hard_negatives(bank_.similarity(current.row(k).transpose()), pos, cfg_.r);
    targets.positives[k] = std::move(pos);
  });
  if (joint) {
    for (Index i : rows) targets.pseudo_labels.push_back(dense_labels_[i]);
  }

  const auto res = batch_objective(model_, joint ? &*head_ : nullptr, bank_.features(), inputs, targets, cfg_.loss_weights());
  sgd_step(model_, res.model_grad, opt_);
  if (joint) sgd_update(head_->weights, *res.head_grad, head_velocity_, opt_.settings);

  for (Index k = 0; k < b; ++k) {
    if (observer_) {
      const MatrixD before = bank_.features();
      bank_.update(rows[k], res.features.row(k).transpose(), alpha);
      observer_(rows[k], before, bank_.features());
    } else {
      bank_.update(rows[k], res.features.row(k).transpose(), alpha);
    }
  }
  return {res.mmcl, res.ce, res.tri};
}

EpochLog Trainer::run_epoch() {
  if (finished()) throw ConfigError("training schedule already finished");
  EpochLog log;
  log.epoch = epoch_;
  log.phase = phase(epoch_, cfg_);
  log.alpha = alpha_schedule(epoch_, cfg_.total_epochs);
  opt_.settings.lr = step_decay_lr(cfg_.lr, epoch_, cfg_.total_epochs, cfg_.lr_decay_every);

  bool joint = false;
  if (log.phase == Phase::Joint && cfg_.cluster_method != ClusterMethod::None) {
    refresh_clusters(log);
    joint = !class_members_.empty();
  }

  // Full-dataset passes keep every sample in training; joint epochs interleave
  // clean-set PK batches evenly between them.
  struct Planned {
    double position;
    bool pk;
    IndexList rows;
  };
  std::vector<Planned> plan;
  auto full = full_batches();
  for (std::size_t j = 0; j < full.size(); ++j)
    plan.push_back({(static_cast<double>(j) + 0.5) / static_cast<double>(full.size()), false, std::move(full[j])});
  if (joint) {
    auto pk = pk_batches();
    for (std::size_t j = 0; j < pk.size(); ++j)
      plan.push_back({(static_cast<double>(j) + 0.5) / static_cast<double>(pk.size()), true, std::move(pk[j])});
  }
  std::stable_sort(plan.begin(), plan.end(), [](const Planned& a, const Planned& b) { return a.position < b.position; });

  double mmcl = 0, ce = 0, tri = 0;
  int pk_count = 0;
  for (const auto& step : plan) {
    const BatchLoss l = train_batch(step.rows, log.phase, step.pk, log.alpha);
    mmcl += l.mmcl;
    if (step.pk) {
      ce += l.ce;
      tri += l.tri;
      ++pk_count;
    }
  }
  log.loss_mmcl = mmcl / static_cast<double>(plan.size());
  if (pk_count > 0) {
    log.loss_ce = ce / pk_count;
    log.loss_tri = tri / pk_count;
  }
  ++epoch_;
  return log;
}

TrainResult run_train(const TrainConfig& cfg, const Dataset& data, const RunOptions& opts) {
  TrainConfig effective = cfg;
  if (opts.deterministic) effective.threads = 1;
  Trainer trainer = opts.resume_from ? Trainer::resume(*opts.resume_from, data) : Trainer(effective, data);

  std::ofstream log_file;
  if (opts.out_dir) {
    fs::create_directories(*opts.out_dir);
    log_file.open(*opts.out_dir / "epoch_log.jsonl", opts.resume_from ? std::ios::app : std::ios::trunc);
    if (!log_file) throw DataError("cannot open epoch log in " + opts.out_dir->string());
  }

  TrainResult result;
  while (!trainer.finished()) {
    EpochLog log = trainer.run_epoch();
    if (!std::isfinite(log.loss_mmcl)) throw NumericError("non-finite loss at epoch " + std::to_string(log.epoch));
    if (log_file.is_open()) log_file << log.to_json() << '\n' << std::flush;
    if (opts.out_dir && opts.checkpoint_every > 0 && trainer.next_epoch() % opts.checkpoint_every == 0 && !trainer.finished())
      trainer.save_checkpoint(*opts.out_dir / ("checkpoint_epoch" + std::to_string(trainer.next_epoch())));
    result.logs.push_back(std::move(log));
  }

  result.features = trainer.features();
  result.model = trainer.model();
  TrainMetrics& m = result.metrics;
  m.epochs = trainer.config().total_epochs;
  if (!result.logs.empty()) {
    m.loss_mmcl = result.logs.back().loss_mmcl;
    m.loss_ce = result.logs.back().loss_ce;
    m.loss_tri = result.logs.back().loss_tri;
  }
  result.labels = cluster_features(result.features, trainer.config());
  const LabelList& final_labels = result.labels;
  const auto kept = std::count_if(final_labels.begin(), final_labels.end(), [](int l) { return l >= 0; });
  m.noise_frac = 1.0 - static_cast<double>(kept) / static_cast<double>(final_labels.size());
  if (kept > 0) m.num_classes = select_clean(final_labels).num_classes;
  if (data.truth_ids) {
    const auto q = cluster_quality(final_labels, *data.truth_ids);
    m.ari = q.ari;
    m.purity = q.purity;
  }

  if (opts.out_dir) {
    std::ofstream(*opts.out_dir / "metrics.json") << m.to_json() << '\n';
    trainer.save_checkpoint(*opts.out_dir / "checkpoint");
    Dataset feats = data;
    feats.inputs = result.features;
    write_dataset(*opts.out_dir / "features", feats);
  }
  return result;
}

}  // namespace mlc
