// mlc: command-line front end.
//
//   mlc synth   --out DIR [--identities N --samples N --dim D --sigma S
//               --cameras C --camera-scale S --seed N --holdout K]
//   mlc train   --config PATH --data DIR --out DIR [--deterministic]
//               [--checkpoint-every N] [--resume CKPT]
//   mlc cluster --input DIR --out FILE [--config PATH]
//   mlc rerank  --input DIR --out FILE [--k1 N --k2 N --lambda-mix X]
//   mlc eval    --query DIR --gallery DIR [--model CKPT] [--out FILE]
//               [--keep-same-camera]

#include "mlc/checkpoint.hpp"
#include "mlc/config.hpp"
#include "mlc/data.hpp"
#include "mlc/error.hpp"
#include "mlc/evaluator.hpp"
#include "mlc/pipeline.hpp"
#include "mlc/rerank.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <fstream>
#include <iostream>

namespace fs = std::filesystem;

namespace {

mlc::EvalSet<double> load_eval_set(const fs::path& dir, const std::optional<mlc::ExtractorModel<double>>& model) {
  mlc::Dataset d = mlc::read_dataset(dir);
  if (!d.truth_ids) throw mlc::DataError(dir.string() + ": evaluation needs truth_id in the manifest");
  mlc::EvalSet<double> s;
  s.features = model ? mlc::extract_all(*model, d.inputs) : d.inputs;
  s.ids = *d.truth_ids;
  s.cams = d.camera_ids;
  return s;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-label learning guided self-paced clustering for unsupervised re-identification"};
  app.require_subcommand(1);

  mlc::SynthConfig synth_cfg;
  fs::path synth_out;
  int holdout = 0;
  auto* synth = app.add_subcommand("synth", "Generate a synthetic identity-blob dataset");
  synth->add_option("--out", synth_out, "Output dataset directory")->required();
  synth->add_option("--identities", synth_cfg.num_identities);
  synth->add_option("--samples", synth_cfg.samples_per_identity, "Samples per identity");
  synth->add_option("--dim", synth_cfg.input_dim);
  synth->add_option("--sigma", synth_cfg.identity_sigma);
  synth->add_option("--cameras", synth_cfg.num_cameras);
  synth->add_option("--camera-scale", synth_cfg.camera_offset_scale);
  synth->add_option("--seed", synth_cfg.seed);
  synth->add_option("--holdout", holdout, "Per-identity query samples; writes OUT/train and OUT/query");

  fs::path config_path, data_dir, train_out, resume_dir;
  bool deterministic = false;
  int checkpoint_every = 0;
  auto* train = app.add_subcommand("train", "Run the full training schedule");
  train->add_option("--config", config_path)->required()->check(CLI::ExistingFile);
  train->add_option("--data", data_dir)->required()->check(CLI::ExistingDirectory);
  train->add_option("--out", train_out)->required();
  train->add_flag("--deterministic", deterministic, "Single-threaded, bit-reproducible run");
  train->add_option("--checkpoint-every", checkpoint_every);
  train->add_option("--resume", resume_dir)->check(CLI::ExistingDirectory);

  fs::path cluster_in, cluster_out, cluster_cfg;
  auto* cluster = app.add_subcommand("cluster", "One-shot clustering of an embedding dataset");
  cluster->add_option("--input", cluster_in)->required()->check(CLI::ExistingDirectory);
  cluster->add_option("--out", cluster_out, "Pseudo-label JSONL")->required();
  cluster->add_option("--config", cluster_cfg, "Training config supplying K1/K2/K_sample/eps_dbscan/cluster_method");

  fs::path rerank_in, rerank_out;
  mlc::RerankParams rerank_params;
  auto* rerank = app.add_subcommand("rerank", "Emit the k-reciprocal Jaccard distance matrix");
  rerank->add_option("--input", rerank_in)->required()->check(CLI::ExistingDirectory);
  rerank->add_option("--out", rerank_out, "EMB1 output")->required();
  rerank->add_option("--k1", rerank_params.k1);
  rerank->add_option("--k2", rerank_params.k2);
  rerank->add_option("--lambda-mix", rerank_params.lambda_mix);

  fs::path query_dir, gallery_dir, model_dir, eval_out;
  bool keep_same_camera = false;
  auto* eval = app.add_subcommand("eval", "CMC / mAP retrieval metrics");
  eval->add_option("--query", query_dir)->required()->check(CLI::ExistingDirectory);
  eval->add_option("--gallery", gallery_dir)->required()->check(CLI::ExistingDirectory);
  eval->add_option("--model", model_dir, "Checkpoint to extract features with")->check(CLI::ExistingDirectory);
  eval->add_option("--out", eval_out, "Metrics JSON path (stdout when omitted)");
  eval->add_flag("--keep-same-camera", keep_same_camera, "Do not exclude same-camera matches");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*synth) {
      const mlc::Dataset d = mlc::generate_synthetic(synth_cfg);
      if (holdout > 0) {
        auto [train_set, query_set] = mlc::split_holdout(d, holdout);
        mlc::write_dataset(synth_out / "train", train_set);
        mlc::write_dataset(synth_out / "query", query_set);
      } else {
        mlc::write_dataset(synth_out, d);
      }
    } else if (*train) {
      const mlc::TrainConfig cfg = mlc::load_config(config_path);
      mlc::RunOptions opts;
      opts.out_dir = train_out;
      opts.deterministic = deterministic;
      opts.checkpoint_every = checkpoint_every;
      if (!resume_dir.empty()) opts.resume_from = resume_dir;
      const auto result = mlc::run_train(cfg, mlc::read_dataset(data_dir), opts);
      std::cout << result.metrics.to_json() << '\n';
    } else if (*cluster) {
      const mlc::TrainConfig cfg = cluster_cfg.empty() ? mlc::TrainConfig{} : mlc::load_config(cluster_cfg);
      const mlc::Dataset d = mlc::read_dataset(cluster_in);
      const mlc::LabelList labels = mlc::cluster_features(d.inputs, cfg);
      std::ofstream out(cluster_out);
      for (std::size_t i = 0; i < labels.size(); ++i)
        out << nlohmann::json{{"row", i}, {"label", labels[i]}}.dump() << '\n';
      if (d.truth_ids) {
        const auto q = mlc::cluster_quality(labels, *d.truth_ids);
        std::cerr << "ARI " << q.ari << "  purity " << q.purity << '\n';
      }
    } else if (*rerank) {
      const mlc::Dataset d = mlc::read_dataset(rerank_in);
      const auto r = mlc::jaccard_matrix(mlc::pairwise_euclidean(d.inputs), rerank_params);
      mlc::write_embeddings(rerank_out, r.mixed.cast<float>());
    } else if (*eval) {
      std::optional<mlc::ExtractorModel<double>> model;
      if (!model_dir.empty()) model = mlc::load_model(model_dir);
      mlc::EvalProtocol<double> p{load_eval_set(query_dir, model), load_eval_set(gallery_dir, model), !keep_same_camera};
      const auto m = mlc::cmc_map(p);
      const std::string text = nlohmann::json{{"rank1", m.rank1},
                                              {"rank5", m.rank5},
                                              {"rank10", m.rank10},
                                              {"mAP", m.mAP},
                                              {"skipped_queries", m.skipped_queries}}
                                   .dump(2);
      if (eval_out.empty()) std::cout << text << '\n';
      else std::ofstream(eval_out) << text << '\n';
    }
  } catch (const mlc::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
