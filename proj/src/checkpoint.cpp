#include "mlc/checkpoint.hpp"

#include "mlc/data.hpp"
#include "mlc/error.hpp"
#include "mlc/pipeline.hpp"

#include "json.hpp"

#include <fstream>
#include <sstream>

namespace mlc {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json tensor_entry(const std::string& name, const MatrixD& m, const std::string& file, const std::string& format) {
  return {{"name", name}, {"rows", m.rows()}, {"cols", m.cols()}, {"file", file}, {"format", format}};
}

json read_index(const fs::path& dir) {
  std::ifstream in(dir / "index.json");
  if (!in) throw FormatError("missing index.json in " + dir.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw FormatError("bad index.json in " + dir.string() + ": " + e.what());
  }
}

MatrixD read_tensor(const fs::path& dir, const json& index, const std::string& name) {
  const json* lossy = nullptr;
  for (const auto& t : index.at("tensors")) {
    if (t.at("name") != name) continue;
    MatrixD m;
    if (t.at("format") == "EMD1") {
      m = read_embeddings_f64(dir / t.at("file").get<std::string>());
    } else {
      lossy = &t;
      continue;
    }
    if (m.rows() != t.at("rows").get<Index>() || m.cols() != t.at("cols").get<Index>())
      throw FormatError("tensor " + name + " does not match its index entry");
    return m;
  }
  if (lossy) return read_embeddings(dir / lossy->at("file").get<std::string>()).cast<double>();
  throw FormatError("checkpoint has no tensor named " + name);
}

}  // namespace

void Trainer::save_checkpoint(const fs::path& dir) const {
  fs::create_directories(dir);
  json tensors = json::array();
  auto exact = [&](const std::string& name, const MatrixD& m) {
    const std::string file = name + ".emd";
    write_embeddings_f64(dir / file, m);
    tensors.push_back(tensor_entry(name, m, file, "EMD1"));
  };
  auto exported = [&](const std::string& name, const MatrixD& m) {
    const std::string file = name + ".emb";
    write_embeddings(dir / file, m.cast<float>());
    tensors.push_back(tensor_entry(name, m, file, "EMB1"));
  };

  exported("model_global", model_.global);
  exported("model_upper", model_.upper);
  exported("model_lower", model_.lower);
  exact("model_global", model_.global);
  exact("model_upper", model_.upper);
  exact("model_lower", model_.lower);
  // The velocity and bank may be all-zero; EMD1 stores zeros fine.
  exact("velocity_global", opt_.velocity.global);
  exact("velocity_upper", opt_.velocity.upper);
  exact("velocity_lower", opt_.velocity.lower);
  exported("bank", bank_.features());
  exact("bank", bank_.features());
  if (head_) {
    exact("head", head_->weights);
    exact("head_velocity", head_velocity_);
  }

  std::ostringstream rng_state;
  rng_state << rng_;
  json index = {{"epoch", epoch_}, {"rng", rng_state.str()}, {"has_head", head_.has_value()}, {"tensors", tensors}};
  std::ofstream(dir / "index.json") << index.dump(2) << '\n';
  std::ofstream(dir / "config.txt") << to_config_text(cfg_);
}

Trainer Trainer::resume(const fs::path& dir, Dataset data) {
  const json index = read_index(dir);
  Trainer t(load_config(dir / "config.txt"), std::move(data));
  t.model_.global = read_tensor(dir, index, "model_global");
  t.model_.upper = read_tensor(dir, index, "model_upper");
  t.model_.lower = read_tensor(dir, index, "model_lower");
  t.model_.validate();
  if (t.model_.input_dim() != t.data_.dim()) throw ShapeError("checkpoint model does not match the dataset dimension");
  t.opt_.velocity.global = read_tensor(dir, index, "velocity_global");
  t.opt_.velocity.upper = read_tensor(dir, index, "velocity_upper");
  t.opt_.velocity.lower = read_tensor(dir, index, "velocity_lower");
  MatrixD bank = read_tensor(dir, index, "bank");
  if (bank.rows() != t.data_.size()) throw ShapeError("checkpoint bank does not match the dataset size");
  t.bank_ = MemoryBank<double>(std::move(bank));
  if (index.at("has_head").get<bool>()) {
    t.head_ = ClassifierHead<double>{read_tensor(dir, index, "head")};
    t.head_velocity_ = read_tensor(dir, index, "head_velocity");
  }
  std::istringstream rng_state(index.at("rng").get<std::string>());
  rng_state >> t.rng_;
  t.epoch_ = index.at("epoch").get<int>();
  return t;
}

ExtractorModel<double> load_model(const fs::path& dir) {
  const json index = read_index(dir);
  ExtractorModel<double> m{read_tensor(dir, index, "model_global"), read_tensor(dir, index, "model_upper"),
                           read_tensor(dir, index, "model_lower")};
  m.validate();
  return m;
}

}  // namespace mlc
