#include "mlc/data.hpp"

#include "mlc/error.hpp"

#include "json.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <random>
#include <string>

namespace mlc {

namespace fs = std::filesystem;
using nlohmann::json;

void Dataset::validate() const {
  const Index n = inputs.rows();
  if (n < 1) throw DataError("dataset is empty");
  if (static_cast<Index>(sample_ids.size()) != n || static_cast<Index>(camera_ids.size()) != n)
    throw DataError("dataset metadata does not match the number of rows");
  for (Index i = 0; i < n; ++i) {
    if (sample_ids[i] != i) throw DataError("sample ids must be exactly 0..N-1");
    if (camera_ids[i] < 0) throw DataError("camera ids must be non-negative");
  }
  if (truth_ids && static_cast<Index>(truth_ids->size()) != n)
    throw DataError("truth ids do not match the number of rows");
  if (!inputs.allFinite()) throw DataError("dataset contains non-finite values");
}

void SynthConfig::validate() const {
  if (num_identities < 1 || samples_per_identity < 1 || input_dim < 1 || num_cameras < 1)
    throw ConfigError("synthetic counts must be >= 1");
  if (!(identity_sigma >= 0.0) || !(camera_offset_scale >= 0.0))
    throw ConfigError("synthetic sigma and camera offset scale must be >= 0");
}

Dataset generate_synthetic(const SynthConfig& cfg) {
  cfg.validate();
  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  auto draw = [&](Index rows, Index cols) {
    MatrixD m(rows, cols);
    for (Index r = 0; r < rows; ++r)
      for (Index c = 0; c < cols; ++c) m(r, c) = normal(rng);
    return m;
  };

  const MatrixD centers = draw(cfg.num_identities, cfg.input_dim);
  const MatrixD camera_offsets = cfg.camera_offset_scale * draw(cfg.num_cameras, cfg.input_dim);

  const Index n = Index{cfg.num_identities} * cfg.samples_per_identity;
  Dataset data;
  data.inputs.resize(n, cfg.input_dim);
  data.sample_ids.resize(n);
  data.camera_ids.resize(n);
  data.truth_ids.emplace(n);
  Index row = 0;
  for (int id = 0; id < cfg.num_identities; ++id) {
    for (int s = 0; s < cfg.samples_per_identity; ++s, ++row) {
      const int cam = s % cfg.num_cameras;
      for (Index c = 0; c < cfg.input_dim; ++c) {
        // Always consume the draw so sigma does not change the stream layout.
        const double noise = normal(rng);
        data.inputs(row, c) = centers(id, c) + cfg.identity_sigma * noise + camera_offsets(cam, c);
      }
      data.sample_ids[row] = row;
      data.camera_ids[row] = cam;
      (*data.truth_ids)[row] = id;
    }
  }
  return data;
}

std::pair<Dataset, Dataset> split_holdout(const Dataset& data, int per_identity) {
  data.validate();
  if (!data.truth_ids) throw DataError("holdout split needs truth ids");
  if (per_identity < 1) throw ConfigError("holdout size must be >= 1");

  std::map<int, IndexList> by_id;
  for (Index i = 0; i < data.size(); ++i) by_id[(*data.truth_ids)[i]].push_back(i);

  std::vector<bool> is_query(data.size(), false);
  for (const auto& [id, rows] : by_id) {
    if (static_cast<int>(rows.size()) <= per_identity)
      throw DataError("identity " + std::to_string(id) + " has too few samples for the holdout");
    for (auto it = rows.end() - per_identity; it != rows.end(); ++it) is_query[*it] = true;
  }

  auto take = [&](bool query) {
    IndexList rows;
    for (Index i = 0; i < data.size(); ++i)
      if (is_query[i] == query) rows.push_back(i);
    Dataset out;
    out.inputs.resize(static_cast<Index>(rows.size()), data.dim());
    out.truth_ids.emplace();
    for (std::size_t k = 0; k < rows.size(); ++k) {
      out.inputs.row(static_cast<Index>(k)) = data.inputs.row(rows[k]);
      out.sample_ids.push_back(static_cast<Index>(k));
      out.camera_ids.push_back(data.camera_ids[rows[k]]);
      out.truth_ids->push_back((*data.truth_ids)[rows[k]]);
    }
    return out;
  };
  return {take(false), take(true)};
}

namespace {

constexpr std::array<char, 4> kMagicF32{'E', 'M', 'B', '1'};
constexpr std::array<char, 4> kMagicF64{'E', 'M', 'D', '1'};

template <typename T>
T to_little(T value) {
  if constexpr (std::endian::native == std::endian::big) {
    auto bytes = std::bit_cast<std::array<unsigned char, sizeof(T)>>(value);
    std::reverse(bytes.begin(), bytes.end());
    return std::bit_cast<T>(bytes);
  }
  return value;
}

template <typename T>
void put(std::ostream& out, T value) {
  value = to_little(value);
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
bool get(std::istream& in, T& value) {
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (in.gcount() != static_cast<std::streamsize>(sizeof(T))) return false;
  value = to_little(value);
  return true;
}

template <typename Scalar>
void write_container(const fs::path& path, const Matrix<Scalar>& m, const std::array<char, 4>& magic) {
  if (m.rows() < 1 || m.cols() < 1) throw DataError("refusing to write an empty matrix");
  if (!m.allFinite()) throw DataError("refusing to write non-finite values to " + path.string());
  if (m.rows() > 0xFFFFFFFFLL || m.cols() > 0xFFFFFFFFLL) throw DataError("matrix too large for container");
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot open " + path.string() + " for writing");
  out.write(magic.data(), 4);
  put(out, static_cast<std::uint32_t>(m.rows()));
  put(out, static_cast<std::uint32_t>(m.cols()));
  for (Index r = 0; r < m.rows(); ++r)
    for (Index c = 0; c < m.cols(); ++c) put(out, m(r, c));
  if (!out) throw DataError("write failed for " + path.string());
}

template <typename Scalar>
Matrix<Scalar> read_container(const fs::path& path, const std::array<char, 4>& magic) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  std::array<char, 4> got{};
  in.read(got.data(), 4);
  if (in.gcount() != 4 || got != magic) throw FormatError("bad magic in " + path.string());
  std::uint32_t rows = 0, cols = 0;
  if (!get(in, rows) || !get(in, cols)) throw FormatError("truncated header in " + path.string());
  if (rows == 0 || cols == 0) throw FormatError("zero dimension in " + path.string());
  const auto expected = 12 + std::uintmax_t{rows} * cols * sizeof(Scalar);
  if (fs::file_size(path) < expected)
    throw FormatError("body of " + path.string() + " is shorter than its header claims");

  Matrix<Scalar> m(rows, cols);
  for (Index r = 0; r < m.rows(); ++r)
    for (Index c = 0; c < m.cols(); ++c)
      if (!get(in, m(r, c)))
        throw FormatError("body of " + path.string() + " is shorter than its header claims");
  if (in.peek() != std::char_traits<char>::eof())
    throw FormatError("trailing bytes after body in " + path.string());
  if (!m.allFinite()) throw DataError("non-finite values in " + path.string());
  return m;
}

}  // namespace

void write_embeddings(const fs::path& path, const MatrixF& matrix) {
  write_container(path, matrix, kMagicF32);
}

MatrixF read_embeddings(const fs::path& path) { return read_container<float>(path, kMagicF32); }

void write_embeddings_f64(const fs::path& path, const MatrixD& matrix) {
  write_container(path, matrix, kMagicF64);
}

MatrixD read_embeddings_f64(const fs::path& path) { return read_container<double>(path, kMagicF64); }

void write_manifest(const fs::path& path, const std::vector<ManifestRow>& rows) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot open " + path.string() + " for writing");
  for (const auto& r : rows) {
    json j = {{"row", r.row}, {"cam", r.cam}, {"truth_id", nullptr}};
    if (r.truth_id) j["truth_id"] = *r.truth_id;
    out << j.dump() << '\n';
  }
}

std::vector<ManifestRow> read_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path.string());
  std::vector<ManifestRow> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const json j = json::parse(line);
      ManifestRow r;
      r.row = j.at("row").get<Index>();
      r.cam = j.at("cam").get<int>();
      if (j.contains("truth_id") && !j["truth_id"].is_null()) r.truth_id = j["truth_id"].get<int>();
      rows.push_back(r);
    } catch (const json::exception& e) {
      throw FormatError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return rows;
}

void write_dataset(const fs::path& dir, const Dataset& data) {
  data.validate();
  fs::create_directories(dir);
  write_embeddings(dir / "embeddings.emb", data.inputs.cast<float>());
  std::vector<ManifestRow> rows;
  for (Index i = 0; i < data.size(); ++i) {
    ManifestRow r{i, data.camera_ids[i], std::nullopt};
    if (data.truth_ids) r.truth_id = (*data.truth_ids)[i];
    rows.push_back(r);
  }
  write_manifest(dir / "manifest.jsonl", rows);
}

Dataset read_dataset(const fs::path& dir) {
  Dataset data;
  data.inputs = read_embeddings(dir / "embeddings.emb").cast<double>();
  const auto rows = read_manifest(dir / "manifest.jsonl");
  if (static_cast<Index>(rows.size()) != data.size())
    throw FormatError("manifest has " + std::to_string(rows.size()) + " rows, embeddings have " +
                      std::to_string(data.size()));
  const bool any_truth = std::any_of(rows.begin(), rows.end(), [](const auto& r) { return r.truth_id.has_value(); });
  if (any_truth) data.truth_ids.emplace();
  for (std::size_t k = 0; k < rows.size(); ++k) {
    if (rows[k].row != static_cast<Index>(k)) throw FormatError("manifest rows out of order");
    data.sample_ids.push_back(static_cast<Index>(k));
    data.camera_ids.push_back(rows[k].cam);
    if (any_truth) data.truth_ids->push_back(rows[k].truth_id.value_or(-1));
  }
  data.validate();
  return data;
}

}  // namespace mlc
