#include "mlc/config.hpp"

#include "mlc/error.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

namespace mlc {

void TrainConfig::validate() const {
  if (warmup_epochs < 1) throw ConfigError("warmup_epochs must be >= 1");
  if (!(warmup_epochs < joint_start_epoch && joint_start_epoch < total_epochs))
    throw ConfigError("schedule requires warmup_epochs < joint_start_epoch < total_epochs");
  if (lr_decay_every < 1) throw ConfigError("lr_decay_every must be >= 1");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (!(t > 0.0 && t <= 1.0)) throw ConfigError("t must lie in (0, 1]");
  if (branch_dim < 1) throw ConfigError("branch_dim must be >= 1");
  if (pk_identities < 2 || pk_instances < 2) throw ConfigError("PK sampling needs at least 2 identities x 2 instances");
  if (threads < 1) throw ConfigError("threads must be >= 1");
  sgd().validate();
  loss_weights().validate();
  rerank_params().validate();
  cluster_params().validate();
}

TrainConfig TrainConfig::scaled_to(int epochs) const {
  TrainConfig c = *this;
  c.total_epochs = epochs;
  c.warmup_epochs = std::max(1, 5 * epochs / 60);
  const int ml = std::max(1, 10 * epochs / 60);
  c.joint_start_epoch = c.warmup_epochs + ml;
  return c;
}

namespace {

struct Field {
  std::function<void(TrainConfig&, const std::string&)> set;
  std::function<std::string(const TrainConfig&)> get;
};

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
  T out{};
  const char* end = value.data() + value.size();
  auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc() || ptr != end) throw ConfigError("invalid value '" + value + "' for " + key);
  return out;
}

std::string format_double(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

template <typename T>
Field number_field(T TrainConfig::*member, const std::string& key) {
  Field f;
  f.set = [member, key](TrainConfig& c, const std::string& v) { c.*member = parse_number<T>(key, v); };
  f.get = [member](const TrainConfig& c) {
    if constexpr (std::is_floating_point_v<T>) return format_double(c.*member);
    else return std::to_string(c.*member);
  };
  return f;
}

const std::vector<std::pair<std::string, Field>>& fields() {
  static const std::vector<std::pair<std::string, Field>> table = [] {
    std::vector<std::pair<std::string, Field>> t;
#define MLC_NUM(name) t.emplace_back(#name, number_field(&TrainConfig::name, #name))
    MLC_NUM(total_epochs);
    MLC_NUM(warmup_epochs);
    MLC_NUM(joint_start_epoch);
    MLC_NUM(lr);
    MLC_NUM(momentum);
    MLC_NUM(weight_decay);
    MLC_NUM(lr_decay_every);
    MLC_NUM(batch_size);
    MLC_NUM(t);
    MLC_NUM(delta);
    MLC_NUM(r);
    MLC_NUM(K1);
    MLC_NUM(K2);
    MLC_NUM(K_sample);
    MLC_NUM(eps_dbscan);
    MLC_NUM(lambda1);
    MLC_NUM(lambda2);
    MLC_NUM(epsilon_smooth);
    MLC_NUM(margin);
    t.emplace_back("cluster_method",
                   Field{[](TrainConfig& c, const std::string& v) { c.cluster_method = parse_cluster_method(v); },
                         [](const TrainConfig& c) { return to_string(c.cluster_method); }});
    MLC_NUM(seed);
    MLC_NUM(branch_dim);
    MLC_NUM(pk_identities);
    MLC_NUM(pk_instances);
    MLC_NUM(kmeans_k);
    MLC_NUM(lambda_mix);
    t.emplace_back("bank_init", Field{[](TrainConfig& c, const std::string& v) {
                                        if (v == "zeros") c.bank_init = BankInit::Zeros;
                                        else if (v == "features") c.bank_init = BankInit::Features;
                                        else throw ConfigError("bank_init must be 'zeros' or 'features'");
                                      },
                                      [](const TrainConfig& c) {
                                        return std::string(c.bank_init == BankInit::Zeros ? "zeros" : "features");
                                      }});
    MLC_NUM(threads);
#undef MLC_NUM
    return t;
  }();
  return table;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

TrainConfig parse_config(const std::string& text) {
  TrainConfig cfg;
  std::istringstream in(text);
  std::string line;
  std::set<std::string> seen;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const auto& table = fields();
    auto it = std::find_if(table.begin(), table.end(), [&](const auto& f) { return f.first == key; });
    if (it == table.end()) throw ConfigError("unknown config key '" + key + "'");
    if (!seen.insert(key).second) throw ConfigError("duplicate config key '" + key + "'");
    it->second.set(cfg, value);
  }
  cfg.validate();
  return cfg;
}

TrainConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string to_config_text(const TrainConfig& cfg) {
  std::string out;
  for (const auto& [key, field] : fields()) out += key + " = " + field.get(cfg) + "\n";
  return out;
}

}  // namespace mlc
