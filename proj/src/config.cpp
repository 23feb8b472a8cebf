#include "masstool/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "masstool/errors.hpp"
#include "masstool/rng.hpp"

namespace masstool {

namespace {

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

double parse_double(const std::string& v, const std::string& key) {
  try {
    std::size_t pos = 0;
    double d = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    raise(Errc::config_error, "config key '" + key + "': invalid number '" + v + "'");
  }
}

std::int64_t parse_int(const std::string& v, const std::string& key) {
  std::int64_t out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size())
    raise(Errc::config_error, "config key '" + key + "': invalid integer '" + v + "'");
  return out;
}

bool parse_bool(const std::string& v, const std::string& key) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  raise(Errc::config_error, "config key '" + key + "': invalid boolean '" + v + "'");
}

std::string bool_str(bool b) { return b ? "true" : "false"; }

std::string double_str(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

void TrainConfig::validate() const {
  if (lr <= 0.0) raise(Errc::config_error, "lr must be positive");
  if (batch_size < 1) raise(Errc::config_error, "batch_size must be >= 1");
  if (epochs < 0) raise(Errc::config_error, "epochs must be >= 0");
  if (lambda < 0.0 || beta < 0.0) raise(Errc::config_error, "loss weights must be >= 0");
  if (tau <= 0.0) raise(Errc::config_error, "tau must be positive");
  if (slate_size < 2) raise(Errc::config_error, "slate_size must be >= 2");
  if (knn_k < 1) raise(Errc::config_error, "knn_k must be >= 1");
  if (epsilon < 0.0 || epsilon > 1.0) raise(Errc::config_error, "epsilon must lie in [0, 1]");
  if (gcn_layers < 0) raise(Errc::config_error, "gcn_layers must be >= 0");
  if (decision_threshold < 0.0 || decision_threshold > 1.0)
    raise(Errc::config_error, "decision_threshold must lie in [0, 1]");
  if (hidden_dim < 0) raise(Errc::config_error, "hidden_dim must be >= 0");
  if (patience < 0) raise(Errc::config_error, "patience must be >= 0");
}

std::string TrainConfig::to_text() const {
  std::ostringstream os;
  os << "lr = " << double_str(lr) << "\n";
  os << "batch_size = " << batch_size << "\n";
  os << "epochs = " << epochs << "\n";
  os << "lambda = " << double_str(lambda) << "\n";
  os << "beta = " << double_str(beta) << "\n";
  os << "tau = " << double_str(tau) << "\n";
  os << "slate_size = " << slate_size << "\n";
  os << "knn_k = " << knn_k << "\n";
  os << "epsilon = " << double_str(epsilon) << "\n";
  os << "gcn_layers = " << gcn_layers << "\n";
  os << "transfer_fn = " << to_string(transfer_fn) << "\n";
  os << "decision_threshold = " << double_str(decision_threshold) << "\n";
  os << "hidden_dim = " << hidden_dim << "\n";
  os << "trainable_embeddings = " << bool_str(trainable_embeddings) << "\n";
  os << "no_adakt = " << bool_str(ablation.no_adakt) << "\n";
  os << "no_suim = " << bool_str(ablation.no_suim) << "\n";
  os << "no_dynamic_filter = " << bool_str(ablation.no_dynamic_filter) << "\n";
  os << "no_contrastive = " << bool_str(ablation.no_contrastive) << "\n";
  os << "patience = " << patience << "\n";
  os << "seed = " << seed << "\n";
  return os.str();
}

TrainConfig TrainConfig::parse(const std::string& text) {
  TrainConfig cfg;
  std::istringstream is(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    auto eq = t.find('=');
    if (eq == std::string::npos)
      raise(Errc::config_error, "config line " + std::to_string(lineno) + ": expected key = value");
    std::string key = trim(t.substr(0, eq));
    std::string val = trim(t.substr(eq + 1));
    if (key == "lr") cfg.lr = parse_double(val, key);
    else if (key == "batch_size") cfg.batch_size = static_cast<int>(parse_int(val, key));
    else if (key == "epochs") cfg.epochs = static_cast<int>(parse_int(val, key));
    else if (key == "lambda") cfg.lambda = parse_double(val, key);
    else if (key == "beta") cfg.beta = parse_double(val, key);
    else if (key == "tau") cfg.tau = parse_double(val, key);
    else if (key == "slate_size") cfg.slate_size = static_cast<int>(parse_int(val, key));
    else if (key == "knn_k") cfg.knn_k = static_cast<int>(parse_int(val, key));
    else if (key == "epsilon") cfg.epsilon = parse_double(val, key);
    else if (key == "gcn_layers") cfg.gcn_layers = static_cast<int>(parse_int(val, key));
    else if (key == "transfer_fn") cfg.transfer_fn = transfer_kind_from_string(val);
    else if (key == "decision_threshold") cfg.decision_threshold = parse_double(val, key);
    else if (key == "hidden_dim") cfg.hidden_dim = static_cast<int>(parse_int(val, key));
    else if (key == "trainable_embeddings") cfg.trainable_embeddings = parse_bool(val, key);
    else if (key == "no_adakt") cfg.ablation.no_adakt = parse_bool(val, key);
    else if (key == "no_suim") cfg.ablation.no_suim = parse_bool(val, key);
    else if (key == "no_dynamic_filter") cfg.ablation.no_dynamic_filter = parse_bool(val, key);
    else if (key == "no_contrastive") cfg.ablation.no_contrastive = parse_bool(val, key);
    else if (key == "patience") cfg.patience = static_cast<int>(parse_int(val, key));
    else if (key == "seed") cfg.seed = static_cast<std::uint64_t>(parse_int(val, key));
    else raise(Errc::config_error, "unknown config key '" + key + "'");
  }
  cfg.validate();
  return cfg;
}

TrainConfig TrainConfig::from_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) raise(Errc::io_error, "cannot open config " + path);
  std::ostringstream os;
  os << f.rdbuf();
  return parse(os.str());
}

std::string config_hash(const TrainConfig& cfg) {
  std::uint64_t h = fnv1a64(cfg.to_text());
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return std::string(buf);
}

}  // namespace masstool
