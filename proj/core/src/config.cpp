#include "srouda/config.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

namespace srouda {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

}  // namespace

KeyValueConfig KeyValueConfig::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return from_string(ss.str());
}

KeyValueConfig KeyValueConfig::from_string(const std::string& text) {
  KeyValueConfig cfg;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(lineno) +
                        ": expected 'key = value'");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) {
      throw ConfigError("config line " + std::to_string(lineno) + ": empty key");
    }
    cfg.kv_[key] = value;
  }
  return cfg;
}

void KeyValueConfig::set(const std::string& key, const std::string& value) {
  kv_[key] = value;
}

bool KeyValueConfig::has(const std::string& key) const { return kv_.count(key) > 0; }

std::string KeyValueConfig::get_string(const std::string& key,
                                       const std::string& def) const {
  const auto it = kv_.find(key);
  return it == kv_.end() ? def : it->second;
}

double KeyValueConfig::get_double(const std::string& key, double def) const {
  const auto it = kv_.find(key);
  if (it == kv_.end()) return def;
  try {
    std::size_t pos = 0;
    const double v = std::stod(it->second, &pos);
    if (pos != it->second.size()) throw std::invalid_argument("");
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': expected a number, got '" +
                      it->second + "'");
  }
}

int KeyValueConfig::get_int(const std::string& key, int def) const {
  const auto it = kv_.find(key);
  if (it == kv_.end()) return def;
  try {
    std::size_t pos = 0;
    const int v = std::stoi(it->second, &pos);
    if (pos != it->second.size()) throw std::invalid_argument("");
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': expected an integer, got '" +
                      it->second + "'");
  }
}

bool KeyValueConfig::get_bool(const std::string& key, bool def) const {
  const auto it = kv_.find(key);
  if (it == kv_.end()) return def;
  if (it->second == "true" || it->second == "1") return true;
  if (it->second == "false" || it->second == "0") return false;
  throw ConfigError("config key '" + key + "': expected true/false");
}

std::vector<std::string> KeyValueConfig::get_list(
    const std::string& key, const std::vector<std::string>& def) const {
  const auto it = kv_.find(key);
  if (it == kv_.end()) return def;
  std::vector<std::string> out;
  std::string cur;
  for (char c : it->second) {
    if (c == ',') {
      if (const auto t = trim(cur); !t.empty()) out.push_back(t);
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (const auto t = trim(cur); !t.empty()) out.push_back(t);
  return out;
}

const std::vector<std::string> kSchemeNames = {"uda", "source-at", "at-uda",
                                               "uda-at", "srouda"};

void RunConfig::validate() const {
  if (std::find(kSchemeNames.begin(), kSchemeNames.end(), scheme) ==
      kSchemeNames.end()) {
    throw ConfigError("unknown scheme: " + scheme);
  }
  if (seeds.empty()) throw ConfigError("at least one seed is required");
  for (const auto& name : attack.suite) {
    if (!is_known_attack_name(name)) throw ConfigError("unknown attack name: " + name);
  }
  if (attack.epsilon_units != "auto" && attack.epsilon_units != "std" &&
      attack.epsilon_units != "raw") {
    throw ConfigError("attack.epsilon_units must be auto, std or raw");
  }
}

namespace {

const std::set<std::string> kKnownKeys = {
    "dataset.kind", "dataset.path", "dataset.n", "dataset.rotation_deg",
    "dataset.noise_sd", "dataset.dim", "dataset.mean_shift", "dataset.grid_h",
    "dataset.grid_w", "dataset.grid_c", "dataset.style_shift",
    "model.hidden", "model.activation",
    "mdd.gamma", "mdd.eta",
    "pretrain.epochs", "pretrain.lr", "pretrain.aux_lr", "pretrain.momentum",
    "pretrain.batch",
    "rma.enabled", "rma.mask_ratio",
    "selftrain.epochs", "selftrain.batch", "selftrain.lr", "selftrain.meta_lr",
    "selftrain.meta_mode", "selftrain.target_mode", "selftrain.teacher_period",
    "attack.epsilon", "attack.epsilon_units", "attack.train_k",
    "attack.alpha_ratio", "attack.random_start",
    "eval.attacks",
    "scheme", "seeds", "out",
};

}  // namespace

RunConfig parse_run_config(const KeyValueConfig& kv) {
  for (const auto& [key, value] : kv.entries()) {
    if (kKnownKeys.count(key) == 0) {
      throw ConfigError("unknown config key: " + key);
    }
  }

  RunConfig cfg;
  cfg.dataset.kind = kv.get_string("dataset.kind", cfg.dataset.kind);
  cfg.dataset.path = kv.get_string("dataset.path", cfg.dataset.path);
  cfg.dataset.n = kv.get_int("dataset.n", cfg.dataset.n);
  cfg.dataset.rotation_deg = kv.get_double("dataset.rotation_deg", cfg.dataset.rotation_deg);
  cfg.dataset.noise_sd = kv.get_double("dataset.noise_sd", cfg.dataset.noise_sd);
  cfg.dataset.dim = kv.get_int("dataset.dim", cfg.dataset.dim);
  cfg.dataset.mean_shift = kv.get_double("dataset.mean_shift", cfg.dataset.mean_shift);
  cfg.dataset.grid = GridShape{kv.get_int("dataset.grid_h", 8),
                               kv.get_int("dataset.grid_w", 8),
                               kv.get_int("dataset.grid_c", 1)};
  cfg.dataset.style_shift = kv.get_double("dataset.style_shift", cfg.dataset.style_shift);

  auto& mdd = cfg.scheme_cfg.mdd;
  std::vector<int> hidden;
  for (const auto& tok : kv.get_list("model.hidden", {"32", "32"})) {
    try {
      hidden.push_back(std::stoi(tok));
    } catch (const std::exception&) {
      throw ConfigError("model.hidden: expected a list of widths");
    }
  }
  mdd.hidden = hidden;
  try {
    mdd.act = activation_from_string(kv.get_string("model.activation", "tanh"));
  } catch (const ValidationError& e) {
    throw ConfigError(e.what());
  }
  mdd.gamma = kv.get_double("mdd.gamma", mdd.gamma);
  mdd.eta = kv.get_double("mdd.eta", mdd.eta);
  mdd.epochs = kv.get_int("pretrain.epochs", mdd.epochs);
  mdd.lr = kv.get_double("pretrain.lr", mdd.lr);
  mdd.aux_lr = kv.get_double("pretrain.aux_lr", mdd.lr);
  mdd.momentum = kv.get_double("pretrain.momentum", mdd.momentum);
  mdd.batch_size = kv.get_int("pretrain.batch", mdd.batch_size);
  mdd.rma_enabled = kv.get_bool("rma.enabled", mdd.rma_enabled);
  mdd.rma.mask_ratio = kv.get_double("rma.mask_ratio", mdd.rma.mask_ratio);
  if (cfg.dataset.kind == "grid") {
    mdd.grid = cfg.dataset.grid;
    mdd.clip_range = std::make_pair(0.0, 1.0);
  }

  auto& st = cfg.scheme_cfg.st;
  st.epochs = kv.get_int("selftrain.epochs", st.epochs);
  st.batch_size = kv.get_int("selftrain.batch", st.batch_size);
  st.student_lr = kv.get_double("selftrain.lr", st.student_lr);
  st.meta_lr = kv.get_double("selftrain.meta_lr", st.meta_lr);
  try {
    st.meta_mode =
        meta_mode_from_string(kv.get_string("selftrain.meta_mode", "unrolled"));
    st.target_mode =
        target_mode_from_string(kv.get_string("selftrain.target_mode", "soft"));
  } catch (const ValidationError& e) {
    throw ConfigError(e.what());
  }
  st.teacher_period = kv.get_int("selftrain.teacher_period", st.teacher_period);

  const bool is_grid = cfg.dataset.kind == "grid";
  cfg.attack.epsilon = kv.get_double("attack.epsilon", is_grid ? 8.0 / 255.0 : 0.1);
  cfg.attack.epsilon_units = kv.get_string("attack.epsilon_units", "auto");
  cfg.attack.train_k = kv.get_int("attack.train_k", cfg.attack.train_k);
  cfg.attack.alpha_ratio = kv.get_double("attack.alpha_ratio", cfg.attack.alpha_ratio);
  cfg.attack.random_start = kv.get_bool("attack.random_start", cfg.attack.random_start);
  cfg.attack.suite = kv.get_list("eval.attacks", cfg.attack.suite);

  cfg.scheme = kv.get_string("scheme", cfg.scheme);
  cfg.out_dir = kv.get_string("out", cfg.out_dir);
  cfg.seeds.clear();
  for (const auto& tok : kv.get_list("seeds", {"1"})) {
    try {
      cfg.seeds.push_back(std::stoull(tok));
    } catch (const std::exception&) {
      throw ConfigError("seeds: expected a list of integers");
    }
  }

  cfg.validate();
  return cfg;
}

DomainPair build_dataset(const DatasetSpec& spec, std::uint64_t seed) {
  Rng rng(seed, "dataset");
  if (spec.kind == "two-moons") {
    return gen_two_moons_shift(spec.n, spec.rotation_deg, spec.noise_sd, rng);
  }
  if (spec.kind == "gaussian") {
    return gen_gaussian_shift(spec.n, spec.dim, spec.mean_shift, rng);
  }
  if (spec.kind == "grid") {
    return gen_grid_shift(spec.n, spec.grid, spec.style_shift, rng);
  }
  if (spec.kind == "file") {
    if (spec.path.empty()) throw ConfigError("dataset.kind=file requires dataset.path");
    return load_dataset(spec.path);
  }
  throw ConfigError("unknown dataset kind: " + spec.kind);
}

MaterializedAttacks materialize_attacks(const RunConfig& cfg, const DatasetMeta& meta) {
  const bool raw = cfg.attack.epsilon_units == "raw" ||
                   (cfg.attack.epsilon_units == "auto" && meta.grid.has_value());
  MaterializedAttacks out;
  out.epsilon_raw = raw ? cfg.attack.epsilon : cfg.attack.epsilon * meta.input_scale;

  out.train = AttackBudget::pgd_budget(out.epsilon_raw, cfg.attack.train_k,
                                       cfg.attack.alpha_ratio);
  out.train.clip_range = meta.clip_range;
  out.train.random_start = cfg.attack.random_start;

  for (const auto& name : cfg.attack.suite) {
    out.suite.attacks.emplace_back(
        name, budget_from_name(name, out.epsilon_raw, meta.clip_range,
                               cfg.attack.alpha_ratio));
  }
  out.suite.primary = "pgd20";
  bool has_primary = false;
  for (const auto& [name, b] : out.suite.attacks) {
    if (name == out.suite.primary) has_primary = true;
  }
  if (!has_primary && !out.suite.attacks.empty()) {
    out.suite.primary = out.suite.attacks.front().first;
  }
  return out;
}

}  // namespace srouda
