#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "srouda/data.hpp"
#include "srouda/selftrain.hpp"

namespace srouda {

/// Raised on unparseable or inconsistent run configuration.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Flat `key = value` configuration text; '#' starts a comment. Dotted
/// keys namespace the modules (mdd.eta, selftrain.lr, ...).
class KeyValueConfig {
 public:
  static KeyValueConfig from_file(const std::string& path);
  static KeyValueConfig from_string(const std::string& text);

  void set(const std::string& key, const std::string& value);
  bool has(const std::string& key) const;

  std::string get_string(const std::string& key, const std::string& def) const;
  double get_double(const std::string& key, double def) const;
  int get_int(const std::string& key, int def) const;
  bool get_bool(const std::string& key, bool def) const;
  std::vector<std::string> get_list(const std::string& key,
                                    const std::vector<std::string>& def) const;

  const std::map<std::string, std::string>& entries() const { return kv_; }

 private:
  std::map<std::string, std::string> kv_;
};

struct DatasetSpec {
  std::string kind = "two-moons";  // two-moons | gaussian | grid | file
  std::string path;
  int n = 2000;
  double rotation_deg = 45.0;
  double noise_sd = 0.1;
  int dim = 2;
  double mean_shift = 1.5;
  GridShape grid{8, 8, 1};
  double style_shift = 0.8;
};

struct AttackSettings {
  double epsilon = 0.1;        // interpreted per epsilon_units
  std::string epsilon_units = "auto";  // auto | std | raw
  int train_k = 10;
  double alpha_ratio = 0.25;   // alpha = epsilon * alpha_ratio
  bool random_start = false;
  std::vector<std::string> suite = {"pgd20", "fgsm", "cwinf"};
};

struct RunConfig {
  DatasetSpec dataset;
  std::string scheme = "srouda";
  std::vector<std::uint64_t> seeds = {1};
  std::string out_dir = "runs";
  SchemeConfig scheme_cfg;     // train budget filled in at materialization
  AttackSettings attack;

  void validate() const;
};

extern const std::vector<std::string> kSchemeNames;

/// Applies defaults and validates; unknown keys raise ConfigError.
RunConfig parse_run_config(const KeyValueConfig& kv);

DomainPair build_dataset(const DatasetSpec& spec, std::uint64_t seed);

struct MaterializedAttacks {
  AttackBudget train;
  EvalSuite suite;
  double epsilon_raw = 0.0;
};

/// Resolves epsilon to raw input units (scaling by the dataset's input
/// scale unless the units are raw) and builds the train / eval budgets.
MaterializedAttacks materialize_attacks(const RunConfig& cfg, const DatasetMeta& meta);

}  // namespace srouda
