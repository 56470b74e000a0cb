#include <cstdio>
#include <string>

#include <CLI11.hpp>

#include "srouda/experiment.hpp"

namespace {

// exit codes: 0 success, 2 config error, 3 divergence, 1 anything else
constexpr int kOk = 0;
constexpr int kOtherError = 1;
constexpr int kConfigError = 2;
constexpr int kDivergence = 3;

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"desk-scale lab for adversarially robust unsupervised domain adaptation"};
  app.require_subcommand(1);

  std::string config_path;
  std::string scheme;
  std::string out_dir;
  std::string attack_list;
  long long seed = -1;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "flat 'key = value' config file");
    sub->add_option("--scheme", scheme,
                    "one of: uda, source-at, at-uda, uda-at, srouda");
    sub->add_option("--seed", seed, "single seed, overrides the config seed list");
    sub->add_option("--out", out_dir, "output directory");
    sub->add_option("--attack", attack_list,
                    "evaluation attacks, e.g. pgd20,fgsm,cwinf");
  };

  CLI::App* run = app.add_subcommand("run", "run one scheme, write metrics + summary");
  add_common(run);
  CLI::App* cmp =
      app.add_subcommand("compare", "run all five schemes, write a comparison table");
  add_common(cmp);

  CLI::App* gen = app.add_subcommand("gen", "generate a dataset CSV");
  std::string gen_path;
  gen->add_option("--config", config_path, "flat 'key = value' config file");
  gen->add_option("--seed", seed, "generator seed");
  gen->add_option("--out", gen_path, "dataset CSV path")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    srouda::KeyValueConfig kv;
    if (!config_path.empty()) kv = srouda::KeyValueConfig::from_file(config_path);
    if (!scheme.empty()) kv.set("scheme", scheme);
    if (seed >= 0) kv.set("seeds", std::to_string(seed));
    if (!out_dir.empty()) kv.set("out", out_dir);
    if (!attack_list.empty()) kv.set("eval.attacks", attack_list);
    const srouda::RunConfig cfg = srouda::parse_run_config(kv);

    if (gen->parsed()) {
      const srouda::DomainPair pair =
          srouda::build_dataset(cfg.dataset, cfg.seeds.front());
      srouda::save_dataset(pair, gen_path);
      std::printf("wrote %s (%lld source, %lld target train, %lld target eval)\n",
                  gen_path.c_str(), static_cast<long long>(pair.source.size()),
                  static_cast<long long>(pair.target_train.rows()),
                  static_cast<long long>(pair.target_eval.size()));
      return kOk;
    }

    if (run->parsed()) {
      const srouda::ExperimentResult res = srouda::run_experiment(cfg);
      std::printf("scheme %s, %zu seed(s)\n", cfg.scheme.c_str(), cfg.seeds.size());
      for (const auto& row : res.summary) {
        std::printf("  %-22s %.4f +/- %.4f\n", row.metric.c_str(), row.mean, row.sd);
      }
      std::printf("metrics: %s\nsummary: %s\nmetadata: %s\n",
                  res.metrics_paths.empty() ? "-" : res.metrics_paths.front().c_str(),
                  res.summary_path.c_str(), res.metadata_path.c_str());
      return kOk;
    }

    const srouda::ComparisonResult res = srouda::compare_schemes(cfg);
    std::printf("%-10s %-10s", "scheme", "clean");
    for (const auto& name : cfg.attack.suite) std::printf(" %-10s", name.c_str());
    std::printf("\n");
    for (const auto& row : res.rows) {
      std::printf("%-10s %-10.4f", row.scheme.c_str(), row.clean_acc);
      for (const auto& [name, v] : row.robust) std::printf(" %-10.4f", v);
      std::printf("\n");
    }
    std::printf("table: %s\n", res.table_path.c_str());
    return kOk;
  } catch (const srouda::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kConfigError;
  } catch (const srouda::ValidationError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kConfigError;
  } catch (const srouda::DivergenceError& e) {
    std::fprintf(stderr, "divergence: %s\n", e.what());
    return kDivergence;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kOtherError;
  }
}
