#include "srouda/experiment.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <sstream>

namespace srouda {

namespace {

std::string fmt_acc(double v) {
  if (std::isnan(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4f", v);
  return buf;
}

std::string fmt_val(double v) {
  if (std::isnan(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

double robust_or_nan(const MetricsRecord& rec, const std::string& name) {
  const auto it = rec.robust_acc.find(name);
  return it == rec.robust_acc.end() ? std::numeric_limits<double>::quiet_NaN()
                                    : it->second;
}

struct MeanSd {
  double mean = 0.0;
  double sd = 0.0;
};

MeanSd mean_sd(const std::vector<double>& xs) {
  MeanSd out;
  if (xs.empty()) return out;
  double s = 0.0;
  for (double x : xs) s += x;
  out.mean = s / static_cast<double>(xs.size());
  if (xs.size() > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - out.mean) * (x - out.mean);
    out.sd = std::sqrt(ss / static_cast<double>(xs.size() - 1));
  }
  return out;
}

void write_metadata(const std::string& path, const RunConfig& cfg,
                    const std::vector<double>& eps_raw_per_seed) {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (f == nullptr) throw std::runtime_error("cannot write metadata file: " + path);
  auto put = [&](const std::string& k, const std::string& v) {
    std::fprintf(f, "%s = %s\n", k.c_str(), v.c_str());
  };
  auto putd = [&](const std::string& k, double v) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    put(k, buf);
  };

  put("scheme", cfg.scheme);
  {
    std::ostringstream ss;
    for (std::size_t i = 0; i < cfg.seeds.size(); ++i) {
      if (i) ss << ",";
      ss << cfg.seeds[i];
    }
    put("seeds", ss.str());
  }
  put("dataset.kind", cfg.dataset.kind);
  if (!cfg.dataset.path.empty()) put("dataset.path", cfg.dataset.path);
  put("dataset.n", std::to_string(cfg.dataset.n));
  putd("dataset.rotation_deg", cfg.dataset.rotation_deg);
  putd("dataset.noise_sd", cfg.dataset.noise_sd);
  put("dataset.dim", std::to_string(cfg.dataset.dim));
  putd("dataset.mean_shift", cfg.dataset.mean_shift);
  put("dataset.grid_h", std::to_string(cfg.dataset.grid.h));
  put("dataset.grid_w", std::to_string(cfg.dataset.grid.w));
  put("dataset.grid_c", std::to_string(cfg.dataset.grid.c));
  putd("dataset.style_shift", cfg.dataset.style_shift);

  {
    std::ostringstream ss;
    for (std::size_t i = 0; i < cfg.scheme_cfg.mdd.hidden.size(); ++i) {
      if (i) ss << ",";
      ss << cfg.scheme_cfg.mdd.hidden[i];
    }
    put("model.hidden", ss.str());
  }
  put("model.activation", to_string(cfg.scheme_cfg.mdd.act));

  putd("mdd.gamma", cfg.scheme_cfg.mdd.gamma);
  putd("mdd.eta", cfg.scheme_cfg.mdd.eta);
  put("pretrain.epochs", std::to_string(cfg.scheme_cfg.mdd.epochs));
  putd("pretrain.lr", cfg.scheme_cfg.mdd.lr);
  putd("pretrain.aux_lr", cfg.scheme_cfg.mdd.aux_lr);
  putd("pretrain.momentum", cfg.scheme_cfg.mdd.momentum);
  put("pretrain.batch", std::to_string(cfg.scheme_cfg.mdd.batch_size));
  put("rma.enabled", cfg.scheme_cfg.mdd.rma_enabled ? "true" : "false");
  putd("rma.mask_ratio", cfg.scheme_cfg.mdd.rma.mask_ratio);

  put("selftrain.epochs", std::to_string(cfg.scheme_cfg.st.epochs));
  put("selftrain.batch", std::to_string(cfg.scheme_cfg.st.batch_size));
  putd("selftrain.lr", cfg.scheme_cfg.st.student_lr);
  putd("selftrain.adam_beta1", cfg.scheme_cfg.st.adam_beta1);
  putd("selftrain.adam_beta2", cfg.scheme_cfg.st.adam_beta2);
  putd("selftrain.meta_lr", cfg.scheme_cfg.st.meta_lr);
  put("selftrain.meta_mode", to_string(cfg.scheme_cfg.st.meta_mode));
  put("selftrain.target_mode", to_string(cfg.scheme_cfg.st.target_mode));
  put("selftrain.teacher_period", std::to_string(cfg.scheme_cfg.st.teacher_period));

  putd("attack.epsilon", cfg.attack.epsilon);
  put("attack.epsilon_units", cfg.attack.epsilon_units);
  put("attack.train_k", std::to_string(cfg.attack.train_k));
  putd("attack.alpha_ratio", cfg.attack.alpha_ratio);
  put("attack.random_start", cfg.attack.random_start ? "true" : "false");
  {
    std::ostringstream ss;
    for (std::size_t i = 0; i < cfg.attack.suite.size(); ++i) {
      if (i) ss << ",";
      ss << cfg.attack.suite[i];
    }
    put("eval.attacks", ss.str());
  }
  for (std::size_t i = 0; i < eps_raw_per_seed.size(); ++i) {
    putd("attack.epsilon_raw.seed" + std::to_string(cfg.seeds[i]),
         eps_raw_per_seed[i]);
  }
  std::fclose(f);
}

std::vector<SummaryRow> summarize(const std::string& scheme,
                                  const std::vector<std::vector<MetricsRecord>>& runs,
                                  const std::vector<std::string>& suite) {
  std::vector<SummaryRow> rows;
  auto add = [&](const std::string& metric, auto getter) {
    std::vector<double> xs;
    for (const auto& hist : runs) {
      if (!hist.empty()) xs.push_back(getter(hist.back()));
    }
    const MeanSd ms = mean_sd(xs);
    rows.push_back({scheme, metric, ms.mean, ms.sd});
  };
  add("clean_acc", [](const MetricsRecord& r) { return r.clean_acc; });
  for (const auto& name : suite) {
    add("robust_" + name,
        [&name](const MetricsRecord& r) { return robust_or_nan(r, name); });
  }
  add("pseudo_acc", [](const MetricsRecord& r) { return r.pseudo_acc; });
  add("at_loss", [](const MetricsRecord& r) { return r.at_loss; });
  add("meta_loss", [](const MetricsRecord& r) { return r.meta_loss; });
  add("feature_distance", [](const MetricsRecord& r) { return r.feature_distance; });
  return rows;
}

void write_summary(const std::string& path, const std::vector<SummaryRow>& rows) {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (f == nullptr) throw std::runtime_error("cannot write summary file: " + path);
  std::fprintf(f, "scheme,metric,mean,sd\n");
  for (const auto& r : rows) {
    std::fprintf(f, "%s,%s,%s,%s\n", r.scheme.c_str(), r.metric.c_str(),
                 fmt_val(r.mean).c_str(), fmt_val(r.sd).c_str());
  }
  std::fclose(f);
}

}  // namespace

std::string metrics_csv_path(const std::string& out_dir, const std::string& scheme,
                             std::uint64_t seed) {
  return out_dir + "/metrics_" + scheme + "_seed" + std::to_string(seed) + ".csv";
}

void write_metrics_csv(const std::string& path,
                       const std::vector<MetricsRecord>& history) {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (f == nullptr) throw std::runtime_error("cannot write metrics file: " + path);
  std::fprintf(f,
               "epoch,scheme,clean_acc,robust_pgd20,robust_fgsm,robust_cwinf,"
               "pseudo_acc,at_loss,meta_loss,feature_distance\n");
  for (const auto& rec : history) {
    std::fprintf(f, "%d,%s,%s,%s,%s,%s,%s,%s,%s,%s\n", rec.epoch,
                 rec.scheme.c_str(), fmt_acc(rec.clean_acc).c_str(),
                 fmt_acc(robust_or_nan(rec, "pgd20")).c_str(),
                 fmt_acc(robust_or_nan(rec, "fgsm")).c_str(),
                 fmt_acc(robust_or_nan(rec, "cwinf")).c_str(),
                 fmt_acc(rec.pseudo_acc).c_str(), fmt_val(rec.at_loss).c_str(),
                 fmt_val(rec.meta_loss).c_str(),
                 fmt_val(rec.feature_distance).c_str());
  }
  std::fclose(f);
}

SchemeResult run_scheme(const std::string& scheme, const DomainPair& data,
                        const SchemeConfig& cfg, std::uint64_t seed,
                        const EvalSuite& suite, const Model* pretrained) {
  Rng rng(seed, "run");
  if (scheme == "uda") return run_uda_baseline(data, cfg, rng, suite);
  if (scheme == "srouda") return run_srouda(data, cfg, rng, suite, pretrained);
  if (scheme == "uda-at") return run_uda_at(data, cfg, rng, suite, pretrained);
  if (scheme == "at-uda") return run_at_uda(data, cfg, rng, suite);
  if (scheme == "source-at") return run_source_only_at(data, cfg, rng, suite);
  throw ConfigError("unknown scheme: " + scheme);
}

ExperimentResult run_experiment(const RunConfig& cfg) {
  cfg.validate();
  std::filesystem::create_directories(cfg.out_dir);

  ExperimentResult result;
  std::vector<double> eps_raw_per_seed;
  for (const std::uint64_t seed : cfg.seeds) {
    const DomainPair data = build_dataset(cfg.dataset, seed);
    const MaterializedAttacks mat = materialize_attacks(cfg, data.meta);
    eps_raw_per_seed.push_back(mat.epsilon_raw);

    SchemeConfig sc = cfg.scheme_cfg;
    sc.st.train_budget = mat.train;
    const SchemeResult res = run_scheme(cfg.scheme, data, sc, seed, mat.suite);

    const std::string path = metrics_csv_path(cfg.out_dir, cfg.scheme, seed);
    write_metrics_csv(path, res.history);
    result.metrics_paths.push_back(path);
    result.per_seed.push_back(res.history);
  }

  result.summary = summarize(cfg.scheme, result.per_seed, cfg.attack.suite);
  result.summary_path = cfg.out_dir + "/summary_" + cfg.scheme + ".csv";
  write_summary(result.summary_path, result.summary);
  result.metadata_path = cfg.out_dir + "/run_meta_" + cfg.scheme + ".txt";
  write_metadata(result.metadata_path, cfg, eps_raw_per_seed);
  return result;
}

ComparisonResult compare_schemes(const RunConfig& cfg) {
  cfg.validate();
  std::filesystem::create_directories(cfg.out_dir);

  // per scheme, per seed, final-epoch record
  std::map<std::string, std::vector<MetricsRecord>> finals;
  std::vector<double> eps_raw_per_seed;

  for (const std::uint64_t seed : cfg.seeds) {
    const DomainPair data = build_dataset(cfg.dataset, seed);
    const MaterializedAttacks mat = materialize_attacks(cfg, data.meta);
    eps_raw_per_seed.push_back(mat.epsilon_raw);
    SchemeConfig sc = cfg.scheme_cfg;
    sc.st.train_budget = mat.train;

    // The natural-UDA run doubles as the shared pre-trained source model.
    const SchemeResult uda = run_scheme("uda", data, sc, seed, mat.suite);
    std::map<std::string, SchemeResult> results;
    results.emplace("uda", uda);
    results.emplace("source-at", run_scheme("source-at", data, sc, seed, mat.suite));
    results.emplace("at-uda", run_scheme("at-uda", data, sc, seed, mat.suite));
    results.emplace("uda-at",
                    run_scheme("uda-at", data, sc, seed, mat.suite, &uda.model));
    results.emplace("srouda",
                    run_scheme("srouda", data, sc, seed, mat.suite, &uda.model));

    for (const auto& [scheme, res] : results) {
      write_metrics_csv(metrics_csv_path(cfg.out_dir, scheme, seed), res.history);
      finals[scheme].push_back(res.history.back());
    }
  }

  ComparisonResult out;
  out.table_path = cfg.out_dir + "/comparison.csv";
  std::FILE* f = std::fopen(out.table_path.c_str(), "w");
  if (f == nullptr) {
    throw std::runtime_error("cannot write comparison table: " + out.table_path);
  }
  std::fprintf(f, "scheme,clean_acc");
  for (const auto& name : cfg.attack.suite) {
    std::fprintf(f, ",robust_%s", name.c_str());
  }
  std::fprintf(f, "\n");
  for (const auto& scheme : kSchemeNames) {
    ComparisonRow row;
    row.scheme = scheme;
    std::vector<double> cleans;
    for (const auto& rec : finals[scheme]) cleans.push_back(rec.clean_acc);
    row.clean_acc = mean_sd(cleans).mean;
    std::fprintf(f, "%s,%s", scheme.c_str(), fmt_acc(row.clean_acc).c_str());
    for (const auto& name : cfg.attack.suite) {
      std::vector<double> vals;
      for (const auto& rec : finals[scheme]) vals.push_back(robust_or_nan(rec, name));
      const double mean = mean_sd(vals).mean;
      row.robust.emplace_back(name, mean);
      std::fprintf(f, ",%s", fmt_acc(mean).c_str());
    }
    std::fprintf(f, "\n");
    out.rows.push_back(std::move(row));
  }
  std::fclose(f);

  write_metadata(cfg.out_dir + "/run_meta_comparison.txt", cfg, eps_raw_per_seed);
  return out;
}

}  // namespace srouda
