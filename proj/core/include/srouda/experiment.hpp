#pragma once

#include <string>
#include <vector>

#include "srouda/config.hpp"

namespace srouda {

/// Runs one scheme for one seed. The pre-trained source model may be
/// shared across schemes; when absent, schemes that need one pre-train it
/// from a seed-derived stream, so supplied and self-computed models agree.
SchemeResult run_scheme(const std::string& scheme, const DomainPair& data,
                        const SchemeConfig& cfg, std::uint64_t seed,
                        const EvalSuite& suite, const Model* pretrained = nullptr);

struct SummaryRow {
  std::string scheme;
  std::string metric;
  double mean = 0.0;
  double sd = 0.0;
};

struct ExperimentResult {
  std::vector<std::vector<MetricsRecord>> per_seed;  // [seed index][epoch]
  std::vector<SummaryRow> summary;                   // over final epochs
  std::vector<std::string> metrics_paths;
  std::string summary_path;
  std::string metadata_path;
};

/// Builds the dataset, runs the configured scheme for every seed,
/// evaluates the attack suite each epoch and writes per-seed metrics
/// CSVs, a mean/sd summary and a metadata file with every materialized
/// default.
ExperimentResult run_experiment(const RunConfig& cfg);

struct ComparisonRow {
  std::string scheme;
  double clean_acc = 0.0;
  std::vector<std::pair<std::string, double>> robust;  // suite order
};

struct ComparisonResult {
  std::vector<ComparisonRow> rows;
  std::string table_path;
};

/// Runs all five schemes on identical data and seeds and emits one table
/// row per scheme (final-epoch metrics, seed means).
ComparisonResult compare_schemes(const RunConfig& cfg);

std::string metrics_csv_path(const std::string& out_dir, const std::string& scheme,
                             std::uint64_t seed);
void write_metrics_csv(const std::string& path,
                       const std::vector<MetricsRecord>& history);

}  // namespace srouda
