#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "aris/channel.hpp"
#include "aris/solver.hpp"

namespace aris::harness {

/// Raised for malformed or inconsistent experiment configurations.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ExperimentConfig {
  std::vector<Dims> dims{{64, 32}};
  int users = 8;
  std::vector<double> p_max_dbm{30.0};
  double fraction_ris = 0.01;
  double fraction_bs = 0.99;
  int trials = 20;
  std::uint64_t base_seed = 1;
  double eta = 8.0;
  double noise_dbm = -80.0;
  bool per_antenna = false;
  int threads = 0;               // 0 keeps the OpenMP default
  bool parallel_trials = true;   // run trials of one sweep point concurrently
  bool warmup = true;            // one untimed solve per sweep point
  Geometry geometry;
  FadingConfig fading;
  SolverConfig solver;

  void validate() const;
};

/// Parses a JSON document. Every field is optional; unknown fields are rejected.
ExperimentConfig config_from_json(const nlohmann::json& doc);
/// Fully resolved config, defaults included.
nlohmann::json config_to_json(const ExperimentConfig& cfg);
ExperimentConfig load_config(const std::filesystem::path& path);

struct ResultRow {
  int trial = 0;
  int m = 0;
  int n = 0;
  int k = 0;
  double p_max_dbm = 0.0;
  double sum_rate_bits = 0.0;
  int iterations = 0;
  double runtime_ms = 0.0;
  bool converged = false;
  double residual_max = 0.0;

  bool operator==(const ResultRow&) const = default;
};

struct SummaryRow {
  int m = 0;
  int n = 0;
  int k = 0;
  double p_max_dbm = 0.0;
  int trials = 0;
  double mean_sum_rate = 0.0;
  double std_sum_rate = 0.0;
  double mean_runtime_ms = 0.0;
  double std_runtime_ms = 0.0;
  double mean_iterations = 0.0;
  double mean_iteration_ms = 0.0;
};

struct ExperimentResult {
  ExperimentConfig config;
  std::vector<ResultRow> rows;      // sorted by (sweep point, trial)
  std::vector<SummaryRow> summary;  // one per sweep point
};

/// Scenario of one trial: channel draw plus budgets, as the harness builds it.
struct Scenario {
  ChannelSet channels;
  PowerBudget budget;
  SolverConfig solver;
};

Scenario make_scenario(const ExperimentConfig& cfg, Dims dims, double p_max_dbm, int trial);

ExperimentResult run_experiment(const ExperimentConfig& cfg);

enum class SweepAxis { m, n };

/// Holds one dimension at `fixed` and sweeps the other over `values`.
/// Trials run one at a time so the recorded runtimes are not shared-core timings.
ExperimentResult sweep_sizes(const ExperimentConfig& cfg, SweepAxis axis,
                             const std::vector<int>& values, int fixed);

std::vector<SummaryRow> summarize(const std::vector<ResultRow>& rows);

inline constexpr const char* kCsvHeader =
    "trial,M,N,K,p_max_dbm,sum_rate_bits,iterations,runtime_ms,converged,residual_max";
inline constexpr const char* kSummaryCsvHeader =
    "M,N,K,p_max_dbm,trials,mean_sum_rate,std_sum_rate,mean_runtime_ms,std_runtime_ms,"
    "mean_iterations,mean_iteration_ms";

std::string to_csv(const std::vector<ResultRow>& rows);
std::string summary_to_csv(const std::vector<SummaryRow>& rows);
std::vector<ResultRow> parse_csv(const std::string& text);
nlohmann::json to_json(const ExperimentResult& result);

enum class Format { csv, json };

/// Writes the result table. Throws std::runtime_error if the path cannot be written.
void emit(const ExperimentResult& result, Format format, const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace aris::harness
