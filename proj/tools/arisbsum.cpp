// arisbsum: experiment runner for the active-RIS BSUM precoder.
//
//   arisbsum run   --config cfg.json --out rows.csv [--format csv|json]
//                  [--trials N] [--seed S] [--per-antenna] [--threads T]
//   arisbsum sweep --config cfg.json --out summary.csv --axis M|N
//                  --values 64,128 --fixed 32
//
// Exit codes: 0 success, 1 configuration error, 2 runtime failure.

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "aris/harness.hpp"

namespace {

constexpr int kConfigError = 1;
constexpr int kRuntimeError = 2;

struct CommonArgs {
  std::string config;
  std::string out;
  std::optional<int> trials;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  bool per_antenna = false;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config, "JSON experiment config (defaults if omitted)")
      ->check(CLI::ExistingFile);
  cmd->add_option("--out", args.out, "output path")->required();
  cmd->add_option("--trials", args.trials, "override trials")->check(CLI::PositiveNumber);
  cmd->add_option("--seed", args.seed, "override base_seed");
  cmd->add_option("--threads", args.threads, "OpenMP threads (0 = runtime default)")
      ->check(CLI::NonNegativeNumber);
  cmd->add_flag("--per-antenna", args.per_antenna, "use the per-antenna BS power constraint");
}

aris::harness::ExperimentConfig resolve(const CommonArgs& args) {
  using namespace aris::harness;
  ExperimentConfig cfg = args.config.empty() ? ExperimentConfig{} : load_config(args.config);
  if (args.trials) cfg.trials = *args.trials;
  if (args.seed) cfg.base_seed = *args.seed;
  if (args.threads) cfg.threads = *args.threads;
  if (args.per_antenna) {
    cfg.per_antenna = true;
    cfg.solver.per_antenna = true;
  }
  cfg.validate();
  return cfg;
}

void print_summary(const std::vector<aris::harness::SummaryRow>& summary) {
  for (const auto& s : summary)
    std::cerr << "M=" << s.m << " N=" << s.n << " K=" << s.k << " Pmax=" << s.p_max_dbm
              << "dBm  sum-rate " << s.mean_sum_rate << " +/- " << s.std_sum_rate
              << " bit/s/Hz  runtime " << s.mean_runtime_ms << " ms  iters "
              << s.mean_iterations << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  using namespace aris::harness;

  CLI::App app{"Active-RIS BSUM precoding experiments"};
  app.require_subcommand(1);

  CommonArgs run_args;
  std::string format = "csv";
  auto* run = app.add_subcommand("run", "solve every (sweep point, trial) and emit the rows");
  add_common(run, run_args);
  run->add_option("--format", format, "csv or json")->check(CLI::IsMember({"csv", "json"}));

  CommonArgs sweep_args;
  std::string axis;
  std::vector<int> values;
  int fixed = 0;
  auto* sweep = app.add_subcommand("sweep", "runtime versus M or N at a fixed other dimension");
  add_common(sweep, sweep_args);
  sweep->add_option("--axis", axis, "dimension to sweep")
      ->required()
      ->check(CLI::IsMember({"M", "N"}));
  sweep->add_option("--values", values, "comma-separated sizes")->required()->delimiter(',');
  sweep->add_option("--fixed", fixed, "size of the other dimension")
      ->required()
      ->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kConfigError;
  }

  ExperimentConfig cfg;
  try {
    cfg = resolve(run->parsed() ? run_args : sweep_args);
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigError;
  }

  try {
    if (run->parsed()) {
      const ExperimentResult result = run_experiment(cfg);
      emit(result, format == "json" ? Format::json : Format::csv, run_args.out);
      print_summary(result.summary);
    } else {
      const SweepAxis ax = axis == "M" ? SweepAxis::m : SweepAxis::n;
      const ExperimentResult result = sweep_sizes(cfg, ax, values, fixed);
      write_text(sweep_args.out, summary_to_csv(result.summary));
      print_summary(result.summary);
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kRuntimeError;
  }
  return 0;
}
