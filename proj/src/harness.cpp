#include "aris/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <tuple>

#include <omp.h>

namespace aris::harness {

using nlohmann::json;

namespace {

// ---------------------------------------------------------------------------
// JSON config

void reject_unknown(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
  if (!obj.is_object()) throw ConfigError(where + " must be a JSON object");
  for (const auto& [key, _] : obj.items())
    if (!allowed.count(key)) throw ConfigError("unknown field '" + key + "' in " + where);
}

template <class T>
void read(const json& obj, const char* key, T& out, const std::string& where) {
  if (!obj.contains(key)) return;
  try {
    out = obj.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(where + "." + key + ": " + e.what());
  }
}

void read_optional(const json& obj, const char* key, std::optional<double>& out,
                   const std::string& where) {
  if (!obj.contains(key)) return;
  if (obj.at(key).is_null()) {
    out.reset();
    return;
  }
  double v = 0.0;
  read(obj, key, v, where);
  out = v;
}

void read_point(const json& obj, const char* key, Point2& out, const std::string& where) {
  if (!obj.contains(key)) return;
  std::vector<double> v;
  read(obj, key, v, where);
  if (v.size() != 2) throw ConfigError(where + "." + key + " must be [x, y]");
  out = {v[0], v[1]};
}

void read_pathloss(const json& obj, const char* key, PathLossModel& out, const std::string& where) {
  if (!obj.contains(key)) return;
  std::vector<double> v;
  read(obj, key, v, where);
  if (v.size() != 2) throw ConfigError(where + "." + key + " must be [intercept_db, slope]");
  out = {v[0], v[1]};
}

json optional_to_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

// ---------------------------------------------------------------------------
// CSV

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, sep)) out.push_back(field);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

ResultRow solve_trial(const ExperimentConfig& cfg, Dims dims, double p_max_dbm, int trial) {
  const Scenario sc = make_scenario(cfg, dims, p_max_dbm, trial);
  const auto t0 = std::chrono::steady_clock::now();
  const Solution sol = bsum_solve(sc.channels, sc.budget, sc.solver);
  const auto t1 = std::chrono::steady_clock::now();

  ResultRow row;
  row.trial = trial;
  row.m = dims.m;
  row.n = dims.n;
  row.k = cfg.users;
  row.p_max_dbm = p_max_dbm;
  row.sum_rate_bits = sol.sum_rate;
  row.iterations = sol.iterations;
  row.runtime_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
  row.converged = sol.converged;
  row.residual_max = sol.residuals.max_relative();
  return row;
}

}  // namespace

void ExperimentConfig::validate() const {
  if (dims.empty()) throw ConfigError("dims sweep list is empty");
  for (const auto& d : dims)
    if (d.m < 1 || d.n < 1) throw ConfigError("every (M, N) must be >= 1");
  if (users < 1) throw ConfigError("users must be >= 1");
  if (p_max_dbm.empty()) throw ConfigError("p_max_dbm list is empty");
  for (double p : p_max_dbm)
    if (!std::isfinite(p)) throw ConfigError("p_max_dbm entries must be finite");
  if (!(fraction_ris > 0.0) || !(fraction_bs > 0.0) ||
      std::abs(fraction_ris + fraction_bs - 1.0) > 1e-12)
    throw ConfigError("power_split fractions must be positive and sum to 1");
  if (trials < 1) throw ConfigError("trials must be >= 1");
  if (!(eta > 0.0)) throw ConfigError("eta must be positive");
  if (!std::isfinite(noise_dbm)) throw ConfigError("noise_dbm must be finite");
  if (threads < 0) throw ConfigError("threads must be >= 0");
  try {
    Geometry g = geometry;
    g.num_users = users;
    g.validate();
    FadingConfig f = fading;
    f.noise_ris = f.noise_user = dbm_to_watts(noise_dbm);
    f.validate();
    solver.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

ExperimentConfig config_from_json(const json& doc) {
  static const std::set<std::string> top = {
      "dims",     "users",       "p_max_dbm",       "power_split", "trials",   "base_seed",
      "eta",      "noise_dbm",   "per_antenna",     "threads",     "parallel_trials",
      "warmup",   "geometry",    "fading",          "solver"};
  reject_unknown(doc, top, "config");

  ExperimentConfig cfg;
  if (doc.contains("dims")) {
    std::vector<std::vector<int>> dims;
    read(doc, "dims", dims, "config");
    cfg.dims.clear();
    for (const auto& d : dims) {
      if (d.size() != 2) throw ConfigError("config.dims entries must be [M, N]");
      cfg.dims.push_back({d[0], d[1]});
    }
  }
  read(doc, "users", cfg.users, "config");
  read(doc, "p_max_dbm", cfg.p_max_dbm, "config");
  if (doc.contains("power_split")) {
    std::vector<double> split_frac;
    read(doc, "power_split", split_frac, "config");
    if (split_frac.size() != 2) throw ConfigError("config.power_split must be [ris, bs]");
    cfg.fraction_ris = split_frac[0];
    cfg.fraction_bs = split_frac[1];
  }
  read(doc, "trials", cfg.trials, "config");
  read(doc, "base_seed", cfg.base_seed, "config");
  read(doc, "eta", cfg.eta, "config");
  read(doc, "noise_dbm", cfg.noise_dbm, "config");
  read(doc, "per_antenna", cfg.per_antenna, "config");
  read(doc, "threads", cfg.threads, "config");
  read(doc, "parallel_trials", cfg.parallel_trials, "config");
  read(doc, "warmup", cfg.warmup, "config");

  if (doc.contains("geometry")) {
    const json& g = doc.at("geometry");
    reject_unknown(g, {"bs_position", "ris_position", "user_radius"}, "geometry");
    read_point(g, "bs_position", cfg.geometry.bs_position, "geometry");
    read_point(g, "ris_position", cfg.geometry.ris_position, "geometry");
    read(g, "user_radius", cfg.geometry.user_radius, "geometry");
  }
  if (doc.contains("fading")) {
    const json& f = doc.at("fading");
    reject_unknown(f, {"rician_factor", "pathloss_bs_user", "pathloss_ris_links"}, "fading");
    read(f, "rician_factor", cfg.fading.rician_factor, "fading");
    read_pathloss(f, "pathloss_bs_user", cfg.fading.pathloss_bs_user, "fading");
    read_pathloss(f, "pathloss_ris_links", cfg.fading.pathloss_ris_links, "fading");
  }
  if (doc.contains("solver")) {
    const json& s = doc.at("solver");
    reject_unknown(s,
                   {"mu0", "mu_growth", "mu_max", "tol", "feas_tol", "max_iters", "stop_per_user",
                    "backend"},
                   "solver");
    read_optional(s, "mu0", cfg.solver.mu0, "solver");
    read(s, "mu_growth", cfg.solver.mu_growth, "solver");
    read_optional(s, "mu_max", cfg.solver.mu_max, "solver");
    read(s, "tol", cfg.solver.tol, "solver");
    read(s, "feas_tol", cfg.solver.feas_tol, "solver");
    read(s, "max_iters", cfg.solver.max_iters, "solver");
    read(s, "stop_per_user", cfg.solver.stop_per_user, "solver");
    if (s.contains("backend")) {
      std::string backend;
      read(s, "backend", backend, "solver");
      if (backend == "serial")
        cfg.solver.backend = Backend::serial;
      else if (backend == "parallel")
        cfg.solver.backend = Backend::parallel;
      else
        throw ConfigError("solver.backend must be \"serial\" or \"parallel\"");
    }
  }
  cfg.geometry.num_users = cfg.users;
  cfg.solver.per_antenna = cfg.per_antenna;
  cfg.validate();
  return cfg;
}

json config_to_json(const ExperimentConfig& cfg) {
  json dims = json::array();
  for (const auto& d : cfg.dims) dims.push_back({d.m, d.n});
  return {
      {"dims", dims},
      {"users", cfg.users},
      {"p_max_dbm", cfg.p_max_dbm},
      {"power_split", {cfg.fraction_ris, cfg.fraction_bs}},
      {"trials", cfg.trials},
      {"base_seed", cfg.base_seed},
      {"eta", cfg.eta},
      {"noise_dbm", cfg.noise_dbm},
      {"per_antenna", cfg.per_antenna},
      {"threads", cfg.threads},
      {"parallel_trials", cfg.parallel_trials},
      {"warmup", cfg.warmup},
      {"geometry",
       {{"bs_position", cfg.geometry.bs_position},
        {"ris_position", cfg.geometry.ris_position},
        {"user_radius", cfg.geometry.user_radius}}},
      {"fading",
       {{"rician_factor", cfg.fading.rician_factor},
        {"pathloss_bs_user",
         {cfg.fading.pathloss_bs_user.intercept_db, cfg.fading.pathloss_bs_user.slope}},
        {"pathloss_ris_links",
         {cfg.fading.pathloss_ris_links.intercept_db, cfg.fading.pathloss_ris_links.slope}}}},
      {"solver",
       {{"mu0", optional_to_json(cfg.solver.mu0)},
        {"mu_growth", cfg.solver.mu_growth},
        {"mu_max", optional_to_json(cfg.solver.mu_max)},
        {"tol", cfg.solver.tol},
        {"feas_tol", cfg.solver.feas_tol},
        {"max_iters", cfg.solver.max_iters},
        {"stop_per_user", cfg.solver.stop_per_user},
        {"backend", cfg.solver.backend == Backend::serial ? "serial" : "parallel"}}},
  };
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("invalid JSON in " + path.string() + ": " + e.what());
  }
  return config_from_json(doc);
}

Scenario make_scenario(const ExperimentConfig& cfg, Dims dims, double p_max_dbm, int trial) {
  const std::uint64_t seed = cfg.base_seed + static_cast<std::uint64_t>(trial);

  Geometry geometry = cfg.geometry;
  geometry.num_users = cfg.users;
  FadingConfig fading = cfg.fading;
  fading.seed = seed;
  fading.noise_ris = fading.noise_user = dbm_to_watts(cfg.noise_dbm);

  Scenario sc;
  sc.channels = generate_channels(geometry, fading, dims);
  const double p_max = dbm_to_watts(p_max_dbm);
  sc.budget.p_bs = cfg.fraction_bs * p_max;
  sc.budget.p_ris = cfg.fraction_ris * p_max;
  sc.budget.eta = rvec::Constant(dims.n, cfg.eta);
  sc.budget.per_antenna = cfg.per_antenna;
  sc.solver = cfg.solver;
  sc.solver.per_antenna = cfg.per_antenna;
  // decorrelate the RIS phase draw from the channel stream of the same trial
  sc.solver.init_seed = seed ^ 0x9e3779b97f4a7c15ULL;
  return sc;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  kernels::set_num_threads(cfg.threads);

  struct Point {
    Dims dims;
    double p_max_dbm;
  };
  std::vector<Point> points;
  for (const auto& d : cfg.dims)
    for (double p : cfg.p_max_dbm) points.push_back({d, p});

  ExperimentResult result;
  result.config = cfg;
  result.rows.resize(points.size() * static_cast<std::size_t>(cfg.trials));

  for (std::size_t pi = 0; pi < points.size(); ++pi) {
    const Point& pt = points[pi];
    if (cfg.warmup) (void)solve_trial(cfg, pt.dims, pt.p_max_dbm, 0);

    ResultRow* out = result.rows.data() + pi * cfg.trials;
    std::string failure;
#pragma omp parallel for schedule(dynamic) if (cfg.parallel_trials)
    for (int t = 0; t < cfg.trials; ++t) {
      try {
        out[t] = solve_trial(cfg, pt.dims, pt.p_max_dbm, t);
      } catch (const std::exception& e) {
#pragma omp critical(aris_harness_failure)
        if (failure.empty()) failure = "trial " + std::to_string(t) + ": " + e.what();
      }
    }
    if (!failure.empty()) throw std::runtime_error(failure);
  }
  result.summary = summarize(result.rows);
  return result;
}

ExperimentResult sweep_sizes(const ExperimentConfig& cfg, SweepAxis axis,
                             const std::vector<int>& values, int fixed) {
  if (values.empty()) throw ConfigError("sweep list is empty");
  ExperimentConfig swept = cfg;
  swept.dims.clear();
  for (int v : values) swept.dims.push_back(axis == SweepAxis::m ? Dims{v, fixed} : Dims{fixed, v});
  swept.parallel_trials = false;
  return run_experiment(swept);
}

std::vector<SummaryRow> summarize(const std::vector<ResultRow>& rows) {
  using Key = std::tuple<int, int, int, double>;
  std::vector<Key> order;
  std::map<Key, std::vector<const ResultRow*>> groups;
  for (const auto& r : rows) {
    const Key key{r.m, r.n, r.k, r.p_max_dbm};
    if (!groups.count(key)) order.push_back(key);
    groups[key].push_back(&r);
  }

  auto mean_std = [](const std::vector<double>& v) {
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    double var = 0.0;
    for (double x : v) var += (x - mean) * (x - mean);
    const double sd = v.size() > 1 ? std::sqrt(var / static_cast<double>(v.size() - 1)) : 0.0;
    return std::pair{mean, sd};
  };

  std::vector<SummaryRow> out;
  for (const auto& key : order) {
    const auto& g = groups[key];
    std::vector<double> rate, runtime, iters, per_iter;
    for (const ResultRow* r : g) {
      rate.push_back(r->sum_rate_bits);
      runtime.push_back(r->runtime_ms);
      iters.push_back(r->iterations);
      per_iter.push_back(r->runtime_ms / std::max(1, r->iterations));
    }
    SummaryRow s;
    std::tie(s.m, s.n, s.k, s.p_max_dbm) = key;
    s.trials = static_cast<int>(g.size());
    std::tie(s.mean_sum_rate, s.std_sum_rate) = mean_std(rate);
    std::tie(s.mean_runtime_ms, s.std_runtime_ms) = mean_std(runtime);
    s.mean_iterations = mean_std(iters).first;
    s.mean_iteration_ms = mean_std(per_iter).first;
    out.push_back(s);
  }
  return out;
}

std::string to_csv(const std::vector<ResultRow>& rows) {
  std::string out = std::string(kCsvHeader) + "\n";
  for (const auto& r : rows) {
    out += std::to_string(r.trial) + "," + std::to_string(r.m) + "," + std::to_string(r.n) + "," +
           std::to_string(r.k) + "," + format_double(r.p_max_dbm) + "," +
           format_double(r.sum_rate_bits) + "," + std::to_string(r.iterations) + "," +
           format_double(r.runtime_ms) + "," + (r.converged ? "1" : "0") + "," +
           format_double(r.residual_max) + "\n";
  }
  return out;
}

std::string summary_to_csv(const std::vector<SummaryRow>& rows) {
  std::string out = std::string(kSummaryCsvHeader) + "\n";
  for (const auto& s : rows) {
    out += std::to_string(s.m) + "," + std::to_string(s.n) + "," + std::to_string(s.k) + "," +
           format_double(s.p_max_dbm) + "," + std::to_string(s.trials) + "," +
           format_double(s.mean_sum_rate) + "," + format_double(s.std_sum_rate) + "," +
           format_double(s.mean_runtime_ms) + "," + format_double(s.std_runtime_ms) + "," +
           format_double(s.mean_iterations) + "," + format_double(s.mean_iteration_ms) + "\n";
  }
  return out;
}

std::vector<ResultRow> parse_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != kCsvHeader)
    throw std::runtime_error("CSV header does not match the result schema");
  std::vector<ResultRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split(line, ',');
    if (f.size() != 10) throw std::runtime_error("CSV row has " + std::to_string(f.size()) + " fields");
    ResultRow r;
    r.trial = std::stoi(f[0]);
    r.m = std::stoi(f[1]);
    r.n = std::stoi(f[2]);
    r.k = std::stoi(f[3]);
    r.p_max_dbm = std::stod(f[4]);
    r.sum_rate_bits = std::stod(f[5]);
    r.iterations = std::stoi(f[6]);
    r.runtime_ms = std::stod(f[7]);
    r.converged = f[8] == "1";
    r.residual_max = std::stod(f[9]);
    rows.push_back(r);
  }
  return rows;
}

json to_json(const ExperimentResult& result) {
  json rows = json::array();
  for (const auto& r : result.rows)
    rows.push_back({{"trial", r.trial},
                    {"M", r.m},
                    {"N", r.n},
                    {"K", r.k},
                    {"p_max_dbm", r.p_max_dbm},
                    {"sum_rate_bits", r.sum_rate_bits},
                    {"iterations", r.iterations},
                    {"runtime_ms", r.runtime_ms},
                    {"converged", r.converged},
                    {"residual_max", r.residual_max}});
  json summary = json::array();
  for (const auto& s : result.summary)
    summary.push_back({{"M", s.m},
                       {"N", s.n},
                       {"K", s.k},
                       {"p_max_dbm", s.p_max_dbm},
                       {"trials", s.trials},
                       {"mean_sum_rate", s.mean_sum_rate},
                       {"std_sum_rate", s.std_sum_rate},
                       {"mean_runtime_ms", s.mean_runtime_ms},
                       {"std_runtime_ms", s.std_runtime_ms},
                       {"mean_iterations", s.mean_iterations},
                       {"mean_iteration_ms", s.mean_iteration_ms}});
  return {{"config", config_to_json(result.config)}, {"rows", rows}, {"summary", summary}};
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open output file " + path.string());
  out << text;
  out.flush();
  if (!out) throw std::runtime_error("failed writing output file " + path.string());
}

void emit(const ExperimentResult& result, Format format, const std::filesystem::path& path) {
  if (format == Format::csv)
    write_text(path, to_csv(result.rows));
  else
    write_text(path, to_json(result).dump(2) + "\n");
}

}  // namespace aris::harness
