#pragma once

// Monte Carlo ensemble sweeps: for each scenario ratio on a grid, draw R
// independent return matrices, solve each, and aggregate eps and q_w
// (mean and standard error over converged runs) next to the quenched and
// annealed predictions.

#include <nlohmann/json.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "qport/analytic.hpp"
#include "qport/core.hpp"
#include "qport/io.hpp"
#include "qport/market.hpp"
#include "qport/rng.hpp"
#include "qport/solvers.hpp"
#include "qport/variance_model.hpp"
#include "qport/version.hpp"

namespace qport::experiment {

struct SweepConfig {
  std::size_t n_assets = 200;
  std::vector<double> alpha_grid;
  std::size_t samples = 50;
  VarianceSpec spec = variance::Identical{1.0};
  std::optional<std::string> preset;  ///< label only; `spec` is authoritative
  ReturnDistribution dist = ReturnDistribution::Gaussian;
  SolverId method = SolverId::Exact;
  std::uint64_t base_seed = 0;
  double gamma = 1.0;
};

struct SweepRecord {
  double alpha = 0.0;  ///< realized p / N
  std::size_t p = 0;
  double eps_mean = 0.0;
  double eps_stderr = 0.0;
  double qw_mean = 0.0;
  double qw_stderr = 0.0;
  std::size_t n_converged = 0;
  analytic::Prediction prediction;
};

struct SweepMetadata {
  double wall_time_seconds = 0.0;
  std::string version = kVersion;
};

struct SweepResult {
  SweepConfig config;
  std::vector<SweepRecord> records;
  SweepMetadata metadata;
};

/// Execution knobs that must not change the result.
struct RunOptions {
  unsigned threads = 0;  ///< 0 = hardware concurrency
  SolverOptions solver;
};

inline std::size_t scenarios_for(double alpha, std::size_t n_assets) {
  return static_cast<std::size_t>(std::llround(alpha * static_cast<double>(n_assets)));
}

inline void validate(const SweepConfig& cfg) {
  if (cfg.n_assets < 1) throw DomainError("sweep: n_assets must be >= 1");
  if (cfg.samples < 2) throw DomainError("sweep: samples must be >= 2");
  if (cfg.alpha_grid.empty()) throw DomainError("sweep: empty alpha grid");
  if (!(cfg.gamma > 0.0) || !std::isfinite(cfg.gamma)) throw DomainError("sweep: gamma must be positive");
  qport::validate(cfg.spec);
  for (std::size_t j = 0; j < cfg.alpha_grid.size(); ++j) {
    const double a = cfg.alpha_grid[j];
    if (!(a > 1.0) || !std::isfinite(a))
      throw DomainError("sweep: alpha = " + io::format_double(a) + " must exceed 1");
    if (j > 0 && !(a > cfg.alpha_grid[j - 1])) throw DomainError("sweep: alpha grid must be strictly ascending");
    if (scenarios_for(a, cfg.n_assets) <= cfg.n_assets)
      throw DomainError("sweep: alpha = " + io::format_double(a) + " rounds to p <= N at N = " +
                        std::to_string(cfg.n_assets));
  }
}

/// Seed of sample r at grid index j.
inline std::uint64_t sample_seed(std::uint64_t base_seed, std::size_t alpha_index, std::size_t sample) {
  return rng::derive_key({base_seed, static_cast<std::uint64_t>(rng::Domain::Sample), alpha_index, sample});
}

namespace detail {

struct SampleOutcome {
  bool ok = false;
  double epsilon = 0.0;
  double q_w = 0.0;
  std::string failure;
};

struct MeanStderr {
  double mean = 0.0;
  double stderr_ = 0.0;
};

/// Fixed-order two-pass mean and standard error.
inline MeanStderr mean_stderr(const std::vector<double>& v) {
  MeanStderr out;
  if (v.empty()) {
    out.mean = out.stderr_ = std::numeric_limits<double>::quiet_NaN();
    return out;
  }
  double sum = 0.0;
  for (double x : v) sum += x;
  out.mean = sum / static_cast<double>(v.size());
  if (v.size() < 2) {
    out.stderr_ = std::numeric_limits<double>::quiet_NaN();
    return out;
  }
  double ss = 0.0;
  for (double x : v) ss += (x - out.mean) * (x - out.mean);
  const double n = static_cast<double>(v.size());
  out.stderr_ = std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
  return out;
}

}  // namespace detail

inline SweepResult run_sweep(const SweepConfig& cfg, const RunOptions& options = {}) {
  validate(cfg);
  const auto started = std::chrono::steady_clock::now();
  const std::size_t n_alpha = cfg.alpha_grid.size();
  const std::size_t n_tasks = n_alpha * cfg.samples;
  std::vector<detail::SampleOutcome> outcomes(n_tasks);

  auto work = [&](std::size_t task) {
    const std::size_t j = task / cfg.samples;
    const std::size_t r = task % cfg.samples;
    const std::size_t p = scenarios_for(cfg.alpha_grid[j], cfg.n_assets);
    auto& out = outcomes[task];
    try {
      ReturnMatrix X = generate(cfg.n_assets, p, cfg.spec, cfg.dist, sample_seed(cfg.base_seed, j, r));
      if (cfg.gamma != 1.0) X = rescale(X, cfg.gamma);
      const SolveReport rep = solve(X, cfg.method, options.solver);
      if (rep.converged) {
        out.ok = true;
        out.epsilon = rep.epsilon;
        out.q_w = rep.q_w;
      } else {
        out.failure = "no convergence after " + std::to_string(rep.iterations) + " iterations (residual " +
                      io::format_double(rep.residual) + ")";
      }
    } catch (const Error& e) {
      out.failure = e.what();
    }
  };

  unsigned threads = options.threads ? options.threads : std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, n_tasks));
  if (threads <= 1) {
    for (std::size_t t = 0; t < n_tasks; ++t) work(t);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (unsigned w = 0; w < threads; ++w)
      pool.emplace_back([&] {
        for (std::size_t t = next++; t < n_tasks; t = next++) work(t);
      });
    for (auto& th : pool) th.join();
  }

  SweepResult result;
  result.config = cfg;
  const InverseMoments moments = analytic_moments(cfg.spec);
  for (std::size_t j = 0; j < n_alpha; ++j) {
    SweepRecord rec;
    rec.p = scenarios_for(cfg.alpha_grid[j], cfg.n_assets);
    rec.alpha = static_cast<double>(rec.p) / static_cast<double>(cfg.n_assets);
    std::vector<double> eps, qw;
    for (std::size_t r = 0; r < cfg.samples; ++r) {
      const auto& o = outcomes[j * cfg.samples + r];
      if (!o.ok) continue;
      eps.push_back(o.epsilon);
      qw.push_back(o.q_w);
    }
    rec.n_converged = eps.size();
    if (rec.n_converged == 0)
      throw Error("sweep: every sample failed at alpha = " + io::format_double(rec.alpha) + " with solver " +
                  std::string(to_string(cfg.method)) + ": " + outcomes[j * cfg.samples].failure);
    const auto e = detail::mean_stderr(eps);
    const auto q = detail::mean_stderr(qw);
    rec.eps_mean = e.mean;
    rec.eps_stderr = e.stderr_;
    rec.qw_mean = q.mean;
    rec.qw_stderr = q.stderr_;
    rec.prediction = analytic::scaled_prediction(analytic::predict(rec.alpha, moments), cfg.gamma);
    result.records.push_back(rec);
  }
  result.metadata.wall_time_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return result;
}

// ---------------------------------------------------------------------------
// Comparison against predictions.

inline constexpr double kZFlag = 3.0;

struct ComparisonRow {
  double alpha = 0.0;
  double z_eps_quenched = 0.0;
  double z_qw_quenched = 0.0;
  double z_eps_annealed = 0.0;
  double z_qw_annealed = 0.0;
  bool flag_quenched = false;  ///< |z| > 3 for eps or q_w against the quenched curve
  bool flag_annealed = false;
  bool flag_monotonicity = false;  ///< eps fell or q_w rose beyond noise since the previous grid point
};

inline double z_score(double mean, double stderr_, double predicted) {
  const double diff = mean - predicted;
  if (stderr_ > 0.0) return diff / stderr_;
  if (diff == 0.0) return 0.0;
  return diff > 0.0 ? std::numeric_limits<double>::infinity() : -std::numeric_limits<double>::infinity();
}

inline std::vector<ComparisonRow> compare(const SweepResult& result) {
  std::vector<ComparisonRow> rows;
  for (std::size_t j = 0; j < result.records.size(); ++j) {
    const auto& r = result.records[j];
    ComparisonRow row;
    row.alpha = r.alpha;
    row.z_eps_quenched = z_score(r.eps_mean, r.eps_stderr, r.prediction.epsilon_quenched);
    row.z_qw_quenched = z_score(r.qw_mean, r.qw_stderr, r.prediction.qw_quenched);
    row.z_eps_annealed = z_score(r.eps_mean, r.eps_stderr, r.prediction.epsilon_annealed);
    row.z_qw_annealed = z_score(r.qw_mean, r.qw_stderr, r.prediction.qw_annealed);
    row.flag_quenched = !(std::abs(row.z_eps_quenched) <= kZFlag && std::abs(row.z_qw_quenched) <= kZFlag);
    row.flag_annealed = !(std::abs(row.z_eps_annealed) <= kZFlag && std::abs(row.z_qw_annealed) <= kZFlag);
    if (j > 0) {
      const auto& prev = result.records[j - 1];
      const double se_eps = std::hypot(r.eps_stderr, prev.eps_stderr);
      const double se_qw = std::hypot(r.qw_stderr, prev.qw_stderr);
      row.flag_monotonicity =
          (prev.eps_mean - r.eps_mean > kZFlag * se_eps) || (r.qw_mean - prev.qw_mean > kZFlag * se_qw);
    }
    rows.push_back(row);
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Persistence.

inline const char* kCsvHeader =
    "alpha,p,eps_mean,eps_stderr,qw_mean,qw_stderr,eps_quenched,qw_quenched,eps_annealed,qw_annealed";

inline void write_csv(std::ostream& out, const SweepResult& result) {
  using io::format_double;
  out << kCsvHeader << '\n';
  for (const auto& r : result.records) {
    out << format_double(r.alpha) << ',' << r.p << ',' << format_double(r.eps_mean) << ','
        << format_double(r.eps_stderr) << ',' << format_double(r.qw_mean) << ',' << format_double(r.qw_stderr)
        << ',' << format_double(r.prediction.epsilon_quenched) << ',' << format_double(r.prediction.qw_quenched)
        << ',' << format_double(r.prediction.epsilon_annealed) << ',' << format_double(r.prediction.qw_annealed)
        << '\n';
  }
}

inline void write_comparison_csv(std::ostream& out, const std::vector<ComparisonRow>& rows) {
  using io::format_double;
  out << "alpha,z_eps_quenched,z_qw_quenched,z_eps_annealed,z_qw_annealed,flag_quenched,flag_annealed,"
         "flag_monotonicity\n";
  for (const auto& r : rows)
    out << format_double(r.alpha) << ',' << format_double(r.z_eps_quenched) << ','
        << format_double(r.z_qw_quenched) << ',' << format_double(r.z_eps_annealed) << ','
        << format_double(r.z_qw_annealed) << ',' << int(r.flag_quenched) << ',' << int(r.flag_annealed) << ','
        << int(r.flag_monotonicity) << '\n';
}

namespace detail {

using nlohmann::json;

/// NaN is stored as null.
inline json number(double v) { return std::isnan(v) ? json(nullptr) : json(v); }
inline double number(const json& j) {
  return j.is_null() ? std::numeric_limits<double>::quiet_NaN() : j.get<double>();
}

}  // namespace detail

inline nlohmann::json to_json(const analytic::Prediction& p) {
  return {{"alpha", p.alpha},
          {"epsilon_quenched", p.epsilon_quenched},
          {"qw_quenched", p.qw_quenched},
          {"epsilon_annealed", p.epsilon_annealed},
          {"qw_annealed", p.qw_annealed},
          {"m1", p.moments.m1},
          {"m2", p.moments.m2}};
}

inline nlohmann::json to_json(const SweepResult& result) {
  using detail::number;
  using nlohmann::json;
  const auto& c = result.config;
  json config = {{"n_assets", c.n_assets},
                 {"alpha_grid", c.alpha_grid},
                 {"samples", c.samples},
                 {"variance", format_variance_spec(c.spec)},
                 {"preset", c.preset ? json(*c.preset) : json(nullptr)},
                 {"distribution", std::string(to_string(c.dist))},
                 {"method", std::string(to_string(c.method))},
                 {"base_seed", c.base_seed},
                 {"gamma", c.gamma}};
  json records = json::array();
  for (const auto& r : result.records)
    records.push_back({{"alpha", r.alpha},
                       {"p", r.p},
                       {"eps_mean", number(r.eps_mean)},
                       {"eps_stderr", number(r.eps_stderr)},
                       {"qw_mean", number(r.qw_mean)},
                       {"qw_stderr", number(r.qw_stderr)},
                       {"n_converged", r.n_converged},
                       {"prediction", to_json(r.prediction)}});
  return {{"config", config},
          {"records", records},
          {"metadata", {{"wall_time_seconds", result.metadata.wall_time_seconds},
                        {"version", result.metadata.version}}}};
}

inline SweepResult from_json(const nlohmann::json& j) {
  using detail::number;
  SweepResult out;
  try {
    const auto& c = j.at("config");
    auto& cfg = out.config;
    cfg.n_assets = c.at("n_assets").get<std::size_t>();
    cfg.alpha_grid = c.at("alpha_grid").get<std::vector<double>>();
    cfg.samples = c.at("samples").get<std::size_t>();
    cfg.spec = parse_variance_spec(c.at("variance").get<std::string>());
    if (const auto& p = c.at("preset"); !p.is_null()) cfg.preset = p.get<std::string>();
    cfg.dist = parse_distribution(c.at("distribution").get<std::string>());
    cfg.method = parse_solver_id(c.at("method").get<std::string>());
    cfg.base_seed = c.at("base_seed").get<std::uint64_t>();
    cfg.gamma = c.at("gamma").get<double>();
    for (const auto& r : j.at("records")) {
      SweepRecord rec;
      rec.alpha = r.at("alpha").get<double>();
      rec.p = r.at("p").get<std::size_t>();
      rec.eps_mean = number(r.at("eps_mean"));
      rec.eps_stderr = number(r.at("eps_stderr"));
      rec.qw_mean = number(r.at("qw_mean"));
      rec.qw_stderr = number(r.at("qw_stderr"));
      rec.n_converged = r.at("n_converged").get<std::size_t>();
      const auto& p = r.at("prediction");
      rec.prediction.alpha = p.at("alpha").get<double>();
      rec.prediction.epsilon_quenched = p.at("epsilon_quenched").get<double>();
      rec.prediction.qw_quenched = p.at("qw_quenched").get<double>();
      rec.prediction.epsilon_annealed = p.at("epsilon_annealed").get<double>();
      rec.prediction.qw_annealed = p.at("qw_annealed").get<double>();
      rec.prediction.moments = {p.at("m1").get<double>(), p.at("m2").get<double>()};
      out.records.push_back(rec);
    }
    const auto& m = j.at("metadata");
    out.metadata.wall_time_seconds = m.at("wall_time_seconds").get<double>();
    out.metadata.version = m.at("version").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("sweep result: ") + e.what());
  }
  return out;
}

inline std::string dump(const SweepResult& result) { return to_json(result).dump(2) + "\n"; }

/// Parses a sweep result; syntax errors carry the line number.
inline SweepResult parse(const std::string& text, const std::string& name = "sweep result") {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    const auto upto = std::min<std::size_t>(e.byte, text.size());
    const auto line = 1 + std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(upto), '\n');
    throw ParseError(name + ":" + std::to_string(line) + ": " + e.what());
  }
  try {
    return from_json(j);
  } catch (const ParseError& e) {
    throw ParseError(name + ": " + e.what());
  }
}

inline void persist(const SweepResult& result, const std::filesystem::path& path) {
  auto out = io::open_output(path);
  out << dump(result);
  if (!out) throw Error("failed writing '" + path.string() + "'");
}

inline SweepResult load(const std::filesystem::path& path) {
  auto in = io::open_input(path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), path.string());
}

inline void export_csv(const SweepResult& result, const std::filesystem::path& path) {
  auto out = io::open_output(path);
  write_csv(out, result);
}

}  // namespace qport::experiment
