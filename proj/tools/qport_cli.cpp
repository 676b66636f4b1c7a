// qport: command-line front end.
//
//   qport predict   --preset 1A --alpha 1.5:10:18
//   qport gen       --n-assets 200 --alpha 2 --preset 1A --matrix x.csv --variances s.txt
//   qport solve     --matrix x.csv --variances s.txt --method bp
//   qport simulate  --preset 1B --n-assets 100 --samples 10 --alpha 2:4:3 --seed 1
//   qport compare   --input sweep.json
//   qport reproduce fig2 --n-assets 50 --samples 4 --output-dir out/
//
// Exit codes: 0 success, 1 runtime failure, 2 usage or configuration error.

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "qport/qport.hpp"

namespace {

using namespace qport;
using nlohmann::json;

/// Bad flags or configuration; maps to exit code 2.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

struct Globals {
  std::uint64_t seed = 0;
  std::string output;
  std::string format = "csv";
  int verbosity = 0;
};

struct SpecFlags {
  std::string preset;
  std::string variance;
};

void add_spec_flags(CLI::App* cmd, SpecFlags& f) {
  auto* p = cmd->add_option("--preset", f.preset, "Variance preset: 1A 1B 1C 2A' 2B' 2C'");
  auto* v = cmd->add_option("--variance", f.variance,
                            "Variance spec, e.g. identical:s=1, two-point:r=0.84,s=0.0741, uniform:l=1,u=2");
  p->excludes(v);
}

std::pair<VarianceSpec, std::optional<std::string>> resolve_spec(const SpecFlags& f) {
  try {
    if (!f.preset.empty()) {
      const auto name = canonical_preset(f.preset);
      return {preset(name), name};
    }
    if (!f.variance.empty()) return {parse_variance_spec(f.variance), std::nullopt};
  } catch (const qport::Error& e) {
    throw UsageError(e.what());
  }
  return {variance::Identical{1.0}, std::nullopt};
}

/// "min:max:steps" -> uniform inclusive grid; a single number is a one-point grid.
std::vector<double> parse_alpha_grid(const std::string& text) {
  std::vector<std::string> parts;
  std::stringstream ss(text);
  for (std::string item; std::getline(ss, item, ':');) parts.push_back(item);
  std::vector<double> grid;
  try {
    if (parts.size() == 1) {
      grid.push_back(io::parse_double(parts[0], "--alpha"));
    } else if (parts.size() == 3) {
      const double lo = io::parse_double(parts[0], "--alpha");
      const double hi = io::parse_double(parts[1], "--alpha");
      const double steps = io::parse_double(parts[2], "--alpha");
      if (!(steps >= 1.0) || steps != static_cast<double>(static_cast<long>(steps)))
        throw UsageError("--alpha: step count must be a positive integer");
      const auto n = static_cast<std::size_t>(steps);
      if (n > 1 && !(hi > lo)) throw UsageError("--alpha: max must exceed min");
      for (std::size_t k = 0; k < n; ++k)
        grid.push_back(n == 1 ? lo : lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(n - 1));
    } else {
      throw UsageError("--alpha: expected min:max:steps or a single value, got '" + text + "'");
    }
  } catch (const qport::Error& e) {
    throw UsageError(e.what());
  }
  for (double a : grid)
    if (!(a > 1.0))
      throw UsageError("--alpha: scenario ratio must satisfy alpha > 1 (got " + io::format_double(a) + ")");
  return grid;
}

class Output {
 public:
  explicit Output(const std::string& path) {
    if (!path.empty()) {
      file_.open(path);
      if (!file_) throw qport::Error("cannot write '" + path + "'");
    }
  }
  std::ostream& stream() { return file_.is_open() ? static_cast<std::ostream&>(file_) : std::cout; }

 private:
  std::ofstream file_;
};

void check_format(const Globals& g) {
  if (g.format != "csv" && g.format != "json") throw UsageError("--format must be csv or json");
}

// ---------------------------------------------------------------------------
// predict

struct PredictArgs {
  std::string alpha = "1.5:10:18";
  SpecFlags spec;
  double gamma = 1.0;
};

int run_predict(const Globals& g, const PredictArgs& a) {
  check_format(g);
  const auto grid = parse_alpha_grid(a.alpha);
  const auto [spec, label] = resolve_spec(a.spec);
  if (!(a.gamma > 0.0)) throw UsageError("--gamma must be positive");
  const auto m = analytic_moments(spec);
  std::vector<analytic::Prediction> rows;
  for (double alpha : grid) rows.push_back(analytic::scaled_prediction(analytic::predict(alpha, m), a.gamma));

  Output out(g.output);
  auto& os = out.stream();
  if (g.format == "json") {
    json arr = json::array();
    for (const auto& p : rows)
      arr.push_back({{"alpha", p.alpha},
                     {"eps_quenched", p.epsilon_quenched},
                     {"qw_quenched", p.qw_quenched},
                     {"eps_annealed", p.epsilon_annealed},
                     {"qw_annealed", p.qw_annealed}});
    os << arr.dump(2) << '\n';
  } else {
    os << "alpha,eps_quenched,qw_quenched,eps_annealed,qw_annealed\n";
    for (const auto& p : rows)
      os << io::format_double(p.alpha) << ',' << io::format_double(p.epsilon_quenched) << ','
         << io::format_double(p.qw_quenched) << ',' << io::format_double(p.epsilon_annealed) << ','
         << io::format_double(p.qw_annealed) << '\n';
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------
// gen

struct GenArgs {
  std::size_t n_assets = 200;
  double alpha = 2.0;
  std::size_t n_scenarios = 0;
  SpecFlags spec;
  std::string dist = "gaussian";
  std::string matrix;
  std::string variances;
};

int run_gen(const Globals& g, const GenArgs& a) {
  const auto [spec, label] = resolve_spec(a.spec);
  ReturnDistribution dist;
  try {
    dist = parse_distribution(a.dist);
  } catch (const qport::Error& e) {
    throw UsageError(e.what());
  }
  if (a.n_assets < 1) throw UsageError("--n-assets must be >= 1");
  const std::size_t p = a.n_scenarios ? a.n_scenarios : experiment::scenarios_for(a.alpha, a.n_assets);
  if (p < 1) throw UsageError("--alpha/--n-scenarios must give at least one scenario");
  if (std::holds_alternative<variance::Explicit>(spec) &&
      std::get<variance::Explicit>(spec).values.size() != a.n_assets)
    throw UsageError("explicit variance list length differs from --n-assets");

  const ReturnMatrix X = generate(a.n_assets, p, spec, dist, g.seed);
  io::save_return_matrix(X, a.matrix, a.variances);
  if (g.verbosity > 0 || !X.well_posed())
    std::cerr << "wrote " << X.n_assets() << " x " << X.n_scenarios() << " matrix to " << a.matrix
              << (X.well_posed() ? "" : " (warning: p <= N, optimum not unique)") << '\n';
  return kExitOk;
}

// ---------------------------------------------------------------------------
// solve

struct SolveArgs {
  std::string matrix;
  std::string variances;
  std::string method = "exact";
  std::string weights;
  std::optional<double> beta;
  double damping = 0.5;
  std::optional<double> eta_w;
  std::optional<double> eta_zeta;
  std::optional<double> delta;
  std::optional<std::size_t> max_iters;
  bool fixed_step = false;
};

json report_json(const SolveReport& r, const ReturnMatrix& X) {
  json j = {{"solver", std::string(to_string(r.solver_id))},
            {"epsilon", r.epsilon},
            {"q_w", r.q_w},
            {"budget_residual", budget_residual(r.portfolio)},
            {"iterations", r.iterations},
            {"converged", r.converged},
            {"residual", r.residual},
            {"n_assets", X.n_assets()},
            {"n_scenarios", X.n_scenarios()},
            {"well_posed", r.well_posed}};
  if (r.epsilon_closed_form) j["epsilon_closed_form"] = *r.epsilon_closed_form;
  if (r.q_w_closed_form) j["q_w_closed_form"] = *r.q_w_closed_form;
  if (r.mean_chi_w) j["mean_chi_w"] = *r.mean_chi_w;
  if (r.mean_chi_u) j["mean_chi_u"] = *r.mean_chi_u;
  if (r.multiplier) j["multiplier"] = *r.multiplier;
  return j;
}

int run_solve(const Globals& g, const SolveArgs& a) {
  SolverId method;
  try {
    method = parse_solver_id(a.method);
  } catch (const qport::Error& e) {
    throw UsageError(e.what());
  }
  SolverOptions opts;
  auto& sd = opts.steepest_descent;
  sd.eta_w = a.eta_w;
  sd.eta_zeta = a.eta_zeta;
  if (a.delta) sd.delta = *a.delta;
  if (a.max_iters) sd.max_iters = *a.max_iters;
  sd.policy = a.fixed_step ? StepPolicy::Fixed : StepPolicy::Auto;
  auto& bp = opts.belief_propagation;
  bp.beta = a.beta;
  bp.damping = a.damping;
  if (a.delta) bp.delta = *a.delta;
  if (a.max_iters) bp.max_iters = *a.max_iters;

  const ReturnMatrix X = io::load_return_matrix(a.matrix, a.variances);
  const SolveReport report = solve(X, method, opts);
  Output out(g.output);
  out.stream() << report_json(report, X).dump(2) << '\n';
  if (!a.weights.empty()) {
    auto w = io::open_output(a.weights);
    io::write_vector_lines(w, report.portfolio.weights);
  }
  if (!report.converged) {
    std::cerr << "error: " << to_string(method) << " did not converge after " << report.iterations
              << " iterations (residual " << io::format_double(report.residual) << ")\n";
    return kExitRuntime;
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------
// simulate / compare / reproduce

struct SweepArgs {
  SpecFlags spec;
  std::size_t n_assets = 200;
  std::size_t samples = 50;
  std::string alpha = "1.5:10:18";
  std::string dist = "gaussian";
  std::string method = "exact";
  double gamma = 1.0;
  unsigned threads = 0;
  std::string save;
};

experiment::SweepConfig sweep_config(const Globals& g, const SweepArgs& a) {
  experiment::SweepConfig cfg;
  std::tie(cfg.spec, cfg.preset) = resolve_spec(a.spec);
  cfg.n_assets = a.n_assets;
  cfg.samples = a.samples;
  cfg.alpha_grid = parse_alpha_grid(a.alpha);
  cfg.gamma = a.gamma;
  cfg.base_seed = g.seed;
  try {
    cfg.dist = parse_distribution(a.dist);
    cfg.method = parse_solver_id(a.method);
    experiment::validate(cfg);
  } catch (const qport::Error& e) {
    throw UsageError(e.what());
  }
  return cfg;
}

int run_simulate(const Globals& g, const SweepArgs& a) {
  check_format(g);
  const auto cfg = sweep_config(g, a);
  experiment::RunOptions opts;
  opts.threads = a.threads;
  const auto result = experiment::run_sweep(cfg, opts);
  if (g.verbosity > 0)
    std::cerr << "sweep finished in " << result.metadata.wall_time_seconds << " s\n";
  if (!a.save.empty()) experiment::persist(result, a.save);
  Output out(g.output);
  if (g.format == "json")
    out.stream() << experiment::dump(result);
  else
    experiment::write_csv(out.stream(), result);
  return kExitOk;
}

struct CompareArgs {
  std::string input;
};

int run_compare(const Globals& g, const CompareArgs& a) {
  check_format(g);
  const auto result = experiment::load(a.input);
  const auto rows = experiment::compare(result);
  Output out(g.output);
  if (g.format == "json") {
    json arr = json::array();
    for (const auto& r : rows)
      arr.push_back({{"alpha", r.alpha},
                     {"z_eps_quenched", r.z_eps_quenched},
                     {"z_qw_quenched", r.z_qw_quenched},
                     {"z_eps_annealed", r.z_eps_annealed},
                     {"z_qw_annealed", r.z_qw_annealed},
                     {"flag_quenched", r.flag_quenched},
                     {"flag_annealed", r.flag_annealed},
                     {"flag_monotonicity", r.flag_monotonicity}});
    out.stream() << arr.dump(2) << '\n';
  } else {
    experiment::write_comparison_csv(out.stream(), rows);
  }
  return kExitOk;
}

struct ReproduceArgs {
  std::string figure;
  std::size_t n_assets = 200;
  std::size_t samples = 50;
  std::string alpha = "1.5:10:18";
  std::string method = "exact";
  std::string output_dir = ".";
  unsigned threads = 0;
};

/// File-name form of a preset: 2A' -> 2Ap.
std::string file_tag(std::string name) {
  for (auto& c : name)
    if (c == '\'') c = 'p';
  return name;
}

int run_reproduce(const Globals& g, const ReproduceArgs& a) {
  std::vector<std::string> names;
  bool risk_figure = false;
  bool top_to_bottom = false;  // ordering of the first preset relative to the others
  if (a.figure == "fig2" || a.figure == "fig3") {
    names = {"1A", "1B", "1C"};
    risk_figure = a.figure == "fig2";
    top_to_bottom = true;
  } else if (a.figure == "fig4" || a.figure == "fig5") {
    names = {"2A'", "2B'", "2C'"};
    risk_figure = a.figure == "fig4";
    top_to_bottom = false;
  } else {
    throw UsageError("reproduce: figure must be fig2, fig3, fig4 or fig5");
  }

  SweepArgs sa;
  sa.n_assets = a.n_assets;
  sa.samples = a.samples;
  sa.alpha = a.alpha;
  sa.method = a.method;
  sa.threads = a.threads;
  std::vector<experiment::SweepConfig> configs;
  for (const auto& name : names) {
    sa.spec.preset = name;
    configs.push_back(sweep_config(g, sa));
  }

  const std::filesystem::path dir(a.output_dir);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw qport::Error("cannot create '" + dir.string() + "': " + ec.message());

  experiment::RunOptions opts;
  opts.threads = a.threads;
  std::vector<experiment::SweepResult> results;
  for (std::size_t i = 0; i < names.size(); ++i) {
    results.push_back(experiment::run_sweep(configs[i], opts));
    const auto stem = a.figure + "_" + file_tag(names[i]);
    experiment::export_csv(results.back(), dir / (stem + ".csv"));
    experiment::persist(results.back(), dir / (stem + ".json"));
    if (g.verbosity > 0) std::cerr << "wrote " << (dir / (stem + ".csv")).string() << '\n';
  }

  // Dense analytic curves for the solid (quenched) and dashed (annealed) lines.
  {
    auto out = io::open_output(dir / (a.figure + "_curves.csv"));
    out << "preset,alpha,eps_quenched,qw_quenched,eps_annealed,qw_annealed\n";
    const auto& grid = configs.front().alpha_grid;
    const double lo = grid.front();
    const double hi = grid.size() > 1 ? grid.back() : grid.front();
    constexpr int kPoints = 200;
    for (const auto& name : names) {
      const auto m = analytic_moments(preset(name));
      for (int k = 0; k < kPoints; ++k) {
        const double alpha = lo + (hi - lo) * k / (kPoints - 1);
        const auto p = analytic::predict(alpha, m);
        out << name << ',' << io::format_double(alpha) << ',' << io::format_double(p.epsilon_quenched) << ','
            << io::format_double(p.qw_quenched) << ',' << io::format_double(p.epsilon_annealed) << ','
            << io::format_double(p.qw_annealed) << '\n';
      }
    }
  }

  // Vertical ordering of the simulated curves at each alpha.
  std::size_t violations = 0;
  for (std::size_t j = 0; j < results.front().records.size(); ++j) {
    auto value = [&](std::size_t i) {
      const auto& r = results[i].records[j];
      return risk_figure ? r.eps_mean : r.qw_mean;
    };
    for (std::size_t i = 0; i + 1 < names.size(); ++i) {
      const bool ok = top_to_bottom ? value(i) > value(i + 1) : value(i) < value(i + 1);
      if (!ok) ++violations;
    }
  }
  std::cerr << a.figure << ": " << names.size() << " presets x " << results.front().records.size()
            << " alpha values, ordering " << (top_to_bottom ? "top to bottom" : "bottom to top") << ": "
            << (violations == 0 ? "ok" : std::to_string(violations) + " violation(s)") << '\n';
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Minimum-variance portfolios with non-identical asset variances: typical-case predictions "
               "and Monte Carlo verification"};
  app.fallthrough();
  app.set_config("--config", "", "Read flags from a key = value file");
  app.require_subcommand(1);

  Globals g;
  app.add_option("--seed", g.seed, "Base random seed")->envname("QPORT_SEED");
  app.add_option("-o,--output", g.output, "Write data to this file instead of stdout");
  app.add_option("--format", g.format, "Output format: csv or json");
  app.add_flag("-v,--verbose", g.verbosity, "Diagnostics on stderr");

  std::function<int()> action;

  PredictArgs pa;
  auto* predict = app.add_subcommand("predict", "Quenched and annealed curves over an alpha grid");
  predict->add_option("--alpha", pa.alpha, "min:max:steps");
  add_spec_flags(predict, pa.spec);
  predict->add_option("--gamma", pa.gamma, "Return scaling (returns multiplied by sqrt(gamma))");
  predict->callback([&] { action = [&] { return run_predict(g, pa); }; });

  GenArgs ga;
  auto* gen = app.add_subcommand("gen", "Generate a random return matrix");
  gen->add_option("--n-assets", ga.n_assets, "N");
  auto* ga_alpha = gen->add_option("--alpha", ga.alpha, "p / N");
  gen->add_option("--n-scenarios", ga.n_scenarios, "p")->excludes(ga_alpha);
  add_spec_flags(gen, ga.spec);
  gen->add_option("--dist", ga.dist, "gaussian | rademacher | uniform");
  gen->add_option("--matrix", ga.matrix, "Output matrix CSV")->required();
  gen->add_option("--variances", ga.variances, "Output variances file")->required();
  gen->callback([&] { action = [&] { return run_gen(g, ga); }; });

  SolveArgs so;
  auto* solve_cmd = app.add_subcommand("solve", "Solve one instance and print the report as JSON");
  solve_cmd->add_option("--matrix", so.matrix, "Matrix CSV (one row per asset)")->required();
  solve_cmd->add_option("--variances", so.variances, "Variances file (default: row mean of x^2)");
  solve_cmd->add_option("--method", so.method, "exact | sd | bp");
  solve_cmd->add_option("--weights", so.weights, "Write the portfolio, one weight per line");
  solve_cmd->add_option("--beta", so.beta, "BP inverse temperature (default: zero-temperature limit)");
  solve_cmd->add_option("--damping", so.damping, "BP message damping");
  solve_cmd->add_option("--eta-w", so.eta_w, "Steepest-descent portfolio step (default 100/N)");
  solve_cmd->add_option("--eta-zeta", so.eta_zeta, "Steepest-descent multiplier step (default 1/N)");
  solve_cmd->add_option("--delta", so.delta, "L1 stopping threshold");
  solve_cmd->add_option("--max-iters", so.max_iters, "Iteration limit");
  solve_cmd->add_flag("--fixed-step", so.fixed_step, "Use steepest-descent steps exactly as given");
  solve_cmd->callback([&] { action = [&] { return run_solve(g, so); }; });

  SweepArgs sw;
  auto* simulate = app.add_subcommand("simulate", "Monte Carlo ensemble sweep");
  add_spec_flags(simulate, sw.spec);
  simulate->add_option("--n-assets", sw.n_assets, "N");
  simulate->add_option("--samples", sw.samples, "Matrices per alpha");
  simulate->add_option("--alpha", sw.alpha, "min:max:steps");
  simulate->add_option("--dist", sw.dist, "gaussian | rademacher | uniform");
  simulate->add_option("--method", sw.method, "exact | sd | bp");
  simulate->add_option("--gamma", sw.gamma, "Return scaling");
  simulate->add_option("--threads", sw.threads, "Worker threads (0 = all cores)");
  simulate->add_option("--save", sw.save, "Also persist the full result as JSON");
  simulate->callback([&] { action = [&] { return run_simulate(g, sw); }; });

  CompareArgs ca;
  auto* compare = app.add_subcommand("compare", "z-scores of a saved sweep against the predictions");
  compare->add_option("--input", ca.input, "Sweep result JSON")->required();
  compare->callback([&] { action = [&] { return run_compare(g, ca); }; });

  ReproduceArgs ra;
  auto* reproduce = app.add_subcommand("reproduce", "Regenerate the data behind one figure");
  reproduce->add_option("figure", ra.figure, "fig2 | fig3 | fig4 | fig5")->required();
  reproduce->add_option("--n-assets", ra.n_assets, "N");
  reproduce->add_option("--samples", ra.samples, "Matrices per alpha");
  reproduce->add_option("--alpha", ra.alpha, "min:max:steps");
  reproduce->add_option("--method", ra.method, "exact | sd | bp");
  reproduce->add_option("--output-dir", ra.output_dir, "Directory for the CSV/JSON files");
  reproduce->add_option("--threads", ra.threads, "Worker threads (0 = all cores)");
  reproduce->callback([&] { action = [&] { return run_reproduce(g, ra); }; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return kExitUsage;
  }

  try {
    return action();
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
}
