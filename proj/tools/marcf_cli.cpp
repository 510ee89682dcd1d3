// Command-line front end: simulate, select, fit, forecast, eval, gradcheck.

#include "marcf/forecast.hpp"
#include "marcf/init.hpp"
#include "marcf/io.hpp"
#include "marcf/selection.hpp"
#include "marcf/simulate.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

namespace fs = std::filesystem;
using namespace marcf;
using io::Json;

namespace {

constexpr int kExitNumerical = 1;
constexpr int kExitUsage = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Common {
  std::string config;
  std::optional<double> lambda1, lambda2, b, eta, rel_tol;
  std::optional<int> max_iter;
  int jobs = 1;

  FitConfig resolve() const {
    FitConfig cfg;
    if (!config.empty()) io::apply_config_json(io::read_json(config), cfg);
    if (lambda1) cfg.hp.lambda1 = *lambda1;
    if (lambda2) cfg.hp.lambda2 = *lambda2;
    if (b) cfg.hp.b = *b;
    if (eta) cfg.eta = *eta;
    if (rel_tol) cfg.rel_tol = *rel_tol;
    if (max_iter) cfg.max_iter = *max_iter;
    cfg.validate();
    return cfg;
  }
};

void add_common(CLI::App* app, Common& c) {
  app->add_option("--config", c.config, "JSON file with fit settings")->check(CLI::ExistingFile);
  app->add_option("--lambda1", c.lambda1, "weight of the norm-balance penalty");
  app->add_option("--lambda2", c.lambda2, "weight of the identification penalty");
  app->add_option("--b", c.b, "balance scalar");
  app->add_option("--eta", c.eta, "gradient step size");
  app->add_option("--max-iter", c.max_iter, "iteration cap");
  app->add_option("--rel-tol", c.rel_tol, "relative objective change for convergence");
  app->add_option("--jobs", c.jobs, "worker threads for grids and windows")->check(CLI::PositiveNumber);
}

std::uint64_t effective_seed(std::uint64_t flag) {
  if (const char* env = std::getenv("MARCF_SEED"); env && *env) {
    char* end = nullptr;
    const auto v = std::strtoull(env, &end, 10);
    if (*end != '\0') throw UsageError("MARCF_SEED must be an unsigned integer");
    return v;
  }
  return flag;
}

fs::path ensure_dir(const std::string& dir) {
  fs::create_directories(dir);
  return fs::path(dir);
}

// Loads a dataset and optionally standardizes it.
struct Dataset {
  MatrixSeries raw;
  MatrixSeries used;
  std::optional<io::Standardization> transform;
};

Dataset load(const std::string& path, bool standardize) {
  Dataset d;
  d.raw = io::read_dataset(path);
  d.used = d.raw;
  if (standardize) {
    d.transform = io::Standardization::fit(d.raw);
    d.used = d.transform->apply(d.raw);
  }
  return d;
}

// ---- simulate ------------------------------------------------------------

struct SimulateArgs {
  std::string kind = "marcf";
  StructuralDims dims{20, 10, 3, 2, 0, 0};
  int T = 500;
  std::uint64_t seed = 0;
  std::string out = "data";
  int burn_in = 200;
  double sin_theta_min = 0.8;
  int max_rejects = 1000;
};

int cmd_simulate(const SimulateArgs& a) {
  DgpSpec spec;
  spec.dims = a.dims;
  spec.T = a.T;
  spec.seed = effective_seed(a.seed);
  spec.burn_in = a.burn_in;
  spec.sin_theta_min = a.sin_theta_min;
  spec.max_rejects = a.max_rejects;
  if (a.kind == "marcf") {
    spec.kind = DgpKind::marcf;
  } else if (a.kind == "dynamic-mfm") {
    spec.kind = DgpKind::dynamic_mfm;
  } else {
    throw UsageError("--kind must be marcf or dynamic-mfm");
  }
  spec.validate();
  Rng rng(spec.seed);
  const fs::path dir = ensure_dir(a.out);
  Json truth;
  if (spec.kind == DgpKind::marcf) {
    const MarcfTruth t = gen_marcf_truth(spec, rng);
    io::write_dataset(dir.string(), t.series);
    truth = io::params_to_json(t.theta);
    truth["rejects"] = t.rejects;
  } else {
    const DmfmTruth t = gen_dmfm_truth(spec, rng);
    io::write_dataset(dir.string(), t.series);
    truth = io::params_to_json(t.as_params());
    truth["L1"] = io::matrix_to_json(t.L1);
    truth["L2"] = io::matrix_to_json(t.L2);
    truth["B1"] = io::matrix_to_json(t.B1);
    truth["B2"] = io::matrix_to_json(t.B2);
    truth["rejects"] = t.rejects;
  }
  truth["kind"] = a.kind;
  truth["seed"] = spec.seed;
  truth["T"] = spec.T;
  io::write_json((dir / "truth.json").string(), truth);
  std::cout << "wrote " << (dir / "series.csv").string() << " and " << (dir / "truth.json").string()
            << '\n';
  return 0;
}

// ---- select --------------------------------------------------------------

struct SelectArgs {
  std::string data;
  std::optional<int> rbar1, rbar2;
  bool standardize = false;
  std::string out = ".";
  Common common;
};

int cmd_select(const SelectArgs& a) {
  const FitConfig cfg = a.common.resolve();
  const Dataset d = load(a.data, a.standardize);
  const int p1 = static_cast<int>(d.used.rows());
  const int p2 = static_cast<int>(d.used.cols());
  const int rbar1 = a.rbar1.value_or(default_rbar(p1));
  const int rbar2 = a.rbar2.value_or(default_rbar(p2));
  const PipelineResult res = run_pipeline(d.used, rbar1, rbar2, cfg, a.common.jobs);
  const fs::path dir = ensure_dir(a.out);
  Json j = io::selection_to_json(res.selection);
  j["p1"] = p1;
  j["p2"] = p2;
  j["T"] = d.used.length();
  j["config"] = io::config_to_json(cfg);
  if (d.transform) j["standardization"] = d.transform->to_json();
  io::write_json((dir / "selection.json").string(), j);
  io::write_surface_csv((dir / "bic_surface.csv").string(), res.selection.bic_surface);
  const auto& s = res.selection;
  std::cout << "r_hat = (" << s.r1 << ", " << s.r2 << "), d_hat = (" << s.d1 << ", " << s.d2
            << ")\n";
  return 0;
}

// ---- fit -----------------------------------------------------------------

struct FitArgs {
  std::string data;
  std::optional<int> r1, r2, d1, d2;
  std::string selection;
  std::string init;
  bool standardize = false;
  std::string out = ".";
  Common common;
};

int cmd_fit(const FitArgs& a) {
  const FitConfig cfg = a.common.resolve();
  const Dataset d = load(a.data, a.standardize);
  StructuralDims dims{static_cast<int>(d.used.rows()), static_cast<int>(d.used.cols()), 0, 0, 0, 0};
  const bool all_flags = a.r1 && a.r2 && a.d1 && a.d2;
  if (all_flags) {
    dims.r1 = *a.r1;
    dims.r2 = *a.r2;
    dims.d1 = *a.d1;
    dims.d2 = *a.d2;
  } else if (!a.selection.empty()) {
    const SelectionReport s = io::selection_from_json(io::read_json(a.selection));
    dims.r1 = a.r1.value_or(s.r1);
    dims.r2 = a.r2.value_or(s.r2);
    dims.d1 = a.d1.value_or(s.d1);
    dims.d2 = a.d2.value_or(s.d2);
  } else {
    throw UsageError("fit needs --r1 --r2 --d1 --d2 or --selection selection.json");
  }
  dims.validate();
  const LaggedMoments moments(d.used);
  MarcfParams theta0;
  if (!a.init.empty()) {
    theta0 = io::params_from_json(io::read_json(a.init));
    if (!(theta0.dims() == dims)) throw UsageError("--init parameters do not match the dimensions");
  } else {
    theta0 = initialize(moments, dims, cfg);
  }
  const FitReport rep = fit(theta0, moments, cfg);
  const fs::path dir = ensure_dir(a.out);
  Json model = io::params_to_json(rep.theta_hat);
  if (d.transform) model["standardization"] = d.transform->to_json();
  io::write_json((dir / "model.json").string(), model);
  Json report = io::fit_report_to_json(rep);
  report["config"] = io::config_to_json(cfg);
  report["bic"] = io::number(bic(TransitionSample(d.used), rep.theta_hat, dims));
  io::write_json((dir / "fit_report.json").string(), report);
  std::cout << "iterations " << rep.iterations_run << ", converged " << std::boolalpha
            << rep.converged << ", objective " << io::format_double(rep.objective_trace.back())
            << '\n';
  return 0;
}

// ---- forecast ------------------------------------------------------------

struct ForecastArgs {
  std::string data;
  std::string model;
  std::string out = ".";
};

int cmd_forecast(const ForecastArgs& a) {
  const Json mj = io::read_json(a.model);
  const MarcfParams theta = io::params_from_json(mj);
  const MatrixSeries raw = io::read_dataset(a.data);
  Matrix last = raw[raw.size() - 1];
  std::optional<io::Standardization> st;
  if (mj.contains("standardization")) {
    st = io::Standardization::from_json(mj["standardization"]);
    last = (last - st->mean).cwiseQuotient(st->sd);
  }
  Matrix yhat = forecast_one(theta, last);
  if (st) yhat = st->invert(yhat);
  const fs::path dir = ensure_dir(a.out);
  io::write_json((dir / "forecast.json").string(),
                 {{"t", raw.size()}, {"forecast", io::matrix_to_json(yhat)}});
  std::ofstream csv((dir / "forecast.csv").string());
  csv << 't';
  for (Eigen::Index j = 0; j < yhat.cols(); ++j)
    for (Eigen::Index i = 0; i < yhat.rows(); ++i) csv << ",y_" << i + 1 << '_' << j + 1;
  csv << '\n' << raw.size();
  for (Eigen::Index j = 0; j < yhat.cols(); ++j)
    for (Eigen::Index i = 0; i < yhat.rows(); ++i) csv << ',' << io::format_double(yhat(i, j));
  csv << '\n';
  std::cout << "wrote " << (dir / "forecast.csv").string() << '\n';
  return 0;
}

// ---- eval ----------------------------------------------------------------

struct EvalArgs {
  std::string data;
  std::size_t window = 0;
  std::size_t n_windows = 15;
  std::vector<std::string> models{"marcf", "rrmar", "persistence"};
  std::optional<int> rbar1, rbar2;
  bool standardize = false;
  std::string out = ".";
  Common common;
};

int cmd_eval(const EvalArgs& a) {
  const FitConfig cfg = a.common.resolve();
  const Dataset d = load(a.data, a.standardize);
  const std::size_t window = a.window ? a.window : d.used.size() - a.n_windows;
  const int rbar1 = a.rbar1.value_or(default_rbar(static_cast<int>(d.used.rows())));
  const int rbar2 = a.rbar2.value_or(default_rbar(static_cast<int>(d.used.cols())));
  std::vector<EvalResult> results;
  Json summary = Json::array();
  for (const auto& name : a.models) {
    ModelKind kind;
    if (name == "marcf") kind = ModelKind::marcf;
    else if (name == "rrmar") kind = ModelKind::rrmar;
    else if (name == "persistence") kind = ModelKind::persistence;
    else throw UsageError("unknown model " + name);
    const auto model =
        forecaster_from_first_window(d.used, window, kind, rbar1, rbar2, cfg, a.common.jobs);
    results.push_back(rolling_eval(d.used, window, a.n_windows, *model, a.common.jobs));
    summary.push_back(io::eval_summary_to_json(results.back()));
    std::cout << name << ": mean " << io::format_double(results.back().mean) << ", median "
              << io::format_double(results.back().median) << '\n';
  }
  const fs::path dir = ensure_dir(a.out);
  io::write_eval_csv((dir / "eval.csv").string(), results);
  Json j = {{"results", summary}, {"standardized", a.standardize}};
  io::write_json((dir / "eval_summary.json").string(), j);
  return 0;
}

// ---- gradcheck -----------------------------------------------------------

int cmd_gradcheck(std::uint64_t seed, int trials, double h) {
  const GradcheckResult res = gradient_check(effective_seed(seed), trials, h);
  std::cout << "max relative error " << io::format_double(res.max_rel_error) << " over "
            << res.trials << " instances\n";
  return res.max_rel_error < 1e-6 ? 0 : kExitNumerical;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Matrix autoregression with common factors"};
  app.require_subcommand(1);

  SimulateArgs sim;
  auto* s = app.add_subcommand("simulate", "generate a synthetic dataset and its truth");
  s->add_option("--kind", sim.kind, "marcf or dynamic-mfm");
  s->add_option("--p1", sim.dims.p1);
  s->add_option("--p2", sim.dims.p2);
  s->add_option("--r1", sim.dims.r1);
  s->add_option("--r2", sim.dims.r2);
  s->add_option("--d1", sim.dims.d1);
  s->add_option("--d2", sim.dims.d2);
  s->add_option("--T", sim.T, "number of transitions");
  s->add_option("--seed", sim.seed);
  s->add_option("--out", sim.out, "output directory");
  s->add_option("--burn-in", sim.burn_in);
  s->add_option("--sin-theta-min", sim.sin_theta_min);
  s->add_option("--max-rejects", sim.max_rejects);

  SelectArgs sel;
  auto* se = app.add_subcommand("select", "choose ranks and common dimensions");
  se->add_option("--data", sel.data, "series.csv or its directory")->required();
  se->add_option("--rbar1", sel.rbar1);
  se->add_option("--rbar2", sel.rbar2);
  se->add_flag("--standardize", sel.standardize, "zero mean, unit variance per entry");
  se->add_option("--out", sel.out, "output directory");
  add_common(se, sel.common);

  FitArgs fa;
  auto* f = app.add_subcommand("fit", "estimate parameters at given dimensions");
  f->add_option("--data", fa.data, "series.csv or its directory")->required();
  f->add_option("--r1", fa.r1);
  f->add_option("--r2", fa.r2);
  f->add_option("--d1", fa.d1);
  f->add_option("--d2", fa.d2);
  f->add_option("--selection", fa.selection, "selection.json from the select command");
  f->add_option("--init", fa.init, "model.json to start from");
  f->add_flag("--standardize", fa.standardize);
  f->add_option("--out", fa.out, "output directory");
  add_common(f, fa.common);

  ForecastArgs fo;
  auto* fc = app.add_subcommand("forecast", "one-step forecast from a fitted model");
  fc->add_option("--data", fo.data)->required();
  fc->add_option("--model", fo.model, "model.json")->required();
  fc->add_option("--out", fo.out);

  EvalArgs ev;
  auto* e = app.add_subcommand("eval", "rolling one-step forecast evaluation");
  e->add_option("--data", ev.data)->required();
  e->add_option("--window", ev.window, "observations per window (default: all but the scored ones)");
  e->add_option("--n-windows", ev.n_windows);
  e->add_option("--models", ev.models, "any of marcf, rrmar, persistence")->delimiter(',');
  e->add_option("--rbar1", ev.rbar1);
  e->add_option("--rbar2", ev.rbar2);
  e->add_flag("--standardize", ev.standardize);
  e->add_option("--out", ev.out);
  add_common(e, ev.common);

  std::uint64_t gc_seed = 0;
  int gc_trials = 20;
  double gc_h = 1e-5;
  auto* g = app.add_subcommand("gradcheck", "compare analytic and finite-difference gradients");
  g->add_option("--seed", gc_seed);
  g->add_option("--trials", gc_trials)->check(CLI::PositiveNumber);
  g->add_option("--step", gc_h, "finite-difference step");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (*s) return cmd_simulate(sim);
    if (*se) return cmd_select(sel);
    if (*f) return cmd_fit(fa);
    if (*fc) return cmd_forecast(fo);
    if (*e) return cmd_eval(ev);
    if (*g) return cmd_gradcheck(gc_seed, gc_trials, gc_h);
  } catch (const UsageError& err) {
    std::cerr << "error: " << err.what() << '\n';
    return kExitUsage;
  } catch (const ShapeError& err) {
    std::cerr << "error: " << err.what() << '\n';
    return kExitUsage;
  } catch (const NumericalError& err) {
    std::cerr << "numerical failure: " << err.what() << '\n';
    return kExitNumerical;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << '\n';
    return kExitNumerical;
  }
  return kExitUsage;
}
