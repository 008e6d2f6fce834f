// SPDX-License-Identifier: Apache-2.0
//
// mgbound: evaluate martingale tail envelopes, simulate and verify the
// built-in martingale families, calibrate constants and run the regression
// and self-normalized applications.
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "mgbound/mgbound.h"
#include "output.hpp"

using namespace mgcli;
using json = nlohmann::ordered_json;

namespace {

struct ModelDeleter {
  void operator()(mgb_model* m) const { mgb_model_free(m); }
};
struct PathDeleter {
  void operator()(mgb_path* p) const { mgb_path_free(p); }
};
struct DatasetDeleter {
  void operator()(mgb_dataset* d) const { mgb_dataset_free(d); }
};
struct ReportDeleter {
  void operator()(mgb_verify_report* r) const { mgb_verify_report_free(r); }
};
using ModelPtr = std::unique_ptr<mgb_model, ModelDeleter>;
using PathPtr = std::unique_ptr<mgb_path, PathDeleter>;
using DatasetPtr = std::unique_ptr<mgb_dataset, DatasetDeleter>;
using ReportPtr = std::unique_ptr<mgb_verify_report, ReportDeleter>;

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// ---- shared option groups

struct Grid {
  std::vector<double> xs;
  double from = 0.0, to = 4.0, step = 0.5;

  void attach(CLI::App* app, double f, double t, double s) {
    from = f;
    to = t;
    step = s;
    app->add_option("--x", xs, "Explicit evaluation points (overrides the range)")->delimiter(',');
    app->add_option("--x-from", from, "First grid point")->capture_default_str();
    app->add_option("--x-to", to, "Last grid point")->capture_default_str();
    app->add_option("--x-step", step, "Grid spacing")->capture_default_str();
  }

  std::vector<double> points() const {
    if (!xs.empty()) return xs;
    if (!(step > 0.0) || !std::isfinite(from) || !std::isfinite(to)) throw CliError{kUsage, "--x-step must be positive"};
    if (to < from) throw CliError{kUsage, "--x-to must not be below --x-from"};
    const auto k = static_cast<long long>(std::floor((to - from) / step + 1e-9));
    if (k > 10'000'000) throw CliError{kUsage, "grid too large"};
    std::vector<double> g;
    for (long long i = 0; i <= k; ++i) g.push_back(from + static_cast<double>(i) * step);
    return g;
  }
};

struct ModelFlags {
  std::string model = "rademacher";
  std::size_t n = 100;
  std::vector<double> weights;
  double delta = 0.0;
  double a = 1.0, b = 1.0, sigma = 1.0, theta = 0.0;
  std::string noise = "rademacher";
  std::string model_json;

  void attach(CLI::App* app) {
    app->add_option("--model", model, "Model family")
        ->check(CLI::IsMember({"rademacher", "weights", "variance-switch", "regression", "selfnorm"}))
        ->capture_default_str();
    app->add_option("--n", n, "Number of steps")->capture_default_str();
    app->add_option("--weights", weights, "Step weights for --model weights (sum of squares 1)")->delimiter(',');
    app->add_option("--delta", delta, "Variance-switch amplitude delta")->capture_default_str();
    app->add_option("--a", a, "Lower covariate / magnitude bound")->capture_default_str();
    app->add_option("--b", b, "Upper covariate / magnitude bound")->capture_default_str();
    app->add_option("--sigma", sigma, "Regression noise scale")->capture_default_str();
    app->add_option("--theta", theta, "Regression slope")->capture_default_str();
    app->add_option("--noise", noise, "Regression noise family")
        ->check(CLI::IsMember({"rademacher", "three-point"}))
        ->capture_default_str();
    app->add_option("--model-json", model_json, "Read the model definition from a JSON file");
  }

  mgb_noise noise_kind() const { return noise == "three-point" ? MGB_NOISE_THREE_POINT : MGB_NOISE_RADEMACHER; }

  ModelPtr build() const {
    mgb_model* m = nullptr;
    if (!model_json.empty()) {
      std::ifstream f(model_json);
      if (!f) throw CliError{kFailure, "cannot read model file '" + model_json + "'"};
      std::stringstream ss;
      ss << f.rdbuf();
      check(mgb_model_from_json(ss.str().c_str(), &m));
      return ModelPtr(m);
    }
    if (model == "rademacher") {
      check(mgb_model_equal_weights(n, &m));
    } else if (model == "weights") {
      if (weights.empty()) throw CliError{kUsage, "--model weights requires --weights"};
      check(mgb_model_scaled_rademacher(weights.data(), weights.size(), &m));
    } else if (model == "variance-switch") {
      check(mgb_model_variance_switch(n, delta, &m));
    } else if (model == "regression") {
      check(mgb_model_regression(theta, n, a, b, sigma, noise_kind(), &m));
    } else {
      check(mgb_model_self_normalized(n, a, b, &m));
    }
    return ModelPtr(m);
  }
};

std::uint64_t default_seed() {
  if (const char* s = std::getenv("MGBOUND_SEED"); s && *s) {
    char* end = nullptr;
    const unsigned long long v = std::strtoull(s, &end, 10);
    if (!end || *end != '\0') throw CliError{kUsage, "MGBOUND_SEED must be an unsigned integer"};
    return v;
  }
  return 0;
}

struct SimFlags {
  std::uint64_t paths = 100000;
  std::uint64_t seed = 0;
  unsigned workers = 1;
  std::uint64_t chunk_size = 4096;
  double confidence = 0.99;
  bool exhaustive = false;
  bool no_enumerate = false;
  CLI::Option* seed_opt = nullptr;

  void attach(CLI::App* app) {
    app->add_option("--paths", paths, "Number of Monte Carlo paths")->capture_default_str();
    seed_opt = app->add_option("--seed", seed, "Generator seed (default: $MGBOUND_SEED or 0)");
    app->add_option("--workers", workers, "Worker threads (0 = all cores)")->capture_default_str();
    app->add_option("--chunk-size", chunk_size, "Paths per deterministic chunk")->capture_default_str();
    app->add_option("--confidence", confidence, "Confidence level of intervals and bands")->capture_default_str();
    app->add_flag("--exhaustive", exhaustive, "Require exact enumeration of the path tree");
    app->add_flag("--no-enumerate", no_enumerate, "Never enumerate; always sample");
  }

  void resolve_seed() {
    if (seed_opt->count() == 0) seed = default_seed();
  }

  mgb_sim_config config() const {
    mgb_sim_config c = mgb_sim_config_default();
    c.paths = paths;
    c.seed = seed;
    c.workers = workers;
    c.chunk_size = chunk_size;
    c.confidence_level = confidence;
    if (exhaustive && no_enumerate) throw CliError{kUsage, "--exhaustive and --no-enumerate are exclusive"};
    c.enumeration = exhaustive ? MGB_ENUM_ALWAYS : no_enumerate ? MGB_ENUM_NEVER : MGB_ENUM_AUTO;
    return c;
  }
};

void attach_output(CLI::App* app, OutputOptions& o) {
  app->add_option("--format", o.format, "Output format")->check(CLI::IsMember({"csv", "json"}))->capture_default_str();
  app->add_option("--out", o.out, "Output file (default stdout)");
  app->add_option("--manifest", o.manifest, "Manifest path for CSV output (default <out>.manifest.json)");
}

/// Every option of the subcommand with its effective value, defaults included.
json collect_parameters(const CLI::App* app) {
  json p = json::object();
  for (const CLI::Option* opt : app->get_options()) {
    std::string name = opt->get_single_name();
    if (name.empty() || name == "help" || name == "out" || name == "manifest") continue;
    if (opt->get_type_size() == 0) {
      p[name] = opt->count() > 0;
      continue;
    }
    if (opt->count() > 0) {
      const auto& r = opt->results();
      if (r.size() == 1) {
        p[name] = r.front();
      } else {
        p[name] = r;
      }
    } else if (!opt->get_default_str().empty()) {
      p[name] = opt->get_default_str();
    }
  }
  return p;
}

struct Run {
  explicit Run(std::string c) : command(std::move(c)) {}
  std::string command;
  CLI::App* app = nullptr;
  Manifest manifest;

  void start(std::uint64_t seed) {
    manifest.command = command;
    manifest.parameters = collect_parameters(app);
    manifest.seed = seed;
    manifest.started_at = timestamp_now();
  }
};

mgb_model_info model_info(const mgb_model* m) {
  mgb_model_info i{};
  check(mgb_model_get_info(m, &i));
  return i;
}

std::string model_id(const mgb_model* m) {
  std::size_t needed = 0;
  check(mgb_model_id(m, nullptr, 0, &needed));
  std::string s(needed, '\0');
  check(mgb_model_id(m, s.data(), s.size(), &needed));
  s.resize(needed - 1);
  return s;
}

json model_json(const mgb_model* m) {
  std::size_t needed = 0;
  check(mgb_model_to_json(m, nullptr, 0, &needed));
  std::string s(needed, '\0');
  check(mgb_model_to_json(m, s.data(), s.size(), &needed));
  s.resize(needed - 1);
  return json::parse(s);
}

const char* method_name(mgb_tail_method m) {
  switch (m) {
    case MGB_TAIL_PLAIN: return "plain_clopper_pearson";
    case MGB_TAIL_IMPORTANCE: return "importance_sampled_delta";
    case MGB_TAIL_EXHAUSTIVE: return "exhaustive";
  }
  return "unknown";
}

double constant_free_bound(double x, const mgb_model_info& info) {
  mgb_envelope e{};
  if (mgb_envelope_eval(MGB_ENV_TAIL_SQ, x, info.epsilon, info.delta, 1.0, 0.0, &e) != MGB_OK) return kNaN;
  return e.value;
}

// ---- bound

struct BoundCmd {
  Run run{"bound"};
  OutputOptions out;
  Grid grid;
  std::string envelope;
  double epsilon = 0.1, delta = 0.0, C = 1.0;
  double v = kNaN;
  std::string dlp_form = "bennett";
  bool f_form = false;
  double qc_l1 = 0.0;
  std::string classical = "bikelis";
  double third = 0.0, trunc2 = 0.0, trunc3 = 0.0, qc_moment = 0.0, delta_m = 1.0;
  double L3n = kNaN, tail_sum = 0.0;
  std::size_t wj_n = 0;
  double wj_a = 1.0, wj_b = 1.0;

  void attach(CLI::App& root) {
    run.app = root.add_subcommand("bound", "Evaluate a closed-form envelope over an x grid");
    CLI::App* a = run.app;
    a->add_option("--envelope", envelope, "Envelope to evaluate")
        ->required()
        ->check(CLI::IsMember({"thm21", "thm22", "cor21", "dlp", "mc-sandwich", "classical", "wang-jing",
                               "regression", "selfnorm", "tail-sq"}));
    a->add_option("--epsilon", epsilon, "Bernstein constant epsilon")->capture_default_str();
    a->add_option("--delta", delta, "Quadratic characteristic tolerance delta")->capture_default_str();
    a->add_option("--C", C, "Absolute constant")->capture_default_str();
    a->add_option("--v", v, "Variance bound v for dlp (default sqrt(1 + delta^2))");
    a->add_option("--dlp-form", dlp_form, "dlp variant")
        ->check(CLI::IsMember({"bennett", "bennett-printed", "bernstein"}))
        ->capture_default_str();
    a->add_flag("--f-form", f_form, "thm22: use the F(x) exp(-xhat^2/2) form");
    a->add_option("--qc-l1", qc_l1, "cor21: E|<S>_n - 1|")->capture_default_str();
    a->add_option("--classical", classical, "classical: which bound fills the value column")
        ->check(CLI::IsMember({"bikelis", "chen-shao", "haeusler-joos"}))
        ->capture_default_str();
    a->add_option("--third-moments", third, "classical: sum of E|xi|^{2+delta_m}")->capture_default_str();
    a->add_option("--truncated-second", trunc2, "classical: truncated second moments")->capture_default_str();
    a->add_option("--truncated-third", trunc3, "classical: truncated third moments")->capture_default_str();
    a->add_option("--qc-moment", qc_moment, "classical: E|<S>_n - 1|^{1+delta_m/2}")->capture_default_str();
    a->add_option("--delta-m", delta_m, "classical: moment excess in (0, 1]")->capture_default_str();
    a->add_option("--L3n", L3n, "wang-jing: Lyapunov ratio");
    a->add_option("--tail-sum", tail_sum, "wang-jing: sum of truncated tail probabilities")->capture_default_str();
    a->add_option("--wj-n", wj_n, "wang-jing: compute inputs for n uniform-magnitude symmetric steps");
    a->add_option("--wj-a", wj_a, "wang-jing: magnitude lower bound")->capture_default_str();
    a->add_option("--wj-b", wj_b, "wang-jing: magnitude upper bound")->capture_default_str();
    grid.attach(a, 0.0, 4.0, 0.5);
    attach_output(a, out);
    a->callback([this] { execute(); });
  }

  void execute() {
    run.start(0);
    const auto xs = grid.points();
    Table t;
    t.columns = {"x", "xhat", "lambda_bar", "value", "log_value"};
    if (envelope == "mc-sandwich") t.columns.insert(t.columns.end(), {"lower", "upper"});
    if (envelope == "classical") t.columns.insert(t.columns.end(), {"bikelis", "chen_shao", "haeusler_joos"});
    if (envelope == "wang-jing") t.columns.insert(t.columns.end(), {"L3n", "tail_prob_sum"});
    if (envelope == "regression" || envelope == "selfnorm" || envelope == "thm22")
      t.columns.insert(t.columns.end(), {"band_lo", "band_hi", "band_valid"});

    for (double x : xs) {
      if (envelope == "mc-sandwich") {
        double lsf = 0, lo = 0, hi = 0;
        check(mgb_mills_sandwich(x, &lo, &hi));
        check(mgb_normal_log_sf(x, &lsf));
        const double lv = lsf + 0.5 * x * x;
        t.add({x, kNaN, kNaN, std::exp(lv), lv, lo, hi});
        continue;
      }
      if (envelope == "classical") {
        mgb_moment_summary m{third, trunc2, trunc3, qc_moment, 0.0, 1.0, 0.0};
        double r[3];
        check(mgb_classical_envelopes(x, &m, delta_m, C, r));
        const double val = classical == "bikelis" ? r[0] : classical == "chen-shao" ? r[1] : r[2];
        t.add({x, kNaN, kNaN, val, std::log(val), r[0], r[1], r[2]});
        continue;
      }
      if (envelope == "wang-jing") {
        double l3 = L3n, ts = tail_sum;
        if (wj_n > 0) {
          check(mgb_wang_jing_inputs(wj_n, wj_a, wj_b, x, &l3, &ts));
        } else if (std::isnan(l3)) {
          throw CliError{kUsage, "wang-jing requires --L3n or --wj-n"};
        }
        double val = 0;
        check(mgb_wang_jing_bound(x, l3, ts, C, &val));
        t.add({x, kNaN, kNaN, val, std::log(val), l3, ts});
        continue;
      }
      mgb_envelope_kind kind = MGB_ENV_TAIL_SQ;
      double aux = 0.0;
      if (envelope == "thm21") kind = MGB_ENV_NONUNIFORM_BE;
      if (envelope == "thm22") kind = f_form ? MGB_ENV_STRENGTHENED_F : MGB_ENV_STRENGTHENED;
      if (envelope == "cor21") {
        kind = MGB_ENV_COROLLARY;
        aux = qc_l1;
      }
      if (envelope == "dlp") {
        kind = dlp_form == "bernstein" ? MGB_ENV_BERNSTEIN
               : dlp_form == "bennett-printed" ? MGB_ENV_BENNETT_PRINTED
                                               : MGB_ENV_BENNETT;
        aux = std::isnan(v) ? std::sqrt(1.0 + delta * delta) : v;
      }
      if (envelope == "regression") kind = MGB_ENV_REGRESSION;
      if (envelope == "selfnorm") kind = MGB_ENV_SELFNORM;
      mgb_envelope e{};
      check(mgb_envelope_eval(kind, x, epsilon, delta, C, aux, &e));
      std::vector<Cell> row{x, e.xhat, e.lambda_bar, e.value, e.log_value};
      if (envelope == "regression" || envelope == "selfnorm" || envelope == "thm22") {
        double lo = 0, hi = 0;
        int valid = 0;
        check(mgb_ratio_band(x, epsilon, envelope == "thm22" ? delta : 0.0, C, &lo, &hi, &valid));
        row.insert(row.end(), {lo, hi, valid != 0});
      }
      t.add(std::move(row));
    }
    emit(out, run.manifest, t);
  }
};

// ---- simulate

struct SimulateCmd {
  Run run{"simulate"};
  OutputOptions out;
  ModelFlags model;
  SimFlags sim;
  Grid grid;
  std::string what = "tail";
  std::string method = "plain";
  double tilt = kNaN;
  std::uint64_t path_index = 0;
  std::vector<double> lambdas;
  std::vector<double> u_grid{-3, -2.5, -2, -1.5, -1, -0.5, 0, 0.5, 1, 1.5, 2, 2.5, 3};

  void attach(CLI::App& root) {
    run.app = root.add_subcommand("simulate", "Simulate a model: tails, distances, paths and tilt checks");
    CLI::App* a = run.app;
    a->add_option("--what", what, "Quantity to produce")
        ->check(CLI::IsMember({"tail", "be", "path", "clt", "z", "qc"}))
        ->capture_default_str();
    a->add_option("--method", method, "Tail estimator")
        ->check(CLI::IsMember({"plain", "is", "both"}))
        ->capture_default_str();
    a->add_option("--tilt", tilt, "Tilt lambda (IS, path); default lambda_bar(x) for IS, 0 for paths");
    a->add_option("--path-index", path_index, "Path index for --what path")->capture_default_str();
    a->add_option("--lambda", lambdas, "Tilts for --what z (default 0.1, 0.5, 0.9 over epsilon)")->delimiter(',');
    a->add_option("--u", u_grid, "u grid for --what clt")->delimiter(',')->capture_default_str();
    model.attach(a);
    sim.attach(a);
    grid.attach(a, 0.0, 4.0, 0.5);
    attach_output(a, out);
    a->callback([this] { execute(); });
  }

  void execute() {
    sim.resolve_seed();
    run.start(sim.seed);
    const ModelPtr m = model.build();
    const mgb_model_info info = model_info(m.get());
    const mgb_sim_config cfg = sim.config();
    run.manifest.parameters["model_id"] = model_id(m.get());
    run.manifest.parameters["model_definition"] = model_json(m.get());
    Table t;
    json summary = json::object();

    if (what == "tail") {
      const auto xs = grid.points();
      t.columns = {"x", "method", "p_hat", "ci_lo", "ci_hi", "std_error", "effective_samples", "hits", "paths", "tilt",
                   "constant_free_bound"};
      auto add = [&](const mgb_tail_estimate& e) {
        t.add({e.x, std::string(method_name(e.method)), e.p_hat, e.ci_lo, e.ci_hi, e.std_error, e.effective_samples,
               e.hits, e.paths, e.tilt, constant_free_bound(e.x, info)});
      };
      std::vector<mgb_tail_estimate> plain(xs.size());
      if (method != "is") check(mgb_estimate_tail_plain(m.get(), &cfg, xs.data(), xs.size(), plain.data()));
      for (std::size_t i = 0; i < xs.size(); ++i) {
        if (method != "is") add(plain[i]);
        if (method != "plain") {
          mgb_tail_estimate e{};
          check(mgb_estimate_tail_is(m.get(), &cfg, xs[i], tilt, &e));
          add(e);
        }
      }
    } else if (what == "be") {
      const auto xs = grid.points();
      std::vector<double> cdf(xs.size());
      mgb_be_distance d{};
      check(mgb_estimate_be_distance(m.get(), &cfg, xs.data(), xs.size(), cdf.data(), &d));
      t.columns = {"x", "cdf", "normal_cdf", "abs_diff"};
      for (std::size_t i = 0; i < xs.size(); ++i) {
        double phi = 0;
        check(mgb_normal_cdf(xs[i], &phi));
        t.add({xs[i], cdf[i], phi, std::fabs(cdf[i] - phi)});
      }
      summary = {{"d_hat", d.d_hat}, {"argmax_x", d.argmax_x}, {"uniform_error_band", d.uniform_error_band},
                 {"paths", d.paths}, {"exact", d.exact != 0}};
    } else if (what == "path") {
      mgb_path* raw = nullptr;
      const double lam = std::isnan(tilt) ? 0.0 : tilt;
      check(mgb_simulate_tilted_path(m.get(), lam, sim.seed, path_index, &raw));
      const PathPtr p(raw);
      std::size_t n = 0, needed = 0;
      check(mgb_path_steps(p.get(), &n));
      std::vector<double> xi(n), s(n + 1), qc(n + 1);
      check(mgb_path_copy(p.get(), MGB_PATH_DIFFERENCES, xi.data(), xi.size(), &needed));
      check(mgb_path_copy(p.get(), MGB_PATH_PARTIAL_SUMS, s.data(), s.size(), &needed));
      check(mgb_path_copy(p.get(), MGB_PATH_QC, qc.data(), qc.size(), &needed));
      t.columns = {"step", "xi", "s", "qc"};
      t.add({std::uint64_t{0}, 0.0, s[0], qc[0]});
      for (std::size_t k = 1; k <= n; ++k) t.add({std::uint64_t{k}, xi[k - 1], s[k], qc[k]});
      double sq = 0;
      check(mgb_path_sq_bracket(p.get(), &sq));
      summary = {{"path_index", path_index}, {"tilt", lam}, {"sq_bracket", sq}};
    } else if (what == "clt") {
      const auto xs = grid.points();
      t.columns = {"x", "lambda_bar", "xhat", "degenerate", "sup_u_distance", "sup_y_distance", "uniform_error_band",
                   "paths", "exact"};
      for (double x : xs) {
        mgb_clt_report r{};
        check(mgb_conjugate_clt_check(m.get(), &cfg, x, u_grid.data(), u_grid.size(), &r));
        t.add({r.x, r.lambda_bar, r.xhat, r.degenerate != 0, r.sup_u_distance, r.sup_y_distance,
               r.uniform_error_band, r.paths, r.exact != 0});
      }
    } else if (what == "z") {
      std::vector<double> ls = lambdas;
      if (ls.empty())
        for (double f : {0.1, 0.5, 0.9}) ls.push_back(f / info.epsilon);
      t.columns = {"lambda", "lambda_eps", "mean", "std_error", "z_score", "paths", "exact"};
      for (double l : ls) {
        mgb_z_report r{};
        check(mgb_z_martingale_check(m.get(), &cfg, l, &r));
        t.add({r.lambda, r.lambda * info.epsilon, r.mean, r.std_error, r.z_score, r.paths, r.exact != 0});
      }
    } else {
      double d = 0;
      check(mgb_qc_deviation_l1(m.get(), &cfg, &d));
      t.columns = {"qc_l1", "paths"};
      t.add({d, cfg.paths});
    }
    emit(out, run.manifest, t, summary);
  }
};

// ---- verify

struct VerifyCmd {
  Run run{"verify"};
  OutputOptions out;
  ModelFlags model;
  SimFlags sim;
  std::uint64_t path_checks = 0;
  std::vector<double> tilt_fractions{0.1, 0.5, 0.9};
  std::vector<double> domination_grid{0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0};
  bool no_domination = false;
  bool no_z = false;

  void attach(CLI::App& root) {
    run.app = root.add_subcommand("verify", "Run the hard-assertion suite; exit 4 on any violation");
    CLI::App* a = run.app;
    a->add_option("--path-checks", path_checks, "Paths for per-path identities (0 = --paths)")->capture_default_str();
    a->add_option("--tilt-fractions", tilt_fractions, "Tilts as fractions of 1/epsilon")
        ->delimiter(',')
        ->capture_default_str();
    a->add_option("--domination-grid", domination_grid, "x values for the tail domination check")
        ->delimiter(',')
        ->capture_default_str();
    a->add_flag("--no-domination", no_domination, "Skip the tail domination check");
    a->add_flag("--no-z", no_z, "Skip the informational E[Z] = 1 report");
    model.attach(a);
    sim.attach(a);
    attach_output(a, out);
    a->callback([this] { execute(); });
  }

  void execute() {
    sim.resolve_seed();
    run.start(sim.seed);
    const ModelPtr m = model.build();
    const mgb_sim_config cfg = sim.config();
    run.manifest.parameters["model_id"] = model_id(m.get());
    run.manifest.parameters["model_definition"] = model_json(m.get());
    mgb_verify_options o = mgb_verify_options_default();
    o.tilt_fractions = tilt_fractions.data();
    o.n_tilt_fractions = tilt_fractions.size();
    o.domination_grid = domination_grid.data();
    o.n_domination_grid = domination_grid.size();
    o.path_check_paths = path_checks;
    o.check_domination = no_domination ? 0 : 1;
    o.check_z_mean = no_z ? 0 : 1;
    mgb_verify_report* raw = nullptr;
    check(mgb_run_verification(m.get(), &cfg, &o, &raw));
    const ReportPtr r(raw);
    mgb_verify_summary s{};
    check(mgb_verify_get_summary(r.get(), &s));

    Table t;
    t.columns = {"check", "x", "lambda", "lhs", "rhs", "pass", "seed", "path_index", "detail"};
    const std::uint64_t none = 0;
    t.add({std::string("a1_binding_epsilon"), kNaN, kNaN, s.a1_binding_epsilon, model_info(m.get()).epsilon,
           s.a1_pass != 0, sim.seed, none, std::string("binding vs declared epsilon")});
    t.add({std::string("a2_delta_sq"), kNaN, kNaN, s.a2_delta_sq, kNaN, true, sim.seed, none, std::string("")});
    t.add({std::string("path_violations"), kNaN, kNaN, static_cast<double>(s.path_violation_count), 0.0,
           s.path_violation_count == 0, sim.seed, s.paths_checked, std::string("paths checked in path_index")});
    t.add({std::string("min_drift_upper_slack"), kNaN, kNaN, s.min_drift_upper_slack, 0.0,
           s.min_drift_upper_slack >= 0.0, sim.seed, none, std::string("")});
    t.add({std::string("min_psi_upper_slack"), kNaN, kNaN, s.min_psi_upper_slack, 0.0, s.min_psi_upper_slack >= 0.0,
           sim.seed, none, std::string("")});
    t.add({std::string("min_half_cosh_slack"), kNaN, kNaN, s.min_half_cosh_slack, 0.0, s.min_half_cosh_slack >= 0.0,
           sim.seed, none, std::string("")});
    for (std::size_t i = 0; i < s.n_domination; ++i) {
      mgb_tail_estimate e{};
      double bound = 0;
      check(mgb_verify_get_domination(r.get(), i, &e, &bound));
      t.add({std::string("domination"), e.x, e.tilt, e.ci_hi, bound, e.ci_hi <= bound * (1 + 1e-12), e.seed, e.paths,
             std::string(method_name(e.method))});
    }
    for (std::size_t i = 0; i < s.n_z_checks; ++i) {
      mgb_z_report z{};
      check(mgb_verify_get_z_check(r.get(), i, &z));
      t.add({std::string("z_mean_informational"), kNaN, z.lambda, z.mean, 1.0, std::fabs(z.z_score) <= 4.0, sim.seed,
             z.paths, std::string("z_score=") + format_double(z.z_score)});
    }
    for (std::size_t i = 0; i < s.n_violations; ++i) {
      mgb_violation v{};
      check(mgb_verify_get_violation(r.get(), i, &v));
      t.add({std::string(v.check), kNaN, v.lambda, v.lhs, v.rhs, false, v.seed, v.path_index, std::string(v.detail)});
    }
    json summary = {{"ok", s.ok != 0},
                    {"paths_checked", s.paths_checked},
                    {"path_violation_count", s.path_violation_count},
                    {"violations_listed", s.n_violations}};
    emit(out, run.manifest, t, summary);
    if (!s.ok) throw CliError{kViolation, "verification found violations; replay with simulate --what path "
                                          "--seed <seed> --path-index <path_index> --tilt <lambda>"};
  }
};

// ---- calibrate

struct CalibrateCmd {
  Run run{"calibrate"};
  OutputOptions out;
  ModelFlags model;
  SimFlags sim;
  Grid grid;
  std::string envelope = "thm21";

  void attach(CLI::App& root) {
    run.app = root.add_subcommand("calibrate", "Smallest constant C making an envelope dominate the simulation");
    CLI::App* a = run.app;
    a->add_option("--envelope", envelope, "Envelope to calibrate")
        ->check(CLI::IsMember({"thm21", "thm22", "cor21", "brmti", "thm33"}))
        ->capture_default_str();
    model.attach(a);
    sim.attach(a);
    grid.attach(a, 0.0, 4.0, 0.5);
    attach_output(a, out);
    a->callback([this] { execute(); });
  }

  void execute() {
    sim.resolve_seed();
    run.start(sim.seed);
    const ModelPtr m = model.build();
    const mgb_sim_config cfg = sim.config();
    run.manifest.parameters["model_id"] = model_id(m.get());
    run.manifest.parameters["model_definition"] = model_json(m.get());
    const auto xs = grid.points();
    std::vector<double> emp(xs.size()), unit(xs.size()), req(xs.size());
    mgb_calibration c{};
    check(mgb_calibrate(m.get(), &cfg, envelope.c_str(), xs.data(), xs.size(), &c, emp.data(), unit.data(),
                        req.data()));
    Table t;
    t.columns = {"x", "empirical", "unit", "c_required", "c_hat", "binding_x"};
    for (std::size_t i = 0; i < xs.size(); ++i) t.add({xs[i], emp[i], unit[i], req[i], c.c_hat, c.binding_x});
    json summary = {{"envelope", envelope}, {"c_hat", c.c_hat},   {"binding_x", c.binding_x},
                    {"qc_l1", c.qc_l1},     {"paths", c.paths}, {"exact", c.exact != 0}};
    emit(out, run.manifest, t, summary);
  }
};

// ---- regress

struct RegressCmd {
  Run run{"regress"};
  OutputOptions out;
  ModelFlags model;
  Grid grid;
  std::string data;
  double level = 0.95, C = 1.0;
  std::string inversion = "ratio-band";
  std::uint64_t seed = 0, index = 0;
  CLI::Option* seed_opt = nullptr;
  double true_theta = kNaN;
  std::uint64_t coverage = 0;
  unsigned workers = 1;
  std::uint64_t chunk_size = 256;

  void attach(CLI::App& root) {
    run.app = root.add_subcommand("regress", "Least-squares deviations, intervals and coverage");
    CLI::App* a = run.app;
    a->add_option("--data", data, "CSV with header phi,x (default: simulate from the model flags)");
    a->add_option("--level", level, "Interval level")->capture_default_str();
    a->add_option("--C", C, "Absolute constant")->capture_default_str();
    a->add_option("--inversion", inversion, "Inverted statement")
        ->check(CLI::IsMember({"ratio-band", "envelope"}))
        ->capture_default_str();
    seed_opt = a->add_option("--seed", seed, "Seed for simulated data (default: $MGBOUND_SEED or 0)");
    a->add_option("--index", index, "Replication index of the simulated dataset")->capture_default_str();
    a->add_option("--true-theta", true_theta, "True slope for the reduction check (default: --theta when simulated)");
    a->add_option("--coverage", coverage, "Replications of the coverage experiment (0 = skip)")->capture_default_str();
    a->add_option("--workers", workers, "Worker threads for the coverage experiment")->capture_default_str();
    a->add_option("--chunk-size", chunk_size, "Replications per deterministic chunk")->capture_default_str();
    model.attach(a);
    grid.attach(a, 0.0, 4.0, 0.5);
    attach_output(a, out);
    a->callback([this] { execute(); });
  }

  void execute() {
    if (seed_opt->count() == 0) seed = default_seed();
    run.start(seed);
    const mgb_ci_inversion how = inversion == "envelope" ? MGB_CI_ENVELOPE : MGB_CI_RATIO_BAND;
    mgb_model* rm_raw = nullptr;
    check(mgb_model_regression(model.theta, model.n, model.a, model.b, model.sigma, model.noise_kind(), &rm_raw));
    const ModelPtr rm(rm_raw);
    mgb_dataset* raw = nullptr;
    double theta = true_theta;
    if (!data.empty()) {
      check(mgb_dataset_from_csv(data.c_str(), model.sigma, &raw));
    } else {
      check(mgb_dataset_simulate(rm.get(), seed, index, &raw));
      if (std::isnan(theta)) theta = model.theta;
      run.manifest.parameters["model_id"] = model_id(rm.get());
    }
    const DatasetPtr d(raw);
    std::size_t n = 0;
    check(mgb_dataset_size(d.get(), &n));
    double theta_hat = 0;
    check(mgb_least_squares(d.get(), &theta_hat));
    mgb_regression_eps e{};
    check(mgb_regression_epsilons(d.get(), model.noise_kind(), &e));

    Table t;
    t.columns = {"quantity", "x", "value"};
    auto put = [&](const char* q, double x, double v) { t.add({std::string(q), x, v}); };
    put("n", kNaN, static_cast<double>(n));
    put("theta_hat", kNaN, theta_hat);
    put("eps1", kNaN, e.eps1);
    put("eps2", kNaN, e.eps2);
    put("eps", kNaN, e.eps);
    const bool valid = e.eps <= 0.5;
    put("eps_valid", kNaN, valid ? 1.0 : 0.0);
    if (!std::isnan(theta)) {
      mgb_reduction red{};
      check(mgb_regression_reduction_check(d.get(), theta, &red));
      put("standardized_error", kNaN, red.lhs);
      put("reduction_residual", kNaN, red.residual);
      put("reduction_relative", kNaN, red.relative);
    }
    if (valid) {
      mgb_interval ci{};
      check(mgb_regression_ci(d.get(), e.eps, level, C, how, &ci));
      put("x_star", kNaN, ci.x_star);
      put("ci_lo", kNaN, ci.lo);
      put("ci_hi", kNaN, ci.hi);
      put("half_width", kNaN, ci.half_width);
      put("ci_valid", kNaN, ci.valid ? 1.0 : 0.0);
      if (!ci.valid) std::cerr << "warning: critical value outside the validity range of the inverted bound\n";
      for (double x : grid.points()) {
        mgb_envelope env{};
        check(mgb_envelope_eval(MGB_ENV_REGRESSION, x, e.eps, 0.0, C, 0.0, &env));
        double lo = 0, hi = 0;
        int bv = 0;
        check(mgb_ratio_band(x, e.eps, 0.0, C, &lo, &hi, &bv));
        put("envelope", x, env.value);
        put("band_lo", x, lo);
        put("band_hi", x, hi);
        put("band_valid", x, bv ? 1.0 : 0.0);
      }
    } else {
      std::cerr << "warning: eps = " << format_double(e.eps)
                << " violates condition (A1) (must be <= 1/2); envelopes and interval skipped\n";
    }
    if (coverage > 0) {
      mgb_coverage cov{};
      check(mgb_regression_coverage(rm.get(), level, C, coverage, seed, workers, chunk_size, how, &cov));
      put("coverage", kNaN, cov.coverage);
      put("coverage_std_error", kNaN, cov.std_error);
      put("covered", kNaN, static_cast<double>(cov.covered));
      put("replications", kNaN, static_cast<double>(cov.replications));
      put("max_eps", kNaN, cov.max_eps);
      put("mean_x_star", kNaN, cov.mean_x_star);
      put("invalid", kNaN, static_cast<double>(cov.invalid));
    }
    emit(out, run.manifest, t);
  }
};

// ---- selfnorm

std::vector<double> read_sample(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw CliError{kFailure, "cannot read sample file '" + path + "'"};
  std::vector<double> v;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(f, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    char* end = nullptr;
    const double x = std::strtod(line.c_str(), &end);
    if (end == line.c_str() || *end != '\0') {
      if (lineno == 1) continue;  // header
      throw CliError{kFailure, path + ":" + std::to_string(lineno) + ": not a number"};
    }
    v.push_back(x);
  }
  return v;
}

struct SelfNormCmd {
  Run run{"selfnorm"};
  OutputOptions out;
  ModelFlags model;
  SimFlags sim;
  Grid grid;
  std::string data;
  double declared_eps = kNaN;
  double C = 1.0;
  bool monte_carlo = false;

  void attach(CLI::App& root) {
    run.app = root.add_subcommand("selfnorm", "Self-normalized statistic with envelopes and comparison bounds");
    CLI::App* a = run.app;
    a->add_option("--data", data, "One value per line, optional header (default: simulate --n/--a/--b)");
    a->add_option("--declared-eps", declared_eps, "Use b/(a sqrt n) style epsilon instead of the empirical one");
    a->add_option("--C", C, "Absolute constant")->capture_default_str();
    a->add_flag("--monte-carlo", monte_carlo, "Also estimate |P(T <= x) - Phi(x)| by simulation of the model");
    model.attach(a);
    sim.attach(a);
    grid.attach(a, 0.0, 3.0, 0.5);
    attach_output(a, out);
    a->callback([this] { execute(); });
  }

  void execute() {
    sim.resolve_seed();
    run.start(sim.seed);
    mgb_model* raw = nullptr;
    check(mgb_model_self_normalized(model.n, model.a, model.b, &raw));
    const ModelPtr m(raw);
    std::vector<double> sample;
    double eps = declared_eps;
    bool from_model = data.empty();
    if (from_model) {
      mgb_path* praw = nullptr;
      check(mgb_simulate_path(m.get(), sim.seed, 0, &praw));
      const PathPtr p(praw);
      std::size_t n = 0, needed = 0;
      check(mgb_path_steps(p.get(), &n));
      sample.resize(n);
      check(mgb_path_copy(p.get(), MGB_PATH_DIFFERENCES, sample.data(), n, &needed));
      if (std::isnan(eps)) eps = model_info(m.get()).epsilon;
      run.manifest.parameters["model_id"] = model_id(m.get());
    } else {
      sample = read_sample(data);
    }
    if (sample.empty()) throw CliError{kUsage, "empty sample"};
    double stat = 0;
    check(mgb_self_norm_statistic(sample.data(), sample.size(), &stat));
    if (std::isnan(eps)) {
      double peak = 0, sq = 0;
      for (double x : sample) {
        peak = std::max(peak, std::fabs(x));
        sq += x * x;
      }
      eps = peak / std::sqrt(sq);
    }
    Table t;
    t.columns = {"quantity", "x", "value"};
    auto put = [&](const char* q, double x, double v) { t.add({std::string(q), x, v}); };
    put("n", kNaN, static_cast<double>(sample.size()));
    put("statistic", kNaN, stat);
    put("eps", kNaN, eps);
    const bool valid = eps > 0.0 && eps <= 0.5;
    put("eps_valid", kNaN, valid ? 1.0 : 0.0);
    const auto xs = grid.points();
    if (valid) {
      for (double x : xs) {
        double env = 0, lo = 0, hi = 0;
        int bv = 0;
        check(mgb_self_norm_envelope(x, eps, C, &env, &lo, &hi, &bv));
        put("envelope", x, env);
        put("band_lo", x, lo);
        put("band_hi", x, hi);
        put("band_valid", x, bv ? 1.0 : 0.0);
      }
    } else {
      std::cerr << "warning: eps = " << format_double(eps)
                << " violates condition (A1) (must lie in (0, 1/2]); envelopes skipped\n";
    }
    if (from_model) {
      for (double x : xs) {
        double l3 = 0, ts = 0, wj = 0;
        check(mgb_wang_jing_inputs(model.n, model.a, model.b, x, &l3, &ts));
        check(mgb_wang_jing_bound(x, l3, ts, C, &wj));
        put("wang_jing", x, wj);
      }
    }
    if (monte_carlo) {
      const mgb_sim_config cfg = sim.config();
      std::vector<double> cdf(xs.size());
      mgb_be_distance d{};
      check(mgb_estimate_be_distance(m.get(), &cfg, xs.data(), xs.size(), cdf.data(), &d));
      for (std::size_t i = 0; i < xs.size(); ++i) {
        double phi = 0;
        check(mgb_normal_cdf(xs[i], &phi));
        put("empirical_cdf", xs[i], cdf[i]);
        put("abs_diff", xs[i], std::fabs(cdf[i] - phi));
      }
      put("d_hat", kNaN, d.d_hat);
      put("uniform_error_band", kNaN, d.uniform_error_band);
    }
    emit(out, run.manifest, t);
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Martingale concentration toolkit: envelopes, simulation, verification and applications"};
  app.set_version_flag("--version", std::string(mgb_version()));
  app.require_subcommand(1);
  BoundCmd bound;
  SimulateCmd simulate;
  VerifyCmd verify;
  CalibrateCmd calibrate;
  RegressCmd regress;
  SelfNormCmd selfnorm;
  bound.attach(app);
  simulate.attach(app);
  verify.attach(app);
  calibrate.attach(app);
  regress.attach(app);
  selfnorm.attach(app);
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  } catch (const CliError& e) {
    std::cerr << "error: " << e.message << "\n";
    return e.code;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kFailure;
  }
  return kOk;
}
