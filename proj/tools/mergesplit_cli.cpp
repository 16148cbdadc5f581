// Batch driver: profile, evolve, modeld, invert, check.
//
// Exit codes: 0 all checks passed, 1 computation or check failure,
// 2 invalid input. Every JSON summary carries the schema version and the
// effective configuration; nothing time-dependent is written to files.

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "mergesplit/acceptance.hpp"
#include "mergesplit/errors.hpp"
#include "mergesplit/evolution.hpp"
#include "mergesplit/model_d.hpp"
#include "mergesplit/params.hpp"
#include "mergesplit/profile.hpp"
#include "mergesplit/series.hpp"
#include "mergesplit/transforms.hpp"

using json = nlohmann::ordered_json;
using namespace mergesplit;

namespace {

constexpr int kSchemaVersion = 1;

struct ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Settings {
  std::string command;
  std::optional<double> alpha, lambda, dt, t_end, grid_min, grid_max, per_decade;
  std::optional<long long> n;
  std::string out = ".";
  std::uint64_t seed = 20240611;
  bool check = false;
  bool quick = false;
};

// Effective values after command defaults are filled in.
struct Run {
  std::string command;
  double alpha = 0.5, lambda = 1.0, dt = 1e-3, t_end = 0.0;
  double grid_min = 0.0, grid_max = 0.0, per_decade = 0.0;
  long long n = 100000;
  std::string out;
  std::uint64_t seed = 0;
  bool check = false, quick = false;

  json config() const {
    json j;
    j["command"] = command;
    j["alpha"] = alpha;
    j["lambda"] = lambda;
    j["n"] = n;
    j["dt"] = dt;
    j["t_end"] = t_end;
    j["grid_min"] = grid_min;
    j["grid_max"] = grid_max;
    j["per_decade"] = per_decade;
    j["seed"] = seed;
    j["check"] = check;
    j["quick"] = quick;
    return j;
  }
};

Run resolve(const Settings& s) {
  Run r;
  r.command = s.command;
  r.out = s.out;
  r.seed = s.seed;
  r.check = s.check;
  r.quick = s.quick;
  double gmin = 1e-16, gmax = 1e4, pd = 40, t_end = 20;
  if (s.command == "modeld") t_end = 12;
  if (s.command == "invert") gmin = 1e-10, gmax = 1e6, pd = 10;
  r.alpha = s.alpha.value_or(0.5);
  r.lambda = s.lambda.value_or(1.0);
  r.n = s.n.value_or(100000);
  r.dt = s.dt.value_or(1e-3);
  r.t_end = s.t_end.value_or(t_end);
  r.grid_min = s.grid_min.value_or(gmin);
  r.grid_max = s.grid_max.value_or(gmax);
  r.per_decade = s.per_decade.value_or(pd);
  return r;
}

void validate(const Run& r) {
  auto need = [](bool ok, const std::string& what) {
    if (!ok) throw ValidationError(what);
  };
  if (r.command == "check") return;
  need(r.alpha > 0.0 && r.alpha < 1.0, "alpha must lie in (0, 1)");
  if (r.command == "profile") return;
  need(r.t_end > 0.0 && std::isfinite(r.t_end), "t-end must be positive");
  if (r.command == "modeld") {
    need(r.lambda > 0.0 && std::isfinite(r.lambda), "lambda must be positive");
    need(r.n >= 2, "n must be at least 2");
    return;
  }
  need(r.grid_min > 0.0 && r.grid_max > r.grid_min && std::isfinite(r.grid_max),
       "grid needs 0 < grid-min < grid-max");
  need(r.per_decade >= 1.0, "per-decade must be at least 1");
  if (r.command == "evolve") {
    need(r.dt > 0.0 && r.dt <= 0.1, "dt must lie in (0, 0.1]");
    const double beta = beta_of_alpha(r.alpha);
    need(r.grid_min <= 0.1 * std::exp(-beta * r.t_end) && r.grid_max >= 10.0,
         "grid must cover the rescaled window [0.1 e^(-beta t), 10]");
  }
}

// RFC 4180: quote when the field holds a comma, quote or line break.
std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) {
    if (c == '"') q += '"';
    q += c;
  }
  return q + '"';
}

std::ofstream open_out(const Run& r, const std::string& name) {
  std::filesystem::create_directories(r.out);
  std::ofstream os(std::filesystem::path(r.out) / name);
  if (!os) throw std::runtime_error("cannot write " + name);
  return os;
}

void write_json(const Run& r, const std::string& name, json body) {
  json j;
  j["schema_version"] = kSchemaVersion;
  j["config"] = r.config();
  for (auto& [k, v] : body.items()) j[k] = v;
  auto os = open_out(r, name);
  os << j.dump(2) << '\n';
}

struct Checks {
  json list = json::array();
  bool ok = true;
  void add(const std::string& name, double value, double limit, bool passed) {
    list.push_back({{"name", name}, {"value", value}, {"limit", limit}, {"passed", passed}});
    ok = ok && passed;
  }
};

int cmd_profile(const Run& r) {
  const auto pf = build_profile(r.alpha);
  const auto& c = pf.curve();
  const auto& p = c.params;
  double overlap = 0.0;
  const double w_edge = 0.5 * pf.series().radius_est;
  for (std::size_t k = 0; k < c.size(); ++k) {
    const double z = std::exp(c.tau(k));
    if (std::pow(z, r.alpha) > w_edge) break;
    overlap = std::max(overlap, std::abs(c.u[k] / eval_series(pf.series(), z).u - 1.0));
  }
  const double res = residual(c);
  {
    auto os = open_out(r, "profile.csv");
    write_profile_csv(os, c, 10);
  }
  {
    auto os = open_out(r, "series.csv");
    write_series_csv(os, pf.series());
  }
  json s;
  s["beta"] = p.beta;
  s["alpha_hat"] = p.alpha_hat;
  s["c_hat_fit"] = c.c_hat_fit;
  s["c_tail"] = pf.tail_amplitude();
  s["tail_slope"] = c.tail_slope;
  s["radius_estimate"] = pf.series().radius_est;
  s["residual"] = res;
  s["series_overlap_error"] = overlap;
  Checks ch;
  if (r.check) {
    const auto [d1, d2] = eigen_residuals(p);
    ch.add("eigen_determinants", std::max(std::abs(d1), std::abs(d2)), 1e-12,
           std::max(std::abs(d1), std::abs(d2)) < 1e-12);
    ch.add("ode_residual", res, 1e-8, res < 1e-8);
    ch.add("series_overlap", overlap, 1e-6, overlap < 1e-6);
    const double slope = std::abs(c.tail_slope + p.alpha_hat) / p.alpha_hat;
    ch.add("tail_slope_relative", slope, 0.01, slope < 0.01);
    s["checks"] = ch.list;
  }
  write_json(r, "profile.json", s);
  std::cout << "beta=" << p.beta << " alpha_hat=" << p.alpha_hat << " c_hat=" << c.c_hat_fit
            << " residual=" << res << '\n';
  return ch.ok ? 0 : 1;
}

int cmd_evolve(const Run& r) {
  const auto pf = build_profile(r.alpha);
  const auto g = GeometricGrid::per_decade(r.grid_min, r.grid_max, r.per_decade);
  const double a = r.alpha;
  const auto u0 = GridFunction::sample(g, [a](double s) { return std::pow(s, a); }, a);
  EvolutionConfig cfg;
  cfg.dt = r.dt;
  cfg.dt_max = r.dt;
  for (int t = 1; t < r.t_end; ++t) cfg.snapshot_times.push_back(t);
  const auto tr = evolve_richardson(u0, INFINITY, r.t_end, cfg);
  {
    auto os = open_out(r, "evolve.csv");
    write_snapshots_csv(os, tr);
  }
  json series = json::array();
  Checks ch;
  double prev = INFINITY;
  bool decreasing = true;
  for (std::size_t i = 1; i < tr.size(); ++i) {
    const double e = rescaled_error(tr[i], pf, 0.1, 10.0);
    series.push_back({{"t", tr[i].time}, {"rescaled_error", e}, {"m0", tr[i].m0}});
    decreasing = decreasing && e < prev;
    prev = e;
  }
  json s;
  s["initial_data"] = "s^alpha";
  s["scheme"] = "IMEX with Richardson extrapolation";
  s["rescaled_error"] = series;
  if (r.check) {
    ch.add("error_decreasing", decreasing ? 1.0 : 0.0, 1.0, decreasing);
    ch.add("final_error", prev, 1e-3, prev < 1e-3);
    s["checks"] = ch.list;
  }
  write_json(r, "evolve.json", s);
  std::cout << "rescaled error at t=" << tr.back().time << ": " << prev << '\n';
  return ch.ok ? 0 : 1;
}

int cmd_modeld(const Run& r) {
  const auto pf = build_profile(r.alpha);
  const auto st = init_powerlaw(r.alpha, r.lambda, static_cast<std::size_t>(r.n));
  ModelDControls ctl;
  for (int t = 1; t < r.t_end; ++t) ctl.snapshot_times.push_back(t);
  const auto tr = integrate(st, r.t_end, ctl);
  {
    // the full distribution only at the ends; sizes with f = 0 are skipped
    auto os = open_out(r, "modeld.csv");
    write_modeld_csv(os, {tr.front(), tr.back()}, 0.0);
  }
  json series = json::array();
  bool bound = true;
  for (const auto& s : tr) {
    json row{{"t", s.time}, {"m0", s.m0}, {"m1", s.m1}, {"mass_leak", s.mass_leak}};
    try {
      row["theorem_D_error"] = theorem_D_error(s, pf, r.lambda);
    } catch (const NumericalError& e) {
      row["theorem_D_error"] = nullptr;
      row["note"] = e.what();
    }
    if (s.time > 0.0) bound = bound && s.m0 <= 1.0 / (1.0 - std::exp(-s.time));
    series.push_back(row);
  }
  json s;
  s["series"] = series;
  Checks ch;
  if (r.check) {
    ch.add("m0_bound", bound ? 1.0 : 0.0, 1.0, bound);
    s["checks"] = ch.list;
  }
  write_json(r, "modeld.json", s);
  std::cout << "m0(" << tr.back().time << ")=" << tr.back().m0 << '\n';
  return ch.ok ? 0 : 1;
}

int cmd_invert(const Run& r) {
  const auto pf = build_profile(r.alpha);
  const double a = r.alpha, ah = pf.params().alpha_hat;
  const auto grid = GeometricGrid::per_decade(r.grid_min, r.grid_max, r.per_decade);
  const auto f = invert_profile(pf, grid);
  const auto g = invert_levy_density(pf, GeometricGrid::per_decade(1e-6, 100, 80));
  const auto sub_grid = GeometricGrid::per_decade(0.1, 10, 10);
  const auto fs = subordinate(g, StableKernel(a), sub_grid);
  const auto fi = invert_profile(pf, sub_grid);
  {
    auto os = open_out(r, "density.csv");
    write_density_csv(os, {f, fs});
  }
  json s;
  const double decades = std::log10(r.grid_max / r.grid_min);
  Checks ch;
  auto fit_json = [&](const std::string& side, double lo, double hi, double want_exp,
                      double want_amp) {
    const auto fit = tail_exponent_fit(f, lo, hi);
    s[side] = {{"window", {lo, hi}},
               {"exponent", fit.exponent},
               {"predicted_exponent", want_exp},
               {"amplitude", fit.amplitude},
               {"predicted_amplitude", want_amp}};
    if (r.check) ch.add(side + "_exponent", fit.exponent - want_exp, 0.05, std::abs(fit.exponent - want_exp) < 0.05);
    return fit;
  };
  if (decades >= 6.0) {
    // the end windows used for the criteria: two decades on the right, three on the left
    fit_json("large_x", r.grid_max / 1e2, r.grid_max, -1.0 - a, a / std::tgamma(1.0 - a));
    fit_json("small_x", r.grid_min, r.grid_min * 1e3, ah - 1.0, pf.tail_amplitude() / std::tgamma(ah));
  }
  double worst = 0.0;
  for (std::size_t i = 0; i < sub_grid.points; ++i)
    worst = std::max(worst, std::abs(fs.values[i] / fi.values[i] - 1.0));
  s["subordination_gap"] = worst;
  s["levy_density_tail"] = {{"model", fs.tail_model}, {"rate", fs.tail_rate}};
  json warnings = json::array();
  for (const auto& w : g.warnings) warnings.push_back(w);
  for (const auto& w : fs.warnings) warnings.push_back(w);
  s["warnings"] = warnings;
  const auto cm = cm_probe(f, 3);
  s["cm_probe"] = {{"depth", 3}, {"worst", cm.worst}, {"flagged", cm.flagged}};
  if (r.check) {
    ch.add("subordination_gap", worst, 1e-3, worst < 1e-3);
    ch.add("cm_probe", cm.worst, 1e-4, !cm.flagged);
    s["checks"] = ch.list;
  }
  write_json(r, "invert.json", s);
  std::cout << "subordination gap " << worst << '\n';
  return ch.ok ? 0 : 1;
}

int cmd_check(const Run& r) {
  AcceptanceOptions opt;
  opt.quick = r.quick;
  opt.seed = r.seed;
  const auto results = run_acceptance(opt, [](const CriterionResult& c) {
    std::cout << format_result(c) << std::endl;
  });
  json rows = json::array();
  bool ok = true;
  auto os = open_out(r, "check.csv");
  os << "criterion,title,passed,measured\n";
  for (const auto& c : results) {
    rows.push_back({{"criterion", c.id}, {"title", c.title}, {"passed", c.passed},
                    {"measured", c.measured}, {"time_limit_s", c.time_limit}});
    os << csv_field(c.id) << ',' << csv_field(c.title) << ',' << (c.passed ? "true" : "false")
       << ',' << csv_field(c.measured) << '\n';
    ok = ok && c.passed;
  }
  write_json(r, "check.json", {{"criteria", rows}});
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Self-similar merging-splitting toolkit"};
  app.require_subcommand(1);
  app.fallthrough();
  Settings s;
  app.set_config("--config", "", "key=value file; flags override it");
  app.allow_config_extras(CLI::config_extras_mode::error);
  app.add_option("--alpha", s.alpha, "small-s exponent in (0,1)");
  app.add_option("--lambda", s.lambda, "scale of the power-law initial data");
  app.add_option("--n", s.n, "largest cluster size of the discrete model");
  app.add_option("--dt", s.dt, "time step of the evolution");
  app.add_option("--t-end", s.t_end, "final time");
  app.add_option("--grid-min", s.grid_min, "left end of the geometric grid");
  app.add_option("--grid-max", s.grid_max, "right end of the geometric grid");
  app.add_option("--grid-per-decade,--per-decade", s.per_decade, "grid points per decade");
  app.add_option("--out", s.out, "output directory");
  app.add_option("--seed", s.seed, "seed of the randomized probes");
  app.add_flag("--check", s.check, "also run the module checks");
  app.add_flag("--quick", s.quick, "check: fast subset only");
  for (const char* name : {"profile", "evolve", "modeld", "invert", "check"}) app.add_subcommand(name);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }
  s.command = app.get_subcommands().front()->get_name();

  Run run = resolve(s);
  auto fail = [&](int code, const std::string& kind, const std::string& message) {
    json rec{{"schema_version", kSchemaVersion}, {"command", s.command}, {"status", "error"},
             {"kind", kind}, {"message", message}};
    rec["config"] = run.config();
    std::cerr << rec.dump() << '\n';
    try {
      auto os = open_out(run, s.command + ".failure.json");
      os << rec.dump(2) << '\n';
    } catch (...) {
    }
    return code;
  };
  try {
    validate(run);
  } catch (const std::exception& e) {
    return fail(2, "validation", e.what());
  }
  try {
    if (s.command == "profile") return cmd_profile(run);
    if (s.command == "evolve") return cmd_evolve(run);
    if (s.command == "modeld") return cmd_modeld(run);
    if (s.command == "invert") return cmd_invert(run);
    return cmd_check(run);
  } catch (const DomainError& e) {
    return fail(2, "domain", e.what());
  } catch (const NumericalError& e) {
    return fail(1, e.kind(), e.what());
  } catch (const std::exception& e) {
    return fail(1, "error", e.what());
  }
}
