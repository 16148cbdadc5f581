#include "mergesplit/acceptance.hpp"

#include <boost/multiprecision/cpp_int.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <numbers>
#include <random>

#include "mergesplit/evolution.hpp"
#include "mergesplit/model_d.hpp"
#include "mergesplit/params.hpp"
#include "mergesplit/profile.hpp"
#include "mergesplit/series.hpp"
#include "mergesplit/transforms.hpp"

namespace mergesplit {

namespace {

std::string fmt(const char* format, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, format, a);
  return buf;
}

struct Outcome {
  bool passed = false;
  std::string measured;
};

const ProfileFunction& profile_half() {
  static const ProfileFunction p = build_profile(0.5);
  return p;
}

Outcome parameter_identities(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(1e-6, 1.0 - 1e-6);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const auto [r1, r2] = eigen_residuals(ProfileParams::from_alpha(unif(rng)));
    worst = std::max({worst, std::abs(r1), std::abs(r2)});
  }
  const double ah0 = alphahat_of_beta(0.0);
  return {worst < 1e-12 && ah0 == 1.0 / 3.0,
          "max determinant " + fmt("%.2e", worst) + ", alpha_hat(0) = " + fmt("%.17g", ah0)};
}

Outcome fuss_catalan(std::size_t n_max) {
  using boost::multiprecision::cpp_int;
  const auto d = coefficients(1.0, n_max);
  double worst = 0.0;
  std::size_t exact = 0;
  for (unsigned n = 1; n <= n_max; ++n) {
    cpp_int b = 1;
    for (unsigned i = 0; i < n; ++i) b = b * (3 * n + 1 - i) / (i + 1);
    const cpp_int fc = b / (3 * n + 1);
    // c_n is the nearest double to the integer once it exceeds 2^53
    const double ref = fc.convert_to<double>();
    if (d.coeffs[n - 1] == ref) ++exact;
    worst = std::max(worst, std::abs(d.coeffs[n - 1] - ref) / ref);
  }
  return {exact == n_max, std::to_string(exact) + "/" + std::to_string(n_max) +
                              " equal to the rounded integers, max rel " + fmt("%.1e", worst)};
}

Outcome radius_bounds(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.01, 0.99);
  int inside = 0;
  double min_margin = INFINITY;
  for (int i = 0; i < 20; ++i) {
    const double a = unif(rng);
    const auto d = coefficients(a, 200);
    const auto r = radius_estimate(d);
    const double lo = (1.0 - a) / (1.0 + a), hi = d.denoms[1];
    if (r.radius >= lo && r.radius <= hi) ++inside;
    min_margin = std::min({min_margin, (r.radius - lo) / lo, (hi - r.radius) / hi});
  }
  return {inside == 20, std::to_string(inside) + "/20 inside, smallest relative margin " +
                            fmt("%.2e", min_margin)};
}

Outcome profile_routes() {
  double worst_series = 0.0, worst_res = 0.0, worst_slope = 0.0, slowest = 0.0;
  for (double a : {0.3, 0.5, 0.8}) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto pf = build_profile(a);
    const auto& c = pf.curve();
    const double w_edge = 0.5 * pf.series().radius_est;
    for (std::size_t k = 0; k < c.size(); ++k) {
      const double z = std::exp(c.tau(k));
      if (std::pow(z, a) > w_edge) break;
      worst_series = std::max(worst_series, std::abs(c.u[k] / eval_series(pf.series(), z).u - 1.0));
    }
    worst_res = std::max(worst_res, residual(c));
    worst_slope = std::max(worst_slope, std::abs(c.tail_slope + c.params.alpha_hat) / c.params.alpha_hat);
    slowest = std::max(slowest, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  }
  return {worst_series < 1e-6 && worst_res < 1e-8 && worst_slope < 0.01 && slowest < 10.0,
          "alpha 0.3/0.5/0.8: series-ODE " + fmt("%.1e", worst_series) + ", residual " +
              fmt("%.1e", worst_res) + ", slope " + fmt("%.1e", worst_slope) + ", slowest alpha " +
              fmt("%.1f s", slowest)};
}

Outcome orbit() {
  const auto& p = profile_half();
  const auto g = GeometricGrid::per_decade(1e-8, 1e8, 40);
  const auto u0 = GridFunction::sample(g, [&](double s) { return p.u(s); }, 0.5);
  EvolutionConfig cfg;
  cfg.dt = 1e-2;
  const double e_coarse = rescaled_error(evolve_richardson(u0, 1.0, 5.0, cfg).back(), p, 0.1, 10.0);
  cfg.dt = 5e-3;
  const double e_fine = rescaled_error(evolve_richardson(u0, 1.0, 5.0, cfg).back(), p, 0.1, 10.0);
  const double ratio = e_coarse / e_fine;
  // Richardson removes the first-order term, so a refinement gains at least 2
  return {e_coarse < 1e-4 && ratio >= 2.0,
          "sup error t=5: " + fmt("%.2e", e_coarse) + " (dt 1e-2), " + fmt("%.2e", e_fine) +
              " (dt 5e-3), ratio " + fmt("%.2f", ratio)};
}

Outcome powerlaw_convergence() {
  const auto& p = profile_half();
  const auto g = GeometricGrid::per_decade(1e-16, 1e4, 40);
  const auto u0 = GridFunction::sample(g, [](double s) { return std::sqrt(s); }, 0.5);
  EvolutionConfig cfg;
  cfg.dt = 1e-3;
  cfg.dt_max = 1e-3;
  for (int i = 1; i < 20; ++i) cfg.snapshot_times.push_back(i);
  const auto tr = evolve_richardson(u0, INFINITY, 20.0, cfg);
  bool decreasing = true;
  double prev = INFINITY, first = 0.0;
  for (std::size_t i = 1; i < tr.size(); ++i) {
    const double e = rescaled_error(tr[i], p, 0.1, 10.0);
    if (i == 1) first = e;
    decreasing = decreasing && e < prev;
    prev = e;
  }
  return {decreasing && prev < 1e-3, std::string(decreasing ? "decreasing" : "NOT decreasing") +
                                         " over t=1..20, " + fmt("%.2e", first) + " at t=1, " +
                                         fmt("%.2e", prev) + " at t=20"};
}

GridFunction random_nondecreasing(const GeometricGrid& g, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  GridFunction f;
  f.grid = g;
  f.values.resize(g.points);
  double acc = 0.0;
  for (auto& v : f.values) {
    if (unit(rng) < 0.05) acc += unit(rng);
    v = acc;
  }
  return f;
}

Outcome comparison(std::uint64_t seed) {
  const auto g = GeometricGrid::per_decade(1e-8, 1e8, 40);
  std::mt19937_64 rng(seed);
  int ordered = 0;
  double worst = INFINITY;
  for (int i = 0; i < 50; ++i) {
    const auto v = random_nondecreasing(g, rng);
    auto u = random_nondecreasing(g, rng);
    for (std::size_t k = 0; k < g.points; ++k) u.values[k] += v.values[k];
    const auto rep = comparison_test(u, v, 10.0, 1e-2);
    ordered += rep.ordered;
    worst = std::min(worst, rep.min_difference);
  }
  return {ordered == 50,
          std::to_string(ordered) + "/50 ordered, min U-V " + fmt("%.2e", worst)};
}

Outcome decomposition() {
  const auto ug = GeometricGrid::per_decade(1e-8, 1e8, 40);
  double worst = 0.0;
  bool ok = true;
  for (double a : {0.3, 0.5, 0.8}) {
    const auto vg = GeometricGrid::per_decade(std::pow(1e-8, a), std::pow(1e8, a) * 1.01, 160);
    const auto v0 = GridFunction::sample(vg, [](double s) { return s; }, 1.0);
    const auto rep = decomposition_check(a, v0, ug, 5.0, 1e-2);
    ok = ok && rep.passed;
    worst = std::max(worst, rep.max_difference);
  }
  return {ok && worst < 1e-6, "sup |U - V(s^alpha)| " + fmt("%.2e", worst) + " over alpha 0.3/0.5/0.8"};
}

// General-rate form of the discrete system, all sizes above n absent.
std::vector<double> brute_rhs(const std::vector<double>& f) {
  const std::size_t n = f.size();
  auto F = [&](std::size_t i) { return i >= 1 && i <= n ? f[i - 1] : 0.0; };
  std::vector<double> out(n, 0.0);
  for (std::size_t i = 1; i <= n; ++i) {
    double d = 0.0;
    for (std::size_t j = 1; j < i; ++j) d += F(j) * F(i - j);
    for (std::size_t j = 1; j <= n; ++j) d -= 2.0 * F(i) * F(j);
    for (std::size_t j = 1; i + j <= n; ++j) d += 2.0 / static_cast<double>(i + j + 1) * F(i + j);
    for (std::size_t j = 1; j < i; ++j) d -= F(i) / static_cast<double>(i + 1);
    out[i - 1] = d;
  }
  return out;
}

double oracle_gap(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  ModelDState st;
  st.n_max = 20;
  st.f.resize(20);
  for (std::size_t i = 0; i < 20; ++i) st.f[i] = unit(rng) / static_cast<double>(i + 1);
  st.refresh();
  ModelDControls ctl;
  ctl.rtol = 1e-13;
  ctl.atol = 1e-16;
  const auto fast = integrate(st, 3.0, ctl).back();
  // classical RK4 with dt = 1e-3
  std::vector<double> y = st.f;
  const double dt = 1e-3;
  auto axpy = [](const std::vector<double>& y, const std::vector<double>& k, double h) {
    std::vector<double> out(y);
    for (std::size_t i = 0; i < y.size(); ++i) out[i] += h * k[i];
    return out;
  };
  for (int s = 0; s < 3000; ++s) {
    const auto k1 = brute_rhs(y);
    const auto k2 = brute_rhs(axpy(y, k1, dt / 2));
    const auto k3 = brute_rhs(axpy(y, k2, dt / 2));
    const auto k4 = brute_rhs(axpy(y, k3, dt));
    for (std::size_t i = 0; i < y.size(); ++i) y[i] += dt / 6 * (k1[i] + 2 * k2[i] + 2 * k3[i] + k4[i]);
  }
  double gap = 0.0;
  for (std::size_t i = 0; i < 20; ++i) gap = std::max(gap, std::abs(fast.f[i] - y[i]));
  return gap;
}

Outcome model_d(std::uint64_t seed) {
  const auto& p = profile_half();
  const auto st = init_powerlaw(0.5, 1.0, 100000);
  ModelDControls ctl;
  for (int t = 1; t < 15; ++t) ctl.snapshot_times.push_back(t);
  const auto tr = integrate(st, 15.0, ctl);
  bool decreasing = true, bound = true;
  double prev = INFINITY, e12 = NAN, e_min = INFINITY, t_min = 0.0;
  for (const auto& s : tr) {
    if (s.time > 0.0) bound = bound && s.m0 <= 1.0 / (1.0 - std::exp(-s.time));
    if (s.time > 12.0 + 1e-9) continue;
    const double e = theorem_D_error(s, p, 1.0);
    decreasing = decreasing && e < prev;
    prev = e;
    if (e < e_min) e_min = e, t_min = s.time;
    if (std::abs(s.time - 12.0) < 1e-9) e12 = e;
  }
  const double m0_gap = std::abs(tr.back().m0 - 1.0);
  const double gap = oracle_gap(seed);
  const bool ok = decreasing && e12 < 5e-2 && bound && m0_gap < 1e-3 && gap < 1e-10;
  return {ok, std::string("error ") + (decreasing ? "decreasing" : "NOT decreasing") + " (min " +
                  fmt("%.3f", e_min) + " at t=" + fmt("%.0f", t_min) + "), " + fmt("%.3f", e12) +
                  " at t=12 [" + (e12 < 5e-2 ? "ok" : "FAIL") + "]; m0 bound " +
                  (bound ? "ok" : "FAIL") + "; |m0(15)-1| " + fmt("%.3f", m0_gap) + " [" +
                  (m0_gap < 1e-3 ? "ok" : "FAIL") + "]; N=20 oracle " + fmt("%.1e", gap) + " [" +
                  (gap < 1e-10 ? "ok" : "FAIL") + "]"};
}

Outcome physical_asymptotics() {
  const auto& p = profile_half();
  const double ah = p.params().alpha_hat;
  const auto f = invert_profile(p, GeometricGrid::per_decade(1e-10, 1e6, 10));
  const auto hi = tail_exponent_fit(f, 1e4, 1e6);
  const auto lo = tail_exponent_fit(f, 1e-10, 1e-7);
  const double amp = 0.5 / std::tgamma(0.5);
  const double d_hi = std::abs(hi.exponent + 1.5), d_lo = std::abs(lo.exponent - (ah - 1.0));
  const double amp_rel = std::abs(hi.amplitude / amp - 1.0);
  return {d_hi < 0.05 && d_lo < 0.05 && amp_rel < 0.05,
          "large-x exponent " + fmt("%.4f", hi.exponent) + " (want -1.5), small-x " +
              fmt("%.4f", lo.exponent) + " (want " + fmt("%.4f", ah - 1.0) + "), prefactor off by " +
              fmt("%.2e", amp_rel)};
}

Outcome stable_kernel() {
  StableKernel k(0.5);
  double worst = 0.0;
  for (double x = 0.5; x <= 5.0 + 1e-12; x += 0.005) {
    const double exact = 0.5 / std::sqrt(std::numbers::pi) * std::pow(x, -1.5) * std::exp(-0.25 / x);
    worst = std::max(worst, std::abs(k.series(x) - exact));
  }
  const double x = 1e8;
  const double tail = std::abs(k(x) * std::pow(x, 1.5) / k.tail_prefactor() - 1.0);
  return {worst < 1e-8 && tail < 1e-4,
          "closed-form gap " + fmt("%.1e", worst) + ", tail prefactor off by " + fmt("%.1e", tail) +
              " at x=1e8"};
}

Outcome subordination_routes() {
  const auto& p = profile_half();
  const auto g = invert_levy_density(p, GeometricGrid::per_decade(1e-6, 100, 80));
  const auto xg = GeometricGrid::per_decade(0.1, 10, 10);
  const auto fs = subordinate(g, StableKernel(0.5), xg);
  const auto fi = invert_profile(p, xg);
  double worst = 0.0;
  for (std::size_t i = 0; i < xg.points; ++i) worst = std::max(worst, std::abs(fs.values[i] / fi.values[i] - 1.0));
  return {worst < 1e-3, "worst relative gap " + fmt("%.2e", worst) + " on [0.1, 10], g tail " +
                            fs.tail_model + " rate " + fmt("%.3f", fs.tail_rate)};
}

Outcome hardy(std::uint64_t seed) {
  const auto g = GeometricGrid::per_decade(1e-8, 1e8, 40);
  std::mt19937_64 rng(seed);
  std::vector<GridFunction> probes;
  for (int i = 0; i < 1000; ++i) probes.push_back(random_piecewise_linear(g, rng));
  const double r = hardy_norm_probe(probes);
  return {r <= 2.01, "largest ratio " + fmt("%.4f", r) + " over 1000 probes"};
}

Outcome logistic() {
  const auto g = GeometricGrid::per_decade(1e-4, 1e4, 10);
  const auto u0 = GridFunction::sample(g, [](double s) { return s / (1.0 + s); }, 1.0);
  EvolutionConfig cfg;
  cfg.dt = 1e-4;
  cfg.dt_max = 1e-4;
  const auto tr = evolve_richardson(u0, 0.5, 5.0, cfg);
  const double gap = std::abs(tr.back().m0 - logistic_m0(0.5, 5.0));
  return {gap < 1e-8, "m0(5) " + fmt("%.10f", tr.back().m0) + ", gap to the logistic law " + fmt("%.1e", gap)};
}

struct Spec {
  std::string id, title;
  double limit;
  bool quick;
  std::function<Outcome(std::uint64_t)> run;
};

}  // namespace

std::vector<CriterionResult> run_acceptance(const AcceptanceOptions& options,
                                            const std::function<void(const CriterionResult&)>& report) {
  const std::vector<Spec> specs = {
      {"1", "parameter identities", 1, true, parameter_identities},
      {"2", "Fuss-Catalan limit", 1, true, [](std::uint64_t) { return fuss_catalan(30); }},
      {"3", "radius bounds", 5, true, radius_bounds},
      {"m0", "logistic zeroth moment", 5, true, [](std::uint64_t) { return logistic(); }},
      {"4", "series and shooting agree", 30, false, [](std::uint64_t) { return profile_routes(); }},
      {"5", "self-similar orbit", 30, false, [](std::uint64_t) { return orbit(); }},
      {"6", "power-law data converge", 60, false, [](std::uint64_t) { return powerlaw_convergence(); }},
      {"7", "comparison principle", 120, false, comparison},
      {"8", "decomposition", 60, false, [](std::uint64_t) { return decomposition(); }},
      {"9", "discrete model convergence", 600, false, model_d},
      {"10", "physical-space asymptotics", 120, false, [](std::uint64_t) { return physical_asymptotics(); }},
      {"11", "stable kernel", 5, false, [](std::uint64_t) { return stable_kernel(); }},
      {"12", "subordination routes", 120, false, [](std::uint64_t) { return subordination_routes(); }},
      {"13", "Hardy probe", 10, false, hardy},
  };
  std::vector<CriterionResult> out;
  for (const auto& s : specs) {
    if (!options.only.empty() ? !options.only.count(s.id) : (options.quick && !s.quick)) continue;
    CriterionResult r;
    r.id = s.id;
    r.title = s.title;
    r.time_limit = s.limit;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      const auto o = s.run(options.seed);
      r.passed = o.passed;
      r.measured = o.measured;
    } catch (const std::exception& e) {
      r.passed = false;
      r.measured = std::string("exception: ") + e.what();
    }
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (r.seconds > r.time_limit) {
      r.passed = false;
      r.measured += "; over the time limit";
    }
    if (report) report(r);
    out.push_back(std::move(r));
  }
  return out;
}

std::string format_result(const CriterionResult& r) {
  char head[96];
  std::snprintf(head, sizeof head, "%s %-3s %-28s ", r.passed ? "PASS" : "FAIL", r.id.c_str(),
                r.title.c_str());
  char tail[64];
  std::snprintf(tail, sizeof tail, "  (%.1f s / %.0f s)", r.seconds, r.time_limit);
  return head + r.measured + tail;
}

}  // namespace mergesplit
