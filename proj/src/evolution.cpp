#include "mergesplit/evolution.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include "mergesplit/errors.hpp"

namespace mergesplit {

GeometricGrid GeometricGrid::per_decade(double s_min, double s_max, int per_decade) {
  if (!(s_min > 0.0) || !(s_max > s_min) || per_decade < 1)
    throw DomainError("geometric grid needs 0 < s_min < s_max and per_decade >= 1");
  const double decades = std::log10(s_max / s_min);
  const auto intervals = static_cast<std::size_t>(std::ceil(decades * per_decade - 1e-9));
  GeometricGrid g;
  g.s_min = s_min;
  g.ratio = std::pow(10.0, 1.0 / per_decade);
  g.points = std::max<std::size_t>(intervals, 3) + 1;
  return g;
}

double GeometricGrid::at(std::size_t k) const {
  return s_min * std::exp(log_step() * static_cast<double>(k));
}

double GeometricGrid::log_step() const { return std::log(ratio); }

double GeometricGrid::position(double s) const { return std::log(s / s_min) / log_step(); }

GridFunction GridFunction::sample(const GeometricGrid& grid,
                                  const std::function<double(double)>& f, double left_exponent) {
  GridFunction out;
  out.grid = grid;
  out.left_exponent = left_exponent;
  out.values.resize(grid.points);
  for (std::size_t k = 0; k < grid.points; ++k) out.values[k] = f(grid.at(k));
  return out;
}

namespace {

// Four-point Lagrange interpolation at fractional position x of y[].
double lagrange4(const std::vector<double>& y, double x) {
  const auto n = static_cast<long>(y.size());
  long i0 = static_cast<long>(std::floor(x)) - 1;
  i0 = std::clamp(i0, 0L, n - 4);
  const double t = x - static_cast<double>(i0);
  double sum = 0.0;
  for (int j = 0; j < 4; ++j) {
    double w = 1.0;
    for (int m = 0; m < 4; ++m)
      if (m != j) w *= (t - m) / (j - m);
    sum += w * y[static_cast<std::size_t>(i0 + j)];
  }
  return sum;
}

struct Cumulative {
  std::vector<double> num, den;
};

// Cumulative int_0^{s_k} U y^(kappa-1) dy and int_0^{s_k} y^(kappa-1) dy in
// sigma = log(y/s_min), scaled by s_min^-kappa.
Cumulative cumulative(const GridFunction& f, double kappa) {
  const std::size_t n = f.values.size();
  if (n < 4) throw DomainError("grid function needs at least 4 points");
  const double h = f.grid.log_step();
  if (kappa * h * static_cast<double>(n) > 700.0)
    throw NumericalError("overflow", "weighted average exceeds double range on this grid");
  if (f.left_exponent + kappa <= 0.0)
    throw DomainError("left closure integral diverges (left_exponent + kappa <= 0)");

  std::vector<double> w(n), g(n);
  for (std::size_t k = 0; k < n; ++k) {
    w[k] = std::exp(kappa * h * static_cast<double>(k));
    g[k] = f.values[k] * w[k];
  }
  Cumulative c;
  c.num.resize(n);
  c.den.resize(n);
  auto pass = [&](const std::vector<double>& y, double closure, std::vector<double>& out) {
    out[0] = closure;
    out[1] = closure + 0.5 * h * (y[0] + y[1]);
    for (std::size_t k = 2; k < n; k += 2)
      out[k] = out[k - 2] + h / 3.0 * (y[k - 2] + 4.0 * y[k - 1] + y[k]);
    for (std::size_t k = 3; k < n; k += 2)
      out[k] = out[k - 3] + 3.0 * h / 8.0 * (y[k - 3] + 3.0 * y[k - 2] + 3.0 * y[k - 1] + y[k]);
  };
  pass(g, f.values[0] / (f.left_exponent + kappa), c.num);
  pass(w, 1.0 / kappa, c.den);
  return c;
}

}  // namespace

double GridFunction::interpolate(double s, bool log_values) const {
  const double x = grid.position(s);
  const double last = static_cast<double>(values.size() - 1);
  if (!(x >= -1e-9 && x <= last + 1e-9))
    throw DomainError("interpolation point outside the grid");
  if (log_values) {
    const auto n = static_cast<long>(values.size());
    const long i0 = std::clamp(static_cast<long>(std::floor(x)) - 1, 0L, n - 4);
    bool positive = true;
    for (long j = i0; j < i0 + 4; ++j) positive = positive && values[static_cast<std::size_t>(j)] > 0.0;
    if (positive) {
      std::vector<double> lv(4);
      for (int j = 0; j < 4; ++j) lv[j] = std::log(values[static_cast<std::size_t>(i0 + j)]);
      return std::exp(lagrange4(lv, x - static_cast<double>(i0)));
    }
  }
  return lagrange4(values, x);
}

std::vector<double> weighted_average(const GridFunction& f, double kappa) {
  const Cumulative c = cumulative(f, kappa);
  std::vector<double> out(c.num.size());
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = c.num[k] / c.den[k];
  return out;
}

double averaging(const GridFunction& f, double s) {
  const double x = f.grid.position(s);
  if (!(x >= -1e-9 && x <= static_cast<double>(f.values.size() - 1) + 1e-9))
    throw DomainError("averaging point outside [s_min, s_max]");
  const Cumulative c = cumulative(f, 1.0);
  return lagrange4(c.num, x) / lagrange4(c.den, x);
}

namespace {

double l2_norm(const GeometricGrid& grid, const std::vector<double>& y) {
  const double h = grid.log_step();
  double sum = 0.0;
  for (std::size_t k = 0; k < y.size(); ++k) {
    const double w = (k == 0 || k + 1 == y.size()) ? 0.5 : 1.0;
    sum += w * y[k] * y[k] * grid.at(k) * h;
  }
  return std::sqrt(sum);
}

}  // namespace

double hardy_norm_probe(const std::vector<GridFunction>& samples) {
  if (samples.empty()) throw DomainError("hardy probe needs at least one sample");
  double worst = 0.0;
  for (const auto& f : samples) {
    const double denom = l2_norm(f.grid, f.values);
    if (denom == 0.0) continue;
    worst = std::max(worst, l2_norm(f.grid, weighted_average(f)) / denom);
  }
  return worst;
}

GridFunction random_piecewise_linear(const GeometricGrid& grid, std::mt19937_64& rng, int knots) {
  std::uniform_real_distribution<double> pos(0.0, static_cast<double>(grid.points - 1));
  std::uniform_real_distribution<double> val(0.0, 1.0);
  std::vector<std::pair<double, double>> kn(static_cast<std::size_t>(std::max(knots, 2)));
  for (auto& [x, y] : kn) {
    x = pos(rng);
    y = val(rng);
  }
  std::sort(kn.begin(), kn.end());
  GridFunction f;
  f.grid = grid;
  f.values.resize(grid.points);
  for (std::size_t k = 0; k < grid.points; ++k) {
    const double x = static_cast<double>(k);
    if (x <= kn.front().first) {
      f.values[k] = kn.front().second;
    } else if (x >= kn.back().first) {
      f.values[k] = kn.back().second;
    } else {
      auto it = std::upper_bound(kn.begin(), kn.end(), std::make_pair(x, -1.0));
      const auto& [x1, y1] = *it;
      const auto& [x0, y0] = *(it - 1);
      f.values[k] = y0 + (y1 - y0) * (x - x0) / (x1 - x0);
    }
  }
  return f;
}

double implicit_reaction(double uhat, double dt) {
  if (std::isinf(uhat)) return uhat;
  const double b = 1.0 + dt;
  const double disc = b * b + 4.0 * dt * uhat;
  if (!(disc >= 0.0)) throw NumericalError("corruption", "negative discriminant in implicit stage");
  return 2.0 * uhat / (b + std::sqrt(disc));
}

EvolutionState step_imex(const EvolutionState& state, double dt, double kappa) {
  if (!(dt > 0.0)) throw DomainError("dt must be positive");
  const std::vector<double> avg = weighted_average(state.grid, kappa);
  EvolutionState next = state;
  for (std::size_t k = 0; k < avg.size(); ++k) {
    const double uhat = state.grid.values[k] + 2.0 * dt * avg[k];
    if (uhat < 0.0) throw NumericalError("corruption", "negative explicit stage value");
    next.grid.values[k] = implicit_reaction(uhat, dt);
  }
  next.m0 = implicit_reaction(state.m0 * (1.0 + 2.0 * dt), dt);
  next.time = state.time + dt;
  return next;
}

namespace {

void check_invariants(const EvolutionState& st, bool monotone) {
  const auto& v = st.grid.values;
  for (double x : v)
    if (!(x >= 0.0)) throw NumericalError("positivity", "negative value at t = " + std::to_string(st.time));
  if (!monotone) return;
  const double slack = 1e-12 * std::max(1.0, v.back());
  for (std::size_t k = 1; k < v.size(); ++k)
    if (v[k] < v[k - 1] - slack)
      throw NumericalError("monotonicity", "values decrease at t = " + std::to_string(st.time));
}

// Steps of size <= dt landing exactly on `target`.
template <class OnStep>
void advance(EvolutionState& st, double target, double dt, double kappa, OnStep&& on_step) {
  const double span = target - st.time;
  if (span <= 0.0) return;
  const auto n = static_cast<std::size_t>(std::ceil(span / dt - 1e-9));
  const double h = span / static_cast<double>(n);
  const double t0 = st.time;
  for (std::size_t i = 1; i <= n; ++i) {
    st = step_imex(st, h, kappa);
    st.time = (i == n) ? target : t0 + h * static_cast<double>(i);
    on_step(st);
  }
}

}  // namespace

std::vector<EvolutionState> evolve(const GridFunction& u0, double m0, double t_end,
                                   const EvolutionConfig& config) {
  if (!(config.dt > 0.0) || config.dt > config.dt_max)
    throw DomainError("dt must lie in (0, dt_max]");
  if (!(t_end >= 0.0)) throw DomainError("t_end must be nonnegative");
  std::vector<double> times;
  for (double t : config.snapshot_times)
    if (t > 0.0 && t < t_end) times.push_back(t);
  std::sort(times.begin(), times.end());
  times.push_back(t_end);

  EvolutionState st{u0, 0.0, m0};
  check_invariants(st, config.check_monotone);
  std::vector<EvolutionState> out{st};
  for (double t : times) {
    if (t <= st.time) continue;
    advance(st, t, config.dt, config.kappa, [](const EvolutionState&) {});
    check_invariants(st, config.check_monotone);
    out.push_back(st);
  }
  return out;
}

std::vector<EvolutionState> evolve_richardson(const GridFunction& u0, double m0, double t_end,
                                              const EvolutionConfig& config) {
  const auto coarse = evolve(u0, m0, t_end, config);
  EvolutionConfig half = config;
  half.dt = config.dt / 2.0;
  auto fine = evolve(u0, m0, t_end, half);
  for (std::size_t i = 0; i < fine.size(); ++i) {
    auto& f = fine[i].grid.values;
    const auto& c = coarse[i].grid.values;
    for (std::size_t k = 0; k < f.size(); ++k) f[k] = 2.0 * f[k] - c[k];
    if (std::isfinite(fine[i].m0)) fine[i].m0 = 2.0 * fine[i].m0 - coarse[i].m0;
  }
  return fine;
}

double logistic_m0(double m0_initial, double t) {
  if (std::isinf(m0_initial)) return 1.0 / (1.0 - std::exp(-t));
  if (m0_initial == 0.0) return 0.0;
  return 1.0 / (1.0 + (1.0 / m0_initial - 1.0) * std::exp(-t));
}

double rescaled_error(const EvolutionState& state, const std::function<double(double)>& target,
                      double beta, double s_lo, double s_hi, std::size_t samples) {
  if (!(s_lo > 0.0) || !(s_hi >= s_lo) || samples < 2)
    throw DomainError("rescaled_error needs 0 < s_lo <= s_hi and >= 2 samples");
  const double shrink = std::exp(-beta * state.time);
  const auto& g = state.grid.grid;
  if (s_lo * shrink < g.s_min * (1.0 - 1e-12) || s_hi * shrink > g.s_max() * (1.0 + 1e-12))
    throw DomainError("rescaled window leaves the grid");
  double worst = 0.0;
  for (std::size_t i = 0; i < samples; ++i) {
    const double s =
        s_lo * std::pow(s_hi / s_lo, static_cast<double>(i) / static_cast<double>(samples - 1));
    const double x = std::clamp(s * shrink, g.s_min, g.s_max());
    worst = std::max(worst, std::abs(state.grid.interpolate(x, true) - target(s)));
  }
  return worst;
}

double rescaled_error(const EvolutionState& state, const ProfileFunction& profile, double s_lo,
                      double s_hi, std::size_t samples) {
  return rescaled_error(
      state, [&](double s) { return profile.u(s); }, profile.params().beta, s_lo, s_hi, samples);
}

ComparisonReport comparison_test(const GridFunction& u0, const GridFunction& v0, double t_end,
                                 double dt, double tol) {
  if (u0.values.size() != v0.values.size() || u0.grid.s_min != v0.grid.s_min ||
      u0.grid.ratio != v0.grid.ratio)
    throw DomainError("comparison needs both functions on the same grid");
  ComparisonReport rep;
  rep.min_difference = std::numeric_limits<double>::infinity();
  auto track = [&](const EvolutionState& a, const EvolutionState& b) {
    for (std::size_t k = 0; k < a.grid.values.size(); ++k) {
      const double d = a.grid.values[k] - b.grid.values[k];
      if (d < rep.min_difference) {
        rep.min_difference = d;
        rep.time = a.time;
        rep.s = a.grid.grid.at(k);
      }
    }
  };
  EvolutionState a{u0, 0.0, u0.values.back()};
  EvolutionState b{v0, 0.0, v0.values.back()};
  track(a, b);
  const auto n = static_cast<std::size_t>(std::ceil(t_end / dt - 1e-9));
  for (std::size_t i = 0; i < n; ++i) {
    const double h = std::min(dt, t_end - a.time);
    a = step_imex(a, h);
    b = step_imex(b, h);
    track(a, b);
  }
  rep.ordered = rep.min_difference >= -tol;
  return rep;
}

DecompositionReport decomposition_check(double alpha, const GridFunction& v0,
                                        const GeometricGrid& u_grid, double t_end, double dt,
                                        double tol) {
  if (!(alpha > 0.0 && alpha <= 1.0)) throw DomainError("alpha must lie in (0, 1]");
  const auto& vg = v0.grid;
  GridFunction u0;
  u0.grid = u_grid;
  u0.left_exponent = alpha * v0.left_exponent;
  u0.values.resize(u_grid.points);
  std::vector<std::size_t> compared;
  for (std::size_t k = 0; k < u_grid.points; ++k) {
    const double w = std::pow(u_grid.at(k), alpha);
    const double x = vg.position(w);
    if (x < -1e-9 || x > static_cast<double>(vg.points - 1) + 1e-9)
      throw DomainError("U grid maps outside the V grid; U0 is not representable");
    u0.values[k] = v0.interpolate(std::clamp(w, vg.s_min, vg.s_max()), true);
    compared.push_back(k);
  }

  DecompositionReport rep;
  EvolutionState u{u0, 0.0, v0.values.back()};
  EvolutionState v{v0, 0.0, v0.values.back()};
  auto track = [&]() {
    for (std::size_t k : compared) {
      const double w = std::clamp(std::pow(u_grid.at(k), alpha), vg.s_min, vg.s_max());
      const double d = std::abs(u.grid.values[k] - v.grid.interpolate(w, true));
      if (d > rep.max_difference) {
        rep.max_difference = d;
        rep.time = u.time;
        rep.s = u_grid.at(k);
      }
    }
  };
  const auto n = static_cast<std::size_t>(std::ceil(t_end / dt - 1e-9));
  for (std::size_t i = 0; i < n; ++i) {
    const double h = std::min(dt, t_end - u.time);
    u = step_imex(u, h, 1.0);
    v = step_imex(v, h, 1.0 / alpha);
    if ((i + 1) % 10 == 0 || i + 1 == n) track();
  }
  rep.passed = rep.max_difference <= tol;
  return rep;
}

void write_snapshots_csv(std::ostream& os, const std::vector<EvolutionState>& states) {
  os << "t,s,U\n";
  os.precision(17);
  for (const auto& st : states)
    for (std::size_t k = 0; k < st.grid.values.size(); ++k)
      os << st.time << ',' << st.grid.grid.at(k) << ',' << st.grid.values[k] << '\n';
}

}  // namespace mergesplit
