#include "mergesplit/profile.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <string>

#include "mergesplit/dopri.hpp"
#include "mergesplit/errors.hpp"

namespace mergesplit {

namespace {

// Strict region test in the variables actually integrated.
bool in_region_uv(double u, double v) { return 0.5 * (u + u * u) < v && v < u && u > 0.0; }
// Same region for (p, q) = (1-u, 1-v): p < q < 1.5p - p^2/2.
bool in_region_pq(double p, double q) { return p < q && q < 1.5 * p - 0.5 * p * p && p > 0.0; }

void escape(double tau, double u, double v) {
  throw NumericalError("escape", "trajectory left the invariant region at tau=" +
                                     std::to_string(tau) + " (u=" + std::to_string(u) +
                                     ", v=" + std::to_string(v) + ")");
}

void stall(double tau) {
  throw NumericalError("stall", "u stopped increasing at tau=" + std::to_string(tau));
}

}  // namespace

double profile_equation_residual(double beta, double z_du, double u, double v) {
  return beta * z_du + u * u + u - 2.0 * v;
}

ProfileCurve shoot(double alpha, const ShootConfig& cfg) {
  ProfileCurve c;
  c.params = ProfileParams::from_alpha(alpha);
  const double beta = c.params.beta;
  if (!(cfg.tau_step > 0.0) || !(cfg.epsilon > 0.0) || cfg.epsilon > 1e-3) {
    throw DomainError("shoot: tau_step must be positive and epsilon in (0, 1e-3]");
  }

  // Unstable eigenvector of the saddle: eigenvalue alpha, u = (1+alpha) v.
  const double ratio = std::isnan(cfg.start_ratio) ? 1.0 / (1.0 + alpha) : cfg.start_ratio;
  const double norm = std::hypot(1.0, ratio);
  const double u0 = cfg.epsilon / norm;
  const double v0 = cfg.epsilon * ratio / norm;
  c.h = cfg.tau_step;
  c.tau0 = std::log(u0) / alpha;

  auto push = [&](double u, double v, double p, double q, double du) {
    c.u.push_back(u);
    c.v.push_back(v);
    c.one_minus_u.push_back(p);
    c.one_minus_v.push_back(q);
    c.du.push_back(du);
  };
  push(u0, v0, 1.0 - u0, 1.0 - v0, (-u0 - u0 * u0 + 2.0 * v0) / beta);

  DopriOptions opt;
  opt.rtol = cfg.rtol;
  opt.atol = cfg.atol;
  opt.initial_step = 1e-3;
  opt.max_step = 0.5;
  const double tau_limit = c.tau0 + cfg.max_tau_span;
  std::vector<double> buf(2);

  // Phase 1: (u, v) up to u = switch_u.
  auto rhs_uv = [beta](double, const std::vector<double>& y, std::vector<double>& d) {
    d[0] = (-y[0] - y[0] * y[0] + 2.0 * y[1]) / beta;
    d[1] = y[0] - y[1];
  };
  std::vector<double> y{u0, v0};
  double t = dopri_integrate(rhs_uv, y, c.tau0, tau_limit, opt, [&](const DopriStep& s) {
    const auto& yn = *s.y_new;
    if (!in_region_uv(yn[0], yn[1])) escape(s.t_new, yn[0], yn[1]);
    if (!(yn[0] > (*s.y_old)[0])) stall(s.t_new);
    while (c.tau(c.size()) <= s.t_new) {
      s.interpolate(c.tau(c.size()), buf);
      const double u = buf[0], v = buf[1];
      push(u, v, 1.0 - u, 1.0 - v, (-u - u * u + 2.0 * v) / beta);
    }
    return yn[0] < cfg.switch_u;
  });
  if (t >= tau_limit) stall(t);

  // Phase 2: (p, q) = (1-u, 1-v) until p < end_gap.
  auto rhs_pq = [beta](double, const std::vector<double>& y, std::vector<double>& d) {
    d[0] = -(3.0 * y[0] - y[0] * y[0] - 2.0 * y[1]) / beta;
    d[1] = y[0] - y[1];
  };
  y = {1.0 - y[0], 1.0 - y[1]};
  t = dopri_integrate(rhs_pq, y, t, tau_limit, opt, [&](const DopriStep& s) {
    const auto& yn = *s.y_new;
    if (!in_region_pq(yn[0], yn[1])) escape(s.t_new, 1.0 - yn[0], 1.0 - yn[1]);
    if (!(yn[0] < (*s.y_old)[0])) stall(s.t_new);
    while (c.tau(c.size()) <= s.t_new) {
      s.interpolate(c.tau(c.size()), buf);
      const double p = buf[0], q = buf[1];
      push(1.0 - p, 1.0 - q, p, q, (3.0 * p - p * p - 2.0 * q) / beta);
    }
    return yn[0] >= cfg.end_gap;
  });
  if (t >= tau_limit) stall(t);

  c.c_tail = c.one_minus_u.back() * std::exp(c.params.alpha_hat * c.tau_end());
  return c;
}

ProfileCurve normalize(ProfileCurve curve, const SeriesData& series) {
  const double alpha = curve.params.alpha;
  const double w_max = 0.5 * series.radius_est;
  const double tau_max = std::log(w_max) / alpha;

  double shift = 0.0;
  std::vector<std::size_t> idx;
  for (int iter = 0; iter < 50; ++iter) {
    // window in shifted coordinates
    idx.clear();
    std::size_t count = 0;
    while (count < curve.size() && curve.tau(count) + shift <= tau_max) ++count;
    if (count < 2) {
      throw NumericalError("no-overlap",
                           "no profile samples inside the series window; start closer to the "
                           "origin (smaller epsilon)");
    }
    const std::size_t stride = std::max<std::size_t>(1, count / 4000);
    for (std::size_t k = 0; k < count; k += stride) idx.push_back(k);

    // Gauss-Newton on r_k = u_k / S(tau_k + shift) - 1
    double jtj = 0.0, jtr = 0.0;
    for (std::size_t k : idx) {
      const double z = std::exp(curve.tau(k) + shift);
      const auto sv = eval_series(series, z);
      const double r = curve.u[k] / sv.u - 1.0;
      const double j = -curve.u[k] * sv.z_du / (sv.u * sv.u);
      jtj += j * j;
      jtr += j * r;
    }
    const double step = -jtr / jtj;
    shift += step;
    if (std::abs(step) < 1e-15) break;
  }

  double mismatch = 0.0;
  for (std::size_t k : idx) {
    const double z = std::exp(curve.tau(k) + shift);
    mismatch = std::max(mismatch, std::abs(curve.u[k] / eval_series(series, z).u - 1.0));
  }
  curve.tau0 += shift;
  curve.normalization_shift += shift;
  curve.normalization_mismatch = mismatch;
  curve.c_tail = curve.one_minus_u.back() * std::exp(curve.params.alpha_hat * curve.tau_end());
  return curve;
}

TailFit fit_tail(ProfileCurve& curve, double lo, double hi) {
  if (curve.size() == 0 || curve.one_minus_u.back() >= lo) {
    throw NumericalError("tail-range", "trajectory does not reach 1-u < " + std::to_string(lo));
  }
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  std::size_t n = 0;
  for (std::size_t k = 0; k < curve.size(); ++k) {
    const double p = curve.one_minus_u[k];
    if (p < lo || p > hi) continue;
    const double x = curve.tau(k), y = std::log(p);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++n;
  }
  if (n < 3) throw NumericalError("tail-range", "too few samples in the tail window");
  const double dn = static_cast<double>(n);
  const double xb = sx / dn, yb = sy / dn;
  const double slope = (sxy - dn * xb * yb) / (sxx - dn * xb * xb);
  const double intercept = yb - slope * xb;

  TailFit fit{slope, std::exp(intercept), n};
  curve.tail_slope = slope;
  curve.c_hat_fit = fit.c_hat;
  curve.params.c_hat = fit.c_hat;
  const double ah = curve.params.alpha_hat;
  if (std::abs(slope + ah) / ah > 0.01) {
    throw NumericalError("slope-mismatch", "tail slope " + std::to_string(slope) +
                                               " differs from -alpha_hat = " +
                                               std::to_string(-ah) + " by more than 1%");
  }
  return fit;
}

double residual(const ProfileCurve& c) {
  const double beta = c.params.beta;
  const double inv12h = 1.0 / (12.0 * c.h);
  double worst = 0.0;
  for (std::size_t k = 2; k + 2 < c.size(); ++k) {
    double r;
    if (c.u[k] <= 0.5) {
      const double d = (-c.u[k + 2] + 8.0 * c.u[k + 1] - 8.0 * c.u[k - 1] + c.u[k - 2]) * inv12h;
      r = profile_equation_residual(beta, d, c.u[k], c.v[k]);
    } else {
      const auto& p = c.one_minus_u;
      const double dp = (-p[k + 2] + 8.0 * p[k + 1] - 8.0 * p[k - 1] + p[k - 2]) * inv12h;
      const double q = c.one_minus_v[k];
      // beta u' + u + u^2 - 2v = -beta p' - (3p - p^2 - 2q)
      r = -beta * dp - (3.0 * p[k] - p[k] * p[k] - 2.0 * q);
    }
    worst = std::max(worst, std::abs(r));
  }
  return worst;
}

ProfileFunction::ProfileFunction(ProfileCurve curve, SeriesData series, double tail_switch)
    : curve_(std::move(curve)), series_(std::move(series)), tail_switch_(tail_switch) {
  if (curve_.size() < 4) throw DomainError("ProfileFunction: curve too short");
  tau_series_max_ = std::log(0.5 * series_.radius_est) / curve_.params.alpha;
  if (tau_series_max_ < curve_.tau0) {
    throw NumericalError("no-overlap", "profile samples start above the series window");
  }
  std::size_t k = 0;
  while (k + 1 < curve_.size() && curve_.one_minus_u[k] >= tail_switch_) ++k;
  tau_tail_min_ = curve_.tau(k);
  tail_c_ = curve_.one_minus_u[k] * std::exp(curve_.params.alpha_hat * tau_tail_min_);
}

ProfileFunction::Region ProfileFunction::region(double tau) const {
  if (tau <= tau_series_max_) return Region::series;
  if (tau >= tau_tail_min_) return Region::tail;
  return Region::curve;
}

double ProfileFunction::interp(const std::vector<double>& y, const std::vector<double>& dy,
                               double sign, double tau) const {
  const double x = (tau - curve_.tau0) / curve_.h;
  const auto last = static_cast<double>(curve_.size() - 2);
  const double fk = std::clamp(std::floor(x), 0.0, last);
  const auto k = static_cast<std::size_t>(fk);
  const double t = x - fk;
  const double h = curve_.h;
  const double t2 = t * t, t3 = t2 * t;
  const double h00 = 2 * t3 - 3 * t2 + 1, h10 = t3 - 2 * t2 + t;
  const double h01 = -2 * t3 + 3 * t2, h11 = t3 - t2;
  return h00 * y[k] + h10 * h * sign * dy[k] + h01 * y[k + 1] + h11 * h * sign * dy[k + 1];
}

double ProfileFunction::u(double z) const {
  if (z <= 0.0) return 0.0;
  if (std::isinf(z)) return 1.0;
  const double tau = std::log(z);
  switch (region(tau)) {
    case Region::series:
      return eval_series(series_, z).u;
    case Region::tail:
      return 1.0 - one_minus_u(z);
    case Region::curve:
      break;
  }
  const double uk = interp(curve_.u, curve_.du, 1.0, tau);
  return uk <= 0.5 ? uk : 1.0 - interp(curve_.one_minus_u, curve_.du, -1.0, tau);
}

double ProfileFunction::one_minus_u(double z) const {
  if (z <= 0.0) return 1.0;
  if (std::isinf(z)) return 0.0;
  const double tau = std::log(z);
  switch (region(tau)) {
    case Region::series:
      return 1.0 - eval_series(series_, z).u;
    case Region::tail:
      return tail_c_ * std::exp(-curve_.params.alpha_hat * tau);
    case Region::curve:
      break;
  }
  const double uk = interp(curve_.u, curve_.du, 1.0, tau);
  return uk <= 0.5 ? 1.0 - uk : interp(curve_.one_minus_u, curve_.du, -1.0, tau);
}

double ProfileFunction::z_du(double z) const {
  if (z <= 0.0 || std::isinf(z)) return 0.0;
  const double tau = std::log(z);
  switch (region(tau)) {
    case Region::series:
      return eval_series(series_, z).z_du;
    case Region::tail:
      return curve_.params.alpha_hat * tail_c_ * std::exp(-curve_.params.alpha_hat * tau);
    case Region::curve:
      break;
  }
  // derivative of the Hermite interpolant of u
  const double x = (tau - curve_.tau0) / curve_.h;
  const double fk = std::clamp(std::floor(x), 0.0, static_cast<double>(curve_.size() - 2));
  const auto k = static_cast<std::size_t>(fk);
  const double t = x - fk;
  const double t2 = t * t;
  const double d00 = 6 * t2 - 6 * t, d10 = 3 * t2 - 4 * t + 1;
  const double d01 = -6 * t2 + 6 * t, d11 = 3 * t2 - 2 * t;
  const auto& p = curve_.one_minus_u;
  const auto& du = curve_.du;
  // differentiate 1-u where it is the better-conditioned variable
  const double dpdx = d00 * p[k] - d10 * curve_.h * du[k] + d01 * p[k + 1] -
                      d11 * curve_.h * du[k + 1];
  return -dpdx / curve_.h;
}

ProfileFunction build_profile(double alpha, const ShootConfig& config, std::size_t series_terms) {
  auto series = coefficients(alpha, series_terms);
  auto curve = normalize(shoot(alpha, config), series);
  fit_tail(curve);
  return ProfileFunction(std::move(curve), std::move(series));
}

void write_profile_csv(std::ostream& os, const ProfileCurve& c, std::size_t stride) {
  os << "z,u,v\n";
  os.precision(17);
  stride = std::max<std::size_t>(stride, 1);
  for (std::size_t k = 0; k < c.size(); k += stride) {
    os << std::exp(c.tau(k)) << ',' << c.u[k] << ',' << c.v[k] << '\n';
  }
}

}  // namespace mergesplit
