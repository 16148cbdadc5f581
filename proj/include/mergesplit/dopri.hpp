#pragma once

// Dormand-Prince 5(4) with the Hairer continuous extension. State is a
// std::vector<double>; the right-hand side is any callable
// rhs(t, y, dydt) writing into a preallocated dydt.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "mergesplit/errors.hpp"

namespace mergesplit {

struct DopriOptions {
  double rtol = 1e-10;
  double atol = 1e-12;
  double initial_step = 1e-3;
  double max_step = 1.0;
  double min_step = 1e-12;
  std::size_t max_steps = 10'000'000;
};

/// One accepted step, with dense output on [t_old, t_new].
class DopriStep {
 public:
  double t_old = 0.0;
  double t_new = 0.0;
  const std::vector<double>* y_old = nullptr;
  const std::vector<double>* y_new = nullptr;

  /// Dense output at t in [t_old, t_new].
  void interpolate(double t, std::vector<double>& out) const {
    const double h = t_new - t_old;
    const double th = (t - t_old) / h;
    const double th1 = 1.0 - th;
    out.resize(r1_.size());
    for (std::size_t i = 0; i < r1_.size(); ++i) {
      out[i] = r1_[i] + th * (r2_[i] + th1 * (r3_[i] + th * (r4_[i] + th1 * r5_[i])));
    }
  }

  /// Single component of the dense output.
  double interpolate(double t, std::size_t i) const {
    const double h = t_new - t_old;
    const double th = (t - t_old) / h;
    const double th1 = 1.0 - th;
    return r1_[i] + th * (r2_[i] + th1 * (r3_[i] + th * (r4_[i] + th1 * r5_[i])));
  }

 private:
  template <class Rhs, class OnStep>
  friend double dopri_integrate(Rhs&&, std::vector<double>&, double, double,
                                const DopriOptions&, OnStep&&);
  std::vector<double> r1_, r2_, r3_, r4_, r5_;
};

/// Integrates y from t0 toward t_end. on_step(const DopriStep&) is called
/// after every accepted step and returns false to stop early. Returns the
/// final time reached; y holds the state there.
template <class Rhs, class OnStep>
double dopri_integrate(Rhs&& rhs, std::vector<double>& y, double t0, double t_end,
                       const DopriOptions& opt, OnStep&& on_step) {
  constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  constexpr double a21 = 1.0 / 5;
  constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                   a54 = -212.0 / 729;
  constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                   a64 = 49.0 / 176, a65 = -5103.0 / 18656;
  constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192,
                   a75 = -2187.0 / 6784, a76 = 11.0 / 84;
  constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                   e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;
  constexpr double d1 = -12715105075.0 / 11282082432, d3 = 87487479700.0 / 32700410799,
                   d4 = -10690763975.0 / 1880347072, d5 = 701980252875.0 / 199316789632,
                   d6 = -1453857185.0 / 822651844, d7 = 69997945.0 / 29380423;

  const std::size_t n = y.size();
  std::vector<double> k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n), tmp(n), y1(n);
  DopriStep step;
  step.r1_.resize(n);
  step.r2_.resize(n);
  step.r3_.resize(n);
  step.r4_.resize(n);
  step.r5_.resize(n);

  double t = t0;
  const double dir = t_end >= t0 ? 1.0 : -1.0;
  double h = std::min(opt.initial_step, std::abs(t_end - t0));
  rhs(t, y, k1);
  std::size_t steps = 0;
  double fac_prev_err = 1e-4;

  while (dir * (t_end - t) > 0.0) {
    if (++steps > opt.max_steps) {
      throw NumericalError("step-limit", "integrator exceeded max_steps");
    }
    if (h < opt.min_step) {
      throw NumericalError("step-collapse",
                           "step size fell below " + std::to_string(opt.min_step) +
                               " at t=" + std::to_string(t));
    }
    h = std::min(h, std::abs(t_end - t));
    const double hs = dir * h;

    for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + hs * a21 * k1[i];
    rhs(t + c2 * hs, tmp, k2);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + hs * (a31 * k1[i] + a32 * k2[i]);
    rhs(t + c3 * hs, tmp, k3);
    for (std::size_t i = 0; i < n; ++i)
      tmp[i] = y[i] + hs * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i]);
    rhs(t + c4 * hs, tmp, k4);
    for (std::size_t i = 0; i < n; ++i)
      tmp[i] = y[i] + hs * (a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]);
    rhs(t + c5 * hs, tmp, k5);
    for (std::size_t i = 0; i < n; ++i)
      tmp[i] = y[i] + hs * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] +
                            a65 * k5[i]);
    rhs(t + hs, tmp, k6);
    for (std::size_t i = 0; i < n; ++i)
      y1[i] = y[i] + hs * (a71 * k1[i] + a73 * k3[i] + a74 * k4[i] + a75 * k5[i] +
                           a76 * k6[i]);
    rhs(t + hs, y1, k7);

    double err = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double ei = hs * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] +
                              e6 * k6[i] + e7 * k7[i]);
      const double sc = opt.atol + opt.rtol * std::max(std::abs(y[i]), std::abs(y1[i]));
      err += (ei / sc) * (ei / sc);
    }
    err = std::sqrt(err / static_cast<double>(std::max<std::size_t>(n, 1)));

    if (!std::isfinite(err)) {
      h *= 0.2;
      continue;
    }
    if (err <= 1.0) {
      for (std::size_t i = 0; i < n; ++i) {
        const double ydiff = y1[i] - y[i];
        const double bspl = hs * k1[i] - ydiff;
        step.r1_[i] = y[i];
        step.r2_[i] = ydiff;
        step.r3_[i] = bspl;
        step.r4_[i] = ydiff - hs * k7[i] - bspl;
        step.r5_[i] = hs * (d1 * k1[i] + d3 * k3[i] + d4 * k4[i] + d5 * k5[i] +
                            d6 * k6[i] + d7 * k7[i]);
      }
      step.t_old = t;
      step.t_new = t + hs;
      step.y_old = &y;
      step.y_new = &y1;
      const bool go_on = on_step(static_cast<const DopriStep&>(step));
      t += hs;
      y.swap(y1);
      k1.swap(k7);
      // PI step control (Hairer's beta = 0.04).
      const double e = std::max(err, 1e-10);
      double fac = 0.9 * std::pow(e, -0.7 / 5.0) * std::pow(fac_prev_err, 0.04);
      fac = std::clamp(fac, 0.2, 10.0);
      fac_prev_err = std::max(err, 1e-4);
      h = std::min(h * fac, opt.max_step);
      if (!go_on) break;
    } else {
      h *= std::max(0.2, 0.9 * std::pow(err, -0.2));
    }
  }
  return t;
}

}  // namespace mergesplit
