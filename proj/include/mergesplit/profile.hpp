#pragma once

#include <cstddef>
#include <iosfwd>
#include <limits>
#include <vector>

#include "mergesplit/params.hpp"
#include "mergesplit/series.hpp"

namespace mergesplit {

struct ShootConfig {
  double tau_step = 1e-3;      // output spacing in tau = log z
  double epsilon = 1e-8;       // start distance along the unstable eigenvector
  double rtol = 1e-12;         // per-step relative error of the integrator
  double atol = 1e-22;
  double end_gap = 1e-10;      // stop once 1 - u falls below this
  double switch_u = 0.5;       // integrate (1-u, 1-v) beyond this u
  double max_tau_span = 1e5;   // stall guard
  /// v/u of the starting point; NaN selects the unstable eigenvector 1/(1+alpha).
  double start_ratio = std::numeric_limits<double>::quiet_NaN();
};

/// Self-similar profile sampled on a uniform tau grid, tau_k = tau0 + k*h.
///
/// Samples below u = switch_u come from integrating (u, v); above it from
/// integrating (p, q) = (1-u, 1-v), so `one_minus_u` keeps full relative
/// precision into the tail.
struct ProfileCurve {
  ProfileParams params;
  double tau0 = 0.0;
  double h = 1e-3;
  std::vector<double> u, v;
  std::vector<double> one_minus_u, one_minus_v;
  std::vector<double> du;  // du/dtau from the vector field
  double c_hat_fit = 0.0;  // regression amplitude, set by fit_tail
  double c_tail = 0.0;     // p * e^(alpha_hat tau) at the last sample
  double normalization_shift = 0.0;
  double normalization_mismatch = 0.0;  // max relative series mismatch after normalize
  double tail_slope = 0.0;              // fitted slope of log(1-u) against tau

  std::size_t size() const { return u.size(); }
  double tau(std::size_t k) const { return tau0 + h * static_cast<double>(k); }
  double tau_end() const { return tau(size() - 1); }
};

/// Integrates the phase-plane system along the unstable manifold of (0,0)
/// until 1 - u < end_gap. Throws NumericalError "escape" if the trajectory
/// leaves {(u+u^2)/2 < v < u} and "stall" if u stops increasing.
ProfileCurve shoot(double alpha, const ShootConfig& config = {});

/// Fixes the dilation so that u(z) ~ z^alpha by least-squares matching of
/// the series on z^alpha <= radius_est/2. Throws NumericalError "no-overlap"
/// when no sample lies in that window.
ProfileCurve normalize(ProfileCurve curve, const SeriesData& series);

struct TailFit {
  double slope = 0.0;
  double c_hat = 0.0;
  std::size_t points = 0;
};

/// Regression of log(1-u) on tau over 1-u in [lo, hi]. Stores c_hat_fit and
/// tail_slope in the curve. Throws NumericalError "slope-mismatch" if the
/// slope differs from -alpha_hat by more than 1%.
TailFit fit_tail(ProfileCurve& curve, double lo = 1e-6, double hi = 1e-3);

/// max |beta z u' + u^2 + u - 2v| over interior samples, with z u' taken by
/// a fourth-order finite difference of the stored u.
double residual(const ProfileCurve& curve);

/// Pointwise residual of the profile equation for given (z u', u, v).
double profile_equation_residual(double beta, double z_du, double u, double v);

/// u_alpha at arbitrary z >= 0: series for z^alpha < radius/2, Hermite
/// interpolation of the ODE samples mid-range, and 1 - c z^-alpha_hat once
/// 1 - u drops below tail_switch.
class ProfileFunction {
 public:
  ProfileFunction(ProfileCurve curve, SeriesData series, double tail_switch = 1e-6);

  double u(double z) const;
  double one_minus_u(double z) const;
  /// z u'(z)
  double z_du(double z) const;

  const ProfileCurve& curve() const { return curve_; }
  const SeriesData& series() const { return series_; }
  const ProfileParams& params() const { return curve_.params; }
  double tail_amplitude() const { return tail_c_; }

 private:
  enum class Region { series, curve, tail };
  Region region(double tau) const;
  double interp(const std::vector<double>& y, const std::vector<double>& dy, double sign,
                double tau) const;

  ProfileCurve curve_;
  SeriesData series_;
  double tail_switch_;
  double tau_series_max_;  // series used below this tau
  double tau_tail_min_;    // tail form used above this tau
  double tail_c_;
};

/// Profile pipeline: shoot, series, normalize, fit tail.
ProfileFunction build_profile(double alpha, const ShootConfig& config = {},
                              std::size_t series_terms = 200);

/// CSV rows (z, u, v), every `stride`-th sample.
void write_profile_csv(std::ostream& os, const ProfileCurve& curve, std::size_t stride = 1);

}  // namespace mergesplit
