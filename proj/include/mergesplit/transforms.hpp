#pragma once

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "mergesplit/evolution.hpp"
#include "mergesplit/profile.hpp"

namespace mergesplit {

struct StehfestConfig {
  int min_order = 6;
  int max_order = 18;  // double precision stops helping beyond this
};

/// Gaver-Stehfest weights V_1..V_N (N even).
std::vector<double> stehfest_weights(int order);

struct InversionValue {
  double value = 0.0;
  double error = 0.0;  // |f_N - f_{N-2}| at the chosen order
  int order = 0;
};

/// Real-axis inversion of F(z) = int_0^inf e^(-zx) f(x) dx at x > 0. The
/// order is the one where consecutive orders agree best.
InversionValue invert_laplace(const std::function<double(double)>& laplace, double x,
                              const StehfestConfig& config = {});

struct DensitySample {
  GeometricGrid grid;
  std::vector<double> values;
  std::vector<double> errors;  // per-point estimate (may be empty)
  std::string provenance;      // "inversion" or "subordination"
  std::vector<std::string> warnings;
  // set by subordinate: decay model fitted to the end of g and its rate
  // (exponential: g ~ e^(-rate x); algebraic: g ~ x^(-rate))
  std::string tail_model;
  double tail_rate = 0.0;

  double x(std::size_t k) const { return grid.at(k); }
};

/// Density whose Laplace transform is 1 - u(z) for the profile u.
/// Throws NumericalError "oscillation" if the result fails to decrease
/// beyond 1e-4 relative.
DensitySample invert_profile(const ProfileFunction& profile, const GeometricGrid& x_grid,
                             const StehfestConfig& config = {});

/// Density g with Laplace transform 1 - V(z), V(z) = u(z^(1/alpha)).
DensitySample invert_levy_density(const ProfileFunction& profile, const GeometricGrid& x_grid,
                                  const StehfestConfig& config = {});

/// Density whose Laplace transform is `laplace`, same checks.
DensitySample invert_transform(const std::function<double(double)>& laplace,
                               const GeometricGrid& x_grid, const StehfestConfig& config = {},
                               bool require_monotone = true);

/// One-sided alpha-stable density with Laplace transform exp(-q^alpha).
class StableKernel {
 public:
  /// series_cutoff <= 0 picks x with x^(-alpha) = 2.
  explicit StableKernel(double alpha, double series_cutoff = 0.0);

  double operator()(double x) const;
  /// Convergent series; throws NumericalError "precision" if cancellation
  /// costs more than 1e-10 relative.
  double series(double x) const;
  /// Integral representation used below the cutoff.
  double integral(double x) const;
  /// int_0^inf p, by quadrature below `split` and the termwise series above.
  double normalization(double split = 10.0) const;

  double alpha() const { return alpha_; }
  double cutoff() const { return cutoff_; }
  /// Gamma(1+alpha) sin(pi alpha) / pi
  double tail_prefactor() const;

 private:
  double alpha_;
  double cutoff_;
};

double stable_density(double alpha, double x);

/// f(x) = int_0^inf g(tau) p(x tau^(-1/alpha)) tau^(-1/alpha) dtau on the
/// g grid. Beyond the last sample g is continued by whichever of an
/// exponential or algebraic fit matches its final stretch better; below the
/// first sample the integrand is closed as a local power law. A warning is
/// attached when the closures exceed 1e-4 of the integral.
DensitySample subordinate(const DensitySample& g, const StableKernel& kernel,
                          const GeometricGrid& x_grid);

struct PowerFit {
  double exponent = 0.0;
  double amplitude = 0.0;
  double rms = 0.0;  // residual of log y
  std::size_t points = 0;
};

/// Least-squares fit y = A x^p on the positive points. Throws NumericalError
/// "insufficient-range" when the x range spans less than two decades.
PowerFit tail_exponent_fit(const std::vector<double>& x, const std::vector<double>& y);

/// Restriction of a sample to [lo, hi] followed by the fit.
PowerFit tail_exponent_fit(const DensitySample& sample, double lo, double hi);

struct KaramataAmplitudes {
  double derivative = 0.0;  // F'(s) ~ derivative * s^(alpha-1)
  double transform = 0.0;   // F(s) ~ transform * s^alpha
};

/// Amplitudes implied by f(x) ~ A x^(-1-alpha).
KaramataAmplitudes karamata_chain(double amplitude, double alpha);

struct CmProbeReport {
  double worst = 0.0;  // largest sign violation relative to the term scale
  int order = 0;
  double x = 0.0;
  bool flagged = false;
};

/// Divided differences of order 1..depth must alternate in sign.
CmProbeReport cm_probe(const std::vector<double>& x, const std::vector<double>& y, int depth,
                       double tol = 1e-4);
CmProbeReport cm_probe(const DensitySample& sample, int depth, double tol = 1e-4);

/// CSV rows (x, f, route).
void write_density_csv(std::ostream& os, const std::vector<DensitySample>& samples);

}  // namespace mergesplit
