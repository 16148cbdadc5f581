#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <vector>

namespace mergesplit {

/// Coefficients of u_alpha(z) = sum_{n>=1} (-1)^(n-1) c_n z^(alpha n).
///
/// Internally the recursion runs on scaled coefficients e_n = c_n s^(n-1),
/// with s close to the radius of convergence, so that neither overflow nor
/// underflow occurs for long expansions. `coeffs` holds the unscaled c_n and
/// is only populated when every c_n is representable as a double.
struct SeriesData {
  double alpha = 0.0;
  double beta = 0.0;
  std::vector<double> coeffs;       // c_1..c_N (index n-1)
  std::vector<double> denoms;       // a_1..a_N
  std::vector<long double> scaled;  // e_1..e_N
  double scale = 1.0;               // s
  double radius_est = 0.0;          // estimate of R_alpha in w = z^alpha
  std::vector<double> gamma_star;   // gamma*_0..gamma*_{N-1} built from radius_est

  std::size_t size() const { return denoms.size(); }

  /// c_n as long double (n is 1-based).
  long double coeff(std::size_t n) const;

  /// gamma*_{n-1} = c_n R^(n-1) for a given radius R.
  std::vector<double> gamma_star_for(double radius) const;
};

/// Diagnostics of the ratio test over the last quartile.
struct RadiusReport {
  double radius = 0.0;        // Domb-Sykes extrapolation of c_n/c_{n+1}
  double ratio_mean = 0.0;    // plain mean of c_n/c_{n+1}
  double ratio_spread = 0.0;  // (max - min)/mean of c_n/c_{n+1}
  double lower_bound = 0.0;   // (1-alpha)/(1+alpha)
  double upper_bound = 0.0;   // a_2
  bool clamped = false;       // estimate fell outside the bounds and was clamped
  /// Exponent p in c_n ~ R^-n n^(p-1); p = 1 is a simple pole, the
  /// alpha = 1 limit has p = -1/2.
  double singularity_exponent = 0.0;
};

/// Coefficient recursion for alpha in (0,1]; alpha = 1 means beta = 0.
/// Throws NumericalError("overflow") naming the first n whose c_n exceeds
/// the double range.
SeriesData coefficients(double alpha, std::size_t n_max);

/// Denominator a_n = beta*alpha*n + 1 - 2/(alpha*n + 1).
double series_denominator(double alpha, double beta, std::size_t n);

/// Ratio-test radius estimate; requires at least 20 terms. Throws
/// NumericalError("instability") if the ratios vary by more than 1% over
/// the last quartile.
RadiusReport radius_estimate(const SeriesData& data);

struct SeriesValue {
  double u = 0.0;          // sum (-1)^(n-1) c_n w^n
  double z_du = 0.0;       // z u'(z) = sum (-1)^(n-1) alpha n c_n w^n
  double average = 0.0;    // (1/z) int_0^z u = sum (-1)^(n-1) c_n w^n / (alpha n + 1)
  double last_term = 0.0;  // magnitude of the last retained term of u
  bool warning = false;    // last_term / u > 1e-10
};

/// Evaluates the truncated series at z > 0. Throws
/// NumericalError("convergence") unless z^alpha < radius_est.
SeriesValue eval_series(const SeriesData& data, double z);

/// Same, with only the first `terms` coefficients.
SeriesValue eval_series(const SeriesData& data, double z, std::size_t terms);

struct CmReport {
  double worst = 0.0;  // most negative (-1)^k Delta^k gamma_j, reported as a positive violation
  int order = 0;       // k of the worst violation
  std::size_t index = 0;
  bool flagged = false;  // worst > tol
};

/// Finite-difference complete-monotonicity check of gamma*. Uses
/// data.radius_est unless a radius is supplied.
CmReport gamma_star_cm_check(const SeriesData& data, int depth, double tol = 1e-9,
                             std::optional<double> radius = std::nullopt);

/// CSV rows (n, c_n, a_n, gamma*_{n-1}).
void write_series_csv(std::ostream& os, const SeriesData& data);

}  // namespace mergesplit
