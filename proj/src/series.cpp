#include "mergesplit/series.hpp"

#include <algorithm>
#include <cfloat>
#include <cmath>
#include <numeric>
#include <ostream>
#include <string>

#include "mergesplit/errors.hpp"
#include "mergesplit/params.hpp"

namespace mergesplit {

namespace {

RadiusReport ratio_analysis(const SeriesData& data);

double beta_for(double alpha) { return alpha == 1.0 ? 0.0 : beta_of_alpha(alpha); }

// e_n = s * sum_{k<n} e_k e_{n-k} / a_n, e_1 = 1.
std::vector<long double> scaled_recursion(const std::vector<long double>& denoms, long double s) {
  const std::size_t n_max = denoms.size();
  std::vector<long double> e(n_max);
  e[0] = 1.0L;
  for (std::size_t n = 2; n <= n_max; ++n) {
    long double acc = 0.0L;
    // symmetric sum: pairs (k, n-k)
    for (std::size_t k = 1; 2 * k < n; ++k) acc += 2.0L * e[k - 1] * e[n - k - 1];
    if (n % 2 == 0) acc += e[n / 2 - 1] * e[n / 2 - 1];
    e[n - 1] = s * acc / denoms[n - 1];
  }
  return e;
}

}  // namespace

double series_denominator(double alpha, double beta, std::size_t n) {
  const double an = alpha * static_cast<double>(n);
  return beta * an + 1.0 - 2.0 / (an + 1.0);
}

long double SeriesData::coeff(std::size_t n) const {
  return std::ldexp(scaled[n - 1], std::ilogb(scale) * (1 - static_cast<int>(n)));
}

std::vector<double> SeriesData::gamma_star_for(double radius) const {
  std::vector<double> g(scaled.size());
  const long double q = static_cast<long double>(radius) / scale;
  for (std::size_t n = 1; n <= scaled.size(); ++n) {
    g[n - 1] = static_cast<double>(scaled[n - 1] * std::pow(q, static_cast<long double>(n - 1)));
  }
  return g;
}

SeriesData coefficients(double alpha, std::size_t n_max) {
  if (!(alpha > 0.0 && alpha <= 1.0)) {
    throw DomainError("series: alpha must lie in (0,1]");
  }
  if (n_max < 1) throw DomainError("series: n_max must be at least 1");

  SeriesData d;
  d.alpha = alpha;
  d.beta = beta_for(alpha);
  d.denoms.resize(n_max);
  for (std::size_t n = 1; n <= n_max; ++n) d.denoms[n - 1] = series_denominator(alpha, d.beta, n);
  d.denoms[0] = 0.0;  // exact: beta*alpha + 1 = 2/(1+alpha)

  std::vector<long double> denoms_ld(n_max);
  {
    const long double a = alpha;
    const long double b = alpha == 1.0 ? 0.0L : (1.0L - a) / (a * (1.0L + a));
    for (std::size_t n = 2; n <= n_max; ++n) {
      const long double an = a * static_cast<long double>(n);
      denoms_ld[n - 1] = b * an + 1.0L - 2.0L / (an + 1.0L);
    }
  }

  // Pilot pass on a short unscaled prefix picks a scale near the radius,
  // rounded to a power of two so that scaling is exact.
  const std::size_t pilot = std::min<std::size_t>(n_max, 24);
  long double s = 1.0L;
  if (pilot >= 3) {
    const auto e = scaled_recursion(
        std::vector<long double>(denoms_ld.begin(), denoms_ld.begin() + pilot), 1.0L);
    s = std::exp2(std::round(std::log2(e[pilot - 2] / e[pilot - 1])));
  }
  d.scale = static_cast<double>(s);
  d.scaled = scaled_recursion(denoms_ld, s);

  d.coeffs.resize(n_max);
  const int scale_exp = std::ilogb(d.scale);
  for (std::size_t n = 1; n <= n_max; ++n) {
    const long double c = std::ldexp(d.scaled[n - 1], scale_exp * (1 - static_cast<int>(n)));
    if (!(c > 0.0L) || !(c <= static_cast<long double>(DBL_MAX))) {
      throw NumericalError("overflow", "series coefficient c_" + std::to_string(n) +
                                           " exceeds the double range");
    }
    d.coeffs[n - 1] = static_cast<double>(c);
  }

  if (n_max >= 20) {
    // No stability gate here; radius_estimate() is the checked entry point.
    d.radius_est = ratio_analysis(d).radius;
  } else if (alpha < 1.0) {
    d.radius_est = (1.0 - alpha) / (1.0 + alpha);  // rigorous lower bound
  } else {
    d.radius_est = n_max >= 2 ? d.coeffs[n_max - 2] / d.coeffs[n_max - 1] : 4.0 / 27.0;
  }
  d.gamma_star = d.gamma_star_for(d.radius_est);
  return d;
}

namespace {

RadiusReport ratio_analysis(const SeriesData& data) {
  const std::size_t n_max = data.size();
  RadiusReport rep;
  rep.lower_bound = (1.0 - data.alpha) / (1.0 + data.alpha);
  rep.upper_bound = n_max >= 2 ? data.denoms[1] : 1.0;

  // ratios rho_n = c_{n+1}/c_n for n in the last quartile
  const std::size_t first = n_max - n_max / 4;
  std::vector<double> inv_n, rho, ratio;
  for (std::size_t n = first; n < n_max; ++n) {
    const long double r = data.scaled[n] / (data.scaled[n - 1] * data.scale);
    rho.push_back(static_cast<double>(r));
    ratio.push_back(static_cast<double>(1.0L / r));
    inv_n.push_back(1.0 / static_cast<double>(n));
  }
  const double m = static_cast<double>(ratio.size());
  rep.ratio_mean = std::accumulate(ratio.begin(), ratio.end(), 0.0) / m;
  const auto [mn, mx] = std::minmax_element(ratio.begin(), ratio.end());
  rep.ratio_spread = (*mx - *mn) / rep.ratio_mean;

  // Domb-Sykes: rho_n = (1/R)(1 + g/n + ...); least squares in 1/n.
  const double xb = std::accumulate(inv_n.begin(), inv_n.end(), 0.0) / m;
  const double yb = std::accumulate(rho.begin(), rho.end(), 0.0) / m;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < rho.size(); ++i) {
    sxx += (inv_n[i] - xb) * (inv_n[i] - xb);
    sxy += (inv_n[i] - xb) * (rho[i] - yb);
  }
  const double slope = sxx > 0.0 ? sxy / sxx : 0.0;
  const double intercept = yb - slope * xb;
  rep.radius = 1.0 / intercept;
  rep.singularity_exponent = 1.0 + slope / intercept;

  if (data.alpha < 1.0) {
    if (rep.radius < rep.lower_bound) {
      rep.radius = rep.lower_bound;
      rep.clamped = true;
    } else if (rep.radius > rep.upper_bound) {
      rep.radius = rep.upper_bound;
      rep.clamped = true;
    }
  }
  return rep;
}

}  // namespace

RadiusReport radius_estimate(const SeriesData& data) {
  if (data.size() < 20) throw DomainError("radius_estimate: need at least 20 coefficients");
  auto rep = ratio_analysis(data);
  if (rep.ratio_spread > 0.01) {
    throw NumericalError("instability", "ratio-test estimates vary by " +
                                            std::to_string(100.0 * rep.ratio_spread) +
                                            "% over the last quartile");
  }
  return rep;
}

SeriesValue eval_series(const SeriesData& data, double z) {
  return eval_series(data, z, data.size());
}

SeriesValue eval_series(const SeriesData& data, double z, std::size_t terms) {
  if (!(z > 0.0)) throw DomainError("eval_series: z must be positive");
  const double w = std::pow(z, data.alpha);
  if (!(w < data.radius_est)) {
    throw NumericalError("convergence", "z^alpha = " + std::to_string(w) +
                                            " is not inside the radius estimate " +
                                            std::to_string(data.radius_est));
  }
  terms = std::min(terms, data.size());
  const long double q = static_cast<long double>(w) / data.scale;
  long double u = 0.0L, zdu = 0.0L, avg = 0.0L, last = 0.0L;
  long double qn = 1.0L;
  for (std::size_t n = 1; n <= terms; ++n) {
    qn *= q;
    const long double term = data.scaled[n - 1] * qn;
    const long double sgn = (n % 2 == 1) ? 1.0L : -1.0L;
    const long double an = static_cast<long double>(data.alpha) * static_cast<long double>(n);
    u += sgn * term;
    zdu += sgn * an * term;
    avg += sgn * term / (an + 1.0L);
    last = term;
    if (term == 0.0L) break;
  }
  SeriesValue v;
  const long double s = data.scale;
  v.u = static_cast<double>(s * u);
  v.z_du = static_cast<double>(s * zdu);
  v.average = static_cast<double>(s * avg);
  v.last_term = static_cast<double>(s * last);
  v.warning = v.last_term > 1e-10 * std::abs(v.u);
  return v;
}

CmReport gamma_star_cm_check(const SeriesData& data, int depth, double tol,
                             std::optional<double> radius) {
  if (depth < 0 || static_cast<std::size_t>(depth) > data.size() / 2) {
    throw DomainError("gamma_star_cm_check: depth must lie in [0, n_max/2]");
  }
  std::vector<double> diff = data.gamma_star_for(radius.value_or(data.radius_est));
  CmReport rep;
  for (int k = 0; k <= depth; ++k) {
    const double sign = (k % 2 == 0) ? 1.0 : -1.0;
    for (std::size_t j = 0; j < diff.size(); ++j) {
      const double v = -sign * diff[j];
      if (v > rep.worst) {
        rep.worst = v;
        rep.order = k;
        rep.index = j;
      }
    }
    for (std::size_t j = 0; j + 1 < diff.size(); ++j) diff[j] = diff[j + 1] - diff[j];
    if (!diff.empty()) diff.pop_back();
  }
  rep.flagged = rep.worst > tol;
  return rep;
}

void write_series_csv(std::ostream& os, const SeriesData& data) {
  os << "n,c_n,a_n,gamma_star\n";
  os.precision(17);
  for (std::size_t n = 1; n <= data.size(); ++n) {
    os << n << ',' << static_cast<double>(data.coeff(n)) << ',' << data.denoms[n - 1] << ','
       << data.gamma_star[n - 1] << '\n';
  }
}

}  // namespace mergesplit
