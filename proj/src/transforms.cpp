#include "mergesplit/transforms.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>

#include "mergesplit/errors.hpp"

namespace mergesplit {

namespace {
constexpr double kPi = std::numbers::pi;
}

std::vector<double> stehfest_weights(int order) {
  if (order < 2 || order % 2 != 0 || order > 30)
    throw DomainError("Stehfest order must be even and in [2, 30]");
  const int half = order / 2;
  auto fact = [](int n) {
    long double r = 1.0L;
    for (int i = 2; i <= n; ++i) r *= i;
    return r;
  };
  std::vector<double> v(static_cast<std::size_t>(order));
  for (int k = 1; k <= order; ++k) {
    long double sum = 0.0L;
    for (int j = (k + 1) / 2; j <= std::min(k, half); ++j)
      sum += std::pow(static_cast<long double>(j), half) * fact(2 * j) /
             (fact(half - j) * fact(j) * fact(j - 1) * fact(k - j) * fact(2 * j - k));
    v[static_cast<std::size_t>(k - 1)] =
        static_cast<double>(((k + half) % 2 == 0 ? 1.0L : -1.0L) * sum);
  }
  return v;
}

InversionValue invert_laplace(const std::function<double(double)>& laplace, double x,
                              const StehfestConfig& config) {
  if (!(x > 0.0)) throw DomainError("inversion point must be positive");
  if (config.min_order < 4 || config.max_order < config.min_order)
    throw DomainError("bad Stehfest order range");
  const double a = std::numbers::ln2 / x;
  // transform samples are shared across orders
  std::vector<double> samples(static_cast<std::size_t>(config.max_order));
  for (int k = 1; k <= config.max_order; ++k) samples[static_cast<std::size_t>(k - 1)] = laplace(k * a);

  // the preceding difference is weighed in as well, since a single pair of
  // orders agrees by accident too often
  InversionValue best;
  best.error = std::numeric_limits<double>::infinity();
  double prev = std::numeric_limits<double>::quiet_NaN();
  double prev_diff = std::numeric_limits<double>::infinity();
  const int first = config.min_order % 2 == 0 ? config.min_order : config.min_order + 1;
  for (int n = first - 4; n <= config.max_order; n += 2) {
    if (n < 2) continue;
    const auto w = stehfest_weights(n);
    double sum = 0.0;
    for (int k = 0; k < n; ++k) sum += w[static_cast<std::size_t>(k)] * samples[static_cast<std::size_t>(k)];
    const double f = a * sum;
    const double diff = std::abs(f - prev);
    if (n >= first) {
      const double err = diff + 0.25 * prev_diff;
      if (err < best.error) best = {f, err, n};
    }
    if (!std::isnan(prev)) prev_diff = diff;
    prev = f;
  }
  return best;
}

DensitySample invert_transform(const std::function<double(double)>& laplace,
                               const GeometricGrid& x_grid, const StehfestConfig& config,
                               bool require_monotone) {
  DensitySample out;
  out.grid = x_grid;
  out.provenance = "inversion";
  out.values.resize(x_grid.points);
  out.errors.resize(x_grid.points);
  for (std::size_t k = 0; k < x_grid.points; ++k) {
    const auto r = invert_laplace(laplace, x_grid.at(k), config);
    out.values[k] = r.value;
    out.errors[k] = r.error;
  }
  if (require_monotone) {
    for (std::size_t k = 0; k < out.values.size(); ++k) {
      if (!(out.values[k] > 0.0))
        throw NumericalError("oscillation", "nonpositive inverted density at x = " +
                                                std::to_string(x_grid.at(k)));
      if (k > 0 && out.values[k] > out.values[k - 1] * (1.0 + 1e-4))
        throw NumericalError("oscillation", "inverted density increases at x = " +
                                                std::to_string(x_grid.at(k)));
    }
  }
  return out;
}

DensitySample invert_profile(const ProfileFunction& profile, const GeometricGrid& x_grid,
                             const StehfestConfig& config) {
  return invert_transform([&](double z) { return profile.one_minus_u(z); }, x_grid, config);
}

DensitySample invert_levy_density(const ProfileFunction& profile, const GeometricGrid& x_grid,
                                  const StehfestConfig& config) {
  const double inv_alpha = 1.0 / profile.params().alpha;
  auto sample = invert_transform(
      [&](double z) { return profile.one_minus_u(std::pow(z, inv_alpha)); }, x_grid, config,
      false);
  // The exponentially small tail sinks below the inversion noise; keep the
  // leading run where the estimate is trustworthy and monotone.
  std::size_t keep = sample.values.size();
  for (std::size_t k = 0; k < sample.values.size(); ++k) {
    const bool noisy = !(sample.values[k] > 0.0) || sample.errors[k] > 1e-3 * sample.values[k] ||
                       (k > 0 && sample.values[k] > sample.values[k - 1]);
    if (noisy) {
      keep = k;
      break;
    }
  }
  if (keep < 4) throw NumericalError("oscillation", "inverted Levy density unusable");
  if (keep < sample.values.size()) {
    sample.warnings.push_back("truncated at x = " + std::to_string(x_grid.at(keep - 1)) +
                              " where inversion noise reaches 1e-3");
    sample.values.resize(keep);
    sample.errors.resize(keep);
    sample.grid.points = keep;
  }
  return sample;
}

StableKernel::StableKernel(double alpha, double series_cutoff) : alpha_(alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("stable index must lie in (0, 1)");
  cutoff_ = series_cutoff > 0.0 ? series_cutoff : std::pow(2.0, -1.0 / alpha);
}

double StableKernel::series(double x) const {
  if (!(x > 0.0)) throw DomainError("stable density needs x > 0");
  const double lx = -alpha_ * std::log(x);  // log of x^-alpha
  double sum = 0.0, abs_sum = 0.0;
  for (int k = 1; k < 2000; ++k) {
    const double mag = std::exp(std::lgamma(k * alpha_ + 1.0) - std::lgamma(k + 1.0) + k * lx);
    const double term = (k % 2 == 0 ? 1.0 : -1.0) * mag * std::sin(k * kPi * alpha_);
    sum += term;
    abs_sum += std::abs(term);
    if (k > 10 && mag < 1e-18 * std::abs(sum)) break;
  }
  const double p = -sum / (kPi * x);
  if (abs_sum * 1e-16 > 1e-10 * std::abs(sum))
    throw NumericalError("precision", "stable series cancellation at x = " + std::to_string(x));
  return p;
}

double StableKernel::integral(double x) const {
  if (!(x > 0.0)) throw DomainError("stable density needs x > 0");
  const double a = alpha_;
  const double e = 1.0 / (1.0 - a);
  const double lk = -a * e * std::log(x);  // log of x^(-a/(1-a))
  const double k = std::exp(lk);
  // beyond this the result underflows a double anyway
  if (!std::isfinite(k) || k * std::pow(a, a * e) * (1.0 - a) > 800.0) return 0.0;
  auto shape = [&](double phi) {
    const double s_a = std::sin(a * phi);
    return std::pow(s_a / std::sin(phi), e) * std::sin((1.0 - a) * phi) / s_a;
  };
  // shape increases from a^(a/(1-a)) (1-a) at 0; everything beyond the
  // point where k (A - A0) reaches 60 is below e^-60 of the peak
  const double a0 = std::pow(a, a * e) * (1.0 - a);
  const double target = a0 + 60.0 / k;
  double upper = kPi;
  if (shape(kPi * (1.0 - 1e-12)) > target) {
    double lo = 0.0, hi = kPi;
    for (int it = 0; it < 80; ++it) {
      const double mid = 0.5 * (lo + hi);
      (shape(mid) > target ? hi : lo) = mid;
    }
    upper = hi;
  }
  // factor e^(-k A0) out so the quadrature sees O(1) values
  auto integrand = [&](double phi) {
    const double A = shape(phi);
    return A * std::exp(-k * (A - a0));
  };
  const double val =
      boost::math::quadrature::gauss_kronrod<double, 31>::integrate(integrand, 0.0, upper, 15, 1e-13);
  const double log_p = std::log(val * a * e / kPi) - e * std::log(x) - k * a0;
  return std::exp(log_p);
}


double StableKernel::operator()(double x) const {
  if (!(x > 0.0)) return 0.0;
  return x >= cutoff_ ? series(x) : integral(x);
}

double StableKernel::tail_prefactor() const {
  return std::tgamma(1.0 + alpha_) * std::sin(kPi * alpha_) / kPi;
}

double StableKernel::normalization(double split) const {
  // below: quadrature in log x from where the density is negligible
  const double a = alpha_;
  const double scale = (1.0 - a) * std::pow(a, a / (1.0 - a));
  const double x_low = std::pow(60.0 / scale, -(1.0 - a) / a);
  auto f = [&](double t) {
    const double x = std::exp(t);
    return (*this)(x) * x;
  };
  const double lower = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
      f, std::log(x_low), std::log(split), 25, 1e-13);
  // above: termwise integral of the series
  double upper = 0.0;
  const double lx = -a * std::log(split);
  for (int k = 1; k < 2000; ++k) {
    const double mag = std::exp(std::lgamma(k * a + 1.0) - std::lgamma(k + 1.0) + k * lx);
    upper += -(k % 2 == 0 ? 1.0 : -1.0) * mag * std::sin(k * kPi * a) / (k * a) / kPi;
    if (k > 10 && mag < 1e-18) break;
  }
  return lower + upper;
}

double stable_density(double alpha, double x) { return StableKernel(alpha)(x); }

namespace {

struct TailModel {
  bool exponential = true;
  double a = 0.0, rate = 0.0;  // log g = a - rate * t   (t = tau or log tau)
  double rms = 0.0;
};

TailModel fit_line(const std::vector<double>& t, const std::vector<double>& lg) {
  const double n = static_cast<double>(t.size());
  double mt = 0, ml = 0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    mt += t[i] / n;
    ml += lg[i] / n;
  }
  double ctt = 0, ctl = 0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    ctt += (t[i] - mt) * (t[i] - mt);
    ctl += (t[i] - mt) * (lg[i] - ml);
  }
  TailModel m;
  m.rate = -ctl / ctt;
  m.a = ml + m.rate * mt;
  double ss = 0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    const double r = lg[i] - (m.a - m.rate * t[i]);
    ss += r * r;
  }
  m.rms = std::sqrt(ss / n);
  return m;
}

}  // namespace

DensitySample subordinate(const DensitySample& g, const StableKernel& kernel,
                          const GeometricGrid& x_grid) {
  const std::size_t n0 = g.values.size();
  if (n0 < 8) throw DomainError("subordination needs at least 8 samples of g");
  for (double v : g.values)
    if (!(v > 0.0)) throw DomainError("subordination needs a positive g");
  const double inv_a = 1.0 / kernel.alpha();
  const double h = g.grid.log_step();
  DensitySample out;
  out.grid = x_grid;
  out.provenance = "subordination";
  out.values.resize(x_grid.points);

  // fit the final stretch (last factor 1.5 in tau, at least 6 points)
  std::vector<double> taus, logt, lg;
  const double tau_end = g.grid.at(n0 - 1);
  for (std::size_t j = n0; j-- > 0;) {
    const double tau = g.grid.at(j);
    if (taus.size() >= 6 && tau < tau_end / 1.5) break;
    taus.push_back(tau);
    logt.push_back(std::log(tau));
    lg.push_back(std::log(g.values[j]));
  }
  TailModel ex = fit_line(taus, lg);
  TailModel al = fit_line(logt, lg);
  al.exponential = false;
  const TailModel& tail = (ex.rms <= al.rms && ex.rate > 0.0) ? ex : al;
  out.tail_model = tail.exponential ? "exponential" : "algebraic";
  out.tail_rate = tail.rate;
  if (!(tail.rate > 0.0)) throw NumericalError("tail-range", "g does not decay at its end");

  // continue g on the same geometric grid until it is negligible
  std::vector<double> gv(g.values);
  const double g_max = *std::max_element(gv.begin(), gv.end());
  for (std::size_t j = n0; j < n0 + 20000; ++j) {
    const double tau = g.grid.at(j);
    const double v = std::exp(tail.a - tail.rate * (tail.exponential ? tau : std::log(tau)));
    gv.push_back(v);
    if (v < 1e-20 * g_max && gv.size() % 2 == 1) break;
  }
  const std::size_t n = gv.size();

  double worst_closure = 0.0;
  std::vector<double> w(n);  // integrand times tau (d tau = tau d log tau)
  for (std::size_t i = 0; i < x_grid.points; ++i) {
    const double x = x_grid.at(i);
    for (std::size_t j = 0; j < n; ++j) {
      const double tau = g.grid.at(j);
      const double sc = std::pow(tau, -inv_a);
      w[j] = gv[j] * kernel(x * sc) * sc * tau;
    }
    double body = 0.0, extension = 0.0;
    for (std::size_t j = 0; j + 2 < n; j += 2) {
      const double piece = h / 3.0 * (w[j] + 4.0 * w[j + 1] + w[j + 2]);
      body += piece;
      if (j + 2 >= n0) extension += piece;
    }
    // left end: integrand ~ tau^(q-1) locally, so int_0^tau0 = w0 / q
    double left = 0.0;
    if (w[0] > 0.0 && w[1] > 0.0) {
      const double q = std::log(w[1] / w[0]) / h;
      if (q > 0.0) left = w[0] / q;
      else out.warnings.push_back("left closure diverges at x = " + std::to_string(x));
    }
    const double total = body + left;
    out.values[i] = total;
    if (total > 0.0) worst_closure = std::max(worst_closure, (left + extension) / total);
  }
  if (worst_closure > 1e-4)
    out.warnings.push_back("endpoint closures reach " + std::to_string(worst_closure) +
                           " of the integral");
  return out;
}

PowerFit tail_exponent_fit(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw DomainError("x and y differ in length");
  double lo = INFINITY, hi = 0.0;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0 && y[i] > 0.0)) continue;
    const double lx = std::log(x[i]), ly = std::log(y[i]);
    lo = std::min(lo, x[i]);
    hi = std::max(hi, x[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
    ++n;
  }
  if (n < 3 || hi < 100.0 * lo * (1 - 1e-9))
    throw NumericalError("insufficient-range", "power-law fit needs two decades of positive data");
  const double dn = static_cast<double>(n);
  const double mx = sx / dn, my = sy / dn;
  // centred sums avoid cancellation when log x is large
  double cxx = 0, cxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0 && y[i] > 0.0)) continue;
    const double dx = std::log(x[i]) - mx;
    cxx += dx * dx;
    cxy += dx * (std::log(y[i]) - my);
  }
  PowerFit fit;
  fit.exponent = cxy / cxx;
  const double intercept = my - fit.exponent * mx;
  fit.amplitude = std::exp(intercept);
  fit.points = n;
  double ss = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0 && y[i] > 0.0)) continue;
    const double r = std::log(y[i]) - intercept - fit.exponent * std::log(x[i]);
    ss += r * r;
  }
  fit.rms = std::sqrt(ss / dn);
  return fit;
}

PowerFit tail_exponent_fit(const DensitySample& sample, double lo, double hi) {
  std::vector<double> xs, ys;
  for (std::size_t k = 0; k < sample.values.size(); ++k) {
    const double x = sample.x(k);
    if (x >= lo * (1 - 1e-9) && x <= hi * (1 + 1e-9)) {
      xs.push_back(x);
      ys.push_back(sample.values[k]);
    }
  }
  return tail_exponent_fit(xs, ys);
}

KaramataAmplitudes karamata_chain(double amplitude, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("alpha must lie in (0, 1)");
  const double base = amplitude * std::tgamma(2.0 - alpha) / (1.0 - alpha);
  return {base, base / alpha};
}

CmProbeReport cm_probe(const std::vector<double>& x, const std::vector<double>& y, int depth,
                       double tol) {
  if (x.size() != y.size() || depth < 1) throw DomainError("bad cm_probe input");
  CmProbeReport rep;
  std::vector<double> d(y), s(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) s[i] = std::abs(y[i]);
  for (int k = 1; k <= depth && static_cast<std::size_t>(k) < y.size(); ++k) {
    const double sign = (k % 2 == 0) ? 1.0 : -1.0;  // expected sign of order k
    for (std::size_t i = 0; i + static_cast<std::size_t>(k) < y.size(); ++i) {
      const double dx = x[i + static_cast<std::size_t>(k)] - x[i];
      d[i] = (d[i + 1] - d[i]) / dx;
      s[i] = (s[i + 1] + s[i]) / dx;
      const double v = s[i] > 0.0 ? std::max(0.0, -sign * d[i]) / s[i] : 0.0;
      if (v > rep.worst) {
        rep.worst = v;
        rep.order = k;
        rep.x = x[i];
      }
    }
    d.pop_back();
    s.pop_back();
  }
  rep.flagged = rep.worst > tol;
  return rep;
}

CmProbeReport cm_probe(const DensitySample& sample, int depth, double tol) {
  std::vector<double> xs(sample.values.size());
  for (std::size_t k = 0; k < xs.size(); ++k) xs[k] = sample.x(k);
  return cm_probe(xs, sample.values, depth, tol);
}

void write_density_csv(std::ostream& os, const std::vector<DensitySample>& samples) {
  os << "x,f,route\n";
  os.precision(17);
  for (const auto& s : samples)
    for (std::size_t k = 0; k < s.values.size(); ++k)
      os << s.x(k) << ',' << s.values[k] << ',' << s.provenance << '\n';
}

}  // namespace mergesplit
