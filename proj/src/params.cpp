#include "mergesplit/params.hpp"

#include <cmath>
#include <string>

#include "mergesplit/errors.hpp"

namespace mergesplit {

namespace {

void require_unit_open(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw DomainError("alpha must lie in (0,1), got " + std::to_string(alpha));
  }
}

}  // namespace

ProfileParams ProfileParams::from_alpha(double alpha, double lambda) {
  require_unit_open(alpha);
  if (!(lambda > 0.0) || !std::isfinite(lambda)) {
    throw DomainError("lambda must be positive and finite");
  }
  ProfileParams p;
  p.alpha = alpha;
  p.beta = beta_of_alpha(alpha);
  p.alpha_hat = alphahat_of_beta(p.beta);
  p.lambda = lambda;
  return p;
}

double beta_of_alpha(double alpha) {
  require_unit_open(alpha);
  return (1.0 - alpha) / (alpha * (1.0 + alpha));
}

double alpha_of_beta(double beta) {
  if (!(beta > 0.0) || !std::isfinite(beta)) {
    throw DomainError("beta must be positive and finite");
  }
  // beta*a^2 + (beta+1)*a - 1 = 0, positive root, rationalized.
  const double b = beta + 1.0;
  return 2.0 / (b + std::sqrt(b * b + 4.0 * beta));
}

double alphahat_of_beta(double beta) {
  if (!(beta >= 0.0) || !std::isfinite(beta)) {
    throw DomainError("beta must be nonnegative and finite");
  }
  if (beta == 0.0) return 1.0 / 3.0;

  // g(a) = beta*a*(1-a) - (1-3a) is increasing on (0,1/3]: g(0) = -1 < 0,
  // g(1/3) = 2beta/9 > 0. The other root of the quadratic exceeds 1.
  auto g = [beta](double a) { return beta * a * (1.0 - a) - (1.0 - 3.0 * a); };
  double lo = 0.0;
  double hi = 1.0 / 3.0;
  while (hi - lo > 1e-14) {
    const double mid = 0.5 * (lo + hi);
    (g(mid) < 0.0 ? lo : hi) = mid;
  }
  double a = 0.5 * (lo + hi);
  const double dg = beta * (1.0 - 2.0 * a) + 3.0;
  a -= g(a) / dg;
  return a;
}

double beta_of_alphahat(double alpha_hat) {
  if (!(alpha_hat > 0.0 && alpha_hat <= 1.0 / 3.0)) {
    throw DomainError("alpha_hat must lie in (0,1/3]");
  }
  return (1.0 - 3.0 * alpha_hat) / (alpha_hat * (1.0 - alpha_hat));
}

std::pair<double, double> eigen_residuals(const ProfileParams& p) {
  const double ba = p.beta * p.alpha;
  const double saddle = (-1.0 - ba) * (-1.0 - p.alpha) - 2.0;
  const double bh = p.beta * p.alpha_hat;
  const double node = (-3.0 + bh) * (-1.0 + p.alpha_hat) - 2.0;
  return {saddle, node};
}

}  // namespace mergesplit
