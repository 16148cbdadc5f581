#include <cmath>
#include <random>

#include "doctest.h"
#include "mergesplit/errors.hpp"
#include "mergesplit/params.hpp"

using namespace mergesplit;

namespace {

// Independent oracle: plain bisection on (1-3a)/(a(1-a)) = beta over (0,1/3).
double alphahat_bisect(double beta) {
  double lo = 1e-15, hi = 1.0 / 3.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    const double b = (1.0 - 3.0 * mid) / (mid * (1.0 - mid));
    (b > beta ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

TEST_CASE("beta_of_alpha closed form") {
  CHECK(beta_of_alpha(0.5) == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
  CHECK(beta_of_alpha(1.0 / 3.0) == doctest::Approx(1.5).epsilon(1e-15));
  CHECK(beta_of_alpha(1.0 - 1e-9) < 1e-8);
  CHECK_THROWS_AS(beta_of_alpha(0.0), DomainError);
  CHECK_THROWS_AS(beta_of_alpha(1.0), DomainError);
  CHECK_THROWS_AS(beta_of_alpha(1.5), DomainError);
  CHECK_THROWS_AS(beta_of_alpha(std::nan("")), DomainError);
}

TEST_CASE("beta_of_alpha is strictly decreasing") {
  double prev = beta_of_alpha(1e-3);
  for (int i = 2; i < 1000; ++i) {
    const double b = beta_of_alpha(i * 1e-3);
    CHECK(b < prev);
    prev = b;
  }
}

TEST_CASE("alphahat_of_beta") {
  CHECK(alphahat_of_beta(0.0) == 1.0 / 3.0);
  const double ah = alphahat_of_beta(2.0 / 3.0);
  CHECK(ah == doctest::Approx(alphahat_bisect(2.0 / 3.0)).epsilon(1e-12));
  CHECK(ah == doctest::Approx(0.2877855).epsilon(1e-7));
  for (double beta : {0.1, 1.0, 10.0}) {
    CHECK(beta_of_alphahat(alphahat_of_beta(beta)) == doctest::Approx(beta).epsilon(1e-12));
    CHECK(alphahat_of_beta(beta) == doctest::Approx(alphahat_bisect(beta)).epsilon(1e-12));
  }
  CHECK(alphahat_of_beta(1e6) > 0.0);
  CHECK_THROWS_AS(alphahat_of_beta(-0.1), DomainError);
}

TEST_CASE("alpha_of_beta inverts beta_of_alpha") {
  for (double a : {0.01, 0.2, 0.5, 0.77, 0.999}) {
    CHECK(alpha_of_beta(beta_of_alpha(a)) == doctest::Approx(a).epsilon(1e-13));
  }
}

TEST_CASE("eigen residuals vanish on consistent parameters") {
  for (double a : {0.5, 0.9}) {
    const auto p = ProfileParams::from_alpha(a);
    const auto [r1, r2] = eigen_residuals(p);
    CHECK(std::abs(r1) < 1e-14);
    CHECK(std::abs(r2) < 1e-13);
  }
}

TEST_CASE("perturbed beta shifts the saddle determinant linearly") {
  auto p = ProfileParams::from_alpha(0.5);
  p.beta += 0.01;
  const auto [r1, r2] = eigen_residuals(p);
  // det = (1 + beta*alpha)(1 + alpha) - 2, so d det/d beta = alpha(1+alpha).
  CHECK(r1 == doctest::Approx(0.01 * 0.5 * 1.5).epsilon(1e-12));
  CHECK(std::abs(r2) > 1e-4);
}

TEST_CASE("random alpha: identities and ordering") {
  std::mt19937_64 rng(20240611);
  std::uniform_real_distribution<double> unif(1e-6, 1.0 - 1e-6);
  double prev_alpha = 0.0, prev_ah = 1.0;
  for (int i = 0; i < 1000; ++i) {
    const double a = unif(rng);
    const auto p = ProfileParams::from_alpha(a);
    const auto [r1, r2] = eigen_residuals(p);
    CHECK(std::abs(r1) < 1e-12);
    CHECK(std::abs(r2) < 1e-12);
    CHECK(std::abs((1.0 + p.beta * a) * (1.0 + a) - 2.0) < 1e-14);
    CHECK(p.alpha_hat > 0.0);
    CHECK(p.alpha_hat < 1.0 / 3.0);
    CHECK(p.alpha_hat < a);
    if (i > 0 && a > prev_alpha) CHECK(p.alpha_hat >= prev_ah);
    prev_alpha = a;
    prev_ah = p.alpha_hat;
  }
}

TEST_CASE("alpha_hat increases with alpha on a sorted sweep") {
  double prev = 0.0;
  for (int i = 1; i < 1000; ++i) {
    const double ah = alphahat_of_beta(beta_of_alpha(i * 1e-3));
    CHECK(ah > prev);
    CHECK(ah < 1.0 / 3.0);
    prev = ah;
  }
}
