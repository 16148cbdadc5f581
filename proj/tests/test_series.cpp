#include <boost/multiprecision/cpp_int.hpp>
#include <cmath>
#include <random>
#include <sstream>

#include "doctest.h"
#include "mergesplit/errors.hpp"
#include "mergesplit/params.hpp"
#include "mergesplit/series.hpp"

using namespace mergesplit;
using boost::multiprecision::cpp_int;
using boost::multiprecision::cpp_rational;

namespace {

cpp_int binomial(unsigned n, unsigned k) {
  cpp_int r = 1;
  for (unsigned i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

// A_n(3,1) = binom(3n+1, n)/(3n+1)
cpp_int fuss_catalan(unsigned n) { return binomial(3 * n + 1, n) / (3 * n + 1); }

// Exact recursion for rational alpha = p/q.
std::vector<cpp_rational> exact_coefficients(cpp_rational alpha, unsigned n_max) {
  const cpp_rational beta = alpha == 1 ? cpp_rational(0) : (1 - alpha) / (alpha * (1 + alpha));
  std::vector<cpp_rational> c(n_max + 1);
  c[1] = 1;
  for (unsigned n = 2; n <= n_max; ++n) {
    const cpp_rational an = beta * alpha * n + 1 - cpp_rational(2) / (alpha * n + 1);
    cpp_rational s = 0;
    for (unsigned k = 1; k < n; ++k) s += c[k] * c[n - k];
    c[n] = s / an;
    // identity a_n c_n - sum c_k c_{n-k} = 0 must hold exactly
    REQUIRE(an * c[n] - s == 0);
  }
  return c;
}

}  // namespace

TEST_CASE("leading coefficients") {
  for (double a : {0.1, 0.5, 0.9, 1.0}) {
    const auto d = coefficients(a, 10);
    CHECK(d.coeffs[0] == 1.0);
    CHECK(d.denoms[0] == 0.0);
  }
  const auto d = coefficients(0.5, 10);
  CHECK(d.denoms[1] == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
  CHECK(d.coeffs[1] == doctest::Approx(1.5).epsilon(1e-15));
}

TEST_CASE("alpha = 1 reproduces Fuss-Catalan numbers") {
  const auto d = coefficients(1.0, 30);
  CHECK(d.coeffs[0] == 1.0);
  CHECK(d.coeffs[1] == 3.0);
  CHECK(d.coeffs[2] == 12.0);
  CHECK(d.coeffs[3] == 55.0);
  const auto exact = exact_coefficients(1, 30);
  for (unsigned n = 1; n <= 30; ++n) {
    const cpp_int fc = fuss_catalan(n);
    CHECK(exact[n] == cpp_rational(fc));
    const double rel = std::abs(d.coeffs[n - 1] - fc.convert_to<double>()) / fc.convert_to<double>();
    CHECK(rel < 1e-15);
  }
}

TEST_CASE("rational-alpha recursion oracle") {
  for (auto [p, q] : {std::pair{1, 2}, std::pair{1, 3}, std::pair{3, 4}, std::pair{2, 5}}) {
    const cpp_rational a(p, q);
    const auto exact = exact_coefficients(a, 15);
    const auto d = coefficients(static_cast<double>(p) / q, 15);
    for (unsigned n = 1; n <= 15; ++n) {
      const double ex = exact[n].convert_to<double>();
      CHECK(std::abs(d.coeffs[n - 1] - ex) <= 1e-13 * ex);
    }
  }
}

TEST_CASE("denominators: increasing and bounded") {
  for (double a : {0.05, 0.3, 0.5, 0.95}) {
    const auto d = coefficients(a, 100);
    for (std::size_t n = 2; n <= 100; ++n) {
      CHECK(d.denoms[n - 1] > d.denoms[n - 2]);
      CHECK(d.denoms[n - 1] > 0.0);
      CHECK(d.denoms[n - 1] < n * (1.0 - a) / (1.0 + a) + 1.0);
      CHECK(d.coeffs[n - 1] > 0.0);
    }
  }
}

TEST_CASE("domain and overflow errors") {
  CHECK_THROWS_AS(coefficients(0.0, 10), DomainError);
  CHECK_THROWS_AS(coefficients(1.5, 10), DomainError);
  CHECK_THROWS_AS(coefficients(0.5, 0), DomainError);
  // (27/4)^n passes 1e308 near n = 372
  try {
    coefficients(1.0, 450);
    FAIL("expected overflow");
  } catch (const NumericalError& e) {
    CHECK(e.kind() == "overflow");
    CHECK(std::string(e.what()).find("c_") != std::string::npos);
  }
}

TEST_CASE("radius estimate") {
  SUBCASE("alpha = 1 gives 4/27") {
    const auto d = coefficients(1.0, 300);
    const auto r = radius_estimate(d);
    CHECK(r.radius == doctest::Approx(4.0 / 27.0).epsilon(1e-4));
    // square-root branch point, not a pole
    CHECK(r.singularity_exponent == doctest::Approx(-0.5).epsilon(0.05));
  }
  SUBCASE("alpha = 0.5 within the a-priori bounds") {
    const auto d = coefficients(0.5, 200);
    CHECK(d.radius_est >= 1.0 / 3.0);
    CHECK(d.radius_est <= 2.0 / 3.0);
    const auto r = radius_estimate(d);
    CHECK_FALSE(r.clamped);
    // the conjectured simple pole
    CHECK(r.singularity_exponent == doctest::Approx(1.0).epsilon(0.05));
  }
  SUBCASE("random alpha") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> unif(0.01, 0.99);
    for (int i = 0; i < 20; ++i) {
      const double a = unif(rng);
      const auto d = coefficients(a, 200);
      const auto r = radius_estimate(d);
      CHECK(r.radius >= (1.0 - a) / (1.0 + a));
      CHECK(r.radius <= d.denoms[1]);
      CHECK(d.denoms[1] < 1.0);
    }
  }
  CHECK_THROWS_AS(radius_estimate(coefficients(0.5, 19)), DomainError);
}

TEST_CASE("series evaluation") {
  const auto d = coefficients(0.5, 200);
  SUBCASE("leading term dominates near zero") {
    const double z = 1e-12;
    const auto v = eval_series(d, z);
    CHECK(v.u / std::pow(z, 0.5) == doctest::Approx(1.0).epsilon(1e-5));
    CHECK(v.u < std::pow(z, 0.5));
    CHECK_FALSE(v.warning);
  }
  SUBCASE("outside the radius") {
    const double z = std::pow(d.radius_est * 1.01, 2.0);
    CHECK_THROWS_AS(eval_series(d, z), NumericalError);
    CHECK_THROWS_AS(eval_series(d, -1.0), DomainError);
  }
  SUBCASE("alternating partial sums bracket the limit") {
    const double w = 0.45 * d.radius_est;
    const double z = w * w;
    const double limit = eval_series(d, z).u;
    for (std::size_t n = 1; n < 30; ++n) {
      const double s = eval_series(d, z, n).u;
      if (n % 2 == 1) CHECK(s >= limit);
      else CHECK(s <= limit);
    }
    CHECK(limit > 0.0);
    CHECK(limit < 1.0);
  }
  SUBCASE("truncated series solves the profile equation to O(w^(N+1))") {
    const double beta = d.beta;
    auto residual = [&](double w, std::size_t terms) {
      const auto v = eval_series(d, w * w, terms);
      return std::abs(beta * v.z_du + v.u * v.u + v.u - 2.0 * v.average);
    };
    const double w = 0.3 * d.radius_est;
    CHECK(residual(w, 200) < 1e-14);
    // with N terms the first unmatched power is w^(N+1)
    const double r1 = residual(w, 8);
    const double r2 = residual(w / 2, 8);
    CHECK(std::log2(r1 / r2) == doctest::Approx(9.0).epsilon(0.05));
  }
}

TEST_CASE("gamma* complete monotonicity") {
  SUBCASE("alpha = 1 with exact radius") {
    const auto d = coefficients(1.0, 80);
    const auto rep = gamma_star_cm_check(d, 8, 1e-9, 4.0 / 27.0);
    CHECK_FALSE(rep.flagged);
    CHECK(d.gamma_star_for(4.0 / 27.0)[0] == 1.0);
  }
  SUBCASE("gamma*_0 = 1 for estimated radius") {
    for (double a : {0.2, 0.5, 0.8}) CHECK(coefficients(a, 100).gamma_star[0] == 1.0);
  }
  SUBCASE("estimated radius for alpha = 0.5") {
    const auto d = coefficients(0.5, 200);
    const auto rep = gamma_star_cm_check(d, 6, 1e-6);
    CHECK_FALSE(rep.flagged);
  }
  SUBCASE("overestimated radius breaks the monotone structure") {
    const auto d = coefficients(0.5, 200);
    const auto rep = gamma_star_cm_check(d, 6, 1e-9, d.radius_est / 0.9);
    CHECK(rep.flagged);
    CHECK(rep.worst > 1.0);
  }
  CHECK_THROWS_AS(gamma_star_cm_check(coefficients(0.5, 20), 11), DomainError);
}

TEST_CASE("csv export") {
  const auto d = coefficients(0.5, 5);
  std::ostringstream os;
  write_series_csv(os, d);
  const std::string s = os.str();
  CHECK(s.rfind("n,c_n,a_n,gamma_star\n1,1,0,1\n", 0) == 0);
  CHECK(std::count(s.begin(), s.end(), '\n') == 6);
}
