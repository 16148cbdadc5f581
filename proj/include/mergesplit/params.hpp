#pragma once

#include <optional>
#include <utility>

namespace mergesplit {

/// Exponents of the self-similar profile u_alpha.
///
/// alpha is the small-z exponent (u ~ z^alpha), alpha_hat the large-z
/// exponent (1 - u ~ c_hat z^-alpha_hat), beta the dilation rate. The three
/// are tied by beta = (1-alpha)/(alpha(1+alpha)) = (1-3ah)/(ah(1-ah)).
struct ProfileParams {
  double alpha = 0.5;
  double beta = 0.0;
  double alpha_hat = 0.0;
  std::optional<double> c_hat;  // only ever fitted
  double lambda = 1.0;

  /// Fill beta and alpha_hat from alpha. Throws DomainError unless 0 < alpha < 1.
  static ProfileParams from_alpha(double alpha, double lambda = 1.0);
};

/// (1-alpha)/(alpha(1+alpha)); requires alpha in (0,1).
double beta_of_alpha(double alpha);

/// Inverse of beta_of_alpha, for beta > 0.
double alpha_of_beta(double beta);

/// Root in (0,1/3] of beta*a*(1-a) = 1 - 3a; requires beta >= 0.
double alphahat_of_beta(double beta);

/// Beta recovered from alpha_hat via (1-3a)/(a(1-a)).
double beta_of_alphahat(double alpha_hat);

/// The two linearization determinants at the saddle (0,0) and the node
/// (1,1). Both vanish when the parameters are consistent.
std::pair<double, double> eigen_residuals(const ProfileParams& p);

}  // namespace mergesplit
