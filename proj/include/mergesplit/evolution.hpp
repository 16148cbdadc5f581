#pragma once

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <random>
#include <vector>

#include "mergesplit/profile.hpp"

namespace mergesplit {

/// Geometric grid s_k = s_min * r^k, k = 0..K.
struct GeometricGrid {
  double s_min = 1e-8;
  double ratio = 1.0;
  std::size_t points = 0;

  static GeometricGrid per_decade(double s_min, double s_max, int per_decade);

  double at(std::size_t k) const;
  double log_step() const;
  double s_max() const { return at(points - 1); }
  /// Fractional index of s (may lie outside [0, K]).
  double position(double s) const;
};

/// Samples of a function on a geometric grid. Below s_min the function is
/// taken to behave like s^left_exponent.
struct GridFunction {
  GeometricGrid grid;
  std::vector<double> values;
  double left_exponent = 0.0;

  static GridFunction sample(const GeometricGrid& grid, const std::function<double(double)>& f,
                             double left_exponent);

  /// Cubic interpolation in log s (log-log when `log_values` and values > 0).
  double interpolate(double s, bool log_values = false) const;
};

/// Weighted running average
///   (A_kappa U)(s) = int_0^s U(y) y^(kappa-1) dy / int_0^s y^(kappa-1) dy
/// at every grid point, by one cumulative pass. kappa = 1 is the averaging
/// operator (1/s) int_0^s U; kappa = 1/alpha is the operator
/// int_0^1 V(sr) d(r^(1/alpha)). Quadrature is composite Simpson / 3-8 in
/// log s, so all weights are positive, and the denominator uses the same
/// weights, so constants are reproduced exactly when left_exponent = 0.
std::vector<double> weighted_average(const GridFunction& f, double kappa = 1.0);

/// (1/s) int_0^s U at a single s in [s_min, s_max].
double averaging(const GridFunction& f, double s);

/// max over samples of ||A U||_2 / ||U||_2 in the discrete L^2(ds) norm.
double hardy_norm_probe(const std::vector<GridFunction>& samples);

/// Random nonnegative piecewise-linear (in log s) function on the grid.
GridFunction random_piecewise_linear(const GeometricGrid& grid, std::mt19937_64& rng,
                                     int knots = 12);

struct EvolutionState {
  GridFunction grid;
  double time = 0.0;
  double m0 = 0.0;  // value at s = infinity; may be +inf
};

struct EvolutionConfig {
  double dt = 1e-2;
  double dt_max = 1e-2;
  double kappa = 1.0;                 // weight exponent of the averaging operator
  std::vector<double> snapshot_times;  // sorted; t_end is always recorded
  bool check_monotone = true;
};

/// IMEX step: Uhat = U + 2 dt A U, then (1+dt) U+ + dt (U+)^2 = Uhat.
EvolutionState step_imex(const EvolutionState& state, double dt, double kappa = 1.0);

/// Positive root of dt x^2 + (1+dt) x = uhat, in cancellation-free form.
double implicit_reaction(double uhat, double dt);

/// Repeated step_imex up to t_end; returns the initial state and one state
/// per snapshot time. Throws NumericalError "positivity" / "monotonicity"
/// if a snapshot violates the invariants.
std::vector<EvolutionState> evolve(const GridFunction& u0, double m0, double t_end,
                                   const EvolutionConfig& config = {});

/// Richardson-extrapolated trajectory 2 U(dt/2) - U(dt): removes the
/// first-order time error of the scheme. Same snapshot layout as evolve.
std::vector<EvolutionState> evolve_richardson(const GridFunction& u0, double m0, double t_end,
                                              const EvolutionConfig& config = {});

/// Logistic closed form for the zeroth moment.
double logistic_m0(double m0_initial, double t);

/// sup over s in [s_lo, s_hi] of |U(s e^(-beta t), t) - target(s)|, sampled
/// at `samples` log-spaced points. Throws DomainError if the rescaled window
/// leaves the grid.
double rescaled_error(const EvolutionState& state, const std::function<double(double)>& target,
                      double beta, double s_lo, double s_hi, std::size_t samples = 201);

double rescaled_error(const EvolutionState& state, const ProfileFunction& profile, double s_lo,
                      double s_hi, std::size_t samples = 201);

struct ComparisonReport {
  double min_difference = 0.0;  // min over grid and snapshots of U - V
  double time = 0.0;
  double s = 0.0;
  bool ordered = true;  // min_difference >= -1e-12
};

/// Evolves both inputs with identical steps and tracks min(U - V).
ComparisonReport comparison_test(const GridFunction& u0, const GridFunction& v0, double t_end,
                                 double dt, double tol = 1e-12);

struct DecompositionReport {
  double max_difference = 0.0;  // sup |U(s,t) - V(s^alpha,t)| over grid and snapshots
  double time = 0.0;
  double s = 0.0;
  bool passed = true;
};

/// Evolves U0(s) = V0(s^alpha) under the averaging operator on `u_grid`
/// and V0 under A_alpha on its own grid, and compares U(s,t) with
/// V(s^alpha,t) at every U grid point whose s^alpha lies inside the V grid.
DecompositionReport decomposition_check(double alpha, const GridFunction& v0,
                                        const GeometricGrid& u_grid, double t_end, double dt,
                                        double tol = 1e-6);

/// CSV rows (t, s, U) for each snapshot.
void write_snapshots_csv(std::ostream& os, const std::vector<EvolutionState>& states);

}  // namespace mergesplit
