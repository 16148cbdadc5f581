#pragma once

#include <cstddef>
#include <iosfwd>
#include <memory>
#include <vector>

#include "mergesplit/evolution.hpp"
#include "mergesplit/profile.hpp"

namespace mergesplit {

/// Truncated discrete merging-splitting system with constant merge rate 2
/// and split rate 2/(i+j+1). f[i-1] holds the density of size i.
struct ModelDState {
  std::vector<double> f;
  double time = 0.0;
  std::size_t n_max = 0;
  double m0 = 0.0;
  double m1 = 0.0;
  double mass_leak = 0.0;  // first moment carried past n_max by merging

  /// Recomputes m0 and m1 from f.
  void refresh();
};

/// f_k = alpha lambda^-alpha / Gamma(1-alpha) * k^(-1-alpha), k = 1..n_max.
ModelDState init_powerlaw(double alpha, double lambda, std::size_t n_max);

/// Linear convolution c_k = sum_{j=1}^{k-1} f_j f_{k-j}, k = 0..2N (c[k]).
/// FFT based above `fft_threshold`, direct below.
class Convolver {
 public:
  explicit Convolver(std::size_t n, std::size_t fft_threshold = 4096);
  ~Convolver();
  Convolver(const Convolver&) = delete;
  Convolver& operator=(const Convolver&) = delete;

  /// f has n entries (sizes 1..n); out gets 2n+1 entries.
  void operator()(const double* f, std::vector<double>& out);
  bool uses_fft() const { return plan_ != nullptr; }

 private:
  struct Plan;
  std::size_t n_;
  std::unique_ptr<Plan> plan_;
};

/// Right-hand side of the truncated system. Merges landing above n_max are
/// dropped; their first moment is returned through `leak_rate`.
class ModelDRhs {
 public:
  explicit ModelDRhs(std::size_t n_max, std::size_t fft_threshold = 4096);

  void operator()(const double* f, double* dfdt, double* leak_rate);
  /// Convolution from the most recent call (2N+1 entries).
  const std::vector<double>& last_convolution() const { return conv_; }
  std::size_t n_max() const { return n_; }

 private:
  std::size_t n_;
  Convolver convolve_;
  std::vector<double> conv_;
};

/// df/dt for a state, allocating a fresh evaluator.
std::vector<double> rhs(const ModelDState& state);

struct ModelDControls {
  double rtol = 1e-8;
  double atol = 1e-20;
  double initial_step = 1e-3;
  double max_step = 0.5;
  std::vector<double> snapshot_times;  // t_end is always recorded
  std::size_t fft_threshold = 4096;
};

/// Adaptive Dormand-Prince integration. Returns the initial state and one
/// state per snapshot. Throws NumericalError "positivity" if a snapshot has
/// a negative density.
std::vector<ModelDState> integrate(const ModelDState& state, double t_end,
                                   const ModelDControls& controls = {});

/// sum_j (1 - e^(-j s_hat)) f_j.
double bernstein_value(const ModelDState& state, double s_hat);

GridFunction bernstein_of_state(const ModelDState& state, const GeometricGrid& s_hat_grid);

/// max over s_hat of |d_t f - (-f^2 - f + 2/(1-e^-s) int_0^s f(r) e^-r dr)|
/// for the transform f of the state, with d_t f from the truncated rhs. With
/// `account_truncation` the transform of the dropped merges is added back,
/// so the identity holds exactly for any support.
double transform_equation_residual(const ModelDState& state, const std::vector<double>& s_hat,
                    bool account_truncation = true);

/// sup over s_hat in [s_lo, s_hi] of |f(s_hat e^(-beta t), t) - u(s_hat/lambda)|.
/// Throws NumericalError "resolution" if s_lo e^(-beta t) < 1/n_max.
double theorem_D_error(const ModelDState& state, const ProfileFunction& profile, double lambda,
                       double s_lo = 0.1, double s_hi = 10.0, std::size_t samples = 101);

/// Sparse CSV (t, i, f_i), rows with f_i > threshold.
void write_modeld_csv(std::ostream& os, const std::vector<ModelDState>& states,
                      double threshold = 0.0);

}  // namespace mergesplit
