#include "mergesplit/model_d.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <ostream>

#include "mergesplit/dopri.hpp"
#include "mergesplit/errors.hpp"

namespace mergesplit {

void ModelDState::refresh() {
  long double s0 = 0.0L, s1 = 0.0L;
  for (std::size_t i = 0; i < f.size(); ++i) {
    s0 += f[i];
    s1 += static_cast<long double>(i + 1) * f[i];
  }
  m0 = static_cast<double>(s0);
  m1 = static_cast<double>(s1);
}

ModelDState init_powerlaw(double alpha, double lambda, std::size_t n_max) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("alpha must lie in (0, 1)");
  if (!(lambda > 0.0)) throw DomainError("lambda must be positive");
  if (n_max < 2) throw DomainError("n_max must be at least 2");
  const double c = alpha * std::pow(lambda, -alpha) / std::tgamma(1.0 - alpha);
  ModelDState st;
  st.n_max = n_max;
  st.f.resize(n_max);
  for (std::size_t k = 1; k <= n_max; ++k)
    st.f[k - 1] = c * std::pow(static_cast<double>(k), -1.0 - alpha);
  st.refresh();
  return st;
}

struct Convolver::Plan {
  std::size_t m = 0;
  double* real = nullptr;
  fftw_complex* spec = nullptr;
  fftw_plan forward = nullptr;
  fftw_plan backward = nullptr;

  explicit Plan(std::size_t size) : m(size) {
    real = fftw_alloc_real(m);
    spec = fftw_alloc_complex(m / 2 + 1);
    const int mi = static_cast<int>(m);
    forward = fftw_plan_dft_r2c_1d(mi, real, spec, FFTW_ESTIMATE);
    backward = fftw_plan_dft_c2r_1d(mi, spec, real, FFTW_ESTIMATE);
  }
  ~Plan() {
    fftw_destroy_plan(forward);
    fftw_destroy_plan(backward);
    fftw_free(real);
    fftw_free(spec);
  }
};

Convolver::Convolver(std::size_t n, std::size_t fft_threshold) : n_(n) {
  if (n > fft_threshold) {
    std::size_t m = 1;
    while (m < 2 * n + 1) m <<= 1;
    plan_ = std::make_unique<Plan>(m);
  }
}

Convolver::~Convolver() = default;

void Convolver::operator()(const double* f, std::vector<double>& out) {
  out.assign(2 * n_ + 1, 0.0);
  if (!plan_) {
    for (std::size_t i = 1; i <= n_; ++i) {
      const double fi = f[i - 1];
      if (fi == 0.0) continue;
      for (std::size_t j = 1; j <= n_; ++j) out[i + j] += fi * f[j - 1];
    }
    return;
  }
  Plan& p = *plan_;
  std::fill(p.real, p.real + p.m, 0.0);
  std::copy(f, f + n_, p.real + 1);
  fftw_execute(p.forward);
  for (std::size_t k = 0; k < p.m / 2 + 1; ++k) {
    const double re = p.spec[k][0], im = p.spec[k][1];
    p.spec[k][0] = re * re - im * im;
    p.spec[k][1] = 2.0 * re * im;
  }
  fftw_execute(p.backward);
  const double scale = 1.0 / static_cast<double>(p.m);
  for (std::size_t k = 2; k <= 2 * n_; ++k) out[k] = p.real[k] * scale;
}

ModelDRhs::ModelDRhs(std::size_t n_max, std::size_t fft_threshold)
    : n_(n_max), convolve_(n_max, fft_threshold) {}

void ModelDRhs::operator()(const double* f, double* dfdt, double* leak_rate) {
  convolve_(f, conv_);
  double m0 = 0.0;
  for (std::size_t i = 0; i < n_; ++i) m0 += f[i];
  // suffix sums of f_k / (k+1) for k > i
  double tail = 0.0;
  for (std::size_t i = n_; i >= 1; --i) {
    const double fi = f[i - 1];
    const double di = static_cast<double>(i);
    dfdt[i - 1] = conv_[i] - 2.0 * fi * m0 + 2.0 * tail - (di - 1.0) / (di + 1.0) * fi;
    tail += fi / (di + 1.0);
  }
  if (leak_rate) {
    double leak = 0.0;
    for (std::size_t k = n_ + 1; k <= 2 * n_; ++k) leak += static_cast<double>(k) * conv_[k];
    *leak_rate = leak;
  }
}

std::vector<double> rhs(const ModelDState& state) {
  ModelDRhs eval(state.f.size());
  std::vector<double> out(state.f.size());
  eval(state.f.data(), out.data(), nullptr);
  return out;
}

std::vector<ModelDState> integrate(const ModelDState& state, double t_end,
                                   const ModelDControls& controls) {
  if (state.f.size() != state.n_max) throw DomainError("state size differs from n_max");
  if (!(t_end >= state.time)) throw DomainError("t_end precedes the state time");
  const std::size_t n = state.n_max;
  ModelDRhs eval(n, controls.fft_threshold);
  auto system = [&](double, const std::vector<double>& y, std::vector<double>& dy) {
    eval(y.data(), dy.data(), &dy[n]);
  };

  std::vector<double> times;
  for (double t : controls.snapshot_times)
    if (t > state.time && t < t_end) times.push_back(t);
  std::sort(times.begin(), times.end());
  times.push_back(t_end);

  DopriOptions opt;
  opt.rtol = controls.rtol;
  opt.atol = controls.atol;
  opt.max_step = controls.max_step;
  opt.initial_step = controls.initial_step;

  std::vector<double> y(state.f);
  y.push_back(state.mass_leak);
  std::vector<ModelDState> out{state};
  double t = state.time;
  std::vector<double> dense;
  for (double target : times) {
    if (target <= t) continue;
    dopri_integrate(system, y, t, target, opt, [&](const DopriStep& s) {
      opt.initial_step = s.t_new - s.t_old;
      return true;
    });
    t = target;
    ModelDState snap;
    snap.f.assign(y.begin(), y.begin() + static_cast<long>(n));
    snap.n_max = n;
    snap.time = t;
    snap.mass_leak = y[n];
    snap.refresh();
    for (double v : snap.f)
      if (!(v >= 0.0))
        throw NumericalError("positivity", "negative density at t = " + std::to_string(t));
    out.push_back(std::move(snap));
  }
  return out;
}

double bernstein_value(const ModelDState& state, double s_hat) {
  if (!(s_hat >= 0.0)) throw DomainError("s_hat must be nonnegative");
  if (std::isinf(s_hat)) return state.m0;
  double sum = 0.0;
  for (std::size_t j = 1; j <= state.f.size(); ++j)
    sum += -std::expm1(-static_cast<double>(j) * s_hat) * state.f[j - 1];
  return sum;
}

GridFunction bernstein_of_state(const ModelDState& state, const GeometricGrid& s_hat_grid) {
  return GridFunction::sample(
      s_hat_grid, [&](double s) { return bernstein_value(state, s); }, 1.0);
}

double transform_equation_residual(const ModelDState& state, const std::vector<double>& s_hat,
                    bool account_truncation) {
  const std::size_t n = state.f.size();
  ModelDRhs eval(n);
  std::vector<double> df(n);
  eval(state.f.data(), df.data(), nullptr);
  const auto& conv = eval.last_convolution();
  double worst = 0.0;
  for (double s : s_hat) {
    if (!(s > 0.0)) throw DomainError("s_hat must be positive");
    const double one_e = -std::expm1(-s);
    double fb = 0.0, rate = 0.0, integral = 0.0;
    for (std::size_t j = 1; j <= n; ++j) {
      const double dj = static_cast<double>(j);
      const double w = -std::expm1(-dj * s);
      fb += w * state.f[j - 1];
      rate += w * df[j - 1];
      // int_0^s (1 - e^(-j r)) e^(-r) dr
      integral += (one_e + std::expm1(-(dj + 1.0) * s) / (dj + 1.0)) * state.f[j - 1];
    }
    if (account_truncation)
      for (std::size_t k = n + 1; k <= 2 * n; ++k)
        rate += -std::expm1(-static_cast<double>(k) * s) * conv[k];
    const double res = rate - (-fb * fb - fb + 2.0 / one_e * integral);
    worst = std::max(worst, std::abs(res));
  }
  return worst;
}

double theorem_D_error(const ModelDState& state, const ProfileFunction& profile, double lambda,
                       double s_lo, double s_hi, std::size_t samples) {
  if (!(lambda > 0.0)) throw DomainError("lambda must be positive");
  if (!(s_lo > 0.0) || !(s_hi >= s_lo) || samples < 2) throw DomainError("bad window");
  const double shrink = std::exp(-profile.params().beta * state.time);
  if (s_lo * shrink * static_cast<double>(state.n_max) < 1.0)
    throw NumericalError("resolution", "rescaled window below 1/n_max at t = " +
                                           std::to_string(state.time));
  double worst = 0.0;
  for (std::size_t i = 0; i < samples; ++i) {
    const double s =
        s_lo * std::pow(s_hi / s_lo, static_cast<double>(i) / static_cast<double>(samples - 1));
    worst = std::max(worst, std::abs(bernstein_value(state, s * shrink) - profile.u(s / lambda)));
  }
  return worst;
}

void write_modeld_csv(std::ostream& os, const std::vector<ModelDState>& states,
                      double threshold) {
  os << "t,i,f_i\n";
  os.precision(17);
  for (const auto& st : states)
    for (std::size_t i = 0; i < st.f.size(); ++i)
      if (st.f[i] > threshold) os << st.time << ',' << i + 1 << ',' << st.f[i] << '\n';
}

}  // namespace mergesplit
