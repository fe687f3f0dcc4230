#include "physmo/diffusion.hpp"

#include <cmath>

#include "physmo/denoiser.hpp"
#include "physmo/simd/kernels.hpp"

namespace physmo::diff {

ShiftSchedule ShiftSchedule::build(int n_steps, double eta1, double eta_n, double kappa,
                                   double curve_exponent) {
  if (n_steps < 1) throw ValidationError("ShiftSchedule: N must be >= 1");
  if (!(eta1 > 0.0 && eta1 < 1.0) || !(eta_n > 0.0 && eta_n < 1.0))
    throw ValidationError("ShiftSchedule: eta bounds must lie in (0, 1)");
  if (n_steps > 1 && !(eta1 < eta_n))
    throw ValidationError("ShiftSchedule: eta1 must be smaller than etaN");
  if (!(kappa > 0.0)) throw ValidationError("ShiftSchedule: kappa must be positive");
  if (!(curve_exponent > 0.0)) throw ValidationError("ShiftSchedule: curve exponent must be positive");

  ShiftSchedule s;
  s.kappa_ = kappa;
  s.eta_.resize(n_steps);
  if (n_steps == 1) {
    s.eta_[0] = eta1;
  } else {
    const double l1 = std::log(eta1), ln = std::log(eta_n);
    for (int i = 0; i < n_steps; ++i) {
      const double f = std::pow(static_cast<double>(i) / (n_steps - 1), curve_exponent);
      s.eta_[i] = std::exp(l1 + (ln - l1) * f);
    }
  }
  s.alpha_.resize(n_steps);
  s.a_.resize(n_steps);
  s.b_.resize(n_steps);
  s.sigma_.resize(n_steps);
  for (int i = 0; i < n_steps; ++i) {
    const double prev = i == 0 ? 0.0 : s.eta_[i - 1];
    s.alpha_[i] = s.eta_[i] - prev;
    if (!(s.alpha_[i] > 0.0)) throw ValidationError("ShiftSchedule: eta not strictly increasing");
    // B defined as 1 - A so A + B == 1 holds exactly
    s.a_[i] = prev / s.eta_[i];
    s.b_[i] = 1.0 - s.a_[i];
    s.sigma_[i] = s.a_[i] * s.alpha_[i] * kappa * kappa;
  }
  return s;
}

namespace {

void check_step(const ShiftSchedule& sched, int n, const char* where) {
  if (n < 1 || n > sched.steps())
    throw ValidationError(std::string(where) + ": step index " + std::to_string(n) +
                          " outside [1, " + std::to_string(sched.steps()) + "]");
}

void add_noise(MotionArray& x, double stddev, Rng& rng) {
  if (stddev <= 0.0) return;
  double* p = x.data();
  for (std::size_t i = 0; i < x.size(); ++i) p[i] += stddev * rng.normal();
}

}  // namespace

MotionState forward_step_sample(const MotionState& x_prev, const MotionArray& x0,
                                const MotionArray& y, const ShiftSchedule& sched, Rng& rng) {
  const int n = x_prev.step + 1;
  check_step(sched, n, "forward_step_sample");
  require_same_shape(x_prev.values, x0, "forward_step_sample");
  require_same_shape(x0, y, "forward_step_sample");
  const double a = sched.alpha(n);
  MotionState out{MotionArray(x0.rows(), x0.cols()), n};
  // x^{n-1} + alpha_n (y - x0)
  simd::axpby(a, y.data(), -a, x0.data(), out.values.data(), x0.size());
  simd::axpy(1.0, x_prev.values.data(), out.values.data(), x0.size());
  add_noise(out.values, sched.kappa() * std::sqrt(a), rng);
  return out;
}

MotionState forward_marginal_sample(const MotionArray& x0, const MotionArray& y, int n,
                                    const ShiftSchedule& sched, Rng& rng) {
  check_step(sched, n, "forward_marginal_sample");
  require_same_shape(x0, y, "forward_marginal_sample");
  const double e = sched.eta(n);
  MotionState out{MotionArray(x0.rows(), x0.cols()), n};
  simd::axpby(1.0 - e, x0.data(), e, y.data(), out.values.data(), x0.size());
  add_noise(out.values, sched.kappa() * std::sqrt(e), rng);
  return out;
}

MotionState reverse_step(const MotionState& x_n, const MotionArray& x_hat,
                         const ShiftSchedule& sched, Rng& rng) {
  const int n = x_n.step;
  check_step(sched, n, "reverse_step");
  require_same_shape(x_n.values, x_hat, "reverse_step");
  MotionState out{MotionArray(x_hat.rows(), x_hat.cols()), n - 1};
  simd::axpby(sched.a(n), x_n.values.data(), sched.b(n), x_hat.data(), out.values.data(),
              x_hat.size());
  add_noise(out.values, std::sqrt(sched.sigma(n)), rng);
  return out;
}

MotionArray refine(const MotionArray& y, const nn::Denoiser& denoiser, const ShiftSchedule& sched,
                   Rng& rng) {
  MotionState state{y, sched.steps()};
  add_noise(state.values, sched.kappa(), rng);
  for (int n = sched.steps(); n >= 1; --n) {
    const MotionArray x_hat = denoiser.predict(state.values, y, n);
    state = reverse_step(state, x_hat, sched, rng);
  }
  return std::move(state.values);
}

}  // namespace physmo::diff
