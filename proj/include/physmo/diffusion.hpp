#pragma once

#include <vector>

#include "physmo/array.hpp"
#include "physmo/rng.hpp"

namespace physmo::nn {
class Denoiser;
}

namespace physmo::diff {

/// Residual-shift schedule: eta moves from ~0 to ~1 over N steps; the forward
/// chain drifts a clean sequence toward the conditioning observation y while
/// injecting kappa-scaled noise. Derived per step n (1-based):
///   alpha_n = eta_n - eta_{n-1}   (eta_0 := 0)
///   A_n = eta_{n-1} / eta_n,  B_n = 1 - A_n,  Sigma_n = A_n * alpha_n * kappa^2
/// Sigma is a variance; reverse sampling adds sqrt(Sigma_n) * eps.
class ShiftSchedule {
 public:
  static ShiftSchedule build(int n_steps, double eta1, double eta_n, double kappa,
                             double curve_exponent);

  int steps() const { return static_cast<int>(eta_.size()); }
  double kappa() const { return kappa_; }

  // n in [1, N]; eta(0) == 0
  double eta(int n) const { return n == 0 ? 0.0 : eta_.at(n - 1); }
  double alpha(int n) const { return alpha_.at(n - 1); }
  double a(int n) const { return a_.at(n - 1); }
  double b(int n) const { return b_.at(n - 1); }
  double sigma(int n) const { return sigma_.at(n - 1); }

 private:
  std::vector<double> eta_, alpha_, a_, b_, sigma_;
  double kappa_ = 1.0;
};

struct MotionState {
  MotionArray values;
  int step = 0;  // diffusion index n in [0, N]
};

/// One forward kernel step: x^n ~ N(x^{n-1} + alpha_n (y - x0), kappa^2 alpha_n I).
MotionState forward_step_sample(const MotionState& x_prev, const MotionArray& x0,
                                const MotionArray& y, const ShiftSchedule& sched, Rng& rng);

/// Closed-form marginal: x^n ~ N(x0 + eta_n (y - x0), kappa^2 eta_n I).
MotionState forward_marginal_sample(const MotionArray& x0, const MotionArray& y, int n,
                                    const ShiftSchedule& sched, Rng& rng);

/// Reverse kernel: x^{n-1} = A_n x^n + B_n x_hat + sqrt(Sigma_n) eps.
/// Deterministic at n = 1 where Sigma_1 = 0.
MotionState reverse_step(const MotionState& x_n, const MotionArray& x_hat,
                         const ShiftSchedule& sched, Rng& rng);

/// Full reverse chain: draw x^N ~ N(y, kappa^2 I), iterate reverse_step with
/// x_hat = denoiser(x^n, y, n), return x^0.
MotionArray refine(const MotionArray& y, const nn::Denoiser& denoiser, const ShiftSchedule& sched,
                   Rng& rng);

}  // namespace physmo::diff
