#pragma once

#include <optional>
#include <vector>

#include "physmo/denoiser.hpp"
#include "physmo/dynamics.hpp"
#include "physmo/training.hpp"

namespace physmo::uq {


/// Diagonal first and second moments of the reverse chain plus the
/// cross-covariance with the predictor output.
struct VarianceState {
  MotionArray mean, var, cov;
};

struct VarianceReport {
  MotionArray refined;     // sampled x^0 chain output
  MotionArray mean0;       // E[x^0]
  MotionArray var0;        // Var(x^0), entrywise
  MotionArray force_var;   // per-frame Var(F); filled by the physical pipeline
  MotionArray joint_map;   // normalized T×J map; filled by the physical pipeline
  MotionArray vertex_map;  // optional part-weight blend
  int floor_warnings = 0;
};

/// E[x^{n-1}] = A_n E[x^n] + B_n E[x_hat].
MotionArray step_expectation(const MotionArray& mean_xn, const MotionArray& mean_xhat, int n,
                             const diff::ShiftSchedule& sched);

/// Var(x^{n-1}) = A^2 Var(x^n) + B^2 Var(x_hat) + Sigma_n + 2AB Cov, floored
/// at zero (Monte-Carlo covariance can transiently overshoot); increments
/// *floor_count per floored entry when given.
MotionArray step_variance(const MotionArray& var_xn, const MotionArray& var_xhat,
                          const MotionArray& cov, int n, const diff::ShiftSchedule& sched,
                          int* floor_count = nullptr);

/// Entrywise (1/S) sum x.*xhat - mean_xn .* (1/S) sum xhat.
MotionArray mc_covariance(const std::vector<MotionArray>& samples_xn,
                          const std::vector<MotionArray>& samples_xhat,
                          const MotionArray& mean_xn);

/// Reverse-chain moment propagation: starts at a sampled x^N with
/// E <- x^N, Var <- 0, Cov <- 0, then per step samples x_hat from
/// N(f, diag(gamma^2)), advances the sampled chain, updates E/Var, and
/// re-estimates Cov (and the x_hat moments) from S auxiliary samples of
/// N(E, Var). Fills refined/mean0/var0 in the space of y.
VarianceReport propagate(const MotionArray& y, const nn::Denoiser& denoiser,
                         const nn::LaplacePosterior& posterior, const diff::ShiftSchedule& sched,
                         int s_samples, Rng& rng);

/// Diagonal of J Var(x^0) J^T with J = dF/dx at mean0, by central finite
/// differences of inverse dynamics over the stencil frames (relative step
/// 1e-5*(1+|x|)).
MotionArray force_variance(const kin::KinematicTree& tree, const dyn::RigidBodySet& bodies,
                           const MotionArray& mean0_raw, const MotionArray& var0_raw, double dt,
                           const Eigen::Vector3d& gravity = dyn::default_gravity());

/// Per-joint variance map, normalized by the sequence maximum (all-zero input
/// stays all-zero). Joint 0 aggregates the 6 root coordinates, joint k its 3
/// rotation coordinates.
MotionArray variance_maps(const MotionArray& var_force);

/// Part-weight blend of the joint map onto vertices.
MotionArray vertex_variance_map(const MotionArray& joint_map, const inertia::PartWeights& weights);

/// Full physical-space pipeline: normalize y, propagate, denormalize the
/// moments, push through the force Jacobian and build the maps.
VarianceReport refine_with_variance(const kin::KinematicTree& tree, const dyn::RigidBodySet& bodies,
                                    const MotionArray& y_raw, const nn::Denoiser& denoiser,
                                    const nn::LaplacePosterior& posterior,
                                    const diff::ShiftSchedule& sched,
                                    const train::Normalization& norm, int s_samples, double dt,
                                    Rng& rng,
                                    const Eigen::Vector3d& gravity = dyn::default_gravity());

}  // namespace physmo::uq
