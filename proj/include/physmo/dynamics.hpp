#pragma once

#include <Eigen/Core>
#include <functional>
#include <vector>

#include "physmo/inertia.hpp"
#include "physmo/kinematics.hpp"

namespace physmo::dyn {

using Eigen::Matrix3d;
using Eigen::MatrixXd;
using Eigen::Vector3d;
using Eigen::VectorXd;
using kin::KinematicTree;
using kin::Trajectory;

/// Per-link mass properties in the link-local frame at the zero pose.
struct RigidBodySet {
  std::vector<inertia::BodyParams> bodies;

  void validate(const KinematicTree& tree) const;
};

struct DynamicsTerms {
  MatrixXd mass_matrix;
  VectorXd coriolis;
  VectorXd gravity;
};

inline Vector3d default_gravity() { return Vector3d(0.0, 0.0, -9.81); }

/// Generalized mass matrix M(q) via the composite-rigid-body algorithm,
/// expressed in the stored coordinates (rotation-vector rates).
MatrixXd mass_matrix(const KinematicTree& tree, const RigidBodySet& bodies, const VectorXd& q);

/// (coriolis, gravity): gravity term is inverse dynamics at (q, 0, 0);
/// coriolis is inverse dynamics at (q, qdot, 0) minus the gravity term.
std::pair<VectorXd, VectorXd> bias_terms(const KinematicTree& tree, const RigidBodySet& bodies,
                                         const VectorXd& q, const VectorXd& qdot,
                                         const Vector3d& gravity_vec);

/// Recursive Newton-Euler: the generalized force F with
/// M(q) qddot + C(q, qdot) + g(q) = F.
VectorXd inverse_dynamics(const KinematicTree& tree, const RigidBodySet& bodies, const VectorXd& q,
                          const VectorXd& qdot, const VectorXd& qddot, const Vector3d& gravity_vec);

/// qddot = M^-1 (tau - C - g) via an SPD factorization.
VectorXd forward_dynamics(const KinematicTree& tree, const RigidBodySet& bodies, const VectorXd& q,
                          const VectorXd& qdot, const VectorXd& torque, const Vector3d& gravity_vec);

/// Per-frame inverse dynamics of a trajectory with finite-difference
/// derivatives: the force that would exactly explain the observed motion.
MotionArray pseudoforce(const KinematicTree& tree, const RigidBodySet& bodies, const Trajectory& traj,
                        const Vector3d& gravity_vec = default_gravity());

/// Z_t = M_t qddot_t + C_t + g_t - f_hat_t, per frame.
MotionArray el_residual(const KinematicTree& tree, const RigidBodySet& bodies, const Trajectory& traj,
                        const MotionArray& f_hat, const Vector3d& gravity_vec = default_gravity());

/// Mean over frames of the l1 norm of the residual against f_bar.
double residual_metric(const KinematicTree& tree, const RigidBodySet& bodies, const Trajectory& traj,
                       const MotionArray& f_bar, const Vector3d& gravity_vec = default_gravity());

/// Sum over frames of the l1 norms.
double deterministic_el_penalty(const MotionArray& residuals);

double kinetic_energy(const KinematicTree& tree, const RigidBodySet& bodies, const VectorXd& q,
                      const VectorXd& qdot);

using TorqueFn = std::function<VectorXd(double t, const VectorXd& q, const VectorXd& v)>;

struct IntegrationResult {
  MotionArray q;    // n_records × dim, sampled every record_dt
  MotionArray v;
  MotionArray tau;  // torque_fn evaluated at the record instants
};

/// Semi-implicit (symplectic) Euler at step record_dt/substeps, sampled every
/// record_dt. Throws NumericalError on blow-up.
IntegrationResult integrate_symplectic(const KinematicTree& tree, const RigidBodySet& bodies,
                                       const VectorXd& q0, const VectorXd& v0, const TorqueFn& torque,
                                       const Vector3d& gravity_vec, std::size_t n_records,
                                       double record_dt, int substeps);

/// Frames whose finite-difference stencil involves frame t (the interior
/// neighbors plus the one-sided boundary stencils).
std::vector<int> fd_affected_frames(int t, int t_count);

/// Pseudoforce evaluated only at the given frame indices of an
/// already-unwrapped coordinate matrix; row i of the result corresponds to
/// rows[i]. Building block for finite-difference force Jacobians.
MotionArray pseudoforce_rows(const KinematicTree& tree, const RigidBodySet& bodies,
                             const MotionArray& unwrapped, double dt, const std::vector<int>& rows,
                             const Vector3d& gravity_vec = default_gravity());

/// Gradient of sum_t ||Z_t||^2 with respect to the trajectory values, by
/// local central differences over the affected stencils.
MotionArray el_squared_gradient(const KinematicTree& tree, const RigidBodySet& bodies,
                                const Trajectory& traj, const MotionArray& f_hat,
                                const Vector3d& gravity_vec = default_gravity());

}  // namespace physmo::dyn
