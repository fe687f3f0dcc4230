#include "physmo/dynamics.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Geometry>
#include <algorithm>
#include <cmath>

#include "physmo/so3.hpp"

namespace physmo::dyn {

using so3::skew;
using Matrix6d = Eigen::Matrix<double, 6, 6>;

void RigidBodySet::validate(const KinematicTree& tree) const {
  if (bodies.size() != tree.link_count())
    throw ValidationError("RigidBodySet: one body per link required");
  for (const auto& b : bodies) {
    if (!(b.mass > 0.0)) throw ValidationError("RigidBodySet: mass must be positive");
    if (!b.com.allFinite() || !b.inertia.allFinite())
      throw ValidationError("RigidBodySet: non-finite body parameters");
  }
}

namespace {

struct SpatialVec {
  Vector3d ang = Vector3d::Zero();
  Vector3d lin = Vector3d::Zero();
};

// v x_m w (motion cross product)
SpatialVec crm(const SpatialVec& v, const SpatialVec& w) {
  return {v.ang.cross(w.ang), v.ang.cross(w.lin) + v.lin.cross(w.ang)};
}

// v x* f (force cross product)
SpatialVec crf(const SpatialVec& v, const SpatialVec& f) {
  return {v.ang.cross(f.ang) + v.lin.cross(f.lin), v.ang.cross(f.lin)};
}

// Frame of link k relative to its parent: E rotates parent coords into link
// coords, r is the link origin in parent coords.
struct XForm {
  Matrix3d E;
  Vector3d r;
};

SpatialVec xform_motion(const XForm& x, const SpatialVec& v) {
  return {x.E * v.ang, x.E * (v.lin + v.ang.cross(x.r))};
}

SpatialVec xform_force_to_parent(const XForm& x, const SpatialVec& f) {
  const Vector3d fl = x.E.transpose() * f.lin;
  return {x.E.transpose() * f.ang + x.r.cross(fl), fl};
}

Matrix6d dense_xform(const XForm& x) {
  Matrix6d m = Matrix6d::Zero();
  m.block<3, 3>(0, 0) = x.E;
  m.block<3, 3>(3, 0) = -x.E * skew(x.r);
  m.block<3, 3>(3, 3) = x.E;
  return m;
}

SpatialVec apply_inertia(const inertia::BodyParams& b, const SpatialVec& v) {
  const Vector3d cw = b.com.cross(v.ang);
  return {b.inertia * v.ang - b.mass * b.com.cross(cw) + b.mass * b.com.cross(v.lin),
          b.mass * (v.lin - cw)};
}

Matrix6d dense_inertia(const inertia::BodyParams& b) {
  const Matrix3d cx = skew(b.com);
  Matrix6d m;
  m.block<3, 3>(0, 0) = b.inertia - b.mass * cx * cx;
  m.block<3, 3>(0, 3) = b.mass * cx;
  m.block<3, 3>(3, 0) = -b.mass * cx;
  m.block<3, 3>(3, 3) = b.mass * Matrix3d::Identity();
  return m;
}

struct LinkFrames {
  std::vector<XForm> x;       // child-from-parent
  std::vector<Matrix3d> jr;   // right Jacobian per joint rotation block
};

LinkFrames link_frames(const KinematicTree& tree, const VectorXd& q) {
  kin::check_dim(tree, q.size(), "dynamics");
  LinkFrames f;
  const std::size_t n = tree.link_count();
  f.x.resize(n);
  f.jr.resize(n);
  const Vector3d r0 = q.segment<3>(0);
  f.x[0] = {so3::exp(r0).transpose(), q.segment<3>(3)};
  f.jr[0] = so3::right_jacobian(r0);
  for (std::size_t k = 1; k < n; ++k) {
    const Vector3d th = q.segment<3>(tree.coord_index(k));
    f.x[k] = {so3::exp(th).transpose(), tree.link(k).offset};
    f.jr[k] = so3::right_jacobian(th);
  }
  return f;
}

// Quasi-velocities u = G(q) qdot: per-joint angular velocity in link coords,
// root linear velocity in root coords.
std::vector<SpatialVec> quasi_velocity(const KinematicTree& tree, const LinkFrames& f,
                                       const VectorXd& qdot) {
  std::vector<SpatialVec> u(tree.link_count());
  u[0].ang = f.jr[0] * qdot.segment<3>(0);
  u[0].lin = f.x[0].E * qdot.segment<3>(3);
  for (std::size_t k = 1; k < tree.link_count(); ++k)
    u[k].ang = f.jr[k] * qdot.segment<3>(tree.coord_index(k));
  return u;
}

// udot = G qddot + Gdot qdot
std::vector<SpatialVec> quasi_acceleration(const KinematicTree& tree, const LinkFrames& f,
                                           const VectorXd& q, const VectorXd& qdot,
                                           const VectorXd& qddot,
                                           const std::vector<SpatialVec>& u) {
  std::vector<SpatialVec> ud(tree.link_count());
  const Vector3d r0 = q.segment<3>(0), r0dot = qdot.segment<3>(0);
  ud[0].ang = f.jr[0] * qddot.segment<3>(0) + so3::right_jacobian_dot(r0, r0dot) * r0dot;
  // d/dt (R^T tdot) = R^T tddot - [w_body]x R^T tdot
  ud[0].lin = f.x[0].E * qddot.segment<3>(3) - u[0].ang.cross(f.x[0].E * qdot.segment<3>(3));
  for (std::size_t k = 1; k < tree.link_count(); ++k) {
    const std::size_t at = tree.coord_index(k);
    const Vector3d th = q.segment<3>(at), thdot = qdot.segment<3>(at);
    ud[k].ang = f.jr[k] * qddot.segment<3>(at) + so3::right_jacobian_dot(th, thdot) * thdot;
  }
  return ud;
}

// tau_q = G^T tau_u
VectorXd project_torque(const KinematicTree& tree, const LinkFrames& f,
                        const std::vector<SpatialVec>& tau_u) {
  VectorXd tau(tree.dof());
  tau.segment<3>(0) = f.jr[0].transpose() * tau_u[0].ang;
  tau.segment<3>(3) = f.x[0].E.transpose() * tau_u[0].lin;
  for (std::size_t k = 1; k < tree.link_count(); ++k)
    tau.segment<3>(tree.coord_index(k)) = f.jr[k].transpose() * tau_u[k].ang;
  return tau;
}

VectorXd rnea(const KinematicTree& tree, const RigidBodySet& bodies, const LinkFrames& f,
              const VectorXd& q, const VectorXd& qdot, const VectorXd& qddot,
              const Vector3d& gravity_vec) {
  const std::size_t n = tree.link_count();
  const auto u = quasi_velocity(tree, f, qdot);
  const auto ud = quasi_acceleration(tree, f, q, qdot, qddot, u);

  std::vector<SpatialVec> v(n), a(n), fo(n);
  v[0] = u[0];
  // gravity enters as a base acceleration of -g
  a[0] = {ud[0].ang, ud[0].lin - f.x[0].E * gravity_vec};
  for (std::size_t k = 1; k < n; ++k) {
    const int p = tree.link(k).parent;
    const SpatialVec vj{u[k].ang, Vector3d::Zero()};
    v[k] = xform_motion(f.x[k], v[p]);
    v[k].ang += vj.ang;
    a[k] = xform_motion(f.x[k], a[p]);
    a[k].ang += ud[k].ang;
    const SpatialVec cor = crm(v[k], vj);
    a[k].ang += cor.ang;
    a[k].lin += cor.lin;
  }
  for (std::size_t k = 0; k < n; ++k) {
    const auto& b = bodies.bodies[k];
    const SpatialVec iv = apply_inertia(b, v[k]);
    const SpatialVec ia = apply_inertia(b, a[k]);
    const SpatialVec bias = crf(v[k], iv);
    fo[k] = {ia.ang + bias.ang, ia.lin + bias.lin};
  }
  std::vector<SpatialVec> tau_u(n);
  for (std::size_t k = n; k-- > 1;) {
    tau_u[k].ang = fo[k].ang;
    const int p = tree.link(k).parent;
    const SpatialVec fp = xform_force_to_parent(f.x[k], fo[k]);
    fo[p].ang += fp.ang;
    fo[p].lin += fp.lin;
  }
  tau_u[0] = fo[0];
  return project_torque(tree, f, tau_u);
}

}  // namespace

VectorXd inverse_dynamics(const KinematicTree& tree, const RigidBodySet& bodies, const VectorXd& q,
                          const VectorXd& qdot, const VectorXd& qddot,
                          const Vector3d& gravity_vec) {
  bodies.validate(tree);
  kin::check_dim(tree, qdot.size(), "inverse_dynamics qdot");
  kin::check_dim(tree, qddot.size(), "inverse_dynamics qddot");
  const LinkFrames f = link_frames(tree, q);
  return rnea(tree, bodies, f, q, qdot, qddot, gravity_vec);
}

std::pair<VectorXd, VectorXd> bias_terms(const KinematicTree& tree, const RigidBodySet& bodies,
                                         const VectorXd& q, const VectorXd& qdot,
                                         const Vector3d& gravity_vec) {
  const VectorXd zero = VectorXd::Zero(tree.dof());
  const VectorXd grav = inverse_dynamics(tree, bodies, q, zero, zero, gravity_vec);
  const VectorXd with_vel = inverse_dynamics(tree, bodies, q, qdot, zero, gravity_vec);
  return {with_vel - grav, grav};
}

MatrixXd mass_matrix(const KinematicTree& tree, const RigidBodySet& bodies, const VectorXd& q) {
  bodies.validate(tree);
  const LinkFrames f = link_frames(tree, q);
  const std::size_t n = tree.link_count();
  const std::size_t dof = tree.dof();

  // composite rigid-body inertias in link coords
  std::vector<Matrix6d> ic(n);
  for (std::size_t k = 0; k < n; ++k) ic[k] = dense_inertia(bodies.bodies[k]);
  std::vector<Matrix6d> xf(n);
  for (std::size_t k = 1; k < n; ++k) xf[k] = dense_xform(f.x[k]);
  for (std::size_t k = n; k-- > 1;) {
    const int p = tree.link(k).parent;
    ic[p] += xf[k].transpose() * ic[k] * xf[k];
  }

  MatrixXd mu = MatrixXd::Zero(dof, dof);
  mu.block<6, 6>(0, 0) = ic[0];
  for (std::size_t k = 1; k < n; ++k) {
    const std::size_t ck = tree.coord_index(k);
    Eigen::Matrix<double, 6, 3> fc = ic[k].leftCols<3>();
    mu.block<3, 3>(ck, ck) = fc.topRows<3>();
    int j = static_cast<int>(k);
    while (j != 0) {
      fc = xf[j].transpose() * fc;
      j = tree.link(j).parent;
      if (j == 0) {
        mu.block<6, 3>(0, ck) = fc;
        mu.block<3, 6>(ck, 0) = fc.transpose();
      } else {
        const std::size_t cj = tree.coord_index(j);
        mu.block<3, 3>(cj, ck) = fc.topRows<3>();
        mu.block<3, 3>(ck, cj) = fc.topRows<3>().transpose();
      }
    }
  }

  // pull back to stored coordinates: M_q = G^T M_u G
  MatrixXd g = MatrixXd::Zero(dof, dof);
  g.block<3, 3>(0, 0) = f.jr[0];
  g.block<3, 3>(3, 3) = f.x[0].E;
  for (std::size_t k = 1; k < n; ++k) {
    const std::size_t ck = tree.coord_index(k);
    g.block<3, 3>(ck, ck) = f.jr[k];
  }
  return g.transpose() * mu * g;
}

VectorXd forward_dynamics(const KinematicTree& tree, const RigidBodySet& bodies, const VectorXd& q,
                          const VectorXd& qdot, const VectorXd& torque,
                          const Vector3d& gravity_vec) {
  kin::check_dim(tree, torque.size(), "forward_dynamics torque");
  const MatrixXd m = mass_matrix(tree, bodies, q);
  const VectorXd zero = VectorXd::Zero(tree.dof());
  const VectorXd bias = inverse_dynamics(tree, bodies, q, qdot, zero, gravity_vec);
  Eigen::LLT<MatrixXd> llt(m);
  if (llt.info() != Eigen::Success)
    throw NumericalError("forward_dynamics: mass matrix factorization failed");
  return llt.solve(torque - bias);
}

namespace {

MotionArray residual_rows(const KinematicTree& tree, const RigidBodySet& bodies,
                          const MotionArray& unwrapped, double dt, const std::vector<int>& rows,
                          const MotionArray* f_hat, const Vector3d& gravity_vec) {
  const std::size_t dim = unwrapped.cols();
  MotionArray out(rows.size(), dim);
  VectorXd q(dim), qd(dim), qdd(dim);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const std::size_t t = static_cast<std::size_t>(rows[i]);
    kin::finite_difference_row(unwrapped, dt, t, qd, qdd);
    for (std::size_t j = 0; j < dim; ++j) q[j] = unwrapped(t, j);
    VectorXd f = rnea(tree, bodies, link_frames(tree, q), q, qd, qdd, gravity_vec);
    if (f_hat)
      for (std::size_t j = 0; j < dim; ++j) f[j] -= (*f_hat)(t, j);
    for (std::size_t j = 0; j < dim; ++j) out(i, j) = f[j];
  }
  return out;
}

std::vector<int> all_rows(std::size_t t_count) {
  std::vector<int> r(t_count);
  for (std::size_t i = 0; i < t_count; ++i) r[i] = static_cast<int>(i);
  return r;
}

}  // namespace

MotionArray pseudoforce_rows(const KinematicTree& tree, const RigidBodySet& bodies,
                             const MotionArray& unwrapped, double dt, const std::vector<int>& rows,
                             const Vector3d& gravity_vec) {
  return residual_rows(tree, bodies, unwrapped, dt, rows, nullptr, gravity_vec);
}

MotionArray pseudoforce(const KinematicTree& tree, const RigidBodySet& bodies,
                        const Trajectory& traj, const Vector3d& gravity_vec) {
  bodies.validate(tree);
  kin::check_dim(tree, traj.dim(), "pseudoforce");
  if (traj.length() < 3) throw ValidationError("pseudoforce: need at least 3 frames");
  const MotionArray u = kin::unwrap_rotations(traj.frames);
  return residual_rows(tree, bodies, u, traj.dt, all_rows(traj.length()), nullptr, gravity_vec);
}

MotionArray el_residual(const KinematicTree& tree, const RigidBodySet& bodies,
                        const Trajectory& traj, const MotionArray& f_hat,
                        const Vector3d& gravity_vec) {
  bodies.validate(tree);
  kin::check_dim(tree, traj.dim(), "el_residual");
  require_same_shape(traj.frames, f_hat, "el_residual");
  const MotionArray u = kin::unwrap_rotations(traj.frames);
  return residual_rows(tree, bodies, u, traj.dt, all_rows(traj.length()), &f_hat, gravity_vec);
}

double residual_metric(const KinematicTree& tree, const RigidBodySet& bodies,
                       const Trajectory& traj, const MotionArray& f_bar,
                       const Vector3d& gravity_vec) {
  const MotionArray z = el_residual(tree, bodies, traj, f_bar, gravity_vec);
  return deterministic_el_penalty(z) / static_cast<double>(z.rows());
}

double deterministic_el_penalty(const MotionArray& residuals) {
  double s = 0.0;
  for (std::size_t i = 0; i < residuals.size(); ++i) s += std::fabs(residuals.data()[i]);
  return s;
}

double kinetic_energy(const KinematicTree& tree, const RigidBodySet& bodies, const VectorXd& q,
                      const VectorXd& qdot) {
  return 0.5 * qdot.dot(mass_matrix(tree, bodies, q) * qdot);
}

IntegrationResult integrate_symplectic(const KinematicTree& tree, const RigidBodySet& bodies,
                                       const VectorXd& q0, const VectorXd& v0,
                                       const TorqueFn& torque, const Vector3d& gravity_vec,
                                       std::size_t n_records, double record_dt, int substeps) {
  if (substeps < 1) throw ValidationError("integrate_symplectic: substeps must be >= 1");
  const std::size_t dim = tree.dof();
  IntegrationResult out{MotionArray(n_records, dim), MotionArray(n_records, dim),
                        MotionArray(n_records, dim)};
  const double h = record_dt / substeps;
  VectorXd q = q0, v = v0;
  double t = 0.0;
  for (std::size_t rec = 0; rec < n_records; ++rec) {
    const VectorXd tau_rec = torque(t, q, v);
    for (std::size_t j = 0; j < dim; ++j) {
      out.q(rec, j) = q[j];
      out.v(rec, j) = v[j];
      out.tau(rec, j) = tau_rec[j];
    }
    if (rec + 1 == n_records) break;
    for (int s = 0; s < substeps; ++s) {
      const VectorXd qdd = forward_dynamics(tree, bodies, q, v, torque(t, q, v), gravity_vec);
      v += h * qdd;
      q += h * v;
      t += h;
      if (!q.allFinite() || v.lpNorm<Eigen::Infinity>() > 1e3)
        throw NumericalError("integrate_symplectic: blow-up");
    }
  }
  return out;
}

std::vector<int> fd_affected_frames(int t, int t_count) {
  std::vector<int> rows;
  if (t_count == 3) {
    rows = {0, 1, 2};
  } else {
    for (int s = t - 1; s <= t + 1; ++s)
      if (s >= 0 && s < t_count) rows.push_back(s);
    if (t <= 3) {
      rows.push_back(0);
      rows.push_back(1);
    }
    if (t >= t_count - 4) {
      rows.push_back(t_count - 2);
      rows.push_back(t_count - 1);
    }
  }
  std::sort(rows.begin(), rows.end());
  rows.erase(std::unique(rows.begin(), rows.end()), rows.end());
  return rows;
}

MotionArray el_squared_gradient(const KinematicTree& tree, const RigidBodySet& bodies,
                                const Trajectory& traj, const MotionArray& f_hat,
                                const Vector3d& gravity_vec) {
  const std::size_t t_count = traj.length();
  const std::size_t dim = traj.dim();
  MotionArray u = kin::unwrap_rotations(traj.frames);
  MotionArray grad(t_count, dim);
  for (std::size_t t = 0; t < t_count; ++t) {
    const auto rows = fd_affected_frames(static_cast<int>(t), static_cast<int>(t_count));
    for (std::size_t j = 0; j < dim; ++j) {
      const double x = u(t, j);
      const double h = 1e-6 * (1.0 + std::fabs(x));
      u(t, j) = x + h;
      const MotionArray zp = residual_rows(tree, bodies, u, traj.dt, rows, &f_hat, gravity_vec);
      u(t, j) = x - h;
      const MotionArray zm = residual_rows(tree, bodies, u, traj.dt, rows, &f_hat, gravity_vec);
      u(t, j) = x;
      double lp = 0.0, lm = 0.0;
      for (std::size_t i = 0; i < zp.size(); ++i) {
        lp += zp.data()[i] * zp.data()[i];
        lm += zm.data()[i] * zm.data()[i];
      }
      grad(t, j) = (lp - lm) / (2.0 * h);
    }
  }
  return grad;
}

}  // namespace physmo::dyn
