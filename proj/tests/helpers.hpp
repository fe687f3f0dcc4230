#pragma once

#include <Eigen/Dense>
#include <utility>
#include <vector>

#include "physmo/dynamics.hpp"
#include "physmo/inertia.hpp"
#include "physmo/kinematics.hpp"
#include "physmo/rng.hpp"

namespace testutil {

using Eigen::Matrix4d;
using Eigen::Vector3d;
using Eigen::VectorXd;
using physmo::MotionArray;
using physmo::Rng;

/// Serial chain with random offsets and box bodies; links >= 1.
inline std::pair<physmo::kin::KinematicTree, physmo::dyn::RigidBodySet> random_chain(int n_links,
                                                                                     Rng& rng) {
  std::vector<physmo::kin::Link> links(n_links);
  links[0] = {-1, Vector3d::Zero()};
  for (int k = 1; k < n_links; ++k) {
    Vector3d off;
    for (int i = 0; i < 3; ++i) off[i] = 0.02 + 0.08 * rng.uniform();
    if (rng.uniform() < 0.5) off.y() = -off.y();
    links[k] = {k - 1, off};
  }
  physmo::kin::KinematicTree tree(std::move(links));
  physmo::dyn::RigidBodySet bodies;
  for (int k = 0; k < n_links; ++k) {
    Vector3d ext, ctr;
    for (int i = 0; i < 3; ++i) {
      ext[i] = 0.02 + 0.06 * rng.uniform();
      ctr[i] = 0.02 * (2.0 * rng.uniform() - 1.0);
    }
    bodies.bodies.push_back(
        physmo::inertia::mesh_mass_properties(physmo::inertia::make_box(ext, ctr), 1000.0));
  }
  return {std::move(tree), std::move(bodies)};
}

inline VectorXd random_coords(const physmo::kin::KinematicTree& tree, Rng& rng,
                              double rot_scale = 1.2, double pos_scale = 0.4) {
  VectorXd q(tree.dof());
  for (Eigen::Index j = 0; j < q.size(); ++j) {
    const bool rot = physmo::kin::is_rotation_coord(static_cast<std::size_t>(j));
    q[j] = (rot ? rot_scale : pos_scale) * (2.0 * rng.uniform() - 1.0);
  }
  return q;
}

/// Independent forward-kinematics oracle composing homogeneous 4x4 matrices
/// per link.
inline std::vector<Matrix4d> fk_oracle(const physmo::kin::KinematicTree& tree, const VectorXd& q) {
  auto rot4 = [](const Eigen::Matrix3d& r) {
    Matrix4d m = Matrix4d::Identity();
    m.topLeftCorner<3, 3>() = r;
    return m;
  };
  auto trans4 = [](const Vector3d& t) {
    Matrix4d m = Matrix4d::Identity();
    m.topRightCorner<3, 1>() = t;
    return m;
  };
  auto rotvec = [](const Vector3d& r) {
    const double a = r.norm();
    if (a < 1e-14) return Eigen::Matrix3d::Identity().eval();
    return Eigen::AngleAxisd(a, r / a).toRotationMatrix();
  };
  std::vector<Matrix4d> out(tree.link_count());
  out[0] = trans4(q.segment<3>(3)) * rot4(rotvec(q.segment<3>(0)));
  for (std::size_t k = 1; k < tree.link_count(); ++k) {
    const auto& l = tree.link(k);
    out[k] = out[l.parent] * trans4(l.offset) *
             rot4(rotvec(q.segment<3>(tree.coord_index(k))));
  }
  return out;
}

/// Classical RK4 on the full forward dynamics; the high-accuracy reference
/// integrator for convergence checks.
struct Rk4Result {
  MotionArray q, v, tau;
};

inline Rk4Result integrate_rk4(const physmo::kin::KinematicTree& tree,
                               const physmo::dyn::RigidBodySet& bodies, VectorXd q, VectorXd v,
                               const physmo::dyn::TorqueFn& torque, const Vector3d& gravity,
                               std::size_t n_records, double record_dt, int substeps) {
  const std::size_t dim = tree.dof();
  Rk4Result out{MotionArray(n_records, dim), MotionArray(n_records, dim),
                MotionArray(n_records, dim)};
  const double h = record_dt / substeps;
  double t = 0.0;
  auto accel = [&](double tt, const VectorXd& qq, const VectorXd& vv) {
    return physmo::dyn::forward_dynamics(tree, bodies, qq, vv, torque(tt, qq, vv), gravity);
  };
  for (std::size_t rec = 0; rec < n_records; ++rec) {
    const VectorXd tau_rec = torque(t, q, v);
    for (std::size_t j = 0; j < dim; ++j) {
      out.q(rec, j) = q[j];
      out.v(rec, j) = v[j];
      out.tau(rec, j) = tau_rec[j];
    }
    if (rec + 1 == n_records) break;
    for (int s = 0; s < substeps; ++s) {
      const VectorXd k1q = v, k1v = accel(t, q, v);
      const VectorXd k2q = v + 0.5 * h * k1v, k2v = accel(t + 0.5 * h, q + 0.5 * h * k1q, k2q);
      const VectorXd k3q = v + 0.5 * h * k2v, k3v = accel(t + 0.5 * h, q + 0.5 * h * k2q, k3q);
      const VectorXd k4q = v + h * k3v, k4v = accel(t + h, q + h * k3q, k4q);
      q += (h / 6.0) * (k1q + 2.0 * k2q + 2.0 * k3q + k4q);
      v += (h / 6.0) * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
      t += h;
    }
  }
  return out;
}

inline double max_abs(const MotionArray& a) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::fabs(a.data()[i]));
  return m;
}

}  // namespace testutil
