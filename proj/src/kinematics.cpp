#include "physmo/kinematics.hpp"

#include <cmath>

#include "physmo/so3.hpp"

namespace physmo::kin {

KinematicTree::KinematicTree(std::vector<Link> links) : links_(std::move(links)) {
  if (links_.empty()) throw ValidationError("tree: no links");
  if (links_[0].parent != -1) throw ValidationError("tree: link 0 must be the root");
  for (std::size_t i = 1; i < links_.size(); ++i) {
    const int p = links_[i].parent;
    if (p < 0 || static_cast<std::size_t>(p) >= i)
      throw ValidationError("tree: links must be in topological order with one root");
  }
  for (const Link& l : links_)
    if (!l.offset.allFinite()) throw ValidationError("tree: non-finite offset");
}

void check_dim(const KinematicTree& tree, Eigen::Index dim, const char* where) {
  if (dim != static_cast<Eigen::Index>(tree.dof()))
    throw ValidationError(std::string(where) + ": coordinate dimension " + std::to_string(dim) +
                          " does not match tree dof " + std::to_string(tree.dof()));
}

GeneralizedCoords GeneralizedCoords::canonical(const KinematicTree& tree, const VectorXd& raw) {
  check_dim(tree, raw.size(), "GeneralizedCoords");
  if (!raw.allFinite()) throw ValidationError("GeneralizedCoords: non-finite entry");
  GeneralizedCoords g{raw};
  g.q.segment<3>(0) = so3::canonicalize(raw.segment<3>(0));
  for (std::size_t k = 1; k < tree.link_count(); ++k) {
    const std::size_t at = tree.coord_index(k);
    g.q.segment<3>(at) = so3::canonicalize(raw.segment<3>(at));
  }
  return g;
}

std::vector<LinkTransform> forward_kinematics(const KinematicTree& tree, const VectorXd& q) {
  check_dim(tree, q.size(), "forward_kinematics");
  std::vector<LinkTransform> out(tree.link_count());
  out[0].rot = so3::exp(q.segment<3>(0));
  out[0].origin = q.segment<3>(3);
  for (std::size_t k = 1; k < tree.link_count(); ++k) {
    const Link& l = tree.link(k);
    const LinkTransform& par = out[l.parent];
    out[k].origin = par.origin + par.rot * l.offset;
    out[k].rot = par.rot * so3::exp(q.segment<3>(tree.coord_index(k)));
  }
  return out;
}

std::vector<Vector3d> joint_positions(const KinematicTree& tree, const VectorXd& q) {
  const auto tf = forward_kinematics(tree, q);
  std::vector<Vector3d> pts(tf.size());
  for (std::size_t i = 0; i < tf.size(); ++i) pts[i] = tf[i].origin;
  return pts;
}

bool is_rotation_coord(std::size_t j) { return j < 3 || j >= 6; }

MotionArray unwrap_rotations(const MotionArray& frames) {
  const std::size_t t_count = frames.rows();
  const std::size_t dim = frames.cols();
  if (dim < 6 || (dim - 6) % 3 != 0) throw ValidationError("unwrap_rotations: bad dim");
  MotionArray out = frames;
  for (std::size_t t = 1; t < t_count; ++t) {
    for (std::size_t j = 0; j < dim; j += 3) {
      if (!is_rotation_coord(j)) continue;
      const Vector3d cur(frames(t, j), frames(t, j + 1), frames(t, j + 2));
      const Vector3d prev(out(t - 1, j), out(t - 1, j + 1), out(t - 1, j + 2));
      const Vector3d u = so3::unwrap(cur, prev);
      out(t, j) = u.x();
      out(t, j + 1) = u.y();
      out(t, j + 2) = u.z();
    }
  }
  return out;
}

void finite_difference_row(const MotionArray& q, double dt, std::size_t t,
                           Eigen::VectorXd& qdot, Eigen::VectorXd& qddot) {
  const std::size_t t_count = q.rows();
  const std::size_t dim = q.cols();
  const double inv2dt = 1.0 / (2.0 * dt);
  const double invdt2 = 1.0 / (dt * dt);
  const std::size_t e = t_count - 1;
  for (std::size_t j = 0; j < dim; ++j) {
    if (t > 0 && t < e) {
      qdot[j] = (q(t + 1, j) - q(t - 1, j)) * inv2dt;
      qddot[j] = (q(t + 1, j) - 2.0 * q(t, j) + q(t - 1, j)) * invdt2;
    } else if (t == 0) {
      qdot[j] = (-3.0 * q(0, j) + 4.0 * q(1, j) - q(2, j)) * inv2dt;
      qddot[j] = t_count >= 4 ? (2.0 * q(0, j) - 5.0 * q(1, j) + 4.0 * q(2, j) - q(3, j)) * invdt2
                              : (q(2, j) - 2.0 * q(1, j) + q(0, j)) * invdt2;
    } else {
      qdot[j] = (3.0 * q(e, j) - 4.0 * q(e - 1, j) + q(e - 2, j)) * inv2dt;
      qddot[j] = t_count >= 4
                     ? (2.0 * q(e, j) - 5.0 * q(e - 1, j) + 4.0 * q(e - 2, j) - q(e - 3, j)) * invdt2
                     : (q(2, j) - 2.0 * q(1, j) + q(0, j)) * invdt2;
    }
  }
}

TrajectoryDerivatives finite_difference(const Trajectory& traj) {
  const std::size_t t_count = traj.length();
  const std::size_t dim = traj.dim();
  if (t_count < 3) throw ValidationError("finite_difference: need at least 3 frames");
  if (!(traj.dt > 0.0)) throw ValidationError("finite_difference: dt must be positive");

  const MotionArray q = unwrap_rotations(traj.frames);
  TrajectoryDerivatives d{MotionArray(t_count, dim), MotionArray(t_count, dim)};
  Eigen::VectorXd qd(dim), qdd(dim);
  for (std::size_t t = 0; t < t_count; ++t) {
    finite_difference_row(q, traj.dt, t, qd, qdd);
    for (std::size_t j = 0; j < dim; ++j) {
      d.qdot(t, j) = qd[j];
      d.qddot(t, j) = qdd[j];
    }
  }
  return d;
}

}  // namespace physmo::kin
