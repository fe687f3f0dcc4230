#pragma once

#include <Eigen/Core>
#include <vector>

#include "physmo/array.hpp"
#include "physmo/errors.hpp"

namespace physmo::kin {

using Eigen::Matrix3d;
using Eigen::Vector3d;
using Eigen::VectorXd;

struct Link {
  int parent = -1;              // -1 for the root
  Vector3d offset = Vector3d::Zero();  // joint position in the parent frame, meters
};

/// Articulated-body topology: one 6-DoF free root plus 3-DoF spherical joints,
/// links stored in topological order (parent index < own index).
class KinematicTree {
 public:
  explicit KinematicTree(std::vector<Link> links);

  std::size_t link_count() const { return links_.size(); }
  std::size_t dof() const { return 6 + 3 * (links_.size() - 1); }
  const Link& link(std::size_t i) const { return links_[i]; }
  const std::vector<Link>& links() const { return links_; }

  /// First coordinate index of link i's joint block (root block is 6 wide).
  std::size_t coord_index(std::size_t i) const { return i == 0 ? 0 : 6 + 3 * (i - 1); }

 private:
  std::vector<Link> links_;
};

/// Flat generalized-coordinate vector [root_rot(3), root_pos(3), joints...].
/// Construction canonicalizes every rotation-vector block to magnitude <= pi.
struct GeneralizedCoords {
  VectorXd q;

  static GeneralizedCoords canonical(const KinematicTree& tree, const VectorXd& raw);

  Vector3d root_rot() const { return q.segment<3>(0); }
  Vector3d root_pos() const { return q.segment<3>(3); }
  Vector3d joint_angle(std::size_t k) const { return q.segment<3>(6 + 3 * (k - 1)); }
};

struct Trajectory {
  MotionArray frames;  // T×dim
  double dt = 1.0 / 30.0;

  std::size_t length() const { return frames.rows(); }
  std::size_t dim() const { return frames.cols(); }
};

struct TrajectoryDerivatives {
  MotionArray qdot;   // units/s
  MotionArray qddot;  // units/s^2
};

struct LinkTransform {
  Matrix3d rot;
  Vector3d origin;
};

/// World transform per link, composed along the parent chain. The root
/// transform is (exp(root_rot), root_pos); a child's origin sits at
/// parent_origin + R_parent*offset and its joint rotates about that point.
std::vector<LinkTransform> forward_kinematics(const KinematicTree& tree, const VectorXd& q);

std::vector<Vector3d> joint_positions(const KinematicTree& tree, const VectorXd& q);

/// Rotation-vector components are unwrapped frame-to-frame (nearest
/// equivalent representation) before differencing. Central second-order
/// stencils inside, one-sided second-order stencils at the ends.
TrajectoryDerivatives finite_difference(const Trajectory& traj);

/// Stencil evaluation for one frame of an already-unwrapped coordinate
/// matrix. qdot/qddot must be sized to dim.
void finite_difference_row(const MotionArray& unwrapped, double dt, std::size_t t,
                           Eigen::VectorXd& qdot, Eigen::VectorXd& qddot);

/// The continuity-preserving copy of the trajectory used by
/// finite_difference: every rotation block unwrapped against the previous
/// frame. Dynamics evaluated together with the derivatives must use this
/// representation.
MotionArray unwrap_rotations(const MotionArray& frames);

/// Coordinate blocks that hold rotation vectors for a given dim: root_rot and
/// every joint block (everything except root_pos at indices 3..5).
bool is_rotation_coord(std::size_t j);

void check_dim(const KinematicTree& tree, Eigen::Index dim, const char* where);

}  // namespace physmo::kin
