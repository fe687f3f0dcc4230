#pragma once

#include <Eigen/Core>

namespace physmo::so3 {

using Eigen::Matrix3d;
using Eigen::Vector3d;

Matrix3d skew(const Vector3d& v);

/// Rodrigues' formula: rotation matrix of the rotation vector r.
Matrix3d exp(const Vector3d& r);

/// Right Jacobian Jr(r): body-frame angular velocity of a rotation-vector
/// path is w = Jr(r) * rdot, i.e. Rdot = R * skew(Jr(r) * rdot).
Matrix3d right_jacobian(const Vector3d& r);

/// Time derivative d/dt Jr(r(t)) along (r, rdot).
Matrix3d right_jacobian_dot(const Vector3d& r, const Vector3d& rdot);

/// Equivalent rotation vector with magnitude in [0, pi].
Vector3d canonicalize(const Vector3d& r);

/// Equivalent rotation vector closest (Euclidean) to ref. Candidates are the
/// angle+2*pi*k representatives along the same axis line.
Vector3d unwrap(const Vector3d& r, const Vector3d& ref);

}  // namespace physmo::so3
