#pragma once

#include <Eigen/Core>
#include <vector>

#include "physmo/errors.hpp"

namespace physmo::metrics {

/// T frames × J joints of 3D positions, millimeters.
using JointSequence = std::vector<std::vector<Eigen::Vector3d>>;

/// Mean per-joint Euclidean error after per-frame root-joint alignment.
double mpjpe(const JointSequence& pred, const JointSequence& gt);

/// Mean per-joint error after per-frame similarity Procrustes alignment
/// (rotation + translation + scale, least squares). Throws on degenerate
/// (collinear) configurations.
double pa_mpjpe(const JointSequence& pred, const JointSequence& gt);

/// Mean norm of the difference of second finite differences over interior
/// frames, mm/frame^2.
double accel_error(const JointSequence& pred, const JointSequence& gt);

}  // namespace physmo::metrics
