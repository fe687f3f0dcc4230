#include "physmo/metrics.hpp"

#include <Eigen/Dense>
#include <cmath>

namespace physmo::metrics {

using Eigen::Matrix3d;
using Eigen::Vector3d;

namespace {

void check_shapes(const JointSequence& pred, const JointSequence& gt, const char* where) {
  if (pred.size() != gt.size() || pred.empty())
    throw ValidationError(std::string(where) + ": frame count mismatch or empty");
  for (std::size_t t = 0; t < pred.size(); ++t)
    if (pred[t].size() != gt[t].size() || pred[t].empty())
      throw ValidationError(std::string(where) + ": joint count mismatch");
}

}  // namespace

double mpjpe(const JointSequence& pred, const JointSequence& gt) {
  check_shapes(pred, gt, "mpjpe");
  double acc = 0.0;
  std::size_t count = 0;
  for (std::size_t t = 0; t < pred.size(); ++t) {
    const Vector3d shift = gt[t][0] - pred[t][0];
    for (std::size_t j = 0; j < pred[t].size(); ++j) {
      acc += (pred[t][j] + shift - gt[t][j]).norm();
      ++count;
    }
  }
  return acc / static_cast<double>(count);
}

double pa_mpjpe(const JointSequence& pred, const JointSequence& gt) {
  check_shapes(pred, gt, "pa_mpjpe");
  double acc = 0.0;
  std::size_t count = 0;
  for (std::size_t t = 0; t < pred.size(); ++t) {
    const std::size_t n = pred[t].size();
    if (n < 3) throw ValidationError("pa_mpjpe: need at least 3 joints");
    Vector3d cp = Vector3d::Zero(), cg = Vector3d::Zero();
    for (std::size_t j = 0; j < n; ++j) {
      cp += pred[t][j];
      cg += gt[t][j];
    }
    cp /= n;
    cg /= n;
    Matrix3d h = Matrix3d::Zero();
    double var_p = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const Vector3d dp = pred[t][j] - cp, dg = gt[t][j] - cg;
      h += dg * dp.transpose();
      var_p += dp.squaredNorm();
    }
    Eigen::JacobiSVD<Matrix3d> svd(h, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const auto& sv = svd.singularValues();
    // collinear point sets leave the in-plane rotation unconstrained
    if (sv(1) < 1e-12 * std::max(sv(0), 1e-300) || var_p < 1e-24)
      throw ValidationError("pa_mpjpe: degenerate (collinear) configuration");
    Matrix3d d = Matrix3d::Identity();
    if ((svd.matrixU() * svd.matrixV().transpose()).determinant() < 0.0) d(2, 2) = -1.0;
    const Matrix3d rot = svd.matrixU() * d * svd.matrixV().transpose();
    const double scale = (sv(0) + sv(1) + d(2, 2) * sv(2)) / var_p;
    const Vector3d trans = cg - scale * (rot * cp);
    for (std::size_t j = 0; j < n; ++j) {
      acc += (scale * (rot * pred[t][j]) + trans - gt[t][j]).norm();
      ++count;
    }
  }
  return acc / static_cast<double>(count);
}

double accel_error(const JointSequence& pred, const JointSequence& gt) {
  check_shapes(pred, gt, "accel_error");
  if (pred.size() < 3) throw ValidationError("accel_error: need at least 3 frames");
  double acc = 0.0;
  std::size_t count = 0;
  for (std::size_t t = 1; t + 1 < pred.size(); ++t) {
    for (std::size_t j = 0; j < pred[t].size(); ++j) {
      const Vector3d ap = pred[t + 1][j] - 2.0 * pred[t][j] + pred[t - 1][j];
      const Vector3d ag = gt[t + 1][j] - 2.0 * gt[t][j] + gt[t - 1][j];
      acc += (ap - ag).norm();
      ++count;
    }
  }
  return acc / static_cast<double>(count);
}

}  // namespace physmo::metrics
