#include "physmo/so3.hpp"

#include <cmath>

namespace physmo::so3 {

namespace {
constexpr double kPi = 3.141592653589793238462643383279502884;
constexpr double kTwoPi = 2.0 * kPi;
}  // namespace

Matrix3d skew(const Vector3d& v) {
  Matrix3d m;
  m << 0.0, -v.z(), v.y(), v.z(), 0.0, -v.x(), -v.y(), v.x(), 0.0;
  return m;
}

Matrix3d exp(const Vector3d& r) {
  const double phi2 = r.squaredNorm();
  const double phi = std::sqrt(phi2);
  double s, c;  // sin(phi)/phi, (1-cos(phi))/phi^2
  if (phi < 1e-8) {
    s = 1.0 - phi2 / 6.0;
    c = 0.5 - phi2 / 24.0;
  } else {
    s = std::sin(phi) / phi;
    c = (1.0 - std::cos(phi)) / phi2;
  }
  const Matrix3d k = skew(r);
  return Matrix3d::Identity() + s * k + c * (k * k);
}

Matrix3d right_jacobian(const Vector3d& r) {
  const double phi2 = r.squaredNorm();
  const double phi = std::sqrt(phi2);
  double c1, c2;  // (1-cos)/phi^2, (phi-sin)/phi^3
  if (phi < 1e-4) {
    c1 = 0.5 - phi2 / 24.0 + phi2 * phi2 / 720.0;
    c2 = 1.0 / 6.0 - phi2 / 120.0 + phi2 * phi2 / 5040.0;
  } else {
    c1 = (1.0 - std::cos(phi)) / phi2;
    c2 = (phi - std::sin(phi)) / (phi2 * phi);
  }
  const Matrix3d k = skew(r);
  return Matrix3d::Identity() - c1 * k + c2 * (k * k);
}

Matrix3d right_jacobian_dot(const Vector3d& r, const Vector3d& rdot) {
  const double phi2 = r.squaredNorm();
  const double phi = std::sqrt(phi2);
  double c1, c2;  // as in right_jacobian
  double d1, d2;  // c1'(phi)/phi, c2'(phi)/phi
  if (phi < 1e-3) {
    c1 = 0.5 - phi2 / 24.0 + phi2 * phi2 / 720.0;
    c2 = 1.0 / 6.0 - phi2 / 120.0 + phi2 * phi2 / 5040.0;
    d1 = -1.0 / 12.0 + phi2 / 180.0 - phi2 * phi2 / 6720.0;
    d2 = -1.0 / 60.0 + phi2 / 1260.0 - phi2 * phi2 / 60480.0;
  } else {
    const double sp = std::sin(phi), cp = std::cos(phi);
    c1 = (1.0 - cp) / phi2;
    c2 = (phi - sp) / (phi2 * phi);
    d1 = (phi * sp - 2.0 * (1.0 - cp)) / (phi2 * phi2);
    d2 = (phi * (1.0 - cp) - 3.0 * (phi - sp)) / (phi2 * phi2 * phi);
  }
  const double rr = r.dot(rdot);
  const Matrix3d k = skew(r);
  const Matrix3d kd = skew(rdot);
  return -d1 * rr * k - c1 * kd + d2 * rr * (k * k) + c2 * (kd * k + k * kd);
}

Vector3d canonicalize(const Vector3d& r) {
  const double phi = r.norm();
  if (phi <= kPi) return r;
  // wrap the angle into (-pi, pi]; a negative representative flips the axis
  double a = std::fmod(phi, kTwoPi);
  if (a > kPi) a -= kTwoPi;
  return r * (a / phi);
}

Vector3d unwrap(const Vector3d& r, const Vector3d& ref) {
  const double phi = r.norm();
  Vector3d axis;
  if (phi > 1e-12) {
    axis = r / phi;
  } else if (ref.norm() > 1e-12) {
    axis = ref.normalized();
  } else {
    return r;
  }
  Vector3d best = r;
  double best_d = (r - ref).squaredNorm();
  for (int k = -2; k <= 2; ++k) {
    if (k == 0) continue;
    const Vector3d cand = axis * (phi + kTwoPi * k);
    const double d = (cand - ref).squaredNorm();
    if (d < best_d) {
      best_d = d;
      best = cand;
    }
  }
  return best;
}

}  // namespace physmo::so3
