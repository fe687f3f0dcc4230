#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Geometry>
#include <cmath>

#include "helpers.hpp"
#include "physmo/kinematics.hpp"
#include "physmo/so3.hpp"

using namespace physmo;
using Eigen::Matrix3d;
using Eigen::Vector3d;
using Eigen::VectorXd;
using kin::KinematicTree;
using kin::Link;

namespace {
constexpr double kPi = 3.14159265358979323846;

KinematicTree two_link_chain(const Vector3d& offset) {
  return KinematicTree({{-1, Vector3d::Zero()}, {0, offset}});
}
}  // namespace

TEST_CASE("so3 exp matches AngleAxis") {
  Rng rng(7);
  for (int i = 0; i < 50; ++i) {
    Vector3d r;
    for (int k = 0; k < 3; ++k) r[k] = 3.0 * (2.0 * rng.uniform() - 1.0);
    const Matrix3d ref = Eigen::AngleAxisd(r.norm(), r.normalized()).toRotationMatrix();
    CHECK((so3::exp(r) - ref).norm() < 1e-12);
  }
  CHECK((so3::exp(Vector3d::Zero()) - Matrix3d::Identity()).norm() == 0.0);
  const Vector3d tiny(1e-10, -2e-10, 5e-11);
  CHECK((so3::exp(tiny) - (Matrix3d::Identity() + so3::skew(tiny))).norm() < 1e-18);
}

TEST_CASE("right Jacobian: R(r + e d) ~ R(r) exp([Jr d] e)") {
  Rng rng(11);
  for (int i = 0; i < 30; ++i) {
    Vector3d r, d;
    for (int k = 0; k < 3; ++k) {
      r[k] = 2.5 * (2.0 * rng.uniform() - 1.0);
      d[k] = 2.0 * rng.uniform() - 1.0;
    }
    if (i == 0) r = Vector3d::Zero();
    if (i == 1) r = Vector3d(1e-6, 0, 0);
    const double eps = 1e-7;
    const Matrix3d lhs = so3::exp(r + eps * d);
    const Matrix3d rhs = so3::exp(r) * so3::exp(eps * (so3::right_jacobian(r) * d));
    CHECK((lhs - rhs).norm() < 1e-9);
  }
}

TEST_CASE("right Jacobian time derivative matches finite differences") {
  Rng rng(13);
  for (int i = 0; i < 30; ++i) {
    Vector3d r, rd;
    for (int k = 0; k < 3; ++k) {
      r[k] = 2.5 * (2.0 * rng.uniform() - 1.0);
      rd[k] = 2.0 * rng.uniform() - 1.0;
    }
    if (i == 0) r = Vector3d(1e-5, -2e-5, 3e-5);  // series branch
    const double eps = 1e-6;
    const Matrix3d fd =
        (so3::right_jacobian(r + eps * rd) - so3::right_jacobian(r - eps * rd)) / (2.0 * eps);
    CHECK((so3::right_jacobian_dot(r, rd) - fd).norm() < 1e-7);
  }
}

TEST_CASE("canonicalize keeps magnitude in [0, pi] and preserves the rotation") {
  Rng rng(17);
  for (int i = 0; i < 40; ++i) {
    Vector3d r;
    for (int k = 0; k < 3; ++k) r[k] = 9.0 * (2.0 * rng.uniform() - 1.0);
    const Vector3d c = so3::canonicalize(r);
    CHECK(c.norm() <= kPi + 1e-12);
    CHECK((so3::exp(c) - so3::exp(r)).norm() < 1e-9);
  }
}

TEST_CASE("unwrap picks the nearest equivalent representation") {
  const Vector3d prev(0, 0, 3.1);
  const Vector3d cur = so3::canonicalize(Vector3d(0, 0, 3.3));  // flips to -(2pi-3.3)
  CHECK(cur.z() < 0.0);
  const Vector3d u = so3::unwrap(cur, prev);
  CHECK(u.z() == doctest::Approx(3.3).epsilon(1e-12));
  // already-nearest input is untouched
  const Vector3d same = so3::unwrap(prev, prev);
  CHECK((same - prev).norm() == 0.0);
}

TEST_CASE("fk: identity pose puts links at their offsets") {
  const auto tree = two_link_chain({0, 0, 0.1});
  const VectorXd q = VectorXd::Zero(tree.dof());
  const auto tf = kin::forward_kinematics(tree, q);
  CHECK(tf[0].origin.norm() == 0.0);
  CHECK((tf[1].origin - Vector3d(0, 0, 0.1)).norm() == 0.0);
  CHECK((tf[1].rot - Matrix3d::Identity()).norm() == 0.0);
}

TEST_CASE("fk: rigid root translation moves every origin") {
  const auto tree = two_link_chain({0, 0, 0.1});
  VectorXd q = VectorXd::Zero(tree.dof());
  q.segment<3>(3) = Vector3d(1, 2, 3);
  const auto tf = kin::forward_kinematics(tree, q);
  CHECK((tf[0].origin - Vector3d(1, 2, 3)).norm() == 0.0);
  CHECK((tf[1].origin - Vector3d(1, 2, 3.1)).norm() == 0.0);
}

TEST_CASE("fk: rotation above a z-offset child swings it into the y axis") {
  // oracle: hand-composed homogeneous matrices
  const auto tree = two_link_chain({0, 0, 0.1});
  VectorXd q = VectorXd::Zero(tree.dof());
  q.segment<3>(0) = Vector3d(kPi / 2.0, 0, 0);
  const auto tf = kin::forward_kinematics(tree, q);
  CHECK((tf[1].origin - Vector3d(0, -0.1, 0)).norm() < 1e-15);

  const auto oracle = testutil::fk_oracle(tree, q);
  CHECK((tf[1].origin - oracle[1].topRightCorner<3, 1>()).norm() < 1e-12);
  CHECK((tf[1].rot - oracle[1].topLeftCorner<3, 3>()).norm() < 1e-12);
}

TEST_CASE("fk matches the 4x4 oracle on random trees") {
  Rng rng(23);
  for (int trial = 0; trial < 20; ++trial) {
    auto [tree, bodies] = testutil::random_chain(4, rng);
    const VectorXd q = testutil::random_coords(tree, rng);
    const auto tf = kin::forward_kinematics(tree, q);
    const auto oracle = testutil::fk_oracle(tree, q);
    for (std::size_t k = 0; k < tree.link_count(); ++k) {
      CHECK((tf[k].origin - oracle[k].topRightCorner<3, 1>()).norm() < 1e-12);
      CHECK((tf[k].rot - oracle[k].topLeftCorner<3, 3>()).norm() < 1e-12);
    }
  }
}

TEST_CASE("fk composition: child transform equals parent composed with local") {
  Rng rng(29);
  auto [tree, bodies] = testutil::random_chain(5, rng);
  const VectorXd q = testutil::random_coords(tree, rng);
  const auto tf = kin::forward_kinematics(tree, q);
  for (std::size_t k = 1; k < tree.link_count(); ++k) {
    const auto& par = tf[tree.link(k).parent];
    const Vector3d expect_origin = par.origin + par.rot * tree.link(k).offset;
    const Matrix3d expect_rot = par.rot * so3::exp(q.segment<3>(tree.coord_index(k)));
    CHECK((tf[k].origin - expect_origin).norm() == 0.0);
    CHECK((tf[k].rot - expect_rot).norm() == 0.0);
  }
}

TEST_CASE("fk is invariant under the 2pi-shifted rotation vector") {
  Rng rng(31);
  auto [tree, bodies] = testutil::random_chain(3, rng);
  VectorXd q = testutil::random_coords(tree, rng);
  VectorXd q2 = q;
  const Vector3d r = q.segment<3>(0);
  q2.segment<3>(0) = r * (1.0 - 2.0 * kPi / r.norm());
  const auto a = kin::forward_kinematics(tree, q);
  const auto b = kin::forward_kinematics(tree, q2);
  for (std::size_t k = 0; k < tree.link_count(); ++k) {
    CHECK((a[k].rot - b[k].rot).norm() < 1e-9);
    CHECK((a[k].origin - b[k].origin).norm() < 1e-9);
  }
}

TEST_CASE("joint_positions: zero pose accumulates offsets; deterministic") {
  KinematicTree tree({{-1, Vector3d::Zero()}, {0, {0.1, 0, 0}}, {1, {0, 0.2, 0}}});
  const VectorXd q = VectorXd::Zero(tree.dof());
  const auto pts = kin::joint_positions(tree, q);
  CHECK((pts[2] - Vector3d(0.1, 0.2, 0)).norm() == 0.0);

  Rng rng(37);
  const VectorXd qr = testutil::random_coords(tree, rng);
  const auto p1 = kin::joint_positions(tree, qr);
  const auto p2 = kin::joint_positions(tree, qr);
  for (std::size_t k = 0; k < p1.size(); ++k) CHECK((p1[k] - p2[k]).norm() == 0.0);

  const auto oracle = testutil::fk_oracle(tree, qr);
  for (std::size_t k = 0; k < p1.size(); ++k)
    CHECK((p1[k] - oracle[k].topRightCorner<3, 1>()).norm() < 1e-12);
}

TEST_CASE("fk rejects dimension mismatch") {
  const auto tree = two_link_chain({0, 0, 0.1});
  CHECK_THROWS_AS(kin::forward_kinematics(tree, VectorXd::Zero(7)), ValidationError);
}

TEST_CASE("finite differences: constant and linear trajectories") {
  const std::size_t dim = 9;
  kin::Trajectory traj{MotionArray(6, dim), 0.02};
  SUBCASE("constant") {
    for (std::size_t t = 0; t < 6; ++t)
      for (std::size_t j = 0; j < dim; ++j) traj.frames(t, j) = 0.3 * j;
    const auto d = kin::finite_difference(traj);
    // boundary stencils leave ~1 ulp of cancellation noise scaled by 1/dt^2
    CHECK(testutil::max_abs(d.qdot) < 1e-12);
    CHECK(testutil::max_abs(d.qddot) < 1e-11);
  }
  SUBCASE("linear motion is exact everywhere") {
    for (std::size_t t = 0; t < 6; ++t)
      for (std::size_t j = 0; j < dim; ++j) traj.frames(t, j) = (0.1 * j - 0.3) * t * traj.dt;
    const auto d = kin::finite_difference(traj);
    for (std::size_t t = 0; t < 6; ++t)
      for (std::size_t j = 0; j < dim; ++j) {
        CHECK(d.qdot(t, j) == doctest::Approx(0.1 * j - 0.3).epsilon(1e-10));
        CHECK(std::fabs(d.qddot(t, j)) < 1e-9);
      }
  }
}

TEST_CASE("finite differences recover quadratic acceleration to 1e-10") {
  const std::size_t dim = 9;
  kin::Trajectory traj{MotionArray(8, dim), 0.05};
  VectorXd a(dim);
  Rng rng(41);
  for (std::size_t j = 0; j < dim; ++j) a[j] = 2.0 * rng.uniform() - 1.0;
  for (std::size_t t = 0; t < 8; ++t)
    for (std::size_t j = 0; j < dim; ++j) {
      const double tt = t * traj.dt;
      traj.frames(t, j) = 0.5 * a[j] * tt * tt;
    }
  const auto d = kin::finite_difference(traj);
  for (std::size_t t = 1; t + 1 < 8; ++t)
    for (std::size_t j = 0; j < dim; ++j)
      CHECK(d.qddot(t, j) == doctest::Approx(a[j]).epsilon(1e-10));
}

TEST_CASE("finite differences unwrap rotations before differencing") {
  // rotation angle sweeps linearly through pi; canonical storage flips sign
  const std::size_t dim = 9;
  kin::Trajectory traj{MotionArray(7, dim), 0.1};
  const double rate = 0.8;
  for (std::size_t t = 0; t < 7; ++t) {
    const Vector3d r = so3::canonicalize(Vector3d(0, 0, 2.9 + rate * t * traj.dt));
    traj.frames(t, 0) = r.x();
    traj.frames(t, 1) = r.y();
    traj.frames(t, 2) = r.z();
  }
  const auto d = kin::finite_difference(traj);
  for (std::size_t t = 0; t < 7; ++t) {
    CHECK(d.qdot(t, 2) == doctest::Approx(rate).epsilon(1e-9));
    CHECK(std::fabs(d.qddot(t, 2)) < 1e-7);
  }
}

TEST_CASE("finite differences need three frames") {
  kin::Trajectory traj{MotionArray(2, 9), 0.1};
  CHECK_THROWS_AS(kin::finite_difference(traj), ValidationError);
}

TEST_CASE("tree construction validates topology") {
  CHECK_THROWS_AS(KinematicTree({{0, Vector3d::Zero()}}), ValidationError);
  CHECK_THROWS_AS(KinematicTree({{-1, Vector3d::Zero()}, {1, Vector3d::Zero()}}), ValidationError);
  CHECK_THROWS_AS(KinematicTree({}), ValidationError);
}

TEST_CASE("canonical coordinates clamp rotation magnitudes") {
  const auto tree = two_link_chain({0, 0, 0.1});
  VectorXd raw = VectorXd::Zero(tree.dof());
  raw.segment<3>(0) = Vector3d(0, 0, 5.0);
  const auto g = kin::GeneralizedCoords::canonical(tree, raw);
  CHECK(g.root_rot().norm() <= kPi);
  CHECK((so3::exp(g.root_rot()) - so3::exp(Vector3d(0, 0, 5.0))).norm() < 1e-12);
}
