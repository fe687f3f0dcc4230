#pragma once

#include <Eigen/Core>
#include <array>
#include <vector>

#include "physmo/errors.hpp"

namespace physmo::inertia {

using Eigen::Matrix3d;
using Eigen::MatrixXd;
using Eigen::Vector3d;

struct TriangleMesh {
  std::vector<Vector3d> vertices;          // meters
  std::vector<std::array<int, 3>> faces;   // outward-oriented index triples
};

struct BodyParams {
  double mass = 0.0;                     // kg
  Vector3d com = Vector3d::Zero();       // meters
  Matrix3d inertia = Matrix3d::Zero();   // about com, kg*m^2
};

/// Per-vertex weights over J parts, rows nonnegative and summing to 1.
class PartWeights {
 public:
  PartWeights(MatrixXd w);
  const MatrixXd& matrix() const { return w_; }
  std::size_t vertex_count() const { return w_.rows(); }
  std::size_t part_count() const { return w_.cols(); }

 private:
  MatrixXd w_;
};

bool is_watertight(const TriangleMesh& mesh);

/// Signed volume via tetrahedra against the origin; positive for outward
/// orientation. Throws on non-watertight or degenerate (|V| < 1e-12) meshes.
double mesh_volume(const TriangleMesh& mesh);

/// Mass, center of mass and inertia about the com from closed-form signed
/// tetrahedron integrals under constant density.
BodyParams mesh_mass_properties(const TriangleMesh& mesh, double density);

/// Arg-max part per vertex, ties to the lowest part index.
std::vector<std::vector<int>> segment_parts(const TriangleMesh& mesh, const PartWeights& weights);

/// Axis-aligned box as 12 outward triangles.
TriangleMesh make_box(const Vector3d& extents, const Vector3d& center = Vector3d::Zero());

/// Subdivided icosahedron with vertices on the sphere of the given radius.
TriangleMesh make_icosphere(double radius, int subdivisions, const Vector3d& center = Vector3d::Zero());

}  // namespace physmo::inertia
