#include "physmo/inertia.hpp"

#include <Eigen/Geometry>

#include <cmath>
#include <cstdint>
#include <map>
#include <unordered_map>

namespace physmo::inertia {

PartWeights::PartWeights(MatrixXd w) : w_(std::move(w)) {
  if (w_.rows() == 0 || w_.cols() == 0) throw ValidationError("PartWeights: empty matrix");
  for (Eigen::Index i = 0; i < w_.rows(); ++i) {
    double s = 0.0;
    for (Eigen::Index j = 0; j < w_.cols(); ++j) {
      if (w_(i, j) < 0.0) throw ValidationError("PartWeights: negative weight");
      s += w_(i, j);
    }
    if (std::fabs(s - 1.0) > 1e-6)
      throw ValidationError("PartWeights: row " + std::to_string(i) + " sums to " + std::to_string(s));
  }
}

namespace {

void check_indices(const TriangleMesh& mesh) {
  const int n = static_cast<int>(mesh.vertices.size());
  for (const auto& f : mesh.faces)
    for (int v : f)
      if (v < 0 || v >= n) throw ValidationError("mesh: face index out of range");
}

}  // namespace

bool is_watertight(const TriangleMesh& mesh) {
  if (mesh.faces.size() < 4) return false;
  check_indices(mesh);
  // every directed edge must appear exactly once, with its reverse present
  std::unordered_map<std::uint64_t, int> count;
  count.reserve(mesh.faces.size() * 3);
  auto key = [](int a, int b) {
    return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(a)) << 32) |
           static_cast<std::uint32_t>(b);
  };
  for (const auto& f : mesh.faces) {
    for (int e = 0; e < 3; ++e) {
      const int a = f[e], b = f[(e + 1) % 3];
      if (a == b) return false;
      if (++count[key(a, b)] > 1) return false;
    }
  }
  for (const auto& [k, c] : count) {
    const int a = static_cast<int>(k >> 32), b = static_cast<int>(k & 0xffffffffu);
    auto it = count.find(key(b, a));
    if (it == count.end() || it->second != 1) return false;
  }
  return true;
}

double mesh_volume(const TriangleMesh& mesh) {
  if (!is_watertight(mesh)) throw ValidationError("mesh_volume: mesh is not watertight");
  double vol6 = 0.0;
  for (const auto& f : mesh.faces) {
    const Vector3d& a = mesh.vertices[f[0]];
    const Vector3d& b = mesh.vertices[f[1]];
    const Vector3d& c = mesh.vertices[f[2]];
    vol6 += a.dot(b.cross(c));
  }
  const double v = vol6 / 6.0;
  if (std::fabs(v) < 1e-12) throw NumericalError("mesh_volume: degenerate mesh (|V| < 1e-12)");
  return v;
}

BodyParams mesh_mass_properties(const TriangleMesh& mesh, double density) {
  if (!(density > 0.0)) throw ValidationError("mesh_mass_properties: density must be positive");
  const double volume = mesh_volume(mesh);
  if (volume <= 0.0)
    throw ValidationError("mesh_mass_properties: negative volume (inward orientation)");

  // Kallay-style accumulation of tetrahedron moment integrals against the origin.
  double vol6 = 0.0;
  Vector3d ctr = Vector3d::Zero();
  double xx = 0.0, yy = 0.0, zz = 0.0, xy = 0.0, xz = 0.0, yz = 0.0;
  for (const auto& f : mesh.faces) {
    const Vector3d& a = mesh.vertices[f[0]];
    const Vector3d& b = mesh.vertices[f[1]];
    const Vector3d& c = mesh.vertices[f[2]];
    const double det = a.dot(b.cross(c));
    vol6 += det;
    const Vector3d s = a + b + c;
    ctr += det * s;
    xx += det * (a.x() * a.x() + b.x() * b.x() + c.x() * c.x() + s.x() * s.x());
    yy += det * (a.y() * a.y() + b.y() * b.y() + c.y() * c.y() + s.y() * s.y());
    zz += det * (a.z() * a.z() + b.z() * b.z() + c.z() * c.z() + s.z() * s.z());
    xy += det * (a.x() * a.y() + b.x() * b.y() + c.x() * c.y() + s.x() * s.y());
    xz += det * (a.x() * a.z() + b.x() * b.z() + c.x() * c.z() + s.x() * s.z());
    yz += det * (a.y() * a.z() + b.y() * b.z() + c.y() * c.z() + s.y() * s.z());
  }

  BodyParams out;
  out.mass = density * volume;
  out.com = ctr / (4.0 * vol6);
  Matrix3d about_origin;
  about_origin << yy + zz, -xy, -xz, -xy, xx + zz, -yz, -xz, -yz, xx + yy;
  about_origin *= density / 120.0;
  // parallel-axis shift to the com
  const Vector3d& c = out.com;
  const Matrix3d steiner =
      out.mass * (c.squaredNorm() * Matrix3d::Identity() - c * c.transpose());
  out.inertia = about_origin - steiner;
  return out;
}

std::vector<std::vector<int>> segment_parts(const TriangleMesh& mesh, const PartWeights& weights) {
  if (weights.vertex_count() != mesh.vertices.size())
    throw ValidationError("segment_parts: weight rows do not match vertex count");
  std::vector<std::vector<int>> parts(weights.part_count());
  const MatrixXd& w = weights.matrix();
  for (Eigen::Index v = 0; v < w.rows(); ++v) {
    Eigen::Index best = 0;
    for (Eigen::Index j = 1; j < w.cols(); ++j)
      if (w(v, j) > w(v, best)) best = j;
    parts[best].push_back(static_cast<int>(v));
  }
  return parts;
}

TriangleMesh make_box(const Vector3d& extents, const Vector3d& center) {
  const Vector3d h = extents / 2.0;
  TriangleMesh m;
  for (int i = 0; i < 8; ++i)
    m.vertices.push_back(center + Vector3d((i & 1) ? h.x() : -h.x(), (i & 2) ? h.y() : -h.y(),
                                           (i & 4) ? h.z() : -h.z()));
  // 2 triangles per face, outward orientation
  const int quads[6][4] = {
      {0, 2, 3, 1},  // -z
      {4, 5, 7, 6},  // +z
      {0, 1, 5, 4},  // -y
      {2, 6, 7, 3},  // +y
      {0, 4, 6, 2},  // -x
      {1, 3, 7, 5},  // +x
  };
  for (const auto& q : quads) {
    m.faces.push_back({q[0], q[1], q[2]});
    m.faces.push_back({q[0], q[2], q[3]});
  }
  return m;
}

TriangleMesh make_icosphere(double radius, int subdivisions, const Vector3d& center) {
  const double t = (1.0 + std::sqrt(5.0)) / 2.0;
  std::vector<Vector3d> verts = {
      {-1, t, 0}, {1, t, 0}, {-1, -t, 0}, {1, -t, 0}, {0, -1, t}, {0, 1, t},
      {0, -1, -t}, {0, 1, -t}, {t, 0, -1}, {t, 0, 1}, {-t, 0, -1}, {-t, 0, 1}};
  std::vector<std::array<int, 3>> faces = {
      {0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11}, {1, 5, 9},  {5, 11, 4},
      {11, 10, 2}, {10, 7, 6}, {7, 1, 8},  {3, 9, 4},  {3, 4, 2},   {3, 2, 6},  {3, 6, 8},
      {3, 8, 9},  {4, 9, 5},  {2, 4, 11},  {6, 2, 10}, {8, 6, 7},   {9, 8, 1}};
  for (auto& v : verts) v.normalize();

  for (int s = 0; s < subdivisions; ++s) {
    std::map<std::pair<int, int>, int> midpoint;
    auto mid = [&](int a, int b) {
      const auto k = std::minmax(a, b);
      auto it = midpoint.find(k);
      if (it != midpoint.end()) return it->second;
      Vector3d v = (verts[a] + verts[b]).normalized();
      verts.push_back(v);
      const int idx = static_cast<int>(verts.size()) - 1;
      midpoint.emplace(k, idx);
      return idx;
    };
    std::vector<std::array<int, 3>> next;
    next.reserve(faces.size() * 4);
    for (const auto& f : faces) {
      const int ab = mid(f[0], f[1]), bc = mid(f[1], f[2]), ca = mid(f[2], f[0]);
      next.push_back({f[0], ab, ca});
      next.push_back({f[1], bc, ab});
      next.push_back({f[2], ca, bc});
      next.push_back({ab, bc, ca});
    }
    faces = std::move(next);
  }

  TriangleMesh m;
  m.vertices.reserve(verts.size());
  for (const auto& v : verts) m.vertices.push_back(center + radius * v);
  m.faces = std::move(faces);
  return m;
}

}  // namespace physmo::inertia
