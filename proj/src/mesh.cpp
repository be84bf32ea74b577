#include "drape/mesh.hpp"

#include <unordered_map>

#include <Eigen/Geometry>

#include "drape/error.hpp"
#include "drape/topology.hpp"

namespace drape {

Mat3 TriangleMesh::triangle(int f) const {
  Mat3 t;
  for (int k = 0; k < 3; ++k) t.col(k) = corner(f, k);
  return t;
}

Vec3 TriangleMesh::face_normal(int f) const {
  const Vec3 n = (corner(f, 1) - corner(f, 0)).cross(corner(f, 2) - corner(f, 0));
  const double len = n.norm();
  return len > 0.0 ? Vec3(n / len) : Vec3::Zero();
}

double TriangleMesh::face_area(int f) const {
  return 0.5 * (corner(f, 1) - corner(f, 0)).cross(corner(f, 2) - corner(f, 0)).norm();
}

double TriangleMesh::area() const {
  double total = 0.0;
  for (int f = 0; f < num_faces(); ++f) total += face_area(f);
  return total;
}

Eigen::MatrixX3d TriangleMesh::vertex_normals() const {
  Eigen::MatrixX3d n = Eigen::MatrixX3d::Zero(num_vertices(), 3);
  for (int f = 0; f < num_faces(); ++f) {
    const Vec3 weighted = (corner(f, 1) - corner(f, 0)).cross(corner(f, 2) - corner(f, 0));
    for (int k = 0; k < 3; ++k) n.row(F(f, k)) += weighted.transpose();
  }
  for (int v = 0; v < num_vertices(); ++v) {
    const double len = n.row(v).norm();
    if (len > 0.0) n.row(v) /= len;
  }
  return n;
}

double TriangleMesh::bounding_box_diagonal() const {
  if (V.rows() == 0) return 0.0;
  return (V.colwise().maxCoeff() - V.colwise().minCoeff()).norm();
}

void validate_mesh(const TriangleMesh& mesh, bool require_manifold) {
  const int n = mesh.num_vertices();
  std::unordered_map<std::uint64_t, int> edge_count;
  for (int f = 0; f < mesh.num_faces(); ++f) {
    for (int k = 0; k < 3; ++k) {
      const int v = mesh.F(f, k);
      if (v < 0 || v >= n)
        throw Error(ErrorCode::invalid_mesh,
                    "face " + std::to_string(f) + " references vertex " +
                        std::to_string(v) + " outside [0, " + std::to_string(n) + ")");
    }
    if (mesh.F(f, 0) == mesh.F(f, 1) || mesh.F(f, 1) == mesh.F(f, 2) ||
        mesh.F(f, 0) == mesh.F(f, 2))
      throw Error(ErrorCode::invalid_mesh,
                  "face " + std::to_string(f) + " repeats a vertex index");
    if (require_manifold)
      for (int k = 0; k < 3; ++k)
        if (++edge_count[edge_key(mesh.F(f, k), mesh.F(f, (k + 1) % 3))] > 2)
          throw Error(ErrorCode::invalid_mesh,
                      "non-manifold edge (" + std::to_string(mesh.F(f, k)) + ", " +
                          std::to_string(mesh.F(f, (k + 1) % 3)) + ")");
  }
}

Vec3 SurfacePoint::position(const TriangleMesh& mesh) const {
  return bary[0] * mesh.corner(face, 0) + bary[1] * mesh.corner(face, 1) +
         bary[2] * mesh.corner(face, 2);
}

Vec3 SurfacePoint::normal(const TriangleMesh& mesh, const Eigen::MatrixX3d& vertex_normals) const {
  Vec3 n = Vec3::Zero();
  for (int k = 0; k < 3; ++k) n += bary[k] * vertex_normals.row(mesh.F(face, k)).transpose();
  const double len = n.norm();
  return len > 0.0 ? Vec3(n / len) : mesh.face_normal(face);
}

SurfacePoint surface_point_at_vertex(const TriangleMesh& mesh, int vertex,
                                     const std::vector<std::vector<int>>& vertex_faces) {
  if (vertex < 0 || vertex >= static_cast<int>(vertex_faces.size()) ||
      vertex_faces[vertex].empty())
    throw Error(ErrorCode::invalid_argument,
                "vertex " + std::to_string(vertex) + " has no incident face");
  const int f = vertex_faces[vertex].front();
  SurfacePoint p{f, Vec3::Zero()};
  for (int k = 0; k < 3; ++k)
    if (mesh.F(f, k) == vertex) p.bary[k] = 1.0;
  return p;
}

Eigen::MatrixX3d BarycentricPolyline::evaluate(const TriangleMesh& mesh) const {
  Eigen::MatrixX3d out(samples.size(), 3);
  for (std::size_t i = 0; i < samples.size(); ++i)
    out.row(static_cast<Eigen::Index>(i)) = samples[i].position(mesh).transpose();
  return out;
}

double BarycentricPolyline::length(const TriangleMesh& mesh) const {
  const Eigen::MatrixX3d p = evaluate(mesh);
  const Eigen::Index n = p.rows();
  double total = 0.0;
  for (Eigen::Index i = 0; i + 1 < n; ++i) total += (p.row(i + 1) - p.row(i)).norm();
  if (closed && n > 1) total += (p.row(0) - p.row(n - 1)).norm();
  return total;
}

bool barycentric_valid(const BarycentricPolyline& polyline, int num_faces, double tol) {
  for (const auto& s : polyline.samples) {
    if (s.face < 0 || s.face >= num_faces) return false;
    if (s.bary.minCoeff() < -tol) return false;
    if (std::abs(s.bary.sum() - 1.0) > tol) return false;
  }
  return true;
}

}  // namespace drape
