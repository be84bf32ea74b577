#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

namespace drape {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat2 = Eigen::Matrix2d;
using Mat3 = Eigen::Matrix3d;

// Vertex positions are in meters. Attribute channels are optional and keyed
// by name; every face channel has one entry per face and every vertex channel
// one entry per vertex.
struct TriangleMesh {
  Eigen::MatrixX3d V;
  Eigen::MatrixX3i F;
  std::map<std::string, Eigen::VectorXd> face_channels;
  std::map<std::string, Eigen::VectorXd> vertex_channels;

  TriangleMesh() = default;
  TriangleMesh(Eigen::MatrixX3d v, Eigen::MatrixX3i f)
      : V(std::move(v)), F(std::move(f)) {}

  int num_vertices() const { return static_cast<int>(V.rows()); }
  int num_faces() const { return static_cast<int>(F.rows()); }

  Vec3 vertex(int i) const { return V.row(i).transpose(); }
  Vec3 corner(int f, int k) const { return V.row(F(f, k)).transpose(); }

  // Columns are the three corner positions.
  Mat3 triangle(int f) const;
  Vec3 face_normal(int f) const;  // unit length, zero for degenerate faces
  double face_area(int f) const;
  double area() const;
  // Area-weighted average of the incident face normals, unit length.
  Eigen::MatrixX3d vertex_normals() const;
  double bounding_box_diagonal() const;
};

// Structural checks: index range, repeated indices inside a face, and edges
// shared by more than two faces. Throws Error(invalid_mesh).
void validate_mesh(const TriangleMesh& mesh, bool require_manifold = true);

// A point on a mesh given by a face and barycentric weights.
struct SurfacePoint {
  int face = -1;
  Vec3 bary = Vec3(1.0, 0.0, 0.0);

  Vec3 position(const TriangleMesh& mesh) const;
  // Barycentric blend of per-vertex normals, normalized.
  Vec3 normal(const TriangleMesh& mesh, const Eigen::MatrixX3d& vertex_normals) const;
  bool operator==(const SurfacePoint&) const = default;
};

// A point at vertex v expressed in one of its incident faces.
SurfacePoint surface_point_at_vertex(const TriangleMesh& mesh, int vertex,
                                     const std::vector<std::vector<int>>& vertex_faces);

// Curve stored in barycentric form so that it can be evaluated on any mesh
// sharing the connectivity it was created on.
struct BarycentricPolyline {
  std::vector<SurfacePoint> samples;
  bool closed = false;

  Eigen::MatrixX3d evaluate(const TriangleMesh& mesh) const;
  double length(const TriangleMesh& mesh) const;
  bool operator==(const BarycentricPolyline&) const = default;
};

// Checks weights are non-negative and sum to one within tol.
bool barycentric_valid(const BarycentricPolyline& polyline, int num_faces,
                       double tol = 1e-9);

}  // namespace drape
