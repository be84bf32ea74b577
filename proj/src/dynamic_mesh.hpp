#pragma once

// Editable triangle soup with edge and vertex incidence, shared by the curve
// embedding and the isotropic remesher. Faces are tagged; faces created by a
// split inherit the tag of the face they came from.

#include <array>
#include <cstdint>
#include <unordered_map>
#include <vector>

#include "drape/mesh.hpp"
#include "drape/topology.hpp"

namespace drape::detail {

class DynamicMesh {
 public:
  using Tri = std::array<int, 3>;

  explicit DynamicMesh(const TriangleMesh& mesh);

  int num_vertices() const { return static_cast<int>(pos.size()); }
  int num_faces() const { return static_cast<int>(faces.size()); }

  bool has_edge(int a, int b) const { return edge_faces_.count(edge_key(a, b)) > 0; }
  const std::vector<int>& faces_of_edge(int a, int b) const;
  const std::vector<int>& faces_of_vertex(int v) const { return vertex_faces_[v]; }
  bool is_boundary_edge(int a, int b) const;
  bool is_boundary_vertex(int v) const;
  std::vector<int> neighbors(int v) const;  // sorted
  // Boundary neighbors of a boundary vertex in loop orientation: (prev, next).
  std::pair<int, int> boundary_neighbors(int v) const;

  int add_vertex(const Vec3& x);
  int add_face(const Tri& t, int tag);
  void replace_face(int f, const Tri& t);
  void remove_face(int f);

  // Splits edge (a,b) at a + s (b - a); returns the new vertex.
  int split_edge(int a, int b, double s);
  int split_face(int f, const Vec3& x);
  // Removes vertex `from` by merging it into `to` (which keeps its position).
  void collapse(int from, int to);
  // Replaces edge (a,b) by the edge between the two opposite corners.
  void flip(int a, int b);

  // Live faces and referenced vertices, compacted. `vertex_map` receives the
  // old index of every output vertex.
  TriangleMesh compact(std::vector<int>* vertex_map = nullptr,
                       std::vector<int>* face_tags = nullptr) const;

  std::vector<Vec3> pos;
  std::vector<Tri> faces;
  std::vector<int> tag;
  std::vector<bool> face_alive;
  std::vector<bool> vertex_alive;

 private:
  void attach(int f);
  void detach(int f);

  std::vector<std::vector<int>> vertex_faces_;
  std::unordered_map<std::uint64_t, std::vector<int>> edge_faces_;
};

}  // namespace drape::detail
