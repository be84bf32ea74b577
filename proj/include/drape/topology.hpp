#pragma once

#include <array>
#include <cstdint>
#include <unordered_map>
#include <vector>

#include "drape/mesh.hpp"

namespace drape {

inline std::uint64_t edge_key(int a, int b) {
  if (a > b) std::swap(a, b);
  return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(a)) << 32) |
         static_cast<std::uint32_t>(b);
}

// Edge-based adjacency of a triangle mesh. Edge e of face f is the edge
// opposite corner k, i.e. (F(f,(k+1)%3), F(f,(k+2)%3)).
struct MeshTopology {
  struct Edge {
    int v0 = -1, v1 = -1;
    int f0 = -1, f1 = -1;  // f1 == -1 on the boundary
    bool boundary() const { return f1 < 0; }
  };

  std::vector<Edge> edges;
  std::vector<std::array<int, 3>> face_edges;
  std::vector<std::vector<int>> vertex_faces;
  std::vector<std::vector<int>> vertex_neighbors;
  std::unordered_map<std::uint64_t, int> edge_index;

  explicit MeshTopology(const TriangleMesh& mesh);

  int find_edge(int a, int b) const {
    auto it = edge_index.find(edge_key(a, b));
    return it == edge_index.end() ? -1 : it->second;
  }

  // Face across edge (a,b) from face f, or -1.
  int opposite_face(int f, int a, int b) const;

  int num_boundary_edges() const;

  // Boundary loops ordered so that each loop follows the orientation of the
  // faces it bounds. Loops are sorted by their smallest vertex index.
  std::vector<std::vector<int>> boundary_loops(const TriangleMesh& mesh) const;

  // Face components connected through shared edges; returns per-face label.
  std::vector<int> face_components(int* count = nullptr) const;
};

}  // namespace drape
