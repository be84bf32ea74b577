#include "drape/topology.hpp"

#include <algorithm>
#include <numeric>

#include "drape/error.hpp"

namespace drape {

MeshTopology::MeshTopology(const TriangleMesh& mesh) {
  const int nf = mesh.num_faces();
  face_edges.resize(nf);
  vertex_faces.resize(mesh.num_vertices());
  vertex_neighbors.resize(mesh.num_vertices());
  edge_index.reserve(static_cast<std::size_t>(nf) * 2);
  for (int f = 0; f < nf; ++f) {
    for (int k = 0; k < 3; ++k) {
      const int a = mesh.F(f, (k + 1) % 3);
      const int b = mesh.F(f, (k + 2) % 3);
      const auto key = edge_key(a, b);
      auto [it, inserted] = edge_index.try_emplace(key, static_cast<int>(edges.size()));
      if (inserted) {
        edges.push_back({std::min(a, b), std::max(a, b), f, -1});
        vertex_neighbors[a].push_back(b);
        vertex_neighbors[b].push_back(a);
      } else {
        Edge& e = edges[it->second];
        if (e.f1 >= 0)
          throw Error(ErrorCode::invalid_mesh,
                      "edge (" + std::to_string(a) + ", " + std::to_string(b) +
                          ") borders more than two faces");
        e.f1 = f;
      }
      face_edges[f][k] = it->second;
      vertex_faces[mesh.F(f, k)].push_back(f);
    }
  }
}

int MeshTopology::opposite_face(int f, int a, int b) const {
  const int e = find_edge(a, b);
  if (e < 0) return -1;
  return edges[e].f0 == f ? edges[e].f1 : edges[e].f0;
}

int MeshTopology::num_boundary_edges() const {
  return static_cast<int>(
      std::count_if(edges.begin(), edges.end(), [](const Edge& e) { return e.boundary(); }));
}

std::vector<std::vector<int>> MeshTopology::boundary_loops(const TriangleMesh& mesh) const {
  // next[a] = b for every boundary half-edge a->b in face orientation.
  std::unordered_map<int, int> next;
  for (const Edge& e : edges) {
    if (!e.boundary()) continue;
    const int f = e.f0;
    for (int k = 0; k < 3; ++k) {
      const int a = mesh.F(f, k), b = mesh.F(f, (k + 1) % 3);
      if (edge_key(a, b) == edge_key(e.v0, e.v1)) next[a] = b;
    }
  }
  std::vector<int> starts;
  starts.reserve(next.size());
  for (const auto& [a, b] : next) starts.push_back(a);
  std::sort(starts.begin(), starts.end());

  std::vector<std::vector<int>> loops;
  std::unordered_map<int, bool> used;
  for (int s : starts) {
    if (used[s]) continue;
    std::vector<int> loop;
    int v = s;
    while (!used[v]) {
      used[v] = true;
      loop.push_back(v);
      auto it = next.find(v);
      if (it == next.end()) break;
      v = it->second;
    }
    loops.push_back(std::move(loop));
  }
  return loops;
}

std::vector<int> MeshTopology::face_components(int* count) const {
  const int nf = static_cast<int>(face_edges.size());
  std::vector<int> label(nf, -1);
  int c = 0;
  std::vector<int> stack;
  for (int seed = 0; seed < nf; ++seed) {
    if (label[seed] >= 0) continue;
    label[seed] = c;
    stack.push_back(seed);
    while (!stack.empty()) {
      const int f = stack.back();
      stack.pop_back();
      for (int e : face_edges[f]) {
        const int g = edges[e].f0 == f ? edges[e].f1 : edges[e].f0;
        if (g >= 0 && label[g] < 0) {
          label[g] = c;
          stack.push_back(g);
        }
      }
    }
    ++c;
  }
  if (count) *count = c;
  return label;
}

}  // namespace drape
