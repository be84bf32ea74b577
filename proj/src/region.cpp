#include "drape/region.hpp"

#include <queue>

#include "drape/embed.hpp"
#include "drape/error.hpp"
#include "drape/log.hpp"
#include "drape/topology.hpp"

namespace drape {

TriangleMesh extract_region(const TriangleMesh& mesh,
                            const std::vector<BarycentricPolyline>& boundaries, int seed) {
  if (seed < 0 || seed >= mesh.num_faces())
    throw Error(ErrorCode::invalid_argument, "seed face out of range");
  const CurveEmbedding embedding = embed_curves(mesh, boundaries);
  const TriangleMesh& refined = embedding.mesh;
  const MeshTopology topo(refined);

  const int nf = refined.num_faces();
  std::vector<int> label(nf, -1);
  int regions = 0;
  for (int start = 0; start < nf; ++start) {
    if (label[start] >= 0) continue;
    std::queue<int> queue;
    queue.push(start);
    label[start] = regions;
    while (!queue.empty()) {
      const int f = queue.front();
      queue.pop();
      for (int e : topo.face_edges[f]) {
        const auto& edge = topo.edges[e];
        if (edge.boundary() || embedding.is_cut(edge.v0, edge.v1)) continue;
        const int g = edge.f0 == f ? edge.f1 : edge.f0;
        if (label[g] < 0) {
          label[g] = regions;
          queue.push(g);
        }
      }
    }
    ++regions;
  }

  int chosen = -1;
  for (int f = 0; f < nf; ++f) {
    if (embedding.face_parent[f] != seed) continue;
    if (chosen < 0) chosen = label[f];
    else if (label[f] != chosen)
      throw Error(ErrorCode::ambiguous_seed,
                  "seed face " + std::to_string(seed) + " lies on a boundary curve");
  }
  if (chosen < 0) throw Error(ErrorCode::invalid_argument, "seed face vanished");

  bool open = regions == 1;
  for (const auto& edge : topo.edges)
    if (edge.boundary() && label[edge.f0] == chosen && !embedding.is_cut(edge.v0, edge.v1))
      open = true;
  if (open) log::warn("region around face {} is not enclosed by the boundary curves", seed);

  std::vector<int> remap(refined.num_vertices(), -1);
  std::vector<int> used;
  std::vector<int> faces;
  for (int f = 0; f < nf; ++f) {
    if (label[f] != chosen) continue;
    faces.push_back(f);
    for (int k = 0; k < 3; ++k) {
      const int v = refined.F(f, k);
      if (remap[v] < 0) {
        remap[v] = static_cast<int>(used.size());
        used.push_back(v);
      }
    }
  }
  TriangleMesh out;
  out.V.resize(static_cast<Eigen::Index>(used.size()), 3);
  for (std::size_t i = 0; i < used.size(); ++i) out.V.row(i) = refined.V.row(used[i]);
  out.F.resize(static_cast<Eigen::Index>(faces.size()), 3);
  for (std::size_t i = 0; i < faces.size(); ++i)
    for (int k = 0; k < 3; ++k) out.F(i, k) = remap[refined.F(faces[i], k)];
  return out;
}

}  // namespace drape
