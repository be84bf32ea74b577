#pragma once

#include <cstdint>
#include <unordered_set>
#include <vector>

#include "drape/mesh.hpp"

namespace drape {

// Result of splitting mesh faces so that a set of surface curves run along
// mesh edges.
struct CurveEmbedding {
  TriangleMesh mesh;
  std::vector<int> face_parent;              // source face of every refined face
  std::vector<SurfacePoint> vertex_origin;   // location in the source mesh
  std::vector<std::vector<int>> curves;      // refined vertex sequence per curve
  std::unordered_set<std::uint64_t> cut_edges;

  bool is_cut(int a, int b) const;
};

// Splits faces crossed by the curves. Consecutive samples must be linked
// (see samples_linked). Points closer than `snap` (in barycentric units of
// the face being split) to an existing vertex or edge are merged onto it so
// no sliver faces are produced. Throws Error(self_intersection) when
// `reject_self_crossing` is set and a curve visits a vertex twice.
CurveEmbedding embed_curves(const TriangleMesh& mesh,
                            const std::vector<BarycentricPolyline>& curves,
                            bool reject_self_crossing = false, double snap = 0.05);

// Duplicates vertices along cut edges so faces on either side no longer share
// them. Returns, for each output vertex, the input vertex it was copied from.
std::vector<int> split_along_edges(TriangleMesh& mesh,
                                   const std::unordered_set<std::uint64_t>& cut_edges);

}  // namespace drape
