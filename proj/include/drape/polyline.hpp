#pragma once

#include <vector>

#include "drape/geometry.hpp"
#include "drape/mesh.hpp"
#include "drape/topology.hpp"

namespace drape {

// Shortest path over the edge graph with Euclidean edge lengths. The result
// starts at `start` and ends at `end`. Throws Error(no_path) when the two
// vertices lie on different components.
std::vector<int> shortest_edge_path(const TriangleMesh& mesh, int start, int end);
std::vector<int> shortest_edge_path(const TriangleMesh& mesh, const MeshTopology& topology,
                                    int start, int end);

double path_length(const TriangleMesh& mesh, const std::vector<int>& path);

// Faces whose closure contains the sample: all faces around a vertex, both
// faces of an edge, or the face itself.
std::vector<int> incident_faces(const TriangleMesh& mesh, const MeshTopology& topology,
                                const SurfacePoint& sample, double tol = 1e-12);

// True when two samples share a face closure or sit in edge-adjacent faces.
bool samples_linked(const TriangleMesh& mesh, const MeshTopology& topology,
                    const SurfacePoint& a, const SurfacePoint& b);

// Polyline through mesh vertices, one sample per vertex.
BarycentricPolyline polyline_from_vertices(const TriangleMesh& mesh,
                                           const MeshTopology& topology,
                                           const std::vector<int>& vertices, bool closed);

// Projects arbitrary 3D points to the mesh and densifies the result so that
// consecutive samples are linked.
BarycentricPolyline polyline_from_points(const TriangleMesh& mesh,
                                         const std::vector<Vec3>& points, bool closed);

// Inserts projected midpoints between unlinked consecutive samples.
BarycentricPolyline densify_polyline(const TriangleMesh& mesh, const MeshTopology& topology,
                                     const TriangleTree& tree,
                                     const BarycentricPolyline& polyline);

// Uniform Laplacian smoothing of a closed loop, restricted to the tangent
// plane of each sample, followed by closest-point reprojection onto the
// surface. An iteration that would lengthen the curve is discarded and
// smoothing stops there.
BarycentricPolyline smooth_polyline(const TriangleMesh& mesh,
                                    const BarycentricPolyline& loop, int iterations = 10);

}  // namespace drape
