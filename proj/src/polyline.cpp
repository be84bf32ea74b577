#include "drape/polyline.hpp"

#include <algorithm>
#include <limits>
#include <queue>

#include "drape/error.hpp"

namespace drape {

std::vector<int> shortest_edge_path(const TriangleMesh& mesh, int start, int end) {
  return shortest_edge_path(mesh, MeshTopology(mesh), start, end);
}

std::vector<int> shortest_edge_path(const TriangleMesh& mesh, const MeshTopology& topology,
                                    int start, int end) {
  const int n = mesh.num_vertices();
  if (start < 0 || start >= n || end < 0 || end >= n)
    throw Error(ErrorCode::invalid_argument, "path endpoint out of range");
  if (start == end) return {start};

  std::vector<double> dist(n, std::numeric_limits<double>::infinity());
  std::vector<int> previous(n, -1);
  using Entry = std::pair<double, int>;
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> queue;
  dist[start] = 0.0;
  queue.emplace(0.0, start);
  while (!queue.empty()) {
    const auto [d, u] = queue.top();
    queue.pop();
    if (d > dist[u]) continue;
    if (u == end) break;
    for (int v : topology.vertex_neighbors[u]) {
      const double through = d + (mesh.V.row(u) - mesh.V.row(v)).norm();
      if (through < dist[v]) {
        dist[v] = through;
        previous[v] = u;
        queue.emplace(through, v);
      }
    }
  }
  if (previous[end] < 0)
    throw Error(ErrorCode::no_path, "no edge path between vertex " + std::to_string(start) +
                                        " and vertex " + std::to_string(end));
  std::vector<int> path;
  for (int v = end; v != -1; v = previous[v]) path.push_back(v);
  std::reverse(path.begin(), path.end());
  return path;
}

double path_length(const TriangleMesh& mesh, const std::vector<int>& path) {
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < path.size(); ++i)
    total += (mesh.V.row(path[i + 1]) - mesh.V.row(path[i])).norm();
  return total;
}

std::vector<int> incident_faces(const TriangleMesh& mesh, const MeshTopology& topology,
                                const SurfacePoint& sample, double tol) {
  int nonzero = 0;
  for (int k = 0; k < 3; ++k)
    if (sample.bary[k] > tol) ++nonzero;
  const int f = sample.face;
  if (nonzero >= 3) return {f};
  if (nonzero == 2) {
    for (int k = 0; k < 3; ++k)
      if (sample.bary[k] <= tol) {
        const int a = mesh.F(f, (k + 1) % 3), b = mesh.F(f, (k + 2) % 3);
        const int g = topology.opposite_face(f, a, b);
        return g >= 0 ? std::vector<int>{f, g} : std::vector<int>{f};
      }
  }
  int k = 0;
  sample.bary.maxCoeff(&k);
  return topology.vertex_faces[mesh.F(f, k)];
}

bool samples_linked(const TriangleMesh& mesh, const MeshTopology& topology,
                    const SurfacePoint& a, const SurfacePoint& b) {
  const auto fa = incident_faces(mesh, topology, a);
  const auto fb = incident_faces(mesh, topology, b);
  for (int x : fa)
    for (int y : fb) {
      if (x == y) return true;
      for (int e : topology.face_edges[x]) {
        const auto& edge = topology.edges[e];
        if ((edge.f0 == x && edge.f1 == y) || (edge.f1 == x && edge.f0 == y)) return true;
      }
    }
  return false;
}

BarycentricPolyline polyline_from_vertices(const TriangleMesh& mesh,
                                           const MeshTopology& topology,
                                           const std::vector<int>& vertices, bool closed) {
  BarycentricPolyline out;
  out.closed = closed;
  out.samples.reserve(vertices.size());
  for (int v : vertices)
    out.samples.push_back(surface_point_at_vertex(mesh, v, topology.vertex_faces));
  return out;
}

namespace {

// Weights below 1e-6 are dropped so points a hair off a vertex or edge count
// as lying on it.
SurfacePoint project(const TriangleTree& tree, const Vec3& p) {
  const auto hit = tree.closest(p);
  Vec3 bary = hit.bary;
  for (int k = 0; k < 3; ++k)
    if (bary[k] < 1e-6) bary[k] = 0.0;
  return {hit.face, bary / bary.sum()};
}

void densify_segment(const TriangleMesh& mesh, const MeshTopology& topology,
                     const TriangleTree& tree, const SurfacePoint& a, const SurfacePoint& b,
                     int depth, std::vector<SurfacePoint>& out) {
  if (depth > 24 || samples_linked(mesh, topology, a, b)) return;
  const Vec3 pa = a.position(mesh), pb = b.position(mesh);
  // Samples around a common vertex (e.g. on two edges meeting there) link
  // through that vertex; midpoints would only approach it.
  std::vector<int> va;
  for (int f : incident_faces(mesh, topology, a))
    for (int k = 0; k < 3; ++k) va.push_back(mesh.F(f, k));
  int common = -1;
  double best = std::numeric_limits<double>::infinity();
  for (int f : incident_faces(mesh, topology, b))
    for (int k = 0; k < 3; ++k) {
      const int v = mesh.F(f, k);
      if (std::find(va.begin(), va.end(), v) == va.end()) continue;
      const double d = (mesh.vertex(v) - 0.5 * (pa + pb)).norm();
      if (d < best) best = d, common = v;
    }
  if (common >= 0) {
    out.push_back(surface_point_at_vertex(mesh, common, topology.vertex_faces));
    return;
  }
  const SurfacePoint mid = project(tree, 0.5 * (pa + pb));
  densify_segment(mesh, topology, tree, a, mid, depth + 1, out);
  out.push_back(mid);
  densify_segment(mesh, topology, tree, mid, b, depth + 1, out);
}

}  // namespace

BarycentricPolyline densify_polyline(const TriangleMesh& mesh, const MeshTopology& topology,
                                     const TriangleTree& tree,
                                     const BarycentricPolyline& polyline) {
  BarycentricPolyline out;
  out.closed = polyline.closed;
  const auto& s = polyline.samples;
  const std::size_t n = s.size();
  for (std::size_t i = 0; i < n; ++i) {
    out.samples.push_back(s[i]);
    if (i + 1 < n)
      densify_segment(mesh, topology, tree, s[i], s[i + 1], 0, out.samples);
    else if (polyline.closed && n > 1)
      densify_segment(mesh, topology, tree, s[i], s[0], 0, out.samples);
  }
  return out;
}

BarycentricPolyline polyline_from_points(const TriangleMesh& mesh,
                                         const std::vector<Vec3>& points, bool closed) {
  const TriangleTree tree(mesh);
  const MeshTopology topology(mesh);
  BarycentricPolyline raw;
  raw.closed = closed;
  for (const Vec3& p : points) raw.samples.push_back(project(tree, p));
  return densify_polyline(mesh, topology, tree, raw);
}

BarycentricPolyline smooth_polyline(const TriangleMesh& mesh,
                                    const BarycentricPolyline& loop, int iterations) {
  if (!loop.closed)
    throw Error(ErrorCode::invalid_argument, "smoothing is defined on closed loops only");
  if (loop.samples.size() < 3)
    throw Error(ErrorCode::invalid_argument, "closed loop needs at least 3 samples");
  if (iterations <= 0) return loop;

  const TriangleTree tree(mesh);
  const MeshTopology topology(mesh);
  const Eigen::MatrixX3d normals = mesh.vertex_normals();
  BarycentricPolyline current = loop;
  double current_length = current.length(mesh);
  for (int it = 0; it < iterations; ++it) {
    const Eigen::MatrixX3d p = current.evaluate(mesh);
    const Eigen::Index n = p.rows();
    BarycentricPolyline next;
    next.closed = true;
    next.samples.reserve(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const Vec3 prev = p.row((i + n - 1) % n).transpose();
      const Vec3 succ = p.row((i + 1) % n).transpose();
      const Vec3 here = p.row(i).transpose();
      // Only the tangential part of the Laplacian moves the sample, so
      // geodesic loops stay put instead of being pulled off the surface.
      const Vec3 n = current.samples[i].normal(mesh, normals);
      Vec3 d = 0.5 * (0.5 * (prev + succ) - here);
      d -= n.dot(d) * n;
      next.samples.push_back(project(tree, here + d));
    }
    next = densify_polyline(mesh, topology, tree, next);
    const double next_length = next.length(mesh);
    if (next_length > current_length) break;
    current = std::move(next);
    current_length = next_length;
  }
  return densify_polyline(mesh, topology, tree, current);
}

}  // namespace drape
