#include "drape/remesh.hpp"

#include <algorithm>
#include <unordered_map>

#include "drape/error.hpp"
#include "drape/geometry.hpp"
#include "drape/topology.hpp"
#include "dynamic_mesh.hpp"

namespace drape {

double edge_length_fraction(const TriangleMesh& mesh, double lo, double hi) {
  const MeshTopology topo(mesh);
  if (topo.edges.empty()) return 0.0;
  int inside = 0;
  for (const auto& e : topo.edges) {
    const double l = (mesh.V.row(e.v0) - mesh.V.row(e.v1)).norm();
    if (l >= lo && l <= hi) ++inside;
  }
  return static_cast<double>(inside) / static_cast<double>(topo.edges.size());
}

double mean_edge_length(const TriangleMesh& mesh) {
  const MeshTopology topo(mesh);
  if (topo.edges.empty()) return 0.0;
  double total = 0.0;
  for (const auto& e : topo.edges) total += (mesh.V.row(e.v0) - mesh.V.row(e.v1)).norm();
  return total / static_cast<double>(topo.edges.size());
}

namespace {

using detail::DynamicMesh;

struct Segment {
  Vec3 a, b;
};

Vec3 closest_on_segments(const std::vector<Segment>& segments, const Vec3& p) {
  Vec3 best = p;
  double best_d = std::numeric_limits<double>::infinity();
  for (const auto& s : segments) {
    const Vec3 d = s.b - s.a;
    const double len2 = d.squaredNorm();
    const double t = len2 > 0 ? std::clamp((p - s.a).dot(d) / len2, 0.0, 1.0) : 0.0;
    const Vec3 q = s.a + t * d;
    const double dist = (q - p).squaredNorm();
    if (dist < best_d) {
      best_d = dist;
      best = q;
    }
  }
  return best;
}

class Remesher {
 public:
  Remesher(const TriangleMesh& mesh, double target, bool preserve)
      : dm_(mesh), tree_(mesh), target_(target), preserve_(preserve) {
    const MeshTopology topo(mesh);
    fixed_.assign(mesh.num_vertices(), false);
    for (const auto& e : topo.edges) {
      if (!e.boundary()) continue;
      boundary_segments_.push_back({mesh.vertex(e.v0), mesh.vertex(e.v1)});
      if (preserve_) fixed_[e.v0] = fixed_[e.v1] = true;
    }
  }

  TriangleMesh run(int iterations) {
    const double high = 4.0 / 3.0 * target_;
    const double low = 4.0 / 5.0 * target_;
    for (int it = 0; it < iterations; ++it) {
      split_long_edges(high);
      collapse_short_edges(low, high);
      equalize_valences();
      relax();
    }
    return dm_.compact();
  }

 private:
  struct EdgeRef {
    double length;
    int a, b;
  };

  std::vector<EdgeRef> edges_by_length(bool descending) const {
    std::vector<EdgeRef> out;
    std::unordered_map<std::uint64_t, bool> seen;
    for (int f = 0; f < dm_.num_faces(); ++f) {
      if (!dm_.face_alive[f]) continue;
      const auto& t = dm_.faces[f];
      for (int k = 0; k < 3; ++k) {
        const int a = std::min(t[k], t[(k + 1) % 3]);
        const int b = std::max(t[k], t[(k + 1) % 3]);
        if (seen.emplace(edge_key(a, b), true).second)
          out.push_back({(dm_.pos[a] - dm_.pos[b]).norm(), a, b});
      }
    }
    std::sort(out.begin(), out.end(), [&](const EdgeRef& x, const EdgeRef& y) {
      if (x.length != y.length) return descending ? x.length > y.length : x.length < y.length;
      return edge_key(x.a, x.b) < edge_key(y.a, y.b);
    });
    return out;
  }

  bool is_fixed(int v) const { return v < static_cast<int>(fixed_.size()) && fixed_[v]; }

  void split_long_edges(double high) {
    for (int sweep = 0; sweep < 10; ++sweep) {
      bool changed = false;
      for (const auto& e : edges_by_length(true)) {
        if (e.length <= high) break;
        if (!dm_.has_edge(e.a, e.b)) continue;
        dm_.split_edge(e.a, e.b, 0.5);
        changed = true;
      }
      if (!changed) break;
    }
  }

  bool can_collapse(int from, int to, double high) const {
    if (is_fixed(from)) return false;
    const bool from_boundary = dm_.is_boundary_vertex(from);
    const bool to_boundary = dm_.is_boundary_vertex(to);
    const bool edge_boundary = dm_.is_boundary_edge(from, to);
    if (from_boundary && !edge_boundary) return false;
    if (from_boundary && to_boundary && !edge_boundary) return false;
    if (!from_boundary && to_boundary && edge_boundary) return false;

    // Link condition.
    const auto nf = dm_.neighbors(from);
    const auto nt = dm_.neighbors(to);
    std::vector<int> common;
    std::set_intersection(nf.begin(), nf.end(), nt.begin(), nt.end(),
                          std::back_inserter(common));
    std::vector<int> opposite;
    for (int f : dm_.faces_of_edge(from, to))
      for (int x : dm_.faces[f])
        if (x != from && x != to) opposite.push_back(x);
    std::sort(opposite.begin(), opposite.end());
    if (common != opposite) return false;
    if (dm_.faces_of_vertex(from).size() <= 2 && !from_boundary) return false;

    const Vec3& target = dm_.pos[to];
    for (int x : nf)
      if (x != to && (dm_.pos[x] - target).norm() > high) return false;

    // Reject fold-overs and slivers in the faces that survive.
    for (int f : dm_.faces_of_vertex(from)) {
      const auto& t = dm_.faces[f];
      if (std::find(t.begin(), t.end(), to) != t.end()) continue;
      Vec3 p[3], q[3];
      for (int k = 0; k < 3; ++k) {
        p[k] = dm_.pos[t[k]];
        q[k] = t[k] == from ? target : p[k];
      }
      const Vec3 n0 = (p[1] - p[0]).cross(p[2] - p[0]);
      const Vec3 n1 = (q[1] - q[0]).cross(q[2] - q[0]);
      if (n1.norm() < 1e-12 || n0.normalized().dot(n1.normalized()) < 0.2) return false;
    }
    return true;
  }

  void collapse_short_edges(double low, double high) {
    for (const auto& e : edges_by_length(false)) {
      if (e.length >= low) break;
      if (!dm_.vertex_alive[e.a] || !dm_.vertex_alive[e.b] || !dm_.has_edge(e.a, e.b))
        continue;
      if ((dm_.pos[e.a] - dm_.pos[e.b]).norm() >= low) continue;
      if (can_collapse(e.a, e.b, high)) dm_.collapse(e.a, e.b);
      else if (can_collapse(e.b, e.a, high)) dm_.collapse(e.b, e.a);
    }
  }

  int valence(int v) const { return static_cast<int>(dm_.neighbors(v).size()); }
  int target_valence(int v) const { return dm_.is_boundary_vertex(v) ? 4 : 6; }

  void equalize_valences() {
    for (const auto& e : edges_by_length(true)) {
      const int a = e.a, b = e.b;
      const auto& adjacent = dm_.faces_of_edge(a, b);
      if (adjacent.size() != 2) continue;
      int c = -1, d = -1;
      for (int x : dm_.faces[adjacent[0]])
        if (x != a && x != b) c = x;
      for (int x : dm_.faces[adjacent[1]])
        if (x != a && x != b) d = x;
      if (c == d || dm_.has_edge(c, d)) continue;
      const int va = valence(a), vb = valence(b), vc = valence(c), vd = valence(d);
      if (va <= 3 || vb <= 3) continue;
      const int ta = target_valence(a), tb = target_valence(b);
      const int tc = target_valence(c), td = target_valence(d);
      const int before = std::abs(va - ta) + std::abs(vb - tb) + std::abs(vc - tc) +
                         std::abs(vd - td);
      const int after = std::abs(va - 1 - ta) + std::abs(vb - 1 - tb) +
                        std::abs(vc + 1 - tc) + std::abs(vd + 1 - td);
      if (after >= before) continue;
      // Geometric guard: both new faces keep the orientation of the old pair.
      const Vec3 n_old = (dm_.pos[b] - dm_.pos[a]).cross(dm_.pos[c] - dm_.pos[a]) +
                         (dm_.pos[a] - dm_.pos[b]).cross(dm_.pos[d] - dm_.pos[b]);
      auto normal_of = [&](const std::array<int, 3>& t) {
        return Vec3((dm_.pos[t[1]] - dm_.pos[t[0]]).cross(dm_.pos[t[2]] - dm_.pos[t[0]]));
      };
      // Use the actual orientation of the face containing a->b.
      bool ab_in_first = false;
      for (int k = 0; k < 3; ++k) {
        const auto& t = dm_.faces[adjacent[0]];
        if (t[k] == a && t[(k + 1) % 3] == b) ab_in_first = true;
      }
      const int cc = ab_in_first ? c : d;
      const int dd = ab_in_first ? d : c;
      const Vec3 n1 = normal_of({cc, a, dd});
      const Vec3 n2 = normal_of({dd, b, cc});
      const Vec3 ref = ab_in_first ? n_old : Vec3(-n_old);
      const double ref_norm = ref.norm();
      if (ref_norm <= 0 || n1.norm() < 1e-12 || n2.norm() < 1e-12) continue;
      if (n1.normalized().dot(ref / ref_norm) < 0.2 || n2.normalized().dot(ref / ref_norm) < 0.2)
        continue;
      dm_.flip(a, b);
    }
  }

  Vec3 vertex_normal(int v) const {
    Vec3 n = Vec3::Zero();
    for (int f : dm_.faces_of_vertex(v)) {
      const auto& t = dm_.faces[f];
      n += (dm_.pos[t[1]] - dm_.pos[t[0]]).cross(dm_.pos[t[2]] - dm_.pos[t[0]]);
    }
    const double len = n.norm();
    return len > 0 ? Vec3(n / len) : Vec3::Zero();
  }

  void relax() {
    std::vector<Vec3> next = dm_.pos;
    for (int v = 0; v < dm_.num_vertices(); ++v) {
      if (!dm_.vertex_alive[v] || dm_.faces_of_vertex(v).empty() || is_fixed(v)) continue;
      if (dm_.is_boundary_vertex(v)) {
        if (preserve_) continue;
        const auto [prev, succ] = dm_.boundary_neighbors(v);
        if (prev < 0 || succ < 0) continue;
        const Vec3 q = 0.5 * (dm_.pos[prev] + dm_.pos[succ]);
        next[v] = closest_on_segments(boundary_segments_, q);
        continue;
      }
      const auto nb = dm_.neighbors(v);
      Vec3 q = Vec3::Zero();
      for (int x : nb) q += dm_.pos[x];
      q /= static_cast<double>(nb.size());
      const Vec3 n = vertex_normal(v);
      const Vec3 moved = dm_.pos[v] + (q - dm_.pos[v]) - n * n.dot(q - dm_.pos[v]);
      next[v] = tree_.closest(moved).point;
    }
    dm_.pos = std::move(next);
  }

  DynamicMesh dm_;
  TriangleTree tree_;
  double target_;
  bool preserve_;
  std::vector<bool> fixed_;
  std::vector<Segment> boundary_segments_;
};

}  // namespace

TriangleMesh isotropic_remesh(const TriangleMesh& mesh, double target_edge_length,
                              bool preserve_boundary, int iterations) {
  if (!(target_edge_length >= 1e-5))
    throw Error(ErrorCode::invalid_argument, "target edge length below 1e-5 m");
  validate_mesh(mesh);
  Remesher remesher(mesh, target_edge_length, preserve_boundary);
  return remesher.run(iterations);
}

}  // namespace drape
