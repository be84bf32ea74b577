#include "drape/embed.hpp"

#include <algorithm>
#include <array>
#include <map>
#include <numeric>
#include <unordered_map>

#include <Eigen/QR>

#include "drape/error.hpp"
#include "drape/topology.hpp"
#include "dynamic_mesh.hpp"

namespace drape {

bool CurveEmbedding::is_cut(int a, int b) const {
  return cut_edges.count(edge_key(a, b)) > 0;
}

namespace {

// Barycentric coordinates of x with respect to triangle (a,b,c), computed in
// the triangle plane.
Vec3 barycentric(const Vec3& x, const Vec3& a, const Vec3& b, const Vec3& c) {
  const Vec3 v0 = b - a, v1 = c - a, v2 = x - a;
  const double d00 = v0.dot(v0), d01 = v0.dot(v1), d11 = v1.dot(v1);
  const double d20 = v2.dot(v0), d21 = v2.dot(v1);
  const double denom = d00 * d11 - d01 * d01;
  if (denom <= 0.0) return Vec3(1.0 / 3, 1.0 / 3, 1.0 / 3);
  const double v = (d11 * d20 - d01 * d21) / denom;
  const double w = (d00 * d21 - d01 * d20) / denom;
  return Vec3(1.0 - v - w, v, w);
}

SurfacePoint clamp_point(int face, Vec3 bary) {
  bary = bary.cwiseMax(0.0);
  const double s = bary.sum();
  if (s <= 0.0) bary = Vec3(1.0 / 3, 1.0 / 3, 1.0 / 3);
  else bary /= s;
  return {face, bary};
}

class Refiner {
 public:
  Refiner(const TriangleMesh& mesh, double snap) : source_(mesh), snap_(snap), dm_(mesh) {
    const int nv = mesh.num_vertices();
    origin_.resize(nv);
    const MeshTopology topo(mesh);
    for (int v = 0; v < nv; ++v)
      origin_[v] = topo.vertex_faces[v].empty()
                       ? SurfacePoint{}
                       : surface_point_at_vertex(mesh, v, topo.vertex_faces);
    children_.resize(mesh.num_faces());
    for (int f = 0; f < mesh.num_faces(); ++f) children_[f].push_back(f);
  }

  // Inserts a source-mesh point as a vertex and returns its index.
  int insert(const SurfacePoint& p) {
    const Vec3 x = p.position(source_);
    int best = -1;
    Vec3 best_bary = Vec3::Zero();
    double best_score = -std::numeric_limits<double>::infinity();
    for (int c : children_[p.face]) {
      const auto& t = dm_.faces[c];
      const Vec3 l = barycentric(x, dm_.pos[t[0]], dm_.pos[t[1]], dm_.pos[t[2]]);
      if (l.minCoeff() > best_score) {
        best_score = l.minCoeff();
        best = c;
        best_bary = l;
      }
    }
    const auto tri = dm_.faces[best];
    int small = 0;
    for (int k = 0; k < 3; ++k)
      if (best_bary[k] < snap_) ++small;
    if (small >= 2) {
      int k = 0;
      best_bary.maxCoeff(&k);
      return tri[k];
    }
    if (small == 1) {
      int k = 0;
      best_bary.minCoeff(&k);
      const int a = tri[(k + 1) % 3], b = tri[(k + 2) % 3];
      const double wa = std::max(best_bary[(k + 1) % 3], 0.0);
      const double wb = std::max(best_bary[(k + 2) % 3], 0.0);
      return split_edge(a, b, wb / (wa + wb));
    }
    const int before = dm_.num_faces();
    const int m = dm_.split_face(best, x);
    record(m, best, before);
    return m;
  }

  // Connects two vertices by splitting the edges crossed by the straight
  // segment between them. Appends the visited vertices (excluding `from`).
  void connect(int from, int to, std::vector<int>& out) {
    int cur = from;
    for (int guard = 0; guard < 100000 && cur != to; ++guard) {
      if (dm_.has_edge(cur, to)) {
        out.push_back(to);
        return;
      }
      const Vec3 d = dm_.pos[to] - dm_.pos[cur];
      const double len = d.norm();
      double best_res = std::numeric_limits<double>::infinity();
      int best_p = -1, best_q = -1;
      double best_s = 0.0;
      for (int f : dm_.faces_of_vertex(cur)) {
        const auto& t = dm_.faces[f];
        int k = 0;
        while (t[k] != cur) ++k;
        const int p = t[(k + 1) % 3], q = t[(k + 2) % 3];
        Eigen::Matrix<double, 3, 2> A;
        A.col(0) = d;
        A.col(1) = dm_.pos[p] - dm_.pos[q];
        const Vec3 rhs = dm_.pos[p] - dm_.pos[cur];
        const Vec2 ts = A.colPivHouseholderQr().solve(rhs);
        const double res = (A * ts - rhs).norm() / std::max(len, 1e-300);
        const double tol = 1e-9;
        if (ts[0] <= tol || ts[1] < -tol || ts[1] > 1.0 + tol) continue;
        if (res < best_res) {
          best_res = res;
          best_p = p;
          best_q = q;
          best_s = std::clamp(ts[1], 0.0, 1.0);
        }
      }
      if (best_p < 0 || best_res > 1e-6)
        throw Error(ErrorCode::invalid_argument,
                    "curve segment leaves the surface between consecutive samples");
      int next;
      if (best_s < snap_) next = best_p;
      else if (best_s > 1.0 - snap_) next = best_q;
      else next = split_edge(best_p, best_q, best_s);
      if (next == cur) break;
      out.push_back(next);
      cur = next;
    }
    if (cur != to)
      throw Error(ErrorCode::invalid_argument, "failed to trace curve segment on the surface");
  }

  // No face is ever removed during refinement, so indices map one to one.
  TriangleMesh mesh() const {
    TriangleMesh m;
    m.V.resize(dm_.num_vertices(), 3);
    for (int v = 0; v < dm_.num_vertices(); ++v) m.V.row(v) = dm_.pos[v].transpose();
    m.F.resize(dm_.num_faces(), 3);
    for (int f = 0; f < dm_.num_faces(); ++f)
      for (int k = 0; k < 3; ++k) m.F(f, k) = dm_.faces[f][k];
    return m;
  }
  const std::vector<int>& parents() const { return dm_.tag; }
  const std::vector<SurfacePoint>& origins() const { return origin_; }

 private:
  int split_edge(int a, int b, double s) {
    const int hint = dm_.faces_of_edge(a, b).front();
    const int before = dm_.num_faces();
    const int m = dm_.split_edge(a, b, s);
    record(m, hint, before);
    return m;
  }

  // Registers the source location of a new vertex and the children created
  // since `first_new_face`.
  void record(int vertex, int face_hint, int first_new_face) {
    const int src = dm_.tag[face_hint];
    const Vec3 l = barycentric(dm_.pos[vertex], source_.corner(src, 0),
                               source_.corner(src, 1), source_.corner(src, 2));
    origin_.push_back(clamp_point(src, l));
    for (int f = first_new_face; f < dm_.num_faces(); ++f)
      children_[dm_.tag[f]].push_back(f);
  }

  const TriangleMesh& source_;
  double snap_;
  detail::DynamicMesh dm_;
  std::vector<SurfacePoint> origin_;
  std::vector<std::vector<int>> children_;
};

// Inserts the crossing point on the shared edge wherever consecutive samples
// sit in edge-adjacent faces without sharing one.
std::vector<SurfacePoint> face_sharing_chain(const TriangleMesh& mesh,
                                             const MeshTopology& topo,
                                             const BarycentricPolyline& curve) {
  auto faces_of = [&](const SurfacePoint& s) {
    std::vector<int> out;
    int nonzero = 0;
    for (int k = 0; k < 3; ++k)
      if (s.bary[k] > 1e-12) ++nonzero;
    if (nonzero == 3) return std::vector<int>{s.face};
    if (nonzero == 2) {
      for (int k = 0; k < 3; ++k)
        if (s.bary[k] <= 1e-12) {
          const int g = topo.opposite_face(s.face, mesh.F(s.face, (k + 1) % 3),
                                           mesh.F(s.face, (k + 2) % 3));
          return g >= 0 ? std::vector<int>{s.face, g} : std::vector<int>{s.face};
        }
    }
    int k = 0;
    s.bary.maxCoeff(&k);
    return topo.vertex_faces[mesh.F(s.face, k)];
  };

  std::vector<SurfacePoint> chain;
  const auto& s = curve.samples;
  const std::size_t n = s.size();
  const std::size_t segments = curve.closed ? n : n - 1;
  for (std::size_t i = 0; i < n; ++i) {
    chain.push_back(s[i]);
    if (i >= segments) continue;
    const SurfacePoint& a = s[i];
    const SurfacePoint& b = s[(i + 1) % n];
    const auto fa = faces_of(a), fb = faces_of(b);
    bool shared = false;
    for (int x : fa)
      if (std::find(fb.begin(), fb.end(), x) != fb.end()) shared = true;
    if (shared) continue;
    bool inserted = false;
    for (int x : fa) {
      for (int k = 0; k < 3 && !inserted; ++k) {
        const int u = mesh.F(x, (k + 1) % 3), w = mesh.F(x, (k + 2) % 3);
        const int y = topo.opposite_face(x, u, w);
        if (y < 0 || std::find(fb.begin(), fb.end(), y) == fb.end()) continue;
        // Closest approach between segment a-b and the edge u-w.
        const Vec3 pa = a.position(mesh), pb = b.position(mesh);
        const Vec3 pu = mesh.vertex(u), pw = mesh.vertex(w);
        const Vec3 d1 = pb - pa, d2 = pw - pu, r = pa - pu;
        const double A = d1.dot(d1), B = d1.dot(d2), C = d2.dot(d2);
        const double D = d1.dot(r), E = d2.dot(r);
        const double denom = A * C - B * B;
        double t = denom > 1e-300 ? (A * E - B * D) / denom : 0.5;
        t = std::clamp(t, 0.0, 1.0);
        SurfacePoint cross{x, Vec3::Zero()};
        cross.bary[(k + 1) % 3] = 1.0 - t;
        cross.bary[(k + 2) % 3] = t;
        chain.push_back(cross);
        inserted = true;
      }
      if (inserted) break;
    }
    if (!inserted)
      throw Error(ErrorCode::invalid_argument,
                  "consecutive curve samples are neither in a shared nor an adjacent face");
  }
  return chain;
}

}  // namespace

CurveEmbedding embed_curves(const TriangleMesh& mesh,
                            const std::vector<BarycentricPolyline>& curves,
                            bool reject_self_crossing, double snap) {
  const MeshTopology topo(mesh);
  Refiner refiner(mesh, snap);
  CurveEmbedding out;
  for (const auto& curve : curves) {
    if (curve.samples.empty()) {
      out.curves.emplace_back();
      continue;
    }
    if (!barycentric_valid(curve, mesh.num_faces(), 1e-6))
      throw Error(ErrorCode::invalid_argument, "curve sample with invalid barycentric weights");
    const auto chain = face_sharing_chain(mesh, topo, curve);
    std::vector<int> anchors;
    anchors.reserve(chain.size());
    for (const auto& p : chain) {
      const int v = refiner.insert(p);
      if (anchors.empty() || anchors.back() != v) anchors.push_back(v);
    }
    if (curve.closed && anchors.size() > 1 && anchors.front() == anchors.back())
      anchors.pop_back();

    std::vector<int> path{anchors.front()};
    for (std::size_t i = 0; i + 1 < anchors.size(); ++i)
      refiner.connect(anchors[i], anchors[i + 1], path);
    if (curve.closed && anchors.size() > 2) {
      refiner.connect(anchors.back(), anchors.front(), path);
      path.pop_back();  // the loop returns to its first vertex
    }
    if (reject_self_crossing) {
      std::vector<int> sorted = path;
      std::sort(sorted.begin(), sorted.end());
      if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
        throw Error(ErrorCode::self_intersection, "curve crosses itself");
    }
    out.curves.push_back(std::move(path));
  }

  out.mesh = refiner.mesh();
  out.face_parent = refiner.parents();
  out.vertex_origin = refiner.origins();
  for (std::size_t c = 0; c < out.curves.size(); ++c) {
    const auto& path = out.curves[c];
    for (std::size_t i = 0; i + 1 < path.size(); ++i)
      out.cut_edges.insert(edge_key(path[i], path[i + 1]));
    if (curves[c].closed && path.size() > 2)
      out.cut_edges.insert(edge_key(path.back(), path.front()));
  }
  return out;
}

std::vector<int> split_along_edges(TriangleMesh& mesh,
                                   const std::unordered_set<std::uint64_t>& cut_edges) {
  const int nv = mesh.num_vertices();
  std::vector<std::vector<int>> vertex_faces(nv);
  for (int f = 0; f < mesh.num_faces(); ++f)
    for (int k = 0; k < 3; ++k) vertex_faces[mesh.F(f, k)].push_back(f);

  std::vector<bool> touched(nv, false);
  for (int f = 0; f < mesh.num_faces(); ++f)
    for (int k = 0; k < 3; ++k)
      if (cut_edges.count(edge_key(mesh.F(f, k), mesh.F(f, (k + 1) % 3)))) {
        touched[mesh.F(f, k)] = true;
        touched[mesh.F(f, (k + 1) % 3)] = true;
      }

  const Eigen::MatrixX3i F0 = mesh.F;
  std::vector<int> source(nv);
  std::iota(source.begin(), source.end(), 0);
  std::vector<Vec3> extra;
  for (int v = 0; v < nv; ++v) {
    if (!touched[v]) continue;
    const auto& fan = vertex_faces[v];
    const int m = static_cast<int>(fan.size());
    std::vector<int> group(m);
    std::iota(group.begin(), group.end(), 0);
    auto find = [&](int i) {
      while (group[i] != i) i = group[i] = group[group[i]];
      return i;
    };
    // Faces of the fan sharing a non-cut edge through v belong together.
    std::map<int, int> first_face_of_neighbor;
    for (int i = 0; i < m; ++i) {
      const int f = fan[i];
      for (int k = 0; k < 3; ++k) {
        const int x = F0(f, k);
        if (x == v || cut_edges.count(edge_key(v, x))) continue;
        auto [it, inserted] = first_face_of_neighbor.try_emplace(x, i);
        if (!inserted) group[find(i)] = find(it->second);
      }
    }
    std::map<int, int> new_index;  // group root -> vertex index
    for (int i = 0; i < m; ++i) {
      const int root = find(i);
      auto [it, inserted] = new_index.try_emplace(root, -1);
      if (inserted) {
        if (new_index.size() == 1) {
          it->second = v;
        } else {
          it->second = nv + static_cast<int>(extra.size());
          extra.push_back(mesh.vertex(v));
          source.push_back(v);
        }
      }
    }
    for (int i = 0; i < m; ++i) {
      const int idx = new_index[find(i)];
      if (idx == v) continue;
      const int f = fan[i];
      for (int k = 0; k < 3; ++k)
        if (mesh.F(f, k) == v) mesh.F(f, k) = idx;
    }
  }
  if (!extra.empty()) {
    const Eigen::Index old = mesh.V.rows();
    mesh.V.conservativeResize(old + static_cast<Eigen::Index>(extra.size()), 3);
    for (std::size_t i = 0; i < extra.size(); ++i) mesh.V.row(old + i) = extra[i].transpose();
    for (auto& [name, channel] : mesh.vertex_channels) {
      Eigen::VectorXd grown(mesh.V.rows());
      for (Eigen::Index i = 0; i < grown.size(); ++i) grown[i] = channel[source[i]];
      channel = std::move(grown);
    }
  }
  return source;
}

}  // namespace drape
