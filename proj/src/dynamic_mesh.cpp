#include "dynamic_mesh.hpp"

#include <algorithm>

#include "drape/error.hpp"

namespace drape::detail {

DynamicMesh::DynamicMesh(const TriangleMesh& mesh) {
  pos.reserve(mesh.num_vertices());
  for (int v = 0; v < mesh.num_vertices(); ++v) add_vertex(mesh.vertex(v));
  for (int f = 0; f < mesh.num_faces(); ++f)
    add_face({mesh.F(f, 0), mesh.F(f, 1), mesh.F(f, 2)}, f);
}

const std::vector<int>& DynamicMesh::faces_of_edge(int a, int b) const {
  static const std::vector<int> empty;
  auto it = edge_faces_.find(edge_key(a, b));
  return it == edge_faces_.end() ? empty : it->second;
}

bool DynamicMesh::is_boundary_edge(int a, int b) const {
  return faces_of_edge(a, b).size() == 1;
}

bool DynamicMesh::is_boundary_vertex(int v) const {
  for (int f : vertex_faces_[v])
    for (int k = 0; k < 3; ++k) {
      const int x = faces[f][k];
      if (x != v && is_boundary_edge(v, x)) return true;
    }
  return false;
}

std::vector<int> DynamicMesh::neighbors(int v) const {
  std::vector<int> out;
  for (int f : vertex_faces_[v])
    for (int x : faces[f])
      if (x != v) out.push_back(x);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::pair<int, int> DynamicMesh::boundary_neighbors(int v) const {
  int prev = -1, next = -1;
  for (int f : vertex_faces_[v]) {
    const auto& t = faces[f];
    for (int k = 0; k < 3; ++k) {
      const int a = t[k], b = t[(k + 1) % 3];
      if (!is_boundary_edge(a, b)) continue;
      if (a == v) next = b;
      if (b == v) prev = a;
    }
  }
  return {prev, next};
}

int DynamicMesh::add_vertex(const Vec3& x) {
  pos.push_back(x);
  vertex_alive.push_back(true);
  vertex_faces_.emplace_back();
  return static_cast<int>(pos.size()) - 1;
}

int DynamicMesh::add_face(const Tri& t, int face_tag) {
  faces.push_back(t);
  tag.push_back(face_tag);
  face_alive.push_back(true);
  attach(static_cast<int>(faces.size()) - 1);
  return static_cast<int>(faces.size()) - 1;
}

void DynamicMesh::replace_face(int f, const Tri& t) {
  detach(f);
  faces[f] = t;
  attach(f);
}

void DynamicMesh::remove_face(int f) {
  detach(f);
  face_alive[f] = false;
}

void DynamicMesh::attach(int f) {
  for (int k = 0; k < 3; ++k) {
    edge_faces_[edge_key(faces[f][k], faces[f][(k + 1) % 3])].push_back(f);
    vertex_faces_[faces[f][k]].push_back(f);
  }
}

void DynamicMesh::detach(int f) {
  for (int k = 0; k < 3; ++k) {
    const auto key = edge_key(faces[f][k], faces[f][(k + 1) % 3]);
    auto it = edge_faces_.find(key);
    auto& list = it->second;
    list.erase(std::find(list.begin(), list.end(), f));
    if (list.empty()) edge_faces_.erase(it);
    auto& vf = vertex_faces_[faces[f][k]];
    vf.erase(std::find(vf.begin(), vf.end(), f));
  }
}

int DynamicMesh::split_edge(int a, int b, double s) {
  const auto key = edge_key(a, b);
  const std::vector<int> adjacent = faces_of_edge(a, b);
  if (adjacent.empty()) throw Error(ErrorCode::invalid_argument, "split of a missing edge");
  const int m = add_vertex(pos[a] + s * (pos[b] - pos[a]));
  for (int f : adjacent) {
    const Tri t = faces[f];
    int k = 0;
    while (edge_key(t[k], t[(k + 1) % 3]) != key) ++k;
    const int u = t[k], w = t[(k + 1) % 3], opp = t[(k + 2) % 3];
    replace_face(f, {u, m, opp});
    add_face({m, w, opp}, tag[f]);
  }
  return m;
}

int DynamicMesh::split_face(int f, const Vec3& x) {
  const auto [a, b, c] = faces[f];
  const int m = add_vertex(x);
  replace_face(f, {a, b, m});
  add_face({b, c, m}, tag[f]);
  add_face({c, a, m}, tag[f]);
  return m;
}

void DynamicMesh::collapse(int from, int to) {
  const std::vector<int> shared = faces_of_edge(from, to);
  for (int f : shared) remove_face(f);
  const std::vector<int> around = vertex_faces_[from];
  for (int f : around) {
    Tri t = faces[f];
    for (int& x : t)
      if (x == from) x = to;
    replace_face(f, t);
  }
  vertex_alive[from] = false;
}

void DynamicMesh::flip(int a, int b) {
  const std::vector<int> adjacent = faces_of_edge(a, b);
  if (adjacent.size() != 2) throw Error(ErrorCode::invalid_argument, "flip of a boundary edge");
  int f1 = adjacent[0], f2 = adjacent[1];
  // Orient so that f1 contains the directed edge a->b.
  auto has_directed = [&](int f, int u, int w) {
    for (int k = 0; k < 3; ++k)
      if (faces[f][k] == u && faces[f][(k + 1) % 3] == w) return true;
    return false;
  };
  if (!has_directed(f1, a, b)) std::swap(f1, f2);
  auto opposite = [&](int f) {
    for (int x : faces[f])
      if (x != a && x != b) return x;
    return -1;
  };
  const int c = opposite(f1), d = opposite(f2);
  replace_face(f1, {c, a, d});
  replace_face(f2, {d, b, c});
}

TriangleMesh DynamicMesh::compact(std::vector<int>* vertex_map,
                                  std::vector<int>* face_tags) const {
  std::vector<int> remap(pos.size(), -1);
  std::vector<int> used;
  for (std::size_t f = 0; f < faces.size(); ++f)
    if (face_alive[f])
      for (int x : faces[f]) remap[x] = 0;
  for (std::size_t v = 0; v < pos.size(); ++v)
    if (remap[v] == 0) {
      remap[v] = static_cast<int>(used.size());
      used.push_back(static_cast<int>(v));
    }
  TriangleMesh out;
  out.V.resize(static_cast<Eigen::Index>(used.size()), 3);
  for (std::size_t i = 0; i < used.size(); ++i) out.V.row(i) = pos[used[i]].transpose();
  const auto live = std::count(face_alive.begin(), face_alive.end(), true);
  out.F.resize(live, 3);
  if (face_tags) face_tags->clear();
  Eigen::Index row = 0;
  for (std::size_t f = 0; f < faces.size(); ++f) {
    if (!face_alive[f]) continue;
    for (int k = 0; k < 3; ++k) out.F(row, k) = remap[faces[f][k]];
    if (face_tags) face_tags->push_back(tag[f]);
    ++row;
  }
  if (vertex_map) *vertex_map = std::move(used);
  return out;
}

}  // namespace drape::detail
