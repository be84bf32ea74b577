#include "drape/shapes.hpp"

#include <cmath>
#include <map>
#include <numbers>
#include <vector>

#include "drape/topology.hpp"

namespace drape::shapes {

TriangleMesh icosphere(double radius, int subdivisions, const Vec3& center) {
  const double t = (1.0 + std::sqrt(5.0)) / 2.0;
  std::vector<Vec3> v = {{-1, t, 0}, {1, t, 0}, {-1, -t, 0}, {1, -t, 0},
                         {0, -1, t}, {0, 1, t}, {0, -1, -t}, {0, 1, -t},
                         {t, 0, -1}, {t, 0, 1}, {-t, 0, -1}, {-t, 0, 1}};
  for (auto& p : v) p.normalize();
  std::vector<std::array<int, 3>> f = {
      {0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11}, {1, 5, 9}, {5, 11, 4},
      {11, 10, 2}, {10, 7, 6}, {7, 1, 8},  {3, 9, 4},  {3, 4, 2},   {3, 2, 6}, {3, 6, 8},
      {3, 8, 9},  {4, 9, 5},  {2, 4, 11}, {6, 2, 10}, {8, 6, 7},   {9, 8, 1}};
  for (int s = 0; s < subdivisions; ++s) {
    std::map<std::uint64_t, int> midpoint;
    auto mid = [&](int a, int b) {
      const auto key = edge_key(a, b);
      auto it = midpoint.find(key);
      if (it != midpoint.end()) return it->second;
      v.push_back((v[a] + v[b]).normalized());
      const int id = static_cast<int>(v.size()) - 1;
      midpoint.emplace(key, id);
      return id;
    };
    std::vector<std::array<int, 3>> next;
    next.reserve(f.size() * 4);
    for (const auto& [a, b, c] : f) {
      const int ab = mid(a, b), bc = mid(b, c), ca = mid(c, a);
      next.push_back({a, ab, ca});
      next.push_back({b, bc, ab});
      next.push_back({c, ca, bc});
      next.push_back({ab, bc, ca});
    }
    f = std::move(next);
  }
  TriangleMesh mesh;
  mesh.V.resize(static_cast<Eigen::Index>(v.size()), 3);
  for (std::size_t i = 0; i < v.size(); ++i) mesh.V.row(i) = (center + radius * v[i]).transpose();
  mesh.F.resize(static_cast<Eigen::Index>(f.size()), 3);
  for (std::size_t i = 0; i < f.size(); ++i)
    for (int k = 0; k < 3; ++k) mesh.F(i, k) = f[i][k];
  return mesh;
}

TriangleMesh grid(int nx, int ny, double sx, double sy) {
  TriangleMesh mesh;
  mesh.V.resize((nx + 1) * (ny + 1), 3);
  for (int j = 0; j <= ny; ++j)
    for (int i = 0; i <= nx; ++i)
      mesh.V.row(j * (nx + 1) + i) << sx * i / nx, sy * j / ny, 0.0;
  mesh.F.resize(2 * nx * ny, 3);
  int f = 0;
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      const int a = j * (nx + 1) + i, b = a + 1, c = a + nx + 1, d = c + 1;
      // Alternate the diagonal so the grid has no preferred direction.
      if ((i + j) % 2 == 0) {
        mesh.F.row(f++) << a, b, d;
        mesh.F.row(f++) << a, d, c;
      } else {
        mesh.F.row(f++) << a, b, c;
        mesh.F.row(f++) << b, d, c;
      }
    }
  return mesh;
}

TriangleMesh tube(double radius, double length, int around, int along) {
  TriangleMesh mesh;
  mesh.V.resize(around * (along + 1), 3);
  for (int j = 0; j <= along; ++j)
    for (int i = 0; i < around; ++i) {
      // Stagger alternate rings by half a step for near-equilateral faces.
      const double phi = 2.0 * std::numbers::pi * (i + 0.5 * (j % 2)) / around;
      mesh.V.row(j * around + i) << length * j / along, radius * std::cos(phi),
          radius * std::sin(phi);
    }
  mesh.F.resize(2 * around * along, 3);
  int f = 0;
  for (int j = 0; j < along; ++j)
    for (int i = 0; i < around; ++i) {
      const int a = j * around + i, b = j * around + (i + 1) % around;
      const int c = (j + 1) * around + i, d = (j + 1) * around + (i + 1) % around;
      if (j % 2 == 0) {
        mesh.F.row(f++) << a, b, c;
        mesh.F.row(f++) << b, d, c;
      } else {
        mesh.F.row(f++) << a, d, c;
        mesh.F.row(f++) << a, b, d;
      }
    }
  return mesh;
}

TriangleMesh capped_tube(double radius, double length, int around, int along) {
  TriangleMesh open = tube(radius, length, around, along);
  const int n = open.num_vertices();
  TriangleMesh mesh;
  mesh.V.resize(n + 2, 3);
  mesh.V.topRows(n) = open.V;
  mesh.V.row(n) << 0.0, 0.0, 0.0;
  mesh.V.row(n + 1) << length, 0.0, 0.0;
  mesh.F.resize(open.num_faces() + 2 * around, 3);
  mesh.F.topRows(open.num_faces()) = open.F;
  int f = open.num_faces();
  const int last = along * around;
  for (int i = 0; i < around; ++i) {
    mesh.F.row(f++) << n, (i + 1) % around, i;
    mesh.F.row(f++) << n + 1, last + i, last + (i + 1) % around;
  }
  return mesh;
}

TriangleMesh bend_about_joint(const TriangleMesh& straight, double joint, double half_width,
                              double angle) {
  TriangleMesh out = straight;
  if (angle == 0.0) return out;
  const double start = joint - half_width;
  const double zone = 2.0 * half_width;
  const double radius = zone / angle;  // centerline bend radius
  for (int v = 0; v < out.num_vertices(); ++v) {
    const double x = straight.V(v, 0), y = straight.V(v, 1), z = straight.V(v, 2);
    if (x <= start) continue;
    const double s = std::min(x - start, zone);
    const double phi = s / radius;
    // Arc around the center (start, radius); y measured toward the center.
    double px = start + (radius - y) * std::sin(phi);
    double py = radius - (radius - y) * std::cos(phi);
    if (x - start > zone) {
      const double rest = x - start - zone;
      px += rest * std::cos(angle);
      py += rest * std::sin(angle);
    }
    out.V.row(v) << px, py, z;
  }
  return out;
}

}  // namespace drape::shapes
