#include "drape/sdf.hpp"

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <limits>

#include "drape/error.hpp"
#include "drape/geometry.hpp"
#include "drape/log.hpp"
#include "drape/topology.hpp"

namespace drape {

SignedDistanceField::SignedDistanceField(Vec3 origin, double cell, std::array<int, 3> dims,
                                         std::vector<float> values)
    : origin_(std::move(origin)), cell_(cell), dims_(dims), values_(std::move(values)) {
  const std::size_t expected = static_cast<std::size_t>(dims[0]) * dims[1] * dims[2];
  if (cell <= 0.0 || dims[0] < 2 || dims[1] < 2 || dims[2] < 2 || values_.size() != expected)
    throw Error(ErrorCode::invalid_argument, "inconsistent signed distance grid");
}

bool SignedDistanceField::contains(const Vec3& p) const {
  for (int a = 0; a < 3; ++a) {
    const double t = (p[a] - origin_[a]) / cell_;
    if (t < 0.0 || t > dims_[a] - 1) return false;
  }
  return true;
}

double SignedDistanceField::distance(const Vec3& p) const {
  // Outside the grid the distance is extended by the offset to the nearest
  // grid point, which bounds the true distance from above.
  Vec3 q;
  double outside = 0.0;
  int base[3];
  double frac[3];
  for (int a = 0; a < 3; ++a) {
    const double hi = origin_[a] + cell_ * (dims_[a] - 1);
    q[a] = std::clamp(p[a], origin_[a], hi);
    double t = (q[a] - origin_[a]) / cell_;
    // Node positions come back through origin + cell * i with rounding.
    if (std::abs(t - std::round(t)) < 1e-9) t = std::round(t);
    int i = static_cast<int>(std::floor(t));
    i = std::clamp(i, 0, dims_[a] - 2);
    base[a] = i;
    frac[a] = t - i;
  }
  outside = (p - q).norm();
  const auto [i, j, k] = base;
  const double fx = frac[0], fy = frac[1], fz = frac[2];
  const double c00 = node(i, j, k) * (1 - fx) + node(i + 1, j, k) * fx;
  const double c10 = node(i, j + 1, k) * (1 - fx) + node(i + 1, j + 1, k) * fx;
  const double c01 = node(i, j, k + 1) * (1 - fx) + node(i + 1, j, k + 1) * fx;
  const double c11 = node(i, j + 1, k + 1) * (1 - fx) + node(i + 1, j + 1, k + 1) * fx;
  const double c0 = c00 * (1 - fy) + c10 * fy;
  const double c1 = c01 * (1 - fy) + c11 * fy;
  return c0 * (1 - fz) + c1 * fz + outside;
}

SignedDistanceField::Sample SignedDistanceField::query(const Vec3& p, bool warn_on_clamp) const {
  Sample s;
  s.clamped = !contains(p);
  if (s.clamped && warn_on_clamp)
    log::warn("signed distance query ({:.4f}, {:.4f}, {:.4f}) outside the grid; clamped",
              p[0], p[1], p[2]);
  s.distance = distance(p);
  const double h = 0.5 * cell_;
  for (int a = 0; a < 3; ++a) {
    Vec3 lo = p, hi = p;
    lo[a] -= h;
    hi[a] += h;
    s.gradient[a] = (distance(hi) - distance(lo)) / (2.0 * h);
  }
  const double len = s.gradient.norm();
  if (len > 0.0) s.gradient /= len;
  return s;
}

namespace {

constexpr char kMagic[4] = {'G', 'F', 'S', 'D'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void write_le(std::ostream& out, T value) {
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  out.write(reinterpret_cast<const char*>(bytes), sizeof(T));
}

template <typename T>
T read_le(std::istream& in) {
  unsigned char bytes[sizeof(T)];
  in.read(reinterpret_cast<char*>(bytes), sizeof(T));
  if (!in) throw Error(ErrorCode::io, "truncated signed distance file");
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  T value;
  std::memcpy(&value, bytes, sizeof(T));
  return value;
}

}  // namespace

void SignedDistanceField::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::io, "cannot write " + path);
  out.write(kMagic, 4);
  write_le<std::uint32_t>(out, kVersion);
  for (int a = 0; a < 3; ++a) write_le<double>(out, origin_[a]);
  write_le<double>(out, cell_);
  for (int a = 0; a < 3; ++a) write_le<std::uint32_t>(out, static_cast<std::uint32_t>(dims_[a]));
  for (float v : values_) write_le<float>(out, v);
}

SignedDistanceField SignedDistanceField::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::io, "cannot read " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0)
    throw Error(ErrorCode::io, path + " is not a signed distance cache");
  const auto version = read_le<std::uint32_t>(in);
  if (version != kVersion)
    throw Error(ErrorCode::schema, "signed distance cache version " + std::to_string(version) +
                                       ", expected " + std::to_string(kVersion));
  Vec3 origin;
  for (int a = 0; a < 3; ++a) origin[a] = read_le<double>(in);
  const double cell = read_le<double>(in);
  std::array<int, 3> dims;
  for (int a = 0; a < 3; ++a) dims[a] = static_cast<int>(read_le<std::uint32_t>(in));
  std::vector<float> values(static_cast<std::size_t>(dims[0]) * dims[1] * dims[2]);
  for (float& v : values) v = read_le<float>(in);
  return SignedDistanceField(origin, cell, dims, std::move(values));
}

namespace {

// Orientation test with deterministic tie-breaking so a ray through a shared
// edge or vertex is counted exactly once (Batty's SDFGen convention).
int orientation(double x1, double y1, double x2, double y2, double& twice_area) {
  twice_area = y1 * x2 - x1 * y2;
  if (twice_area > 0) return 1;
  if (twice_area < 0) return -1;
  if (y2 > y1) return 1;
  if (y2 < y1) return -1;
  if (x1 > x2) return 1;
  if (x1 < x2) return -1;
  return 0;
}

bool point_in_triangle_2d(double x0, double y0, double x1, double y1, double x2, double y2,
                          double x3, double y3, double& a, double& b, double& c,
                          int& sign) {
  x1 -= x0; x2 -= x0; x3 -= x0;
  y1 -= y0; y2 -= y0; y3 -= y0;
  const int sa = orientation(x2, y2, x3, y3, a);
  if (sa == 0) return false;
  const int sb = orientation(x3, y3, x1, y1, b);
  if (sb != sa) return false;
  const int sc = orientation(x1, y1, x2, y2, c);
  if (sc != sa) return false;
  const double sum = a + b + c;
  if (sum == 0.0) return false;
  a /= sum;
  b /= sum;
  c /= sum;
  sign = sa;
  return true;
}

}  // namespace

SignedDistanceField build_sdf(const TriangleMesh& mesh, int resolution) {
  if (resolution < 2) throw Error(ErrorCode::invalid_argument, "sdf resolution below 2");
  if (mesh.num_faces() == 0) throw Error(ErrorCode::invalid_mesh, "empty mesh");
  {
    const MeshTopology topo(mesh);
    const int boundary = topo.num_boundary_edges();
    if (boundary > 0.05 * static_cast<double>(topo.edges.size()))
      throw Error(ErrorCode::open_mesh,
                  "mesh has " + std::to_string(boundary) + " boundary edges; sign undefined");
    if (boundary > 0) log::warn("sdf source mesh has {} boundary edges", boundary);
  }

  const Vec3 lo = mesh.V.colwise().minCoeff().transpose();
  const Vec3 hi = mesh.V.colwise().maxCoeff().transpose();
  const double extent = (hi - lo).maxCoeff();
  const double pad = 0.1 * extent;
  const Vec3 origin = lo - Vec3::Constant(pad);
  const double cell = (extent + 2 * pad) / resolution;
  std::array<int, 3> dims;
  for (int a = 0; a < 3; ++a)
    dims[a] = static_cast<int>(std::ceil((hi[a] - lo[a] + 2 * pad) / cell - 1e-9)) + 1;
  const int ni = dims[0], nj = dims[1], nk = dims[2];
  const std::size_t total = static_cast<std::size_t>(ni) * nj * nk;
  auto index = [&](int i, int j, int k) {
    return static_cast<std::size_t>(i) +
           static_cast<std::size_t>(ni) * (static_cast<std::size_t>(j) +
                                           static_cast<std::size_t>(nj) * k);
  };

  std::vector<double> phi(total, std::numeric_limits<double>::max());
  std::vector<int> closest(total, -1);
  auto node_pos = [&](int i, int j, int k) { return Vec3(origin + cell * Vec3(i, j, k)); };
  auto tri_distance = [&](const Vec3& p, int f) {
    return std::sqrt(closest_point_on_triangle(p, mesh.corner(f, 0), mesh.corner(f, 1),
                                               mesh.corner(f, 2))
                         .sq_distance);
  };

  // Exact distances in a one-cell band around every triangle, plus signed
  // crossing counts of +x rays through the nodes.
  std::vector<int> crossings(total, 0);
  for (int f = 0; f < mesh.num_faces(); ++f) {
    const Vec3 a = mesh.corner(f, 0), b = mesh.corner(f, 1), c = mesh.corner(f, 2);
    const Vec3 fa = (a - origin) / cell, fb = (b - origin) / cell, fc = (c - origin) / cell;
    int lo_idx[3], hi_idx[3];
    for (int ax = 0; ax < 3; ++ax) {
      const double mn = std::min({fa[ax], fb[ax], fc[ax]});
      const double mx = std::max({fa[ax], fb[ax], fc[ax]});
      lo_idx[ax] = std::clamp(static_cast<int>(std::floor(mn)) - 1, 0, dims[ax] - 1);
      hi_idx[ax] = std::clamp(static_cast<int>(std::ceil(mx)) + 1, 0, dims[ax] - 1);
    }
    for (int k = lo_idx[2]; k <= hi_idx[2]; ++k)
      for (int j = lo_idx[1]; j <= hi_idx[1]; ++j)
        for (int i = lo_idx[0]; i <= hi_idx[0]; ++i) {
          const double d = tri_distance(node_pos(i, j, k), f);
          const std::size_t id = index(i, j, k);
          if (d < phi[id] || (d == phi[id] && f < closest[id])) {
            phi[id] = d;
            closest[id] = f;
          }
        }

    const int j0 = std::max(0, static_cast<int>(std::ceil(std::min({fa[1], fb[1], fc[1]}))));
    const int j1 = std::min(nj - 1, static_cast<int>(std::floor(std::max({fa[1], fb[1], fc[1]}))));
    const int k0 = std::max(0, static_cast<int>(std::ceil(std::min({fa[2], fb[2], fc[2]}))));
    const int k1 = std::min(nk - 1, static_cast<int>(std::floor(std::max({fa[2], fb[2], fc[2]}))));
    for (int k = k0; k <= k1; ++k)
      for (int j = j0; j <= j1; ++j) {
        double wa, wb, wc;
        int sign = 0;
        if (!point_in_triangle_2d(j, k, fa[1], fa[2], fb[1], fb[2], fc[1], fc[2], wa, wb, wc,
                                  sign))
          continue;
        const double x = wa * fa[0] + wb * fb[0] + wc * fc[0];
        const int i_cross = static_cast<int>(std::ceil(x));
        // A ray travelling along +x enters the solid through faces whose
        // normal has a negative x component.
        const int contribution = sign > 0 ? -1 : 1;
        if (i_cross < 0) crossings[index(0, j, k)] += contribution;
        else if (i_cross < ni) crossings[index(i_cross, j, k)] += contribution;
      }
  }

  // Fast sweeping propagates the closest triangle to the rest of the grid.
  auto check = [&](int i, int j, int k, int i1, int j1, int k1) {
    const int f = closest[index(i1, j1, k1)];
    const std::size_t id = index(i, j, k);
    if (f < 0 || f == closest[id]) return;
    const double d = tri_distance(node_pos(i, j, k), f);
    if (d < phi[id]) {
      phi[id] = d;
      closest[id] = f;
    }
  };
  auto sweep = [&](int di, int dj, int dk) {
    const int i0 = di > 0 ? 1 : ni - 2, i1 = di > 0 ? ni : -1;
    const int j0 = dj > 0 ? 1 : nj - 2, jn = dj > 0 ? nj : -1;
    const int k0 = dk > 0 ? 1 : nk - 2, kn = dk > 0 ? nk : -1;
    for (int k = k0; k != kn; k += dk)
      for (int j = j0; j != jn; j += dj)
        for (int i = i0; i != i1; i += di) {
          check(i, j, k, i - di, j, k);
          check(i, j, k, i, j - dj, k);
          check(i, j, k, i - di, j - dj, k);
          check(i, j, k, i, j, k - dk);
          check(i, j, k, i - di, j, k - dk);
          check(i, j, k, i, j - dj, k - dk);
          check(i, j, k, i - di, j - dj, k - dk);
        }
  };
  // One round of the eight orderings; a second round changes values by a
  // few hundredths of a cell on limb-sized meshes.
  sweep(+1, +1, +1);
  sweep(-1, -1, -1);
  sweep(+1, +1, -1);
  sweep(-1, -1, +1);
  sweep(+1, -1, +1);
  sweep(-1, +1, -1);
  sweep(+1, -1, -1);
  sweep(-1, +1, +1);

  std::vector<float> values(total);
  for (int k = 0; k < nk; ++k)
    for (int j = 0; j < nj; ++j) {
      int winding = 0;
      for (int i = 0; i < ni; ++i) {
        const std::size_t id = index(i, j, k);
        winding += crossings[id];
        const double d = phi[id];
        values[id] = static_cast<float>(winding != 0 ? -d : d);
      }
    }
  return SignedDistanceField(origin, cell, dims, std::move(values));
}

}  // namespace drape
