#include "drape/geometry.hpp"

#include <algorithm>
#include <array>
#include <numeric>

#include "drape/error.hpp"

namespace drape {

Vec3 vector_area(std::span<const Vec3> loop) {
  if (loop.size() < 3)
    throw Error(ErrorCode::invalid_argument, "vector area needs at least 3 points");
  // Summing relative to the first point keeps the result translation
  // invariant in floating point as well as in exact arithmetic.
  const Vec3& o = loop[0];
  Vec3 a = Vec3::Zero();
  for (std::size_t i = 0; i < loop.size(); ++i) {
    const Vec3 p = loop[i] - o;
    const Vec3 q = loop[(i + 1) % loop.size()] - o;
    a += p.cross(q);
  }
  return 0.5 * a;
}

Vec3 vector_area(const Eigen::MatrixX3d& loop) {
  std::vector<Vec3> pts(loop.rows());
  for (Eigen::Index i = 0; i < loop.rows(); ++i) pts[i] = loop.row(i).transpose();
  return vector_area(std::span<const Vec3>(pts));
}

Eigen::Matrix<double, 3, 2> local_frame_basis(const Vec3& x0, const Vec3& x1,
                                              const Vec3& x2) {
  const Vec3 e1 = x1 - x0;
  const Vec3 e2 = x2 - x0;
  const Vec3 n = e1.cross(e2);
  const double l1 = e1.norm();
  const double nn = n.norm();
  if (l1 <= 0.0 || nn <= 1e-14 * l1 * e2.norm() || nn == 0.0)
    throw Error(ErrorCode::degenerate_triangle, "degenerate triangle");
  Eigen::Matrix<double, 3, 2> b;
  b.col(0) = e1 / l1;
  b.col(1) = n.cross(e1).normalized();
  return b;
}

Mat2 local_frame_2d(const Vec3& x0, const Vec3& x1, const Vec3& x2) {
  const auto b = local_frame_basis(x0, x1, x2);
  Mat2 p;
  p.col(0) = Vec2((x1 - x0).norm(), 0.0);
  p.col(1) = b.transpose() * (x2 - x0);
  return p;
}

Mat2 local_frame_2d(const Mat3& corners) {
  return local_frame_2d(corners.col(0), corners.col(1), corners.col(2));
}

ClosestPoint closest_point_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b,
                                       const Vec3& c) {
  // Region classification after Ericson, Real-Time Collision Detection 5.1.5.
  auto make = [&](double u, double v, double w) {
    ClosestPoint r;
    r.bary = Vec3(u, v, w);
    r.point = u * a + v * b + w * c;
    r.sq_distance = (p - r.point).squaredNorm();
    return r;
  };
  const Vec3 ab = b - a, ac = c - a, ap = p - a;
  const double d1 = ab.dot(ap), d2 = ac.dot(ap);
  if (d1 <= 0 && d2 <= 0) return make(1, 0, 0);
  const Vec3 bp = p - b;
  const double d3 = ab.dot(bp), d4 = ac.dot(bp);
  if (d3 >= 0 && d4 <= d3) return make(0, 1, 0);
  const double vc = d1 * d4 - d3 * d2;
  if (vc <= 0 && d1 >= 0 && d3 <= 0) {
    const double v = d1 / (d1 - d3);
    return make(1 - v, v, 0);
  }
  const Vec3 cp = p - c;
  const double d5 = ab.dot(cp), d6 = ac.dot(cp);
  if (d6 >= 0 && d5 <= d6) return make(0, 0, 1);
  const double vb = d5 * d2 - d1 * d6;
  if (vb <= 0 && d2 >= 0 && d6 <= 0) {
    const double w = d2 / (d2 - d6);
    return make(1 - w, 0, w);
  }
  const double va = d3 * d6 - d5 * d4;
  if (va <= 0 && (d4 - d3) >= 0 && (d5 - d6) >= 0) {
    const double w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
    return make(0, 1 - w, w);
  }
  const double denom = 1.0 / (va + vb + vc);
  const double v = vb * denom, w = vc * denom;
  return make(1 - v - w, v, w);
}

TriangleTree::TriangleTree(const TriangleMesh& mesh) : V_(mesh.V), F_(mesh.F) {
  const int nf = mesh.num_faces();
  if (nf == 0) return;
  std::vector<Vec3> centroids(nf);
  for (int f = 0; f < nf; ++f)
    centroids[f] = (mesh.corner(f, 0) + mesh.corner(f, 1) + mesh.corner(f, 2)) / 3.0;
  order_.resize(nf);
  std::iota(order_.begin(), order_.end(), 0);
  nodes_.reserve(2 * nf / 4 + 8);
  build(0, nf, centroids, 0);
}

int TriangleTree::build(int first, int count, const std::vector<Vec3>& centroids,
                        int depth) {
  const int id = static_cast<int>(nodes_.size());
  nodes_.push_back({});
  Eigen::AlignedBox3d box;
  Eigen::AlignedBox3d cbox;
  for (int i = first; i < first + count; ++i) {
    const int f = order_[i];
    for (int k = 0; k < 3; ++k) box.extend(V_.row(F_(f, k)).transpose().eval());
    cbox.extend(centroids[f]);
  }
  nodes_[id].box = box;
  nodes_[id].first = first;
  nodes_[id].count = count;
  if (count <= 4 || depth > 60) return id;

  int axis = 0;
  cbox.sizes().maxCoeff(&axis);
  const int mid = first + count / 2;
  std::nth_element(order_.begin() + first, order_.begin() + mid, order_.begin() + first + count,
                   [&](int a, int b) {
                     if (centroids[a][axis] != centroids[b][axis])
                       return centroids[a][axis] < centroids[b][axis];
                     return a < b;
                   });
  const int left = build(first, mid - first, centroids, depth + 1);
  const int right = build(mid, first + count - mid, centroids, depth + 1);
  nodes_[id].left = left;
  nodes_[id].right = right;
  return id;
}

TriangleTree::Hit TriangleTree::closest(const Vec3& p) const {
  Hit best;
  best.sq_distance = std::numeric_limits<double>::infinity();
  if (nodes_.empty()) return best;
  std::array<int, 128> stack;
  int top = 0;
  stack[top++] = 0;
  while (top > 0) {
    const Node& node = nodes_[stack[--top]];
    if (node.box.squaredExteriorDistance(p) >= best.sq_distance) continue;
    if (node.left < 0) {
      for (int i = node.first; i < node.first + node.count; ++i) {
        const int f = order_[i];
        const auto cp = closest_point_on_triangle(p, V_.row(F_(f, 0)).transpose(),
                                                  V_.row(F_(f, 1)).transpose(),
                                                  V_.row(F_(f, 2)).transpose());
        // Ties resolve to the lowest face index so results are reproducible.
        if (cp.sq_distance < best.sq_distance ||
            (cp.sq_distance == best.sq_distance && f < best.face)) {
          best.face = f;
          best.bary = cp.bary;
          best.point = cp.point;
          best.sq_distance = cp.sq_distance;
        }
      }
      continue;
    }
    const double dl = nodes_[node.left].box.squaredExteriorDistance(p);
    const double dr = nodes_[node.right].box.squaredExteriorDistance(p);
    // Push the farther child first so the nearer one is explored first.
    if (dl < dr) {
      stack[top++] = node.right;
      stack[top++] = node.left;
    } else {
      stack[top++] = node.left;
      stack[top++] = node.right;
    }
  }
  return best;
}

}  // namespace drape
