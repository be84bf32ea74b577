#pragma once

#include <span>
#include <vector>

#include <Eigen/Geometry>

#include "drape/mesh.hpp"

namespace drape {

// Half the cyclic sum of p_i x p_{i+1}. Needs at least three points.
Vec3 vector_area(std::span<const Vec3> loop);
Vec3 vector_area(const Eigen::MatrixX3d& loop);

// Edge matrix [e1 e2] of a triangle in a local orthonormal frame: e1 runs
// along the first axis and the third corner lies in the upper half plane.
// Throws Error(degenerate_triangle) for zero-area input.
Mat2 local_frame_2d(const Vec3& x0, const Vec3& x1, const Vec3& x2);
Mat2 local_frame_2d(const Mat3& corners);

// Orthonormal 3x2 basis spanning the plane used by local_frame_2d, so that
// basis * local_frame_2d(...) reproduces the 3D edge vectors.
Eigen::Matrix<double, 3, 2> local_frame_basis(const Vec3& x0, const Vec3& x1,
                                              const Vec3& x2);

struct ClosestPoint {
  Vec3 point;
  Vec3 bary;  // weights of the triangle corners
  double sq_distance = 0.0;
};

ClosestPoint closest_point_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b,
                                       const Vec3& c);

// Axis-aligned bounding-box tree over the faces of a mesh. Holds a copy of
// the geometry it was built from; queries are const and thread-safe.
class TriangleTree {
 public:
  TriangleTree() = default;
  explicit TriangleTree(const TriangleMesh& mesh);

  struct Hit {
    int face = -1;
    Vec3 bary = Vec3::Zero();
    Vec3 point = Vec3::Zero();
    double sq_distance = 0.0;
  };

  Hit closest(const Vec3& p) const;
  bool empty() const { return nodes_.empty(); }

 private:
  struct Node {
    Eigen::AlignedBox3d box;
    int left = -1, right = -1;  // children; leaves have left < 0
    int first = 0, count = 0;   // range in order_
  };

  int build(int first, int count, const std::vector<Vec3>& centroids, int depth);

  Eigen::MatrixX3d V_;
  Eigen::MatrixX3i F_;
  std::vector<int> order_;
  std::vector<Node> nodes_;
};

}  // namespace drape
