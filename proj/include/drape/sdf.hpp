#pragma once

#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "drape/mesh.hpp"

namespace drape {

// Regular grid of signed distances, negative inside. Node (i,j,k) sits at
// origin + cell * (i,j,k); values are stored with i fastest.
class SignedDistanceField {
 public:
  SignedDistanceField() = default;
  SignedDistanceField(Vec3 origin, double cell, std::array<int, 3> dims,
                      std::vector<float> values);

  const Vec3& origin() const { return origin_; }
  double cell() const { return cell_; }
  const std::array<int, 3>& dims() const { return dims_; }
  const std::vector<float>& values() const { return values_; }
  double cell_diagonal() const { return cell_ * std::sqrt(3.0); }
  bool empty() const { return values_.empty(); }

  float node(int i, int j, int k) const {
    return values_[static_cast<std::size_t>(i) +
                   static_cast<std::size_t>(dims_[0]) *
                       (static_cast<std::size_t>(j) +
                        static_cast<std::size_t>(dims_[1]) * static_cast<std::size_t>(k))];
  }
  Vec3 node_position(int i, int j, int k) const {
    return origin_ + cell_ * Vec3(i, j, k);
  }
  bool contains(const Vec3& p) const;

  // Trilinear distance; points outside the grid are clamped to it.
  double distance(const Vec3& p) const;

  struct Sample {
    double distance = 0.0;
    Vec3 gradient = Vec3::Zero();  // unit length unless the field is flat
    bool clamped = false;
  };
  // Distance plus normalized central-difference gradient of the trilinear
  // field. Clamped queries are reported through the log.
  Sample query(const Vec3& p, bool warn_on_clamp = true) const;

  // Binary cache: "GFSD", u32 version, origin 3xf64, cell f64, dims 3xu32,
  // then f32 node values, little-endian.
  void save(const std::string& path) const;
  static SignedDistanceField load(const std::string& path);

 private:
  Vec3 origin_ = Vec3::Zero();
  double cell_ = 1.0;
  std::array<int, 3> dims_{0, 0, 0};
  std::vector<float> values_;
};

// Samples the signed distance to a closed mesh on a grid with `resolution`
// cells along the longest axis of the bounding box padded by 10% per side.
// Sign comes from the winding number of the surface, accumulated from signed
// ray crossings along grid rows. Throws Error(open_mesh) when more than 5% of
// the edges are boundary edges.
SignedDistanceField build_sdf(const TriangleMesh& mesh, int resolution = 128);

}  // namespace drape
