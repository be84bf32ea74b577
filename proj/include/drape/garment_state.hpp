#pragma once

#include <map>
#include <vector>

#include "drape/mesh.hpp"

namespace drape {

// Rest shape plus simulation state of one garment. `rest` and `sim` share the
// face list; pins map garment vertices to points on the avatar.
struct GarmentState {
  TriangleMesh rest;
  TriangleMesh sim;
  Eigen::MatrixX3d velocities;
  std::map<int, SurfacePoint> pins;
  Eigen::VectorXd paint_factors;
  double comfort_offset = 0.0;
  std::vector<BarycentricPolyline> seams;

  int num_vertices() const { return rest.num_vertices(); }
  int num_faces() const { return rest.num_faces(); }
  bool is_pinned(int v) const { return pins.count(v) > 0; }
};

// Fresh garment whose simulation mesh equals the rest mesh, at rest.
GarmentState make_garment(TriangleMesh rest);

}  // namespace drape
