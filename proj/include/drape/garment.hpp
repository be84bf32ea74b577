#pragma once

#include <optional>
#include <vector>

#include "drape/garment_state.hpp"
#include "drape/mesh.hpp"
#include "drape/pose.hpp"

namespace drape {

struct DesignSession {
  PoseSet poses;
  int active_pose = 0;
  std::vector<BarycentricPolyline> boundaries;  // closed loops on the avatar
  std::optional<GarmentState> garment;

  const TriangleMesh& active_mesh() const { return poses.poses.at(active_pose); }
  GarmentState& require_garment();
};

void set_active_pose(DesignSession& session, int pose);

// Closed loop through the clicked avatar vertices: shortest edge paths
// between consecutive clicks (last back to first), then smoothed. Returns the
// index of the new boundary.
int boundary_create(DesignSession& session, const std::vector<int>& clicked_vertices,
                    int smoothing_iterations = 10);

// Cuts the region containing `seed` out of the active pose along the session
// boundaries and remeshes it to `target_edge`. Replaces any existing garment.
GarmentState& garment_from_region(DesignSession& session, int seed, double target_edge);

// Extends the garment past boundary loop `loop_index` (in the order of
// MeshTopology::boundary_loops) so that the new hem passes through the axial
// plane of `target_point`. The radial scale is the ratio of the target's
// distance from the loop axis to the loop's mean radius; targets on the axis
// keep the radius. Throws Error(invalid_argument) for targets behind the hem.
void garment_extend(GarmentState& garment, int loop_index, const Vec3& target_point);

// Per-face weights in [0,1]; painted faces are enlarged by
// 1 + weight * (max_scale - 1) and the rest shape re-stitched around them.
void garment_paint(GarmentState& garment, const Eigen::VectorXd& weights, double max_scale = 1.5);

// Minimum distance kept between garment and body, 0..0.1 m.
void garment_set_offset(GarmentState& garment, double distance);

// Anchors the vertices to `avatar` at the point whose offset position (along
// the smoothed normal, by the comfort offset) is closest to their current
// simulated position.
void garment_pin(GarmentState& garment, const TriangleMesh& avatar,
                 const std::vector<int>& vertices);
void garment_unpin(GarmentState& garment, const std::vector<int>& vertices);

// Cuts rest and simulation meshes along a curve on the rest mesh. Throws
// Error(self_intersection) if the curve crosses itself.
void garment_cut_seam(GarmentState& garment, const BarycentricPolyline& curve);

}  // namespace drape
