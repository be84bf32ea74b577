#pragma once

#include <functional>
#include <vector>

#include "drape/cloth.hpp"
#include "drape/garment_state.hpp"
#include "drape/pose.hpp"

namespace drape {

// F maps the rest triangle's 2D edge matrix onto the simulated one,
// F = U diag(sigma) V^T with U, V proper rotations and sigma_1 >= sigma_2 >= 0.
struct DeformationGradient {
  Mat2 F = Mat2::Identity();
  Mat2 U = Mat2::Identity();
  Mat2 V = Mat2::Identity();
  Vec2 sigma = Vec2::Ones();
};

// Throws Error(orientation) for reflecting maps.
DeformationGradient decompose_gradient(const Mat2& F);
// Triangles are given as columns of corner positions. Throws
// Error(degenerate_triangle) for a zero-area rest triangle.
DeformationGradient deformation_gradient(const Mat3& rest_tri, const Mat3& sim_tri);

double stretch_measure(const Vec2& sigma);

// Caps every principal stretch at 1 + delta. Compression is left alone, and
// when nothing exceeds the cap the input is returned unchanged.
DeformationGradient clip_gradient(const DeformationGradient& g, double delta);

// Rest edge matrix the simulated triangle would have under the clipped
// gradient: Fbar^-1 P_sim, with zero singular values pseudo-inverted.
Mat2 target_rest_triangle(const DeformationGradient& clipped, const Mat2& sim_edges);
Mat2 target_rest_triangle(const DeformationGradient& clipped, const Mat3& sim_tri);

struct ArapResult {
  TriangleMesh mesh;
  int iterations = 0;
  bool converged = false;
  std::vector<double> energy;  // after each local step
  double residual = 0.0;       // sqrt(energy / weighted target size)
};

// Stitches per-face 2D target shapes into one consistent mesh by alternating
// best-fit rotations and a cotangent-weighted Poisson solve. `fixed` vertices
// keep their positions; every connected component without one is anchored at
// its lowest-index vertex. Stops when the energy changes by less than
// `tolerance` relative or after `max_iterations`.
ArapResult arap_stitch(const TriangleMesh& rest, const std::vector<Mat2>& targets,
                       const std::vector<int>& fixed = {}, int max_iterations = 100,
                       double tolerance = 1e-6);

struct AdaptReport {
  int pass = 0;
  ScheduleEntry pose;
  double max_stretch_before = 1.0;  // largest sigma_1 before clipping
  double max_stretch_after = 1.0;   // largest clipped sigma
  double max_stretch_stitched = 1.0;  // largest sigma_1 against the stitched rest shape
  int clipped = 0;
  int skipped = 0;  // inverted or degenerate triangles left alone
  int arap_iterations = 0;
  double arap_residual = 0.0;
  bool arap_converged = true;
  bool operator==(const AdaptReport&) const = default;
};

// Per-face largest principal stretch of the simulation mesh against the rest
// mesh. Degenerate faces report 0.
Eigen::VectorXd principal_stretch(const GarmentState& garment);

// Clips every over-stretched triangle and re-stitches the rest shape with
// the pinned vertices held in place.
AdaptReport adapt_pass(GarmentState& garment, const SimParams& params);

struct AdaptationResult {
  std::vector<AdaptReport> reports;
  bool converged = false;
  int steps = 0;
};

// Called after every pass with the current garment; returning false stops
// the run early (reported as not converged).
using PassObserver = std::function<bool(const GarmentState&, const AdaptReport&)>;

// Walks the schedule advancing the body one entry per pass (adapt_every
// simulation steps followed by adapt_pass), then keeps simulating and
// adapting on the last body until clean_passes consecutive passes stay within
// 1 + delta + clean_tolerance or settle_budget passes are spent.
AdaptationResult run_adaptation(GarmentState& garment, const PoseSet& poses,
                                const PoseSchedule& schedule, const SimParams& params,
                                const PassObserver& observer = {});

}  // namespace drape
