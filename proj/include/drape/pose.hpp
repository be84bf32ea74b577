#pragma once

#include <map>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/SparseCholesky>

#include "drape/mesh.hpp"

namespace drape {

// Avatar meshes in full vertex and face correspondence.
struct PoseSet {
  std::vector<TriangleMesh> poses;
  std::vector<std::string> names;
  int steps_per_transition = 60;

  int size() const { return static_cast<int>(poses.size()); }
};

struct ScheduleEntry {
  int a = 0;
  int b = 0;
  double t = 0.0;
  bool operator==(const ScheduleEntry&) const = default;
};

struct PoseSchedule {
  std::vector<ScheduleEntry> entries;
  int steps_per_transition = 60;
};

// Throws Error(pose_mismatch) naming the first pair of poses whose vertex
// count or face list differ.
PoseSet validate_pose_set(std::vector<TriangleMesh> meshes,
                          std::vector<std::string> names = {}, int steps_per_transition = 60);

// Concatenated transitions between consecutive poses of `order`, sampling
// t = k / steps for k = 1..steps. A single pose gives one static entry.
PoseSchedule make_schedule(const PoseSet& poses, const std::vector<int>& order);

// Manifest: {"poses": [{"name": ..., "obj": ...}, ...], "steps_per_transition": n}
// with OBJ paths relative to the manifest.
PoseSet load_pose_manifest(const std::string& path);

// Gradient-domain morph between two corresponding meshes. Per-face
// deformation gradients are split into rotation and stretch; the rotation is
// interpolated along its geodesic and the stretch linearly, then positions are
// recovered by a Poisson solve anchored at one vertex. The Poisson matrix is
// factored once, so evaluating many t values is cheap.
class PoseInterpolator {
 public:
  PoseInterpolator(const TriangleMesh& source, const TriangleMesh& target);

  TriangleMesh at(double t) const;

  const TriangleMesh& source() const { return source_; }
  const TriangleMesh& target() const { return target_; }

 private:
  TriangleMesh source_;
  TriangleMesh target_;
  int anchor_ = 0;
  std::vector<Eigen::Vector3d> axis_;
  std::vector<double> angle_;
  std::vector<Mat3> stretch_;
  std::vector<Mat3> tangent_projector_;
  std::vector<Eigen::Matrix3d> grad_basis_;  // columns: gradients of the hat functions
  std::vector<double> area_;
  std::vector<int> reduced_index_;
  std::shared_ptr<Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>>> solver_;
};

// Convenience wrapper constructing a PoseInterpolator for one evaluation.
// t outside [0,1] is clamped with a warning.
TriangleMesh interpolate_poses(const TriangleMesh& source, const TriangleMesh& target,
                               double t);

// Evaluates schedule entries, caching one interpolator per ordered pose pair.
class PoseAnimator {
 public:
  explicit PoseAnimator(const PoseSet& poses);
  TriangleMesh evaluate(const ScheduleEntry& entry);

 private:
  const PoseSet& poses_;
  std::map<std::pair<int, int>, std::unique_ptr<PoseInterpolator>> cache_;
};

// Number of intersecting face pairs that share no vertex. Faces are bucketed
// on a uniform grid; meshes above `max_faces` are checked on every k-th face.
int count_self_intersections(const TriangleMesh& mesh, int max_faces = 4000);

}  // namespace drape
