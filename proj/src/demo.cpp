#include "drape/demo.hpp"

#include <filesystem>
#include <fstream>
#include <numbers>

#include "drape/error.hpp"
#include "drape/obj_io.hpp"
#include "drape/shapes.hpp"

namespace drape {

namespace {

constexpr int kAround = 48;
constexpr int kAlong = 80;

}  // namespace

PoseSet demo_arm_poses() {
  const TriangleMesh straight = shapes::capped_tube(0.045, 0.6, kAround, kAlong);
  const TriangleMesh bent = shapes::bend_about_joint(straight, 0.3, 0.08, std::numbers::pi / 2);
  return validate_pose_set({straight, bent}, {"straight", "bent"});
}

Project demo_project(double target_edge) {
  // Rings 20 and 60 of the tube sit at x = 0.15 and x = 0.45; three clicks
  // a third of the way around each.
  auto ring = [](int j) {
    return std::vector<int>{j * kAround, j * kAround + kAround / 3, j * kAround + 2 * kAround / 3};
  };
  Project p;
  p.manifest = "poses.json";
  p.schedule = {0, 1};
  p.commands = {
      {{"tool", "boundary"}, {"vertices", ring(20)}},
      {{"tool", "boundary"}, {"vertices", ring(60)}},
      {{"tool", "region"}, {"seed", 2 * 40 * kAround}, {"target_edge", target_edge}},
      {{"tool", "pin"}, {"boundary_loop", 0}},
      {{"tool", "pin"}, {"boundary_loop", 1}},
      {{"tool", "adapt"}},
  };
  return p;
}

std::string write_demo(const std::string& dir, double target_edge) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  const PoseSet poses = demo_arm_poses();
  nlohmann::json manifest = {{"poses", nlohmann::json::array()},
                             {"steps_per_transition", poses.steps_per_transition}};
  for (int i = 0; i < poses.size(); ++i) {
    const std::string obj = poses.names[i] + ".obj";
    write_obj(poses.poses[i], (fs::path(dir) / obj).string());
    manifest["poses"].push_back({{"name", poses.names[i]}, {"obj", obj}});
  }
  const auto manifest_path = (fs::path(dir) / "poses.json").string();
  std::ofstream out(manifest_path);
  if (!out) throw Error(ErrorCode::io, "cannot write " + manifest_path);
  out << manifest.dump(2) << "\n";
  const auto project_path = (fs::path(dir) / "project.json").string();
  project_save(demo_project(target_edge), project_path);
  return project_path;
}

}  // namespace drape
