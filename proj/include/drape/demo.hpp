#pragma once

#include <string>

#include "drape/project.hpp"

namespace drape {

// Straight and bent (90 degrees at the elbow) capped tube standing in for an
// arm, 0.6 m long with radius 0.045 m.
PoseSet demo_arm_poses();

// Sleeve design on the demo arm: two boundary loops, the region between
// them remeshed to `target_edge`, both hems pinned, then one adaptation over
// the straight-to-bent schedule.
Project demo_project(double target_edge = 0.02);

// Writes straight.obj, bent.obj, poses.json and project.json into `dir` and
// returns the project path.
std::string write_demo(const std::string& dir, double target_edge = 0.02);

}  // namespace drape
