#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "drape/adapt.hpp"
#include "drape/cloth.hpp"
#include "drape/garment.hpp"
#include "drape/pose.hpp"

namespace drape {

inline constexpr int kProjectVersion = 1;

struct ExportSettings {
  bool sim_mesh = true;
  bool pieces = true;
  std::string log_name = "adapt_log.ndjson";
  bool operator==(const ExportSettings&) const = default;
};

// A replayable design: pose manifest, tool command records, simulation
// parameters, pose order and export settings.
//
// Command records are JSON objects with a "tool" field:
//   {"tool":"pose","index":i}
//   {"tool":"boundary","vertices":[v,...]}
//   {"tool":"region","seed":f,"target_edge":m}
//   {"tool":"extend","loop":i,"target":[x,y,z]}
//   {"tool":"paint","weights":[w,...]} or {"tool":"paint","faces":[f,...],"weight":w}
//       optional "max_scale" (default 1.5)
//   {"tool":"offset","distance":m}
//   {"tool":"pin","vertices":[v,...]} or {"tool":"pin","boundary_loop":i}
//   {"tool":"unpin","vertices":[v,...]}
//   {"tool":"seam","samples":[[f,b0,b1,b2],...],"closed":false}
//       or {"tool":"seam","vertices":[v,...],"closed":false} on the rest mesh
//   {"tool":"adapt"}
struct Project {
  std::string manifest;  // relative to the project file
  std::vector<nlohmann::json> commands;
  SimParams params;
  std::vector<int> schedule{0};
  ExportSettings exports;
  bool operator==(const Project&) const = default;
};

nlohmann::json params_to_json(const SimParams& params);
// Fields missing from `doc` keep their value in `params`.
void params_from_json(const nlohmann::json& doc, SimParams& params);

nlohmann::json project_to_json(const Project& project);
// Throws Error(schema) on a version mismatch (naming expected and found
// versions) or on a malformed or unknown command record (naming its index).
Project project_from_json(const nlohmann::json& doc);
Project project_load(const std::string& path);
void project_save(const Project& project, const std::string& path);

// Throws Error(schema) naming `index` when the record is not a known tool.
void validate_command(const nlohmann::json& record, int index);

nlohmann::json report_to_json(const AdaptReport& report);

// Positions, rest shape and stretch of the garment after one pass.
struct FrameSnapshot {
  int pass = -1;
  ScheduleEntry pose;
  Eigen::MatrixX3d sim;
  Eigen::MatrixX3d rest;
  Eigen::MatrixX3i faces;
  Eigen::VectorXd stretch;  // per-face stretch measure
  std::optional<AdaptReport> report;
};
FrameSnapshot make_snapshot(const GarmentState& garment, int pass, const ScheduleEntry& pose);
nlohmann::json snapshot_to_json(const FrameSnapshot& frame);
// "GFRM", u32 version, u32 pass, u32 vertex count, u32 face count, then f32
// sim positions, f32 rest positions, u32 indices and f32 per-face stretch,
// all little-endian.
std::string snapshot_to_binary(const FrameSnapshot& frame);

// Per-face stretch measure (sigma_1 - 1)^2 + (sigma_2 - 1)^2; degenerate or
// inverted faces report 0.
Eigen::VectorXd stretch_field(const GarmentState& garment);

// Session, parameters and command log of one design. Every successful
// command is appended to the log, so the log replays to the same state.
class Engine {
 public:
  Engine(PoseSet poses, SimParams params, std::vector<int> schedule);

  // Runs one command record and returns its result object. Adaptation
  // records start from the rest shape at rest, so replays do not depend on
  // interactive simulation in between.
  nlohmann::json apply(const nlohmann::json& record, const PassObserver& observer = {});

  const DesignSession& session() const { return session_; }
  DesignSession& session() { return session_; }
  const SimParams& params() const { return params_; }
  const std::vector<int>& schedule() const { return schedule_; }
  const std::vector<nlohmann::json>& log() const { return log_; }
  const std::vector<AdaptReport>& reports() const { return reports_; }
  std::optional<bool> last_converged() const { return last_converged_; }
  bool has_adapted() const { return last_converged_.has_value(); }

 private:
  nlohmann::json run_adaptation_command(const PassObserver& observer);

  DesignSession session_;
  SimParams params_;
  std::vector<int> schedule_;
  std::vector<nlohmann::json> log_;
  std::vector<AdaptReport> reports_;
  std::optional<bool> last_converged_;
};

// Loads the manifest of a project saved at `project_path`.
PoseSet load_project_poses(const Project& project, const std::string& project_path);

// Rebuilds the engine by replaying every command of the project.
Engine replay(const Project& project, const PoseSet& poses, const PassObserver& observer = {});

struct BatchResult {
  bool converged = false;
  std::vector<std::string> files;
};

// Replays the project, runs the adaptation if the log has none, and writes
// rest.obj (with a per-face "stretch" channel), sim.obj, piece_<k>.obj per
// connected component of the rest mesh, and the NDJSON pass log to
// `out_dir`.
BatchResult run_batch(const Project& project, const std::string& project_path,
                      const std::string& out_dir, const PassObserver& observer = {});

}  // namespace drape
