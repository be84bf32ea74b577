#include "drape/project.hpp"

#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>

#include "drape/error.hpp"
#include "drape/log.hpp"
#include "drape/obj_io.hpp"
#include "drape/polyline.hpp"
#include "drape/topology.hpp"

namespace drape {

using nlohmann::json;

namespace {

const std::vector<std::string>& known_tools() {
  static const std::vector<std::string> tools = {"pose",  "boundary", "region", "extend",
                                                 "paint", "offset",   "pin",    "unpin",
                                                 "seam",  "adapt"};
  return tools;
}

[[noreturn]] void schema_error(int index, const std::string& what) {
  throw Error(ErrorCode::schema, "command " + std::to_string(index) + ": " + what);
}

}  // namespace

json params_to_json(const SimParams& p) {
  return {{"k_stretch", p.k_stretch},
          {"k_shear", p.k_shear},
          {"k_bend", p.k_bend},
          {"kd_stretch", p.kd_stretch},
          {"kd_shear", p.kd_shear},
          {"kd_bend", p.kd_bend},
          {"h", p.h},
          {"gravity", {p.gravity[0], p.gravity[1], p.gravity[2]}},
          {"delta", p.delta},
          {"adapt_every", p.adapt_every},
          {"steps_per_transition", p.steps_per_transition},
          {"density", p.density},
          {"sdf_resolution", p.sdf_resolution},
          {"settle_budget", p.settle_budget},
          {"clean_passes", p.clean_passes},
          {"clean_tolerance", p.clean_tolerance},
          {"solver_tolerance", p.solver_tolerance},
          {"solver_max_iterations", p.solver_max_iterations}};
}

void params_from_json(const json& doc, SimParams& p) {
  auto get = [&](const char* key, auto& field) {
    if (doc.contains(key)) doc.at(key).get_to(field);
  };
  get("k_stretch", p.k_stretch);
  get("k_shear", p.k_shear);
  get("k_bend", p.k_bend);
  get("kd_stretch", p.kd_stretch);
  get("kd_shear", p.kd_shear);
  get("kd_bend", p.kd_bend);
  get("h", p.h);
  if (doc.contains("gravity")) {
    const auto g = doc.at("gravity").get<std::vector<double>>();
    if (g.size() != 3) throw Error(ErrorCode::schema, "gravity needs three components");
    p.gravity = Vec3(g[0], g[1], g[2]);
  }
  get("delta", p.delta);
  get("adapt_every", p.adapt_every);
  get("steps_per_transition", p.steps_per_transition);
  get("density", p.density);
  get("sdf_resolution", p.sdf_resolution);
  get("settle_budget", p.settle_budget);
  get("clean_passes", p.clean_passes);
  get("clean_tolerance", p.clean_tolerance);
  get("solver_tolerance", p.solver_tolerance);
  get("solver_max_iterations", p.solver_max_iterations);
}

void validate_command(const json& record, int index) {
  if (!record.is_object() || !record.contains("tool") || !record.at("tool").is_string())
    schema_error(index, "record has no tool name");
  const auto tool = record.at("tool").get<std::string>();
  const auto& tools = known_tools();
  if (std::find(tools.begin(), tools.end(), tool) == tools.end())
    schema_error(index, "unknown tool '" + tool + "'");
  auto require = [&](const char* key) {
    if (!record.contains(key)) schema_error(index, tool + " record lacks '" + key + "'");
  };
  if (tool == "pose") require("index");
  if (tool == "boundary" || tool == "unpin") require("vertices");
  if (tool == "region") {
    require("seed");
    require("target_edge");
  }
  if (tool == "extend") {
    require("loop");
    require("target");
  }
  if (tool == "paint" && !record.contains("weights")) {
    require("faces");
    require("weight");
  }
  if (tool == "offset") require("distance");
  if (tool == "pin" && !record.contains("vertices")) require("boundary_loop");
  if (tool == "seam" && !record.contains("samples")) require("vertices");
}

json project_to_json(const Project& p) {
  return {{"version", kProjectVersion},
          {"manifest", p.manifest},
          {"commands", p.commands},
          {"params", params_to_json(p.params)},
          {"schedule", p.schedule},
          {"export",
           {{"sim_mesh", p.exports.sim_mesh},
            {"pieces", p.exports.pieces},
            {"log_name", p.exports.log_name}}}};
}

Project project_from_json(const json& doc) {
  const int found = doc.value("version", -1);
  if (found != kProjectVersion)
    throw Error(ErrorCode::schema, "project version mismatch: expected " +
                                       std::to_string(kProjectVersion) + ", found " +
                                       std::to_string(found));
  Project p;
  try {
    p.manifest = doc.at("manifest").get<std::string>();
    if (doc.contains("commands")) p.commands = doc.at("commands").get<std::vector<json>>();
    if (doc.contains("params")) params_from_json(doc.at("params"), p.params);
    if (doc.contains("schedule")) p.schedule = doc.at("schedule").get<std::vector<int>>();
    if (doc.contains("export")) {
      const auto& e = doc.at("export");
      p.exports.sim_mesh = e.value("sim_mesh", p.exports.sim_mesh);
      p.exports.pieces = e.value("pieces", p.exports.pieces);
      p.exports.log_name = e.value("log_name", p.exports.log_name);
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::schema, std::string("malformed project: ") + e.what());
  }
  for (std::size_t i = 0; i < p.commands.size(); ++i)
    validate_command(p.commands[i], static_cast<int>(i));
  validate(p.params);
  return p;
}

Project project_load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::io, "cannot read project " + path);
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::schema, "project " + path + " is not valid JSON: " + e.what());
  }
  return project_from_json(doc);
}

void project_save(const Project& project, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::io, "cannot write project " + path);
  out << project_to_json(project).dump(2) << "\n";
}

json report_to_json(const AdaptReport& r) {
  return {{"pass", r.pass},
          {"pose", {{"a", r.pose.a}, {"b", r.pose.b}, {"t", r.pose.t}}},
          {"max_stretch_before", r.max_stretch_before},
          {"max_stretch_after", r.max_stretch_after},
          {"max_stretch_stitched", r.max_stretch_stitched},
          {"clipped", r.clipped},
          {"skipped", r.skipped},
          {"arap_iterations", r.arap_iterations},
          {"arap_residual", r.arap_residual},
          {"arap_converged", r.arap_converged}};
}

Eigen::VectorXd stretch_field(const GarmentState& garment) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(garment.num_faces());
  for (int f = 0; f < garment.num_faces(); ++f) {
    try {
      out[f] = stretch_measure(
          deformation_gradient(garment.rest.triangle(f), garment.sim.triangle(f)).sigma);
    } catch (const Error&) {
      out[f] = 0.0;
    }
  }
  return out;
}

FrameSnapshot make_snapshot(const GarmentState& garment, int pass, const ScheduleEntry& pose) {
  FrameSnapshot s;
  s.pass = pass;
  s.pose = pose;
  s.sim = garment.sim.V;
  s.rest = garment.rest.V;
  s.faces = garment.rest.F;
  s.stretch = stretch_field(garment);
  return s;
}

json snapshot_to_json(const FrameSnapshot& s) {
  auto rows = [](const auto& m) {
    json out = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) out.push_back({m(i, 0), m(i, 1), m(i, 2)});
    return out;
  };
  json doc = {{"pass", s.pass},
              {"pose", {{"a", s.pose.a}, {"b", s.pose.b}, {"t", s.pose.t}}},
              {"sim", rows(s.sim)},
              {"rest", rows(s.rest)},
              {"faces", rows(s.faces)},
              {"stretch", std::vector<double>(s.stretch.data(), s.stretch.data() + s.stretch.size())}};
  if (s.report) doc["report"] = report_to_json(*s.report);
  return doc;
}

namespace {

template <typename T>
void put(std::string& out, T value) {
  static_assert(sizeof(T) == 4);
  auto bits = std::bit_cast<std::uint32_t>(value);
  if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap32(bits);
  char bytes[4];
  std::memcpy(bytes, &bits, 4);
  out.append(bytes, 4);
}

}  // namespace

std::string snapshot_to_binary(const FrameSnapshot& s) {
  std::string out = "GFRM";
  const auto nv = static_cast<std::uint32_t>(s.sim.rows());
  const auto nf = static_cast<std::uint32_t>(s.faces.rows());
  out.reserve(20 + 24 * nv + 16 * nf);
  put<std::uint32_t>(out, 1);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(std::max(s.pass, 0)));
  put<std::uint32_t>(out, nv);
  put<std::uint32_t>(out, nf);
  for (const auto* m : {&s.sim, &s.rest})
    for (std::uint32_t i = 0; i < nv; ++i)
      for (int a = 0; a < 3; ++a) put<float>(out, static_cast<float>((*m)(i, a)));
  for (std::uint32_t f = 0; f < nf; ++f)
    for (int k = 0; k < 3; ++k) put<std::uint32_t>(out, static_cast<std::uint32_t>(s.faces(f, k)));
  for (std::uint32_t f = 0; f < nf; ++f) put<float>(out, static_cast<float>(s.stretch[f]));
  return out;
}

Engine::Engine(PoseSet poses, SimParams params, std::vector<int> schedule)
    : params_(std::move(params)), schedule_(std::move(schedule)) {
  validate(params_);
  poses.steps_per_transition = params_.steps_per_transition;
  session_.poses = std::move(poses);
  make_schedule(session_.poses, schedule_);  // validates the order
}

namespace {

std::vector<int> int_list(const json& value) { return value.get<std::vector<int>>(); }

Vec3 point(const json& value) {
  const auto v = value.get<std::vector<double>>();
  if (v.size() != 3) throw Error(ErrorCode::schema, "expected a 3D point");
  return Vec3(v[0], v[1], v[2]);
}

BarycentricPolyline seam_curve(const GarmentState& garment, const json& record) {
  const bool closed = record.value("closed", false);
  if (record.contains("samples")) {
    BarycentricPolyline curve;
    curve.closed = closed;
    for (const auto& s : record.at("samples")) {
      const auto v = s.get<std::vector<double>>();
      if (v.size() != 4) throw Error(ErrorCode::schema, "seam samples are [face, b0, b1, b2]");
      curve.samples.push_back({static_cast<int>(v[0]), Vec3(v[1], v[2], v[3])});
    }
    return curve;
  }
  const auto clicks = int_list(record.at("vertices"));
  const MeshTopology topo(garment.rest);
  std::vector<int> path;
  for (std::size_t i = 0; i + 1 < clicks.size(); ++i) {
    const auto piece = shortest_edge_path(garment.rest, topo, clicks[i], clicks[i + 1]);
    path.insert(path.end(), piece.begin(), piece.end() - 1);
  }
  if (!clicks.empty()) path.push_back(clicks.back());
  if (closed && path.size() > 1 && path.front() == path.back()) path.pop_back();
  return polyline_from_vertices(garment.rest, topo, path, closed);
}

}  // namespace

json Engine::apply(const json& record, const PassObserver& observer) {
  validate_command(record, static_cast<int>(log_.size()));
  const auto tool = record.at("tool").get<std::string>();
  json result = json::object();
  try {
    if (tool == "pose") {
      set_active_pose(session_, record.at("index").get<int>());
    } else if (tool == "boundary") {
      result["boundary"] = boundary_create(session_, int_list(record.at("vertices")));
    } else if (tool == "region") {
      const auto& g = garment_from_region(session_, record.at("seed").get<int>(),
                                          record.at("target_edge").get<double>());
      result["vertices"] = g.num_vertices();
      result["faces"] = g.num_faces();
    } else if (tool == "extend") {
      auto& g = session_.require_garment();
      garment_extend(g, record.at("loop").get<int>(), point(record.at("target")));
      result["vertices"] = g.num_vertices();
      result["faces"] = g.num_faces();
    } else if (tool == "paint") {
      auto& g = session_.require_garment();
      Eigen::VectorXd weights = Eigen::VectorXd::Zero(g.num_faces());
      if (record.contains("weights")) {
        const auto w = record.at("weights").get<std::vector<double>>();
        if (static_cast<int>(w.size()) != g.num_faces())
          throw Error(ErrorCode::invalid_argument, "paint needs one weight per face");
        weights = Eigen::Map<const Eigen::VectorXd>(w.data(), static_cast<Eigen::Index>(w.size()));
      } else {
        const double w = record.at("weight").get<double>();
        for (int f : int_list(record.at("faces"))) {
          if (f < 0 || f >= g.num_faces())
            throw Error(ErrorCode::invalid_argument, "painted face out of range");
          weights[f] = w;
        }
      }
      garment_paint(g, weights, record.value("max_scale", 1.5));
    } else if (tool == "offset") {
      garment_set_offset(session_.require_garment(), record.at("distance").get<double>());
    } else if (tool == "pin") {
      auto& g = session_.require_garment();
      std::vector<int> vertices;
      if (record.contains("vertices")) {
        vertices = int_list(record.at("vertices"));
      } else {
        const auto loops = MeshTopology(g.rest).boundary_loops(g.rest);
        const int i = record.at("boundary_loop").get<int>();
        if (i < 0 || i >= static_cast<int>(loops.size()))
          throw Error(ErrorCode::invalid_argument, "boundary loop " + std::to_string(i) +
                                                       " does not exist");
        vertices = loops[i];
      }
      garment_pin(g, session_.active_mesh(), vertices);
      result["pinned"] = static_cast<int>(g.pins.size());
    } else if (tool == "unpin") {
      auto& g = session_.require_garment();
      garment_unpin(g, int_list(record.at("vertices")));
      result["pinned"] = static_cast<int>(g.pins.size());
    } else if (tool == "seam") {
      auto& g = session_.require_garment();
      garment_cut_seam(g, seam_curve(g, record));
      int pieces = 0;
      MeshTopology(g.rest).face_components(&pieces);
      result["pieces"] = pieces;
    } else if (tool == "adapt") {
      result = run_adaptation_command(observer);
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::schema, "command " + std::to_string(log_.size()) + ": " + e.what());
  }
  log_.push_back(record);
  return result;
}

json Engine::run_adaptation_command(const PassObserver& observer) {
  auto& g = session_.require_garment();
  g.sim = g.rest;
  g.velocities.setZero(g.num_vertices(), 3);
  const PoseSchedule schedule = make_schedule(session_.poses, schedule_);
  const int offset = static_cast<int>(reports_.size());
  auto wrapped = [&](const GarmentState& garment, const AdaptReport& report) {
    AdaptReport shifted = report;
    shifted.pass += offset;
    reports_.push_back(shifted);
    return !observer || observer(garment, shifted);
  };
  const auto result = drape::run_adaptation(g, session_.poses, schedule, params_, wrapped);
  last_converged_ = result.converged;
  double final_stretch = 1.0;
  if (!result.reports.empty()) final_stretch = result.reports.back().max_stretch_stitched;
  return {{"converged", result.converged},
          {"passes", static_cast<int>(result.reports.size())},
          {"steps", result.steps},
          {"max_stretch", final_stretch}};
}

PoseSet load_project_poses(const Project& project, const std::string& project_path) {
  const auto base = std::filesystem::path(project_path).parent_path();
  return load_pose_manifest((base / project.manifest).string());
}

Engine replay(const Project& project, const PoseSet& poses, const PassObserver& observer) {
  Engine engine(poses, project.params, project.schedule);
  for (const auto& record : project.commands) engine.apply(record, observer);
  return engine;
}

BatchResult run_batch(const Project& project, const std::string& project_path,
                      const std::string& out_dir, const PassObserver& observer) {
  const PoseSet poses = load_project_poses(project, project_path);
  Engine engine = replay(project, poses, observer);
  if (!engine.session().garment)
    throw Error(ErrorCode::invalid_argument, "project creates no garment");
  if (!engine.has_adapted()) engine.apply({{"tool", "adapt"}}, observer);

  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  BatchResult result;
  result.converged = engine.last_converged().value_or(false);
  const GarmentState& g = *engine.session().garment;

  TriangleMesh rest = g.rest;
  rest.face_channels["stretch"] = stretch_field(g);
  rest.face_channels["max_principal_stretch"] = principal_stretch(g);
  rest.face_channels["paint_factor"] = g.paint_factors;
  const auto rest_path = (fs::path(out_dir) / "rest.obj").string();
  write_obj(rest, rest_path);
  write_channels(rest, rest_path);
  result.files.push_back(rest_path);
  result.files.push_back(rest_path + ".channels.json");

  if (project.exports.sim_mesh) {
    const auto sim_path = (fs::path(out_dir) / "sim.obj").string();
    write_obj(g.sim, sim_path);
    result.files.push_back(sim_path);
  }
  if (project.exports.pieces) {
    int count = 0;
    const auto label = MeshTopology(g.rest).face_components(&count);
    for (int c = 0; c < count; ++c) {
      std::vector<int> remap(g.num_vertices(), -1);
      std::vector<Eigen::Vector3i> faces;
      std::vector<Vec3> verts;
      for (int f = 0; f < g.num_faces(); ++f) {
        if (label[f] != c) continue;
        Eigen::Vector3i tri;
        for (int k = 0; k < 3; ++k) {
          int& idx = remap[g.rest.F(f, k)];
          if (idx < 0) {
            idx = static_cast<int>(verts.size());
            verts.push_back(g.rest.vertex(g.rest.F(f, k)));
          }
          tri[k] = idx;
        }
        faces.push_back(tri);
      }
      TriangleMesh piece;
      piece.V.resize(static_cast<Eigen::Index>(verts.size()), 3);
      for (std::size_t i = 0; i < verts.size(); ++i) piece.V.row(i) = verts[i].transpose();
      piece.F.resize(static_cast<Eigen::Index>(faces.size()), 3);
      for (std::size_t i = 0; i < faces.size(); ++i) piece.F.row(i) = faces[i].transpose();
      const auto path = (fs::path(out_dir) / ("piece_" + std::to_string(c) + ".obj")).string();
      write_obj(piece, path);
      result.files.push_back(path);
    }
  }

  const auto log_path = (fs::path(out_dir) / project.exports.log_name).string();
  std::ofstream log_out(log_path);
  if (!log_out) throw Error(ErrorCode::io, "cannot write " + log_path);
  for (const auto& r : engine.reports()) log_out << report_to_json(r).dump() << "\n";
  result.files.push_back(log_path);
  return result;
}

}  // namespace drape
