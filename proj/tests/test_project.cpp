#include <cstring>
#include <filesystem>
#include <fstream>

#include <doctest.h>

#include "drape/error.hpp"
#include "drape/obj_io.hpp"
#include "drape/project.hpp"
#include "drape/shapes.hpp"
#include "drape/topology.hpp"

using namespace drape;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr int kAround = 16, kAlong = 20;

std::vector<int> ring(int j) { return {j * kAround, j * kAround + 5, j * kAround + 10}; }

// Straight arm of 0.6 m with a sleeve region between x = 0.15 and x = 0.45.
Project small_project() {
  Project p;
  p.manifest = "poses.json";
  p.params.sdf_resolution = 32;
  p.params.settle_budget = 40;
  p.commands = {
      {{"tool", "boundary"}, {"vertices", ring(5)}},
      {{"tool", "boundary"}, {"vertices", ring(15)}},
      {{"tool", "region"}, {"seed", 2 * 10 * kAround}, {"target_edge", 0.03}},
      {{"tool", "pin"}, {"boundary_loop", 0}},
  };
  return p;
}

PoseSet small_poses() {
  return validate_pose_set({shapes::capped_tube(0.045, 0.6, kAround, kAlong)}, {"straight"});
}

// Writes the manifest and project into a fresh directory and returns the
// project path.
std::string write_small(const fs::path& dir, const Project& project) {
  fs::remove_all(dir);
  fs::create_directories(dir);
  write_obj(small_poses().poses[0], (dir / "straight.obj").string());
  std::ofstream(dir / "poses.json")
      << json{{"poses", {{{"name", "straight"}, {"obj", "straight.obj"}}}}}.dump();
  const auto path = (dir / "project.json").string();
  project_save(project, path);
  return path;
}

template <typename T>
T read_le(const std::string& bytes, std::size_t offset) {
  T value;
  std::memcpy(&value, bytes.data() + offset, sizeof(T));
  return value;
}

}  // namespace

TEST_CASE("project file") {
  const fs::path dir = fs::temp_directory_path() / "drape_test_project";
  Project project = small_project();
  project.schedule = {0};
  project.params.delta = 0.07;
  project.exports.pieces = false;

  SUBCASE("save then load") {
    const auto path = write_small(dir, project);
    CHECK(project_load(path) == project);
  }
  SUBCASE("empty command log") {
    Project empty;
    empty.manifest = "poses.json";
    const auto back = project_from_json(project_to_json(empty));
    CHECK(back.commands.empty());
    CHECK(back == empty);
  }
  SUBCASE("unknown tool names its index") {
    json doc = project_to_json(project);
    doc["commands"][2] = {{"tool", "lasso"}};
    try {
      project_from_json(doc);
      FAIL("accepted an unknown tool");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::schema);
      CHECK(std::string(e.what()).find("2") != std::string::npos);
    }
  }
  SUBCASE("version mismatch names both versions") {
    json doc = project_to_json(project);
    doc["version"] = kProjectVersion + 1;
    try {
      project_from_json(doc);
      FAIL("accepted a future version");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::schema);
      const std::string what = e.what();
      CHECK(what.find(std::to_string(kProjectVersion)) != std::string::npos);
      CHECK(what.find(std::to_string(kProjectVersion + 1)) != std::string::npos);
    }
  }
  SUBCASE("parameters missing from the file keep their defaults") {
    SimParams p;
    params_from_json(json{{"delta", 0.2}}, p);
    CHECK(p.delta == 0.2);
    CHECK(p.h == SimParams{}.h);
  }
  fs::remove_all(dir);
}

TEST_CASE("engine") {
  const PoseSet poses = small_poses();
  const Project project = small_project();
  Engine engine(poses, project.params, project.schedule);
  for (const auto& record : project.commands) engine.apply(record);
  REQUIRE(engine.session().garment);
  const auto& g = *engine.session().garment;
  CHECK(g.pins.size() > 0);
  CHECK(engine.log().size() == project.commands.size());
  CHECK(MeshTopology(g.rest).boundary_loops(g.rest).size() == 2);

  SUBCASE("failed commands are not logged") {
    CHECK_THROWS_AS(engine.apply({{"tool", "offset"}, {"distance", -1.0}}), Error);
    CHECK_THROWS_AS(engine.apply({{"tool", "boundary"}, {"vertices", {1, 2}}}), Error);
    CHECK(engine.log().size() == project.commands.size());
  }
  SUBCASE("replay reproduces the garment") {
    const Engine again = replay(project, poses);
    CHECK(again.session().garment->rest.V == g.rest.V);
    CHECK(again.session().garment->rest.F == g.rest.F);
  }
  SUBCASE("snapshot") {
    const auto frame = make_snapshot(g, 7, {0, 0, 0.0});
    CHECK(frame.stretch.size() == g.num_faces());
    CHECK(frame.stretch.minCoeff() >= 0.0);
    const json doc = snapshot_to_json(frame);
    CHECK(doc.at("pass") == 7);

    const std::string bin = snapshot_to_binary(frame);
    const auto nv = static_cast<std::size_t>(g.num_vertices());
    const auto nf = static_cast<std::size_t>(g.num_faces());
    REQUIRE(bin.size() == 20 + nv * 24 + nf * 16);
    CHECK(bin.substr(0, 4) == "GFRM");
    CHECK(read_le<std::uint32_t>(bin, 8) == 7);
    CHECK(read_le<std::uint32_t>(bin, 12) == nv);
    CHECK(read_le<std::uint32_t>(bin, 16) == nf);
    CHECK(read_le<float>(bin, 20) == static_cast<float>(g.sim.V(0, 0)));
    CHECK(read_le<std::uint32_t>(bin, 20 + nv * 24) == static_cast<std::uint32_t>(g.rest.F(0, 0)));
  }
}

TEST_CASE("batch") {
  const fs::path dir = fs::temp_directory_path() / "drape_test_batch";
  Project project = small_project();
  project.params.gravity = Vec3::Zero();
  project.schedule = {0};
  const auto path = write_small(dir, project);

  const auto first = run_batch(project_load(path), path, (dir / "a").string());
  CHECK(first.converged);
  for (const char* name : {"rest.obj", "rest.obj.channels.json", "sim.obj", "piece_0.obj",
                           "adapt_log.ndjson"})
    CHECK(fs::exists(dir / "a" / name));

  const auto rest = read_obj((dir / "a" / "rest.obj").string());
  TriangleMesh with_channels = rest;
  read_channels(with_channels, (dir / "a" / "rest.obj").string());
  CHECK(with_channels.face_channels.at("stretch").size() == rest.num_faces());

  std::ifstream log(dir / "a" / "adapt_log.ndjson");
  std::string line;
  int lines = 0;
  while (std::getline(log, line)) {
    CHECK(json::parse(line).contains("max_stretch_before"));
    ++lines;
  }
  CHECK(lines >= project.params.clean_passes);

  run_batch(project_load(path), path, (dir / "b").string());
  auto slurp = [](const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), {});
  };
  CHECK(slurp(dir / "a" / "rest.obj") == slurp(dir / "b" / "rest.obj"));
  fs::remove_all(dir);
}
