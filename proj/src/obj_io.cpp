#include "drape/obj_io.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>
#include <vector>

#include <fmt/format.h>
#include <json.hpp>

#include "drape/error.hpp"

namespace drape {

TriangleMesh read_obj(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::io, "cannot read " + path);
  std::vector<Vec3> positions;
  std::vector<std::array<int, 3>> faces;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream ss(line);
    std::string tag;
    if (!(ss >> tag)) continue;
    if (tag == "v") {
      Vec3 p;
      if (!(ss >> p[0] >> p[1] >> p[2]))
        throw Error(ErrorCode::io, fmt::format("{}:{}: malformed vertex", path, line_no));
      positions.push_back(p);
    } else if (tag == "f") {
      std::vector<int> poly;
      std::string token;
      while (ss >> token) {
        const int idx = std::stoi(token.substr(0, token.find('/')));
        poly.push_back(idx > 0 ? idx - 1 : static_cast<int>(positions.size()) + idx);
      }
      if (poly.size() < 3)
        throw Error(ErrorCode::io, fmt::format("{}:{}: face with fewer than 3 corners", path,
                                               line_no));
      for (std::size_t i = 1; i + 1 < poly.size(); ++i)
        faces.push_back({poly[0], poly[i], poly[i + 1]});
    }
  }
  TriangleMesh mesh;
  mesh.V.resize(static_cast<Eigen::Index>(positions.size()), 3);
  for (std::size_t i = 0; i < positions.size(); ++i) mesh.V.row(i) = positions[i].transpose();
  mesh.F.resize(static_cast<Eigen::Index>(faces.size()), 3);
  for (std::size_t f = 0; f < faces.size(); ++f)
    for (int k = 0; k < 3; ++k) mesh.F(f, k) = faces[f][k];
  validate_mesh(mesh, false);
  return mesh;
}

void write_obj(const TriangleMesh& mesh, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::io, "cannot write " + path);
  for (int v = 0; v < mesh.num_vertices(); ++v)
    out << fmt::format("v {:.17g} {:.17g} {:.17g}\n", mesh.V(v, 0), mesh.V(v, 1), mesh.V(v, 2));
  for (int f = 0; f < mesh.num_faces(); ++f)
    out << fmt::format("f {} {} {}\n", mesh.F(f, 0) + 1, mesh.F(f, 1) + 1, mesh.F(f, 2) + 1);
  if (!out) throw Error(ErrorCode::io, "failed writing " + path);
}

void write_channels(const TriangleMesh& mesh, const std::string& obj_path) {
  nlohmann::json doc = {{"face", nlohmann::json::object()}, {"vertex", nlohmann::json::object()}};
  for (const auto& [name, values] : mesh.face_channels)
    doc["face"][name] = std::vector<double>(values.data(), values.data() + values.size());
  for (const auto& [name, values] : mesh.vertex_channels)
    doc["vertex"][name] = std::vector<double>(values.data(), values.data() + values.size());
  std::ofstream out(obj_path + ".channels.json");
  if (!out) throw Error(ErrorCode::io, "cannot write channels for " + obj_path);
  out << doc.dump(1) << "\n";
}

void read_channels(TriangleMesh& mesh, const std::string& obj_path) {
  const std::string path = obj_path + ".channels.json";
  if (!std::filesystem::exists(path)) return;
  std::ifstream in(path);
  const auto doc = nlohmann::json::parse(in);
  auto load = [&](const char* kind, int expected, std::map<std::string, Eigen::VectorXd>& dst) {
    if (!doc.contains(kind)) return;
    for (const auto& [name, arr] : doc[kind].items()) {
      const auto values = arr.get<std::vector<double>>();
      if (static_cast<int>(values.size()) != expected)
        throw Error(ErrorCode::io, fmt::format("channel {} has {} entries, expected {}", name,
                                               values.size(), expected));
      dst[name] = Eigen::Map<const Eigen::VectorXd>(values.data(),
                                                    static_cast<Eigen::Index>(values.size()));
    }
  };
  load("face", mesh.num_faces(), mesh.face_channels);
  load("vertex", mesh.num_vertices(), mesh.vertex_channels);
}

}  // namespace drape
