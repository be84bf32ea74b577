#pragma once

#include <string>

#include "drape/mesh.hpp"

namespace drape {

// Wavefront OBJ with positions and faces only. Polygons are fan
// triangulated on import. Positions are written with round-trip precision.
TriangleMesh read_obj(const std::string& path);
void write_obj(const TriangleMesh& mesh, const std::string& path);

// Attribute channels live next to the OBJ in "<path>.channels.json".
void write_channels(const TriangleMesh& mesh, const std::string& obj_path);
void read_channels(TriangleMesh& mesh, const std::string& obj_path);

}  // namespace drape
