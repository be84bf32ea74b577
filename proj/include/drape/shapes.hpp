#pragma once

#include "drape/mesh.hpp"

namespace drape::shapes {

// Subdivided icosahedron projected to a sphere, outward oriented.
TriangleMesh icosphere(double radius, int subdivisions, const Vec3& center = Vec3::Zero());

// Regular nx-by-ny grid of quads split into triangles, spanning [0,sx]x[0,sy]
// in the z = 0 plane with normals along +z.
TriangleMesh grid(int nx, int ny, double sx, double sy);

// Open tube along +x from x = 0 to x = length, outward normals.
TriangleMesh tube(double radius, double length, int around, int along);

// Closed tube: the open tube plus fan caps at both ends.
TriangleMesh capped_tube(double radius, double length, int around, int along);

// Smoothly bends a straight limb lying along +x: points with x inside
// [joint - half_width, joint + half_width] follow a circular arc bending
// toward +y by `angle` radians in total; points beyond the zone move rigidly.
TriangleMesh bend_about_joint(const TriangleMesh& straight, double joint, double half_width,
                              double angle);

}  // namespace drape::shapes
