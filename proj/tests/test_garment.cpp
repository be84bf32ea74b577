#include <cmath>
#include <numbers>
#include <set>

#include <doctest.h>

#include "drape/adapt.hpp"
#include "drape/error.hpp"
#include "drape/garment.hpp"
#include "drape/geometry.hpp"
#include "drape/polyline.hpp"
#include "drape/remesh.hpp"
#include "drape/shapes.hpp"
#include "drape/topology.hpp"

using namespace drape;

namespace {

// Latitude-longitude sphere with a vertex ring on the equator.
TriangleMesh uv_sphere(double radius, int around, int rings) {
  std::vector<Vec3> pts{Vec3(0, 0, -radius)};
  for (int j = 1; j < rings; ++j) {
    const double phi = -std::numbers::pi / 2 + std::numbers::pi * j / rings;
    for (int i = 0; i < around; ++i) {
      const double a = 2 * std::numbers::pi * i / around;
      pts.push_back(radius * Vec3(std::cos(phi) * std::cos(a), std::cos(phi) * std::sin(a),
                                  std::sin(phi)));
    }
  }
  pts.push_back(Vec3(0, 0, radius));
  auto ring = [&](int j, int i) { return 1 + (j - 1) * around + (i % around); };
  std::vector<Eigen::Vector3i> faces;
  for (int i = 0; i < around; ++i) faces.push_back({0, ring(1, i + 1), ring(1, i)});
  for (int j = 1; j < rings - 1; ++j)
    for (int i = 0; i < around; ++i) {
      faces.push_back({ring(j, i), ring(j, i + 1), ring(j + 1, i + 1)});
      faces.push_back({ring(j, i), ring(j + 1, i + 1), ring(j + 1, i)});
    }
  const int top = static_cast<int>(pts.size()) - 1;
  for (int i = 0; i < around; ++i) faces.push_back({top, ring(rings - 1, i), ring(rings - 1, i + 1)});
  TriangleMesh mesh;
  mesh.V.resize(static_cast<int>(pts.size()), 3);
  for (int i = 0; i < mesh.V.rows(); ++i) mesh.V.row(i) = pts[i];
  mesh.F.resize(static_cast<int>(faces.size()), 3);
  for (int f = 0; f < mesh.F.rows(); ++f) mesh.F.row(f) = faces[f];
  return mesh;
}

constexpr int kAround = 48, kRings = 24;

int equator_vertex(int i) { return 1 + (kRings / 2 - 1) * kAround + i; }

DesignSession sphere_session(double radius) {
  DesignSession session;
  const auto sphere = uv_sphere(radius, kAround, kRings);
  session.poses = validate_pose_set({sphere, sphere});
  return session;
}

std::vector<std::vector<int>> loops_of(const TriangleMesh& mesh) {
  return MeshTopology(mesh).boundary_loops(mesh);
}

// Mean distance from the x axis and mean x of a loop.
std::pair<double, double> loop_radius_and_x(const TriangleMesh& mesh, const std::vector<int>& loop) {
  double r = 0.0, x = 0.0;
  for (int v : loop) {
    r += mesh.V.row(v).tail<2>().norm();
    x += mesh.V(v, 0);
  }
  return {r / loop.size(), x / loop.size()};
}

const std::vector<int>& loop_at_max_x(const std::vector<std::vector<int>>& loops,
                                      const TriangleMesh& mesh) {
  const std::vector<int>* best = &loops.front();
  for (const auto& l : loops)
    if (loop_radius_and_x(mesh, l).second > loop_radius_and_x(mesh, *best).second) best = &l;
  return *best;
}

double loop_length(const TriangleMesh& mesh, const std::vector<int>& loop) {
  double len = 0.0;
  for (std::size_t i = 0; i < loop.size(); ++i)
    len += (mesh.V.row(loop[i]) - mesh.V.row(loop[(i + 1) % loop.size()])).norm();
  return len;
}

}  // namespace

TEST_CASE("boundary tool") {
  auto session = sphere_session(1.0);
  const std::vector<int> clicks{equator_vertex(0), equator_vertex(16), equator_vertex(32)};
  const int id = boundary_create(session, clicks);
  REQUIRE(id == 0);
  const auto& loop = session.boundaries[0];
  CHECK(loop.closed);

  SUBCASE("encloses a hemisphere") {
    const auto half = garment_from_region(session, session.active_mesh().num_faces() - 1, 0.1);
    CHECK(loops_of(half.rest).size() == 1);
    CHECK(half.rest.area() == doctest::Approx(0.5 * session.active_mesh().area()).epsilon(0.02));
  }
  SUBCASE("transfers to another pose") {
    TriangleMesh other = session.poses.poses[1];
    other.V *= 1.3;
    other.V.col(0).array() += 0.5;
    for (const auto& s : loop.samples) {
      const Vec3 p = s.position(other);
      const Mat3 t = other.triangle(s.face);
      const auto cp = closest_point_on_triangle(p, t.col(0), t.col(1), t.col(2));
      CHECK(std::sqrt(cp.sq_distance) < 1e-9);
    }
  }
  SUBCASE("smoothing never lengthens") {
    const auto ico = shapes::icosphere(1.0, 3);
    DesignSession s2;
    s2.poses = validate_pose_set({ico});
    const std::vector<int> c{0, 40, 100};
    const MeshTopology topology(ico);
    std::vector<int> raw;
    for (int k = 0; k < 3; ++k) {
      const auto path = shortest_edge_path(ico, topology, c[k], c[(k + 1) % 3]);
      raw.insert(raw.end(), path.begin(), path.end() - 1);
    }
    const double before = polyline_from_vertices(ico, topology, raw, true).length(ico);
    boundary_create(s2, c);
    CHECK(s2.boundaries[0].length(ico) <= before + 1e-12);
  }
  SUBCASE("too few clicks") {
    CHECK_THROWS_AS(boundary_create(session, {1, 2}), Error);
  }
}

TEST_CASE("region tool") {
  auto session = sphere_session(0.15);
  boundary_create(session, {equator_vertex(0), equator_vertex(16), equator_vertex(32)});
  const int seed = session.active_mesh().num_faces() - 1;
  const GarmentState garment = garment_from_region(session, seed, 0.02);
  CHECK(loops_of(garment.rest).size() == 1);
  CHECK(edge_length_fraction(garment.rest, 0.01, 0.03) >= 0.95);
  CHECK(garment.sim.V == garment.rest.V);
  CHECK(garment.sim.F == garment.rest.F);
  CHECK(garment.velocities.cwiseAbs().maxCoeff() == 0.0);
  CHECK(garment.paint_factors.minCoeff() == 1.0);
  CHECK(garment.paint_factors.maxCoeff() == 1.0);
  CHECK(garment.comfort_offset == 0.0);

  set_active_pose(session, 1);
  const GarmentState again = garment_from_region(session, seed, 0.02);
  CHECK(again.rest.V == garment.rest.V);
  CHECK(again.rest.F == garment.rest.F);
}

TEST_CASE("extend tool") {
  auto make = [] {
    auto g = make_garment(shapes::tube(0.1, 0.3, 24, 10));
    return g;
  };
  SUBCASE("along the axis keeps the radius") {
    auto garment = make();
    const auto loops = loops_of(garment.rest);
    const auto& hem = loop_at_max_x(loops, garment.rest);
    int index = static_cast<int>(&hem - loops.data());
    garment_extend(garment, index, Vec3(0.5, 0, 0));
    const auto after = loops_of(garment.rest);
    REQUIRE(after.size() == 2);
    const auto& cuff = loop_at_max_x(after, garment.rest);
    const auto [r, x] = loop_radius_and_x(garment.rest, cuff);
    CHECK(x == doctest::Approx(0.5).epsilon(1e-6));
    CHECK(r == doctest::Approx(0.1).epsilon(0.02));
    for (int v : cuff) CHECK(std::abs(garment.rest.V(v, 0) - 0.5) < 1e-6);
    CHECK(garment.sim.V == garment.rest.V);
  }
  SUBCASE("double radial distance doubles the radius") {
    auto garment = make();
    const auto loops = loops_of(garment.rest);
    const int index = static_cast<int>(&loop_at_max_x(loops, garment.rest) - loops.data());
    garment_extend(garment, index, Vec3(0.5, 0.0, 0.2));
    const auto after = loops_of(garment.rest);
    const auto& cuff = loop_at_max_x(after, garment.rest);
    CHECK(loop_radius_and_x(garment.rest, cuff).first == doctest::Approx(0.2).epsilon(0.02));
  }
  SUBCASE("target behind the hem") {
    auto garment = make();
    const auto loops = loops_of(garment.rest);
    const int index = static_cast<int>(&loop_at_max_x(loops, garment.rest) - loops.data());
    CHECK_THROWS_AS(garment_extend(garment, index, Vec3(0.1, 0, 0)), Error);
  }
  SUBCASE("planar horizontal hem axis is vertical") {
    std::vector<Vec3> hem;
    for (int i = 0; i < 20; ++i) {
      const double a = 2 * std::numbers::pi * i / 20;
      hem.push_back(Vec3(std::cos(a), std::sin(a), 0.7));
    }
    const Vec3 axis = vector_area(hem).normalized();
    CHECK(std::abs(axis.z()) == doctest::Approx(1.0));
  }
}

TEST_CASE("paint tool") {
  const auto tube = shapes::tube(0.1, 0.3, 24, 12);
  SUBCASE("zero weights change nothing") {
    auto garment = make_garment(tube);
    garment_paint(garment, Eigen::VectorXd::Zero(tube.num_faces()), 1.5);
    CHECK((garment.rest.V - tube.V).cwiseAbs().maxCoeff() < 1e-9);
  }
  SUBCASE("full weights scale the area") {
    auto garment = make_garment(tube);
    garment_paint(garment, Eigen::VectorXd::Ones(tube.num_faces()), 1.2);
    CHECK(garment.rest.area() == doctest::Approx(1.44 * tube.area()).epsilon(0.02));
    CHECK(garment.paint_factors.minCoeff() == doctest::Approx(1.2));
  }
  SUBCASE("painting stays local") {
    auto garment = make_garment(tube);
    Eigen::VectorXd weights = Eigen::VectorXd::Zero(tube.num_faces());
    std::set<int> painted;
    for (int f = 0; f < tube.num_faces(); ++f) {
      const Vec3 c = tube.triangle(f).rowwise().mean();
      if (std::abs(c.x() - 0.15) < 0.03 && c.y() > 0.0) {
        weights[f] = 1.0;
        painted.insert(f);
      }
    }
    std::set<int> ring_vertices;
    for (int f : painted)
      for (int k = 0; k < 3; ++k) ring_vertices.insert(tube.F(f, k));
    garment_paint(garment, weights, 1.5);
    double before = 0.0, after = 0.0;
    for (int f = 0; f < tube.num_faces(); ++f) {
      bool near = false;
      for (int k = 0; k < 3; ++k) near |= ring_vertices.count(tube.F(f, k)) > 0;
      if (near) continue;
      before += tube.face_area(f);
      after += garment.rest.face_area(f);
    }
    CHECK(std::abs(after / before - 1.0) < 0.01);
    CHECK(garment.paint_factors[*painted.begin()] == 1.5);
  }
  SUBCASE("invalid input") {
    auto garment = make_garment(tube);
    CHECK_THROWS_AS(garment_paint(garment, Eigen::VectorXd::Ones(3), 1.5), Error);
    CHECK_THROWS_AS(garment_paint(garment, Eigen::VectorXd::Ones(tube.num_faces()), 0.5), Error);
  }
}

TEST_CASE("offset tool") {
  auto garment = make_garment(shapes::tube(0.1, 0.3, 12, 4));
  garment_set_offset(garment, 0.015);
  CHECK(garment.comfort_offset == 0.015);
  garment_set_offset(garment, 0.0);
  CHECK(garment.comfort_offset == 0.0);
  CHECK_THROWS_AS(garment_set_offset(garment, -0.01), Error);
  CHECK_THROWS_AS(garment_set_offset(garment, 0.2), Error);
}

TEST_CASE("larger offset gives a larger rest shape and pins hold the hem") {
  const auto arm = shapes::capped_tube(0.045, 0.6, 24, 40);
  const auto poses = validate_pose_set({arm});
  SimParams params;
  params.gravity = Vec3::Zero();
  params.sdf_resolution = 64;
  params.settle_budget = 30;

  auto run = [&](double offset) {
    auto garment = make_garment(shapes::tube(0.045, 0.3, 24, 20));
    garment.rest.V.col(0).array() += 0.15;
    garment.sim = garment.rest;
    garment_set_offset(garment, offset);
    const auto hems = loops_of(garment.rest);
    garment_pin(garment, arm, hems[0]);
    const double hem_before = loop_length(garment.rest, hems[0]);
    run_adaptation(garment, poses, make_schedule(poses, {0}), params);
    CHECK(std::abs(loop_length(garment.rest, hems[0]) / hem_before - 1.0) < 1e-6);
    return garment.rest.area();
  };
  const double small = run(0.01);
  const double large = run(0.03);
  CHECK(large > small);
}

TEST_CASE("seam tool") {
  SUBCASE("open cut") {
    const auto grid = shapes::grid(10, 10, 1.0, 1.0);
    auto garment = make_garment(grid);
    const MeshTopology topology(grid);
    std::vector<int> path;
    for (int i = 2; i <= 8; ++i) path.push_back(5 * 11 + i);
    const auto curve = polyline_from_vertices(grid, topology, path, false);
    const double area = grid.area();
    garment_cut_seam(garment, curve);
    CHECK(garment.num_vertices() == grid.num_vertices() + static_cast<int>(path.size()) - 2);
    CHECK(garment.num_faces() == grid.num_faces());
    CHECK(garment.rest.area() == doctest::Approx(area).epsilon(1e-9));
    CHECK(garment.sim.F == garment.rest.F);
    CHECK(garment.seams.size() == 1);
  }
  SUBCASE("closed loop around a tube separates it") {
    const auto tube = shapes::tube(0.1, 0.3, 16, 6);
    auto garment = make_garment(tube);
    std::vector<Vec3> ring;
    for (int i = 0; i < 16; ++i) {
      const double a = 2 * std::numbers::pi * (i + 0.25) / 16;
      ring.push_back(Vec3(0.13, 0.1 * std::cos(a), 0.1 * std::sin(a)));
    }
    const auto curve = polyline_from_points(tube, ring, true);
    const double area = tube.area();
    garment_cut_seam(garment, curve);
    int count = 0;
    MeshTopology(garment.rest).face_components(&count);
    CHECK(count == 2);
    CHECK(garment.rest.area() == doctest::Approx(area).epsilon(1e-9));
  }
  SUBCASE("self crossing curve") {
    const auto grid = shapes::grid(10, 10, 1.0, 1.0);
    auto garment = make_garment(grid);
    const std::vector<Vec3> bowtie{{0.2, 0.2, 0}, {0.8, 0.8, 0}, {0.8, 0.2, 0}, {0.2, 0.8, 0}};
    const auto curve = polyline_from_points(grid, bowtie, false);
    CHECK_THROWS_AS(garment_cut_seam(garment, curve), Error);
  }
}
