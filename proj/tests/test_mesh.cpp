#include <cmath>
#include <filesystem>
#include <numbers>
#include <queue>

#include <doctest.h>

#include "drape/error.hpp"
#include "drape/geometry.hpp"
#include "drape/obj_io.hpp"
#include "drape/polyline.hpp"
#include "drape/region.hpp"
#include "drape/remesh.hpp"
#include "drape/sdf.hpp"
#include "drape/shapes.hpp"
#include "drape/topology.hpp"

using namespace drape;

namespace {

// Plain Dijkstra over an explicit adjacency list, independent of the library.
double dijkstra_distance(const TriangleMesh& mesh, int start, int end) {
  std::vector<std::vector<std::pair<int, double>>> adj(mesh.num_vertices());
  for (int f = 0; f < mesh.num_faces(); ++f)
    for (int k = 0; k < 3; ++k) {
      const int a = mesh.F(f, k), b = mesh.F(f, (k + 1) % 3);
      const double w = (mesh.V.row(a) - mesh.V.row(b)).norm();
      adj[a].push_back({b, w});
      adj[b].push_back({a, w});
    }
  std::vector<double> dist(mesh.num_vertices(), INFINITY);
  using Item = std::pair<double, int>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> queue;
  dist[start] = 0.0;
  queue.push({0.0, start});
  while (!queue.empty()) {
    auto [d, v] = queue.top();
    queue.pop();
    if (d > dist[v]) continue;
    for (auto [u, w] : adj[v])
      if (d + w < dist[u]) {
        dist[u] = d + w;
        queue.push({dist[u], u});
      }
  }
  return dist[end];
}

// Vertex nearest to a point.
int nearest_vertex(const TriangleMesh& mesh, const Vec3& p) {
  int best = 0;
  (mesh.V.rowwise() - p.transpose()).rowwise().squaredNorm().minCoeff(&best);
  return best;
}

// Closed edge loop through three vertices near the equator of a sphere mesh.
BarycentricPolyline equator(const TriangleMesh& sphere, double radius) {
  const MeshTopology topology(sphere);
  std::vector<int> clicks;
  for (int k = 0; k < 3; ++k) {
    const double a = 2.0 * std::numbers::pi * k / 3.0;
    clicks.push_back(nearest_vertex(sphere, radius * Vec3(std::cos(a), std::sin(a), 0.0)));
  }
  std::vector<int> loop;
  for (int k = 0; k < 3; ++k) {
    const auto path = shortest_edge_path(sphere, topology, clicks[k], clicks[(k + 1) % 3]);
    loop.insert(loop.end(), path.begin(), path.end() - 1);
  }
  return polyline_from_vertices(sphere, topology, loop, true);
}

// Latitude-longitude unit sphere; ring j (1..rings-1) holds `around`
// vertices starting at index 1 + (j-1)*around. Even ring counts put a ring on
// the equator.
TriangleMesh uv_sphere(int around, int rings) {
  std::vector<Vec3> pts{Vec3(0, 0, -1)};
  for (int j = 1; j < rings; ++j) {
    const double phi = -std::numbers::pi / 2 + std::numbers::pi * j / rings;
    for (int i = 0; i < around; ++i) {
      const double a = 2 * std::numbers::pi * i / around;
      pts.push_back(Vec3(std::cos(phi) * std::cos(a), std::cos(phi) * std::sin(a), std::sin(phi)));
    }
  }
  pts.push_back(Vec3(0, 0, 1));
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

}  // namespace

TEST_CASE("shortest edge path") {
  const auto grid = shapes::grid(10, 10, 1.0, 1.0);
  const MeshTopology topology(grid);

  SUBCASE("start equals end") {
    CHECK(shortest_edge_path(grid, 5, 5) == std::vector<int>{5});
  }
  SUBCASE("adjacent vertices") {
    const auto path = shortest_edge_path(grid, 0, 1);
    CHECK(path == std::vector<int>{0, 1});
  }
  SUBCASE("opposite corners match Dijkstra") {
    const int end = grid.num_vertices() - 1;
    const auto path = shortest_edge_path(grid, topology, 0, end);
    CHECK(path.front() == 0);
    CHECK(path.back() == end);
    for (std::size_t i = 1; i < path.size(); ++i)
      CHECK(topology.find_edge(path[i - 1], path[i]) >= 0);
    CHECK(path_length(grid, path) == doctest::Approx(dijkstra_distance(grid, 0, end)).epsilon(1e-12));
  }
  SUBCASE("different components") {
    auto two = shapes::grid(1, 1, 1.0, 1.0);
    TriangleMesh both;
    both.V.resize(8, 3);
    both.V << two.V, (two.V.rowwise() + Eigen::RowVector3d(5, 0, 0));
    both.F.resize(4, 3);
    both.F << two.F, (two.F.array() + 4).matrix();
    CHECK_THROWS_AS(shortest_edge_path(both, 0, 5), Error);
  }
}

TEST_CASE("vector area") {
  std::vector<Vec3> square{{0, 0, 0}, {1, 0, 0}, {1, 1, 0}, {0, 1, 0}};
  CHECK((vector_area(square) - Vec3(0, 0, 1)).norm() < 1e-15);

  std::vector<Vec3> moved = square;
  for (auto& p : moved) p += Vec3(5, 5, 5);
  CHECK((vector_area(moved) - Vec3(0, 0, 1)).norm() < 1e-12);

  std::vector<Vec3> lifted = square;
  lifted[2].z() = 0.5;
  // Cross-product sum by hand: p1 x p2 = (0,-0.5,1), p2 x p3 = (-0.5,0,1),
  // the other two terms vanish.
  CHECK((vector_area(lifted) - Vec3(-0.25, -0.25, 1.0)).norm() < 1e-15);
}

TEST_CASE("local frame") {
  const Mat2 p = local_frame_2d(Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 1, 0));
  CHECK((p - Mat2::Identity()).norm() < 1e-15);

  const Mat3 r = Eigen::AngleAxisd(0.7, Vec3(1, 2, 3).normalized()).toRotationMatrix();
  const Vec3 t(0.3, -2, 5);
  const Mat2 q = local_frame_2d(r * Vec3(0, 0, 0) + t, r * Vec3(1, 0, 0) + t, r * Vec3(0, 1, 0) + t);
  CHECK((q - p).norm() < 1e-12);

  const Mat2 e = local_frame_2d(Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0.5, std::sqrt(3.0) / 2, 0));
  CHECK((e.col(0) - Vec2(1, 0)).norm() < 1e-15);
  CHECK((e.col(1) - Vec2(0.5, std::sqrt(3.0) / 2)).norm() < 1e-15);

  CHECK_THROWS_AS(local_frame_2d(Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(2, 0, 0)), Error);
}

TEST_CASE("smooth polyline") {
  SUBCASE("zero iterations") {
    const auto sphere = shapes::icosphere(1.0, 3);
    const auto loop = equator(sphere, 1.0);
    CHECK(smooth_polyline(sphere, loop, 0) == loop);
  }
  SUBCASE("geodesic circle is a fixed point") {
    const int around = 64, rings = 32;
    const auto even = uv_sphere(around, rings);
    validate_mesh(even);
    const MeshTopology topology(even);
    std::vector<int> loop;
    for (int i = 0; i < around; ++i) loop.push_back(1 + (rings / 2 - 1) * around + i);
    const auto circle = polyline_from_vertices(even, topology, loop, true);
    const auto smoothed = smooth_polyline(even, circle, 10);
    const auto after = smoothed.evaluate(even);
    CHECK(after.col(2).cwiseAbs().maxCoeff() < 1e-6);
    CHECK(smoothed.length(even) == doctest::Approx(circle.length(even)).epsilon(1e-6));
  }
  SUBCASE("zigzag shortens") {
    const auto plane = shapes::grid(20, 20, 1.0, 1.0);
    const MeshTopology topology(plane);
    // Square loop around the centre with alternating inward steps.
    std::vector<Vec3> pts;
    for (int i = 0; i < 12; ++i) {
      const double a = 2 * std::numbers::pi * i / 12;
      const double r = (i % 2 == 0) ? 0.35 : 0.2;
      pts.push_back(Vec3(0.5 + r * std::cos(a), 0.5 + r * std::sin(a), 0));
    }
    const auto zigzag = polyline_from_points(plane, pts, true);
    const auto smoothed = smooth_polyline(plane, zigzag, 10);
    CHECK(smoothed.length(plane) < zigzag.length(plane));
    CHECK(barycentric_valid(smoothed, plane.num_faces()));
  }
}

TEST_CASE("extract region") {
  SUBCASE("hemisphere") {
    const int around = 64, rings = 32;
    const auto sphere = uv_sphere(around, rings);
    const MeshTopology topology(sphere);
    std::vector<int> ring;
    for (int i = 0; i < around; ++i) ring.push_back(1 + (rings / 2 - 1) * around + i);
    const auto loop = polyline_from_vertices(sphere, topology, ring, true);
    const int seed = sphere.num_faces() - 1;  // touches the north pole
    const auto half = extract_region(sphere, {loop}, seed);
    validate_mesh(half);
    const MeshTopology out(half);
    CHECK(out.boundary_loops(half).size() == 1);
    CHECK(half.V.col(2).minCoeff() > -1e-12);
    CHECK(half.area() == doctest::Approx(2 * std::numbers::pi).epsilon(0.02));
  }
  SUBCASE("band between two circles on a cylinder") {
    const auto tube = shapes::tube(0.1, 1.0, 24, 20);
    std::vector<Vec3> lo, hi;
    for (int i = 0; i < 24; ++i) {
      const double a = 2 * std::numbers::pi * (i + 0.5) / 24;
      lo.push_back(Vec3(0.3, 0.1 * std::cos(a), 0.1 * std::sin(a)));
      hi.push_back(Vec3(0.7, 0.1 * std::cos(a), 0.1 * std::sin(a)));
    }
    const auto a = polyline_from_points(tube, lo, true);
    const auto b = polyline_from_points(tube, hi, true);
    int seed = -1;
    for (int f = 0; f < tube.num_faces() && seed < 0; ++f)
      if (std::abs(tube.triangle(f).rowwise().mean().x() - 0.5) < 0.03) seed = f;
    REQUIRE(seed >= 0);
    const auto band = extract_region(tube, {a, b}, seed);
    const MeshTopology topology(band);
    CHECK(topology.boundary_loops(band).size() == 2);
    CHECK(band.V.col(0).minCoeff() > 0.25);
    CHECK(band.V.col(0).maxCoeff() < 0.75);
  }
}

TEST_CASE("isotropic remesh") {
  SUBCASE("plane at 0.01") {
    const auto plane = shapes::grid(7, 7, 0.2, 0.2);
    const auto out = isotropic_remesh(plane, 0.01, true);
    CHECK(edge_length_fraction(out, 0.005, 0.015) >= 0.95);

    // Original boundary vertices stay put; new boundary vertices lie on the
    // square's sides.
    const MeshTopology before(plane), after(out);
    for (const auto& loop : before.boundary_loops(plane))
      for (int v : loop) {
        const Vec3 p = plane.vertex(v);
        const double d = (out.V.rowwise() - p.transpose()).rowwise().norm().minCoeff();
        CHECK(d < 1e-4);
      }
    for (const auto& loop : after.boundary_loops(out))
      for (int v : loop) {
        const Vec3 p = out.vertex(v);
        const double side = std::min({p.x(), p.y(), 0.2 - p.x(), 0.2 - p.y()});
        CHECK(std::abs(side) < 1e-9);
      }
  }
  SUBCASE("uniform mesh is a near fixed point") {
    const auto sphere = shapes::icosphere(1.0, 3);
    const double target = mean_edge_length(sphere);
    const double before = edge_length_fraction(sphere, 0.75 * target, 1.25 * target);
    const auto out = isotropic_remesh(sphere, target, true);
    const double after = edge_length_fraction(out, 0.75 * target, 1.25 * target);
    CHECK(std::abs(after - before) <= 0.05);
    CHECK(mean_edge_length(out) == doctest::Approx(target).epsilon(0.05));
  }
  CHECK_THROWS_AS(isotropic_remesh(shapes::grid(2, 2, 1, 1), 1e-7, true), Error);
}

TEST_CASE("signed distance field") {
  const auto sphere = shapes::icosphere(1.0, 4);
  const auto sdf = build_sdf(sphere, 64);
  const double cell = sdf.cell();

  CHECK(sdf.distance(Vec3::Zero()) == doctest::Approx(-1.0).epsilon(cell));
  CHECK(std::abs(sdf.distance(Vec3::Zero()) + 1.0) <= cell);
  // (2,0,0) lies outside the padded box; move the probe inside it.
  const Vec3 far(1.15, 0, 0);
  REQUIRE(sdf.contains(far));
  CHECK(std::abs(sdf.distance(far) - 0.15) <= cell);

  SUBCASE("gradient") {
    const auto s = sdf.query(Vec3(0.5, 0, 0));
    CHECK((s.gradient - Vec3(1, 0, 0)).norm() < 0.05);
    const auto o = sdf.query(Vec3(1.1, 0, 0));
    CHECK((o.gradient - Vec3(1, 0, 0)).norm() < 0.05);

    // Finite differences over grid nodes away from the surface.
    int checked = 0, good = 0;
    const auto& d = sdf.dims();
    for (int k = 1; k + 1 < d[2]; k += 5)
      for (int j = 1; j + 1 < d[1]; j += 5)
        for (int i = 1; i + 1 < d[0]; i += 5) {
          if (std::abs(sdf.node(i, j, k)) < 2 * cell) continue;
          if (sdf.node_position(i, j, k).norm() < 0.2) continue;  // medial point
          const Vec3 g((sdf.node(i + 1, j, k) - sdf.node(i - 1, j, k)) / (2 * cell),
                       (sdf.node(i, j + 1, k) - sdf.node(i, j - 1, k)) / (2 * cell),
                       (sdf.node(i, j, k + 1) - sdf.node(i, j, k - 1)) / (2 * cell));
          ++checked;
          if (std::abs(g.norm() - 1.0) <= 0.1) ++good;
        }
    REQUIRE(checked > 100);
    CHECK(good == checked);
  }
  SUBCASE("node-coincident query") {
    const auto& d = sdf.dims();
    for (int k = 3; k < d[2]; k += 17)
      for (int j = 2; j < d[1]; j += 13)
        for (int i = 1; i < d[0]; i += 11)
          CHECK(sdf.distance(sdf.node_position(i, j, k)) ==
                static_cast<double>(sdf.node(i, j, k)));
  }
  SUBCASE("planar field is reproduced at cell centers") {
    const std::array<int, 3> dims{4, 5, 6};
    std::vector<float> values;
    const Vec3 n = Vec3(1, 2, 2) / 3.0;
    for (int k = 0; k < dims[2]; ++k)
      for (int j = 0; j < dims[1]; ++j)
        for (int i = 0; i < dims[0]; ++i) values.push_back(static_cast<float>(n.dot(Vec3(i, j, k) * 0.25) - 0.5));
    const SignedDistanceField plane(Vec3::Zero(), 0.25, dims, values);
    for (int k = 0; k + 1 < dims[2]; ++k)
      for (int j = 0; j + 1 < dims[1]; ++j)
        for (int i = 0; i + 1 < dims[0]; ++i) {
          const Vec3 c = (Vec3(i, j, k) + Vec3::Constant(0.5)) * 0.25;
          CHECK(plane.distance(c) == doctest::Approx(n.dot(c) - 0.5).epsilon(1e-6));
        }
  }
  SUBCASE("cache round trip") {
    const auto path = (std::filesystem::temp_directory_path() / "drape_test.sdf").string();
    sdf.save(path);
    const auto back = SignedDistanceField::load(path);
    CHECK(back.origin() == sdf.origin());
    CHECK(back.cell() == sdf.cell());
    CHECK(back.dims() == sdf.dims());
    CHECK(back.values() == sdf.values());
    std::filesystem::remove(path);
  }
  SUBCASE("open mesh") {
    CHECK_THROWS_AS(build_sdf(shapes::grid(4, 4, 1, 1), 16), Error);
  }
}

TEST_CASE("obj round trip") {
  auto mesh = shapes::icosphere(0.37, 2, Vec3(0.1, 1e-7, -3.3));
  mesh.face_channels["stretch"] = Eigen::VectorXd::LinSpaced(mesh.num_faces(), 0.0, 1.0 / 3.0);
  const auto path = (std::filesystem::temp_directory_path() / "drape_test.obj").string();
  write_obj(mesh, path);
  write_channels(mesh, path);
  auto back = read_obj(path);
  read_channels(back, path);
  CHECK(back.V == mesh.V);
  CHECK(back.F == mesh.F);
  CHECK(back.face_channels.at("stretch") == mesh.face_channels.at("stretch"));
  std::filesystem::remove(path);
  std::filesystem::remove(path + ".channels.json");
  CHECK_THROWS_AS(read_obj(path), Error);
}

TEST_CASE("topology") {
  const auto tube = shapes::tube(0.1, 1.0, 12, 5);
  const MeshTopology topology(tube);
  const auto loops = topology.boundary_loops(tube);
  REQUIRE(loops.size() == 2);
  CHECK(loops[0].size() == 12);
  CHECK(topology.num_boundary_edges() == 24);
  int count = 0;
  topology.face_components(&count);
  CHECK(count == 1);

  TriangleMesh bad = tube;
  bad.F(0, 1) = bad.F(0, 0);
  CHECK_THROWS_AS(validate_mesh(bad), Error);
}
