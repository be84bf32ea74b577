#include <cmath>
#include <numbers>
#include <random>

#include <Eigen/Geometry>
#include <doctest.h>

#include "drape/adapt.hpp"
#include "drape/error.hpp"
#include "drape/geometry.hpp"
#include "drape/shapes.hpp"
#include "drape/topology.hpp"

using namespace drape;

namespace {

Mat3 tri(const Vec3& a, const Vec3& b, const Vec3& c) {
  Mat3 m;
  m << a, b, c;
  return m;
}

Vec2 singular_values(const Mat2& m) {
  Eigen::JacobiSVD<Mat2> svd(m);
  return svd.singularValues();
}

std::vector<Mat2> rest_frames(const TriangleMesh& mesh, double scale = 1.0) {
  std::vector<Mat2> targets;
  for (int f = 0; f < mesh.num_faces(); ++f) targets.push_back(scale * local_frame_2d(mesh.triangle(f)));
  return targets;
}

}  // namespace

TEST_CASE("deformation gradient") {
  const Mat3 rest = tri({0, 0, 0}, {1, 0, 0}, {0, 1, 0});
  SUBCASE("rigid motion") {
    const Mat3 r = Eigen::AngleAxisd(2.0, Vec3(1, 1, 0).normalized()).toRotationMatrix();
    const Mat3 sim = (r * rest).colwise() + Vec3(1, 2, 3);
    const auto g = deformation_gradient(rest, sim);
    CHECK((g.sigma - Vec2(1, 1)).norm() < 1e-12);
    CHECK(stretch_measure(g.sigma) < 1e-20);
  }
  SUBCASE("similarity") {
    const auto g = deformation_gradient(rest, 2.0 * rest);
    CHECK((g.sigma - Vec2(2, 2)).norm() < 1e-12);
  }
  SUBCASE("axis aligned") {
    const auto g = deformation_gradient(rest, tri({0, 0, 0}, {1.5, 0, 0}, {0, 1, 0}));
    CHECK((g.F - Eigen::DiagonalMatrix<double, 2>(1.5, 1.0).toDenseMatrix()).norm() < 1e-12);
    CHECK((g.sigma - Vec2(1.5, 1)).norm() < 1e-12);
    CHECK((g.U * g.sigma.asDiagonal() * g.V.transpose() - g.F).norm() < 1e-12);
    CHECK(g.U.determinant() == doctest::Approx(1.0));
    CHECK(g.V.determinant() == doctest::Approx(1.0));
  }
  SUBCASE("errors") {
    CHECK_THROWS_AS(deformation_gradient(tri({0, 0, 0}, {1, 0, 0}, {2, 0, 0}), rest), Error);
    CHECK_THROWS_AS(decompose_gradient(Eigen::DiagonalMatrix<double, 2>(1.0, -1.0).toDenseMatrix()),
                    Error);
  }
}

TEST_CASE("stretch measure") {
  CHECK(stretch_measure(Vec2(1, 1)) == 0.0);
  CHECK(stretch_measure(Vec2(2, 2)) == doctest::Approx(2.0));
  CHECK(stretch_measure(Vec2(1.1, 0.8)) == doctest::Approx(0.05));
}

TEST_CASE("clip gradient") {
  const Mat2 r = Eigen::Rotation2Dd(0.4).toRotationMatrix();
  const Mat2 s = Eigen::Rotation2Dd(-1.3).toRotationMatrix();
  SUBCASE("stretch above the cap") {
    const auto g = decompose_gradient(r * Eigen::DiagonalMatrix<double, 2>(1.3, 0.8) * s);
    const auto c = clip_gradient(g, 0.1);
    CHECK(c.sigma[0] == doctest::Approx(1.1));
    CHECK(c.sigma[1] == g.sigma[1]);
    CHECK((singular_values(c.F) - Vec2(1.1, 0.8)).norm() < 1e-12);
  }
  SUBCASE("below the cap") {
    const auto g = decompose_gradient(r * Eigen::DiagonalMatrix<double, 2>(1.05, 0.95) * s);
    const auto c = clip_gradient(g, 0.1);
    CHECK(c.F == g.F);
    CHECK(c.sigma == g.sigma);
  }
  SUBCASE("both above") {
    const auto g = decompose_gradient(r * Eigen::DiagonalMatrix<double, 2>(2.0, 1.5) * s);
    const auto c = clip_gradient(g, 0.1);
    CHECK((c.sigma - Vec2(1.1, 1.1)).norm() < 1e-15);
  }
}

TEST_CASE("target rest triangle") {
  const Mat3 rest = tri({0, 0, 0}, {1, 0, 0}, {0.3, 0.8, 0});
  SUBCASE("no clipping returns the rest triangle") {
    const Mat3 sim = tri({0, 0, 0.1}, {1.02, 0.1, 0}, {0.2, 0.9, 0.05});
    const auto g = deformation_gradient(rest, sim);
    const auto c = clip_gradient(g, 0.1);
    CHECK((target_rest_triangle(c, sim) - local_frame_2d(rest)).norm() < 1e-10);
    // With an unbounded threshold every gradient inverts exactly.
    const Mat3 far = 3.0 * sim;
    const auto h = deformation_gradient(rest, far);
    CHECK((target_rest_triangle(clip_gradient(h, INFINITY), far) - local_frame_2d(rest)).norm() <
          1e-9);
  }
  SUBCASE("similarity") {
    const Mat3 sim = 2.0 * rest;
    const auto c = clip_gradient(deformation_gradient(rest, sim), 0.1);
    const Mat2 t = target_rest_triangle(c, sim);
    const Mat2 p = local_frame_2d(sim);
    CHECK(t.col(0).norm() == doctest::Approx(p.col(0).norm() / 1.1));
    CHECK(t.col(1).norm() == doctest::Approx(p.col(1).norm() / 1.1));
    CHECK((t.col(1) - t.col(0)).norm() == doctest::Approx((p.col(1) - p.col(0)).norm() / 1.1));
  }
  SUBCASE("round trip bound") {
    std::mt19937 rng(3);
    std::uniform_real_distribution<double> u(-1, 1);
    for (int i = 0; i < 200; ++i) {
      const Mat3 sim = rest * (1.5 + 0.5 * u(rng)) + 0.2 * Mat3::NullaryExpr([&] { return u(rng); });
      const auto g = deformation_gradient(rest, sim);
      if (g.F.determinant() <= 0) continue;
      const Mat2 t = target_rest_triangle(clip_gradient(g, 0.1), sim);
      const Vec2 back = singular_values(local_frame_2d(sim) * t.inverse());
      CHECK(back[0] <= 1.1 + 1e-9);
    }
  }
  SUBCASE("zero singular value") {
    DeformationGradient g;
    g.sigma = Vec2(2.0, 0.0);
    g.F = Eigen::DiagonalMatrix<double, 2>(2.0, 0.0);
    const Mat2 t = target_rest_triangle(g, Mat2(Mat2::Identity()));
    CHECK(t.allFinite());
    CHECK(t(1, 1) == 0.0);
  }
}

TEST_CASE("arap stitch") {
  SUBCASE("single triangle") {
    TriangleMesh one(tri({0, 0, 0}, {1, 0, 0}, {0, 1, 0}).transpose(),
                     Eigen::RowVector3i(0, 1, 2));
    const Mat2 target = (Mat2() << 2, 0.5, 0, 1.5).finished();
    const auto out = arap_stitch(one, {target});
    CHECK((local_frame_2d(out.mesh.triangle(0)) - target).norm() < 1e-10);
  }
  const auto sphere = shapes::icosphere(1.0, 3);
  SUBCASE("identity targets") {
    const auto out = arap_stitch(sphere, rest_frames(sphere));
    CHECK((out.mesh.V - sphere.V).cwiseAbs().maxCoeff() < 1e-8);
  }
  SUBCASE("uniform scale") {
    const auto out = arap_stitch(sphere, rest_frames(sphere, 1.3));
    const MeshTopology topology(sphere);
    double worst = 0.0;
    for (const auto& e : topology.edges) {
      const double a = (sphere.V.row(e.v0) - sphere.V.row(e.v1)).norm();
      const double b = (out.mesh.V.row(e.v0) - out.mesh.V.row(e.v1)).norm();
      worst = std::max(worst, std::abs(b / (1.3 * a) - 1.0));
    }
    CHECK(worst < 1e-4);
  }
  SUBCASE("fixed vertices hold and energy decreases") {
    auto targets = rest_frames(sphere);
    for (int f = 0; f < sphere.num_faces(); ++f)
      if (sphere.triangle(f).row(2).mean() > 0.0) targets[f] *= 1.2;
    const std::vector<int> fixed{0, 5, 17};
    const auto out = arap_stitch(sphere, targets, fixed);
    for (int v : fixed) CHECK(out.mesh.vertex(v) == sphere.vertex(v));
    for (std::size_t i = 1; i < out.energy.size(); ++i)
      CHECK(out.energy[i] <= out.energy[i - 1] * (1 + 1e-12));
    CHECK(out.mesh.area() > sphere.area());
  }
}

TEST_CASE("adapt pass") {
  auto garment = make_garment(shapes::tube(0.1, 0.4, 16, 10));
  const SimParams params;
  SUBCASE("at rest nothing is clipped") {
    const auto report = adapt_pass(garment, params);
    CHECK(report.clipped == 0);
    CHECK(garment.rest.V == garment.sim.V);
  }
  SUBCASE("stretched garment grows its rest shape") {
    // Stretch the middle of the tube radially by 40%.
    for (int v = 0; v < garment.num_vertices(); ++v) {
      const double x = garment.sim.V(v, 0);
      const double s = 1.0 + 0.4 * std::exp(-std::pow((x - 0.2) / 0.08, 2));
      garment.sim.V(v, 1) *= s;
      garment.sim.V(v, 2) *= s;
    }
    garment.pins[0] = SurfacePoint{};
    const Vec3 pinned = garment.rest.vertex(0);
    const double area = garment.rest.area();
    const auto report = adapt_pass(garment, params);
    CHECK(report.clipped > 0);
    CHECK(report.max_stretch_before > 1.3);
    CHECK(report.max_stretch_after <= report.max_stretch_before);
    CHECK(report.max_stretch_after == doctest::Approx(1.1));
    CHECK(garment.rest.area() > area);
    CHECK(garment.rest.vertex(0) == pinned);
    CHECK(principal_stretch(garment).maxCoeff() < report.max_stretch_before);
  }
}

TEST_CASE("run adaptation") {
  const auto arm = shapes::capped_tube(0.045, 0.6, 24, 40);

  SUBCASE("static skintight garment stops at once") {
    // Same rings as the arm, so the garment lies exactly on its surface.
    auto garment = make_garment(shapes::tube(0.045, 0.3, 24, 20));
    garment.rest.V.col(0).array() += 0.15;
    garment.sim = garment.rest;
    const auto poses = validate_pose_set({arm});
    SimParams params;
    params.gravity = Vec3::Zero();
    params.sdf_resolution = 64;
    const auto result = run_adaptation(garment, poses, make_schedule(poses, {0}), params);
    CHECK(result.converged);
    CHECK(result.reports.size() == static_cast<std::size_t>(params.clean_passes));
    for (const auto& r : result.reports) CHECK(r.clipped == 0);
  }

  SUBCASE("bending joint enlarges the outer side") {
    const auto bent = shapes::bend_about_joint(arm, 0.3, 0.08, std::numbers::pi / 2);
    const auto poses = validate_pose_set({arm, bent});
    auto garment = make_garment(shapes::tube(0.055, 0.3, 16, 18));
    garment.rest.V.col(0).array() += 0.15;
    garment.sim = garment.rest;
    SimParams params;
    params.sdf_resolution = 64;
    params.settle_budget = 20;
    const TriangleMesh before = garment.rest;
    // Faces near the joint, split by the side they face in the design pose.
    const auto joint_area = [&](const TriangleMesh& m, double side) {
      double a = 0.0;
      for (int f = 0; f < m.num_faces(); ++f) {
        const Vec3 c = before.triangle(f).rowwise().mean();
        if (std::abs(c.x() - 0.3) < 0.06 && side * c.y() > 0.0) a += m.face_area(f);
      }
      return a;
    };
    const auto result = run_adaptation(garment, poses, make_schedule(poses, {0, 1}), params);
    CHECK(result.reports.size() >= 60);
    const double outer = joint_area(garment.rest, -1) - joint_area(before, -1);
    CHECK(outer > 0.0);
    for (const auto& r : result.reports) CHECK(r.max_stretch_after <= r.max_stretch_before);
  }
}
