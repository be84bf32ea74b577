#include "drape/adapt.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/SVD>
#include <Eigen/SparseCholesky>

#include "drape/error.hpp"
#include "drape/geometry.hpp"
#include "drape/log.hpp"
#include "drape/topology.hpp"

namespace drape {

DeformationGradient decompose_gradient(const Mat2& F) {
  if (F.determinant() < 0.0)
    throw Error(ErrorCode::orientation, "deformation gradient reflects the triangle");
  Eigen::JacobiSVD<Mat2> svd(F, Eigen::ComputeFullU | Eigen::ComputeFullV);
  DeformationGradient g;
  g.F = F;
  g.U = svd.matrixU();
  g.V = svd.matrixV();
  g.sigma = svd.singularValues();
  // With det F >= 0 the factors are both proper or both improper; flipping
  // the second column of each keeps the product.
  if (g.U.determinant() < 0.0) g.U.col(1) *= -1.0;
  if (g.V.determinant() < 0.0) g.V.col(1) *= -1.0;
  return g;
}

DeformationGradient deformation_gradient(const Mat3& rest_tri, const Mat3& sim_tri) {
  const Mat2 rest = local_frame_2d(rest_tri);
  const Mat2 sim = local_frame_2d(sim_tri);
  return decompose_gradient(sim * rest.inverse());
}

double stretch_measure(const Vec2& sigma) {
  return (sigma[0] - 1.0) * (sigma[0] - 1.0) + (sigma[1] - 1.0) * (sigma[1] - 1.0);
}

DeformationGradient clip_gradient(const DeformationGradient& g, double delta) {
  const double cap = 1.0 + delta;
  if (g.sigma[0] <= cap && g.sigma[1] <= cap) return g;
  DeformationGradient out = g;
  for (int i = 0; i < 2; ++i) out.sigma[i] = std::min(g.sigma[i], cap);
  out.F = out.U * out.sigma.asDiagonal() * out.V.transpose();
  return out;
}

Mat2 target_rest_triangle(const DeformationGradient& clipped, const Mat2& sim_edges) {
  Vec2 inv = Vec2::Zero();
  for (int i = 0; i < 2; ++i)
    if (clipped.sigma[i] > 0.0) inv[i] = 1.0 / clipped.sigma[i];
  return clipped.V * inv.asDiagonal() * clipped.U.transpose() * sim_edges;
}

Mat2 target_rest_triangle(const DeformationGradient& clipped, const Mat3& sim_tri) {
  return target_rest_triangle(clipped, local_frame_2d(sim_tri));
}

ArapResult arap_stitch(const TriangleMesh& rest, const std::vector<Mat2>& targets,
                       const std::vector<int>& fixed, int max_iterations, double tolerance) {
  const int nv = rest.num_vertices(), nf = rest.num_faces();
  if (static_cast<int>(targets.size()) != nf)
    throw Error(ErrorCode::invalid_argument, "one target per face required");

  // Lift the targets into 3D: corner offsets from corner 0 in the plane of
  // the current rest face. Rotations are fitted in 3D, so the choice of
  // plane does not matter.
  std::vector<std::array<Vec3, 3>> corners(nf);
  std::vector<std::array<double, 3>> weight(nf);  // edge k runs corner k -> k+1
  double scale = 0.0;
  for (int f = 0; f < nf; ++f) {
    const Vec3 x0 = rest.corner(f, 0), x1 = rest.corner(f, 1), x2 = rest.corner(f, 2);
    Eigen::Matrix<double, 3, 2> basis;
    try {
      basis = local_frame_basis(x0, x1, x2);
    } catch (const Error&) {
      basis.setZero();
      basis(0, 0) = basis(1, 1) = 1.0;
    }
    corners[f] = {Vec3::Zero(), basis * targets[f].col(0), basis * targets[f].col(1)};
    const Vec3 p[3] = {x0, x1, x2};
    for (int k = 0; k < 3; ++k) {
      const Vec3 a = p[(k + 2) % 3];
      const Vec3 u = p[k] - a, w = p[(k + 1) % 3] - a;
      const double s = u.cross(w).norm();
      const double cot = s > 0.0 ? u.dot(w) / s : 0.0;
      weight[f][k] = std::max(0.5 * cot, 1e-3);
      scale += weight[f][k] * (corners[f][(k + 1) % 3] - corners[f][k]).squaredNorm();
    }
  }

  std::vector<bool> is_fixed(nv, false);
  for (int v : fixed) {
    if (v < 0 || v >= nv) throw Error(ErrorCode::invalid_argument, "fixed vertex out of range");
    is_fixed[v] = true;
  }
  {
    const MeshTopology topo(rest);
    int count = 0;
    const auto label = topo.face_components(&count);
    std::vector<bool> anchored(count, false);
    std::vector<int> lowest(count, nv);
    for (int f = 0; f < nf; ++f)
      for (int k = 0; k < 3; ++k) {
        const int v = rest.F(f, k);
        if (is_fixed[v]) anchored[label[f]] = true;
        lowest[label[f]] = std::min(lowest[label[f]], v);
      }
    for (int c = 0; c < count; ++c)
      if (!anchored[c]) is_fixed[lowest[c]] = true;
  }
  std::vector<int> reduced(nv, -1);
  int free_count = 0;
  for (int v = 0; v < nv; ++v)
    if (!is_fixed[v]) reduced[v] = free_count++;

  std::vector<Eigen::Triplet<double>> triplets;
  for (int f = 0; f < nf; ++f)
    for (int k = 0; k < 3; ++k) {
      const int i = reduced[rest.F(f, k)], j = reduced[rest.F(f, (k + 1) % 3)];
      const double w = weight[f][k];
      if (i >= 0) triplets.emplace_back(i, i, w);
      if (j >= 0) triplets.emplace_back(j, j, w);
      if (i >= 0 && j >= 0) {
        triplets.emplace_back(i, j, -w);
        triplets.emplace_back(j, i, -w);
      }
    }
  Eigen::SparseMatrix<double> L(free_count, free_count);
  L.setFromTriplets(triplets.begin(), triplets.end());
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver;
  if (free_count > 0) {
    solver.compute(L);
    if (solver.info() != Eigen::Success)
      throw Error(ErrorCode::solver_failure, "stitching system could not be factored");
  }

  ArapResult result;
  Eigen::MatrixX3d x = rest.V;
  std::vector<Mat3> rotation(nf, Mat3::Identity());
  auto local_step = [&]() {
    double energy = 0.0;
    for (int f = 0; f < nf; ++f) {
      Mat3 cov = Mat3::Zero();
      for (int k = 0; k < 3; ++k) {
        const int a = rest.F(f, k), b = rest.F(f, (k + 1) % 3);
        const Vec3 e = (x.row(b) - x.row(a)).transpose();
        const Vec3 d = corners[f][(k + 1) % 3] - corners[f][k];
        cov += weight[f][k] * e * d.transpose();
      }
      Eigen::JacobiSVD<Mat3> svd(cov, Eigen::ComputeFullU | Eigen::ComputeFullV);
      Mat3 fix = Mat3::Identity();
      fix(2, 2) = (svd.matrixU() * svd.matrixV().transpose()).determinant() < 0.0 ? -1.0 : 1.0;
      rotation[f] = svd.matrixU() * fix * svd.matrixV().transpose();
      for (int k = 0; k < 3; ++k) {
        const int a = rest.F(f, k), b = rest.F(f, (k + 1) % 3);
        const Vec3 e = (x.row(b) - x.row(a)).transpose();
        const Vec3 d = corners[f][(k + 1) % 3] - corners[f][k];
        energy += weight[f][k] * (e - rotation[f] * d).squaredNorm();
      }
    }
    return energy;
  };

  const double floor = 1e-24 * std::max(scale, 1e-300);
  for (int iter = 0; iter <= max_iterations; ++iter) {
    const double energy = local_step();
    result.energy.push_back(energy);
    if (energy <= floor) {
      result.converged = true;
      break;
    }
    if (iter > 0) {
      const double prev = result.energy[result.energy.size() - 2];
      if (prev - energy <= tolerance * prev) {
        result.converged = true;
        break;
      }
    }
    if (iter == max_iterations || free_count == 0) break;

    Eigen::MatrixX3d rhs = Eigen::MatrixX3d::Zero(free_count, 3);
    for (int f = 0; f < nf; ++f)
      for (int k = 0; k < 3; ++k) {
        const int a = rest.F(f, k), b = rest.F(f, (k + 1) % 3);
        const double w = weight[f][k];
        const Vec3 d = w * (rotation[f] * (corners[f][(k + 1) % 3] - corners[f][k]));
        const int ia = reduced[a], ib = reduced[b];
        // Edge term w |x_b - x_a - R d|^2; fixed endpoints move to the right.
        if (ia >= 0) {
          rhs.row(ia) -= d.transpose();
          if (ib < 0) rhs.row(ia) += w * x.row(b);
        }
        if (ib >= 0) {
          rhs.row(ib) += d.transpose();
          if (ia < 0) rhs.row(ib) += w * x.row(a);
        }
      }
    const Eigen::MatrixX3d solved = solver.solve(rhs);
    for (int v = 0; v < nv; ++v)
      if (reduced[v] >= 0) x.row(v) = solved.row(reduced[v]);
    ++result.iterations;
  }
  // Reported per pass through AdaptReport::arap_converged.
  if (!result.converged)
    log::info("stitching stopped after {} iterations without converging", result.iterations);
  result.residual = scale > 0.0 ? std::sqrt(result.energy.back() / scale) : 0.0;
  result.mesh = rest;
  result.mesh.V = std::move(x);
  return result;
}

Eigen::VectorXd principal_stretch(const GarmentState& garment) {
  const int nf = garment.num_faces();
  Eigen::VectorXd out = Eigen::VectorXd::Zero(nf);
  for (int f = 0; f < nf; ++f) {
    try {
      const Mat2 rest = local_frame_2d(garment.rest.triangle(f));
      const Mat2 sim = local_frame_2d(garment.sim.triangle(f));
      Eigen::JacobiSVD<Mat2> svd(sim * rest.inverse());
      out[f] = svd.singularValues()[0];
    } catch (const Error&) {
      out[f] = 0.0;
    }
  }
  return out;
}

namespace {

// Edge matrix of a possibly degenerate triangle, same convention as
// local_frame_2d.
Mat2 flat_edges(const Mat3& tri) {
  const Vec3 e1 = tri.col(1) - tri.col(0), e2 = tri.col(2) - tri.col(0);
  const double len = e1.norm();
  const Vec3 axis = len > 0.0 ? Vec3(e1 / len) : Vec3::UnitX();
  const double along = e2.dot(axis);
  Mat2 out;
  out << len, along, 0.0, (e2 - along * axis).norm();
  return out;
}

}  // namespace

AdaptReport adapt_pass(GarmentState& garment, const SimParams& params) {
  const int nf = garment.num_faces();
  AdaptReport report;
  std::vector<Mat2> targets(nf);
  double before = 0.0, after = 0.0;
  for (int f = 0; f < nf; ++f) {
    Mat2 rest;
    try {
      rest = local_frame_2d(garment.rest.triangle(f));
    } catch (const Error&) {
      targets[f] = flat_edges(garment.rest.triangle(f));
      ++report.skipped;
      continue;
    }
    targets[f] = rest;
    try {
      const Mat2 sim = local_frame_2d(garment.sim.triangle(f));
      const auto g = decompose_gradient(sim * rest.inverse());
      const auto clipped = clip_gradient(g, params.delta);
      before = std::max(before, g.sigma[0]);
      after = std::max(after, clipped.sigma[0]);
      if (clipped.sigma != g.sigma) {
        targets[f] = target_rest_triangle(clipped, sim);
        ++report.clipped;
      }
    } catch (const Error&) {
      ++report.skipped;
    }
  }
  if (report.skipped > 0) log::warn("{} inverted or degenerate triangles not adapted", report.skipped);
  report.max_stretch_before = before;
  report.max_stretch_after = after;
  report.max_stretch_stitched = before;
  if (report.clipped == 0) return report;

  std::vector<int> fixed;
  for (const auto& [vertex, anchor] : garment.pins) fixed.push_back(vertex);
  const auto stitched = arap_stitch(garment.rest, targets, fixed);
  garment.rest.V = stitched.mesh.V;
  report.arap_iterations = stitched.iterations;
  report.arap_residual = stitched.residual;
  report.arap_converged = stitched.converged;
  report.max_stretch_stitched = principal_stretch(garment).maxCoeff();
  return report;
}

AdaptationResult run_adaptation(GarmentState& garment, const PoseSet& poses,
                                const PoseSchedule& schedule, const SimParams& params,
                                const PassObserver& observer) {
  validate(params);
  if (schedule.entries.empty()) throw Error(ErrorCode::invalid_argument, "empty schedule");
  PoseAnimator animator(poses);
  AdaptationResult result;
  int streak = 0;

  auto run_pass = [&](const Body& body, const ScheduleEntry& entry) {
    for (int s = 0; s < params.adapt_every; ++s) {
      step(garment, body, params);
      ++result.steps;
    }
    AdaptReport report = adapt_pass(garment, params);
    report.pass = static_cast<int>(result.reports.size());
    report.pose = entry;
    const bool clean =
        report.max_stretch_before <= 1.0 + params.delta + params.clean_tolerance;
    streak = clean ? streak + 1 : 0;
    result.reports.push_back(report);
    return !observer || observer(garment, report);
  };

  Body body;
  for (const auto& entry : schedule.entries) {
    body = make_body(animator.evaluate(entry), params.sdf_resolution);
    if (const int hits = count_self_intersections(body.mesh); hits > 0)
      log::warn("interpolated body ({}, {}, {:.3f}) has {} self-intersecting face pairs",
                entry.a, entry.b, entry.t, hits);
    if (!run_pass(body, entry)) return result;
  }
  const ScheduleEntry last = schedule.entries.back();
  for (int pass = 0; pass < params.settle_budget && streak < params.clean_passes; ++pass)
    if (!run_pass(body, last)) return result;
  result.converged = streak >= params.clean_passes;
  return result;
}

}  // namespace drape
