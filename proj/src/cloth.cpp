#include "drape/cloth.hpp"

#include <cmath>

#include <Eigen/IterativeLinearSolvers>

#include "drape/error.hpp"
#include "drape/geometry.hpp"
#include "drape/log.hpp"
#include "drape/topology.hpp"

namespace drape {

void validate(const SimParams& p) {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw Error(ErrorCode::invalid_argument, what);
  };
  require(p.h > 0.0, "h must be positive");
  require(p.delta > 0.0, "delta must be positive");
  require(p.k_stretch >= 0.0 && p.k_shear >= 0.0 && p.k_bend >= 0.0,
          "stiffness must be non-negative");
  require(p.kd_stretch >= 0.0 && p.kd_shear >= 0.0 && p.kd_bend >= 0.0,
          "damping must be non-negative");
  require(p.adapt_every >= 1, "adapt_every must be positive");
  require(p.steps_per_transition >= 1, "steps_per_transition must be positive");
  require(p.density > 0.0, "density must be positive");
  require(p.sdf_resolution >= 4, "sdf_resolution too small");
  require(p.settle_budget >= 0 && p.clean_passes >= 1, "invalid settle budget");
  require(p.clean_tolerance >= 0.0, "negative clean tolerance");
  require(p.solver_tolerance > 0.0 && p.solver_max_iterations > 0, "invalid solver settings");
}

Body make_body(TriangleMesh mesh, int sdf_resolution) {
  Body body;
  body.sdf = build_sdf(mesh, sdf_resolution);
  body.normals = mesh.vertex_normals();
  body.mesh = std::move(mesh);
  return body;
}

StretchShearTerm stretch_shear_condition(const Mat2& rest, const Mat3& x, const Mat3& v,
                                         const SimParams& params, bool exact_hessian) {
  StretchShearTerm out;
  const double det = rest.determinant();
  if (std::abs(det) <= 1e-20)
    throw Error(ErrorCode::degenerate_triangle, "degenerate rest triangle");
  const Mat2 inv = rest.inverse();
  const double area = 0.5 * std::abs(det);
  const Vec3 d1 = x.col(1) - x.col(0), d2 = x.col(2) - x.col(0);
  const Vec3 wu = d1 * inv(0, 0) + d2 * inv(1, 0);
  const Vec3 wv = d1 * inv(0, 1) + d2 * inv(1, 1);
  // dw_u/dx_i = au[i] * I, dw_v/dx_i = av[i] * I
  const Vec3 au(-inv(0, 0) - inv(1, 0), inv(0, 0), inv(1, 0));
  const Vec3 av(-inv(0, 1) - inv(1, 1), inv(0, 1), inv(1, 1));

  auto add_condition = [&](double c, const Vector9d& grad, double k, double kd) {
    out.energy += 0.5 * k * area * c * c;
    out.elastic_force -= k * area * c * grad;
    const double cdot = grad.dot(Eigen::Map<const Vector9d>(v.data()));
    out.force -= kd * area * cdot * grad;
    out.dfdx -= k * area * grad * grad.transpose();
    out.dfdv -= kd * area * grad * grad.transpose();
  };

  const Vec3* axes[2] = {&wu, &wv};
  const Vec3* coeffs[2] = {&au, &av};
  for (int d = 0; d < 2; ++d) {
    const double len = axes[d]->norm();
    if (len <= 1e-300) continue;
    const Vec3 dir = *axes[d] / len;
    const double c = len - 1.0;
    out.stretch_condition[d] = c;
    Vector9d grad;
    for (int i = 0; i < 3; ++i) grad.segment<3>(3 * i) = (*coeffs[d])[i] * dir;
    add_condition(c, grad, params.k_stretch, params.kd_stretch);
    if (exact_hessian || c > 0.0) {
      const Mat3 transverse = c / len * (Mat3::Identity() - dir * dir.transpose());
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
          out.dfdx.block<3, 3>(3 * i, 3 * j) -=
              params.k_stretch * area * (*coeffs[d])[i] * (*coeffs[d])[j] * transverse;
    }
  }

  const double shear = wu.dot(wv);
  out.shear_condition = shear;
  Vector9d grad;
  for (int i = 0; i < 3; ++i) grad.segment<3>(3 * i) = au[i] * wv + av[i] * wu;
  add_condition(shear, grad, params.k_shear, params.kd_shear);
  if (exact_hessian)
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        out.dfdx.block<3, 3>(3 * i, 3 * j) -=
            params.k_shear * area * shear * (au[i] * av[j] + av[i] * au[j]) * Mat3::Identity();

  out.force += out.elastic_force;
  return out;
}

BendTerm bend_energy(const Eigen::Matrix<double, 3, 4>& x, const Eigen::Matrix<double, 3, 4>& v,
                     const SimParams& params) {
  BendTerm out;
  const Vec3 e0 = x.col(0), e1 = x.col(1), o1 = x.col(2), o2 = x.col(3);
  const Vec3 E = e1 - e0;
  const Vec3 n1 = (o1 - e0).cross(o1 - e1);
  const Vec3 n2 = (o2 - e1).cross(o2 - e0);
  const double elen = E.norm(), n1sq = n1.squaredNorm(), n2sq = n2.squaredNorm();
  if (elen <= 1e-300 || n1sq <= 1e-300 || n2sq <= 1e-300) return out;
  const Vec3 ehat = E / elen;
  const Vec3 m1 = n1.normalized(), m2 = n2.normalized();
  out.angle = std::atan2(m1.cross(m2).dot(ehat), m1.dot(m2));

  const Vec3 g1 = n1 / n1sq, g2 = n2 / n2sq;
  Vector12d grad;
  grad.segment<3>(0) = -((o1 - e1).dot(ehat) * g1 + (o2 - e1).dot(ehat) * g2);
  grad.segment<3>(3) = (o1 - e0).dot(ehat) * g1 + (o2 - e0).dot(ehat) * g2;
  grad.segment<3>(6) = -elen * g1;
  grad.segment<3>(9) = -elen * g2;

  const double k = params.k_bend, kd = params.kd_bend;
  out.energy = 0.5 * k * out.angle * out.angle;
  out.elastic_force = -k * out.angle * grad;
  const double rate = grad.dot(Eigen::Map<const Vector12d>(v.data()));
  out.force = out.elastic_force - kd * rate * grad;
  out.dfdx = -k * grad * grad.transpose();
  out.dfdv = -kd * grad * grad.transpose();
  return out;
}

namespace {

template <int N>
void scatter(std::vector<Eigen::Triplet<double>>& triplets, const std::array<int, N>& verts,
             const Eigen::Matrix<double, 3 * N, 3 * N>& block) {
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < N; ++j)
      for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b) {
          const double value = block(3 * i + a, 3 * j + b);
          if (value != 0.0) triplets.emplace_back(3 * verts[i] + a, 3 * verts[j] + b, value);
        }
}

struct BendEdge {
  std::array<int, 4> verts;  // edge start, edge end, opposite in first face, opposite in second
};

std::vector<BendEdge> bend_edges(const TriangleMesh& mesh) {
  const MeshTopology topo(mesh);
  std::vector<BendEdge> out;
  for (const auto& e : topo.edges) {
    if (e.boundary()) continue;
    int a = -1, b = -1, c = -1;
    for (int k = 0; k < 3; ++k) {
      const int p = mesh.F(e.f0, k), q = mesh.F(e.f0, (k + 1) % 3);
      if ((p == e.v0 && q == e.v1) || (p == e.v1 && q == e.v0)) {
        a = p;
        b = q;
        c = mesh.F(e.f0, (k + 2) % 3);
      }
    }
    int d = -1;
    for (int k = 0; k < 3; ++k) {
      const int x = mesh.F(e.f1, k);
      if (x != a && x != b) d = x;
    }
    out.push_back({{a, b, c, d}});
  }
  return out;
}

}  // namespace

ClothForces assemble_forces(const TriangleMesh& rest, const Eigen::MatrixX3d& x,
                            const Eigen::MatrixX3d& v, const SimParams& params,
                            bool exact_hessian) {
  const int n = rest.num_vertices();
  ClothForces out;
  out.force = Eigen::VectorXd::Zero(3 * n);
  out.elastic_force = Eigen::VectorXd::Zero(3 * n);
  std::vector<Eigen::Triplet<double>> jx, jv;
  jx.reserve(static_cast<std::size_t>(rest.num_faces()) * 81);
  jv.reserve(static_cast<std::size_t>(rest.num_faces()) * 81);

  int skipped = 0;
  for (int f = 0; f < rest.num_faces(); ++f) {
    Mat2 P;
    try {
      P = local_frame_2d(rest.triangle(f));
    } catch (const Error&) {
      ++skipped;
      continue;
    }
    const std::array<int, 3> verts{rest.F(f, 0), rest.F(f, 1), rest.F(f, 2)};
    Mat3 xf, vf;
    for (int k = 0; k < 3; ++k) {
      xf.col(k) = x.row(verts[k]).transpose();
      vf.col(k) = v.row(verts[k]).transpose();
    }
    const auto term = stretch_shear_condition(P, xf, vf, params, exact_hessian);
    out.energy += term.energy;
    for (int k = 0; k < 3; ++k) {
      out.force.segment<3>(3 * verts[k]) += term.force.segment<3>(3 * k);
      out.elastic_force.segment<3>(3 * verts[k]) += term.elastic_force.segment<3>(3 * k);
    }
    scatter<3>(jx, verts, term.dfdx);
    scatter<3>(jv, verts, term.dfdv);
  }
  if (skipped > 0) log::warn("{} degenerate rest triangles excluded from the cloth model", skipped);

  if (params.k_bend > 0.0 || params.kd_bend > 0.0) {
    for (const auto& edge : bend_edges(rest)) {
      Eigen::Matrix<double, 3, 4> xe, ve;
      for (int k = 0; k < 4; ++k) {
        xe.col(k) = x.row(edge.verts[k]).transpose();
        ve.col(k) = v.row(edge.verts[k]).transpose();
      }
      const auto term = bend_energy(xe, ve, params);
      out.energy += term.energy;
      for (int k = 0; k < 4; ++k) {
        out.force.segment<3>(3 * edge.verts[k]) += term.force.segment<3>(3 * k);
        out.elastic_force.segment<3>(3 * edge.verts[k]) += term.elastic_force.segment<3>(3 * k);
      }
      scatter<4>(jx, edge.verts, term.dfdx);
      scatter<4>(jv, edge.verts, term.dfdv);
    }
  }

  out.dfdx.resize(3 * n, 3 * n);
  out.dfdx.setFromTriplets(jx.begin(), jx.end());
  out.dfdv.resize(3 * n, 3 * n);
  out.dfdv.setFromTriplets(jv.begin(), jv.end());
  return out;
}

Eigen::VectorXd lumped_masses(const TriangleMesh& rest, double density) {
  Eigen::VectorXd m = Eigen::VectorXd::Zero(rest.num_vertices());
  for (int f = 0; f < rest.num_faces(); ++f) {
    const double share = rest.face_area(f) * density / 3.0;
    for (int k = 0; k < 3; ++k) m[rest.F(f, k)] += share;
  }
  // Isolated or fully degenerate vertices still need a positive mass.
  const double floor = m.size() > 0 && m.maxCoeff() > 0.0 ? 1e-6 * m.maxCoeff() : 1e-9;
  for (Eigen::Index i = 0; i < m.size(); ++i) m[i] = std::max(m[i], floor);
  return m;
}

StepStats step(GarmentState& garment, const Body& body, const SimParams& params) {
  const int n = garment.num_vertices();
  const double h = params.h;
  const Eigen::MatrixX3d& x = garment.sim.V;
  const Eigen::MatrixX3d& v = garment.velocities;
  const Eigen::VectorXd mass = lumped_masses(garment.rest, params.density);
  const ClothForces forces = assemble_forces(garment.rest, x, v, params);

  Eigen::VectorXd vflat(3 * n);
  for (int i = 0; i < n; ++i) vflat.segment<3>(3 * i) = v.row(i).transpose();
  Eigen::VectorXd f = forces.force;
  for (int i = 0; i < n; ++i) f.segment<3>(3 * i) += mass[i] * params.gravity;

  Eigen::SparseMatrix<double> A = -h * forces.dfdv - (h * h) * forces.dfdx;
  {
    Eigen::VectorXd diag(3 * n);
    for (int i = 0; i < n; ++i) diag.segment<3>(3 * i).setConstant(mass[i]);
    Eigen::SparseMatrix<double> M(3 * n, 3 * n);
    std::vector<Eigen::Triplet<double>> t;
    for (int i = 0; i < 3 * n; ++i) t.emplace_back(i, i, diag[i]);
    M.setFromTriplets(t.begin(), t.end());
    A += M;
  }
  Eigen::VectorXd b = h * (f + h * (forces.dfdx * vflat));
  StepStats stats;

  // Velocity filtering: dv = S y + z with S a per-vertex projector. Pinned
  // vertices are fully prescribed so they land on their anchor, which sits on
  // the avatar pushed out by the comfort offset. Vertices resting on the body
  // and pushed into it lose the normal direction from the solve.
  std::vector<Mat3> filter(n, Mat3::Identity());
  Eigen::VectorXd z = Eigen::VectorXd::Zero(3 * n);
  std::vector<std::pair<int, Vec3>> anchors;
  Eigen::MatrixX3d fresh_normals;
  if (!garment.pins.empty() && body.normals.rows() != body.mesh.num_vertices())
    fresh_normals = body.mesh.vertex_normals();
  const Eigen::MatrixX3d& normals = fresh_normals.rows() > 0 ? fresh_normals : body.normals;
  for (const auto& [vertex, anchor] : garment.pins) {
    const Vec3 target = anchor.position(body.mesh) +
                        garment.comfort_offset * anchor.normal(body.mesh, normals);
    anchors.emplace_back(vertex, target);
    filter[vertex].setZero();
    z.segment<3>(3 * vertex) = (target - x.row(vertex).transpose()) / h - v.row(vertex).transpose();
  }
  if (!body.sdf.empty()) {
    const double reach = garment.comfort_offset + 0.1 * body.sdf.cell();
    for (int i = 0; i < n; ++i) {
      if (garment.is_pinned(i)) continue;
      const auto s = body.sdf.query(x.row(i).transpose(), false);
      if (s.distance >= reach || s.gradient.squaredNorm() == 0.0) continue;
      const Vec3& normal = s.gradient;
      if (f.segment<3>(3 * i).dot(normal) >= 0.0) continue;
      filter[i] -= normal * normal.transpose();
      z.segment<3>(3 * i) = -v.row(i).dot(normal) * normal;
      ++stats.contacts;
    }
  }

  Eigen::SparseMatrix<double> S(3 * n, 3 * n), Q(3 * n, 3 * n);
  {
    std::vector<Eigen::Triplet<double>> ts, tq;
    for (int i = 0; i < n; ++i)
      for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) {
          const double value = filter[i](r, c);
          const double complement = (r == c ? 1.0 : 0.0) - value;
          if (value != 0.0) ts.emplace_back(3 * i + r, 3 * i + c, value);
          if (complement != 0.0) tq.emplace_back(3 * i + r, 3 * i + c, complement);
        }
    S.setFromTriplets(ts.begin(), ts.end());
    Q.setFromTriplets(tq.begin(), tq.end());
  }
  const Eigen::SparseMatrix<double> filtered = Eigen::SparseMatrix<double>(S * A * S) + Q;
  const Eigen::VectorXd rhs = S * (b - A * z);

  Eigen::VectorXd dv = z;
  const double bnorm = rhs.norm();
  if (bnorm > 0.0) {
    Eigen::ConjugateGradient<Eigen::SparseMatrix<double>, Eigen::Lower | Eigen::Upper> cg;
    cg.setTolerance(params.solver_tolerance);
    cg.setMaxIterations(params.solver_max_iterations);
    cg.compute(filtered);
    const Eigen::VectorXd y = cg.solve(rhs);
    stats.iterations = static_cast<int>(cg.iterations());
    stats.residual = (filtered * y - rhs).norm() / bnorm;
    if (!y.allFinite() || cg.info() != Eigen::Success) {
      throw Error(ErrorCode::solver_failure,
                  fmt::format("implicit step did not converge: residual {:.3g} after {} iterations",
                              stats.residual, stats.iterations));
    }
    dv += S * y;
  }

  Eigen::MatrixX3d vnew = v;
  for (int i = 0; i < n; ++i) vnew.row(i) += dv.segment<3>(3 * i).transpose();
  Eigen::MatrixX3d xnew = x + h * vnew;
  for (const auto& [vertex, target] : anchors) xnew.row(vertex) = target.transpose();
  stats.collisions =
      resolve_collisions(xnew, vnew, body.sdf, garment.comfort_offset, garment.pins);
  garment.sim.V = std::move(xnew);
  garment.velocities = std::move(vnew);
  return stats;
}

int resolve_collisions(Eigen::MatrixX3d& positions, Eigen::MatrixX3d& velocities,
                       const SignedDistanceField& sdf, double offset,
                       const std::map<int, SurfacePoint>& pins) {
  if (sdf.empty()) return 0;
  int moved = 0, clamped = 0;
  for (Eigen::Index i = 0; i < positions.rows(); ++i) {
    if (pins.count(static_cast<int>(i))) continue;
    Vec3 p = positions.row(i).transpose();
    auto s = sdf.query(p, false);
    if (s.clamped) ++clamped;
    if (s.distance >= offset) continue;
    Vec3 normal = s.gradient;
    for (int iter = 0; iter < 4 && s.distance < offset; ++iter) {
      if (s.gradient.squaredNorm() == 0.0) break;
      normal = s.gradient;
      p += (offset - s.distance) * normal;
      s = sdf.query(p, false);
    }
    if (s.gradient.squaredNorm() > 0.0) normal = s.gradient;
    positions.row(i) = p.transpose();
    const Vec3 vel = velocities.row(i).transpose();
    velocities.row(i) = (vel - vel.dot(normal) * normal).transpose();
    ++moved;
  }
  if (clamped > 0) log::warn("{} cloth vertices outside the distance grid; clamped", clamped);
  return moved;
}

}  // namespace drape
