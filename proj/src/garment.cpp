#include "drape/garment.hpp"

#include <cmath>

#include "drape/adapt.hpp"
#include "drape/embed.hpp"
#include "drape/error.hpp"
#include "drape/geometry.hpp"
#include "drape/polyline.hpp"
#include "drape/region.hpp"
#include "drape/remesh.hpp"
#include "drape/topology.hpp"

namespace drape {

GarmentState make_garment(TriangleMesh rest) {
  GarmentState g;
  rest.face_channels.clear();
  rest.vertex_channels.clear();
  g.sim = rest;
  g.velocities = Eigen::MatrixX3d::Zero(rest.num_vertices(), 3);
  g.paint_factors = Eigen::VectorXd::Ones(rest.num_faces());
  g.rest = std::move(rest);
  return g;
}

GarmentState& DesignSession::require_garment() {
  if (!garment) throw Error(ErrorCode::invalid_argument, "no garment has been created");
  return *garment;
}

void set_active_pose(DesignSession& session, int pose) {
  if (pose < 0 || pose >= session.poses.size())
    throw Error(ErrorCode::invalid_argument, "pose index " + std::to_string(pose) + " out of range");
  session.active_pose = pose;
}

int boundary_create(DesignSession& session, const std::vector<int>& clicked_vertices,
                    int smoothing_iterations) {
  if (clicked_vertices.size() < 3)
    throw Error(ErrorCode::invalid_argument, "a boundary needs at least three clicks");
  const TriangleMesh& mesh = session.active_mesh();
  for (int v : clicked_vertices)
    if (v < 0 || v >= mesh.num_vertices())
      throw Error(ErrorCode::invalid_argument, "clicked vertex out of range");
  const MeshTopology topo(mesh);
  std::vector<int> loop;
  const std::size_t n = clicked_vertices.size();
  for (std::size_t i = 0; i < n; ++i) {
    const auto path =
        shortest_edge_path(mesh, topo, clicked_vertices[i], clicked_vertices[(i + 1) % n]);
    loop.insert(loop.end(), path.begin(), path.end() - 1);
  }
  if (loop.size() < 3) throw Error(ErrorCode::invalid_argument, "boundary loop is degenerate");
  auto polyline = polyline_from_vertices(mesh, topo, loop, true);
  polyline = smooth_polyline(mesh, polyline, smoothing_iterations);
  session.boundaries.push_back(std::move(polyline));
  return static_cast<int>(session.boundaries.size()) - 1;
}

GarmentState& garment_from_region(DesignSession& session, int seed, double target_edge) {
  if (session.boundaries.empty())
    throw Error(ErrorCode::invalid_argument, "no boundary has been drawn");
  TriangleMesh region = extract_region(session.active_mesh(), session.boundaries, seed);
  session.garment = make_garment(isotropic_remesh(region, target_edge, false));
  return *session.garment;
}

namespace {

// Carries pins and paint factors over to a remeshed garment: pins follow
// vertices that kept their position, factors the closest old face.
void rebuild_garment(GarmentState& garment, TriangleMesh rest) {
  const TriangleMesh old = garment.rest;
  GarmentState next = make_garment(std::move(rest));
  next.comfort_offset = garment.comfort_offset;
  next.seams = garment.seams;
  if (!garment.pins.empty()) {
    for (const auto& [vertex, anchor] : garment.pins) {
      const Vec3 p = old.vertex(vertex);
      int best = -1;
      double best_d = 1e-10;
      for (int v = 0; v < next.num_vertices(); ++v) {
        const double d = (next.rest.vertex(v) - p).squaredNorm();
        if (d < best_d) {
          best_d = d;
          best = v;
        }
      }
      if (best >= 0) next.pins[best] = anchor;
    }
  }
  if ((garment.paint_factors.array() != 1.0).any()) {
    const TriangleTree tree(old);
    for (int f = 0; f < next.num_faces(); ++f) {
      const Vec3 c = next.rest.triangle(f).rowwise().mean();
      next.paint_factors[f] = garment.paint_factors[tree.closest(c).face];
    }
  }
  garment = std::move(next);
}

}  // namespace

void garment_extend(GarmentState& garment, int loop_index, const Vec3& target_point) {
  if (!garment.seams.empty())
    throw Error(ErrorCode::invalid_argument, "cannot extend a garment after cutting seams");
  const MeshTopology topo(garment.rest);
  const auto loops = topo.boundary_loops(garment.rest);
  if (loop_index < 0 || loop_index >= static_cast<int>(loops.size()))
    throw Error(ErrorCode::invalid_argument,
                "boundary loop " + std::to_string(loop_index) + " does not exist");
  const auto& loop = loops[loop_index];
  const int m = static_cast<int>(loop.size());
  Eigen::MatrixX3d points(m, 3);
  for (int i = 0; i < m; ++i) points.row(i) = garment.rest.V.row(loop[i]);
  const Vec3 centroid = points.colwise().mean().transpose();
  const Vec3 area = vector_area(points);
  if (area.norm() <= 0.0) throw Error(ErrorCode::invalid_argument, "boundary loop has no area");
  // Face-oriented boundaries have their vector area pointing into the garment.
  const Vec3 axis = -area.normalized();

  const Vec3 rel = target_point - centroid;
  const double distance = rel.dot(axis);
  if (distance <= 0.0)
    throw Error(ErrorCode::invalid_argument, "extension target lies behind the boundary loop");
  const double target_radius = (rel - distance * axis).norm();
  double mean_radius = 0.0;
  for (int i = 0; i < m; ++i) {
    const Vec3 r = points.row(i).transpose() - centroid;
    mean_radius += (r - r.dot(axis) * axis).norm();
  }
  mean_radius /= m;
  const double edge = mean_edge_length(garment.rest);
  const double scale = target_radius > 1e-3 * edge && mean_radius > 0.0
                           ? target_radius / mean_radius
                           : 1.0;

  const int rings = std::max(1, static_cast<int>(std::lround(distance / edge)));
  TriangleMesh out = garment.rest;
  const int n0 = out.num_vertices(), f0 = out.num_faces();
  out.V.conservativeResize(n0 + rings * m, 3);
  out.F.conservativeResize(f0 + 2 * rings * m, 3);
  for (int r = 1; r <= rings; ++r) {
    const double s = static_cast<double>(r) / rings;
    for (int i = 0; i < m; ++i) {
      const Vec3 p = points.row(i).transpose();
      const Vec3 moved = centroid + distance * axis + scale * (p - centroid);
      out.V.row(n0 + (r - 1) * m + i) = ((1.0 - s) * p + s * moved).transpose();
    }
  }
  auto ring_vertex = [&](int r, int i) { return r == 0 ? loop[i] : n0 + (r - 1) * m + i; };
  int row = f0;
  for (int r = 0; r < rings; ++r)
    for (int i = 0; i < m; ++i) {
      const int j = (i + 1) % m;
      // Existing faces contain loop[i] -> loop[j]; the band uses the reverse.
      out.F.row(row++) << ring_vertex(r, j), ring_vertex(r, i), ring_vertex(r + 1, i);
      out.F.row(row++) << ring_vertex(r, j), ring_vertex(r + 1, i), ring_vertex(r + 1, j);
    }
  rebuild_garment(garment, isotropic_remesh(out, edge, true));
}

void garment_paint(GarmentState& garment, const Eigen::VectorXd& weights, double max_scale) {
  const int nf = garment.num_faces();
  if (weights.size() != nf)
    throw Error(ErrorCode::invalid_argument, "paint needs one weight per face");
  if ((weights.array() < 0.0).any() || (weights.array() > 1.0).any() || !weights.allFinite())
    throw Error(ErrorCode::invalid_argument, "paint weights must lie in [0,1]");
  if (!(max_scale >= 1.0)) throw Error(ErrorCode::invalid_argument, "max_scale must be >= 1");
  const Eigen::VectorXd factors = (1.0 + weights.array() * (max_scale - 1.0)).matrix();
  garment.paint_factors = factors;
  if ((weights.array() == 0.0).all()) return;

  std::vector<Mat2> targets(nf);
  for (int f = 0; f < nf; ++f) targets[f] = factors[f] * local_frame_2d(garment.rest.triangle(f));
  std::vector<int> fixed;
  for (const auto& [vertex, anchor] : garment.pins) fixed.push_back(vertex);
  garment.rest.V = arap_stitch(garment.rest, targets, fixed).mesh.V;
}

void garment_set_offset(GarmentState& garment, double distance) {
  if (!(distance >= 0.0 && distance <= 0.1))
    throw Error(ErrorCode::invalid_argument, "offset must lie in [0, 0.1] m");
  garment.comfort_offset = distance;
}

void garment_pin(GarmentState& garment, const TriangleMesh& avatar,
                 const std::vector<int>& vertices) {
  const TriangleTree tree(avatar);
  const Eigen::MatrixX3d normals = avatar.vertex_normals();
  for (int v : vertices) {
    if (v < 0 || v >= garment.num_vertices())
      throw Error(ErrorCode::invalid_argument, "pinned vertex out of range");
    const Vec3 x = garment.sim.vertex(v);
    auto hit = tree.closest(x);
    SurfacePoint anchor{hit.face, hit.bary};
    // Step back along the smoothed normal so that the offset anchor lands on
    // the vertex instead of snapping to the nearest avatar corner.
    for (int iter = 0; iter < 8 && garment.comfort_offset > 0.0; ++iter) {
      hit = tree.closest(x - garment.comfort_offset * anchor.normal(avatar, normals));
      anchor = SurfacePoint{hit.face, hit.bary};
    }
    garment.pins[v] = anchor;
  }
}

void garment_unpin(GarmentState& garment, const std::vector<int>& vertices) {
  for (int v : vertices) garment.pins.erase(v);
}

void garment_cut_seam(GarmentState& garment, const BarycentricPolyline& curve) {
  if (curve.samples.size() < 2) throw Error(ErrorCode::invalid_argument, "seam needs two samples");
  if (!barycentric_valid(curve, garment.num_faces()))
    throw Error(ErrorCode::invalid_argument, "seam samples are not on the rest mesh");
  const CurveEmbedding embedding = embed_curves(garment.rest, {curve}, true);

  TriangleMesh rest = embedding.mesh;
  TriangleMesh sim = rest;
  Eigen::MatrixX3d velocities(rest.num_vertices(), 3);
  for (int v = 0; v < rest.num_vertices(); ++v) {
    const SurfacePoint& origin = embedding.vertex_origin[v];
    sim.V.row(v) = origin.position(garment.sim).transpose();
    Vec3 vel = Vec3::Zero();
    for (int k = 0; k < 3; ++k)
      vel += origin.bary[k] * garment.velocities.row(garment.rest.F(origin.face, k)).transpose();
    velocities.row(v) = vel.transpose();
  }
  const auto source = split_along_edges(rest, embedding.cut_edges);
  sim.F = rest.F;
  sim.V.conservativeResize(rest.num_vertices(), 3);
  velocities.conservativeResize(rest.num_vertices(), 3);
  for (int v = 0; v < rest.num_vertices(); ++v) {
    sim.V.row(v) = sim.V.row(source[v]);
    velocities.row(v) = velocities.row(source[v]);
  }

  Eigen::VectorXd factors(rest.num_faces());
  for (int f = 0; f < rest.num_faces(); ++f)
    factors[f] = garment.paint_factors[embedding.face_parent[f]];
  garment.rest = std::move(rest);
  garment.sim = std::move(sim);
  garment.velocities = std::move(velocities);
  garment.paint_factors = std::move(factors);
  garment.seams.push_back(curve);
}

}  // namespace drape
