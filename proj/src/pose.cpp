#include "drape/pose.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <unordered_map>

#include <Eigen/Geometry>
#include <Eigen/SVD>
#include <json.hpp>

#include "drape/error.hpp"
#include "drape/log.hpp"
#include "drape/obj_io.hpp"
#include "drape/topology.hpp"

namespace drape {

PoseSet validate_pose_set(std::vector<TriangleMesh> meshes, std::vector<std::string> names,
                          int steps_per_transition) {
  if (meshes.empty()) throw Error(ErrorCode::invalid_argument, "pose set needs at least one mesh");
  if (steps_per_transition < 1)
    throw Error(ErrorCode::invalid_argument, "steps_per_transition must be positive");
  names.resize(meshes.size());
  for (std::size_t i = 0; i < names.size(); ++i)
    if (names[i].empty()) names[i] = "pose" + std::to_string(i);
  for (std::size_t i = 0; i < meshes.size(); ++i) {
    try {
      validate_mesh(meshes[i]);
    } catch (const Error& e) {
      throw Error(ErrorCode::pose_mismatch, "pose '" + names[i] + "': " + e.what());
    }
    if (i == 0) continue;
    const auto& ref = meshes[0];
    if (meshes[i].num_vertices() != ref.num_vertices())
      throw Error(ErrorCode::pose_mismatch,
                  "pose '" + names[i] + "' has " + std::to_string(meshes[i].num_vertices()) +
                      " vertices but pose '" + names[0] + "' has " +
                      std::to_string(ref.num_vertices()));
    if (meshes[i].F != ref.F) {
      int f = 0;
      if (meshes[i].num_faces() == ref.num_faces())
        while (f < ref.num_faces() && meshes[i].F.row(f) == ref.F.row(f)) ++f;
      throw Error(ErrorCode::pose_mismatch, "pose '" + names[i] + "' and pose '" + names[0] +
                                                "' differ in connectivity at face " +
                                                std::to_string(f));
    }
  }
  PoseSet set;
  set.poses = std::move(meshes);
  set.names = std::move(names);
  set.steps_per_transition = steps_per_transition;
  return set;
}

PoseSchedule make_schedule(const PoseSet& poses, const std::vector<int>& order) {
  if (order.empty()) throw Error(ErrorCode::invalid_argument, "empty pose order");
  for (int i : order)
    if (i < 0 || i >= poses.size())
      throw Error(ErrorCode::invalid_argument, "pose index " + std::to_string(i) + " out of range");
  PoseSchedule schedule;
  schedule.steps_per_transition = poses.steps_per_transition;
  if (order.size() == 1) {
    schedule.entries.push_back({order[0], order[0], 0.0});
    return schedule;
  }
  const int steps = poses.steps_per_transition;
  for (std::size_t i = 0; i + 1 < order.size(); ++i)
    for (int k = 1; k <= steps; ++k)
      schedule.entries.push_back({order[i], order[i + 1], static_cast<double>(k) / steps});
  return schedule;
}

PoseSet load_pose_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::io, "cannot read manifest " + path);
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::io, "malformed manifest " + path + ": " + e.what());
  }
  const auto base = std::filesystem::path(path).parent_path();
  std::vector<TriangleMesh> meshes;
  std::vector<std::string> names;
  for (const auto& entry : doc.at("poses")) {
    const auto obj = base / entry.at("obj").get<std::string>();
    meshes.push_back(read_obj(obj.string()));
    names.push_back(entry.value("name", std::string()));
  }
  return validate_pose_set(std::move(meshes), std::move(names),
                           doc.value("steps_per_transition", 60));
}

namespace {

Mat3 frame_with_normal(const Vec3& p0, const Vec3& p1, const Vec3& p2) {
  const Vec3 e1 = p1 - p0, e2 = p2 - p0;
  const Vec3 n = e1.cross(e2);
  const double len = n.norm();
  if (len <= 0.0) throw Error(ErrorCode::degenerate_triangle, "degenerate pose triangle");
  Mat3 m;
  m.col(0) = e1;
  m.col(1) = e2;
  m.col(2) = n / len;
  return m;
}

}  // namespace

PoseInterpolator::PoseInterpolator(const TriangleMesh& source, const TriangleMesh& target)
    : source_(source), target_(target) {
  if (source.num_vertices() != target.num_vertices() || source.F != target.F)
    throw Error(ErrorCode::pose_mismatch, "interpolated meshes differ in connectivity");
  const int nf = source.num_faces();
  const int nv = source.num_vertices();
  axis_.resize(nf);
  angle_.resize(nf);
  stretch_.resize(nf);
  tangent_projector_.resize(nf);
  grad_basis_.resize(nf);
  area_.resize(nf);

  for (int f = 0; f < nf; ++f) {
    const Vec3 s0 = source.corner(f, 0), s1 = source.corner(f, 1), s2 = source.corner(f, 2);
    const Mat3 src = frame_with_normal(s0, s1, s2);
    const Mat3 dst = frame_with_normal(target.corner(f, 0), target.corner(f, 1),
                                       target.corner(f, 2));
    const Mat3 G = dst * src.inverse();
    Eigen::JacobiSVD<Mat3> svd(G, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Mat3 U = svd.matrixU();
    Vec3 sigma = svd.singularValues();
    const Mat3 V = svd.matrixV();
    if ((U * V.transpose()).determinant() < 0) {
      U.col(2) *= -1.0;
      sigma[2] *= -1.0;
    }
    const Mat3 R = U * V.transpose();
    stretch_[f] = V * sigma.asDiagonal() * V.transpose();
    const Eigen::AngleAxisd aa(R);
    axis_[f] = aa.axis();
    angle_[f] = aa.angle();

    const Vec3 n = src.col(2);
    tangent_projector_[f] = Mat3::Identity() - n * n.transpose();
    const double twice_area = (s1 - s0).cross(s2 - s0).norm();
    area_[f] = 0.5 * twice_area;
    // Gradient of the hat function of corner i: n x (opposite edge) / 2A.
    grad_basis_[f].col(0) = n.cross(s2 - s1) / twice_area;
    grad_basis_[f].col(1) = n.cross(s0 - s2) / twice_area;
    grad_basis_[f].col(2) = n.cross(s1 - s0) / twice_area;
  }

  // Reduced Laplacian with the anchor removed.
  anchor_ = 0;
  reduced_index_.assign(nv, -1);
  int next = 0;
  for (int v = 0; v < nv; ++v)
    if (v != anchor_) reduced_index_[v] = next++;
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(static_cast<std::size_t>(nf) * 9);
  for (int f = 0; f < nf; ++f)
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        const int ri = reduced_index_[source.F(f, i)], rj = reduced_index_[source.F(f, j)];
        if (ri < 0 || rj < 0) continue;
        triplets.emplace_back(ri, rj,
                              area_[f] * grad_basis_[f].col(i).dot(grad_basis_[f].col(j)));
      }
  Eigen::SparseMatrix<double> L(next, next);
  L.setFromTriplets(triplets.begin(), triplets.end());
  solver_ = std::make_shared<Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>>>(L);
  if (solver_->info() != Eigen::Success)
    throw Error(ErrorCode::solver_failure, "pose Poisson system could not be factored");
}

TriangleMesh PoseInterpolator::at(double t) const {
  if (t < 0.0 || t > 1.0) {
    log::warn("interpolation parameter {} outside [0,1]; clamped", t);
    t = std::clamp(t, 0.0, 1.0);
  }
  const int nf = source_.num_faces();
  const int nv = source_.num_vertices();
  const Vec3 anchor_pos = (1.0 - t) * source_.vertex(anchor_) + t * target_.vertex(anchor_);

  Eigen::MatrixX3d rhs = Eigen::MatrixX3d::Zero(nv - 1, 3);
  for (int f = 0; f < nf; ++f) {
    const Mat3 R = Eigen::AngleAxisd(t * angle_[f], axis_[f]).toRotationMatrix();
    const Mat3 S = (1.0 - t) * Mat3::Identity() + t * stretch_[f];
    const Mat3 M = R * S * tangent_projector_[f];
    // Move the anchor's known contribution to the right-hand side.
    for (int i = 0; i < 3; ++i) {
      const int ri = reduced_index_[source_.F(f, i)];
      if (ri < 0) continue;
      Vec3 b = area_[f] * M * grad_basis_[f].col(i);
      for (int j = 0; j < 3; ++j)
        if (source_.F(f, j) == anchor_)
          b -= area_[f] * grad_basis_[f].col(i).dot(grad_basis_[f].col(j)) * anchor_pos;
      rhs.row(ri) += b.transpose();
    }
  }
  const Eigen::MatrixX3d x = solver_->solve(rhs);
  TriangleMesh out = source_;
  out.face_channels.clear();
  out.vertex_channels.clear();
  for (int v = 0; v < nv; ++v)
    out.V.row(v) = v == anchor_ ? Eigen::RowVector3d(anchor_pos.transpose())
                                : Eigen::RowVector3d(x.row(reduced_index_[v]));
  return out;
}

TriangleMesh interpolate_poses(const TriangleMesh& source, const TriangleMesh& target,
                               double t) {
  return PoseInterpolator(source, target).at(t);
}

PoseAnimator::PoseAnimator(const PoseSet& poses) : poses_(poses) {}

TriangleMesh PoseAnimator::evaluate(const ScheduleEntry& entry) {
  if (entry.a == entry.b || entry.t == 0.0) return poses_.poses[entry.a];
  if (entry.t == 1.0) return poses_.poses[entry.b];
  auto& slot = cache_[{entry.a, entry.b}];
  if (!slot)
    slot = std::make_unique<PoseInterpolator>(poses_.poses[entry.a], poses_.poses[entry.b]);
  return slot->at(entry.t);
}

namespace {

// Segment p-q against triangle (a,b,c), Moller-Trumbore.
bool segment_hits_triangle(const Vec3& p, const Vec3& q, const Vec3& a, const Vec3& b,
                           const Vec3& c) {
  const Vec3 d = q - p;
  const Vec3 e1 = b - a, e2 = c - a;
  const Vec3 h = d.cross(e2);
  const double det = e1.dot(h);
  if (std::abs(det) < 1e-18) return false;
  const double inv = 1.0 / det;
  const Vec3 s = p - a;
  const double u = inv * s.dot(h);
  if (u < 0.0 || u > 1.0) return false;
  const Vec3 qv = s.cross(e1);
  const double v = inv * d.dot(qv);
  if (v < 0.0 || u + v > 1.0) return false;
  const double t = inv * e2.dot(qv);
  return t >= 0.0 && t <= 1.0;
}

}  // namespace

int count_self_intersections(const TriangleMesh& mesh, int max_faces) {
  const int nf = mesh.num_faces();
  if (nf == 0) return 0;
  const int stride = std::max(1, (nf + max_faces - 1) / max_faces);
  std::vector<int> faces;
  for (int f = 0; f < nf; f += stride) faces.push_back(f);

  double mean_edge = 0.0;
  for (int f : faces) mean_edge += (mesh.corner(f, 1) - mesh.corner(f, 0)).norm();
  mean_edge /= static_cast<double>(faces.size());
  const double cell = std::max(2.0 * mean_edge * stride, 1e-9);
  const Vec3 lo = mesh.V.colwise().minCoeff().transpose();
  std::unordered_map<std::uint64_t, std::vector<int>> buckets;
  auto key = [](long i, long j, long k) {
    return (static_cast<std::uint64_t>(i & 0x1fffff) << 42) |
           (static_cast<std::uint64_t>(j & 0x1fffff) << 21) | static_cast<std::uint64_t>(k & 0x1fffff);
  };
  for (int f : faces) {
    Eigen::AlignedBox3d box;
    for (int k = 0; k < 3; ++k) box.extend(mesh.corner(f, k));
    const Eigen::Vector3i a = ((box.min() - lo) / cell).array().floor().cast<int>();
    const Eigen::Vector3i b = ((box.max() - lo) / cell).array().floor().cast<int>();
    for (int i = a[0]; i <= b[0]; ++i)
      for (int j = a[1]; j <= b[1]; ++j)
        for (int k = a[2]; k <= b[2]; ++k) buckets[key(i, j, k)].push_back(f);
  }
  std::unordered_map<std::uint64_t, bool> tested;
  int hits = 0;
  for (const auto& [cell_key, list] : buckets)
    for (std::size_t x = 0; x < list.size(); ++x)
      for (std::size_t y = x + 1; y < list.size(); ++y) {
        const int f = std::min(list[x], list[y]), g = std::max(list[x], list[y]);
        bool shares = false;
        for (int i = 0; i < 3; ++i)
          for (int j = 0; j < 3; ++j)
            if (mesh.F(f, i) == mesh.F(g, j)) shares = true;
        if (shares) continue;
        if (!tested.emplace(edge_key(f, g), true).second) continue;
        bool hit = false;
        for (int k = 0; k < 3 && !hit; ++k) {
          hit = segment_hits_triangle(mesh.corner(f, k), mesh.corner(f, (k + 1) % 3),
                                      mesh.corner(g, 0), mesh.corner(g, 1), mesh.corner(g, 2)) ||
                segment_hits_triangle(mesh.corner(g, k), mesh.corner(g, (k + 1) % 3),
                                      mesh.corner(f, 0), mesh.corner(f, 1), mesh.corner(f, 2));
        }
        if (hit) ++hits;
      }
  return hits;
}

}  // namespace drape
