#pragma once

#include <Eigen/Sparse>

#include "drape/garment_state.hpp"
#include "drape/mesh.hpp"
#include "drape/sdf.hpp"

namespace drape {

struct SimParams {
  double k_stretch = 800.0;
  double k_shear = 200.0;
  double k_bend = 1e-6;
  double kd_stretch = 100.0;
  double kd_shear = 1.0;
  double kd_bend = 1e-5;
  double h = 0.0025;
  Vec3 gravity = Vec3(0.0, -9.81, 0.0);
  double delta = 0.1;
  int adapt_every = 8;
  int steps_per_transition = 60;

  double density = 0.15;  // kg/m^2
  int sdf_resolution = 128;
  int settle_budget = 200;
  int clean_passes = 3;
  // A pass is clean when its largest stretch is within 1 + delta + this.
  double clean_tolerance = 0.005;
  double solver_tolerance = 1e-6;
  int solver_max_iterations = 2000;

  bool operator==(const SimParams&) const = default;
};

// Throws Error(invalid_argument) on non-positive h or delta, negative
// stiffness or damping, or non-positive cadences.
void validate(const SimParams& params);

// Avatar at one instant together with its distance field.
struct Body {
  TriangleMesh mesh;
  SignedDistanceField sdf;
  Eigen::MatrixX3d normals;  // per vertex; recomputed by step() when stale
};
Body make_body(TriangleMesh mesh, int sdf_resolution);

using Vector9d = Eigen::Matrix<double, 9, 1>;
using Matrix9d = Eigen::Matrix<double, 9, 9>;
using Vector12d = Eigen::Matrix<double, 12, 1>;
using Matrix12d = Eigen::Matrix<double, 12, 12>;

// Stretch and shear of one triangle. `rest` is the 2D edge matrix of the rest
// triangle (local_frame_2d); its columns define the warp (u) and weft (v)
// directions. Corner positions and velocities are the columns of x and v.
// Energy: area/2 * (k_stretch |C_stretch|^2 + k_shear C_shear^2).
struct StretchShearTerm {
  Vec2 stretch_condition = Vec2::Zero();  // |w_u| - 1, |w_v| - 1
  double shear_condition = 0.0;           // w_u . w_v
  double energy = 0.0;
  Vector9d force = Vector9d::Zero();          // elastic plus damping
  Vector9d elastic_force = Vector9d::Zero();
  Matrix9d dfdx = Matrix9d::Zero();
  Matrix9d dfdv = Matrix9d::Zero();
};
// With `exact_hessian` dfdx is the full negative energy Hessian; otherwise
// terms that can make it indefinite are dropped so the implicit system stays
// positive definite.
StretchShearTerm stretch_shear_condition(const Mat2& rest, const Mat3& x, const Mat3& v,
                                         const SimParams& params, bool exact_hessian = false);

// Dihedral bending across the edge x0-x1 with x2 opposite in the face that
// runs x0 -> x1 and x3 opposite in the other face. The rest state is flat:
// energy k_bend/2 * theta^2, with theta the signed angle between the normals.
struct BendTerm {
  double angle = 0.0;
  double energy = 0.0;
  Vector12d force = Vector12d::Zero();
  Vector12d elastic_force = Vector12d::Zero();
  Matrix12d dfdx = Matrix12d::Zero();
  Matrix12d dfdv = Matrix12d::Zero();
};
BendTerm bend_energy(const Eigen::Matrix<double, 3, 4>& x, const Eigen::Matrix<double, 3, 4>& v,
                     const SimParams& params);

// Internal forces of the whole garment for sim positions x and velocities v.
// Vectors are stacked per vertex (3i, 3i+1, 3i+2). Gravity is not included.
struct ClothForces {
  double energy = 0.0;
  Eigen::VectorXd force;
  Eigen::VectorXd elastic_force;
  Eigen::SparseMatrix<double> dfdx;
  Eigen::SparseMatrix<double> dfdv;
};
ClothForces assemble_forces(const TriangleMesh& rest, const Eigen::MatrixX3d& x,
                            const Eigen::MatrixX3d& v, const SimParams& params,
                            bool exact_hessian = false);

// Lumped vertex masses: a third of the adjacent rest areas times density.
Eigen::VectorXd lumped_masses(const TriangleMesh& rest, double density);

struct StepStats {
  int iterations = 0;
  double residual = 0.0;
  int collisions = 0;
  int contacts = 0;  // vertices whose normal velocity was constrained in the solve
};

// One implicit Euler step followed by collision resolution. Pinned vertices
// follow their anchors on `body`; vertices pressed against the body keep zero
// normal velocity during the solve. On solver failure the garment is left
// untouched and Error(solver_failure) is thrown.
StepStats step(GarmentState& garment, const Body& body, const SimParams& params);

// Pushes every unpinned vertex closer than `offset` to the body out along the
// distance gradient and removes its normal velocity. Returns the number of
// vertices moved.
int resolve_collisions(Eigen::MatrixX3d& positions, Eigen::MatrixX3d& velocities,
                       const SignedDistanceField& sdf, double offset,
                       const std::map<int, SurfacePoint>& pins = {});

}  // namespace drape
