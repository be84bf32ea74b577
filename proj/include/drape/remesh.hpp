#pragma once

#include "drape/mesh.hpp"

namespace drape {

// Split / collapse / flip / relax remeshing toward a uniform edge length.
// With `preserve_boundary` the input boundary vertices never move and the
// boundary only gains vertices placed on its original segments; otherwise
// boundary vertices slide along (and are reprojected onto) the original
// boundary polyline. Interior vertices are reprojected onto the input surface
// after every relaxation pass. Throws for targets below 1e-5 m.
TriangleMesh isotropic_remesh(const TriangleMesh& mesh, double target_edge_length,
                              bool preserve_boundary, int iterations = 10);

// Fraction of edges whose length lies in [lo, hi].
double edge_length_fraction(const TriangleMesh& mesh, double lo, double hi);
double mean_edge_length(const TriangleMesh& mesh);

}  // namespace drape
