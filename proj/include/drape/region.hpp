#pragma once

#include <vector>

#include "drape/mesh.hpp"

namespace drape {

// Copies the part of `mesh` reachable from face `seed` without crossing any
// of the boundary curves. Faces crossed by a curve are split along it first,
// so the curves become exact boundaries of the result. Throws
// Error(ambiguous_seed) when the seed face is itself cut into pieces lying on
// different sides of a curve. A region that reaches the open boundary of the
// input, or that covers everything, is returned with a warning.
TriangleMesh extract_region(const TriangleMesh& mesh,
                            const std::vector<BarycentricPolyline>& boundaries, int seed);

}  // namespace drape
