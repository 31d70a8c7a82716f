#pragma once

#include "tpmc/geometry.hpp"

#include <vector>

namespace tpmc {

struct QuadraturePoint {
  Coordinate position;
  double weight;
};

// Rule integrating polynomials of total degree <= order exactly over the
// reference element; weights sum to its volume.  Orders 1..5.
std::vector<QuadraturePoint> quadrature_rule(GeometryKind kind, int order);

}  // namespace tpmc
