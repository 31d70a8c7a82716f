#pragma once

#include "tpmc/geometry.hpp"

#include <functional>
#include <span>

namespace tpmc {

// Integral of f over the embedded part: quadrature on the part's reference
// shape, transported with the metric factor of the (multilinear) embedding.
// Works for volume parts and lower-dimensional parts alike; the integrand
// receives ambient coordinates.
double integrate_over_part(GeometryKind kind, std::span<const Coordinate> corners, int order,
                           const std::function<double(const Coordinate&)>& f);

// Volume / area / length of the part.
double part_measure(GeometryKind kind, std::span<const Coordinate> corners, int order);

}  // namespace tpmc
