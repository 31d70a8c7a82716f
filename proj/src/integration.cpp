#include "tpmc/integration.hpp"

#include "tpmc/quadrature.hpp"

namespace tpmc {

double integrate_over_part(GeometryKind kind, std::span<const Coordinate> corners, int order,
                           const std::function<double(const Coordinate&)>& f) {
  double acc = 0;
  for (const auto& q : quadrature_rule(kind, order)) {
    const double m = jacobian_measure(kind, corners, q.position);
    if (m == 0) continue;
    acc += q.weight * m * f(map_point(kind, corners, q.position));
  }
  return acc;
}

double part_measure(GeometryKind kind, std::span<const Coordinate> corners, int order) {
  double acc = 0;
  for (const auto& q : quadrature_rule(kind, order))
    acc += q.weight * jacobian_measure(kind, corners, q.position);
  return acc;
}

}  // namespace tpmc
