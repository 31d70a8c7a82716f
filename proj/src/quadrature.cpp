#include "tpmc/quadrature.hpp"

#include <cmath>
#include <stdexcept>

namespace tpmc {
namespace {

struct Node1d {
  double x, w;
};

// Gauss-Legendre on [0,1]
std::vector<Node1d> gauss_rule(int order) {
  const double s3 = 1.0 / (2.0 * std::sqrt(3.0));
  const double s35 = std::sqrt(3.0 / 5.0) / 2.0;
  switch ((order + 2) / 2) {  // point count for exact degree `order`
    case 1: return {{0.5, 1.0}};
    case 2: return {{0.5 - s3, 0.5}, {0.5 + s3, 0.5}};
    default:
      return {{0.5 - s35, 5.0 / 18.0}, {0.5, 4.0 / 9.0}, {0.5 + s35, 5.0 / 18.0}};
  }
}

// Grundmann-Moeller simplex rule of degree 2s+1 in dimension d.  Nodes are
// barycentric (2*beta+1)/t over compositions beta of s-i; the alternating
// weights telescope to the simplex volume 1/d!.
std::vector<QuadraturePoint> grundmann_moeller(int d, int s) {
  std::vector<QuadraturePoint> rule;
  double factorial[12];
  factorial[0] = 1;
  for (int k = 1; k < 12; ++k) factorial[k] = factorial[k - 1] * k;
  for (int i = 0; i <= s; ++i) {
    const int t = d + 1 + 2 * (s - i);
    double w = std::pow(2.0, -2 * s) * std::pow(t, 2 * s + 1) /
               (factorial[i] * factorial[d + 2 * s + 1 - i]);
    if (i % 2) w = -w;
    // enumerate compositions of s-i into d+1 parts
    std::vector<int> beta(d + 1, 0);
    beta[0] = s - i;
    while (true) {
      Coordinate p{};
      for (int k = 0; k < d; ++k) p[k] = (2.0 * beta[k + 1] + 1.0) / t;
      rule.push_back({p, w});
      // next composition in colex order
      if (beta[0] > 0) {
        --beta[0];
        ++beta[1];
      } else {
        int k = 1;
        while (k <= d && beta[k] == 0) ++k;
        if (k >= d) break;
        beta[0] = beta[k] - 1;
        beta[k] = 0;
        ++beta[k + 1];
      }
    }
  }
  return rule;
}

std::vector<QuadraturePoint> simplex_rule(int d, int order) {
  return grundmann_moeller(d, std::max(0, order / 2));
}

std::vector<QuadraturePoint> tensor_rule(int dim, int order) {
  const auto g = gauss_rule(order);
  std::vector<QuadraturePoint> rule;
  for (const auto& nx : g) {
    if (dim == 1) {
      rule.push_back({{nx.x, 0, 0}, nx.w});
      continue;
    }
    for (const auto& ny : g) {
      if (dim == 2) {
        rule.push_back({{nx.x, ny.x, 0}, nx.w * ny.w});
        continue;
      }
      for (const auto& nz : g) rule.push_back({{nx.x, ny.x, nz.x}, nx.w * ny.w * nz.w});
    }
  }
  return rule;
}

}  // namespace

std::vector<QuadraturePoint> quadrature_rule(GeometryKind kind, int order) {
  if (order < 1 || order > 5) throw std::invalid_argument("quadrature_rule: order must be 1..5");
  switch (kind) {
    case GeometryKind::line: return tensor_rule(1, order);
    case GeometryKind::quadrilateral: return tensor_rule(2, order);
    case GeometryKind::hexahedron: return tensor_rule(3, order);
    case GeometryKind::triangle: return simplex_rule(2, order);
    case GeometryKind::tetrahedron: return simplex_rule(3, order);
    case GeometryKind::prism: {
      // triangle rule times a vertical Gauss rule
      std::vector<QuadraturePoint> rule;
      for (const auto& t : simplex_rule(2, order))
        for (const auto& g : gauss_rule(order))
          rule.push_back({{t.position[0], t.position[1], g.x}, t.weight * g.w});
      return rule;
    }
    case GeometryKind::pyramid: {
      // two affine tetrahedra (0,1,2,4) and (1,3,2,4); both have unit
      // Jacobian determinant, so tet weights carry over unchanged
      const auto tet = simplex_rule(3, order);
      std::vector<QuadraturePoint> rule;
      for (const auto& q : tet) rule.push_back(q);
      for (const auto& q : tet) {
        const double u = q.position[0], v = q.position[1], w = q.position[2];
        rule.push_back({{1 - v - w, u + v, w}, q.weight});
      }
      return rule;
    }
  }
  throw std::invalid_argument("quadrature_rule: unknown geometry");
}

}  // namespace tpmc
