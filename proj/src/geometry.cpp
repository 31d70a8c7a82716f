#include "tpmc/geometry.hpp"

#include <cmath>
#include <stdexcept>

namespace tpmc {

int dimension(GeometryKind kind) {
  switch (kind) {
    case GeometryKind::line: return 1;
    case GeometryKind::triangle:
    case GeometryKind::quadrilateral: return 2;
    default: return 3;
  }
}

int corner_count(GeometryKind kind) {
  switch (kind) {
    case GeometryKind::line: return 2;
    case GeometryKind::triangle: return 3;
    case GeometryKind::quadrilateral: return 4;
    case GeometryKind::tetrahedron: return 4;
    case GeometryKind::prism: return 6;
    case GeometryKind::pyramid: return 5;
    case GeometryKind::hexahedron: return 8;
  }
  return 0;
}

const char* geometry_name(GeometryKind kind) {
  switch (kind) {
    case GeometryKind::line: return "line";
    case GeometryKind::triangle: return "triangle";
    case GeometryKind::quadrilateral: return "quadrilateral";
    case GeometryKind::tetrahedron: return "tetrahedron";
    case GeometryKind::prism: return "prism";
    case GeometryKind::pyramid: return "pyramid";
    case GeometryKind::hexahedron: return "hexahedron";
  }
  return "?";
}

namespace {

ReferenceElement make_line() {
  ReferenceElement e{GeometryKind::line, 1, {{0, 0, 0}, {1, 0, 0}}, {{{0, 1}}}, {}};
  return e;
}

ReferenceElement make_triangle() {
  ReferenceElement e{GeometryKind::triangle, 2,
                     {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}},
                     {{{0, 1}}, {{0, 2}}, {{1, 2}}},
                     {}};
  for (auto& ed : e.edges)
    e.faces.push_back({GeometryKind::line, {ed[0], ed[1]}});
  return e;
}

ReferenceElement make_quadrilateral() {
  ReferenceElement e{GeometryKind::quadrilateral, 2,
                     {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {1, 1, 0}},
                     {{{0, 1}}, {{2, 3}}, {{0, 2}}, {{1, 3}}},
                     {{GeometryKind::line, {0, 2}},
                      {GeometryKind::line, {1, 3}},
                      {GeometryKind::line, {0, 1}},
                      {GeometryKind::line, {2, 3}}}};
  return e;
}

ReferenceElement make_tetrahedron() {
  ReferenceElement e{GeometryKind::tetrahedron, 3,
                     {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0, 0, 1}},
                     {{{0, 1}}, {{0, 2}}, {{1, 2}}, {{0, 3}}, {{1, 3}}, {{2, 3}}},
                     {{GeometryKind::triangle, {0, 1, 2}},
                      {GeometryKind::triangle, {0, 1, 3}},
                      {GeometryKind::triangle, {0, 2, 3}},
                      {GeometryKind::triangle, {1, 2, 3}}}};
  return e;
}

ReferenceElement make_prism() {
  ReferenceElement e{GeometryKind::prism, 3,
                     {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0, 0, 1}, {1, 0, 1}, {0, 1, 1}},
                     {{{0, 1}}, {{0, 2}}, {{1, 2}}, {{3, 4}}, {{3, 5}}, {{4, 5}},
                      {{0, 3}}, {{1, 4}}, {{2, 5}}},
                     {{GeometryKind::triangle, {0, 1, 2}},
                      {GeometryKind::triangle, {3, 4, 5}},
                      {GeometryKind::quadrilateral, {0, 1, 3, 4}},
                      {GeometryKind::quadrilateral, {0, 2, 3, 5}},
                      {GeometryKind::quadrilateral, {1, 2, 4, 5}}}};
  return e;
}

ReferenceElement make_pyramid() {
  ReferenceElement e{GeometryKind::pyramid, 3,
                     {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {1, 1, 0}, {0, 0, 1}},
                     {{{0, 1}}, {{2, 3}}, {{0, 2}}, {{1, 3}},
                      {{0, 4}}, {{1, 4}}, {{2, 4}}, {{3, 4}}},
                     {{GeometryKind::quadrilateral, {0, 1, 2, 3}},
                      {GeometryKind::triangle, {0, 2, 4}},
                      {GeometryKind::triangle, {1, 3, 4}},
                      {GeometryKind::triangle, {0, 1, 4}},
                      {GeometryKind::triangle, {2, 3, 4}}}};
  return e;
}

ReferenceElement make_hexahedron() {
  ReferenceElement e;
  e.kind = GeometryKind::hexahedron;
  e.dim = 3;
  for (int k = 0; k < 8; ++k)
    e.corners.push_back({double(k & 1), double((k >> 1) & 1), double((k >> 2) & 1)});
  for (int axis = 0; axis < 3; ++axis)
    for (int k = 0; k < 8; ++k)
      if (!(k & (1 << axis)))
        e.edges.push_back({k, k | (1 << axis)});
  for (int axis = 0; axis < 3; ++axis)
    for (int side = 0; side < 2; ++side) {
      ReferenceFace f{GeometryKind::quadrilateral, {}};
      for (int k = 0; k < 8; ++k)
        if (((k >> axis) & 1) == side)
          f.vertices.push_back(k);
      e.faces.push_back(f);
    }
  return e;
}

}  // namespace

const ReferenceElement& reference_element(GeometryKind kind) {
  static const ReferenceElement line = make_line();
  static const ReferenceElement tri = make_triangle();
  static const ReferenceElement quad = make_quadrilateral();
  static const ReferenceElement tet = make_tetrahedron();
  static const ReferenceElement prism = make_prism();
  static const ReferenceElement pyramid = make_pyramid();
  static const ReferenceElement hex = make_hexahedron();
  switch (kind) {
    case GeometryKind::line: return line;
    case GeometryKind::triangle: return tri;
    case GeometryKind::quadrilateral: return quad;
    case GeometryKind::tetrahedron: return tet;
    case GeometryKind::prism: return prism;
    case GeometryKind::pyramid: return pyramid;
    case GeometryKind::hexahedron: return hex;
  }
  return hex;
}

LocalScalarField make_field(GeometryKind kind, std::span<const double> values) {
  if (static_cast<int>(values.size()) != corner_count(kind))
    throw std::invalid_argument("make_field: value count does not match geometry");
  LocalScalarField f{kind, {}};
  for (std::size_t i = 0; i < values.size(); ++i) f.values[i] = values[i];
  return f;
}

void shape_values(GeometryKind kind, const Coordinate& xi, std::span<double> out) {
  const double x = xi[0], y = xi[1], z = xi[2];
  switch (kind) {
    case GeometryKind::line:
      out[0] = 1 - x;
      out[1] = x;
      return;
    case GeometryKind::triangle:
      out[0] = 1 - x - y;
      out[1] = x;
      out[2] = y;
      return;
    case GeometryKind::quadrilateral:
      out[0] = (1 - x) * (1 - y);
      out[1] = x * (1 - y);
      out[2] = (1 - x) * y;
      out[3] = x * y;
      return;
    case GeometryKind::tetrahedron:
      out[0] = 1 - x - y - z;
      out[1] = x;
      out[2] = y;
      out[3] = z;
      return;
    case GeometryKind::prism:
      out[0] = (1 - x - y) * (1 - z);
      out[1] = x * (1 - z);
      out[2] = y * (1 - z);
      out[3] = (1 - x - y) * z;
      out[4] = x * z;
      out[5] = y * z;
      return;
    case GeometryKind::pyramid: {
      // rational basis; its restriction to every face is (bi)linear
      const double w = 1 - z;
      if (std::abs(w) < 1e-14) {
        out[0] = out[1] = out[2] = out[3] = 0;
        out[4] = 1;
        return;
      }
      out[0] = (w - x) * (w - y) / w;
      out[1] = x * (w - y) / w;
      out[2] = y * (w - x) / w;
      out[3] = x * y / w;
      out[4] = z;
      return;
    }
    case GeometryKind::hexahedron:
      for (int k = 0; k < 8; ++k) {
        double v = 1;
        v *= (k & 1) ? x : 1 - x;
        v *= (k & 2) ? y : 1 - y;
        v *= (k & 4) ? z : 1 - z;
        out[k] = v;
      }
      return;
  }
}

void shape_gradients(GeometryKind kind, const Coordinate& xi, std::span<Coordinate> out) {
  const double x = xi[0], y = xi[1], z = xi[2];
  switch (kind) {
    case GeometryKind::line:
      out[0] = {-1, 0, 0};
      out[1] = {1, 0, 0};
      return;
    case GeometryKind::triangle:
      out[0] = {-1, -1, 0};
      out[1] = {1, 0, 0};
      out[2] = {0, 1, 0};
      return;
    case GeometryKind::quadrilateral:
      out[0] = {-(1 - y), -(1 - x), 0};
      out[1] = {1 - y, -x, 0};
      out[2] = {-y, 1 - x, 0};
      out[3] = {y, x, 0};
      return;
    case GeometryKind::tetrahedron:
      out[0] = {-1, -1, -1};
      out[1] = {1, 0, 0};
      out[2] = {0, 1, 0};
      out[3] = {0, 0, 1};
      return;
    case GeometryKind::prism:
      out[0] = {-(1 - z), -(1 - z), -(1 - x - y)};
      out[1] = {1 - z, 0, -x};
      out[2] = {0, 1 - z, -y};
      out[3] = {-z, -z, 1 - x - y};
      out[4] = {z, 0, x};
      out[5] = {0, z, y};
      return;
    case GeometryKind::pyramid: {
      double w = 1 - z;
      if (std::abs(w) < 1e-9) w = (w < 0 ? -1e-9 : 1e-9);  // quadrature never hits the apex
      const double xyw2 = x * y / (w * w);
      out[0] = {-1 + y / w, -1 + x / w, -1 + xyw2};
      out[1] = {1 - y / w, -x / w, -xyw2};
      out[2] = {-y / w, 1 - x / w, -xyw2};
      out[3] = {y / w, x / w, xyw2};
      out[4] = {0, 0, 1};
      return;
    }
    case GeometryKind::hexahedron:
      for (int k = 0; k < 8; ++k) {
        const double fx = (k & 1) ? x : 1 - x;
        const double fy = (k & 2) ? y : 1 - y;
        const double fz = (k & 4) ? z : 1 - z;
        const double sx = (k & 1) ? 1 : -1;
        const double sy = (k & 2) ? 1 : -1;
        const double sz = (k & 4) ? 1 : -1;
        out[k] = {sx * fy * fz, sy * fx * fz, sz * fx * fy};
      }
      return;
  }
}

bool contains_reference_point(GeometryKind kind, const Coordinate& xi, double tol) {
  const double x = xi[0], y = xi[1], z = xi[2];
  switch (kind) {
    case GeometryKind::line:
      return x >= -tol && x <= 1 + tol;
    case GeometryKind::triangle:
      return x >= -tol && y >= -tol && x + y <= 1 + tol;
    case GeometryKind::quadrilateral:
      return x >= -tol && x <= 1 + tol && y >= -tol && y <= 1 + tol;
    case GeometryKind::tetrahedron:
      return x >= -tol && y >= -tol && z >= -tol && x + y + z <= 1 + tol;
    case GeometryKind::prism:
      return x >= -tol && y >= -tol && x + y <= 1 + tol && z >= -tol && z <= 1 + tol;
    case GeometryKind::pyramid:
      return z >= -tol && z <= 1 + tol && x >= -tol && y >= -tol &&
             x <= 1 - z + tol && y <= 1 - z + tol;
    case GeometryKind::hexahedron:
      return x >= -tol && x <= 1 + tol && y >= -tol && y <= 1 + tol && z >= -tol &&
             z <= 1 + tol;
  }
  return false;
}

double evaluate_field(GeometryKind kind, std::span<const double> values, const Coordinate& xi) {
  if (!contains_reference_point(kind, xi))
    throw std::domain_error("evaluate_field: point outside reference element");
  std::array<double, 8> phi;
  const int n = corner_count(kind);
  shape_values(kind, xi, {phi.data(), static_cast<std::size_t>(n)});
  double acc = 0;
  for (int k = 0; k < n; ++k) acc += phi[k] * values[k];
  return acc;
}

Coordinate map_point(GeometryKind kind, std::span<const Coordinate> corners, const Coordinate& xi) {
  std::array<double, 8> phi;
  const int n = corner_count(kind);
  shape_values(kind, xi, {phi.data(), static_cast<std::size_t>(n)});
  Coordinate p{0, 0, 0};
  for (int k = 0; k < n; ++k)
    for (int i = 0; i < 3; ++i) p[i] += phi[k] * corners[k][i];
  return p;
}

double jacobian_measure(GeometryKind kind, std::span<const Coordinate> corners, const Coordinate& xi) {
  std::array<Coordinate, 8> grad;
  const int n = corner_count(kind);
  const int d = dimension(kind);
  shape_gradients(kind, xi, {grad.data(), static_cast<std::size_t>(n)});
  double J[3][3] = {};
  for (int k = 0; k < n; ++k)
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < d; ++j) J[i][j] += grad[k][j] * corners[k][i];
  // Gram determinant of the 3 x d Jacobian
  double G[3][3] = {};
  for (int a = 0; a < d; ++a)
    for (int b = 0; b < d; ++b)
      for (int i = 0; i < 3; ++i) G[a][b] += J[i][a] * J[i][b];
  double det = 0;
  if (d == 1)
    det = G[0][0];
  else if (d == 2)
    det = G[0][0] * G[1][1] - G[0][1] * G[1][0];
  else
    det = G[0][0] * (G[1][1] * G[2][2] - G[1][2] * G[2][1]) -
          G[0][1] * (G[1][0] * G[2][2] - G[1][2] * G[2][0]) +
          G[0][2] * (G[1][0] * G[2][1] - G[1][1] * G[2][0]);
  return det > 0 ? std::sqrt(det) : 0.0;
}

GeometryKind part_geometry(int dim, int vertex_count) {
  if (dim == 3) {
    switch (vertex_count) {
      case 4: return GeometryKind::tetrahedron;
      case 5: return GeometryKind::pyramid;
      case 6: return GeometryKind::prism;
      case 8: return GeometryKind::hexahedron;
    }
  } else if (dim == 2) {
    if (vertex_count == 3) return GeometryKind::triangle;
    if (vertex_count == 4) return GeometryKind::quadrilateral;
  } else if (dim == 1 && vertex_count == 2) {
    return GeometryKind::line;
  }
  throw std::invalid_argument("part_geometry: unsupported vertex count");
}

}  // namespace tpmc
