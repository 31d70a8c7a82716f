#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

namespace tpmc {

// All coordinates are stored 3d; lower-dimensional geometries pad with z=0.
using Coordinate = std::array<double, 3>;

enum class GeometryKind {
  line,
  triangle,
  quadrilateral,
  tetrahedron,
  prism,
  pyramid,
  hexahedron
};

int dimension(GeometryKind kind);
int corner_count(GeometryKind kind);
const char* geometry_name(GeometryKind kind);

struct ReferenceFace {
  GeometryKind kind;
  std::vector<int> vertices;  // order induces the standalone numbering of `kind`
};

// Cube-type corners are numbered binarily: corner k sits at (k&1, k>>1&1, k>>2&1).
// Face 2k of a cube-type element is {x_k = 0}, face 2k+1 is {x_k = 1}.
struct ReferenceElement {
  GeometryKind kind;
  int dim;
  std::vector<Coordinate> corners;
  std::vector<std::array<int, 2>> edges;
  std::vector<ReferenceFace> faces;
};

const ReferenceElement& reference_element(GeometryKind kind);

struct LocalScalarField {
  GeometryKind geometry;
  std::array<double, 8> values{};

  std::span<const double> data() const {
    return {values.data(), static_cast<std::size_t>(corner_count(geometry))};
  }
};

LocalScalarField make_field(GeometryKind kind, std::span<const double> values);

// First-order (multilinear / rational for pyramids) shape functions.
void shape_values(GeometryKind kind, const Coordinate& xi, std::span<double> out);
void shape_gradients(GeometryKind kind, const Coordinate& xi, std::span<Coordinate> out);

// Interpolates corner values at a reference point; throws std::domain_error if
// the point lies outside the closed reference element (tolerance 1e-12).
double evaluate_field(GeometryKind kind, std::span<const double> values, const Coordinate& xi);

inline double evaluate_field(const LocalScalarField& field, const Coordinate& xi) {
  return evaluate_field(field.geometry, field.data(), xi);
}

bool contains_reference_point(GeometryKind kind, const Coordinate& xi, double tol = 1e-12);

// Multilinear embedding of a part spanned by `corners` evaluated at `xi`.
Coordinate map_point(GeometryKind kind, std::span<const Coordinate> corners, const Coordinate& xi);

// sqrt(det(J^T J)) of the embedding at xi; J is 3 x dim(kind).  Covers volume
// parts (|det J|) and codimension-1 parts (area/length factor).  Degenerate
// parts yield 0.
double jacobian_measure(GeometryKind kind, std::span<const Coordinate> corners, const Coordinate& xi);

// Geometry of a decomposition part identified by ambient role: dim 3 parts may
// have 4..8 vertices (tet/pyramid/prism/hex), dim 2 parts 3 or 4 (tri/quad),
// dim 1 parts 2 (line).
GeometryKind part_geometry(int dim, int vertex_count);

}  // namespace tpmc
