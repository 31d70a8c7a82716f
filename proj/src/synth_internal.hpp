#pragma once

#include "tpmc/case_tables.hpp"
#include "tpmc/level_set_tests.hpp"

#include <array>
#include <span>
#include <string>
#include <vector>

// Internal machinery for building the decomposition tables. Everything here
// works on one cell key at a time; the public driver lives in case_tables.cpp.

namespace tpmc::synth {

// Multilinear evaluation without the reference-domain guard; synthesis probes
// step slightly outside the cell.
double eval_unchecked(GeometryKind kind, std::span<const double> values, const Coordinate& xi);

// Value-independent stand-in position for a spec (corners, feature midpoints).
// Used wherever the table layout must not depend on the drawn values.
Coordinate fixed_proxy(GeometryKind kind, std::span<const VertexSpec> pool, int idx);

// Signed Jacobian determinant of the multilinear map spanned by `corners`
// (full-dimensional shapes only).
double signed_jacobian(GeometryKind shape, std::span<const Coordinate> corners,
                       const Coordinate& xi);

// Boundary-only facet integrals on resolved positions (cycle order, quads
// treated as bilinear patches): the vector area and the signed volume of the
// cone joining `apex` to the facet.
Coordinate facet_vector_area(std::span<const Coordinate> cycle);
double facet_cone_volume(const Coordinate& apex, std::span<const Coordinate> cycle);

// --- 2D machine -----------------------------------------------------------
// Decomposition of a triangle or quadrilateral by its corner-sign key and,
// for the ambiguous quad keys, the saddle-sign outcome. Specs use face-local
// corner ids; center_vertex(1, 0) stands for "centre of this face".
struct FacePart2 {
  std::vector<int> v;  // pool indices, counter-clockwise in face coordinates
  int cls = 0;
};
struct FaceSegment {
  int a = 0, b = 0;  // pool indices of the segment ends
  int neg_cls = 0, pos_cls = 0;
};
struct FaceDecomposition {
  std::vector<VertexSpec> pool;
  std::vector<FacePart2> parts;
  std::vector<FaceSegment> segments;
  std::array<int8_t, 4> corner_cls{-1, -1, -1, -1};
  int classes = 0;
};
FaceDecomposition face_decomposition(GeometryKind kind, unsigned key, int outcome);

// --- leaf builders --------------------------------------------------------
struct LeafRequest {
  GeometryKind kind = GeometryKind::hexahedron;
  unsigned key = 0;
  std::vector<int> outcomes;   // aligned with ambiguous_faces(kind, key)
  bool tube = false;           // hexahedron centre-test verdict on this path
  std::vector<double> values;  // representative values (pseudo if unreachable)
  // Further draws that land on the same path; geometric choices must stay
  // valid on each of them, not just the representative.
  std::vector<std::vector<double>> samples;
  bool reachable = false;
};

CaseLeaf build_leaf_line(const LeafRequest& req, std::string& error);
CaseLeaf build_leaf_2d(const LeafRequest& req, std::string& error);
CaseLeaf build_leaf_3d(const LeafRequest& req, std::string& error);

}  // namespace tpmc::synth
