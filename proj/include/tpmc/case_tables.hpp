#pragma once

#include "tpmc/geometry.hpp"
#include "tpmc/vertex_spec.hpp"

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace tpmc {

enum class Domain : uint8_t { interior, exterior };  // interior = negative side

// Volume piece of one cell decomposition. `vertices` index the leaf's spec
// pool and follow the reference ordering of `shape`.
struct VolumePart {
  GeometryKind shape;
  std::vector<int16_t> vertices;
  Domain domain = Domain::interior;
  int8_t component = 0;  // joint component id (interior components first)
};

// Interface facet stored in winding order; the winding normal points into the
// exterior. In 2D a facet is a segment, in 1D a single point.
struct InterfaceFacet {
  std::vector<int16_t> vertices;
  int8_t interior_component = 0;
  int8_t exterior_component = 0;
};

struct CaseLeaf {
  std::vector<VertexSpec> pool;
  std::vector<VolumePart> parts;
  std::vector<InterfaceFacet> interface;
  std::array<int8_t, 8> corner_component{};
  int8_t interior_components = 0;
  int8_t exterior_components = 0;
  // A value vector reaching this leaf was found while building the table.
  // Unreachable leaves (impossible test-outcome combinations) stay in the
  // tree for totality but carry only the component summary, no geometry.
  bool reachable = false;
};

struct DecisionNode {
  enum class Kind : uint8_t { face_test, center_test, leaf } kind = Kind::leaf;
  // face_test: face index; center_test: slice axis; leaf: leaf index.
  int16_t index = 0;
  int16_t on_true = -1;   // face test positive / candidate pair connected
  int16_t on_false = -1;  // face test negative or zero / pair separate
};

struct CellCase {
  std::vector<DecisionNode> nodes;  // nodes[0] is the root
  std::vector<CaseLeaf> leaves;
};

struct CaseTable {
  GeometryKind kind = GeometryKind::hexahedron;
  std::vector<CellCase> cases;  // indexed by corner-sign key
};

// Built once per geometry on first use and cached for the process lifetime.
const CaseTable& case_table(GeometryKind kind);

// Walks the decision tree for one cell's values and returns the leaf index.
int decide(const CellCase& c, const LocalScalarField& field);

// Key classes under the proper rotations of the reference cell combined with
// sign complement; `members` lists the whole class, smallest key first.
struct BaseCase {
  unsigned representative = 0;
  std::vector<unsigned> members;
};
std::vector<BaseCase> base_cases(GeometryKind kind);

// Corner permutations that map the reference cell onto itself. If
// `proper_only` is set, orientation-reversing maps are dropped.
std::vector<std::array<int8_t, 8>> symmetry_group(GeometryKind kind, bool proper_only);

// Heavy revalidation used by the test-suite: draws fresh value vectors for
// every reachable leaf and re-checks volume closure, part orientation and
// interface consistency. Returns human-readable problem descriptions.
std::vector<std::string> validate_case_tables(GeometryKind kind, int redraws, uint64_t seed);

}  // namespace tpmc
