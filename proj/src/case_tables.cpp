#include "tpmc/case_tables.hpp"

#include "synth_internal.hpp"
#include "tpmc/integration.hpp"
#include "tpmc/prng.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <mutex>
#include <numeric>
#include <set>
#include <stdexcept>

namespace tpmc {

namespace {

// ---------------------------------------------------------------
// Symmetries of the reference cells as corner permutations.
// ---------------------------------------------------------------

using Perm = std::array<int8_t, 8>;

Perm identity_perm() {
  Perm p{};
  std::iota(p.begin(), p.end(), int8_t(0));
  return p;
}

Perm compose(const Perm& f, const Perm& g) {  // corner i -> f[g[i]]
  Perm r{};
  for (int i = 0; i < 8; ++i) r[i] = f[g[i]];
  return r;
}

Perm from_cycles(std::initializer_list<std::initializer_list<int>> cycles) {
  Perm p = identity_perm();
  for (const auto& c : cycles) {
    std::vector<int> v(c);
    for (size_t i = 0; i < v.size(); ++i) p[v[i]] = int8_t(v[(i + 1) % v.size()]);
  }
  return p;
}

Perm hex_map(const std::function<std::array<int, 3>(int, int, int)>& f) {
  Perm p = identity_perm();
  for (int c = 0; c < 8; ++c) {
    auto b = f(c & 1, (c >> 1) & 1, (c >> 2) & 1);
    p[c] = int8_t(b[0] + 2 * b[1] + 4 * b[2]);
  }
  return p;
}

std::vector<Perm> generators(GeometryKind kind) {
  switch (kind) {
    case GeometryKind::line:
      return {from_cycles({{0, 1}})};
    case GeometryKind::triangle:
      return {from_cycles({{0, 1, 2}}), from_cycles({{1, 2}})};
    case GeometryKind::quadrilateral:
      return {from_cycles({{0, 1, 3, 2}}), from_cycles({{1, 2}})};
    case GeometryKind::tetrahedron:
      return {from_cycles({{0, 1, 2}}), from_cycles({{1, 2, 3}}), from_cycles({{0, 1}})};
    case GeometryKind::prism:
      return {from_cycles({{0, 1, 2}, {3, 4, 5}}), from_cycles({{0, 1}, {3, 4}}),
              from_cycles({{0, 3}, {1, 4}, {2, 5}})};
    case GeometryKind::pyramid:
      return {from_cycles({{0, 1, 3, 2}}), from_cycles({{1, 2}})};
    case GeometryKind::hexahedron:
      return {hex_map([](int x, int y, int z) { return std::array<int, 3>{1 - y, x, z}; }),
              hex_map([](int x, int y, int z) { return std::array<int, 3>{x, 1 - z, y}; }),
              hex_map([](int x, int y, int z) { return std::array<int, 3>{1 - x, y, z}; })};
  }
  throw std::invalid_argument("generators: unknown geometry");
}

double perm_det(GeometryKind kind, const Perm& p) {
  const ReferenceElement& ref = reference_element(kind);
  std::array<int, 3> basis{};
  switch (kind) {
    case GeometryKind::line:
      basis = {1, 0, 0};
      break;
    case GeometryKind::triangle:
    case GeometryKind::quadrilateral:
      basis = {1, 2, 0};
      break;
    case GeometryKind::tetrahedron:
    case GeometryKind::prism:
      basis = {1, 2, 3};
      break;
    case GeometryKind::pyramid:
    case GeometryKind::hexahedron:
      basis = {1, 2, 4};
      break;
  }
  const Coordinate o = ref.corners[p[0]];
  double M[3][3] = {};
  for (int k = 0; k < ref.dim; ++k) {
    const Coordinate c = ref.corners[p[basis[k]]];
    for (int r = 0; r < 3; ++r) M[r][k] = c[r] - o[r];
  }
  switch (ref.dim) {
    case 1:
      return M[0][0];
    case 2:
      return M[0][0] * M[1][1] - M[0][1] * M[1][0];
    default:
      return M[0][0] * (M[1][1] * M[2][2] - M[1][2] * M[2][1]) -
             M[0][1] * (M[1][0] * M[2][2] - M[1][2] * M[2][0]) +
             M[0][2] * (M[1][0] * M[2][1] - M[1][1] * M[2][0]);
  }
}

// ---------------------------------------------------------------
// Patch access shared by the builder and the runtime walker.
// ---------------------------------------------------------------

std::array<int, 4> patch_corners(GeometryKind kind, int face) {
  if (kind == GeometryKind::quadrilateral) {
    if (face != 0) throw std::invalid_argument("patch_corners: bad face");
    return {0, 1, 2, 3};
  }
  const ReferenceFace& f = reference_element(kind).faces.at(face);
  if (f.vertices.size() != 4) throw std::invalid_argument("patch_corners: not a quad face");
  return {f.vertices[0], f.vertices[1], f.vertices[2], f.vertices[3]};
}

FaceValues patch_values(GeometryKind kind, int face, std::span<const double> values) {
  const auto q = patch_corners(kind, face);
  return {values[q[0]], values[q[1]], values[q[2]], values[q[3]]};
}

// ---------------------------------------------------------------
// Per-key construction.
// ---------------------------------------------------------------

CellCase build_case(GeometryKind kind, unsigned key) {
  CellCase cc;
  const int n = corner_count(kind);
  const std::vector<int> amb = ambiguous_faces(kind, key);
  const int npaths = 1 << amb.size();

  // Paths through a connectivity decision exist only where undecided
  // diagonal pairs remain after the face outcomes.
  std::vector<bool> splits(npaths, false);
  if (kind == GeometryKind::hexahedron)
    for (int combo = 0; combo < npaths; ++combo) {
      std::vector<int> oc(amb.size());
      for (size_t i = 0; i < amb.size(); ++i) oc[i] = (combo >> i & 1) ? 1 : -1;
      splits[combo] = !hex_diagonal_candidates(key, oc).empty();
    }

  // Collect a batch of value vectors per path: the first is the build
  // representative, the rest back the stability checks in the leaf builders.
  // Paths never hit within the draw budget are treated as unreachable.
  constexpr int sample_cap = 24;
  std::map<std::pair<int, int>, std::vector<std::vector<double>>> reps;
  int needed = 0;
  for (int combo = 0; combo < npaths; ++combo) needed += splits[combo] ? 2 : 1;
  SplitMix64 rng(0xA57AB1E5ULL ^ (uint64_t(int(kind)) << 40) ^ (uint64_t(key) << 8));
  std::vector<double> v(n);
  int full = 0;
  for (int iter = 0; iter < 30000 && full < needed; ++iter) {
    for (int i = 0; i < n; ++i) {
      const double mag = 0.05 * std::pow(100.0, rng.uniform());
      v[i] = ((key >> i) & 1u) ? mag : -mag;
    }
    int combo = 0;
    for (size_t i = 0; i < amb.size(); ++i)
      if (face_center_sign(patch_values(kind, amb[i], v)) > 0) combo |= 1 << i;
    int verdict = -1;
    if (splits[combo])
      verdict = interior_connectivity_test(make_field(kind, v), 2).connected ? 1 : 0;
    auto& bucket = reps[{combo, verdict}];
    if (int(bucket.size()) < sample_cap) {
      bucket.push_back(v);
      if (int(bucket.size()) == sample_cap) ++full;
    }
  }

  auto make_leaf_node = [&](int combo, int verdict) -> int {
    synth::LeafRequest req;
    req.kind = kind;
    req.key = key;
    req.outcomes.resize(amb.size());
    for (size_t i = 0; i < amb.size(); ++i) req.outcomes[i] = (combo >> i & 1) ? 1 : -1;
    req.tube = verdict == 1;
    auto it = reps.find({combo, verdict});
    req.reachable = it != reps.end();
    if (req.reachable) {
      req.samples = it->second;
      req.values = req.samples.front();
    } else {
      req.values.resize(n);
      for (int i = 0; i < n; ++i) req.values[i] = ((key >> i) & 1u) ? 1.0 : -1.0;
    }
    std::string error;
    CaseLeaf leaf;
    try {
      switch (dimension(kind)) {
        case 1:
          leaf = synth::build_leaf_line(req, error);
          break;
        case 2:
          leaf = synth::build_leaf_2d(req, error);
          break;
        default:
          leaf = synth::build_leaf_3d(req, error);
          break;
      }
    } catch (const std::exception& ex) {
      error = ex.what();
    }
    if (!error.empty() && req.reachable)
      throw std::logic_error(std::string("case table ") + geometry_name(kind) + " key " +
                             std::to_string(key) + " path " + std::to_string(combo) +
                             (verdict < 0 ? "" : verdict ? " connected" : " separate") + ": " +
                             error);
    const int leaf_id = int(cc.leaves.size());
    cc.leaves.push_back(std::move(leaf));
    const int node_id = int(cc.nodes.size());
    cc.nodes.push_back({DecisionNode::Kind::leaf, int16_t(leaf_id), -1, -1});
    return node_id;
  };

  std::function<int(size_t, int)> rec = [&](size_t depth, int combo) -> int {
    if (depth == amb.size()) {
      if (splits[combo]) {
        const int node_id = int(cc.nodes.size());
        cc.nodes.push_back({DecisionNode::Kind::center_test, 2, -1, -1});
        const int t = make_leaf_node(combo, 1);
        const int f = make_leaf_node(combo, 0);
        cc.nodes[node_id].on_true = int16_t(t);
        cc.nodes[node_id].on_false = int16_t(f);
        return node_id;
      }
      return make_leaf_node(combo, -1);
    }
    const int node_id = int(cc.nodes.size());
    cc.nodes.push_back({DecisionNode::Kind::face_test, int16_t(amb[depth]), -1, -1});
    const int t = rec(depth + 1, combo | (1 << depth));
    const int f = rec(depth + 1, combo);
    cc.nodes[node_id].on_true = int16_t(t);
    cc.nodes[node_id].on_false = int16_t(f);
    return node_id;
  };
  rec(0, 0);
  return cc;
}

double reference_volume(GeometryKind kind) {
  switch (kind) {
    case GeometryKind::line:
    case GeometryKind::quadrilateral:
    case GeometryKind::hexahedron:
      return 1.0;
    case GeometryKind::triangle:
    case GeometryKind::prism:
      return 0.5;
    case GeometryKind::pyramid:
      return 1.0 / 3.0;
    case GeometryKind::tetrahedron:
      return 1.0 / 6.0;
  }
  throw std::invalid_argument("reference_volume: unknown geometry");
}

Coordinate reference_centroid(GeometryKind kind) {
  const ReferenceElement& ref = reference_element(kind);
  Coordinate c{0, 0, 0};
  for (const auto& p : ref.corners)
    for (int k = 0; k < 3; ++k) c[k] += p[k] / double(ref.corners.size());
  return c;
}

// z-component of the surface normal of a 2D part at its reference centroid.
double planar_orientation(GeometryKind shape, std::span<const Coordinate> corners) {
  std::array<Coordinate, 4> grads{};
  shape_gradients(shape, reference_centroid(shape),
                  std::span<Coordinate>(grads.data(), size_t(corner_count(shape))));
  double du[2] = {0, 0}, dv[2] = {0, 0};
  for (int i = 0; i < corner_count(shape); ++i) {
    du[0] += corners[i][0] * grads[i][0];
    du[1] += corners[i][1] * grads[i][0];
    dv[0] += corners[i][0] * grads[i][1];
    dv[1] += corners[i][1] * grads[i][1];
  }
  return du[0] * dv[1] - du[1] * dv[0];
}

}  // namespace

int decide(const CellCase& c, const LocalScalarField& field) {
  int at = 0;
  while (true) {
    const DecisionNode& nd = c.nodes.at(size_t(at));
    switch (nd.kind) {
      case DecisionNode::Kind::leaf:
        return nd.index;
      case DecisionNode::Kind::face_test:
        at = face_center_sign(patch_values(field.geometry, nd.index, field.data())) > 0
                 ? nd.on_true
                 : nd.on_false;
        break;
      case DecisionNode::Kind::center_test:
        at = interior_connectivity_test(field, nd.index).connected ? nd.on_true : nd.on_false;
        break;
    }
    if (at < 0) throw std::logic_error("decide: malformed decision tree");
  }
}

const CaseTable& case_table(GeometryKind kind) {
  static std::array<CaseTable, 7> tables;
  static std::array<std::once_flag, 7> built;
  const int idx = int(kind);
  std::call_once(built[size_t(idx)], [kind, idx] {
    CaseTable t;
    t.kind = kind;
    const unsigned nk = 1u << corner_count(kind);
    t.cases.reserve(nk);
    for (unsigned key = 0; key < nk; ++key) t.cases.push_back(build_case(kind, key));
    tables[size_t(idx)] = std::move(t);
  });
  return tables[size_t(idx)];
}

std::vector<std::array<int8_t, 8>> symmetry_group(GeometryKind kind, bool proper_only) {
  std::set<Perm> seen{identity_perm()};
  std::vector<Perm> queue{identity_perm()};
  const auto gens = generators(kind);
  for (size_t i = 0; i < queue.size(); ++i)
    for (const Perm& g : gens) {
      Perm ng = compose(g, queue[i]);
      if (seen.insert(ng).second) queue.push_back(ng);
    }
  std::vector<Perm> out;
  for (const Perm& p : queue)
    if (!proper_only || perm_det(kind, p) > 0) out.push_back(p);
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<BaseCase> base_cases(GeometryKind kind) {
  const auto proper = symmetry_group(kind, true);
  const int n = corner_count(kind);
  const unsigned nk = 1u << n;
  const unsigned full = nk - 1;
  auto apply = [&](const Perm& p, unsigned key) {
    unsigned out = 0;
    for (int i = 0; i < n; ++i)
      if ((key >> i) & 1u) out |= 1u << p[i];
    return out;
  };
  std::map<unsigned, std::vector<unsigned>> classes;
  for (unsigned key = 0; key < nk; ++key) {
    unsigned canon = key;
    for (const Perm& p : proper) {
      const unsigned img = apply(p, key);
      canon = std::min({canon, img, full ^ img});
    }
    classes[canon].push_back(key);
  }
  std::vector<BaseCase> out;
  for (auto& kv : classes) out.push_back({kv.first, std::move(kv.second)});
  return out;
}

std::vector<std::string> validate_case_tables(GeometryKind kind, int redraws, uint64_t seed) {
  std::vector<std::string> problems;
  auto report = [&](unsigned key, int leaf_id, const std::string& what) {
    if (problems.size() >= 64) return;
    problems.push_back(std::string(geometry_name(kind)) + " key " + std::to_string(key) +
                       " leaf " + std::to_string(leaf_id) + ": " + what);
  };

  const CaseTable& table = case_table(kind);
  const int n = corner_count(kind);
  const int dim = dimension(kind);
  const double cellvol = reference_volume(kind);
  SplitMix64 rng(seed);
  std::vector<double> v(n);

  for (unsigned key = 0; key < table.cases.size(); ++key) {
    const CellCase& c = table.cases[key];
    for (int draw = 0; draw < redraws; ++draw) {
      for (int i = 0; i < n; ++i) {
        const double mag = 0.05 * std::pow(100.0, rng.uniform());
        v[i] = ((key >> i) & 1u) ? mag : -mag;
      }
      const LocalScalarField field = make_field(kind, v);
      int leaf_id = -1;
      try {
        leaf_id = decide(c, field);
      } catch (const std::exception& ex) {
        report(key, -1, std::string("decision walk failed: ") + ex.what());
        continue;
      }
      const CaseLeaf& leaf = c.leaves[size_t(leaf_id)];
      if (!leaf.reachable) {
        report(key, leaf_id, "reached a leaf marked unreachable");
        continue;
      }

      std::vector<Coordinate> pos;
      try {
        pos = resolve_vertices(field, leaf.pool);
      } catch (const std::exception& ex) {
        report(key, leaf_id, std::string("vertex resolution failed: ") + ex.what());
        continue;
      }

      for (int corner = 0; corner < n; ++corner) {
        const bool interior_side = leaf.corner_component[corner] < leaf.interior_components;
        if (interior_side != (v[corner] < 0)) {
          report(key, leaf_id, "corner assigned to the wrong side");
          break;
        }
      }

      double vol = 0;
      bool part_problem = false;
      for (const VolumePart& part : leaf.parts) {
        std::vector<Coordinate> corners;
        for (int16_t id : part.vertices) corners.push_back(pos[size_t(id)]);
        if (dim == 3) {
          if (synth::signed_jacobian(part.shape, corners, reference_centroid(part.shape)) <=
              0) {
            report(key, leaf_id, "volume part with non-positive orientation");
            part_problem = true;
            break;
          }
        } else if (dim == 2 && planar_orientation(part.shape, corners) <= 0) {
          report(key, leaf_id, "planar part with non-positive orientation");
          part_problem = true;
          break;
        }
        vol += part_measure(part.shape, corners, 3);
      }
      if (part_problem) continue;
      if (std::abs(vol - cellvol) > 1e-9) {
        report(key, leaf_id,
               "parts cover " + std::to_string(vol) + " of " + std::to_string(cellvol));
        continue;
      }

      for (const InterfaceFacet& facet : leaf.interface) {
        if (facet.interior_component < 0 || facet.interior_component >= leaf.interior_components ||
            facet.exterior_component < leaf.interior_components ||
            facet.exterior_component >= leaf.interior_components + leaf.exterior_components) {
          report(key, leaf_id, "interface facet with bad component ids");
          break;
        }
        if (dim == 1) continue;
        Coordinate cent{0, 0, 0};
        for (int16_t id : facet.vertices)
          for (int k = 0; k < 3; ++k) cent[k] += pos[size_t(id)][k] / double(facet.vertices.size());
        Coordinate nrm{0, 0, 0};
        if (dim == 2) {
          const Coordinate a = pos[size_t(facet.vertices[0])], b = pos[size_t(facet.vertices[1])];
          nrm = {b[1] - a[1], a[0] - b[0], 0};
        } else {
          std::vector<Coordinate> cyc;
          for (int16_t id : facet.vertices) cyc.push_back(pos[size_t(id)]);
          nrm = synth::facet_vector_area(cyc);
        }
        double len = std::sqrt(nrm[0] * nrm[0] + nrm[1] * nrm[1] + nrm[2] * nrm[2]);
        if (len < 1e-14) continue;
        const double eps = 1e-4;
        Coordinate hi_p = cent, lo_p = cent;
        for (int k = 0; k < 3; ++k) {
          hi_p[k] += eps * nrm[k] / len;
          lo_p[k] -= eps * nrm[k] / len;
        }
        const double hi = synth::eval_unchecked(kind, field.data(), hi_p);
        const double lo = synth::eval_unchecked(kind, field.data(), lo_p);
        if (hi < lo) {
          report(key, leaf_id, "interface facet oriented toward the interior");
          break;
        }
      }
    }
  }
  return problems;
}

}  // namespace tpmc
