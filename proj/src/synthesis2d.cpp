#include "synth_internal.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace tpmc::synth {

namespace {

int find_or_add(std::vector<VertexSpec>& pool, const VertexSpec& s) {
  for (size_t i = 0; i < pool.size(); ++i)
    if (pool[i] == s) return int(i);
  pool.push_back(s);
  return int(pool.size()) - 1;
}

// Quadrilateral boundary cycle in counter-clockwise face coordinates; the
// triangle's corner order already is its cycle.
std::vector<int> boundary_cycle(GeometryKind kind) {
  if (kind == GeometryKind::quadrilateral) return {0, 1, 3, 2};
  if (kind == GeometryKind::triangle) return {0, 1, 2};
  throw std::invalid_argument("face machine expects a 2D shape");
}

struct ClassInfo {
  std::array<int, 4> cls{-1, -1, -1, -1};
  int count = 0;
};

ClassInfo corner_classes(GeometryKind kind, unsigned key, int outcome,
                         const std::vector<int>& cycle) {
  std::array<int, 4> parent{0, 1, 2, 3};
  auto find = [&](int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  auto unite = [&](int a, int b) { parent[find(a)] = find(b); };
  auto positive = [&](int c) { return (key >> c) & 1u; };

  const int n = int(cycle.size());
  for (int i = 0; i < n; ++i) {
    int a = cycle[i], b = cycle[(i + 1) % n];
    if (positive(a) == positive(b)) unite(a, b);
  }
  if (kind == GeometryKind::quadrilateral && (key == 6u || key == 9u)) {
    if (outcome > 0) {
      key == 9u ? unite(0, 3) : unite(1, 2);
    } else {
      key == 9u ? unite(1, 2) : unite(0, 3);
    }
  }

  ClassInfo out;
  int nc = corner_count(kind);
  std::array<int, 4> root_cls{-1, -1, -1, -1};
  for (int c = 0; c < nc; ++c) {
    int r = find(c);
    if (root_cls[r] < 0) root_cls[r] = out.count++;
    out.cls[c] = root_cls[r];
  }
  return out;
}

// Emit one region polygon (counter-clockwise) as parts: directly when it has
// at most four sides, as a fan around its lowest original corner otherwise.
void emit_region(FaceDecomposition& fd, const std::vector<int>& poly, int cls) {
  if (poly.size() <= 4) {
    fd.parts.push_back({poly, cls});
    return;
  }
  int pivot = -1;
  for (int id : poly)
    if (fd.pool[id].kind == VertexKind::original &&
        (pivot < 0 || fd.pool[id].a < fd.pool[pivot].a))
      pivot = id;
  size_t at = std::find(poly.begin(), poly.end(), pivot) - poly.begin();
  for (size_t k = 1; k + 1 < poly.size(); ++k) {
    int a = poly[(at + k) % poly.size()];
    int b = poly[(at + k + 1) % poly.size()];
    fd.parts.push_back({{pivot, a, b}, cls});
  }
}

}  // namespace

FaceDecomposition face_decomposition(GeometryKind kind, unsigned key, int outcome) {
  const int n = corner_count(kind);
  const unsigned mask = (1u << n) - 1u;
  const std::vector<int> cycle = boundary_cycle(kind);

  FaceDecomposition fd;
  ClassInfo ci = corner_classes(kind, key, outcome, cycle);
  fd.classes = ci.count;
  for (int c = 0; c < n; ++c) fd.corner_cls[c] = int8_t(ci.cls[c]);

  auto positive = [&](int c) { return ((key >> c) & 1u) != 0; };
  auto original = [&](int c) { return find_or_add(fd.pool, original_vertex(c)); };
  auto crossing = [&](int a, int b) { return find_or_add(fd.pool, edge_vertex(a, b)); };

  unsigned popcount = std::popcount(key & mask);
  if (popcount == 0 || popcount == unsigned(n)) {
    std::vector<int> whole;
    for (int c : cycle) whole.push_back(original(c));
    fd.parts.push_back({whole, ci.cls[0]});
    return fd;
  }

  const bool bowtie = kind == GeometryKind::quadrilateral && (key == 6u || key == 9u);
  if (!bowtie) {
    // Two regions split by one chord: walk the boundary, inserting the edge
    // crossings, and cut the walk at them.
    std::vector<int> items;
    std::vector<int> cuts;
    for (int i = 0; i < int(cycle.size()); ++i) {
      int a = cycle[i], b = cycle[(i + 1) % cycle.size()];
      items.push_back(original(a));
      if (positive(a) != positive(b)) {
        cuts.push_back(int(items.size()));
        items.push_back(crossing(a, b));
      }
    }
    if (cuts.size() != 2) throw std::logic_error("face walk: expected one chord");
    auto arc = [&](int from, int to) {  // inclusive item range, cyclic
      std::vector<int> poly;
      for (int i = from;; i = (i + 1) % int(items.size())) {
        poly.push_back(items[i]);
        if (i == to) break;
      }
      return poly;
    };
    std::vector<int> polyA = arc(cuts[0], cuts[1]);
    std::vector<int> polyB = arc(cuts[1], cuts[0]);
    auto region_cls = [&](const std::vector<int>& poly) {
      for (int id : poly)
        if (fd.pool[id].kind == VertexKind::original) return int(ci.cls[fd.pool[id].a]);
      throw std::logic_error("region without a corner");
    };
    int clsA = region_cls(polyA), clsB = region_cls(polyB);
    emit_region(fd, polyA, clsA);
    emit_region(fd, polyB, clsB);

    int neg = clsA, pos = clsB;
    for (int id : polyA)
      if (fd.pool[id].kind == VertexKind::original) {
        if (positive(fd.pool[id].a)) std::swap(neg, pos);
        break;
      }
    fd.segments.push_back({items[cuts[0]], items[cuts[1]], neg, pos});
    return fd;
  }

  // Checkerboard quad: the outcome links one diagonal, the other two corners
  // are clipped off and the linked region is fanned around the face centre.
  const int centre = find_or_add(fd.pool, center_vertex(1, 0));
  std::vector<int> hexagon;
  for (int i = 0; i < 4; ++i) {
    int prev = cycle[(i + 3) % 4], c = cycle[i], next = cycle[(i + 1) % 4];
    int ep = crossing(prev, c), en = crossing(c, next);
    bool isolated = ci.cls[c] != ci.cls[3 - c];
    if (isolated) {
      fd.parts.push_back({{ep, original(c), en}, ci.cls[c]});
      int other = ci.cls[next];
      int neg = ci.cls[c], pos = other;
      if (positive(c)) std::swap(neg, pos);
      fd.segments.push_back({ep, en, neg, pos});
      hexagon.push_back(ep);
      hexagon.push_back(en);
    } else {
      hexagon.push_back(ep);
      hexagon.push_back(original(c));
      hexagon.push_back(en);
    }
  }
  // Consecutive duplicates appear where a crossing serves both neighbours.
  std::vector<int> cleaned;
  for (int id : hexagon)
    if (cleaned.empty() || (cleaned.back() != id && cleaned.front() != id)) cleaned.push_back(id);
  int linked_cls = -1;
  for (int c = 0; c < 4; ++c)
    if (ci.cls[c] == ci.cls[3 - c]) linked_cls = ci.cls[c];
  for (size_t i = 0; i < cleaned.size(); ++i)
    fd.parts.push_back({{centre, cleaned[i], cleaned[int((i + 1) % cleaned.size())]}, linked_cls});
  return fd;
}

namespace {

// Joint component numbering: interior (negative) classes first, each group
// ordered by its lowest corner.
struct JointMap {
  std::array<int, 8> cls_to_joint{};
  int interior = 0, exterior = 0;
};

JointMap joint_numbering(GeometryKind kind, unsigned key, const ClassInfo& ci) {
  JointMap jm;
  int n = corner_count(kind);
  auto assign = [&](bool want_positive, int base) {
    int next = base;
    for (int c = 0; c < n; ++c) {
      bool pos = ((key >> c) & 1u) != 0;
      if (pos != want_positive) continue;
      bool first = true;
      for (int d = 0; d < c; ++d)
        if (ci.cls[d] == ci.cls[c]) first = false;
      if (first) jm.cls_to_joint[ci.cls[c]] = next++;
    }
    return next - base;
  };
  jm.interior = assign(false, 0);
  jm.exterior = assign(true, jm.interior);
  return jm;
}

}  // namespace

CaseLeaf build_leaf_2d(const LeafRequest& req, std::string& error) {
  error.clear();
  const int outcome = req.outcomes.empty() ? 0 : req.outcomes[0];
  FaceDecomposition fd = face_decomposition(req.kind, req.key, outcome);
  const std::vector<int> cycle = boundary_cycle(req.kind);
  ClassInfo ci = corner_classes(req.kind, req.key, outcome, cycle);
  JointMap jm = joint_numbering(req.kind, req.key, ci);

  CaseLeaf leaf;
  leaf.reachable = req.reachable;
  for (const VertexSpec& s : fd.pool)
    leaf.pool.push_back(s.kind == VertexKind::center ? center_vertex(0, 0) : s);

  leaf.corner_component.fill(-1);
  for (int c = 0; c < corner_count(req.kind); ++c)
    leaf.corner_component[c] = int8_t(jm.cls_to_joint[ci.cls[c]]);
  leaf.interior_components = int8_t(jm.interior);
  leaf.exterior_components = int8_t(jm.exterior);

  auto cls_positive = [&](int cls) {
    for (int c = 0; c < corner_count(req.kind); ++c)
      if (ci.cls[c] == cls) return ((req.key >> c) & 1u) != 0;
    throw std::logic_error("empty class");
  };

  for (const FacePart2& p : fd.parts) {
    VolumePart vp;
    vp.shape = part_geometry(2, int(p.v.size()));
    if (p.v.size() == 4) {
      vp.vertices = {int16_t(p.v[0]), int16_t(p.v[1]), int16_t(p.v[3]), int16_t(p.v[2])};
    } else {
      for (int id : p.v) vp.vertices.push_back(int16_t(id));
    }
    vp.domain = cls_positive(p.cls) ? Domain::exterior : Domain::interior;
    vp.component = int8_t(jm.cls_to_joint[p.cls]);
    leaf.parts.push_back(std::move(vp));
  }

  LocalScalarField field = make_field(req.kind, req.values);
  std::vector<Coordinate> pos = resolve_vertices(field, leaf.pool);
  for (const FaceSegment& s : fd.segments) {
    int a = s.a, b = s.b;
    // Winding rule: the normal obtained by rotating (b - a) a quarter turn
    // clockwise must point into the exterior.
    Coordinate mid{0.5 * (pos[a][0] + pos[b][0]), 0.5 * (pos[a][1] + pos[b][1]), 0};
    double nx = pos[b][1] - pos[a][1], ny = pos[a][0] - pos[b][0];
    double len = std::max(1e-30, std::hypot(nx, ny));
    const double eps = 1e-4;
    Coordinate hi{mid[0] + eps * nx / len, mid[1] + eps * ny / len, 0};
    Coordinate lo{mid[0] - eps * nx / len, mid[1] - eps * ny / len, 0};
    if (eval_unchecked(req.kind, req.values, hi) < eval_unchecked(req.kind, req.values, lo))
      std::swap(a, b);
    InterfaceFacet f;
    f.vertices = {int16_t(a), int16_t(b)};
    f.interior_component = int8_t(jm.cls_to_joint[s.neg_cls]);
    f.exterior_component = int8_t(jm.cls_to_joint[s.pos_cls]);
    leaf.interface.push_back(std::move(f));
  }
  return leaf;
}

CaseLeaf build_leaf_line(const LeafRequest& req, std::string& error) {
  error.clear();
  CaseLeaf leaf;
  leaf.reachable = req.reachable;
  leaf.corner_component.fill(-1);
  auto add = [&](const VertexSpec& s) { return int16_t(find_or_add(leaf.pool, s)); };
  const bool p0 = (req.key & 1u) != 0, p1 = (req.key & 2u) != 0;
  if (p0 == p1) {
    VolumePart vp;
    vp.shape = GeometryKind::line;
    vp.vertices = {add(original_vertex(0)), add(original_vertex(1))};
    vp.domain = p0 ? Domain::exterior : Domain::interior;
    vp.component = 0;
    leaf.parts.push_back(std::move(vp));
    leaf.corner_component[0] = leaf.corner_component[1] = 0;
    (p0 ? leaf.exterior_components : leaf.interior_components) = 1;
    return leaf;
  }
  int16_t o0 = add(original_vertex(0)), o1 = add(original_vertex(1));
  int16_t cut = add(edge_vertex(0, 1));
  // Joint numbering: the negative corner's component is 0.
  leaf.interior_components = leaf.exterior_components = 1;
  leaf.corner_component[0] = int8_t(p0 ? 1 : 0);
  leaf.corner_component[1] = int8_t(p1 ? 1 : 0);
  VolumePart left{GeometryKind::line, {o0, cut}, p0 ? Domain::exterior : Domain::interior,
                  leaf.corner_component[0]};
  VolumePart right{GeometryKind::line, {cut, o1}, p1 ? Domain::exterior : Domain::interior,
                   leaf.corner_component[1]};
  leaf.parts.push_back(std::move(left));
  leaf.parts.push_back(std::move(right));
  InterfaceFacet f;
  f.vertices = {cut};
  f.interior_component = 0;
  f.exterior_component = 1;
  leaf.interface.push_back(std::move(f));
  return leaf;
}

}  // namespace tpmc::synth
