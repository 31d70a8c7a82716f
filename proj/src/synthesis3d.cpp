#include "synth_internal.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <map>
#include <numeric>
#include <set>
#include <stdexcept>

namespace tpmc::synth {

double eval_unchecked(GeometryKind kind, std::span<const double> values, const Coordinate& xi) {
  std::array<double, 8> phi{};
  shape_values(kind, xi, std::span<double>(phi.data(), size_t(corner_count(kind))));
  double v = 0;
  for (int i = 0; i < corner_count(kind); ++i) v += phi[i] * values[i];
  return v;
}

Coordinate fixed_proxy(GeometryKind kind, std::span<const VertexSpec> pool, int idx) {
  const ReferenceElement& ref = reference_element(kind);
  const VertexSpec& s = pool[idx];
  auto mean = [](const Coordinate& a, const Coordinate& b) {
    return Coordinate{0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1]), 0.5 * (a[2] + b[2])};
  };
  auto cell_centre = [&]() {
    Coordinate c{0, 0, 0};
    for (const auto& p : ref.corners)
      for (int k = 0; k < 3; ++k) c[k] += p[k] / double(ref.corners.size());
    return c;
  };
  switch (s.kind) {
    case VertexKind::original:
      return ref.corners[s.a];
    case VertexKind::edge:
      return mean(ref.corners[s.a], ref.corners[s.b]);
    case VertexKind::center: {
      if (s.a == 0) return cell_centre();
      const ReferenceFace& face = ref.faces[s.b];
      Coordinate c{0, 0, 0};
      for (int v : face.vertices)
        for (int k = 0; k < 3; ++k) c[k] += ref.corners[v][k] / double(face.vertices.size());
      return c;
    }
    case VertexKind::maximum:
    case VertexKind::root:
      return cell_centre();
    case VertexKind::interior:
      return mean(fixed_proxy(kind, pool, s.ia), fixed_proxy(kind, pool, s.ib));
  }
  throw std::logic_error("fixed_proxy: bad spec");
}

double signed_jacobian(GeometryKind shape, std::span<const Coordinate> corners,
                       const Coordinate& xi) {
  std::array<Coordinate, 8> grads{};
  shape_gradients(shape, xi, std::span<Coordinate>(grads.data(), size_t(corner_count(shape))));
  double J[3][3] = {};
  for (int i = 0; i < corner_count(shape); ++i)
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) J[r][c] += corners[i][r] * grads[i][c];
  return J[0][0] * (J[1][1] * J[2][2] - J[1][2] * J[2][1]) -
         J[0][1] * (J[1][0] * J[2][2] - J[1][2] * J[2][0]) +
         J[0][2] * (J[1][0] * J[2][1] - J[1][1] * J[2][0]);
}

namespace {

Coordinate sub3(const Coordinate& a, const Coordinate& b) {
  return {a[0] - b[0], a[1] - b[1], a[2] - b[2]};
}
Coordinate add3(const Coordinate& a, const Coordinate& b) {
  return {a[0] + b[0], a[1] + b[1], a[2] + b[2]};
}
Coordinate scale3(const Coordinate& a, double s) { return {a[0] * s, a[1] * s, a[2] * s}; }
Coordinate cross3(const Coordinate& a, const Coordinate& b) {
  return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}
double dot3(const Coordinate& a, const Coordinate& b) {
  return a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
}
double norm3(const Coordinate& a) { return std::sqrt(dot3(a, a)); }

// A facet cycle is always fanned from its smallest pool index, so the two
// sides of a shared facet triangulate identically and the decomposition
// stays watertight.
void facet_triangle_ids(const std::vector<int>& cycle, std::vector<std::array<int, 3>>& out) {
  out.clear();
  if (cycle.size() < 3) throw std::logic_error("facet cycle too short");
  const size_t n = cycle.size();
  size_t at = size_t(std::min_element(cycle.begin(), cycle.end()) - cycle.begin());
  auto v = [&](size_t k) { return cycle[(at + k) % n]; };
  for (size_t k = 1; k + 1 < n; ++k) out.push_back({v(0), v(k), v(k + 1)});
}

double tet_volume_from(const Coordinate& apex, const Coordinate& p0, const Coordinate& p1,
                       const Coordinate& p2) {
  return dot3(sub3(p0, apex), cross3(sub3(p1, apex), sub3(p2, apex))) / 6.0;
}

}  // namespace

Coordinate facet_vector_area(std::span<const Coordinate> cycle) {
  std::vector<int> ids(cycle.size());
  std::iota(ids.begin(), ids.end(), 0);
  std::vector<std::array<int, 3>> tris;
  facet_triangle_ids(ids, tris);
  Coordinate n{0, 0, 0};
  for (const auto& t : tris) {
    Coordinate h = cross3(sub3(cycle[t[1]], cycle[t[0]]), sub3(cycle[t[2]], cycle[t[0]]));
    n = add3(n, scale3(h, 0.5));
  }
  return n;
}

double facet_cone_volume(const Coordinate& apex, std::span<const Coordinate> cycle) {
  std::vector<int> ids(cycle.size());
  std::iota(ids.begin(), ids.end(), 0);
  std::vector<std::array<int, 3>> tris;
  facet_triangle_ids(ids, tris);
  double vol = 0;
  for (const auto& t : tris) vol += tet_volume_from(apex, cycle[t[0]], cycle[t[1]], cycle[t[2]]);
  return vol;
}

namespace {

// ------------------------------------------------------------------
// 3D leaf construction.
// ------------------------------------------------------------------

struct Facet {
  std::vector<int> v;      // cycle order
  int comp = -1;           // cell-boundary facets: owning component
  int neg = -1, pos = -1;  // interface facets: interior / exterior side
};

struct Comps {
  std::array<int, 8> corner{};
  int ni = 0, ne = 0;
  std::vector<std::vector<int>> members;
  int total() const { return ni + ne; }
  bool is_interior(int c) const { return c < ni; }
};

Comps compute_comps(GeometryKind kind, unsigned key, const std::array<int, 6>& outcome_by_face,
                    const DiagonalCandidate* merge) {
  const ReferenceElement& ref = reference_element(kind);
  const int n = corner_count(kind);
  std::array<int, 8> parent{};
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  auto positive = [&](int c) { return ((key >> c) & 1u) != 0; };
  auto unite = [&](int a, int b) { parent[find(a)] = find(b); };
  for (const auto& e : ref.edges)
    if (positive(e[0]) == positive(e[1])) unite(e[0], e[1]);
  for (int f : ambiguous_faces(kind, key)) {
    auto bridge = face_bridge(kind, f, key, outcome_by_face[f] > 0 ? 1 : -1);
    unite(bridge[0], bridge[1]);
  }
  if (merge) unite(merge->lo, merge->hi);

  Comps out;
  out.corner.fill(-1);
  auto collect = [&](bool want_positive) {
    for (int c = 0; c < n; ++c) {
      if (positive(c) != want_positive || out.corner[c] >= 0) continue;
      std::vector<int> mem;
      for (int d = 0; d < n; ++d)
        if (positive(d) == want_positive && find(d) == find(c)) {
          mem.push_back(d);
          out.corner[d] = int(out.members.size());
        }
      out.members.push_back(std::move(mem));
      (want_positive ? out.ne : out.ni)++;
    }
  };
  collect(false);
  collect(true);
  return out;
}

struct SheetCycle {
  std::vector<int> v;
  int neg = -1, pos = -1;  // component ids in the unmerged numbering
};

std::vector<SheetCycle> link_cycles(const std::vector<std::array<int, 4>>& segments) {
  // segment = {a, b, neg, pos}, grouped by the component pair on its sides.
  std::map<std::pair<int, int>, std::vector<std::array<int, 2>>> groups;
  for (const auto& s : segments) groups[{s[2], s[3]}].push_back({s[0], s[1]});
  std::vector<SheetCycle> cycles;
  for (auto& group : groups) {
    auto& edges = group.second;
    std::map<int, std::vector<int>> adj;  // vertex -> incident segment indices
    for (int e = 0; e < int(edges.size()); ++e) {
      adj[edges[e][0]].push_back(e);
      adj[edges[e][1]].push_back(e);
    }
    for (auto& kv : adj)
      if (kv.second.size() != 2 && kv.second.size() != 4)
        throw std::logic_error("interface segments do not close into cycles");
    // A face saddle on the interface joins two sheets in one point and so
    // carries four segments. Cycles must stay vertex-simple — the saddle
    // belongs to two different cycles, not twice to one — so the split is
    // found by backtracking over the continuation choices.
    std::vector<char> used(edges.size(), 0);
    std::vector<std::vector<int>> walks;
    std::vector<int> walk;
    std::set<int> onwalk;
    std::function<bool(int)> solve = [&](int start) -> bool {
      if (walk.empty()) {
        int e0 = -1;
        for (int e = 0; e < int(edges.size()); ++e)
          if (!used[e]) {
            e0 = e;
            break;
          }
        if (e0 < 0) return true;
        used[e0] = 1;
        walk = {edges[e0][0], edges[e0][1]};
        onwalk = {edges[e0][0], edges[e0][1]};
        if (solve(edges[e0][0])) return true;
        used[e0] = 0;
        walk.clear();
        onwalk.clear();
        return false;
      }
      const int cur = walk.back();
      for (int e : adj[cur]) {
        if (used[e]) continue;
        const int nxt = edges[e][0] == cur ? edges[e][1] : edges[e][0];
        if (nxt == start) {
          if (walk.size() < 3) continue;
          used[e] = 1;
          std::vector<int> done = walk;
          std::set<int> donev = onwalk;
          walks.push_back(std::move(done));
          walk.clear();
          onwalk.clear();
          if (solve(-1)) return true;
          walk = std::move(walks.back());
          walks.pop_back();
          onwalk = std::move(donev);
          used[e] = 0;
        } else if (!onwalk.count(nxt)) {
          used[e] = 1;
          walk.push_back(nxt);
          onwalk.insert(nxt);
          if (solve(start)) return true;
          onwalk.erase(nxt);
          walk.pop_back();
          used[e] = 0;
        }
      }
      return false;
    };
    if (!solve(-1)) throw std::logic_error("interface segments do not close into cycles");
    for (auto& w : walks) {
      SheetCycle c;
      c.neg = group.first.first;
      c.pos = group.first.second;
      c.v = std::move(w);
      cycles.push_back(std::move(c));
    }
  }
  return cycles;
}

double wrap_angle(double a) {
  while (a <= -M_PI) a += 2 * M_PI;
  while (a > M_PI) a -= 2 * M_PI;
  return a;
}

struct AxisFrame {
  Coordinate a{}, u{}, e1{}, e2{};
  double angle(const Coordinate& p) const {
    Coordinate q = sub3(p, a);
    return std::atan2(dot3(q, e2), dot3(q, e1));
  }
  Coordinate radial(const Coordinate& p) const {
    Coordinate q = sub3(p, a);
    return sub3(q, scale3(u, dot3(q, u)));
  }
};

AxisFrame axis_frame(const Coordinate& from, const Coordinate& to) {
  AxisFrame f;
  f.a = from;
  f.u = scale3(sub3(to, from), 1.0 / norm3(sub3(to, from)));
  Coordinate e1 = cross3(f.u, Coordinate{0, 0, 1});
  if (norm3(e1) < 1e-9) e1 = cross3(f.u, Coordinate{1, 0, 0});
  f.e1 = scale3(e1, 1.0 / norm3(e1));
  f.e2 = cross3(f.u, f.e1);
  return f;
}

double cycle_winding(const std::vector<int>& cycle, const AxisFrame& fr,
                     const std::vector<Coordinate>& pts) {
  double total = 0;
  for (size_t i = 0; i < cycle.size(); ++i) {
    double a0 = fr.angle(pts[cycle[i]]);
    double a1 = fr.angle(pts[cycle[(i + 1) % cycle.size()]]);
    total += wrap_angle(a1 - a0);
  }
  return total / (2 * M_PI);
}

struct Rail {
  std::vector<int> v;
  std::vector<double> unwrapped;  // size()+1 entries, last = first + 2*pi
  size_t start = 0;
};

Rail make_rail(const std::vector<int>& ids, const std::vector<double>& raw) {
  Rail r;
  r.v = ids;
  r.start = size_t(std::min_element(raw.begin(), raw.end()) - raw.begin());
  r.unwrapped.resize(ids.size() + 1);
  double cur = raw[r.start];
  r.unwrapped[0] = cur;
  for (size_t k = 1; k <= ids.size(); ++k) {
    size_t i = (r.start + k) % ids.size();
    size_t p = (r.start + k - 1) % ids.size();
    cur += wrap_angle(raw[i] - raw[p]);
    r.unwrapped[k] = cur;
  }
  return r;
}

// Triangulate the annulus between two cycles that both wind once around the
// same axis, advancing whichever rail's next vertex comes first by angle.
std::vector<std::array<int, 3>> stitch_annulus(Rail top, Rail bot) {
  double delta = bot.unwrapped[0] - top.unwrapped[0];
  double shift = delta > M_PI ? -2 * M_PI : delta <= -M_PI ? 2 * M_PI : 0;
  for (double& a : bot.unwrapped) a += shift;
  const size_t p = top.v.size(), q = bot.v.size();
  std::vector<std::array<int, 3>> tris;
  size_t i = 0, j = 0;
  while (i < p || j < q) {
    bool take_top = j == q || (i < p && top.unwrapped[i + 1] <= bot.unwrapped[j + 1]);
    int t0 = top.v[(top.start + i) % p];
    int b0 = bot.v[(bot.start + j) % q];
    if (take_top) {
      tris.push_back({t0, top.v[(top.start + i + 1) % p], b0});
      ++i;
    } else {
      tris.push_back({t0, b0, bot.v[(bot.start + j + 1) % q]});
      ++j;
    }
  }
  return tris;
}

struct BoundaryFacet {
  std::vector<int> v;    // oriented outward from the component
  int chunk_owner = -1;  // preset cone apex corner (sleeve facets)
};

struct SurfaceCheck {
  double volume = 0;   // divergence-theorem volume of the closed surface
  double closure = 0;  // norm of the total vector area; should vanish
  double area = 0;
};

SurfaceCheck surface_check(const std::vector<BoundaryFacet>& facets,
                           const std::vector<Coordinate>& pts) {
  SurfaceCheck sc;
  Coordinate total{0, 0, 0};
  std::vector<std::array<int, 3>> tris;
  const Coordinate origin{0, 0, 0};
  for (const auto& f : facets) {
    facet_triangle_ids(f.v, tris);
    for (const auto& t : tris) {
      Coordinate h = cross3(sub3(pts[t[1]], pts[t[0]]), sub3(pts[t[2]], pts[t[0]]));
      total = add3(total, scale3(h, 0.5));
      sc.area += 0.5 * norm3(h);
      sc.volume += tet_volume_from(origin, pts[t[0]], pts[t[1]], pts[t[2]]);
    }
  }
  sc.closure = norm3(total);
  return sc;
}

double reference_cell_volume(GeometryKind kind) {
  switch (kind) {
    case GeometryKind::hexahedron:
      return 1.0;
    case GeometryKind::prism:
      return 0.5;
    case GeometryKind::pyramid:
      return 1.0 / 3.0;
    case GeometryKind::tetrahedron:
      return 1.0 / 6.0;
    default:
      throw std::logic_error("not a 3d cell");
  }
}

struct B3 {
  GeometryKind kind{};
  const ReferenceElement* ref = nullptr;
  LocalScalarField field{};
  std::vector<VertexSpec> pool;
  std::vector<Coordinate> pos;

  int add(const VertexSpec& s) {
    for (size_t i = 0; i < pool.size(); ++i)
      if (pool[i] == s) return int(i);
    pool.push_back(s);
    switch (s.kind) {
      case VertexKind::original:
        pos.push_back(ref->corners[s.a]);
        break;
      case VertexKind::edge:
        pos.push_back(edge_intersection(kind, field.data(), s.a, s.b));
        break;
      case VertexKind::center:
        pos.push_back(resolve_vertices(field, std::span<const VertexSpec>(&s, 1)).front());
        break;
      case VertexKind::maximum:
        pos.push_back(maximum_vertex(field, s.a));
        break;
      case VertexKind::interior:
        pos.push_back(interior_intersection(field, pos[s.ia], pos[s.ib]));
        break;
      default:
        throw std::logic_error("unsupported spec during synthesis");
    }
    return int(pool.size()) - 1;
  }
};

}  // namespace

CaseLeaf build_leaf_3d(const LeafRequest& req, std::string& error) {
  error.clear();
  const GeometryKind kind = req.kind;
  const ReferenceElement& ref = reference_element(kind);
  const int n = int(ref.corners.size());
  const unsigned full = (1u << n) - 1u;

  CaseLeaf leaf;
  leaf.reachable = req.reachable;
  leaf.corner_component.fill(-1);

  std::vector<int> amb = ambiguous_faces(kind, req.key);
  std::array<int, 6> outcome_by_face{};
  for (size_t i = 0; i < amb.size(); ++i)
    outcome_by_face[amb[i]] = req.outcomes.at(i) > 0 ? 1 : -1;

  std::vector<DiagonalCandidate> candidates;
  if (kind == GeometryKind::hexahedron) {
    std::vector<int> oc(req.outcomes.begin(), req.outcomes.end());
    candidates = hex_diagonal_candidates(req.key, oc);
  }
  const bool tube = req.tube && req.reachable && !candidates.empty();

  Comps fc = compute_comps(kind, req.key, outcome_by_face, nullptr);
  Comps cc = tube ? compute_comps(kind, req.key, outcome_by_face, &candidates[0]) : fc;
  std::vector<int> fc_to_cc(fc.total());
  for (int id = 0; id < fc.total(); ++id) fc_to_cc[id] = cc.corner[fc.members[id][0]];
  const int tube_cc = tube ? cc.corner[candidates[0].lo] : -1;

  for (int c = 0; c < n; ++c) leaf.corner_component[c] = int8_t(cc.corner[c]);
  leaf.interior_components = int8_t(cc.ni);
  leaf.exterior_components = int8_t(cc.ne);

  // Paths no field can reach stay in the tree for totality; they keep the
  // component summary but carry no geometry.
  if (!req.reachable) return leaf;

  B3 B;
  B.kind = kind;
  B.ref = &ref;
  B.field = make_field(kind, req.values);

  if (req.key == 0u || req.key == full) {
    VolumePart vp;
    vp.shape = kind;
    for (int c = 0; c < n; ++c) vp.vertices.push_back(int16_t(B.add(original_vertex(c))));
    vp.domain = req.key == 0u ? Domain::interior : Domain::exterior;
    vp.component = 0;
    leaf.pool = B.pool;
    leaf.parts.push_back(std::move(vp));
    return leaf;
  }

  // ---- per-face decompositions, lifted into the cell -----------------
  std::vector<Facet> face_facets;
  std::vector<std::array<int, 4>> segments;  // {a, b, neg_fc, pos_fc}
  try {
    Coordinate ccent{0, 0, 0};
    for (const auto& p : ref.corners) ccent = add3(ccent, scale3(p, 1.0 / double(n)));
    for (int f = 0; f < int(ref.faces.size()); ++f) {
      const ReferenceFace& face = ref.faces[f];
      unsigned fkey = 0;
      for (size_t j = 0; j < face.vertices.size(); ++j)
        fkey |= ((req.key >> face.vertices[j]) & 1u) << j;
      FaceDecomposition fd = face_decomposition(face.kind, fkey, outcome_by_face[f]);

      std::vector<int> lift(fd.pool.size());
      for (size_t i = 0; i < fd.pool.size(); ++i) {
        const VertexSpec& s = fd.pool[i];
        if (s.kind == VertexKind::original)
          lift[i] = B.add(original_vertex(face.vertices[s.a]));
        else if (s.kind == VertexKind::edge)
          lift[i] = B.add(edge_vertex(face.vertices[s.a], face.vertices[s.b]));
        else
          lift[i] = B.add(center_vertex(1, f));
      }

      Coordinate c0 = ref.corners[face.vertices[0]];
      Coordinate eu = sub3(ref.corners[face.vertices[1]], c0);
      Coordinate ev = sub3(ref.corners[face.vertices[2]], c0);
      Coordinate fcent{0, 0, 0};
      for (int v : face.vertices)
        fcent = add3(fcent, scale3(ref.corners[v], 1.0 / double(face.vertices.size())));
      const bool flip = dot3(cross3(eu, ev), sub3(fcent, ccent)) < 0;

      auto cls_to_fc = [&](int cls) {
        for (int lc = 0; lc < corner_count(face.kind); ++lc)
          if (fd.corner_cls[lc] == cls) return fc.corner[face.vertices[lc]];
        throw std::logic_error("face class without corners");
      };
      for (const FacePart2& p : fd.parts) {
        Facet ff;
        for (int id : p.v) ff.v.push_back(lift[id]);
        if (flip) std::reverse(ff.v.begin(), ff.v.end());
        ff.comp = cls_to_fc(p.cls);
        face_facets.push_back(std::move(ff));
      }
      for (const FaceSegment& s : fd.segments)
        segments.push_back({lift[s.a], lift[s.b], cls_to_fc(s.neg_cls), cls_to_fc(s.pos_cls)});
    }
  } catch (const std::exception& ex) {
    error = std::string("face stage: ") + ex.what();
    return leaf;
  }

  // ---- interface sheets ----------------------------------------------
  std::vector<SheetCycle> cycles;
  try {
    cycles = link_cycles(segments);
  } catch (const std::exception& ex) {
    error = std::string("sheet stage: ") + ex.what();
    return leaf;
  }

  // Orient every cycle so its winding normal points into the positive side.
  for (SheetCycle& c : cycles) {
    std::vector<Coordinate> cyc;
    for (int id : c.v) cyc.push_back(B.pos[id]);
    Coordinate nv{0, 0, 0};
    for (size_t i = 1; i + 1 < cyc.size(); ++i) {
      Coordinate h = cross3(sub3(cyc[i], cyc[0]), sub3(cyc[i + 1], cyc[0]));
      nv = add3(nv, scale3(h, 0.5));
    }
    double nn = norm3(nv);
    if (nn < 1e-14) continue;
    Coordinate cent{0, 0, 0};
    for (const auto& p : cyc) cent = add3(cent, scale3(p, 1.0 / double(cyc.size())));
    Coordinate nhat = scale3(nv, 1.0 / nn);
    const double eps = 1e-3;
    double hi = eval_unchecked(kind, req.values, add3(cent, scale3(nhat, eps)));
    double lo = eval_unchecked(kind, req.values, sub3(cent, scale3(nhat, eps)));
    if (hi < lo) std::reverse(c.v.begin(), c.v.end());
  }

  // ---- stability samples ---------------------------------------------
  // Stored decompositions get re-resolved for arbitrary fields of this
  // sign/outcome class, so every geometric acceptance below must hold on
  // each drawn sample, not just the build representative.
  struct Sample {
    LocalScalarField field;
    std::vector<Coordinate> pos;
  };
  std::vector<Sample> S;
  S.push_back({B.field, {}});
  for (size_t i = 1; i < req.samples.size(); ++i)
    S.push_back({make_field(kind, req.samples[i]), {}});
  auto sync = [&]() {
    for (Sample& smp : S)
      for (size_t i = smp.pos.size(); i < B.pool.size(); ++i) {
        const VertexSpec& s = B.pool[i];
        switch (s.kind) {
          case VertexKind::original:
            smp.pos.push_back(ref.corners[s.a]);
            break;
          case VertexKind::edge:
            smp.pos.push_back(edge_intersection(kind, smp.field.data(), s.a, s.b));
            break;
          case VertexKind::center:
            smp.pos.push_back(
                resolve_vertices(smp.field, std::span<const VertexSpec>(&s, 1)).front());
            break;
          case VertexKind::maximum:
            smp.pos.push_back(maximum_vertex(smp.field, s.a));
            break;
          case VertexKind::interior:
            smp.pos.push_back(interior_intersection(smp.field, smp.pos[s.ia], smp.pos[s.ib]));
            break;
          default:
            throw std::logic_error("unsupported spec during synthesis");
        }
      }
  };
  auto addv = [&](const VertexSpec& sp) {
    int id = B.add(sp);
    sync();
    return id;
  };
  sync();

  // Tet sign across the samples: 1 = solid on all of them, 0 = flat on all
  // of them, -1 = inverted or wavering somewhere. Volumes land in tcv.
  std::vector<double> tcv(S.size());
  auto tet_class = [&](int a, int b, int c, int d) {
    double mn = 1e300, mx = -1e300;
    for (size_t s = 0; s < S.size(); ++s) {
      tcv[s] = tet_volume_from(S[s].pos[a], S[s].pos[b], S[s].pos[c], S[s].pos[d]);
      mn = std::min(mn, tcv[s]);
      mx = std::max(mx, tcv[s]);
    }
    if (mn > 1e-12) return 1;
    if (mx <= 1e-12 && mn >= -1e-12) return 0;
    return -1;
  };


  std::vector<Facet> interface;       // oriented toward the exterior side
  std::map<int, int> mantle_station;  // interface index -> station corner
  // A sheet cycle becomes one polygonal facet, never a triangulation: the
  // polygon's centroid sits where a bent sheet is flattest, so its probe
  // direction stays aligned with the field. Any chord subdivision plants
  // centroids over the curved flanks and flips probes on warped members of
  // the value class.
  auto emit_cycle = [&](const SheetCycle& c) {
    Facet f;
    f.v = c.v;
    f.neg = fc_to_cc[c.neg];
    f.pos = fc_to_cc[c.pos];
    interface.push_back(std::move(f));
  };

  auto emit_tet = [&](int a, int b, int c, int d, Domain dom, int comp) {
    std::array<Coordinate, 4> pts{B.pos[a], B.pos[b], B.pos[c], B.pos[d]};
    double det =
        signed_jacobian(GeometryKind::tetrahedron, std::span<const Coordinate>(pts.data(), 4),
                        Coordinate{0.25, 0.25, 0.25});
    VolumePart vp;
    vp.shape = GeometryKind::tetrahedron;
    if (det < 0)
      vp.vertices = {int16_t(a), int16_t(c), int16_t(b), int16_t(d)};
    else
      vp.vertices = {int16_t(a), int16_t(b), int16_t(c), int16_t(d)};
    vp.domain = dom;
    vp.component = int8_t(comp);
    leaf.parts.push_back(std::move(vp));
  };

  auto attempt = [&]() -> std::string {
    interface.clear();
    mantle_station.clear();
    leaf.parts.clear();

    if (!tube) {
      for (const SheetCycle& c : cycles)
        emit_cycle(c);
    } else {
      // ---- sleeve for a through-tube -----------------------------------
      try {
        const DiagonalCandidate& cand = candidates[0];
        const bool tube_positive = !cand.negative;
        const int cv_fc = fc.corner[cand.lo], cw_fc = fc.corner[cand.hi];
        AxisFrame fr = axis_frame(ref.corners[cand.lo], ref.corners[cand.hi]);

        // The cap at each end is that end component's cycle winding around
        // the axis; it gets replaced by the sleeve. Everything else stays.
        std::array<const SheetCycle*, 2> caps{nullptr, nullptr};
        for (const SheetCycle& c : cycles) {
          int side = tube_positive ? c.pos : c.neg;
          int which = side == cv_fc ? 0 : side == cw_fc ? 1 : -1;
          if (which >= 0 && std::abs(std::abs(cycle_winding(c.v, fr, B.pos)) - 1.0) < 0.25) {
            if (caps[which]) throw std::logic_error("two winding cycles at one tube end");
            caps[which] = &c;
          } else {
            emit_cycle(c);
          }
        }
        if (!caps[0] || !caps[1]) throw std::logic_error("tube cap cycle not found");

        // Ring: one interface crossing toward every opposite-side corner,
        // ordered by the fixed corner angle about the axis.
        const int m_id = B.add(maximum_vertex_spec(2));
        std::vector<std::pair<double, int>> stations;
        for (int c = 0; c < n; ++c)
          if ((((req.key >> c) & 1u) != 0) != tube_positive)
            stations.push_back({fr.angle(ref.corners[c]), c});
        std::sort(stations.begin(), stations.end());
        std::vector<int> ring;
        std::vector<double> ring_ang;
        for (auto& st : stations) {
          int oid = B.add(original_vertex(st.second));
          ring.push_back(B.add(interior_vertex(m_id, oid)));
          ring_ang.push_back(st.first);
        }

        // Caps reordered to wind positively, with value-independent angles.
        auto prep_rail = [&](const SheetCycle& c) {
          std::vector<int> v = c.v;
          std::vector<double> ang;
          for (int id : v) ang.push_back(fr.angle(fixed_proxy(kind, B.pool, id)));
          double w = 0;
          for (size_t i = 0; i < v.size(); ++i)
            w += wrap_angle(ang[(i + 1) % v.size()] - ang[i]);
          if (w < 0) {
            std::reverse(v.begin(), v.end());
            std::reverse(ang.begin(), ang.end());
          }
          return make_rail(v, ang);
        };
        Rail ring_rail = make_rail(ring, ring_ang);
        std::vector<std::array<int, 3>> mantle = stitch_annulus(prep_rail(*caps[0]), ring_rail);
        {
          auto lower = stitch_annulus(ring_rail, prep_rail(*caps[1]));
          mantle.insert(mantle.end(), lower.begin(), lower.end());
        }

        auto owner_station = [&](const std::vector<int>& verts) {
          Coordinate cent{0, 0, 0};
          for (int id : verts)
            cent = add3(cent, scale3(fixed_proxy(kind, B.pool, id), 1.0 / double(verts.size())));
          double a = fr.angle(cent);
          int best = -1;
          double bestd = 1e9;
          for (auto& st : stations) {
            double d = std::abs(wrap_angle(a - st.first));
            if (d < bestd - 1e-12) {
              bestd = d;
              best = st.second;
            }
          }
          return best;
        };

        for (const auto& t : mantle) {
          Facet f;
          f.v = {t[0], t[1], t[2]};
          // Radial rule: the sleeve normal faces the axis when the tube side
          // is exterior, away from it when the tube side is interior.
          Coordinate pa = fixed_proxy(kind, B.pool, t[0]);
          Coordinate pb = fixed_proxy(kind, B.pool, t[1]);
          Coordinate pc = fixed_proxy(kind, B.pool, t[2]);
          Coordinate nrm = cross3(sub3(pb, pa), sub3(pc, pa));
          Coordinate cent = scale3(add3(add3(pa, pb), pc), 1.0 / 3.0);
          bool inward = dot3(nrm, fr.radial(cent)) < 0;
          if (inward != tube_positive) std::swap(f.v[1], f.v[2]);
          int owner = owner_station(f.v);
          int owner_cc = cc.corner[owner];
          f.neg = tube_positive ? owner_cc : tube_cc;
          f.pos = tube_positive ? tube_cc : owner_cc;
          mantle_station[int(interface.size())] = owner;
          interface.push_back(std::move(f));
        }
      } catch (const std::exception& ex) {
        return std::string("tube stage: ") + ex.what();
      }
    }

    // ---- per-component boundary surfaces -------------------------------
    std::vector<std::vector<BoundaryFacet>> boundary(cc.total());
    for (const Facet& ff : face_facets) boundary[fc_to_cc[ff.comp]].push_back({ff.v, -1});
    for (size_t i = 0; i < interface.size(); ++i) {
      const Facet& f = interface[i];
      auto it = mantle_station.find(int(i));
      int station = it == mantle_station.end() ? -1 : it->second;
      boundary[f.neg].push_back({f.v, f.neg == tube_cc ? -1 : station});
      BoundaryFacet rev{f.v, f.pos == tube_cc ? -1 : station};
      std::reverse(rev.v.begin(), rev.v.end());
      boundary[f.pos].push_back(std::move(rev));
    }
    sync();

    std::vector<double> vol_total(S.size(), 0.0);
    for (int comp = 0; comp < cc.total(); ++comp) {
      const Domain dom = cc.is_interior(comp) ? Domain::interior : Domain::exterior;
      auto& facets = boundary[comp];
      if (facets.empty()) return "component without boundary facets";

      std::map<std::pair<int, int>, std::vector<size_t>> by_edge;
      for (size_t i = 0; i < facets.size(); ++i)
        for (size_t k = 0; k < facets[i].v.size(); ++k) {
          int a = facets[i].v[k], b = facets[i].v[(k + 1) % facets[i].v.size()];
          by_edge[{std::min(a, b), std::max(a, b)}].push_back(i);
        }
      for (auto& kv : by_edge)
        if (kv.second.size() != 2) return "component boundary is not closed";

      std::vector<double> svol(S.size());
      for (size_t s = 0; s < S.size(); ++s) {
        SurfaceCheck sc = surface_check(facets, S[s].pos);
        if (sc.closure > 1e-9 * std::max(1.0, sc.area))
          return "component boundary orientation does not close";
        svol[s] = sc.volume;
        vol_total[s] += sc.volume;
      }

      // Cone every facet from an owning pool vertex and fill the seams
      // between differently-owned facets with the transition tetrahedra of
      // the exact divergence identity: with seam edges directed as the owner
      // facet walks them, Sigma cones + Sigma tet(u, v, other, own) equals
      // the volume for any ownership. Valid chunks need every signed piece
      // non-negative on every sample, which makes them a genuine partition;
      // a small backtracking search picks for each facet an apex that sees
      // it front-on, pruning on seam sign. Serves components that are not
      // star-shaped: sleeve wrappers, face-bridged barbells, wedges.
      auto run_chunked = [&]() -> bool {
        std::vector<std::array<int, 3>> tris;
        std::vector<int> apexes;
        if (comp == tube_cc) apexes.push_back(addv(maximum_vertex_spec(2)));
        for (int c : cc.members[comp]) apexes.push_back(addv(original_vertex(c)));
        apexes.push_back(addv(center_vertex(0, 0)));
        for (int f = 0; f < int(ref.faces.size()); ++f)
          if (outcome_by_face[f] != 0) apexes.push_back(addv(center_vertex(1, f)));
        for (const auto& bf : facets)
          for (int id : bf.v)
            if (B.pool[size_t(id)].kind == VertexKind::interior &&
                std::find(apexes.begin(), apexes.end(), id) == apexes.end())
              apexes.push_back(id);

        // Work at the granularity of the facets' canonical fan triangles: a
        // bent sheet polygon has no single apex that sees all of it, but
        // each of its triangles can pick its own, with seam tets correcting
        // the difference across every shared edge (internal fan edges
        // included -- the divergence identity only needs each boundary
        // triangle covered once and each edge reconciled).
        struct Item {
          std::array<int, 3> t;
          int pref;  // preferred apex id, or -1
        };
        std::vector<Item> items;
        for (const auto& bf : facets) {
          facet_triangle_ids(bf.v, tris);
          const int pref = bf.chunk_owner >= 0 ? addv(original_vertex(bf.chunk_owner)) : -1;
          for (const auto& t : tris) items.push_back({t, pref});
        }

        struct Cand {
          int apex;
          double dist;
        };
        std::vector<std::vector<Cand>> cands(items.size());
        if (getenv("TPMC_CHUNK_DEBUG")) {
          fprintf(stderr, "[chunk] comp=%d members:", comp);
          for (int c : cc.members[comp]) fprintf(stderr, " %d", c);
          fprintf(stderr, " svol0=%.6f\n", svol[0]);
          for (size_t fi = 0; fi < facets.size(); ++fi) {
            fprintf(stderr, "[chunk]  facet %zu cyc:", fi);
            for (int id : facets[fi].v) {
              const auto& vs = B.pool[size_t(id)];
              fprintf(stderr, " %d(k%d,a%d,b%d,%d-%d)", id, int(vs.kind), vs.a, vs.b, vs.ia, vs.ib);
            }
            fprintf(stderr, "\n");
          }
          fprintf(stderr, "[chunk]  apexes:");
          for (int a : apexes) fprintf(stderr, " %d(k%d)", a, int(B.pool[size_t(a)].kind));
          fprintf(stderr, "\n");
        }
        for (size_t i = 0; i < items.size(); ++i) {
          const auto& t = items[i].t;
          Coordinate cent{0, 0, 0};
          for (int id : t) cent = add3(cent, scale3(fixed_proxy(kind, B.pool, id), 1.0 / 3.0));
          for (int apex : apexes) {
            if (apex == t[0] || apex == t[1] || apex == t[2]) {
              cands[i].push_back({apex, 0.0});
              continue;
            }
            if (tet_class(apex, t[0], t[1], t[2]) >= 0)
              cands[i].push_back(
                  {apex, apex == items[i].pref
                             ? -1.0
                             : norm3(sub3(cent, fixed_proxy(kind, B.pool, apex)))});
          }
          if (cands[i].empty()) { if (getenv("TPMC_CHUNK_DEBUG")) fprintf(stderr, "[chunk] no apex for item %zu tri %d %d %d\n", i, t[0], t[1], t[2]); return false; }
          std::sort(cands[i].begin(), cands[i].end(), [](const Cand& x, const Cand& y) {
            return x.dist != y.dist ? x.dist < y.dist : x.apex < y.apex;
          });
          if (getenv("TPMC_CHUNK_DEBUG")) {
            fprintf(stderr, "[chunk]  item %zu tri %d %d %d cands:", i, t[0], t[1], t[2]);
            for (const Cand& cd : cands[i]) fprintf(stderr, " %d", cd.apex);
            fprintf(stderr, "\n");
          }
        }

        struct Seam {
          size_t f1, f2;
          int u, v;  // directed as f1 walks the edge
        };
        std::vector<Seam> seams;
        std::vector<std::vector<size_t>> adj(items.size());
        {
          std::map<std::pair<int, int>, std::vector<std::pair<size_t, bool>>> edges;
          for (size_t i = 0; i < items.size(); ++i)
            for (int k = 0; k < 3; ++k) {
              int u = items[i].t[k], v = items[i].t[(k + 1) % 3];
              const bool fwd = u < v;
              edges[{std::min(u, v), std::max(u, v)}].push_back({i, fwd});
            }
          for (auto& kv : edges) {
            if (kv.second.size() != 2) { if (getenv("TPMC_CHUNK_DEBUG")) fprintf(stderr, "[chunk] edge %d-%d used %zu times\n", kv.first.first, kv.first.second, kv.second.size()); return false; }
            auto [i1, fwd1] = kv.second[0];
            auto [i2, fwd2] = kv.second[1];
            if (fwd1 == fwd2) { if (getenv("TPMC_CHUNK_DEBUG")) fprintf(stderr, "[chunk] winding clash on edge %d-%d\n", kv.first.first, kv.first.second); return false; }
            const int u = fwd1 ? kv.first.first : kv.first.second;
            const int v = fwd1 ? kv.first.second : kv.first.first;
            adj[i1].push_back(seams.size());
            adj[i2].push_back(seams.size());
            seams.push_back({i1, i2, u, v});
          }
        }

        std::vector<size_t> order(items.size());
        std::iota(order.begin(), order.end(), size_t(0));
        std::sort(order.begin(), order.end(),
                  [&](size_t x, size_t y) { return cands[x].size() < cands[y].size(); });

        std::vector<std::vector<size_t>> nbr(items.size());
        for (size_t si = 0; si < seams.size(); ++si) {
          nbr[seams[si].f1].push_back(seams[si].f2);
          nbr[seams[si].f2].push_back(seams[si].f1);
        }

        std::vector<int> owner(items.size(), -1);
        std::vector<std::array<int, 4>> pieces;
        // A completed assignment is only usable if the signed pieces
        // reproduce the component volume exactly on every sample: per-edge
        // seam tets cancel the apex differences only when owner regions
        // border along closed curves, so inexact assignments are rejected
        // and the search continues.
        auto check_exact = [&]() -> bool {
          pieces.clear();
          std::vector<double> tot(S.size(), 0.0);
          auto take = [&](int cl) {
            for (size_t s = 0; s < S.size(); ++s) tot[s] += tcv[s];
            return cl > 0;
          };
          for (size_t i = 0; i < items.size(); ++i) {
            const int apex = owner[i];
            const auto& t = items[i].t;
            if (t[0] == apex || t[1] == apex || t[2] == apex) continue;
            int cl = tet_class(apex, t[0], t[1], t[2]);
            if (cl < 0) return false;
            if (take(cl)) pieces.push_back({t[0], t[1], t[2], apex});
          }
          for (const Seam& s : seams) {
            const int o1 = owner[s.f1], o2 = owner[s.f2];
            if (o1 == o2 || s.u == o1 || s.v == o1 || s.u == o2 || s.v == o2) continue;
            int cl = tet_class(s.u, s.v, o2, o1);
            if (cl < 0) return false;
            if (take(cl)) pieces.push_back({s.u, s.v, o2, o1});
          }
          for (size_t s = 0; s < S.size(); ++s)
            if (std::abs(tot[s] - svol[s]) > 2e-9) return false;
          return true;
        };

        long nodes = 0;
        auto assign = [&](auto&& self, size_t k) -> bool {
          if (++nodes > 200000) return false;
          if (k == order.size()) return check_exact();
          size_t f = order[k];
          // Few owner regions bordering along closed curves is what makes an
          // assignment exact, so candidates matching an assigned neighbour's
          // owner go first.
          std::vector<Cand> ranked(cands[f].begin(), cands[f].end());
          std::stable_partition(ranked.begin(), ranked.end(), [&](const Cand& cd) {
            for (size_t g : nbr[f])
              if (owner[g] == cd.apex) return true;
            return false;
          });
          for (const Cand cd : ranked) {
            owner[f] = cd.apex;
            bool good = true;
            for (size_t si : adj[f]) {
              const Seam& s = seams[si];
              size_t g = s.f1 == f ? s.f2 : s.f1;
              if (owner[g] < 0 || owner[g] == owner[f]) continue;
              const int o1 = owner[s.f1], o2 = owner[s.f2];
              if (s.u == o1 || s.v == o1 || s.u == o2 || s.v == o2 || o1 == o2) continue;
              if (tet_class(s.u, s.v, o2, o1) < 0) {
                good = false;
                break;
              }
            }
            if (good && self(self, k + 1)) return true;
          }
          owner[f] = -1;
          return false;
        };
        if (!assign(assign, 0)) { if (getenv("TPMC_CHUNK_DEBUG")) fprintf(stderr, "[chunk] no exact assignment, nodes=%ld items=%zu\n", nodes, items.size()); return false; }
        for (const auto& p : pieces) emit_tet(p[0], p[1], p[2], p[3], dom, comp);
        return true;
      };

      const bool chunked = std::any_of(facets.begin(), facets.end(),
                                       [](const BoundaryFacet& f) { return f.chunk_owner >= 0; });
      if (chunked) {
        if (!run_chunked()) return "sleeve chunk tiling mismatch";
        continue;
      }

      // Star-shaped blob: cone from the first apex that sees every facet
      // front-on for every sample.
      std::vector<VertexSpec> anchors;
      if (comp == tube_cc) anchors.push_back(maximum_vertex_spec(2));
      {
        std::vector<std::pair<int, int>> deg;
        for (int c : cc.members[comp]) {
          int d = 0;
          for (const auto& e : ref.edges)
            if ((e[0] == c && cc.corner[e[1]] == comp) || (e[1] == c && cc.corner[e[0]] == comp))
              ++d;
          deg.push_back({-d, c});
        }
        std::sort(deg.begin(), deg.end());
        for (auto& dc : deg) anchors.push_back(original_vertex(dc.second));
      }
      anchors.push_back(center_vertex(0, 0));
      for (int f = 0; f < int(ref.faces.size()); ++f)
        if (outcome_by_face[f] != 0) anchors.push_back(center_vertex(1, f));
      // A waist vertex coning the sheet often sees the rest of the solid too.
      for (const auto& bf : facets)
        for (int id : bf.v)
          if (B.pool[size_t(id)].kind == VertexKind::interior &&
              std::find(anchors.begin(), anchors.end(), B.pool[size_t(id)]) == anchors.end())
            anchors.push_back(B.pool[size_t(id)]);

      bool done = false;
      std::string last_fail = "no anchor candidates";
      std::vector<std::array<int, 3>> tris;
      for (const VertexSpec& anchor : anchors) {
        const int apex = addv(anchor);
        std::vector<std::array<int, 4>> keep;
        std::vector<double> tot(S.size(), 0.0);
        bool ok = true;
        for (const auto& f : facets) {
          facet_triangle_ids(f.v, tris);
          for (const auto& t : tris) {
            if (t[0] == apex || t[1] == apex || t[2] == apex) continue;
            int cl = tet_class(apex, t[0], t[1], t[2]);
            if (cl < 0) {
              ok = false;
              last_fail = "anchor sees a facet from behind";
              break;
            }
            for (size_t s = 0; s < S.size(); ++s) tot[s] += tcv[s];
            if (cl > 0) keep.push_back({t[0], t[1], t[2], apex});
          }
          if (!ok) break;
        }
        for (size_t s = 0; ok && s < S.size(); ++s)
          if (std::abs(tot[s] - svol[s]) > 2e-9) {
            ok = false;
            last_fail = "cone volumes do not tile the component";
          }
        if (ok) {
          for (const auto& p : keep) emit_tet(p[0], p[1], p[2], p[3], dom, comp);
          done = true;
          break;
        }
      }
      // A component whose corners are joined through face bowties or thin
      // necks is not star-shaped from anywhere; chunk it instead.
      if (!done && cc.members[comp].size() >= 2) done = run_chunked();
      if (!done) return "blob anchoring failed: " + last_fail;
    }

    for (size_t s = 0; s < S.size(); ++s)
      if (std::abs(vol_total[s] - reference_cell_volume(kind)) > 1e-8)
        return "component volumes do not sum to the cell volume";
    return std::string();
  };

  {
    std::string fail;
    try {
      fail = attempt();
    } catch (const std::exception& ex) {
      fail = ex.what();
    }
    if (!fail.empty()) {
      error = fail;
      return leaf;
    }
  }

  for (const Facet& f : interface) {
    InterfaceFacet rec;
    for (int id : f.v) rec.vertices.push_back(int16_t(id));
    rec.interior_component = int8_t(f.neg);
    rec.exterior_component = int8_t(f.pos);
    leaf.interface.push_back(std::move(rec));
  }
  leaf.pool = B.pool;
  return leaf;
}

}  // namespace tpmc::synth
