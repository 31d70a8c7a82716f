#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "tpmc/geometry.hpp"
#include "tpmc/level_set_tests.hpp"
#include "tpmc/prng.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

using namespace tpmc;

namespace {

// Independent connectivity oracle: sample the bilinear interpolant on an
// n x n lattice and flood-fill the nonnegative samples with 4-neighborhood
// adjacency.  Returns whether the two positive-valued opposite corners end up
// in the same sampled component.
bool sampled_face_connectivity(const FaceValues& f, int n) {
  std::vector<uint8_t> pos(n * n);
  std::vector<double> row0(n), row1(n);
  for (int i = 0; i < n; ++i) {
    const double x = double(i) / (n - 1);
    row0[i] = f.a + x * (f.b - f.a);
    row1[i] = f.c + x * (f.d - f.c);
  }
  for (int j = 0; j < n; ++j) {
    const double y = double(j) / (n - 1);
    for (int i = 0; i < n; ++i) pos[j * n + i] = row0[i] + y * (row1[i] - row0[i]) >= 0;
  }
  const bool diag_main = f.a >= 0;  // which diagonal carries the positive pair
  const int start = diag_main ? 0 : n - 1;
  const int goal = diag_main ? n * n - 1 : n * (n - 1);
  if (!pos[start] || !pos[goal]) return false;
  std::vector<int> stack{start};
  std::vector<uint8_t> seen(n * n);
  seen[start] = 1;
  while (!stack.empty()) {
    const int c = stack.back();
    stack.pop_back();
    if (c == goal) return true;
    const int i = c % n, j = c / n;
    const std::array<int, 4> nb = {i > 0 ? c - 1 : -1, i < n - 1 ? c + 1 : -1,
                                   j > 0 ? c - n : -1, j < n - 1 ? c + n : -1};
    for (int x : nb)
      if (x >= 0 && pos[x] && !seen[x]) {
        seen[x] = 1;
        stack.push_back(x);
      }
  }
  return false;
}

// Same idea in 3d: trilinear samples on an n^3 lattice, 6-neighborhood flood
// fill between two corner samples, restricted to the candidate's sign.
bool sampled_cell_connectivity(const std::array<double, 8>& vals, int corner_a, int corner_b,
                               bool negative, int n) {
  std::vector<uint8_t> pos(n * n * n);
  std::vector<double> z0(n * n), z1(n * n);
  auto bilinear = [&](double a, double b, double c, double d, std::vector<double>& out) {
    for (int j = 0; j < n; ++j) {
      const double y = double(j) / (n - 1);
      const double l = a + y * (c - a), r = b + y * (d - b);
      for (int i = 0; i < n; ++i) out[j * n + i] = l + (double(i) / (n - 1)) * (r - l);
    }
  };
  bilinear(vals[0], vals[1], vals[2], vals[3], z0);
  bilinear(vals[4], vals[5], vals[6], vals[7], z1);
  for (int k = 0; k < n; ++k) {
    const double z = double(k) / (n - 1);
    for (int j = 0; j < n * n; ++j) {
      const double v = z0[j] + z * (z1[j] - z0[j]);
      pos[k * n * n + j] = negative ? v < 0 : v >= 0;
    }
  }
  auto corner_index = [&](int c) {
    const int i = (c & 1) ? n - 1 : 0;
    const int j = (c & 2) ? n - 1 : 0;
    const int k = (c & 4) ? n - 1 : 0;
    return (k * n + j) * n + i;
  };
  const int start = corner_index(corner_a), goal = corner_index(corner_b);
  if (!pos[start] || !pos[goal]) return false;
  std::vector<int> stack{start};
  std::vector<uint8_t> seen(n * n * n);
  seen[start] = 1;
  while (!stack.empty()) {
    const int c = stack.back();
    stack.pop_back();
    if (c == goal) return true;
    const int i = c % n, j = (c / n) % n, k = c / (n * n);
    const std::array<int, 6> nb = {i > 0 ? c - 1 : -1,         i < n - 1 ? c + 1 : -1,
                                   j > 0 ? c - n : -1,         j < n - 1 ? c + n : -1,
                                   k > 0 ? c - n * n : -1,     k < n - 1 ? c + n * n : -1};
    for (int x : nb)
      if (x >= 0 && pos[x] && !seen[x]) {
        seen[x] = 1;
        stack.push_back(x);
      }
  }
  return false;
}

const std::array<double, 8> golden = {-4, 4, -1, -1, 2, -3, 5, -1};

}  // namespace

TEST_CASE("compute_key maps sign patterns to bits") {
  CHECK(compute_key(GeometryKind::quadrilateral, std::array{-1.0, 1.0, 1.0, 1.0}) == 14u);
  CHECK(compute_key(GeometryKind::hexahedron, golden) == 82u);
  const std::array<double, 8> neg = {-1, -1, -1, -1, -1, -1, -1, -1};
  CHECK(compute_key(GeometryKind::hexahedron, neg) == 0u);
  const std::array<double, 8> pos = {1, 1, 1, 1, 1, 1, 1, 1};
  CHECK(compute_key(GeometryKind::hexahedron, pos) == 255u);
  // zero counts as exterior
  CHECK(compute_key(GeometryKind::line, std::array{0.0, -1.0}) == 1u);
}

TEST_CASE("face_center_sign picks the saddle sign") {
  CHECK(face_center_sign({2, -1, -1, 1}) == 1);
  CHECK(face_center_sign({1, -1, -1, 1}) == 0);
  CHECK(face_center_sign({-2, 1, 1, -1}) == -1);
}

TEST_CASE("hyperbola_center locates the saddle") {
  const auto c1 = hyperbola_center({-1, 0.5, 2, -1});
  CHECK(c1[0] == doctest::Approx(2.0 / 3.0).epsilon(1e-14));
  CHECK(c1[1] == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
  const auto c2 = hyperbola_center({1, -1, -1, 1});
  CHECK(c2[0] == doctest::Approx(0.5));
  CHECK(c2[1] == doctest::Approx(0.5));
  const auto c3 = hyperbola_center({2, -1, -1, 1});
  CHECK(c3[0] == doctest::Approx(0.6).epsilon(1e-14));
  CHECK(c3[1] == doctest::Approx(0.6).epsilon(1e-14));
  CHECK_THROWS_AS((void)hyperbola_center({0, 1, 1, 2}), std::domain_error);
}

TEST_CASE("ambiguous face detection on known keys") {
  CHECK(ambiguous_faces(GeometryKind::hexahedron, 82u) == std::vector{2});
  CHECK(ambiguous_faces(GeometryKind::hexahedron, 0u).empty());
  CHECK(ambiguous_faces(GeometryKind::hexahedron, 153u) == std::vector{4, 5});
  CHECK(ambiguous_faces(GeometryKind::quadrilateral, 6u) == std::vector{0});
  CHECK(ambiguous_faces(GeometryKind::quadrilateral, 9u) == std::vector{0});
  CHECK(ambiguous_faces(GeometryKind::quadrilateral, 5u).empty());
  CHECK(ambiguous_faces(GeometryKind::tetrahedron, 5u).empty());
  // prism quad faces and the pyramid base can checkerboard
  CHECK(ambiguous_faces(GeometryKind::prism, 0b10001u) == std::vector{2});
  CHECK(ambiguous_faces(GeometryKind::pyramid, 0b00110u) == std::vector{0});
}

TEST_CASE("face_bridge connects the winning diagonal") {
  // key 82, face 2 holds corners {0,1,4,5}
  CHECK(face_bridge(GeometryKind::hexahedron, 2, 82u, -1) == std::array{0, 5});
  CHECK(face_bridge(GeometryKind::hexahedron, 2, 82u, 1) == std::array{1, 4});
  CHECK(face_bridge(GeometryKind::quadrilateral, 0, 9u, 1) == std::array{0, 3});
  CHECK(face_bridge(GeometryKind::quadrilateral, 0, 9u, -1) == std::array{1, 2});
  CHECK(face_bridge(GeometryKind::quadrilateral, 0, 6u, 1) == std::array{1, 2});
  CHECK_THROWS_AS((void)face_bridge(GeometryKind::hexahedron, 0, 82u, 1), std::invalid_argument);
}

TEST_CASE("corner_components on hand-checked keys") {
  {
    const auto cc = corner_components(GeometryKind::hexahedron, 82u, std::array{-1});
    CHECK(cc.interior_count == 1);
    CHECK(cc.exterior_count == 2);
    CHECK(cc.comp[0] == cc.comp[5]);  // bridged across face 2
    CHECK(cc.comp[4] == cc.comp[6]);
    CHECK(cc.comp[1] != cc.comp[4]);
  }
  {
    const auto cc = corner_components(GeometryKind::hexahedron, 0u, {});
    CHECK(cc.interior_count == 1);
    CHECK(cc.exterior_count == 0);
  }
  {
    // corners 3 and 4 exterior, no ambiguous faces
    const auto cc = corner_components(GeometryKind::hexahedron, 24u, {});
    CHECK(cc.interior_count == 1);
    CHECK(cc.exterior_count == 2);
    CHECK(cc.comp[3] != cc.comp[4]);
  }
}

TEST_CASE("diagonal candidate enumeration") {
  CHECK(hex_diagonal_candidates(82u, std::array{-1}).size() == 1);
  CHECK(hex_diagonal_candidates(82u, std::array{-1})[0].lo == 1);
  CHECK(!hex_diagonal_candidates(82u, std::array{-1})[0].negative);
  // flipping the face decision reconnects everything
  CHECK(hex_diagonal_candidates(82u, std::array{1}).empty());
  {
    const auto c = hex_diagonal_candidates(24u, {});
    REQUIRE(c.size() == 1);
    CHECK(c[0].lo == 3);
    CHECK(c[0].hi == 4);
    CHECK(!c[0].negative);
  }
  {
    // both decisions against the exterior diagonals: two undecided diagonals
    const auto c = hex_diagonal_candidates(153u, std::array{-1, -1});
    REQUIRE(c.size() == 2);
    CHECK(c[0].lo == 0);
    CHECK(c[1].lo == 3);
    CHECK(!c[0].negative);
  }
  {
    // decisions for the exterior diagonals leave the two interior columns
    // undecided instead
    const auto c = hex_diagonal_candidates(153u, std::array{1, 1});
    REQUIRE(c.size() == 2);
    CHECK(c[0].lo == 1);
    CHECK(c[1].lo == 2);
    CHECK(c[0].negative);
    CHECK(c[1].negative);
  }
  // mixed decisions connect both sides fully
  CHECK(hex_diagonal_candidates(153u, std::array{1, -1}).empty());
}

TEST_CASE("connectivity quadratic of a hand-checked cell") {
  const LocalScalarField field = make_field(GeometryKind::hexahedron, golden);
  const ConnectivityQuadratic q = interior_connectivity_test(field, 2);
  CHECK(q.a == doctest::Approx(-42.0).epsilon(1e-14));
  CHECK(q.b == doctest::Approx(37.0).epsilon(1e-14));
  CHECK(q.c == doctest::Approx(-8.0).epsilon(1e-14));
  CHECK(q.candidate.lo == 1);
  CHECK(q.candidate.hi == 6);
  CHECK(!q.candidate.negative);
  REQUIRE(q.has_maximum);
  CHECK(q.t_max == doctest::Approx(37.0 / 84.0).epsilon(1e-15));
  CHECK(q.connected);
  // peak value 25/168
  CHECK((q.a * q.t_max + q.b) * q.t_max + q.c == doctest::Approx(25.0 / 168.0).epsilon(1e-13));
}

TEST_CASE("maximum and root vertices of the hand-checked cell") {
  const LocalScalarField field = make_field(GeometryKind::hexahedron, golden);
  const Coordinate m = maximum_vertex(field, 2);
  CHECK(m[0] == doctest::Approx(252.0 / 413.0).epsilon(1e-13));
  CHECK(m[1] == doctest::Approx(191.0 / 413.0).epsilon(1e-13));
  CHECK(m[2] == doctest::Approx(37.0 / 84.0).epsilon(1e-15));
  CHECK(evaluate_field(field, m) > 0);

  const auto roots = root_vertices(field, 2);
  REQUIRE(roots.size() == 2);
  CHECK(roots[0][2] == doctest::Approx(8.0 / 21.0).epsilon(1e-13));
  CHECK(roots[1][2] == doctest::Approx(0.5).epsilon(1e-13));
  CHECK(roots[1][0] == doctest::Approx(2.0 / 3.0).epsilon(1e-13));
  CHECK(roots[1][1] == doctest::Approx(1.0 / 3.0).epsilon(1e-13));
  for (const auto& r : roots) CHECK(std::abs(evaluate_field(field, r)) <= 1e-12);
  // other axes slice the same interface: their root vertices are zeros too
  for (int axis : {0, 1})
    for (const auto& r : root_vertices(field, axis))
      CHECK(std::abs(evaluate_field(field, r)) <= 1e-12);
}

TEST_CASE("hourglass cell with two undecided diagonals") {
  const std::array<double, 8> vals = {5, -1, -1, 0.1, 0.1, -1, -1, 5};
  const LocalScalarField field = make_field(GeometryKind::hexahedron, vals);
  const ConnectivityQuadratic q = interior_connectivity_test(field, 2);
  CHECK(q.candidate.lo == 0);
  CHECK(q.candidate.hi == 7);
  CHECK(!q.candidate.negative);
  CHECK(q.connected);
  CHECK(q.t_max == doctest::Approx(0.5).epsilon(1e-14));
  const Coordinate m = maximum_vertex(field, 2);
  CHECK(m[0] == doctest::Approx(0.5).epsilon(1e-13));
  CHECK(m[1] == doctest::Approx(0.5).epsilon(1e-13));
  const auto roots = root_vertices(field, 2);
  REQUIRE(roots.size() == 2);
  for (const auto& r : roots) CHECK(std::abs(evaluate_field(field, r)) <= 1e-12);

  // mirrored field: same geometry on the negative side
  std::array<double, 8> neg;
  for (int i = 0; i < 8; ++i) neg[i] = -vals[i];
  const ConnectivityQuadratic qn = interior_connectivity_test(make_field(GeometryKind::hexahedron, neg), 2);
  CHECK(qn.candidate.lo == 0);
  CHECK(qn.candidate.negative);
  CHECK(qn.connected);
  CHECK(qn.t_max == doctest::Approx(0.5).epsilon(1e-14));
}

TEST_CASE("pinched hourglass stays disconnected") {
  const std::array<double, 8> vals = {3, -2, -2, 0.4, 0.4, -2, -2, 3};
  const LocalScalarField field = make_field(GeometryKind::hexahedron, vals);
  const ConnectivityQuadratic q = interior_connectivity_test(field, 2);
  CHECK(!q.connected);
  CHECK(q.candidate.lo == 0);  // first undecided diagonal is reported
  REQUIRE(q.has_maximum);     // the waist exists, it just dips below zero
  const Coordinate m = maximum_vertex(field, 2);
  CHECK(m[0] == doctest::Approx(0.5).epsilon(1e-13));
  CHECK(m[1] == doctest::Approx(0.5).epsilon(1e-13));
  CHECK(evaluate_field(field, m) < 0);
  CHECK(root_vertices(field, 2).empty());
}

TEST_CASE("trivial cells have no candidates") {
  const std::array<double, 8> pos = {1, 2, 3, 4, 5, 6, 7, 8};
  const ConnectivityQuadratic qp =
      interior_connectivity_test(make_field(GeometryKind::hexahedron, pos), 2);
  CHECK(qp.connected);
  const std::array<double, 8> planar = {-1, 1, -1, 1, -1, 1, -1, 1};
  const ConnectivityQuadratic ql =
      interior_connectivity_test(make_field(GeometryKind::hexahedron, planar), 2);
  CHECK(!ql.connected);
  CHECK_THROWS_AS((void)maximum_vertex(make_field(GeometryKind::hexahedron, planar), 2),
                  std::domain_error);
}

TEST_CASE("edge_intersection on element edges") {
  const Coordinate p = edge_intersection(GeometryKind::hexahedron, golden, 1, 3);
  CHECK(p[0] == doctest::Approx(1.0));
  CHECK(p[1] == doctest::Approx(0.8).epsilon(1e-15));
  CHECK(p[2] == doctest::Approx(0.0));
  // zero endpoint sits exactly on the interface
  const Coordinate q =
      edge_intersection(GeometryKind::line, std::array{0.0, 2.0}, 0, 1);
  CHECK(q[0] == doctest::Approx(0.0));
  CHECK_THROWS_AS((void)edge_intersection(GeometryKind::hexahedron, golden, 0, 2),
                  std::domain_error);  // -4,-1: same sign
  CHECK_THROWS_AS((void)edge_intersection(GeometryKind::hexahedron, golden, 0, 7),
                  std::invalid_argument);  // diagonal, not an edge
}

TEST_CASE("edge_intersection zeros the field") {
  SplitMix64 rng(99);
  for (GeometryKind kind :
       {GeometryKind::triangle, GeometryKind::quadrilateral, GeometryKind::tetrahedron,
        GeometryKind::prism, GeometryKind::pyramid, GeometryKind::hexahedron}) {
    const ReferenceElement& re = reference_element(kind);
    for (int trial = 0; trial < 200; ++trial) {
      std::array<double, 8> vals{};
      for (int i = 0; i < corner_count(kind); ++i) vals[i] = rng.uniform(-5, 5);
      const std::span<const double> vspan(vals.data(), corner_count(kind));
      const LocalScalarField field = make_field(kind, vspan);
      for (const auto& e : re.edges) {
        if (vals[e[0]] * vals[e[1]] > 0) continue;
        if (vals[e[0]] == 0 && vals[e[1]] == 0) continue;
        const Coordinate p = edge_intersection(kind, vspan, e[0], e[1]);
        CHECK(std::abs(evaluate_field(field, p)) <= 2e-13);
      }
    }
  }
}

TEST_CASE("interior_intersection finds the first crossing") {
  const LocalScalarField field = make_field(GeometryKind::hexahedron, golden);
  const Coordinate m = {252.0 / 413.0, 191.0 / 413.0, 37.0 / 84.0};
  const Coordinate target = {0, 0.5, 0};
  const Coordinate hit = interior_intersection(field, m, target);
  CHECK(std::abs(evaluate_field(field, hit)) <= 5e-9);
  // the hit lies strictly between the endpoints on the segment
  const double s = (hit[0] - m[0]) / (target[0] - m[0]);
  CHECK(s > 0);
  CHECK(s < 1);
  // no crossing on an all-positive segment
  const std::array<double, 8> pos = {1, 2, 3, 4, 5, 6, 7, 8};
  CHECK_THROWS_AS((void)interior_intersection(make_field(GeometryKind::hexahedron, pos),
                                              {0.1, 0.1, 0.1}, {0.9, 0.9, 0.9}),
                  std::domain_error);
}

TEST_CASE("interior_intersection respects segment order and residual") {
  SplitMix64 rng(7);
  for (GeometryKind kind : {GeometryKind::tetrahedron, GeometryKind::prism,
                            GeometryKind::pyramid, GeometryKind::hexahedron}) {
    int tested = 0;
    for (int trial = 0; trial < 3000 && tested < 300; ++trial) {
      std::array<double, 8> vals{};
      double scale = 0;
      for (int i = 0; i < corner_count(kind); ++i) {
        vals[i] = rng.uniform(-5, 5);
        scale = std::max(scale, std::abs(vals[i]));
      }
      const LocalScalarField field =
          make_field(kind, std::span<const double>(vals.data(), corner_count(kind)));
      const auto draw_point = [&] {
        while (true) {
          Coordinate p{};
          for (int d = 0; d < 3; ++d) p[d] = rng.uniform(0.02, 0.98);
          if (contains_reference_point(kind, p)) return p;
        }
      };
      const Coordinate a = draw_point(), b = draw_point();
      const double fa = evaluate_field(field, a);
      if (fa * evaluate_field(field, b) >= 0) continue;
      ++tested;
      const Coordinate hit = interior_intersection(field, a, b);
      CHECK(std::abs(evaluate_field(field, hit)) <= 1e-9 * scale);
      // field keeps its sign strictly before the first crossing
      double smax = 0;
      for (int d = 0; d < 3; ++d)
        if (b[d] != a[d]) smax = std::max(smax, (hit[d] - a[d]) / (b[d] - a[d]));
      for (int k = 1; k < 50; ++k) {
        const double s = smax * k / 51.0;
        Coordinate p;
        for (int d = 0; d < 3; ++d) p[d] = a[d] + s * (b[d] - a[d]);
        const double v = evaluate_field(field, p);
        if (std::abs(v) > 1e-7 * scale) CHECK(v * fa > 0);
      }
    }
    CHECK(tested >= 300);
  }
}

TEST_CASE("face test agrees with a sampled flood fill") {
  SplitMix64 rng(0xfacefeed);
  int tested = 0;
  for (int trial = 0; trial < 10000; ++trial) {
    FaceValues f{};
    const bool main_diag_positive = trial % 2 == 0;
    if (main_diag_positive) {
      f.a = rng.uniform(0.01, 5);
      f.d = rng.uniform(0.01, 5);
      f.b = -rng.uniform(0.01, 5);
      f.c = -rng.uniform(0.01, 5);
    } else {
      f.a = -rng.uniform(0.01, 5);
      f.d = -rng.uniform(0.01, 5);
      f.b = rng.uniform(0.01, 5);
      f.c = rng.uniform(0.01, 5);
    }
    const double saddle_num = f.a * f.d - f.b * f.c;
    const double den = f.a - f.b - f.c + f.d;
    // skip draws whose saddle corridor is too thin for the sampling lattice
    if (std::abs(saddle_num) < 1e-6) continue;
    if (2 * std::sqrt(std::abs(saddle_num)) / std::abs(den) < 2.5 / 255.0) continue;
    ++tested;
    const bool predicted = face_center_sign(f) > 0;
    bool truth = sampled_face_connectivity(f, 256);
    if (truth != predicted) truth = sampled_face_connectivity(f, 1024);
    CHECK(truth == predicted);
  }
  CHECK(tested >= 9900);
}

TEST_CASE("interior test agrees with a sampled flood fill") {
  SplitMix64 rng(0xce1140);
  int draws = 0, candidate_draws = 0, connected_seen = 0, blocked_seen = 0;
  while (draws < 10000) {
    ++draws;
    std::array<double, 8> vals{};
    for (double& v : vals) v = rng.uniform(-5, 5);
    const unsigned key = compute_key(GeometryKind::hexahedron, vals);
    const auto ambiguous = ambiguous_faces(GeometryKind::hexahedron, key);
    // face marginality guard: a near-degenerate saddle would make both the
    // candidate set and the sampled oracle unstable
    bool marginal = false;
    std::vector<int> outcomes;
    for (int fidx : ambiguous) {
      const auto& fv = reference_element(GeometryKind::hexahedron).faces[fidx].vertices;
      const FaceValues f{vals[fv[0]], vals[fv[1]], vals[fv[2]], vals[fv[3]]};
      const double num = f.a * f.d - f.b * f.c;
      const double den = f.a - f.b - f.c + f.d;
      if (std::abs(num) < 1e-6 || 2 * std::sqrt(std::abs(num)) / std::abs(den) < 2.5 / 63.0)
        marginal = true;
      outcomes.push_back(face_center_sign(f));
    }
    if (marginal) continue;
    const auto candidates = hex_diagonal_candidates(key, outcomes);
    const LocalScalarField field = make_field(GeometryKind::hexahedron, vals);
    const ConnectivityQuadratic q = interior_connectivity_test(field, 2);
    if (candidates.empty()) {
      CHECK(q.connected == (key == 255u));
      continue;
    }
    // candidates never span both sides
    for (const auto& c : candidates) CHECK(c.negative == candidates[0].negative);

    // tube marginality guard on the chosen quadratic
    const double peak = q.has_maximum
                            ? (q.a * q.t_max + q.b) * q.t_max + q.c
                            : std::max(q.c, q.a + q.b + q.c);
    if (std::abs(peak) < 1e-3) continue;
    ++candidate_draws;

    bool truth = sampled_cell_connectivity(vals, q.candidate.lo, q.candidate.hi,
                                           q.candidate.negative, 64);
    if (truth != q.connected)
      truth = sampled_cell_connectivity(vals, q.candidate.lo, q.candidate.hi,
                                        q.candidate.negative, 160);
    if (truth != q.connected)
      truth = sampled_cell_connectivity(vals, q.candidate.lo, q.candidate.hi,
                                        q.candidate.negative, 352);
    CHECK(truth == q.connected);
    (q.connected ? connected_seen : blocked_seen)++;

    // axis choice must not change the verdict
    CHECK(interior_connectivity_test(field, 0).connected == q.connected);
    CHECK(interior_connectivity_test(field, 1).connected == q.connected);

    // sign symmetry: the mirrored field sees the same candidate from the
    // other side
    std::array<double, 8> neg;
    for (int i = 0; i < 8; ++i) neg[i] = -vals[i];
    const ConnectivityQuadratic qm =
        interior_connectivity_test(make_field(GeometryKind::hexahedron, neg), 2);
    CHECK(qm.connected == q.connected);
    CHECK(qm.candidate.lo == q.candidate.lo);
    CHECK(qm.candidate.negative != q.candidate.negative);
  }
  CHECK(candidate_draws >= 200);
  CHECK(connected_seen >= 30);
  CHECK(blocked_seen >= 30);
}

TEST_CASE("decisions are invariant under positive scaling") {
  SplitMix64 rng(0x5ca1e);
  for (int trial = 0; trial < 1000; ++trial) {
    std::array<double, 8> vals{};
    for (double& v : vals) v = rng.uniform(-5, 5);
    const LocalScalarField base = make_field(GeometryKind::hexahedron, vals);
    const ConnectivityQuadratic q0 = interior_connectivity_test(base, 2);
    for (double lambda : {1e-6, 1e6}) {
      std::array<double, 8> scaled;
      for (int i = 0; i < 8; ++i) scaled[i] = lambda * vals[i];
      const LocalScalarField f = make_field(GeometryKind::hexahedron, scaled);
      CHECK(compute_key(GeometryKind::hexahedron, scaled) ==
            compute_key(GeometryKind::hexahedron, vals));
      const ConnectivityQuadratic q = interior_connectivity_test(f, 2);
      CHECK(q.connected == q0.connected);
      CHECK(q.candidate.lo == q0.candidate.lo);
      CHECK(q.candidate.negative == q0.candidate.negative);
      CHECK(q.has_maximum == q0.has_maximum);
      if (q.has_maximum) CHECK(q.t_max == doctest::Approx(q0.t_max).epsilon(1e-12));
      // vertex geometry is only contractual for a connecting tube; elsewhere
      // the slice saddle may degenerate and lose relative precision
      if (q0.connected && q0.has_maximum) {
        const Coordinate m0 = maximum_vertex(base, 2), m = maximum_vertex(f, 2);
        for (int d = 0; d < 3; ++d) CHECK(m[d] == doctest::Approx(m0[d]).epsilon(1e-12));
        const auto r0 = root_vertices(base, 2), r = root_vertices(f, 2);
        REQUIRE(r.size() == r0.size());
        for (size_t i = 0; i < r.size(); ++i)
          for (int d = 0; d < 3; ++d)
            CHECK(r[i][d] == doctest::Approx(r0[i][d]).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("hex face restrictions match standalone quadrilaterals") {
  SplitMix64 rng(0xface2);
  const ReferenceElement& re = reference_element(GeometryKind::hexahedron);
  for (int trial = 0; trial < 500; ++trial) {
    std::array<double, 8> vals{};
    for (double& v : vals) v = rng.uniform(-5, 5);
    const unsigned key = compute_key(GeometryKind::hexahedron, vals);
    for (int fidx = 0; fidx < 6; ++fidx) {
      const auto& fv = re.faces[fidx].vertices;
      std::array<double, 4> fvals{};
      unsigned fkey = 0;
      for (int j = 0; j < 4; ++j) {
        fvals[j] = vals[fv[j]];
        if (fvals[j] >= 0) fkey |= 1u << j;
      }
      CHECK(fkey == compute_key(GeometryKind::quadrilateral, fvals));
      CHECK(face_is_ambiguous(GeometryKind::hexahedron, fidx, key) ==
            face_is_ambiguous(GeometryKind::quadrilateral, 0, fkey));
    }
  }
}
