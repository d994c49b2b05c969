#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <set>

#include "doctest.h"
#include "ising/lattice.hpp"
#include "test_helpers.hpp"

using namespace ising;

TEST_CASE("square builtin structure") {
  auto L = make_builtin("square");
  CHECK(L.nv() == 1);
  CHECK(L.nf() == 1);
  CHECK(L.ne() == 2);
  CHECK(L.nc() == 4);
  CHECK(L.face_degree[0] == 4);
  CHECK(L.face_walk[0].size() == 4);
  CHECK(L.weight(0) == doctest::Approx(std::sqrt(2.0) - 1.0).epsilon(1e-15));
  // critical square angle is pi/4
  CHECK(L.quads[0].theta == doctest::Approx(3.14159265358979323846 / 4).epsilon(1e-14));
  // quad corners of each edge are the four distinct corners
  for (auto& q : L.quads) {
    std::set<int> c{q.c00, q.c10, q.c11, q.c01};
    CHECK(c.size() == 4);
  }
  CHECK(L.quads[0].corner(0, 0) == L.quads[0].c00);
  CHECK(L.quads[0].corner(1, 1) == L.quads[0].c11);
}

TEST_CASE("hex builtin structure") {
  auto L = make_builtin("hex");
  CHECK(L.nv() == 2);
  CHECK(L.nf() == 1);
  CHECK(L.ne() == 3);
  CHECK(L.nc() == 6);
  CHECK(L.face_degree[0] == 6);
  CHECK(L.weight(0) == doctest::Approx(1.0 / std::sqrt(3.0)).epsilon(1e-15));
}

TEST_CASE("brick-asym builtin structure") {
  auto L = make_builtin("brick-asym");
  CHECK(L.nv() == 2);
  CHECK(L.nf() == 1);
  CHECK(L.ne() == 3);
  CHECK(L.face_degree[0] == 6);
  double t = 1.0 / std::sqrt(2.0);
  CHECK(L.weight(0) == doctest::Approx(t).epsilon(1e-15));
  CHECK(L.weight(1) == doctest::Approx(t).epsilon(1e-15));
  CHECK(L.weight(2) == doctest::Approx(0.5 * t).epsilon(1e-15));
}

TEST_CASE("multi-cell block validates and tiles") {
  for (int n : {2, 3}) {
    auto L = square_block(n, 0.3);
    CHECK(L.nv() == n * n);
    CHECK(L.ne() == 2 * n * n);
    CHECK(L.nf() == n * n);
    for (int f = 0; f < L.nf(); ++f) CHECK(L.face_degree[f] == 4);
    CHECK(L.nc() == 4 * n * n);
  }
}

TEST_CASE("json roundtrip preserves digest") {
  for (const char* name : {"square", "hex", "brick-asym"}) {
    auto L = make_builtin(name, 0.5);
    auto text = lattice_to_json(L);
    auto M = lattice_from_json(text);
    CHECK(lattice_digest(L) == lattice_digest(M));
    CHECK(lattice_digest(L).size() == 64);
    CHECK(M.ne() == L.ne());
    CHECK(M.nc() == L.nc());
  }
}

TEST_CASE("json rotation accepts plain edge ids") {
  // hex cell with rotation given as bare ids (parallel edges, no self-loops)
  const char* text = R"({
    "vertices": [{"id": 10, "x": 0, "y": 0}, {"id": 11, "x": 0.5, "y": 0.29}],
    "faces": [{"id": 7, "x": 0.5, "y": 0.57}],
    "periods": [[1, 0], [0.5, 0.866025403784438647]],
    "edges": [
      {"id": 0, "v0": 10, "v1": 11, "f_left": 7, "f_right": 7, "weight": 0.5},
      {"id": 1, "v0": 10, "v1": 11, "shift": [-1, 0], "f_left": 7, "f_right": 7, "weight": 0.5},
      {"id": 2, "v0": 10, "v1": 11, "shift": [0, -1], "f_left": 7, "f_right": 7, "weight": 0.5}
    ],
    "rotation": {"10": [0, 1, 2], "11": [2, 0, 1]}
  })";
  auto L = lattice_from_json(text);
  CHECK(L.nv() == 2);
  CHECK(L.face_degree[0] == 6);
  CHECK(L.nc() == 6);
  // same combinatorics as the builtin (positions differ slightly)
  auto H = make_builtin("hex", 0.5);
  for (int e = 0; e < 3; ++e) {
    CHECK(L.quads[e].c00 == H.quads[e].c00);
    CHECK(L.quads[e].c11 == H.quads[e].c11);
  }
  CHECK(lattice_digest(L) == lattice_digest(lattice_from_json(lattice_to_json(L))));
}

TEST_CASE("validation rejects bad input") {
  auto L = make_builtin("square");
  CHECK_THROWS_AS(L.set_weight(0, 1.5), GateError);
  CHECK_THROWS_AS(L.set_weight(0, 0.0), GateError);
  CHECK_THROWS_AS(make_builtin("kagome-unknown"), ParseError);

  // broken Euler count: two faces declared on the square cell
  PeriodicLattice B = make_builtin("square");
  PeriodicLattice C;
  C.vpos = B.vpos;
  C.fpos = {{0.5, 0.5}, {0.25, 0.25}};
  C.per1 = B.per1;
  C.per2 = B.per2;
  C.edges = B.edges;
  C.rot = B.rot;
  CHECK_THROWS_AS(C.finalize(), ParseError);

  // rotation order that breaks the face structure (swap two entries)
  PeriodicLattice D = make_builtin("square");
  std::swap(D.rot[0][1], D.rot[0][2]);
  CHECK_THROWS_AS(D.finalize(), ParseError);
}

TEST_CASE("weight and angle maps") {
  CHECK(theta_of_weight(1.0) == doctest::Approx(3.14159265358979323846 / 2).epsilon(1e-15));
  CHECK(weight_of_theta(theta_of_weight(0.37)) == doctest::Approx(0.37).epsilon(1e-14));
  CHECK(dual_weight(std::sqrt(2.0) - 1.0) ==
        doctest::Approx(std::sqrt(2.0) - 1.0).epsilon(1e-14));  // square self-dual point
  CHECK(dual_weight(dual_weight(0.3)) == doctest::Approx(0.3).epsilon(1e-14));
}
