#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <complex>
#include <set>

#include "doctest.h"
#include "ising/region.hpp"
#include "test_helpers.hpp"

using namespace ising;

namespace {

const SEmbedding& square_emb() {
  static SEmbedding se = build_s_embedding(make_builtin("square"));
  return se;
}
const SEmbedding& hex_emb() {
  static SEmbedding se = build_s_embedding(make_builtin("hex"));
  return se;
}

// m x n block of unit faces at mesh 1 (margins catch the full edge fan)
FiniteRegion block_region(const SEmbedding& emb, int m, int n) {
  return extract_region(emb, ShapeSpec::rect(-0.25, -0.25, m + 0.25, n + 0.25), 1.0);
}

int count_even(const std::vector<char>& v) {
  int n = 0;
  for (char c : v) n += (c != 0);
  return n;
}

}  // namespace

TEST_CASE("unit square at mesh 1/64 matches the counting oracle") {
  const SEmbedding& se = square_emb();
  double delta = 1.0 / 64;
  double eps = 1e-9;  // keep the outline off the lattice rows
  ShapeSpec sq = ShapeSpec::rect(eps, eps, 1 - eps, 1 - eps);
  FiniteRegion reg = extract_region(se, sq, delta);

  // independent count over cells, same strict inclusion rule
  int ne = 0;
  std::set<std::pair<int, std::pair<int, int>>> everts, efaces;
  const PeriodicLattice& lat = se.lat;
  for (int a2 = -2; a2 <= 66; ++a2)
    for (int a1 = -2; a1 <= 66; ++a1)
      for (int e = 0; e < lat.ne(); ++e) {
        cplx p = (cplx)(delta * (se.Sz[e] + (double)a1 * se.L1 + (double)a2 * se.L2));
        if (!sq.contains(p.real(), p.imag())) continue;
        ++ne;
        const EdgeSpec& es = lat.edges[e];
        everts.insert({es.v0, {a1, a2}});
        everts.insert({es.v1, {a1 + es.s1, a2 + es.s2}});
        efaces.insert({es.f_left, {a1 + lat.lshift[e][0], a2 + lat.lshift[e][1]}});
        efaces.insert({es.f_right, {a1 + lat.rshift[e][0], a2 + lat.rshift[e][1]}});
      }
  CHECK(ne == 8064);
  CHECK(reg.ne() == ne);
  CHECK((int)everts.size() == 4221);
  CHECK(reg.nv() == (int)everts.size());
  CHECK((int)efaces.size() == 4096);
  CHECK(reg.nf() == (int)efaces.size());
  CHECK(reg.nc() == 16380);  // V+F+Q-1 on a disk

  int interior_faces = 0;
  for (const RegionFace& f : reg.faces) interior_faces += f.interior;
  CHECK(interior_faces == 3844);

  CHECK(reg.boundary.size() == 1);
  CHECK((int)reg.boundary[0].size() == 504);
  CHECK(reg.simply_connected);
  CHECK(!reg.pinched);
  CHECK(reg.hausdorff_gap <= 10 * delta);
  CHECK(reg.hausdorff_gap > 0);
}

TEST_CASE("extraction commutes with doubling the shape and the mesh") {
  const SEmbedding& se = square_emb();
  ShapeSpec sq = ShapeSpec::rect(1e-9, 1e-9, 1 - 1e-9, 1 - 1e-9);
  FiniteRegion r1 = extract_region(se, sq, 1.0 / 32);
  FiniteRegion r2 = extract_region(se, sq.scaled(2.0), 2.0 / 32);
  REQUIRE(r1.ne() == r2.ne());
  REQUIRE(r1.nv() == r2.nv());
  REQUIRE(r1.nc() == r2.nc());
  for (int i = 0; i < r1.ne(); ++i) {
    CHECK(r1.edges[i].e == r2.edges[i].e);
    CHECK(r1.edges[i].a1 == r2.edges[i].a1);
    CHECK(r1.edges[i].a2 == r2.edges[i].a2);
  }
  for (int i = 0; i < r1.nv(); ++i) {
    CHECK(r2.vpos(i).real() == 2 * r1.vpos(i).real());  // bit-exact scaling
    CHECK(r2.vpos(i).imag() == 2 * r1.vpos(i).imag());
  }

  FiniteRegion r3 = extract_region(se, sq, 1.0 / 32);  // determinism
  REQUIRE(r3.ne() == r1.ne());
  for (int i = 0; i < r1.ne(); ++i) CHECK(r3.edges[i].a1 == r1.edges[i].a1);
}

TEST_CASE("hex disk extraction invariants") {
  const SEmbedding& se = hex_emb();
  double delta = 1.0 / 24;
  FiniteRegion reg = extract_region(se, ShapeSpec::disk(0.1, 0.2, 0.55), delta);
  CHECK(reg.ne() > 500);
  CHECK(reg.boundary.size() == 1);
  CHECK(reg.simply_connected);
  CHECK(reg.hausdorff_gap <= 10 * delta);
  for (const auto& cyc : reg.boundary)
    for (const BoundaryStep& st : cyc) CHECK(reg.corners[st.corner].nquad == 1);
  // wedge geometry: S(v) - S(f) equals the corner square in every cell
  for (int rc = 0; rc < reg.nc(); ++rc) {
    cplx d = reg.vpos(reg.corners[rc].rv) - reg.fpos(reg.corners[rc].rf);
    CHECK(std::abs(d - reg.corner_sq(rc)) < 1e-12);
  }
}

TEST_CASE("square annulus has two boundary cycles and chi 0") {
  const SEmbedding& se = square_emb();
  double delta = 1.0 / 64;
  FiniteRegion reg = extract_region(se, ShapeSpec::square_annulus(0.25), delta);
  CHECK(reg.boundary.size() == 2);
  CHECK(!reg.simply_connected);
  CHECK(reg.nv() + reg.nf() + reg.ne() - reg.nc() == 0);
  CHECK(reg.hausdorff_gap <= 10 * delta);
  CHECK(reg.boundary[0].size() > reg.boundary[1].size());  // outer walk is longer
  CHECK_THROWS_AS(extract_region(se, ShapeSpec::square_annulus(0.1), delta), GateError);
}

TEST_CASE("strip is a cylinder with frozen counts") {
  const SEmbedding& se = square_emb();
  double delta = 1.0 / 16;
  FiniteRegion reg = extract_region(se, ShapeSpec::halfplane_strip(0.5), delta);
  CHECK(reg.wrap == 32);
  CHECK(reg.ne() == 480);
  CHECK(reg.nv() == 288);
  CHECK(reg.nf() == 256);
  CHECK(reg.nc() == 1024);
  CHECK(reg.nv() + reg.nf() + reg.ne() - reg.nc() == 0);
  REQUIRE(reg.boundary.size() == 2);
  CHECK(reg.boundary[0].size() == 64);
  CHECK(reg.boundary[1].size() == 64);
  double y0 = 0, y1 = 0;
  for (const BoundaryStep& st : reg.boundary[0]) y0 += reg.corner_pos(st.corner).imag();
  for (const BoundaryStep& st : reg.boundary[1]) y1 += reg.corner_pos(st.corner).imag();
  CHECK(y0 / 64 < y1 / 64);  // bottom cycle first
  CHECK(reg.hausdorff_gap <= 10 * delta);

  const RegionEdge& ed = reg.edges[reg.ne() / 2];
  CHECK(reg.find_edge(ed.e, ed.a1 + 32, ed.a2) == reg.ne() / 2);  // periodic lookup
  CHECK(reg.find_edge(ed.e, ed.a1 - 32, ed.a2) == reg.ne() / 2);

  CHECK_THROWS_AS(extract_region(se, ShapeSpec::halfplane_strip(0.02), 1.0), GateError);
}

TEST_CASE("gates and argument errors") {
  const SEmbedding& se = square_emb();
  CHECK_THROWS_AS(extract_region(se, ShapeSpec::rect(0.41, 0.41, 0.44, 0.44), 1.0), GateError);
  CHECK_THROWS_AS(extract_region(se, ShapeSpec::rect(0, 0, 1, 1), -1.0), ParseError);
}

TEST_CASE("dobrushin arcs on the 2x2 block") {
  const SEmbedding& se = square_emb();
  FiniteRegion reg = block_region(se, 2, 2);
  REQUIRE(reg.ne() == 12);
  REQUIRE(reg.nv() == 9);
  REQUIRE(reg.nf() == 12);
  REQUIRE(reg.boundary.size() == 1);
  CHECK(reg.boundary[0].size() == 16);

  int a = reg.nearest_boundary_corner(cplx(0.1, -0.2));   // wedge (v(0,0), f(.5,-.5))
  int b = reg.nearest_boundary_corner(cplx(2.1, 2.2));    // wedge (v(2,2), f(1.5,2.5))
  BoundaryArcs arcs = mark_dobrushin(reg, a, b);

  REQUIRE(arcs.wired_faces.size() == 4);
  cplx wf[4] = {{0.5, -0.5}, {1.5, -0.5}, {2.5, 0.5}, {2.5, 1.5}};
  for (int i = 0; i < 4; ++i) CHECK(std::abs(reg.fpos(arcs.wired_faces[i]) - wf[i]) < 1e-9);

  REQUIRE(arcs.free_verts.size() == 4);
  cplx fv[4] = {{1, 2}, {0, 2}, {0, 1}, {0, 0}};  // walk order from b, ends at a's vertex
  for (int i = 0; i < 4; ++i) CHECK(std::abs(reg.vpos(arcs.free_verts[i]) - fv[i]) < 1e-9);

  CHECK(count_even(arcs.vert_even) == 4);  // interior (1,1) plus (1,0),(2,0),(2,1)
  int vin = reg.find_vert(0, 1, 1);
  REQUIRE(vin >= 0);
  CHECK(reg.verts[vin].interior);
  CHECK(arcs.vert_even[vin]);
  int vb = reg.find_vert(0, 2, 2);
  CHECK(!arcs.vert_even[vb]);  // junction at b: one wired, one free neighbour
  CHECK(!arcs.vert_free[vb]);
  for (int rv : arcs.free_verts) CHECK(!arcs.vert_even[rv]);

  CHECK_THROWS_AS(mark_dobrushin(reg, a, a), ParseError);
  int inner = -1;  // any two-quad corner is off the boundary walk
  for (int rc = 0; rc < reg.nc() && inner < 0; ++rc)
    if (reg.corners[rc].nquad == 2) inner = rc;
  CHECK_THROWS_AS(mark_dobrushin(reg, inner, a), ParseError);

  BoundaryArcs wired = arcs_all_wired(reg);
  CHECK((int)wired.wired_faces.size() == 8);
  CHECK(count_even(wired.vert_even) == reg.nv());
  BoundaryArcs fr = arcs_all_free(reg);
  CHECK((int)fr.free_verts.size() == 8);
  CHECK(count_even(fr.vert_even) == 1);
}

TEST_CASE("single quad cover flips sign once around") {
  const SEmbedding& se = square_emb();
  FiniteRegion reg = extract_region(se, ShapeSpec::rect(0.3, -0.2, 0.7, 0.2), 1.0);
  REQUIRE(reg.ne() == 1);
  REQUIRE(reg.nc() == 4);
  RegionCover cov = build_region_cover(reg, {}, {});
  CHECK(cov.leg[0][0] * cov.leg[0][1] * cov.leg[0][2] * cov.leg[0][3] == -1);
  check_region_cover(reg, cov, 25, 7);
}

TEST_CASE("plain cover on the 2x2 block branches only over the listed cells") {
  const SEmbedding& se = square_emb();
  FiniteRegion reg = block_region(se, 2, 2);
  int rv = reg.find_vert(0, 1, 1);
  int rf = reg.find_face(0, 0, 0);
  REQUIRE(rv >= 0);
  REQUIRE(rf >= 0);
  REQUIRE(reg.faces[rf].interior);
  RegionCover cov = build_region_cover(reg, {rv}, {rf}, false);
  CHECK(!cov.branch_quads);
  check_region_cover(reg, cov, 100, 11);

  // every quad closes with +1 in plain mode
  for (int re = 0; re < reg.ne(); ++re)
    CHECK(cov.leg[re][0] * cov.leg[re][1] * cov.leg[re][2] * cov.leg[re][3] == 1);
}

TEST_CASE("branched cover and spinor section on the 3x3 block") {
  const SEmbedding& se = square_emb();
  FiniteRegion reg = block_region(se, 3, 3);
  RegionCover cov = build_region_cover(reg, {}, {});
  check_region_cover(reg, cov, 100, 3);
  CHECK(cov.sheet_sign[cov.root] == 1);

  std::vector<cplx> W = region_corner_spinor(reg, cov);  // throws if rows fail
  REQUIRE((int)W.size() == reg.nc());
  for (int rc = 0; rc < reg.nc(); ++rc) {
    CHECK(std::abs(W[rc] * W[rc] - reg.corner_sq(rc)) < 1e-12);
    CHECK(std::abs(W[rc]) > 1e-6);
  }
}

TEST_CASE("branched cover and spinor on a hex disk") {
  const SEmbedding& se = hex_emb();
  FiniteRegion reg = extract_region(se, ShapeSpec::disk(0.0, 0.3, 0.4), 1.0 / 8);
  REQUIRE(reg.simply_connected);
  RegionCover cov = build_region_cover(reg, {}, {});
  check_region_cover(reg, cov, 100, 5);
  std::vector<cplx> W = region_corner_spinor(reg, cov);
  for (int rc = 0; rc < reg.nc(); ++rc)
    CHECK(std::abs(W[rc] * W[rc] - reg.corner_sq(rc)) < 1e-12);
}
