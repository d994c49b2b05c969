#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <algorithm>
#include <cmath>
#include <vector>

#include "doctest.h"
#include "ising/criticality.hpp"
#include "test_helpers.hpp"

using namespace ising;

// Frozen closed forms for the one-cell domains:
//   square  defect(x) = 1 - 2x - x^2      root sqrt(2)-1
//   hex     defect(x) = 1 - 3x^2          root 1/sqrt(3)
//   brick   defect(t) = 1 - 2t^2          root 1/sqrt(2)  (weights t,t,t/2)
//   tri     defect(x) = 1 - 3x - 3x^2 + x^3   root 2-sqrt(3)

TEST_CASE("square one-cell homology sums") {
  double x = 0.2;
  auto L = make_builtin("square", x);
  auto hs = homology_sums(L);
  CHECK(hs.s[0][0] == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(hs.s[1][0] == doctest::Approx(x).epsilon(1e-15));
  CHECK(hs.s[0][1] == doctest::Approx(x).epsilon(1e-15));
  CHECK(hs.s[1][1] == doctest::Approx(x * x).epsilon(1e-15));
  CHECK(hs.defect() == doctest::Approx(0.56).epsilon(1e-14));

  int count = 0;
  std::vector<uint32_t> masks;
  enumerate_even_subgraphs(L, [&](const EvenSubgraph& s) {
    ++count;
    masks.push_back(s.mask);
  });
  CHECK(count == 4);  // 2^(E-V+1)
  std::sort(masks.begin(), masks.end());
  CHECK(masks == std::vector<uint32_t>{0, 1, 2, 3});
}

TEST_CASE("defect closed forms") {
  CHECK(criticality_defect(make_builtin("square", 0.35)) ==
        doctest::Approx(1 - 2 * 0.35 - 0.35 * 0.35).epsilon(1e-14));
  CHECK(criticality_defect(make_builtin("hex", 0.4)) == doctest::Approx(0.52).epsilon(1e-14));
  CHECK(criticality_defect(make_builtin("brick-asym", 0.5)) ==
        doctest::Approx(0.5).epsilon(1e-14));
}

TEST_CASE("builtin critical points vanish") {
  CHECK(std::abs(criticality_defect(make_builtin("square"))) < 1e-12);
  CHECK(std::abs(criticality_defect(make_builtin("hex"))) < 1e-12);
  CHECK(std::abs(criticality_defect(make_builtin("brick-asym"))) < 1e-12);
}

TEST_CASE("bisection recovers critical points") {
  double t = solve_critical_point(make_builtin("square", 0.5), 0.2, 1.8);
  CHECK(std::abs(0.5 * t - (std::sqrt(2.0) - 1.0)) < 1e-10);
  t = solve_critical_point(make_builtin("hex", 0.5), 0.2, 1.9);
  CHECK(std::abs(0.5 * t - 1.0 / std::sqrt(3.0)) < 1e-10);
  t = solve_critical_point(make_builtin("brick-asym", 0.5), 0.2, 1.9);
  CHECK(std::abs(0.5 * t - 1.0 / std::sqrt(2.0)) < 1e-10);
}

TEST_CASE("phase labels") {
  CHECK(classify_phase(make_builtin("square", 0.2)).phase == "ferromagnetic");
  CHECK(classify_phase(make_builtin("square", 0.6)).phase == "paramagnetic");
  CHECK(classify_phase(make_builtin("square")).phase == "critical");
}

TEST_CASE("defect derivative matches closed form and finite differences") {
  auto L = make_builtin("square", 0.35);
  L.set_weight(1, 0.25);
  // defect = 1 - x0 - x1 - x0 x1, d/dx0 = -1 - x1
  CHECK(criticality_defect_dx(L, 0) == doctest::Approx(-1.25).epsilon(1e-13));
  CHECK(criticality_defect_dx(L, 1) == doctest::Approx(-1.35).epsilon(1e-13));
  double h = 1e-6;
  auto Lp = L, Lm = L;
  Lp.set_weight(0, 0.35 + h);
  Lm.set_weight(0, 0.35 - h);
  double fd = (criticality_defect(Lp) - criticality_defect(Lm)) / (2 * h);
  CHECK(criticality_defect_dx(L, 0) == doctest::Approx(fd).epsilon(1e-8));
}

TEST_CASE("kramers-wannier dual") {
  // square is self-dual: dual of critical square is critical
  auto S = kramers_wannier_dual(make_builtin("square"));
  CHECK(S.nv() == 1);
  CHECK(S.ne() == 2);
  CHECK(std::abs(criticality_defect(S)) < 1e-12);

  // dual of square at x=0.2 has weight 2/3 and the opposite phase
  auto S2 = kramers_wannier_dual(make_builtin("square", 0.2));
  CHECK(S2.weight(0) == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
  CHECK(classify_phase(S2).phase == "paramagnetic");

  // dual of hex is triangular: defect(x) = 1 - 3x - 3x^2 + x^3
  auto T = kramers_wannier_dual(make_builtin("hex", 2.0 / 3.0));
  CHECK(T.nv() == 1);
  CHECK(T.nf() == 2);
  CHECK(T.ne() == 3);
  CHECK(T.weight(0) == doctest::Approx(0.2).epsilon(1e-14));
  CHECK(criticality_defect(T) == doctest::Approx(0.288).epsilon(1e-12));
  auto Tc = kramers_wannier_dual(make_builtin("hex"));  // critical maps to critical
  CHECK(Tc.weight(0) == doctest::Approx(2.0 - std::sqrt(3.0)).epsilon(1e-14));
  CHECK(std::abs(criticality_defect(Tc)) < 1e-12);

  // double dual restores the defect
  auto DD = kramers_wannier_dual(kramers_wannier_dual(make_builtin("brick-asym", 0.6)));
  CHECK(criticality_defect(DD) ==
        doctest::Approx(criticality_defect(make_builtin("brick-asym", 0.6))).epsilon(1e-13));
}

TEST_CASE("criticality is a property of the infinite graph, not the cell") {
  // enlarging the fundamental domain of the same lattice keeps the sign and root
  auto B2 = square_block(2, std::sqrt(2.0) - 1.0);
  auto B3 = square_block(3, std::sqrt(2.0) - 1.0);
  CHECK(std::abs(criticality_defect(B2)) < 1e-10);
  CHECK(std::abs(criticality_defect(B3)) < 1e-10);
  CHECK(classify_phase(square_block(3, 0.2)).phase == "ferromagnetic");
  CHECK(classify_phase(square_block(3, 0.6)).phase == "paramagnetic");
  double t = solve_critical_point(square_block(2, 0.5), 0.2, 1.8);
  CHECK(std::abs(0.5 * t - (std::sqrt(2.0) - 1.0)) < 1e-10);
}

TEST_CASE("threaded scan agrees with serial") {
  auto L = square_block(3, 0.37);
  auto a = homology_sums(L, 28, 1);
  auto b = homology_sums(L, 28, 4);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) CHECK(a.s[i][j] == doctest::Approx(b.s[i][j]).epsilon(1e-14));
}

TEST_CASE("edge budget gate") {
  CHECK_THROWS_AS(homology_sums(make_builtin("hex"), 2), GateError);
}
