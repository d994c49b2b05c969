#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <complex>

#include "doctest.h"
#include "ising/s_embedding.hpp"
#include "test_helpers.hpp"

using namespace ising;

static const double PI = 3.14159265358979323846;
static const double RT2 = std::sqrt(2.0);

TEST_CASE("square embedding is the unit grid") {
  auto se = build_s_embedding(make_builtin("square"));
  CHECK(se.L1.real() == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(se.L1.imag() == doctest::Approx(0.0).epsilon(1e-10));
  CHECK(se.L2.real() == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(se.L2.imag() == doctest::Approx(1.0).epsilon(1e-9));
  for (auto& x : se.X) CHECK(std::norm(x) == doctest::Approx(RT2 / 2).epsilon(1e-9));
  CHECK(std::abs(se.Sv[0] - se.Sf[0]) == doctest::Approx(RT2 / 2).epsilon(1e-9));
  for (int e = 0; e < 2; ++e) {
    CHECK(se.rz[e] == doctest::Approx(RT2 / 4).epsilon(1e-9));
    CHECK(recover_theta(se, e) == doctest::Approx(PI / 4).epsilon(1e-9));
  }
  auto un = check_unif(se);
  CHECK(un.r_min == doctest::Approx(RT2 / 4).epsilon(1e-9));
  CHECK(un.r_max == doctest::Approx(RT2 / 4).epsilon(1e-9));
  CHECK(un.theta_min == doctest::Approx(PI / 4).epsilon(1e-9));
  check_properness(se);

  // increment identities hold with the exported values
  for (int c = 0; c < se.lat.nc(); ++c) {
    const Corner& co = se.lat.corners[c];
    cplx lhs = se.S_vertex(co.v, 0, 0) - se.S_face(co.f, co.fs1, co.fs2);
    CHECK(std::abs(lhs - se.X[c] * se.X[c]) < 1e-10);
    double qlhs = se.Qv[co.v] - se.Qf[co.f];
    CHECK(qlhs == doctest::Approx(std::norm(se.X[c])).epsilon(1e-9));
  }
}

TEST_CASE("only one sector carries the kernel") {
  auto L = make_builtin("square");
  auto dc = build_double_cover(L);
  auto sc = scan_sectors(L, dc);
  int with_kernel = 0;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) {
      if (sc.kernel_dim[i][j] == 2) ++with_kernel;
      if (sc.kernel_dim[i][j] == 0) CHECK(sc.min_sv[i][j] > 1e-6);
    }
  CHECK(with_kernel == 1);
  CHECK(sc.s1 != 0);
}

TEST_CASE("hex embedding is the regular honeycomb") {
  auto se = build_s_embedding(make_builtin("hex"));
  CHECK(std::abs(se.L1 - cplx(1, 0)) < 1e-9);
  CHECK(std::abs(se.L2 - cplx(0.5, 0.5 * std::sqrt(3.0))) < 1e-8);
  // all tangential-quad sides are vertex-to-hex-center segments of length 3^{-1/2}
  for (auto& x : se.X)
    CHECK(std::norm(x) == doctest::Approx(1.0 / std::sqrt(3.0)).epsilon(1e-8));
  CHECK(std::abs(se.Sv[0] - se.Sv[1]) == doctest::Approx(1.0 / std::sqrt(3.0)).epsilon(1e-8));
  for (int e = 0; e < 3; ++e) {
    CHECK(se.rz[e] == doctest::Approx(0.25).epsilon(1e-8));
    CHECK(recover_theta(se, e) == doctest::Approx(PI / 3).epsilon(1e-9));
  }
  check_properness(se);
  auto un = check_unif(se);
  CHECK(un.theta_min == doctest::Approx(PI / 6).epsilon(1e-8));
}

TEST_CASE("brick-asym embedding is proper with exact angle recovery") {
  auto L = make_builtin("brick-asym");
  auto se = build_s_embedding(L);
  check_properness(se);
  for (int e = 0; e < L.ne(); ++e)
    CHECK(recover_theta(se, e) == doctest::Approx(L.quads[e].theta).epsilon(1e-9));
  auto un = check_unif(se);
  CHECK(un.r_min > 0);
  CHECK(un.r_max / un.r_min < 10.0);
  CHECK(std::abs(se.q1) + std::abs(se.q2) < 1e-9);
}

TEST_CASE("multi-cell domain reproduces the one-cell embedding") {
  auto se = build_s_embedding(square_block(2, RT2 - 1));
  CHECK(std::abs(se.L1) == doctest::Approx(2.0).epsilon(1e-9));
  for (int e = 0; e < se.lat.ne(); ++e) {
    CHECK(se.rz[e] == doctest::Approx(RT2 / 4).epsilon(1e-8));
    CHECK(recover_theta(se, e) == doctest::Approx(PI / 4).epsilon(1e-8));
  }
  check_properness(se);
}

TEST_CASE("off-critical lattices are rejected") {
  CHECK_THROWS_AS(build_s_embedding(make_builtin("square", 0.3)), GateError);
  CHECK_THROWS_AS(build_s_embedding(make_builtin("hex", 0.4)), GateError);
}
