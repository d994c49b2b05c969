#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"
#include "ising/double_cover.hpp"
#include "test_helpers.hpp"

using namespace ising;

TEST_CASE("sign structure exists and is deterministic") {
  for (const char* name : {"square", "hex", "brick-asym"}) {
    auto L = make_builtin(name);
    auto dc = build_double_cover(L);
    check_monodromy(L, dc);  // also run explicitly
    CHECK((int)dc.eps.size() == 4 * L.ne());
    auto dc2 = build_double_cover(L);
    CHECK(dc.eps == dc2.eps);
    for (int e = 0; e < L.ne(); ++e) {
      auto s = dc.quad_signs(e);
      CHECK(s[0] == 1);
      // closing leg carries the extra -1
      CHECK(s[3] * dc.eta(e, 3) == -1);
    }
  }
}

TEST_CASE("sign structure on multi-cell domains") {
  for (int n : {2, 3}) {
    auto L = square_block(n, 0.4);
    auto dc = build_double_cover(L);
    check_monodromy(L, dc);
  }
}
