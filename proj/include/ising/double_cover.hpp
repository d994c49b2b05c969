#pragma once
// Sign structure on the corner graph. Corners of each quad form a 4-cycle
// (c00-c10-c11-c01); spinor observables live on the double cover where the
// monodromy around every quad, every vertex corner-cycle, and every face
// corner-cycle equals -1. The signs eps are one GF(2) solution of those
// constraints; the leftover freedom on the torus is the pair of period signs,
// which callers scan explicitly.

#include <array>
#include <cstdint>
#include <vector>

#include "ising/lattice.hpp"

namespace ising {

struct UpsilonEdge {
  int c0 = -1, c1 = -1;  // corner ids
  int quad = -1, leg = -1;
  int ds1 = 0, ds2 = 0;  // cell of c1 minus cell of c0
  int kind = 0;          // 0 = along a face side, 1 = around a vertex
};

struct DoubleCover {
  std::vector<UpsilonEdge> uedges;  // 4 per quad: legs (c00,c10),(c10,c11),(c11,c01),(c01,c00)
  std::vector<uint8_t> eps;         // sign bit per uedge; sign = (-1)^eps

  int eta(int q, int leg) const { return eps[4 * q + leg] ? -1 : 1; }
  // cumulative corner signs (s00, s10, s11, s01) inside quad q's canonical lift;
  // the closing leg then carries the extra -1.
  std::array<int, 4> quad_signs(int q) const {
    int e0 = eta(q, 0), e1 = eta(q, 1), e2 = eta(q, 2);
    return {1, e0, e0 * e1, e0 * e1 * e2};
  }
};

DoubleCover build_double_cover(const PeriodicLattice& lat);

// Recomputes all three constraint families from eps; throws InvariantError.
void check_monodromy(const PeriodicLattice& lat, const DoubleCover& dc);

}  // namespace ising
