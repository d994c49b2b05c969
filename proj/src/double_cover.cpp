#include "ising/double_cover.hpp"

#include <string>

namespace ising {

namespace {

// dense GF(2) solver, rows carry rhs in the last bit
struct Gf2System {
  int nvars;
  int words;
  std::vector<std::vector<uint64_t>> rows;

  explicit Gf2System(int n) : nvars(n), words((n + 1 + 63) / 64) {}
  void add_equation(const std::vector<int>& vars, int rhs) {
    std::vector<uint64_t> r(words, 0);
    for (int v : vars) r[v >> 6] ^= 1ull << (v & 63);
    if (rhs) r[nvars >> 6] ^= 1ull << (nvars & 63);
    rows.push_back(std::move(r));
  }
  // Gauss-Jordan; returns one solution with free variables zero.
  std::vector<uint8_t> solve() {
    int nr = (int)rows.size(), rank = 0;
    std::vector<int> pivot_col;
    for (int col = 0; col < nvars && rank < nr; ++col) {
      int sel = -1;
      for (int r = rank; r < nr; ++r)
        if (rows[r][col >> 6] >> (col & 63) & 1) { sel = r; break; }
      if (sel < 0) continue;
      std::swap(rows[rank], rows[sel]);
      for (int r = 0; r < nr; ++r)
        if (r != rank && (rows[r][col >> 6] >> (col & 63) & 1))
          for (int w = 0; w < words; ++w) rows[r][w] ^= rows[rank][w];
      pivot_col.push_back(col);
      ++rank;
    }
    for (int r = rank; r < nr; ++r)
      if (rows[r][nvars >> 6] >> (nvars & 63) & 1)
        throw InvariantError("sign structure constraints are inconsistent");
    std::vector<uint8_t> x(nvars, 0);
    for (int r = 0; r < rank; ++r)
      x[pivot_col[r]] = rows[r][nvars >> 6] >> (nvars & 63) & 1;
    return x;
  }
};

}  // namespace

DoubleCover build_double_cover(const PeriodicLattice& lat) {
  const int E = lat.ne();
  DoubleCover dc;
  dc.uedges.resize(4 * E);
  for (int e = 0; e < E; ++e) {
    const Quad& q = lat.quads[e];
    int s1 = lat.edges[e].s1, s2 = lat.edges[e].s2;
    dc.uedges[4 * e + 0] = {q.c00, q.c10, e, 0, s1, s2, 0};
    dc.uedges[4 * e + 1] = {q.c10, q.c11, e, 1, 0, 0, 1};
    dc.uedges[4 * e + 2] = {q.c11, q.c01, e, 2, -s1, -s2, 0};
    dc.uedges[4 * e + 3] = {q.c01, q.c00, e, 3, 0, 0, 1};
  }

  Gf2System sys(4 * E);
  for (int e = 0; e < E; ++e)
    sys.add_equation({4 * e + 0, 4 * e + 1, 4 * e + 2, 4 * e + 3}, 1);
  for (int v = 0; v < lat.nv(); ++v) {
    std::vector<int> vars;
    for (DirRef d : lat.rot[v]) vars.push_back(4 * d.e + (d.end == 0 ? 3 : 1));
    sys.add_equation(vars, 1);
  }
  for (int f = 0; f < lat.nf(); ++f) {
    std::vector<int> vars;
    for (DirRef d : lat.face_walk[f]) vars.push_back(4 * d.e + (d.end == 0 ? 2 : 0));
    sys.add_equation(vars, 1);
  }
  dc.eps = sys.solve();
  check_monodromy(lat, dc);
  return dc;
}

void check_monodromy(const PeriodicLattice& lat, const DoubleCover& dc) {
  for (int e = 0; e < lat.ne(); ++e) {
    int p = dc.eta(e, 0) * dc.eta(e, 1) * dc.eta(e, 2) * dc.eta(e, 3);
    if (p != -1) throw InvariantError("quad monodromy != -1 at edge " + std::to_string(e));
  }
  for (int v = 0; v < lat.nv(); ++v) {
    int p = 1;
    for (DirRef d : lat.rot[v]) p *= dc.eta(d.e, d.end == 0 ? 3 : 1);
    if (p != -1) throw InvariantError("vertex monodromy != -1 at vertex " + std::to_string(v));
  }
  for (int f = 0; f < lat.nf(); ++f) {
    int p = 1;
    for (DirRef d : lat.face_walk[f]) p *= dc.eta(d.e, d.end == 0 ? 2 : 0);
    if (p != -1) throw InvariantError("face monodromy != -1 at face " + std::to_string(f));
  }
}

}  // namespace ising
