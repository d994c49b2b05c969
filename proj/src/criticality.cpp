#include "ising/criticality.hpp"

#include <bit>
#include <cmath>
#include <thread>
#include <vector>

namespace ising {

namespace {

// Edges grouped by weight value so that x(C) is a short product of exact
// powers (no drift from incremental multiply/divide).
struct WeightClasses {
  std::vector<double> value;
  std::vector<uint32_t> mask;                // members of each class
  std::vector<std::vector<double>> powtab;   // value^k, k = 0..popcount(mask)
  std::vector<int> cls_of;                   // edge -> class

  explicit WeightClasses(const PeriodicLattice& lat) {
    int E = lat.ne();
    cls_of.assign(E, -1);
    for (int e = 0; e < E; ++e) {
      double w = lat.weight(e);
      int k = -1;
      for (int i = 0; i < (int)value.size(); ++i)
        if (value[i] == w) { k = i; break; }
      if (k < 0) {
        k = (int)value.size();
        value.push_back(w);
        mask.push_back(0);
      }
      cls_of[e] = k;
      mask[k] |= 1u << e;
    }
    for (int i = 0; i < (int)value.size(); ++i) {
      int n = std::popcount(mask[i]);
      std::vector<double> p(n + 1, 1.0);
      for (int k = 1; k <= n; ++k) p[k] = p[k - 1] * value[i];
      powtab.push_back(std::move(p));
    }
  }
};

struct GrayState {
  uint32_t mask = 0;
  int odd = 0;       // vertices with odd degree
  int w1 = 0, w2 = 0;
  std::vector<int> vpar;   // degree parity per vertex
  std::vector<int> ncls;   // members per weight class

  void seed(const PeriodicLattice& lat, const WeightClasses& wc, uint32_t m) {
    mask = 0;
    vpar.assign(lat.nv(), 0);
    ncls.assign(wc.value.size(), 0);
    odd = w1 = w2 = 0;
    for (int e = 0; e < lat.ne(); ++e)
      if (m >> e & 1) flip(lat, wc, e);
  }
  void flip(const PeriodicLattice& lat, const WeightClasses& wc, int e) {
    const EdgeSpec& ed = lat.edges[e];
    mask ^= 1u << e;
    int sgn = mask >> e & 1 ? 1 : -1;
    if (ed.v0 != ed.v1) {
      odd += (vpar[ed.v0] ^= 1) ? 1 : -1;
      odd += (vpar[ed.v1] ^= 1) ? 1 : -1;
    }
    w1 ^= ed.s1 & 1;
    w2 ^= ed.s2 & 1;
    ncls[wc.cls_of[e]] += sgn;
  }
  double weight(const WeightClasses& wc) const {
    double x = 1.0;
    for (int i = 0; i < (int)ncls.size(); ++i) x *= wc.powtab[i][ncls[i]];
    return x;
  }
};

void gate_edges(const PeriodicLattice& lat, int max_edges) {
  if (max_edges > 30) max_edges = 30;
  if (lat.ne() > max_edges)
    throw GateError("even-subgraph enumeration gated at " + std::to_string(max_edges) +
                    " edges, domain has " + std::to_string(lat.ne()));
}

// Walk gray codes of [lo, hi) and hand every even subgraph to sink.
template <class Sink>
void scan_range(const PeriodicLattice& lat, const WeightClasses& wc, uint64_t lo, uint64_t hi,
                Sink&& sink) {
  GrayState st;
  st.seed(lat, wc, (uint32_t)(lo ^ (lo >> 1)));
  for (uint64_t i = lo; i < hi; ++i) {
    if (st.odd == 0) sink(st);
    uint64_t j = i + 1;
    if (j < hi) st.flip(lat, wc, std::countr_zero(j));
  }
}

}  // namespace

HomologySums homology_sums(const PeriodicLattice& lat, int max_edges, int threads) {
  gate_edges(lat, max_edges);
  const uint64_t total = 1ull << lat.ne();
  WeightClasses wc(lat);
  int T = threads;
  if (T < 1) T = 1;
  if ((uint64_t)T > total / 1024 + 1) T = (int)(total / 1024 + 1);
  std::vector<std::array<std::array<KahanSum, 2>, 2>> acc(T);
  auto work = [&](int t) {
    uint64_t lo = total / T * t + std::min<uint64_t>(total % T, t);
    uint64_t hi = lo + total / T + (t < (int)(total % T) ? 1 : 0);
    scan_range(lat, wc, lo, hi,
               [&](const GrayState& st) { acc[t][st.w1][st.w2].add(st.weight(wc)); });
  };
  if (T == 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < T; ++t) pool.emplace_back(work, t);
    for (auto& th : pool) th.join();
  }
  HomologySums hs;
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b) {
      KahanSum k;
      for (int t = 0; t < T; ++t) k.add(acc[t][a][b].value());
      hs.s[a][b] = k.value();
    }
  return hs;
}

double criticality_defect(const PeriodicLattice& lat, int max_edges, int threads) {
  return homology_sums(lat, max_edges, threads).defect();
}

double criticality_defect_dx(const PeriodicLattice& lat, int e, int max_edges) {
  gate_edges(lat, max_edges);
  WeightClasses wc(lat);
  KahanSum acc[2][2];
  scan_range(lat, wc, 0, 1ull << lat.ne(), [&](const GrayState& st) {
    if (st.mask >> e & 1) acc[st.w1][st.w2].add(st.weight(wc));
  });
  double through = acc[0][0].value() - acc[1][0].value() - acc[0][1].value() - acc[1][1].value();
  return through / lat.weight(e);
}

CriticalityReport classify_phase(const PeriodicLattice& lat, double tol, int max_edges) {
  CriticalityReport r;
  r.defect = criticality_defect(lat, max_edges);
  r.tol = tol;
  if (std::abs(r.defect) <= tol)
    r.phase = "critical";
  else if (r.defect > 0)
    r.phase = "ferromagnetic";
  else
    r.phase = "paramagnetic";
  return r;
}

double solve_critical_point(const PeriodicLattice& base, double t_lo, double t_hi, double tol,
                            int max_edges) {
  gate_edges(base, max_edges);
  PeriodicLattice L = base;
  auto defect_at = [&](double t) {
    for (int e = 0; e < L.ne(); ++e) L.set_weight(e, t * base.weight(e));
    return criticality_defect(L, max_edges);
  };
  double flo = defect_at(t_lo), fhi = defect_at(t_hi);
  if (flo == 0) return t_lo;
  if (fhi == 0) return t_hi;
  if ((flo > 0) == (fhi > 0))
    throw InvariantError("critical point bracket has no sign change");
  while (t_hi - t_lo > tol) {
    double tm = 0.5 * (t_lo + t_hi);
    if (tm <= t_lo || tm >= t_hi) break;
    double fm = defect_at(tm);
    if (fm == 0) return tm;
    if ((fm > 0) == (flo > 0)) {
      t_lo = tm;
      flo = fm;
    } else {
      t_hi = tm;
    }
  }
  return 0.5 * (t_lo + t_hi);
}

PeriodicLattice kramers_wannier_dual(const PeriodicLattice& lat) {
  PeriodicLattice D;
  D.vpos = lat.fpos;
  D.fpos = lat.vpos;
  D.per1 = lat.per1;
  D.per2 = lat.per2;
  D.edges.resize(lat.ne());
  for (int e = 0; e < lat.ne(); ++e) {
    const EdgeSpec& ed = lat.edges[e];
    EdgeSpec de;
    // dual edge crosses e from its right face to its left face
    de.v0 = ed.f_right;
    de.v1 = ed.f_left;
    de.s1 = lat.lshift[e][0] - lat.rshift[e][0];
    de.s2 = lat.lshift[e][1] - lat.rshift[e][1];
    de.f_left = ed.v0;
    de.f_right = ed.v1;
    de.weight = dual_weight(ed.weight);
    D.edges[e] = de;
  }
  // ccw dual rotation around face f = order of crossings along the face walk
  D.rot.assign(lat.nf(), {});
  for (int f = 0; f < lat.nf(); ++f)
    for (DirRef d : lat.face_walk[f]) D.rot[f].push_back({d.e, d.end == 0 ? 1 : 0});
  D.finalize();
  return D;
}

void enumerate_even_subgraphs(const PeriodicLattice& lat,
                              const std::function<void(const EvenSubgraph&)>& cb, int max_edges) {
  gate_edges(lat, max_edges);
  WeightClasses wc(lat);
  scan_range(lat, wc, 0, 1ull << lat.ne(), [&](const GrayState& st) {
    cb({st.mask, st.w1, st.w2, st.weight(wc)});
  });
}

}  // namespace ising
