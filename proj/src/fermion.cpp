// Exact Kadanoff-Ceva observables via Gray-code even-subgraph enumeration.
// Weights stay exact through a split-product scheme (low-bit table times a
// refreshed high-bit product), sums are compensated, and the observable's
// corner signs are glued through the quad-branched double cover.

#include "ising/fermion.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>

#include "ising/util.hpp"

namespace ising {

namespace {

const cplx kI(0, 1);
const cplx kVS = std::polar(1.0, M_PI / 4);  // varsigma

void gate_budget(const FiniteRegion& reg) {
  if (reg.ne() > 26) throw GateError("enumeration budget: more than 26 edges");
  if (reg.nv() > 64) throw GateError("enumeration budget: more than 64 vertices");
}

uint64_t even_mask(const FiniteRegion& reg, const BoundaryArcs& bc) {
  uint64_t m = 0;
  for (int rv = 0; rv < reg.nv(); ++rv)
    if (bc.vert_even[rv]) m |= 1ull << rv;
  return m;
}

// signed even-subgraph sum: target = required odd-vertex set (within the
// constrained mask), gmask = dual defect path as an edge set
struct Job {
  uint64_t target = 0;
  uint32_t gmask = 0;
};

struct EnumResult {
  double Z = 0;
  std::vector<double> S;
};

EnumResult enumerate_sums(const FiniteRegion& reg, uint64_t vc, const std::vector<Job>& jobs) {
  gate_budget(reg);
  int ne = reg.ne();
  std::vector<double> x(ne);
  std::vector<uint64_t> epar(ne);
  for (int re = 0; re < ne; ++re) {
    x[re] = reg.edges[re].x;
    epar[re] = (1ull << reg.edges[re].v0) | (1ull << reg.edges[re].v1);
  }
  // dispatch lists by target size; popcount(target) > 2 never occurs here
  std::vector<std::pair<uint32_t, int>> j0;
  std::vector<std::vector<std::pair<uint32_t, int>>> j1(reg.nv());
  std::vector<std::pair<uint64_t, int>> j2;
  for (int i = 0; i < (int)jobs.size(); ++i) {
    uint64_t t = jobs[i].target;
    int pc = __builtin_popcountll(t);
    if (pc == 0)
      j0.push_back({jobs[i].gmask, i});
    else if (pc == 1)
      j1[__builtin_ctzll(t)].push_back({jobs[i].gmask, i});
    else
      j2.push_back({t, i});
  }
  // weight = wlo table (low bits, exact) * whi (refreshed when high bits flip)
  int lowb = std::min(ne, 8);
  std::vector<double> wlo(size_t{1} << lowb, 1.0);
  for (uint32_t m = 1; m < wlo.size(); ++m) {
    int b = __builtin_ctz(m);
    wlo[m] = wlo[m ^ (1u << b)] * x[b];
  }
  uint32_t lmask = (uint32_t)wlo.size() - 1;
  KahanSum Z;
  std::vector<KahanSum> S(jobs.size());
  uint32_t C = 0;
  uint64_t odd = 0;
  double whi = 1.0;
  auto visit = [&](void) {
    uint64_t wv = odd & vc;
    double w = whi * wlo[C & lmask];
    if (wv == 0) {
      Z.add(w);
      for (const auto& [gm, i] : j0) S[i].add((__builtin_popcount(C & gm) & 1) ? -w : w);
    } else if ((wv & (wv - 1)) == 0) {
      for (const auto& [gm, i] : j1[__builtin_ctzll(wv)])
        S[i].add((__builtin_popcount(C & gm) & 1) ? -w : w);
    } else {
      for (const auto& [t, i] : j2)
        if (wv == t) S[i].add(w);
    }
  };
  visit();
  for (uint64_t it = 1; it < (uint64_t{1} << ne); ++it) {
    int b = __builtin_ctzll(it);
    C ^= 1u << b;
    odd ^= epar[b];
    if (b >= lowb) {
      whi = 1.0;
      for (int re = lowb; re < ne; ++re)
        if (C >> re & 1) whi *= x[re];
    }
    visit();
  }
  EnumResult out;
  out.Z = Z.value();
  out.S.resize(jobs.size());
  for (size_t i = 0; i < jobs.size(); ++i) out.S[i] = S[i].value();
  return out;
}

// spanning tree of the dual (face) graph; pmask = root-path edge sets
struct DualTree {
  std::vector<int> parent_face, parent_edge;
  std::vector<uint32_t> pmask;
};

DualTree build_dual_tree(const FiniteRegion& reg, int root, bool reverse_scan) {
  int nf = reg.nf(), ne = reg.ne();
  DualTree t;
  t.parent_face.assign(nf, -2);
  t.parent_edge.assign(nf, -1);
  t.pmask.assign(nf, 0);
  t.parent_face[root] = -1;
  std::vector<int> order = {root};
  for (size_t h = 0; h < order.size(); ++h) {
    int f = order[h];
    for (int k = 0; k < ne; ++k) {
      int re = reverse_scan ? ne - 1 - k : k;
      const RegionEdge& E = reg.edges[re];
      int g = E.fl == f ? E.fr : (E.fr == f ? E.fl : -1);
      if (g < 0 || t.parent_face[g] != -2) continue;
      t.parent_face[g] = f;
      t.parent_edge[g] = re;
      t.pmask[g] = t.pmask[f] | (1u << re);
      order.push_back(g);
    }
  }
  for (int f = 0; f < nf; ++f)
    if (t.parent_face[f] == -2) throw InvariantError("dual graph is disconnected");
  return t;
}

// Dressing signs of one quad: s if the defect path to the root crosses the
// quad itself, rho_p if the closed defect loop fr -> root -> fl winds oddly
// around endpoint v_p. Any other oddly-wound vertex must be constrained.
void quad_dress(const FiniteRegion& reg, const DualTree& tree, uint64_t vc, int re, double* s,
                double* r0, double* r1) {
  const RegionEdge& E = reg.edges[re];
  std::vector<cplx> poly;
  for (int f = E.fr; f != -1; f = tree.parent_face[f]) poly.push_back(reg.fpos(f));
  std::vector<cplx> up;
  for (int f = E.fl; f != -1; f = tree.parent_face[f]) up.push_back(reg.fpos(f));
  poly.insert(poly.end(), up.rbegin(), up.rend());
  *s = (tree.pmask[E.fr] >> re & 1) ? -1.0 : 1.0;
  *r0 = *r1 = 1.0;
  int n = (int)poly.size();
  for (int rv = 0; rv < reg.nv(); ++rv) {
    cplx p = reg.vpos(rv);
    double ang = 0;
    for (int k = 0; k < n; ++k) {
      cplx u = poly[k] - p, w = poly[(k + 1) % n] - p;
      if (std::abs(u - w) < 1e-15) continue;
      ang += std::arg(w / u);
    }
    double wind = ang / (2 * M_PI);
    long wi = std::lround(wind);
    if (std::abs(wind - wi) > 0.01) throw InvariantError("defect loop winding not integral");
    if (wi & 1) {
      if (rv == E.v0)
        *r0 = -1.0;
      else if (rv == E.v1)
        *r1 = -1.0;
      else if (!(vc >> rv & 1))
        throw InvariantError("defect loop encloses an unconstrained vertex");
    }
  }
}

// glue per-quad dressed tuples into section signs over the cover; values
// below tol0 impose no constraint and default to +1
std::vector<int> assemble_section(const FiniteRegion& reg, const RegionCover& cov,
                                  const std::vector<std::array<double, 4>>& V, double tol0) {
  int nc = reg.nc(), ne = reg.ne();
  std::vector<int> sig(nc, 0), lam(ne, 0);
  auto cum_of = [&](int q, int8_t* cum) {
    cum[0] = 1;
    for (int i = 1; i < 4; ++i) cum[i] = cum[i - 1] * cov.eta(q, i - 1);
  };
  std::vector<int> stack;
  for (int q0 = 0; q0 < ne; ++q0) {
    if (lam[q0]) continue;
    lam[q0] = 1;
    stack.assign(1, q0);
    while (!stack.empty()) {
      int q = stack.back();
      stack.pop_back();
      const auto& qc = reg.quad_corner[q];
      int8_t cum[4];
      cum_of(q, cum);
      for (int i = 0; i < 4; ++i) {
        if (std::abs(V[q][i]) <= tol0) continue;
        int want = lam[q] * (V[q][i] > 0 ? 1 : -1) * cum[i];
        int rc = qc[i];
        if (sig[rc] == 0) {
          sig[rc] = want;
          for (int k = 0; k < reg.corners[rc].nquad; ++k) {
            int q2 = reg.corners[rc].quad[k];
            if (q2 == q || lam[q2]) continue;
            const auto& qc2 = reg.quad_corner[q2];
            int8_t cum2[4];
            cum_of(q2, cum2);
            for (int i2 = 0; i2 < 4; ++i2) {
              if (qc2[i2] != rc) continue;
              if (std::abs(V[q2][i2]) <= tol0) break;
              lam[q2] = sig[rc] * cum2[i2] * (V[q2][i2] > 0 ? 1 : -1);
              stack.push_back(q2);
              break;
            }
          }
        } else if (sig[rc] != want) {
          throw InvariantError("corner section signs do not glue");
        }
      }
    }
  }
  for (int& v : sig)
    if (!v) v = 1;
  return sig;
}

// shortest region-edge path between two vertices
std::vector<int> vertex_path(const FiniteRegion& reg, int rv1, int rv2) {
  std::vector<int> pe(reg.nv(), -1), pv(reg.nv(), -1);
  std::vector<char> seen(reg.nv(), 0);
  seen[rv1] = 1;
  std::vector<int> order = {rv1};
  for (size_t h = 0; h < order.size() && !seen[rv2]; ++h) {
    int v = order[h];
    for (int re = 0; re < reg.ne(); ++re) {
      const RegionEdge& E = reg.edges[re];
      int g = E.v0 == v ? E.v1 : (E.v1 == v ? E.v0 : -1);
      if (g < 0 || seen[g]) continue;
      seen[g] = 1;
      pe[g] = re;
      pv[g] = v;
      order.push_back(g);
    }
  }
  if (!seen[rv2]) throw InvariantError("region vertex graph is disconnected");
  std::vector<int> path;
  for (int v = rv2; v != rv1; v = pv[v]) path.push_back(pe[v]);
  return path;
}

// corner adjacency of Lambda nodes, vertices as rv, faces as ~rf
void node_corners(const FiniteRegion& reg, std::vector<std::vector<int>>* byv,
                  std::vector<std::vector<int>>* byf) {
  byv->assign(reg.nv(), {});
  byf->assign(reg.nf(), {});
  for (int rc = 0; rc < reg.nc(); ++rc) {
    (*byv)[reg.corners[rc].rv].push_back(rc);
    (*byf)[reg.corners[rc].rf].push_back(rc);
  }
}

// generic Lambda-BFS accumulation: inc(rc) = field(vertex) - field(face);
// the worst revisit mismatch lands in *closure
template <class T, class Inc>
void lambda_accumulate(const FiniteRegion& reg, int start_node, std::vector<T>* onv,
                       std::vector<T>* onf, Inc&& inc, double* closure) {
  std::vector<std::vector<int>> byv, byf;
  node_corners(reg, &byv, &byf);
  onv->assign(reg.nv(), T{});
  onf->assign(reg.nf(), T{});
  std::vector<char> seenv(reg.nv(), 0), seenf(reg.nf(), 0);
  double worst = 0;
  std::vector<int> queue = {start_node};
  if (start_node >= 0)
    seenv[start_node] = 1;
  else
    seenf[~start_node] = 1;
  for (size_t h = 0; h < queue.size(); ++h) {
    int node = queue[h];
    const auto& inc_list = node >= 0 ? byv[node] : byf[~node];
    for (int rc : inc_list) {
      const RegionCorner& C = reg.corners[rc];
      T d = inc(rc);
      if (node >= 0) {  // vertex -> face
        T val = (*onv)[C.rv] - d;
        if (!seenf[C.rf]) {
          (*onf)[C.rf] = val;
          seenf[C.rf] = 1;
          queue.push_back(~C.rf);
        } else {
          worst = std::max(worst, (double)std::abs(val - (*onf)[C.rf]));
        }
      } else {  // face -> vertex
        T val = (*onf)[C.rf] + d;
        if (!seenv[C.rv]) {
          (*onv)[C.rv] = val;
          seenv[C.rv] = 1;
          queue.push_back(C.rv);
        } else {
          worst = std::max(worst, (double)std::abs(val - (*onv)[C.rv]));
        }
      }
    }
  }
  for (char c : seenv)
    if (!c) throw InvariantError("Lambda graph is disconnected");
  for (char c : seenf)
    if (!c) throw InvariantError("Lambda graph is disconnected");
  if (closure) *closure = std::max(*closure, worst);
}

cplx eta_of(cplx W) { return kVS * std::conj(W) / std::abs(W); }

}  // namespace

double partition_function(const FiniteRegion& reg, const BoundaryArcs& bc) {
  auto R = enumerate_sums(reg, even_mask(reg, bc), {});
  if (!(R.Z > 0)) throw InvariantError("partition function not positive");
  return R.Z;
}

double spin_correlation_exact(const FiniteRegion& reg, const BoundaryArcs& bc, int rf1, int rf2) {
  if (rf1 < 0 || rf1 >= reg.nf() || rf2 < 0 || rf2 >= reg.nf())
    throw GateError("spin face not in region");
  if (rf1 == rf2) return 1.0;
  DualTree t1 = build_dual_tree(reg, rf1, false);
  DualTree t2 = build_dual_tree(reg, rf1, true);
  std::vector<Job> jobs = {{0, t1.pmask[rf2]}, {0, t2.pmask[rf2]}};
  auto R = enumerate_sums(reg, even_mask(reg, bc), jobs);
  if (std::abs(R.S[0] - R.S[1]) > 1e-12 * (R.Z + std::abs(R.S[0])))
    throw InvariantError("spin correlator depends on the defect path");
  double val = R.S[0] / R.Z;
  if (std::abs(val) > 1 + 1e-14) throw InvariantError("spin correlator outside [-1,1]");
  return val;
}

double disorder_correlation_exact(const FiniteRegion& reg, const BoundaryArcs& bc, int rv1,
                                  int rv2) {
  if (rv1 < 0 || rv1 >= reg.nv() || rv2 < 0 || rv2 >= reg.nv())
    throw GateError("disorder vertex not in region");
  if (rv1 == rv2) return 1.0;
  uint64_t vc = even_mask(reg, bc);
  if (!(vc >> rv1 & 1) || !(vc >> rv2 & 1))
    throw GateError("disorder vertex not parity-constrained");
  std::vector<Job> jobs = {{(1ull << rv1) | (1ull << rv2), 0}};
  auto R = enumerate_sums(reg, vc, jobs);
  double direct = R.S[0] / R.Z;
  // independent route: sum x(C xor path) over unconstrained-even C
  std::vector<int> path = vertex_path(reg, rv1, rv2);
  uint32_t pmask = 0;
  for (int re : path) pmask |= 1u << re;
  KahanSum flip;
  {
    int ne = reg.ne();
    std::vector<double> x(ne);
    std::vector<uint64_t> epar(ne);
    for (int re = 0; re < ne; ++re) {
      x[re] = reg.edges[re].x;
      epar[re] = (1ull << reg.edges[re].v0) | (1ull << reg.edges[re].v1);
    }
    uint32_t C = 0;
    uint64_t odd = 0;
    for (uint64_t it = 0; it < (uint64_t{1} << ne); ++it) {
      if (it) {
        int b = __builtin_ctzll(it);
        C ^= 1u << b;
        odd ^= epar[b];
      }
      if ((odd & vc) != 0) continue;
      uint32_t D = C ^ pmask;
      double w = 1;
      for (int re = 0; re < ne; ++re)
        if (D >> re & 1) w *= x[re];
      flip.add(w);
    }
  }
  double flipped = flip.value() / R.Z;
  if (std::abs(direct - flipped) > 1e-12 * (1 + std::abs(direct)))
    throw InvariantError("disorder correlator methods disagree");
  return direct;
}

double corner_sum_exact(const FiniteRegion& reg, const BoundaryArcs& bc, int rc,
                        const std::vector<int>& dual_path) {
  if (rc < 0 || rc >= reg.nc()) throw GateError("corner not in region");
  uint64_t vc = even_mask(reg, bc);
  uint32_t gmask = 0;
  for (int re : dual_path) gmask |= 1u << re;
  std::vector<Job> jobs = {{(1ull << reg.corners[rc].rv) & vc, gmask}};
  return enumerate_sums(reg, vc, jobs).S[0];
}

cplx f_from_pair(cplx W1, cplx W2, double X1, double X2) {
  double im = std::imag(std::conj(W1) * W2);
  if (std::abs(im) <= 1e-12 * std::abs(W1) * std::abs(W2))
    throw GateError("collinear corner pair");
  return -kI * kVS * (std::conj(W1) * X2 - std::conj(W2) * X1) / im;
}

std::vector<cplx> f_from_x(const FiniteRegion& reg, const std::vector<cplx>& W,
                           const std::vector<double>& X) {
  std::vector<cplx> F(reg.ne());
  for (int q = 0; q < reg.ne(); ++q) {
    const auto& qc = reg.quad_corner[q];
    int bi = 0, bj = 1;
    double best = -1, scale = 0;
    for (int i = 0; i < 4; ++i) {
      scale = std::max(scale, std::norm(W[qc[i]]));
      for (int j = i + 1; j < 4; ++j) {
        double d = std::abs(std::imag(std::conj(W[qc[i]]) * W[qc[j]]));
        if (d > best) best = d, bi = i, bj = j;
      }
    }
    if (best <= 1e-12 * scale) throw GateError("degenerate quad: all corners collinear");
    F[q] = f_from_pair(W[qc[bi]], W[qc[bj]], X[qc[bi]], X[qc[bj]]);
  }
  return F;
}

std::vector<double> x_from_f(const FiniteRegion& reg, const std::vector<cplx>& W,
                             const std::vector<cplx>& F) {
  std::vector<double> X(reg.nc());
  for (int rc = 0; rc < reg.nc(); ++rc)
    X[rc] = std::real(std::conj(kVS) * W[rc] * F[reg.corners[rc].quad[0]]);
  return X;
}

ExactObservable fk_observable_exact(const FiniteRegion& reg, const BoundaryArcs& arcs) {
  gate_budget(reg);
  if (arcs.a < 0 || arcs.b < 0) throw GateError("observable needs marked Dobrushin corners");
  if (!reg.simply_connected || reg.wrap)
    throw GateError("observable needs a simply connected region");
  for (const auto& st : reg.boundary[0]) {
    if (st.corner == arcs.a && !st.from_vert)
      throw GateError("corner a must step from its vertex onto the wired arc");
    if (st.corner == arcs.b && st.from_vert)
      throw GateError("corner b must step off the wired arc onto its vertex");
  }
  ExactObservable obs;
  obs.reg = &reg;
  obs.arcs = arcs;
  uint64_t vc = even_mask(reg, arcs);
  int f_root = reg.corners[arcs.a].rf;
  DualTree tree = build_dual_tree(reg, f_root, false);
  int ne = reg.ne(), nc = reg.nc();
  std::vector<Job> jobs(nc);
  for (int rc = 0; rc < nc; ++rc)
    jobs[rc] = {(1ull << reg.corners[rc].rv) & vc, tree.pmask[reg.corners[rc].rf]};
  auto R = enumerate_sums(reg, vc, jobs);
  obs.Z = R.Z;
  obs.T = R.S;
  if (!(obs.Z > 0)) throw InvariantError("partition function not positive");

  obs.theta.resize(ne);
  std::vector<std::array<double, 4>> V(ne);
  for (int q = 0; q < ne; ++q) {
    obs.theta[q] = 2 * std::atan(reg.edges[q].x);
    double s, r0, r1;
    quad_dress(reg, tree, vc, q, &s, &r0, &r1);
    const auto& qc = reg.quad_corner[q];
    V[q] = {obs.T[qc[0]], s * obs.T[qc[1]], s * r1 * obs.T[qc[2]], -r0 * obs.T[qc[3]]};
    double ct = std::cos(obs.theta[q]), st = std::sin(obs.theta[q]);
    double scale =
        std::abs(V[q][0]) + std::abs(V[q][1]) + std::abs(V[q][2]) + std::abs(V[q][3]) + 1e-300;
    double e1 = std::abs(V[q][0] + V[q][3] * ct - V[q][1] * st) / scale;
    double e2 = std::abs(V[q][1] - V[q][2] * ct - V[q][0] * st) / scale;
    obs.row_residual = std::max(obs.row_residual, std::max(e1, e2));
  }
  if (obs.row_residual > 1e-9) throw InvariantError("three-term relations fail");

  obs.cov = build_region_cover(reg, {}, {});
  obs.W = region_corner_spinor(reg, obs.cov);
  std::vector<int> sig = assemble_section(reg, obs.cov, V, 1e-12 * obs.Z);
  double wa = sig[arcs.a] * std::abs(obs.T[arcs.a]);
  obs.X.resize(nc);
  for (int rc = 0; rc < nc; ++rc) obs.X[rc] = sig[rc] * std::abs(obs.T[rc]) / wa;
  obs.D.resize(ne);
  for (int q = 0; q < ne; ++q)
    for (int i = 0; i < 4; ++i) obs.D[q][i] = V[q][i] / wa;

  obs.F = f_from_x(reg, obs.W, obs.X);
  for (int rc = 0; rc < nc; ++rc) {
    if (reg.corners[rc].nquad != 2) continue;
    cplx eta = eta_of(obs.W[rc]);
    cplx p1 = eta * std::real(std::conj(eta) * obs.F[reg.corners[rc].quad[0]]);
    cplx p2 = eta * std::real(std::conj(eta) * obs.F[reg.corners[rc].quad[1]]);
    obs.shol_residual = std::max(obs.shol_residual, std::abs(p1 - p2));
  }
  return obs;
}

LambdaField accumulate_hf(const FiniteRegion& reg, const std::vector<cplx>& F, int base_rf,
                          double* closure) {
  LambdaField H;
  double worst = 0;
  // the half compensates |W|^2 = |dS|: each corner then increments by X(c)^2
  auto inc = [&](int rc) {
    const RegionCorner& C = reg.corners[rc];
    cplx dS = reg.vpos(C.rv) - reg.fpos(C.rf);
    double dQ = reg.vq(C.rv) - reg.fq(C.rf);
    double d = 0.5 * (std::imag(F[C.quad[0]] * F[C.quad[0]] * dS) + std::norm(F[C.quad[0]]) * dQ);
    if (C.nquad == 2) {
      double d2 =
          0.5 * (std::imag(F[C.quad[1]] * F[C.quad[1]] * dS) + std::norm(F[C.quad[1]]) * dQ);
      worst = std::max(worst, std::abs(d - d2));
      d = 0.5 * (d + d2);
    }
    return d;
  };
  double cyc = 0;
  lambda_accumulate<double>(reg, ~base_rf, &H.v, &H.f, inc, &cyc);
  if (closure) *closure = std::max(worst, cyc);
  return H;
}

PrimitiveField primitive_h(const ExactObservable& obs) {
  const FiniteRegion& reg = *obs.reg;
  PrimitiveField P;
  P.base_rf = reg.corners[obs.arcs.a].rf;
  auto inc = [&](int rc) { return obs.X[rc] * obs.X[rc]; };
  lambda_accumulate<double>(reg, ~P.base_rf, &P.H.v, &P.H.f, inc, &P.h_closure);
  // quad-center values and the four increment relations
  P.Hq.assign(reg.ne(), 0.0);
  for (int q = 0; q < reg.ne(); ++q) {
    const auto& qc = reg.quad_corner[q];
    int v0 = reg.corners[qc[0]].rv, f0 = reg.corners[qc[0]].rf;
    int v1 = reg.corners[qc[1]].rv, f1 = reg.corners[qc[2]].rf;
    double ct = std::cos(obs.theta[q]), st = std::sin(obs.theta[q]);
    const auto& D = obs.D[q];
    P.Hq[q] = P.H.v[v0] + ct * D[0] * D[3];
    double r1 = P.H.v[v1] - P.Hq[q] - ct * D[1] * D[2];
    double r2 = P.H.f[f0] - P.Hq[q] + st * D[0] * D[1];
    double r3 = P.H.f[f1] - P.Hq[q] + st * D[2] * D[3];
    P.h_closure = std::max({P.h_closure, std::abs(r1), std::abs(r2), std::abs(r3)});
  }
  double hf_cl = 0;
  P.HF = accumulate_hf(reg, obs.F, P.base_rf, &hf_cl);
  P.h_closure = std::max(P.h_closure, hf_cl);
  for (int rv = 0; rv < reg.nv(); ++rv)
    P.hx_hf_gap = std::max(P.hx_hf_gap, std::abs(P.H.v[rv] - P.HF.v[rv]));
  for (int rf = 0; rf < reg.nf(); ++rf)
    P.hx_hf_gap = std::max(P.hx_hf_gap, std::abs(P.H.f[rf] - P.HF.f[rf]));
  if (P.h_closure > 1e-9) throw InvariantError("H primitive does not close");
  return P;
}

PrimitiveField primitive_ic(const ExactObservable& obs) {
  const FiniteRegion& reg = *obs.reg;
  PrimitiveField P;
  P.base_rf = reg.corners[obs.arcs.a].rf;
  double worst = 0;
  auto inc = [&](int rc) {
    const RegionCorner& C = reg.corners[rc];
    cplx dS = reg.vpos(C.rv) - reg.fpos(C.rf);
    double dQ = reg.vq(C.rv) - reg.fq(C.rf);
    cplx f = obs.F[C.quad[0]];
    cplx d = std::conj(kVS) * f * dS + kVS * std::conj(f) * dQ;
    if (C.nquad == 2) {
      cplx g = obs.F[C.quad[1]];
      cplx d2 = std::conj(kVS) * g * dS + kVS * std::conj(g) * dQ;
      worst = std::max(worst, std::abs(d - d2));
      d = 0.5 * (d + d2);
    }
    return d;
  };
  double cyc = 0;
  lambda_accumulate<cplx>(reg, reg.corners[obs.arcs.a].rv, &P.Iv, &P.If, inc, &cyc);
  P.ic_closure = std::max(worst, cyc);
  if (P.ic_closure > 1e-9) throw InvariantError("I_C primitive does not close");
  return P;
}

cplx contour_integral(const FiniteRegion& reg, const BoundaryArcs& arcs,
                      const std::vector<cplx>& F, const std::vector<BoundaryStep>& walk) {
  if (walk.empty()) throw GateError("open walk");
  int n = (int)walk.size();
  auto tail = [&](const BoundaryStep& st) {
    const RegionCorner& C = reg.corners[st.corner];
    return st.from_vert ? C.rv : ~C.rf;
  };
  auto head = [&](const BoundaryStep& st) {
    const RegionCorner& C = reg.corners[st.corner];
    return st.from_vert ? ~C.rf : C.rv;
  };
  for (int k = 0; k < n; ++k)
    if (head(walk[k]) != tail(walk[(k + 1) % n])) throw GateError("open walk");
  auto arc_node = [&](int node) {
    return node >= 0 ? (bool)arcs.vert_free[node] : (bool)arcs.face_wired[~node];
  };
  int k0 = 0;
  while (k0 < n && !arc_node(tail(walk[k0]))) ++k0;
  if (k0 == n) k0 = 0;  // no arc nodes: single hop
  double total = 0;
  cplx hop = 0;
  for (int kk = 0; kk < n; ++kk) {
    const BoundaryStep& st = walk[(k0 + kk) % n];
    const RegionCorner& C = reg.corners[st.corner];
    cplx dS = reg.vpos(C.rv) - reg.fpos(C.rf);
    double dQ = reg.vq(C.rv) - reg.fq(C.rf);
    if (!st.from_vert) dS = -dS, dQ = -dQ;
    cplx f = F[st.quad];
    hop += 0.5 * (f * f * dS + kI * std::norm(f) * dQ);
    if (arc_node(head(st)) || kk == n - 1) {
      total += std::abs(std::imag(hop));
      hop = 0;
    }
  }
  return cplx(total, 0);
}

BoundaryPhaseReport boundary_phase_check(const FiniteRegion& reg, const BoundaryArcs& arcs,
                                         const std::vector<cplx>& F) {
  BoundaryPhaseReport rep;
  rep.arg_lo = 10;
  rep.arg_hi = -10;
  const auto& walk = reg.boundary[0];
  int n = (int)walk.size();
  for (int k = 0; k < n; ++k) {
    const BoundaryStep& s1 = walk[k];
    const BoundaryStep& s2 = walk[(k + 1) % n];
    if (s1.from_vert || !s2.from_vert) continue;  // want face -> vertex -> face
    int fp = reg.corners[s1.corner].rf, fn = reg.corners[s2.corner].rf;
    if (!arcs.face_wired[fp] || !arcs.face_wired[fn]) continue;
    cplx dS = reg.fpos(fn) - reg.fpos(fp);
    if (std::abs(std::imag(dS)) > 1e-9 * std::abs(dS) || std::real(dS) <= 0)
      continue;  // only straight horizontal runs
    // integrate F^2 dS + i |F|^2 dQ across the two half-quads of the hop and
    // divide by the (real) face-to-face dS; the imaginary part is the jump of
    // H between the wired faces, identically zero
    int piv = reg.corners[s1.corner].rv;
    cplx d1 = reg.vpos(piv) - reg.fpos(fp);
    cplx d2 = reg.fpos(fn) - reg.vpos(piv);
    double q1 = reg.vq(piv) - reg.fq(fp);
    double q2 = reg.fq(fn) - reg.vq(piv);
    cplx F1 = F[s1.quad], F2 = F[s2.quad];
    cplx form = F1 * F1 * d1 + kI * std::norm(F1) * q1 + F2 * F2 * d2 + kI * std::norm(F2) * q2;
    rep.max_im = std::max(rep.max_im, std::abs(std::imag(form / std::real(dS))));
    for (int q : {s1.quad, s2.quad}) {
      double a = std::arg(F[q]);
      rep.arg_lo = std::min(rep.arg_lo, a);
      rep.arg_hi = std::max(rep.arg_hi, a);
    }
    rep.npairs++;
  }
  if (!rep.npairs) throw GateError("no straight horizontal wired run");
  return rep;
}

ComparisonReport comparison_check(const FiniteRegion& reg, const LambdaField& H1,
                                  const LambdaField& H2, const std::vector<cplx>* F) {
  ComparisonReport rep;
  double imin = 1e300, bmin = 1e300;
  cplx iwit = 0;
  auto scan = [&](double d, bool interior, cplx pos) {
    if (interior) {
      if (d < imin) imin = d, iwit = pos;
    } else {
      bmin = std::min(bmin, d);
    }
  };
  for (int rv = 0; rv < reg.nv(); ++rv)
    scan(H1.v[rv] - H2.v[rv], reg.verts[rv].interior, reg.vpos(rv));
  for (int rf = 0; rf < reg.nf(); ++rf)
    scan(H1.f[rf] - H2.f[rf], reg.faces[rf].interior, reg.fpos(rf));
  rep.interior_min = imin < 1e300 ? imin : 0;
  rep.boundary_min = bmin < 1e300 ? bmin : 0;
  rep.witness = iwit;
  rep.dominated = imin >= bmin - 1e-10;
  if (F) {
    // measured constant in the oscillation bound |F|^2 <= C0 osc(H1)/r
    for (int q = 0; q < reg.ne(); ++q) {
      cplx c = reg.quad_center(q);
      for (double r : {4 * reg.delta, 8 * reg.delta}) {
        double lo = 1e300, hi = -1e300;
        int cnt = 0;
        for (int rv = 0; rv < reg.nv(); ++rv)
          if (std::abs(reg.vpos(rv) - c) <= r)
            lo = std::min(lo, H1.v[rv]), hi = std::max(hi, H1.v[rv]), cnt++;
        for (int rf = 0; rf < reg.nf(); ++rf)
          if (std::abs(reg.fpos(rf) - c) <= r)
            lo = std::min(lo, H1.f[rf]), hi = std::max(hi, H1.f[rf]), cnt++;
        if (cnt < 6 || hi - lo < 1e-14) continue;
        rep.osc_c0 = std::max(rep.osc_c0, std::norm((*F)[q]) * r / (hi - lo));
      }
    }
  }
  return rep;
}

}  // namespace ising
