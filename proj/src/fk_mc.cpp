#include "ising/fk_mc.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

#include "ising/util.hpp"

namespace ising {

Estimate combine_chains(const std::vector<double>& chain_means, int64_t n_total, uint64_t seed) {
  Estimate est;
  est.chain_mean = chain_means;
  est.n = n_total;
  est.seed = seed;
  int k = (int)chain_means.size();
  KahanSum s;
  for (double m : chain_means) s.add(m);
  est.mean = s.value() / k;
  if (k > 1) {
    KahanSum v;
    for (double m : chain_means) v.add((m - est.mean) * (m - est.mean));
    est.se = std::sqrt(v.value() / ((double)k * (k - 1)));
  }
  return est;
}

int FkState::find(int a) {
  while (par[a] != a) {
    par[a] = par[par[a]];
    a = par[a];
  }
  return a;
}

int FkState::dfind(int a) {
  while (dpar[a] != a) {
    dpar[a] = dpar[dpar[a]];
    a = dpar[a];
  }
  return a;
}

void FkState::build_dual() {
  if (dual_ready) return;
  int nv = reg->nv();
  dpar.resize(nv);
  for (int i = 0; i < nv; i++) dpar[i] = i;
  for (int e = 0; e < reg->ne(); e++) {
    if (open[e]) continue;
    int a = dfind(reg->edges[e].v0), b = dfind(reg->edges[e].v1);
    if (a != b) dpar[a < b ? b : a] = a < b ? a : b;
  }
  dual_ready = true;
}

FkSampler::FkSampler(const FiniteRegion& reg, const BoundaryArcs& arcs, uint64_t seed,
                     uint64_t chain, const double* x_override)
    : rng(seed, chain) {
  st.reg = &reg;
  st.arcs = &arcs;
  st.open.assign(reg.ne(), 0);
  st.spin.assign(reg.nf(), 1);
  st.par.assign(reg.nf() + 1, 0);
  thr.resize(reg.ne());
  for (int e = 0; e < reg.ne(); e++) {
    double x = x_override ? *x_override : reg.edges[e].x;
    thr[e] = bernoulli_threshold(fk_p_open(x));
  }
  for (int f = 0; f < reg.nf(); f++)
    if (!arcs.face_wired.empty() && arcs.face_wired[f]) wired_.push_back(f);
  st.wired = !wired_.empty();
  sz_.assign(reg.nf() + 1, 1);
}

void FkSampler::sweep() {
  const FiniteRegion& R = *st.reg;
  const int ne = R.ne(), nf = R.nf();
  // hoisted per-sweep half of CounterRng::at(t, slot), bit-identical
  const uint64_t h = mix64(rng.key ^ mix64(t + 0x9e3779b97f4a7c15ull));

  const int8_t* spin = st.spin.data();
  uint8_t* open = st.open.data();
  for (int e = 0; e < ne; e++) {
    const RegionEdge& E = R.edges[e];
    uint64_t u = mix64(h ^ mix64((uint64_t)e + 0xd1b54a32d192ed03ull));
    open[e] = (uint8_t)((spin[E.fl] == spin[E.fr]) & (u < thr[e]));
  }

  int32_t* par = st.par.data();
  int32_t* sz = sz_.data();
  for (int i = 0; i <= nf; i++) {
    par[i] = i;
    sz[i] = 1;
  }
  auto root = [par](int a) {
    while (par[a] != a) {
      par[a] = par[par[a]];
      a = par[a];
    }
    return a;
  };
  auto join = [&](int a, int b) {
    a = root(a);
    b = root(b);
    if (a == b) return;
    if (sz[a] < sz[b]) std::swap(a, b);
    par[b] = a;
    sz[a] += sz[b];
  };
  for (int f : wired_) join(nf, f);
  for (int e = 0; e < ne; e++)
    if (open[e]) join(R.edges[e].fl, R.edges[e].fr);

  // fresh fair spin per cluster, keyed by the root id so the draw does not
  // depend on traversal order
  int8_t* sp = st.spin.data();
  for (int f = 0; f < nf; f++) {
    uint64_t u = mix64(h ^ mix64((uint64_t)(ne + root(f)) + 0xd1b54a32d192ed03ull));
    sp[f] = (u >> 63) ? 1 : -1;
  }

  st.dual_ready = false;
  t++;
}

void audit_clusters(FkState& st) {
  const FiniteRegion& R = *st.reg;
  int nf = R.nf(), nn = nf + 1;
  // CSR adjacency over open bonds
  std::vector<int> deg(nn, 0), off(nn + 1, 0), adj;
  for (int e = 0; e < R.ne(); e++)
    if (st.open[e]) {
      deg[R.edges[e].fl]++;
      deg[R.edges[e].fr]++;
    }
  if (st.wired)
    for (int f = 0; f < nf; f++)
      if (st.arcs->face_wired[f]) {
        deg[f]++;
        deg[nf]++;
      }
  for (int i = 0; i < nn; i++) off[i + 1] = off[i] + deg[i];
  adj.resize(off[nn]);
  std::vector<int> fill(off.begin(), off.end() - 1);
  auto put = [&](int a, int b) {
    adj[fill[a]++] = b;
    adj[fill[b]++] = a;
  };
  for (int e = 0; e < R.ne(); e++)
    if (st.open[e]) put(R.edges[e].fl, R.edges[e].fr);
  if (st.wired)
    for (int f = 0; f < nf; f++)
      if (st.arcs->face_wired[f]) put(f, nf);

  std::vector<int> lab(nn, -1), stack;
  int nlab = 0;
  for (int s = 0; s < nn; s++) {
    if (lab[s] >= 0) continue;
    lab[s] = nlab++;
    stack.push_back(s);
    while (!stack.empty()) {
      int a = stack.back();
      stack.pop_back();
      for (int k = off[a]; k < off[a + 1]; k++)
        if (lab[adj[k]] < 0) {
          lab[adj[k]] = lab[a];
          stack.push_back(adj[k]);
        }
    }
  }
  std::vector<int> seen(nlab, -1);
  for (int i = 0; i < nn; i++) {
    int r = st.find(i);
    if (seen[lab[i]] < 0) seen[lab[i]] = r;
    if (seen[lab[i]] != r) throw InvariantError("union-find disagrees with BFS relabel");
  }
  // distinct labels must map to distinct roots
  std::sort(seen.begin(), seen.end());
  if (std::adjacent_find(seen.begin(), seen.end()) != seen.end())
    throw InvariantError("union-find merged clusters BFS keeps apart");
}

EventFn connect_event(std::vector<int> fa, std::vector<int> fb) {
  return [fa = std::move(fa), fb = std::move(fb)](FkState& st) -> double {
    std::vector<int> roots;
    roots.reserve(fa.size());
    for (int f : fa) roots.push_back(st.find(f));
    std::sort(roots.begin(), roots.end());
    for (int f : fb)
      if (std::binary_search(roots.begin(), roots.end(), st.find(f))) return 1.0;
    return 0.0;
  };
}

EventFn cylinder_event(std::vector<int> open_e, std::vector<int> closed_e) {
  return [open_e = std::move(open_e), closed_e = std::move(closed_e)](FkState& st) -> double {
    for (int e : open_e)
      if (!st.open[e]) return 0.0;
    for (int e : closed_e)
      if (st.open[e]) return 0.0;
    return 1.0;
  };
}

EventFn circuit_event(std::vector<int> inner_v, std::vector<int> outer_v) {
  return [inner_v = std::move(inner_v), outer_v = std::move(outer_v)](FkState& st) -> double {
    st.build_dual();
    std::vector<int> roots;
    roots.reserve(inner_v.size());
    for (int v : inner_v) roots.push_back(st.dfind(v));
    std::sort(roots.begin(), roots.end());
    for (int v : outer_v)
      if (std::binary_search(roots.begin(), roots.end(), st.dfind(v)))
        return 0.0;  // dual crossing blocks every circuit
    return 1.0;
  };
}

std::vector<Estimate> sample_events(const FiniteRegion& reg, const BoundaryArcs& arcs,
                                    const ChainConfig& cfg, const std::vector<EventFn>& events,
                                    const double* x_override) {
  if (events.empty()) throw GateError("no events to estimate");
  if (cfg.chains < 1 || cfg.n_samples < 1 || cfg.thinning < 1)
    throw GateError("bad chain configuration");
  int nev = (int)events.size();
  std::vector<std::vector<double>> means((size_t)cfg.chains, std::vector<double>(nev, 0.0));

  auto run_chain = [&](int chain) {
    FkSampler s(reg, arcs, cfg.seed, (uint64_t)chain, x_override);
    std::vector<KahanSum> acc(nev);
    uint64_t next_audit = 1000;
    for (int b = 0; b < cfg.burn_in; b++) s.sweep();
    for (int i = 0; i < cfg.n_samples; i++) {
      for (int k = 0; k < cfg.thinning; k++) s.sweep();
      if (s.t >= next_audit) {
        audit_clusters(s.st);
        next_audit += 1000;
      }
      for (int j = 0; j < nev; j++) acc[j].add(events[j](s.st));
    }
    for (int j = 0; j < nev; j++) means[chain][j] = acc[j].value() / cfg.n_samples;
  };

  int nthread = std::max(1, std::min(cfg.threads, cfg.chains));
  if (nthread == 1) {
    for (int c = 0; c < cfg.chains; c++) run_chain(c);
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < nthread; w++)
      pool.emplace_back([&, w] {
        for (int c = w; c < cfg.chains; c += nthread) run_chain(c);
      });
    for (auto& th : pool) th.join();
  }

  std::vector<Estimate> out;
  out.reserve(nev);
  int64_t n_total = (int64_t)cfg.chains * cfg.n_samples;
  for (int j = 0; j < nev; j++) {
    std::vector<double> cm(cfg.chains);
    for (int c = 0; c < cfg.chains; c++) cm[c] = means[c][j];
    out.push_back(combine_chains(cm, n_total, cfg.seed));
  }
  return out;
}

Estimate estimate_connectivity(const FiniteRegion& reg, const BoundaryArcs& arcs, int fa, int fb,
                               const ChainConfig& cfg) {
  if (fa < 0 || fb < 0 || fa >= reg.nf() || fb >= reg.nf())
    throw GateError("face outside the region");
  return sample_events(reg, arcs, cfg, {connect_event({fa}, {fb})})[0];
}

Estimate circuit_in_annulus(const FiniteRegion& reg, const ChainConfig& cfg,
                            const double* x_override) {
  if (reg.shape.kind != ShapeSpec::Kind::Annulus || reg.boundary.size() < 2)
    throw GateError("circuit estimator needs an annulus region");
  std::vector<int> outer, inner;
  for (int n : reg.walk_nodes(0))
    if (n >= 0) outer.push_back(n);
  for (int n : reg.walk_nodes(1))
    if (n >= 0) inner.push_back(n);
  BoundaryArcs arcs = arcs_all_free(reg);
  return sample_events(reg, arcs, cfg, {circuit_event(inner, outer)}, x_override)[0];
}

Estimate rsw_arm_crossing(const FiniteRegion& reg, const ChainConfig& cfg,
                          const double* x_override) {
  if (reg.shape.kind != ShapeSpec::Kind::Annulus || reg.boundary.size() < 2)
    throw GateError("rsw crossing estimator needs an annulus region");
  double L = reg.shape.ell, band = 1.5 * reg.delta;
  std::vector<int> near_rim, far_rim;
  for (int f = 0; f < reg.nf(); f++) {
    cplx z = reg.fpos(f);
    if (std::fabs(z.imag()) >= L) continue;
    if (z.real() > L && z.real() < L + band) near_rim.push_back(f);
    if (z.real() > 3 * L - band && z.real() < 3 * L) far_rim.push_back(f);
  }
  if (near_rim.empty() || far_rim.empty()) throw GateError("arm rims hold no faces");
  BoundaryArcs arcs = arcs_all_free(reg);
  return sample_events(reg, arcs, cfg, {connect_event(near_rim, far_rim)}, x_override)[0];
}

Estimate crossing_probability(const FiniteRegion& reg, int a, int b, int c, int d,
                              const ChainConfig& cfg) {
  std::vector<int> ab = mark_dobrushin(reg, a, b).wired_faces;
  std::vector<int> cd = mark_dobrushin(reg, c, d).wired_faces;
  std::vector<int> sab = ab, scd = cd;
  std::sort(sab.begin(), sab.end());
  std::sort(scd.begin(), scd.end());
  for (int f : scd)
    if (std::binary_search(sab.begin(), sab.end(), f))
      throw GateError("crossing arcs overlap");
  BoundaryArcs arcs = arcs_all_free(reg);
  return sample_events(reg, arcs, cfg, {connect_event(ab, cd)})[0];
}

std::vector<int64_t> fk_sample_histogram(const FiniteRegion& reg, const BoundaryArcs& arcs,
                                         const ChainConfig& cfg) {
  if (reg.ne() > 16) throw GateError("histogram gate: more than 16 bonds");
  std::vector<int64_t> counts((size_t)1 << reg.ne(), 0);
  for (int chain = 0; chain < cfg.chains; chain++) {
    FkSampler s(reg, arcs, cfg.seed, (uint64_t)chain);
    for (int b = 0; b < cfg.burn_in; b++) s.sweep();
    for (int i = 0; i < cfg.n_samples; i++) {
      for (int k = 0; k < cfg.thinning; k++) s.sweep();
      uint32_t mask = 0;
      for (int e = 0; e < reg.ne(); e++) mask |= (uint32_t)s.st.open[e] << e;
      counts[mask]++;
    }
  }
  return counts;
}

FkModel fk_model(const FiniteRegion& reg, const BoundaryArcs& arcs) {
  FkModel m;
  bool wired = false;
  for (int f = 0; f < reg.nf(); f++)
    if (!arcs.face_wired.empty() && arcs.face_wired[f]) wired = true;
  m.nnodes = reg.nf() + (wired ? 1 : 0);
  for (int e = 0; e < reg.ne(); e++) {
    m.ends.push_back({reg.edges[e].fl, reg.edges[e].fr});
    m.p.push_back(fk_p_open(reg.edges[e].x));
  }
  if (wired)
    for (int f = 0; f < reg.nf(); f++)
      if (arcs.face_wired[f]) m.pre.push_back({reg.nf(), f});
  return m;
}

namespace {

// single pass over all masks; emit(mask, roots, unnormalized weight)
template <class F>
void fk_scan(const FkModel& m, F&& emit) {
  int nb = (int)m.ends.size();
  if (nb > 24) throw GateError("exact FK enumeration gate: more than 24 bonds");
  std::vector<int> par(m.nnodes), roots(m.nnodes);
  auto root = [&](int a) {
    while (par[a] != a) {
      par[a] = par[par[a]];
      a = par[a];
    }
    return a;
  };
  for (uint32_t mask = 0; mask < (1u << nb); mask++) {
    for (int i = 0; i < m.nnodes; i++) par[i] = i;
    for (auto& pr : m.pre) {
      int a = root(pr.first), b = root(pr.second);
      if (a != b) par[b] = a;
    }
    double w = 1.0;
    for (int e = 0; e < nb; e++) {
      if (mask >> e & 1) {
        w *= m.p[e];
        int a = root(m.ends[e][0]), b = root(m.ends[e][1]);
        if (a != b) par[b] = a;
      } else {
        w *= 1.0 - m.p[e];
      }
    }
    int k = 0;
    for (int i = 0; i < m.nnodes; i++) {
      roots[i] = root(i);
      if (roots[i] == i) k++;
    }
    w *= (double)((uint64_t)1 << k);
    emit(mask, roots, w);
  }
}

double fk_partition(const FkModel& m) {
  KahanSum z;
  fk_scan(m, [&](uint32_t, const std::vector<int>&, double w) { z.add(w); });
  return z.value();
}

}  // namespace

void fk_enumerate(const FkModel& m,
                  const std::function<void(uint32_t, const std::vector<int>&, double)>& visit) {
  double z = fk_partition(m);
  fk_scan(m, [&](uint32_t mask, const std::vector<int>& roots, double w) {
    visit(mask, roots, w / z);
  });
}

double fk_probability(const FkModel& m,
                      const std::function<bool(uint32_t, const std::vector<int>&)>& event) {
  KahanSum z, hit;
  fk_scan(m, [&](uint32_t mask, const std::vector<int>& roots, double w) {
    z.add(w);
    if (event(mask, roots)) hit.add(w);
  });
  return hit.value() / z.value();
}

std::vector<double> fk_exact_distribution(const FkModel& m) {
  std::vector<double> out((size_t)1 << m.ends.size(), 0.0);
  fk_enumerate(m, [&](uint32_t mask, const std::vector<int>&, double pr) { out[mask] = pr; });
  return out;
}

double fkg_audit(const FiniteRegion& reg) {
  FkModel m = fk_model(reg, arcs_all_free(reg));
  int nb = (int)m.ends.size();
  double z = 0;
  std::vector<double> pi(nb, 0.0);
  std::vector<double> pij((size_t)nb * nb, 0.0);
  fk_scan(m, [&](uint32_t mask, const std::vector<int>&, double w) {
    z += w;
    for (int i = 0; i < nb; i++) {
      if (!(mask >> i & 1)) continue;
      pi[i] += w;
      for (int j = i + 1; j < nb; j++)
        if (mask >> j & 1) pij[(size_t)i * nb + j] += w;
    }
  });
  double worst = 1.0;
  for (int i = 0; i < nb; i++)
    for (int j = i + 1; j < nb; j++)
      worst = std::min(worst, pij[(size_t)i * nb + j] / z - pi[i] / z * (pi[j] / z));
  return worst;
}

double bc_monotonicity_audit(const FiniteRegion& reg) {
  FkModel mf = fk_model(reg, arcs_all_free(reg));
  FkModel mw = fk_model(reg, arcs_all_wired(reg));
  int nb = (int)mf.ends.size();
  double worst = 1.0;
  for (int e = 0; e < nb; e++) {
    auto ev = [e](uint32_t mask, const std::vector<int>&) { return (mask >> e & 1) != 0; };
    worst = std::min(worst, fk_probability(mw, ev) - fk_probability(mf, ev));
  }
  return worst;
}

double domain_markov_audit(const FiniteRegion& reg, double split_x) {
  if (reg.ne() > 20) throw GateError("domain Markov audit gate: more than 20 bonds");
  std::vector<int> kept, frozen;
  for (int e = 0; e < reg.ne(); e++)
    (std::real(reg.quad_center(e)) < split_x ? kept : frozen).push_back(e);
  if (kept.empty() || frozen.empty()) throw GateError("split leaves an empty side");

  FkModel full = fk_model(reg, arcs_all_free(reg));
  std::vector<double> pr = fk_exact_distribution(full);

  int na = (int)kept.size(), nd = (int)frozen.size();
  double worst = 0;
  for (uint32_t psi = 0; psi < (1u << nd); psi++) {
    // conditional law of the kept edges given the frozen assignment
    std::vector<double> cond((size_t)1 << na, 0.0);
    double tot = 0;
    for (uint32_t al = 0; al < (1u << na); al++) {
      uint32_t mask = 0;
      for (int i = 0; i < na; i++) mask |= (al >> i & 1) << kept[i];
      for (int i = 0; i < nd; i++) mask |= (psi >> i & 1) << frozen[i];
      cond[al] = pr[mask];
      tot += pr[mask];
    }
    for (auto& c : cond) c /= tot;

    // quotient model: frozen-open edges become permanent identifications,
    // frozen-closed edges disappear
    FkModel quot;
    quot.nnodes = reg.nf();
    for (int i = 0; i < na; i++) {
      quot.ends.push_back(full.ends[kept[i]]);
      quot.p.push_back(full.p[kept[i]]);
    }
    for (int i = 0; i < nd; i++)
      if (psi >> i & 1)
        quot.pre.push_back({full.ends[frozen[i]][0], full.ends[frozen[i]][1]});
    std::vector<double> induced = fk_exact_distribution(quot);
    for (uint32_t al = 0; al < (1u << na); al++)
      worst = std::max(worst, std::abs(cond[al] - induced[al]));
  }
  return worst;
}

std::pair<double, double> mixing_ratio_record(const FiniteRegion& reg) {
  FkModel m = fk_model(reg, arcs_all_free(reg));
  int nb = (int)m.ends.size();
  int bi = 0, bj = 1;
  double best = -1;
  for (int i = 0; i < nb; i++)
    for (int j = i + 1; j < nb; j++) {
      double d = std::abs(reg.quad_center(i) - reg.quad_center(j));
      if (d > best) {
        best = d;
        bi = i;
        bj = j;
      }
    }
  auto evi = [bi](uint32_t mask, const std::vector<int>&) { return (mask >> bi & 1) != 0; };
  auto evj = [bj](uint32_t mask, const std::vector<int>&) { return (mask >> bj & 1) != 0; };
  auto evij = [bi, bj](uint32_t mask, const std::vector<int>&) {
    return (mask >> bi & 1) && (mask >> bj & 1);
  };
  double ratio = fk_probability(m, evij) / (fk_probability(m, evi) * fk_probability(m, evj));
  return {ratio, best};
}

}  // namespace ising
