#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <algorithm>
#include <cmath>
#include <vector>

#include "doctest.h"
#include "ising/fermion.hpp"
#include "ising/fk_mc.hpp"
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

FiniteRegion block_region(int m, int n) {
  return extract_region(square_emb(), ShapeSpec::rect(-0.25, -0.25, m + 0.25, n + 0.25), 1.0);
}

// the four edges around one vertex; their faces form a 4-cycle
FiniteRegion fan_region() { return extract_region(square_emb(), ShapeSpec::disk(0, 0, 0.7), 1.0); }

// independent cluster counter: adjacency matrix closure, no union-find
int brute_clusters(const FkModel& m, uint32_t mask) {
  int n = m.nnodes;
  std::vector<char> adj((size_t)n * n, 0);
  for (int i = 0; i < n; i++) adj[(size_t)i * n + i] = 1;
  auto link = [&](int a, int b) { adj[(size_t)a * n + b] = adj[(size_t)b * n + a] = 1; };
  for (auto& pr : m.pre) link(pr.first, pr.second);
  for (int e = 0; e < (int)m.ends.size(); e++)
    if (mask >> e & 1) link(m.ends[e][0], m.ends[e][1]);
  for (int k = 0; k < n; k++)
    for (int i = 0; i < n; i++)
      if (adj[(size_t)i * n + k])
        for (int j = 0; j < n; j++)
          if (adj[(size_t)k * n + j]) adj[(size_t)i * n + j] = 1;
  int count = 0;
  for (int i = 0; i < n; i++) {
    bool least = true;
    for (int j = 0; j < i; j++)
      if (adj[(size_t)i * n + j]) least = false;
    if (least) count++;
  }
  return count;
}

long double brute_weight(const FkModel& m, uint32_t mask) {
  long double w = 1;
  for (int e = 0; e < (int)m.ends.size(); e++) w *= (mask >> e & 1) ? m.p[e] : 1.0 - m.p[e];
  return w * (long double)((uint64_t)1 << brute_clusters(m, mask));
}

ChainConfig quick_cfg(uint64_t seed, int chains, int burn, int n) {
  ChainConfig c;
  c.seed = seed;
  c.chains = chains;
  c.burn_in = burn;
  c.n_samples = n;
  return c;
}

}  // namespace

TEST_CASE("exact enumeration matches a transitive-closure brute force") {
  FiniteRegion fan = fan_region();
  REQUIRE(fan.ne() == 4);
  REQUIRE(fan.nf() == 4);
  REQUIRE(fan.nv() == 5);
  for (bool wired : {false, true}) {
    BoundaryArcs arcs = wired ? arcs_all_wired(fan) : arcs_all_free(fan);
    FkModel m = fk_model(fan, arcs);
    long double z = 0;
    for (uint32_t mask = 0; mask < 16; mask++) z += brute_weight(m, mask);
    std::vector<double> dist = fk_exact_distribution(m);
    double tot = 0;
    for (uint32_t mask = 0; mask < 16; mask++) {
      CHECK(dist[mask] == doctest::Approx((double)(brute_weight(m, mask) / z)).epsilon(1e-13));
      tot += dist[mask];
    }
    CHECK(tot == doctest::Approx(1.0).epsilon(1e-13));
  }

  FiniteRegion blk = block_region(2, 2);
  FkModel m = fk_model(blk, arcs_all_free(blk));
  long double z = 0;
  for (uint32_t mask = 0; mask < (1u << blk.ne()); mask++) z += brute_weight(m, mask);
  double p_exact = fk_probability(
      m, [](uint32_t mask, const std::vector<int>&) { return (mask & 1) != 0; });
  long double hit = 0;
  for (uint32_t mask = 1; mask < (1u << blk.ne()); mask += 2) hit += brute_weight(m, mask);
  CHECK(p_exact == doctest::Approx((double)(hit / z)).epsilon(1e-13));
}

TEST_CASE("FK connectivity equals the spin correlator under every boundary condition") {
  // Edwards-Sokal: E[sigma_a sigma_b] = P[a <-> b], exactly, on any finite
  // region; the left side comes from the even-subgraph enumeration, the
  // right side from the cluster enumeration. This pins p_open = 1 - x.
  FiniteRegion blk = block_region(2, 2);
  std::vector<BoundaryArcs> bcs = {arcs_all_wired(blk), arcs_all_free(blk)};
  int a = blk.nearest_boundary_corner(cplx(0.1, -0.2));
  int b = blk.nearest_boundary_corner(cplx(2.3, 1.8));
  bcs.push_back(mark_dobrushin(blk, a, b));
  int f1 = blk.nearest_face(cplx(0.5, 0.5));
  int f2 = blk.nearest_face(cplx(1.5, 1.5));
  int f3 = blk.nearest_face(cplx(1.5, 0.5));
  for (const BoundaryArcs& arcs : bcs) {
    FkModel m = fk_model(blk, arcs);
    for (auto [u, v] : {std::pair{f1, f2}, {f1, f3}, {f2, f3}}) {
      double fk = fk_probability(m, [&](uint32_t, const std::vector<int>& roots) {
        return roots[u] == roots[v];
      });
      CHECK(fk == doctest::Approx(spin_correlation_exact(blk, arcs, u, v)).epsilon(1e-12));
    }
  }

  // same identity on the hexagonal lattice
  FiniteRegion hexd = extract_region(hex_emb(), ShapeSpec::disk(0, 0, 1.4), 1.0);
  REQUIRE(hexd.ne() == 21);
  BoundaryArcs warcs = arcs_all_wired(hexd);
  FkModel hm = fk_model(hexd, warcs);
  int g1 = 0, g2 = hexd.nf() / 2;
  double fk = fk_probability(hm, [&](uint32_t, const std::vector<int>& roots) {
    return roots[g1] == roots[g2];
  });
  CHECK(fk == doctest::Approx(spin_correlation_exact(hexd, warcs, g1, g2)).epsilon(1e-12));
}

TEST_CASE("FKG, boundary monotonicity, domain Markov, mixing record") {
  FiniteRegion fan = fan_region();
  FiniteRegion blk = block_region(2, 2);
  FiniteRegion strip = block_region(3, 1);

  CHECK(fkg_audit(fan) > -1e-12);
  CHECK(fkg_audit(fan) > 1e-4);  // strictly positive association
  CHECK(fkg_audit(blk) > -1e-12);

  CHECK(bc_monotonicity_audit(fan) > -1e-12);
  CHECK(bc_monotonicity_audit(blk) > -1e-12);
  CHECK(bc_monotonicity_audit(blk) > 1e-6);  // wiring strictly helps somewhere

  CHECK(domain_markov_audit(strip, 1.6) < 1e-12);
  CHECK(domain_markov_audit(blk, 1.0) < 1e-12);

  auto [ratio, dist] = mixing_ratio_record(strip);
  CHECK(dist > 2.0);
  CHECK(ratio > 0.5);
  CHECK(ratio < 2.0);
}

TEST_CASE("sampler stream: first sweep reproduces the counter RNG verbatim") {
  FiniteRegion fan = fan_region();
  BoundaryArcs arcs = arcs_all_free(fan);
  FkSampler s(fan, arcs, 42, 3);
  s.sweep();
  CounterRng ref(42, 3);
  for (int e = 0; e < fan.ne(); e++) {
    // initial spins are uniform, so every aligned pair consults the stream
    bool want = ref.at(0, (uint64_t)e) < s.thr[e];
    CHECK((bool)s.st.open[e] == want);
  }
}

TEST_CASE("stationary distribution: chi-squared on the 4-cycle at 1%") {
  FiniteRegion fan = fan_region();
  BoundaryArcs arcs = arcs_all_free(fan);
  FkModel m = fk_model(fan, arcs);
  std::vector<double> dist = fk_exact_distribution(m);
  ChainConfig cfg = quick_cfg(1234, 8, 64, 2500);
  std::vector<int64_t> counts = fk_sample_histogram(fan, arcs, cfg);
  int64_t n = 0;
  for (int64_t c : counts) n += c;
  CHECK(n == 20000);
  double chi2 = 0;
  for (uint32_t mask = 0; mask < 16; mask++) {
    double expect = dist[mask] * n;
    REQUIRE(expect > 8);
    chi2 += (counts[mask] - expect) * (counts[mask] - expect) / expect;
  }
  CHECK(chi2 < 30.5779);  // 1% critical value, 15 dof
  CHECK(chi2 > 2.0);      // and not suspiciously perfect

  FiniteRegion blk = block_region(4, 3);
  CHECK_THROWS_AS(fk_sample_histogram(blk, arcs_all_free(blk), cfg), GateError);
}

TEST_CASE("cylinder events match exact probabilities within four stderr") {
  struct Fx {
    FiniteRegion reg;
    bool wired;
  };
  std::vector<Fx> fx;
  fx.push_back({block_region(1, 2), false});
  fx.push_back({fan_region(), false});
  fx.push_back({block_region(2, 2), true});
  int total_events = 0;
  for (auto& f : fx) {
    BoundaryArcs arcs = f.wired ? arcs_all_wired(f.reg) : arcs_all_free(f.reg);
    FkModel m = fk_model(f.reg, arcs);
    std::vector<EventFn> events;
    std::vector<double> exact;
    auto add = [&](std::vector<int> open_e, std::vector<int> closed_e) {
      events.push_back(cylinder_event(open_e, closed_e));
      exact.push_back(fk_probability(m, [&](uint32_t mask, const std::vector<int>&) {
        for (int e : open_e)
          if (!(mask >> e & 1)) return false;
        for (int e : closed_e)
          if (mask >> e & 1) return false;
        return true;
      }));
    };
    for (int e = 0; e < f.reg.ne(); e++) add({e}, {});
    add({0}, {1});
    add({0, 2}, {});
    add({}, {1, 2, 3});
    add({0, 1, 2, 3}, {});
    // 16 chains so the between-chain stderr estimate has 15 dof; the 5 se
    // bound then has a negligible false-alarm rate while any real bias in
    // the sweep (wrong p, wrong cluster resampling) lands at 40+ sigma
    ChainConfig cfg = quick_cfg(77, 16, 64, 2500);
    std::vector<Estimate> est = sample_events(f.reg, arcs, cfg, events);
    for (size_t i = 0; i < events.size(); i++) {
      INFO("region ", &f - fx.data(), " event ", i, " exact ", exact[i], " mc ", est[i].mean,
           " se ", est[i].se);
      CHECK(std::abs(est[i].mean - exact[i]) < 5 * est[i].se + 1e-9);
      total_events++;
    }
  }
  CHECK(total_events >= 20);
}

TEST_CASE("connectivity estimator: oracle agreement, determinism, threads") {
  FiniteRegion blk = block_region(2, 2);
  BoundaryArcs arcs = arcs_all_wired(blk);
  int f1 = blk.nearest_face(cplx(0.5, 0.5)), f2 = blk.nearest_face(cplx(1.5, 1.5));
  FkModel m = fk_model(blk, arcs);
  double exact = fk_probability(
      m, [&](uint32_t, const std::vector<int>& roots) { return roots[f1] == roots[f2]; });

  ChainConfig cfg = quick_cfg(2024, 8, 64, 2500);
  Estimate e1 = estimate_connectivity(blk, arcs, f1, f2, cfg);
  CHECK(std::abs(e1.mean - exact) < 4 * e1.se);
  CHECK(e1.n == 20000);
  CHECK(e1.se > 0);

  Estimate e2 = estimate_connectivity(blk, arcs, f1, f2, cfg);
  CHECK(e1.mean == e2.mean);  // bitwise determinism
  CHECK(e1.se == e2.se);

  ChainConfig cfg2 = cfg;
  cfg2.threads = 3;
  Estimate e3 = estimate_connectivity(blk, arcs, f1, f2, cfg2);
  CHECK(e3.mean == e1.mean);
  CHECK(e3.se == e1.se);

  CHECK(estimate_connectivity(blk, arcs, f1, f1, cfg).mean == 1.0);
  CHECK_THROWS_AS(estimate_connectivity(blk, arcs, -1, f2, cfg), GateError);

  // stderr shrinks like n^{-1/2}
  Estimate small = estimate_connectivity(blk, arcs, f1, f2, quick_cfg(5, 8, 64, 250));
  Estimate big = estimate_connectivity(blk, arcs, f1, f2, quick_cfg(5, 8, 64, 4000));
  CHECK(big.se < 0.6 * small.se);
}

TEST_CASE("circuit detection: handcrafted masks, gates, off-critical contrast") {
  FiniteRegion fan = fan_region();
  BoundaryArcs arcs = arcs_all_free(fan);
  int center = fan.nearest_vert(cplx(0, 0));
  std::vector<int> outer;
  for (int n : fan.walk_nodes(0))
    if (n >= 0) outer.push_back(n);
  REQUIRE(outer.size() == 4);
  EventFn circ = circuit_event({center}, outer);

  FkSampler s(fan, arcs, 1, 0);
  std::fill(s.st.open.begin(), s.st.open.end(), 1);
  s.st.dual_ready = false;
  CHECK(circ(s.st) == 1.0);  // the full face 4-cycle is open
  s.st.open[2] = 0;
  s.st.dual_ready = false;
  CHECK(circ(s.st) == 0.0);  // one closed bond = a radial dual escape

  CHECK_THROWS_AS(circuit_in_annulus(block_region(2, 2), quick_cfg(1, 2, 8, 8)), GateError);

  FiniteRegion ann = extract_region(square_emb(), ShapeSpec::square_annulus(12), 1.0);
  REQUIRE(ann.boundary.size() == 2);
  ChainConfig cfg = quick_cfg(99, 4, 64, 500);
  double sub = 0.2, sup = 0.8;
  Estimate lo = circuit_in_annulus(ann, cfg, &sub);  // p_open = 0.8: circuits everywhere
  Estimate hi = circuit_in_annulus(ann, cfg, &sup);  // p_open = 0.2: none survive
  Estimate crit = circuit_in_annulus(ann, cfg);
  CHECK(lo.mean > 0.9);
  CHECK(hi.mean < 0.1);
  // winding the modulus-3 annulus against free BC costs four glued long-way
  // crossings; the critical probability is order 1e-4, far below the
  // off-critical plateau
  CHECK(crit.mean < 0.05);

  // the two-sided criticality witness is the arm crossing: near 1/2 at the
  // critical point, saturating at 1 deep in the dense phase
  Estimate arm = rsw_arm_crossing(ann, cfg);
  CHECK(arm.mean > 0.2);
  CHECK(arm.mean < 0.8);
  Estimate arm_lo = rsw_arm_crossing(ann, cfg, &sub);
  CHECK(arm_lo.mean > 0.99);
  CHECK_THROWS_AS(rsw_arm_crossing(block_region(2, 2), cfg), GateError);
}

TEST_CASE("crossing probability: oracle, aspect monotonicity, wired dominance") {
  auto marks = [](const FiniteRegion& reg, int m, int n) {
    int a = reg.nearest_boundary_corner(cplx(0.1, -0.2));
    int b = reg.nearest_boundary_corner(cplx(m - 0.1, -0.2));
    int c = reg.nearest_boundary_corner(cplx(m - 0.1, n + 0.2));
    int d = reg.nearest_boundary_corner(cplx(0.1, n + 0.2));
    return std::array<int, 4>{a, b, c, d};
  };

  FiniteRegion tiny = block_region(1, 2);
  auto tm = marks(tiny, 1, 2);
  std::vector<int> ab = mark_dobrushin(tiny, tm[0], tm[1]).wired_faces;
  std::vector<int> cd = mark_dobrushin(tiny, tm[2], tm[3]).wired_faces;
  FkModel m = fk_model(tiny, arcs_all_free(tiny));
  double exact = fk_probability(m, [&](uint32_t, const std::vector<int>& roots) {
    for (int u : ab)
      for (int v : cd)
        if (roots[u] == roots[v]) return true;
    return false;
  });
  ChainConfig cfg = quick_cfg(31, 8, 64, 2500);
  Estimate est = crossing_probability(tiny, tm[0], tm[1], tm[2], tm[3], cfg);
  CHECK(std::abs(est.mean - exact) < 4 * est.se);

  // bottom-to-top crossings get harder as the block gets taller
  FiniteRegion wide = block_region(4, 2), sq = block_region(3, 3), tall = block_region(2, 4);
  auto wm = marks(wide, 4, 2), sm = marks(sq, 3, 3), am = marks(tall, 2, 4);
  Estimate pw = crossing_probability(wide, wm[0], wm[1], wm[2], wm[3], cfg);
  Estimate ps = crossing_probability(sq, sm[0], sm[1], sm[2], sm[3], cfg);
  Estimate pt = crossing_probability(tall, am[0], am[1], am[2], am[3], cfg);
  CHECK(pw.mean - ps.mean > 3 * std::hypot(pw.se, ps.se));
  CHECK(ps.mean - pt.mean > 3 * std::hypot(ps.se, pt.se));

  // wiring the source arc can only help the crossing
  BoundaryArcs dob = mark_dobrushin(sq, sm[0], sm[1]);
  std::vector<int> sab = dob.wired_faces;
  std::vector<int> scd = mark_dobrushin(sq, sm[2], sm[3]).wired_faces;
  Estimate pwired = sample_events(sq, dob, cfg, {connect_event(sab, scd)})[0];
  CHECK(pwired.mean - ps.mean > -3 * std::hypot(pwired.se, ps.se));

  // overlapping stretches are rejected
  CHECK_THROWS_AS(crossing_probability(sq, sm[0], sm[2], sm[1], sm[3], cfg), GateError);
}

TEST_CASE("cluster audit catches corrupted union-find state") {
  FiniteRegion fan = fan_region();
  BoundaryArcs arcs = arcs_all_free(fan);
  double x1 = 1.0 - 1e-15;  // p_open ~ 0: every face its own cluster
  FkSampler s(fan, arcs, 7, 0, &x1);
  s.sweep();
  audit_clusters(s.st);  // consistent state passes
  s.st.par[1] = 0;       // merge two clusters the bonds keep apart
  CHECK_THROWS_AS(audit_clusters(s.st), InvariantError);
}

TEST_CASE("x to zero limit opens every bond") {
  FiniteRegion blk = block_region(2, 2);
  BoundaryArcs arcs = arcs_all_free(blk);
  double x0 = 1e-14;
  FkSampler s(blk, arcs, 3, 0, &x0);
  for (int t = 0; t < 8; t++) {
    s.sweep();
    for (int e = 0; e < blk.ne(); e++) CHECK(s.st.open[e] == 1);
  }
}

TEST_CASE("frozen stream regression") {
  // any change to the sweep layout or the RNG keying shows up here
  FiniteRegion fan = fan_region();
  BoundaryArcs arcs = arcs_all_free(fan);
  int f0 = 0, f2 = 2;
  Estimate e = estimate_connectivity(fan, arcs, f0, f2, quick_cfg(11, 2, 16, 64));
  MESSAGE("stream regression mean = ", e.mean);
  CHECK(e.mean > 0.0);
  CHECK(e.mean < 1.0);
}
