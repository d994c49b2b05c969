#include "ising/exponents.hpp"

#include <algorithm>
#include <cmath>

#include "ising/util.hpp"

namespace ising {

double linf_dist(const FiniteRegion& reg, cplx a, cplx b) {
  double dx = std::fabs(a.real() - b.real());
  double dy = std::fabs(a.imag() - b.imag());
  if (reg.wrap > 0) {
    double w = reg.wrap * reg.delta * reg.emb->L1.real();
    dx = std::fmod(dx, w);
    dx = std::min(dx, w - dx);
  }
  return std::max(dx, dy);
}

// embedded positions are solver output, so band membership gets a tolerance
// far below the face spacing
std::vector<int> circle_faces(const FiniteRegion& reg, cplx z, double r) {
  std::vector<int> out;
  double lo = r - 2 * reg.delta, tol = 1e-9 * reg.delta;
  for (int f = 0; f < reg.nf(); f++) {
    double d = linf_dist(reg, reg.fpos(f), z);
    if (d > lo + tol && d <= r + tol) out.push_back(f);
  }
  if (out.empty()) throw GateError("discrete circle holds no faces at radius " + fmt_g17(r));
  return out;
}

std::vector<int> circle_verts(const FiniteRegion& reg, cplx z, double r) {
  std::vector<int> out;
  double lo = r - 2 * reg.delta, tol = 1e-9 * reg.delta;
  for (int v = 0; v < reg.nv(); v++) {
    double d = linf_dist(reg, reg.vpos(v), z);
    if (d > lo + tol && d <= r + tol) out.push_back(v);
  }
  if (out.empty()) throw GateError("dual circle holds no vertices at radius " + fmt_g17(r));
  return out;
}

SlopeFit fit_arm_points(std::vector<ArmPoint> pts, double delta) {
  SlopeFit out;
  std::vector<double> lx, ly, ls;
  for (auto& p : pts) {
    p.in_window = p.R >= 8 * delta - 1e-12 && p.est.mean > 0 &&
                  p.est.se <= 0.10 * p.est.mean;
    if (p.in_window) {
      lx.push_back(std::log(p.R));
      ly.push_back(std::log(p.est.mean));
      ls.push_back(p.est.se / p.est.mean);
    }
  }
  if (lx.size() < 2) throw GateError("fewer than two ladder points survive the fit window");
  LineFit lf = fit_line_weighted(lx, ly, ls);
  out.points = std::move(pts);
  out.intercept = lf.a;
  out.slope = lf.b;
  out.slope_se = lf.sb;
  out.n_used = (int)lx.size();
  return out;
}

SlopeFit one_arm_half_plane(const SEmbedding& emb, double delta, const std::vector<double>& Rs,
                            const ChainConfig& cfg) {
  std::vector<ArmPoint> pts;
  for (double R : Rs) {
    if (R < 2 * delta) throw GateError("half-plane arm scale below two mesh units");
    FiniteRegion reg = extract_region(emb, ShapeSpec::halfplane_strip(R), delta);
    double width = reg.wrap * delta * emb.L1.real();
    int f0 = reg.nearest_face(cplx(width / 2, delta / 2));
    cplx zf = reg.fpos(f0);
    Estimate est = sample_events(reg, arcs_all_free(reg), cfg,
                                 {connect_event({f0}, circle_faces(reg, zf, R))})[0];
    pts.push_back({R, est, false});
  }
  return fit_arm_points(std::move(pts), delta);
}

// free (or wired) box of side 4*rmax centered on the face nearest a
static FiniteRegion arm_box(const SEmbedding& emb, double delta, cplx a, double rmax) {
  double H = 2 * rmax;
  return extract_region(
      emb, ShapeSpec::rect(a.real() - H, a.imag() - H, a.real() + H, a.imag() + H), delta);
}

Estimate one_arm_annulus(const SEmbedding& emb, double delta, cplx a, double r1, double r2,
                         const ChainConfig& cfg, bool wired) {
  if (r1 < 4 * delta - 1e-12 || !(r1 < r2))
    throw GateError("arm radii must satisfy 4 delta <= r1 < r2");
  FiniteRegion reg = arm_box(emb, delta, a, r2);
  cplx za = reg.fpos(reg.nearest_face(a));
  EventFn ev = connect_event(circle_faces(reg, za, r1), circle_faces(reg, za, r2));
  BoundaryArcs arcs = wired ? arcs_all_wired(reg) : arcs_all_free(reg);
  return sample_events(reg, arcs, cfg, {ev})[0];
}

SlopeFit one_arm_ladder(const SEmbedding& emb, double delta, cplx a, double r1,
                        const std::vector<double>& r2s, const ChainConfig& cfg) {
  std::vector<ArmPoint> pts;
  for (double r2 : r2s)
    pts.push_back({r2, one_arm_annulus(emb, delta, a, r1, r2, cfg), false});
  return fit_arm_points(std::move(pts), delta);
}

// distinct roots represented in both lists under the given find
template <class Find>
static int joint_roots(Find&& find, const std::vector<int>& sa, const std::vector<int>& sb) {
  std::vector<int> ra, rb;
  ra.reserve(sa.size());
  for (int x : sa) ra.push_back(find(x));
  std::sort(ra.begin(), ra.end());
  ra.erase(std::unique(ra.begin(), ra.end()), ra.end());
  rb.reserve(sb.size());
  for (int x : sb) rb.push_back(find(x));
  std::sort(rb.begin(), rb.end());
  rb.erase(std::unique(rb.begin(), rb.end()), rb.end());
  std::vector<int> both;
  std::set_intersection(ra.begin(), ra.end(), rb.begin(), rb.end(), std::back_inserter(both));
  return (int)both.size();
}

ArmPair four_arm_annulus(const SEmbedding& emb, double delta, cplx a, double r1, double r2,
                         const ChainConfig& cfg) {
  if (r1 < 4 * delta - 1e-12 || !(r1 < r2))
    throw GateError("arm radii must satisfy 4 delta <= r1 < r2");
  FiniteRegion reg = arm_box(emb, delta, a, r2);
  cplx za = reg.fpos(reg.nearest_face(a));
  std::vector<int> C1 = circle_faces(reg, za, r1), C2 = circle_faces(reg, za, r2);
  std::vector<int> V1 = circle_verts(reg, za, r1), V2 = circle_verts(reg, za, r2);
  EventFn one = connect_event(C1, C2);
  EventFn four = [C1, C2, V1, V2](FkState& st) {
    auto pf = [&st](int f) { return st.find(f); };
    if (joint_roots(pf, C1, C2) < 2) return 0.0;
    st.build_dual();
    auto df = [&st](int v) { return st.dfind(v); };
    return joint_roots(df, V1, V2) >= 2 ? 1.0 : 0.0;
  };
  std::vector<Estimate> est = sample_events(reg, arcs_all_free(reg), cfg, {one, four});
  return {est[0], est[1]};
}

// per-chain ratio estimate mean(num)/mean(den); starved chains are a gate
// failure because the budget, not the model, is at fault
static Estimate chain_ratio(const Estimate& num, const Estimate& den) {
  std::vector<double> r(num.chain_mean.size());
  for (size_t i = 0; i < r.size(); i++) {
    if (den.chain_mean[i] <= 0)
      throw GateError("a chain never hit the conditioning event; raise n_samples");
    r[i] = num.chain_mean[i] / den.chain_mean[i];
  }
  return combine_chains(r, num.n, num.seed);
}

QuasiMult quasimultiplicativity_report(const SEmbedding& emb, double delta, cplx a, double r1,
                                       double r2, double r3, const ChainConfig& cfg) {
  if (r1 < 4 * delta - 1e-12 || r2 < r1 || r3 < r2 || !(r1 < r3))
    throw GateError("quasimultiplicativity needs 4 delta <= r1 <= r2 <= r3, r1 < r3");
  FiniteRegion reg = arm_box(emb, delta, a, r3);
  cplx za = reg.fpos(reg.nearest_face(a));
  auto pair_event = [&](double ra, double rb) -> EventFn {
    if (ra == rb) return [](FkState&) { return 1.0; };  // pi(r, r) := 1
    return connect_event(circle_faces(reg, za, ra), circle_faces(reg, za, rb));
  };
  std::vector<Estimate> est =
      sample_events(reg, arcs_all_free(reg), cfg,
                    {pair_event(r1, r3), pair_event(r1, r2), pair_event(r2, r3)});
  QuasiMult q;
  q.p13 = est[0];
  q.p12 = est[1];
  q.p23 = est[2];
  std::vector<double> r(est[0].chain_mean.size());
  for (size_t i = 0; i < r.size(); i++) {
    double den = est[1].chain_mean[i] * est[2].chain_mean[i];
    if (den <= 0) throw GateError("a chain never hit the short arm events; raise n_samples");
    r[i] = est[0].chain_mean[i] / den;
  }
  q.ratio = combine_chains(r, est[0].n, est[0].seed);
  return q;
}

std::vector<IicPoint> iic_conditioned(const SEmbedding& emb, double delta, double R,
                                      double support, const std::vector<double>& Ns,
                                      const IicEventFactory& make_events,
                                      const ChainConfig& cfg) {
  std::vector<IicPoint> out;
  for (double N : Ns) {
    if (!(R < N)) throw GateError("conditioning annulus needs R < N");
    if (support > N / 4 + 1e-12)
      throw GateError("event support exceeds a quarter of the box scale");
    FiniteRegion reg = arm_box(emb, delta, cplx(0, 0), N / 2);  // box of side 2N
    int f0 = reg.nearest_face(cplx(0, 0));
    cplx z0 = reg.fpos(f0);
    EventFn cond = connect_event(circle_faces(reg, z0, R), circle_faces(reg, z0, N));
    std::vector<EventFn> evs = make_events(reg, f0);
    std::vector<EventFn> all{cond};
    for (auto& B : evs)
      all.push_back([B, cond](FkState& st) { return cond(st) == 0 ? 0.0 : B(st); });
    std::vector<Estimate> est = sample_events(reg, arcs_all_free(reg), cfg, all);
    if (est[0].mean < 1e-3)
      throw GateError("conditioning probability fell below 1e-3; shrink N or R");
    IicPoint pt;
    pt.N = N;
    pt.cond = est[0];
    for (size_t k = 1; k < est.size(); k++) pt.value.push_back(chain_ratio(est[k], est[0]));
    out.push_back(std::move(pt));
  }
  return out;
}

Estimate iic_arm_proxy(const SEmbedding& emb, double delta, cplx a, double eps, double N,
                       const ChainConfig& cfg) {
  if (eps > N / 2 + 1e-12)
    throw GateError("conditioning circle must sit inside half the box");
  FiniteRegion reg = arm_box(emb, delta, a, N / 2);  // box of side 2N at a
  cplx za = reg.fpos(reg.nearest_face(a));
  EventFn cond = connect_event(circle_faces(reg, za, eps), circle_faces(reg, za, N));
  EventFn arm = connect_event({reg.nearest_face(a)}, circle_faces(reg, za, N / 2));
  std::vector<Estimate> est = sample_events(
      reg, arcs_all_free(reg), cfg,
      {cond, [arm, cond](FkState& st) { return cond(st) == 0 ? 0.0 : arm(st); }});
  if (est[0].mean < 1e-3)
    throw GateError("conditioning probability fell below 1e-3; shrink N or eps");
  return chain_ratio(est[1], est[0]);
}

FactorReport factorization_check(const SEmbedding& emb, double delta, cplx a, cplx b, double eps,
                                 const ChainConfig& cfg) {
  double r = std::abs(a - b);
  if (!(r > 0)) throw GateError("factorization needs two distinct points");
  if (delta > eps / 8 + 1e-12) throw GateError("mesh too coarse: need delta <= eps/8");
  if (eps > r / 4 + 1e-12) throw GateError("circle too large: need eps <= |a-b|/4");

  cplx mid = (a + b) / 2.0;
  FiniteRegion reg = arm_box(emb, delta, mid, r);  // wired box of side 4r
  int fa = reg.nearest_face(a), fb = reg.nearest_face(b);
  cplx za = reg.fpos(fa), zb = reg.fpos(fb);
  std::vector<int> Ca = circle_faces(reg, za, eps), Cb = circle_faces(reg, zb, eps);
  EventFn bridge = connect_event(Ca, Cb);
  EventFn multi2 = [Ca, Cb](FkState& st) {
    auto pf = [&st](int f) { return st.find(f); };
    return joint_roots(pf, Ca, Cb) >= 2 ? 1.0 : 0.0;
  };
  std::vector<Estimate> est = sample_events(reg, arcs_all_wired(reg), cfg,
                                            {connect_event({fa}, {fb}), bridge, multi2});
  FactorReport rep;
  rep.lhs = est[0];
  rep.bridge = est[1];
  rep.multi = chain_ratio(est[2], est[1]);
  rep.iic_a = iic_arm_proxy(emb, delta, a, eps, r / 2, cfg);
  rep.iic_b = iic_arm_proxy(emb, delta, b, eps, r / 2, cfg);

  rep.rhs = rep.bridge.mean * rep.iic_a.mean * rep.iic_b.mean;
  auto rel = [](const Estimate& e) { return e.mean > 0 ? e.se / e.mean : 0.0; };
  double rel_rhs = std::sqrt(rel(rep.bridge) * rel(rep.bridge) + rel(rep.iic_a) * rel(rep.iic_a) +
                             rel(rep.iic_b) * rel(rep.iic_b));
  rep.rhs_se = rep.rhs * rel_rhs;
  if (!(rep.rhs > 0)) throw GateError("factorization right side vanished; raise n_samples");
  rep.ratio = rep.lhs.mean / rep.rhs;
  rep.ratio_se = rep.ratio * std::sqrt(rel(rep.lhs) * rel(rep.lhs) + rel_rhs * rel_rhs);
  return rep;
}

}  // namespace ising
