#pragma once
// Arm events and near-critical structure on top of the FK sampler: one-arm
// ladders in the half plane and full plane with log-log slope fits, four-arm
// counting coupled to the one-arm event, quasimultiplicativity ratios, the
// conditioned measure approximating the incipient infinite cluster, and the
// two-point factorization check.
//
// Geometry conventions, fixed once:
//   Lambda_R(z): the open square of side 2R centered at z (in the half-plane
//     strip its boundary is the part inside the strip: top row plus the two
//     side columns).
//   C_r(z): discrete circle of radius r about z = the boundary face layer of
//     the extracted ball, i.e. faces at L-infinity distance in (r-2delta, r].
//     Face adjacency moves centers by less than 2delta, so no cluster can
//     cross the layer without touching it. Dual circles are the vertex bands
//     at the same radii.
// Continuum centers are snapped to the nearest region face before any
// distance is measured, so translated copies land on translated face sets.

#include <functional>
#include <vector>

#include "ising/fk_mc.hpp"

namespace ising {

// L-infinity distance between scaled positions, reduced around the cylinder
// for strip regions
double linf_dist(const FiniteRegion& reg, cplx a, cplx b);

// faces with |fpos - z|_inf in (r - 2 delta, r]; throws GateError when empty
std::vector<int> circle_faces(const FiniteRegion& reg, cplx z, double r);
// vertices in the same band (dual circles for the four-arm count)
std::vector<int> circle_verts(const FiniteRegion& reg, cplx z, double r);

struct ArmPoint {
  double R = 0;   // scale of this ladder point
  Estimate est;
  bool in_window = false;  // participates in the slope fit
};
struct SlopeFit {
  std::vector<ArmPoint> points;
  double slope = 0, slope_se = 0, intercept = 0;
  int n_used = 0;
};

// Weighted fit of ln P against ln R. The window drops scales below 8 delta
// (microscopic corrections) and points whose relative stderr exceeds 10%;
// fewer than two surviving points is a GateError.
SlopeFit fit_arm_points(std::vector<ArmPoint> pts, double delta);

// P[f <-> boundary of Lambda_R(f)] in the free half-plane strip of height R
// (width 4R, periodic), f the bottom face nearest the cylinder midline; one
// strip per requested R. Slope target is -1/2.
SlopeFit one_arm_half_plane(const SEmbedding& emb, double delta, const std::vector<double>& Rs,
                            const ChainConfig& cfg);

// pi_1(r1, r2) = P[C_{r1}(a) <-> C_{r2}(a)] in a box of side 4 r2 centered
// at a, free boundary (wired = true switches the proxy boundary, a bounded
// factor). pre: 4 delta <= r1 < r2.
Estimate one_arm_annulus(const SEmbedding& emb, double delta, cplx a, double r1, double r2,
                         const ChainConfig& cfg, bool wired = false);

// full-plane ladder at fixed r1: points (r2, pi_1(r1, r2)) fitted as above.
// Slope target is -1/8.
SlopeFit one_arm_ladder(const SEmbedding& emb, double delta, cplx a, double r1,
                        const std::vector<double>& r2s, const ChainConfig& cfg);

struct ArmPair {
  Estimate one, four;
};
// Coupled on the same samples, so the estimate of pi_4 never exceeds the
// estimate of pi_1. one: some cluster meets both circles. four: at least two
// distinct clusters meet both circles and at least two distinct dual
// (closed-bond vertex) clusters meet both vertex bands.
ArmPair four_arm_annulus(const SEmbedding& emb, double delta, cplx a, double r1, double r2,
                         const ChainConfig& cfg);

struct QuasiMult {
  Estimate p13, p12, p23;
  Estimate ratio;  // pi(r1,r3) / (pi(r1,r2) pi(r2,r3)), chain-level ratio
};
// All three arm events evaluated jointly on one box of side 4 r3; the ratio
// is formed per chain, so its stderr carries the cross-correlations.
// Convention pi(r, r) := 1 (a degenerate pair contributes the constant 1).
QuasiMult quasimultiplicativity_report(const SEmbedding& emb, double delta, cplx a, double r1,
                                       double r2, double r3, const ChainConfig& cfg);

// Conditioned measure P_N(B) = phi^0_{Lambda_N}[B | dLambda_R(f0) <->
// dLambda_N(f0)] on the free box of side 2N about the origin. The factory
// receives each extracted box and its center face and returns the event
// list; events must be supported within L-infinity radius `support` of the
// center (gate: support <= N/4). Ratio estimates are formed per chain; a
// chain that never hits the conditioning event, or an overall conditioning
// probability below 1e-3, is a GateError.
using IicEventFactory = std::function<std::vector<EventFn>(const FiniteRegion&, int f0)>;
struct IicPoint {
  double N = 0;
  Estimate cond;                // conditioning probability
  std::vector<Estimate> value;  // P_N(B) per event
};
std::vector<IicPoint> iic_conditioned(const SEmbedding& emb, double delta, double R,
                                      double support, const std::vector<double>& Ns,
                                      const IicEventFactory& make_events, const ChainConfig& cfg);

// One-point function under the conditioned measure: P_N[f <-> dLambda_{N/2}(f)]
// given C_eps(f) <-> dLambda_N(f), free box of side 2N at f. This is the
// finite-volume stand-in for the conditioned connection to infinity.
Estimate iic_arm_proxy(const SEmbedding& emb, double delta, cplx a, double eps, double N,
                       const ChainConfig& cfg);

struct FactorReport {
  Estimate lhs;     // phi^1_Omega[a <-> b], Omega the wired box of side 4|a-b|
  Estimate bridge;  // phi^1_Omega[C_eps(a) <-> C_eps(b)]
  Estimate iic_a, iic_b;  // conditioned arm proxies at the two points
  Estimate multi;         // P[>= 2 distinct clusters join the circles | joined]
  double rhs = 0, rhs_se = 0;
  double ratio = 0, ratio_se = 0;  // lhs / rhs
};
// Factorization of the two-point function through the circles C_eps: compares
// phi[a <-> b] against phi[C_eps(a) <-> C_eps(b)] * Phi(a) * Phi(b) with the
// conditioned one-point proxies at N = |a-b|/2. Gates: a != b, delta <=
// eps/8, eps <= |a-b|/4.
FactorReport factorization_check(const SEmbedding& emb, double delta, cplx a, cplx b, double eps,
                                 const ChainConfig& cfg);

}  // namespace ising
