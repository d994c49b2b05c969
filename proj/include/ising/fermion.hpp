#pragma once
// Exact Kadanoff-Ceva observables on small finite regions, computed by
// Gray-code summation over edge subsets (hard cap 26 edges, 64 vertices).
// Correlators are ratios of constrained even-subgraph sums; the FK-Dobrushin
// corner observable is sign-resolved into a coherent section of the corner
// double cover, extended to an s-holomorphic F per quad, and integrated into
// the primitives H and I_C used by the boundary identities.
//
// Conventions: spins sigma live on faces, disorders mu on vertices. Spin
// insertions flip the weight sign across a dual defect path; disorder
// insertions switch the degree parity required at their vertices. For the
// Dobrushin observable the normalization fixes X(a) = +1 on the stored lift,
// H is anchored to 0 on the wired arc and I_C to 0 at corner a's vertex.

#include <array>
#include <complex>
#include <vector>

#include "ising/region.hpp"

namespace ising {

// Even-subgraph sum Z = sum over C with even degree at every constrained
// vertex (bc.vert_even) of prod_{e in C} x_e. Throws GateError over budget.
double partition_function(const FiniteRegion& reg, const BoundaryArcs& bc);

// E[sigma_{f1} sigma_{f2}] for two region faces: signed sum across a dual
// defect path over Z. Recomputed internally with a second path; a mismatch
// beyond 1e-12 throws InvariantError.
double spin_correlation_exact(const FiniteRegion& reg, const BoundaryArcs& bc, int rf1, int rf2);

// E[mu_{v1} mu_{v2}] for two constrained region vertices: ratio of the
// odd-at-{v1,v2} sum to Z, cross-checked against the weight-flip method
// along an explicit path (InvariantError on disagreement).
double disorder_correlation_exact(const FiniteRegion& reg, const BoundaryArcs& bc, int rv1,
                                  int rv2);

// Raw signed corner sum T(c) with an explicit dual defect path given as a
// region-edge set (the path connects face(c) to the anchor face bc.a's face;
// for uniform BC any reference face). Exposed for path-independence and
// sign-flip tests; fk_observable_exact uses tree paths internally.
double corner_sum_exact(const FiniteRegion& reg, const BoundaryArcs& bc, int rc,
                        const std::vector<int>& dual_path);

struct ExactObservable {
  const FiniteRegion* reg = nullptr;
  BoundaryArcs arcs;
  RegionCover cov;         // quad-branched cover used for the reference spinor
  std::vector<cplx> W;     // reference corner spinor, W^2 = corner_sq
  double Z = 0;
  std::vector<double> T;   // raw signed corner sums, T(a) = T(b) = Z
  std::vector<double> X;   // coherent section with X(a) = +1
  std::vector<std::array<double, 4>> D;  // dressed quad tuples T/|T(a)|
  std::vector<double> theta;              // per quad
  std::vector<cplx> F;                    // per quad
  double row_residual = 0;   // worst relative three-term residual
  double shol_residual = 0;  // worst projection mismatch at interior corners
};

// The FK-Dobrushin observable X(c) = E[chi_c sigma mu] / normalization on a
// simply connected region with marked arcs. Throws GateError when arcs carry
// no marked corners, the region wraps, or the budget is exceeded;
// InvariantError when sign resolution or the three-term relations fail.
ExactObservable fk_observable_exact(const FiniteRegion& reg, const BoundaryArcs& arcs);

// F on one quad from two corner values; throws GateError when the corner
// directions are collinear (Im[conj(W1) W2] = 0).
cplx f_from_pair(cplx W1, cplx W2, double X1, double X2);

// Per-quad F from corner values on the W lift, using the best-conditioned
// corner pair of each quad; a quad with all pairs collinear is rejected.
std::vector<cplx> f_from_x(const FiniteRegion& reg, const std::vector<cplx>& W,
                           const std::vector<double>& X);
// Per-corner projections X(c) = |W(c)| Re[conj(eta_c) F(z)] evaluated on an
// incident quad. Inverse of f_from_x on propagating data.
std::vector<double> x_from_f(const FiniteRegion& reg, const std::vector<cplx>& W,
                             const std::vector<cplx>& F);

// Real field on Lambda nodes (values per region vertex / face).
struct LambdaField {
  std::vector<double> v, f;
};

// Integrate (Im[F^2 dS] + |F|^2 dQ) / 2 over corner segments, anchored to 0
// at base_rf; the half compensates the spinor scale |W|^2 = |dS| so each
// corner increments by exactly X(c)^2 on propagating data. closure gets the
// worst per-corner mismatch between the two incident quads plus the worst
// cycle defect.
LambdaField accumulate_hf(const FiniteRegion& reg, const std::vector<cplx>& F, int base_rf,
                          double* closure = nullptr);

struct PrimitiveField {
  LambdaField H;            // squared-observable route, H(v) - H(f) = X(c)^2
  std::vector<double> Hq;   // quad centers
  LambdaField HF;           // integral route from F
  std::vector<cplx> Iv, If;  // I_C on Lambda
  int base_rf = -1;          // H anchor (the wired arc through corner a)
  double h_closure = 0;      // worst H inconsistency over corners / quad rows
  double ic_closure = 0;     // worst I_C two-quad mismatch at interior corners
  double hx_hf_gap = 0;      // max |(H - HF) - const|
};

// Both primitive routes for the exact observable, with the quad-center
// values and the route comparison. Throws InvariantError on closure failure.
PrimitiveField primitive_h(const ExactObservable& obs);

// I_C by corner-segment accumulation, anchored to 0 at corner a's vertex.
// Fills Iv/If/ic_closure of the returned field only.
PrimitiveField primitive_ic(const ExactObservable& obs);

// Closed-walk boundary functional of the observable. The walk is split at
// arc nodes (wired faces, free vertices); each hop accumulates the quadratic
// form (F^2 dS + i |F|^2 dQ) / 2 whose imaginary part is the increment of H.
// Hops interior to an arc vanish identically, so the value collects the
// jumps of H at the marked corners: |result| = X(a)^2 + X(b)^2 = 2 exactly
// for Dobrushin regions, independent of mesh and geometry. Throws GateError
// when the walk does not close.
cplx contour_integral(const FiniteRegion& reg, const BoundaryArcs& arcs,
                      const std::vector<cplx>& F, const std::vector<BoundaryStep>& walk);

struct BoundaryPhaseReport {
  double max_im = 0;              // worst |Im[F^2 dS + i |F|^2 dQ] / dS|
  double arg_lo = 0, arg_hi = 0;  // range of arg F over the checked quads
  int npairs = 0;
};

// Phase identity Im[F^2 dS + i |F|^2 dQ] = 0 along straight wired runs: for
// each pair of consecutive wired-arc faces with real positive dS, the form
// is integrated across the two half-quads of the hop and divided by dS; its
// imaginary part is the jump of H between the wired faces. Also reports the
// range of arg F over the touched quads, which stays inside (-pi/4, pi/4).
// Throws GateError when no straight horizontal run exists.
BoundaryPhaseReport boundary_phase_check(const FiniteRegion& reg, const BoundaryArcs& arcs,
                                         const std::vector<cplx>& F);

struct ComparisonReport {
  bool dominated = false;  // interior min >= boundary min - 1e-10
  double interior_min = 0, boundary_min = 0;
  cplx witness = 0;        // position of the interior minimizer
  double osc_c0 = 0;       // measured constant in |F|^2 <= C0 osc(H)/r, 0 if F null
};

// Comparison principle report for H1 - H2 on the region: interior minimum
// versus boundary minimum over Lambda nodes. When F is given, also measures
// the oscillation constant over interior balls of radius 4*delta and
// 8*delta. Reports only; never throws on dominance failure.
ComparisonReport comparison_check(const FiniteRegion& reg, const LambdaField& H1,
                                  const LambdaField& H2, const std::vector<cplx>* F = nullptr);

}  // namespace ising
