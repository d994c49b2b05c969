#pragma once
// Periodic s-embedding of a critical lattice. The propagation relations around
// each quad (angle theta) are assembled per period-sign sector; at criticality
// exactly one sector carries a two-dimensional real kernel (u, v). The complex
// spinor is X = u + tau*v with tau fixed by closing the Q-periods; S and Q then
// integrate from the corner increments S(v)-S(f) = X(c)^2, Q(v)-Q(f) = |X(c)|^2.

#include <array>
#include <complex>
#include <vector>

#include "ising/double_cover.hpp"
#include "ising/lattice.hpp"

namespace ising {

using cplx = std::complex<double>;

struct SectorScan {
  double min_sv[2][2];   // smallest singular value, index ((1-s1)/2, (1-s2)/2)
  int kernel_dim[2][2];
  int s1 = 0, s2 = 0;    // accepted sector, 0 if none
};

struct SEmbedding {
  PeriodicLattice lat;
  DoubleCover dc;
  int s1 = 1, s2 = 1;
  cplx tau;
  std::vector<double> u, v;   // kernel basis per corner
  std::vector<cplx> X;        // u + tau v
  std::vector<cplx> Sv, Sf;   // node images, canonical cell
  std::vector<double> Qv, Qf;
  cplx L1, L2;                // S-periods
  double q1 = 0, q2 = 0;      // residual Q-periods (should be ~0)
  std::vector<cplx> Sz;       // incircle center per quad
  std::vector<double> rz;     // inradius per quad

  cplx S_vertex(int vtx, int a1, int a2) const {
    return Sv[vtx] + (double)a1 * L1 + (double)a2 * L2;
  }
  cplx S_face(int f, int a1, int a2) const {
    return Sf[f] + (double)a1 * L1 + (double)a2 * L2;
  }
  cplx S_quad(int e, int a1, int a2) const {
    return Sz[e] + (double)a1 * L1 + (double)a2 * L2;
  }
  // the four quad corner points (v0, f_right, v1, f_left) in cell (a1,a2)
  std::array<cplx, 4> quad_points(int e, int a1 = 0, int a2 = 0) const;
  // sector sign picked up by X when the canonical corner copy is moved by (a1,a2)
  double sector_sign(int a1, int a2) const {
    return ((a1 & 1) && s1 < 0 ? -1.0 : 1.0) * ((a2 & 1) && s2 < 0 ? -1.0 : 1.0);
  }
};

SectorScan scan_sectors(const PeriodicLattice& lat, const DoubleCover& dc, double tol = 1e-8);

// Throws GateError when no sector has a 2-dim kernel (lattice not critical).
SEmbedding build_s_embedding(const PeriodicLattice& lat);

// Geometric edge angle from the embedded quad's half-angles.
double recover_theta(const SEmbedding& se, int e);

struct UnifReport {
  double r_min = 0, r_max = 0;  // inradius range over the fundamental domain
  double theta_min = 0;         // min of min(theta, pi-theta) from geometry
};
UnifReport check_unif(const SEmbedding& se);

// Local injectivity over a 3x3 block of cells: positively oriented convex
// quads and full 2*pi angle fans around every vertex and face image.
void check_properness(const SEmbedding& se);

}  // namespace ising
