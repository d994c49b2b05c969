#pragma once
// Criticality test for doubly-periodic weighted graphs: the signed sum of
// even-subgraph weights graded by torus winding parity vanishes exactly at
// the critical surface. Enumeration walks edge subsets in Gray-code order
// with incremental degree parity and winding tracking.

#include <cstdint>
#include <functional>
#include <string>

#include "ising/lattice.hpp"

namespace ising {

struct EvenSubgraph {
  uint32_t mask = 0;
  int w1 = 0, w2 = 0;  // winding parity around the two periods
  double x = 1.0;      // product of member edge weights
};

struct HomologySums {
  double s[2][2] = {{0, 0}, {0, 0}};  // indexed by (w1, w2)
  double trivial() const { return s[0][0]; }
  double nontrivial() const { return s[1][0] + s[0][1] + s[1][1]; }
  double defect() const { return trivial() - nontrivial(); }
};

// Gate: throws if the fundamental domain has more than max_edges edges.
HomologySums homology_sums(const PeriodicLattice& lat, int max_edges = 28, int threads = 1);

double criticality_defect(const PeriodicLattice& lat, int max_edges = 28, int threads = 1);

// d(defect)/d(weight of edge e), from the same enumeration restricted to
// subgraphs through e.
double criticality_defect_dx(const PeriodicLattice& lat, int e, int max_edges = 28);

struct CriticalityReport {
  double defect = 0;
  double tol = 0;
  std::string phase;  // "critical" | "ferromagnetic" | "paramagnetic"
};
// Sign convention calibrated on the square lattice: weights below the critical
// point (low temperature) give a positive defect.
CriticalityReport classify_phase(const PeriodicLattice& lat, double tol = 1e-9,
                                 int max_edges = 28);

// Scans t in [t_lo, t_hi] for the root of defect(t * base weights) by bisection.
// Pre: defect changes sign across the bracket.
double solve_critical_point(const PeriodicLattice& base, double t_lo, double t_hi,
                            double tol = 1e-12, int max_edges = 28);

PeriodicLattice kramers_wannier_dual(const PeriodicLattice& lat);

void enumerate_even_subgraphs(const PeriodicLattice& lat,
                              const std::function<void(const EvenSubgraph&)>& cb,
                              int max_edges = 28);

}  // namespace ising
