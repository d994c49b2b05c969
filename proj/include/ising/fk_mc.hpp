#pragma once
// FK-Ising (q = 2 random cluster) sampling on finite regions. Spins live on
// region faces; each region edge carries the dual bond between its two faces
// with p_open = 1 - x(e). Edwards-Sokal alternation (Swendsen-Wang): a full
// bond refresh given spins, then independent fair spins per cluster. Wired
// arcs are a permanent super node in the union-find, free arcs impose
// nothing. All randomness comes from the counter RNG keyed by
// (seed, chain, sweep, slot), so streams are reproducible and chains never
// overlap regardless of scheduling.
//
// For small regions the same measure is available exactly: fk_enumerate
// walks all bond configurations with weight 2^{#clusters} prod p prod (1-p).
// That enumerator is the oracle for the sampler and for the exact FKG /
// boundary-monotonicity / domain-Markov audits.

#include <array>
#include <cstdint>
#include <functional>
#include <vector>

#include "ising/region.hpp"
#include "ising/rng.hpp"

namespace ising {

// dual bond density of the Ising weight x; on the square lattice at
// x = sqrt(2)-1 this is 2-sqrt(2), the self-dual point of the q = 2 model
inline double fk_p_open(double x) { return 1.0 - x; }

struct ChainConfig {
  uint64_t seed = 1;
  int chains = 8;
  int burn_in = 128;     // discarded sweeps per chain
  int n_samples = 2000;  // retained samples per chain
  int thinning = 1;      // sweeps per retained sample
  int threads = 1;       // chains are the parallel unit
};

struct Estimate {
  double mean = 0, se = 0;  // batch means over chains
  int64_t n = 0;
  uint64_t seed = 0;
  std::vector<double> chain_mean;
};

Estimate combine_chains(const std::vector<double>& chain_means, int64_t n_total, uint64_t seed);

// Bond configuration plus the cluster structure of the current sweep.
// par covers faces with one trailing super node (used when a wired arc is
// present); dpar is the dual union-find over vertices linked by closed
// bonds, built on demand once per sample.
struct FkState {
  const FiniteRegion* reg = nullptr;
  const BoundaryArcs* arcs = nullptr;
  bool wired = false;
  std::vector<uint8_t> open;
  std::vector<int8_t> spin;
  std::vector<int32_t> par;
  std::vector<int32_t> dpar;
  bool dual_ready = false;

  int super() const { return (int)par.size() - 1; }
  int find(int a);
  bool same(int fa, int fb) { return find(fa) == find(fb); }
  int dfind(int a);
  void build_dual();  // idempotent per sample
};

struct FkSampler {
  FkState st;
  CounterRng rng;
  std::vector<uint64_t> thr;  // per-edge threshold for p = 1 - x
  std::vector<int> wired_;    // wired face list
  std::vector<int32_t> sz_;   // union-by-size scratch
  uint64_t t = 0;             // sweeps done

  // x_override, when given, replaces every Ising weight (off-critical audits)
  FkSampler(const FiniteRegion& reg, const BoundaryArcs& arcs, uint64_t seed, uint64_t chain,
            const double* x_override = nullptr);
  void sweep();
};

// rebuilds cluster labels by BFS and compares them with the union-find;
// throws InvariantError on any mismatch
void audit_clusters(FkState& st);

using EventFn = std::function<double(FkState&)>;

// event helpers (indicator-valued)
EventFn connect_event(std::vector<int> fa, std::vector<int> fb);  // face set to face set
EventFn cylinder_event(std::vector<int> open_e, std::vector<int> closed_e);
// open circuit separating inner from outer = no closed-bond path between the
// two vertex sets in the dual union-find
EventFn circuit_event(std::vector<int> inner_v, std::vector<int> outer_v);

// Runs cfg.chains independent chains and evaluates every event on each
// retained sample. Identical cfg gives bit-identical results, independent of
// cfg.threads. The union-find is audited against a BFS relabel every 1000
// sweeps.
std::vector<Estimate> sample_events(const FiniteRegion& reg, const BoundaryArcs& arcs,
                                    const ChainConfig& cfg, const std::vector<EventFn>& events,
                                    const double* x_override = nullptr);

// ---- named estimators ----

// P[fa <-> fb] under the given arcs; with wired arcs this equals the Ising
// spin correlation E[sigma_fa sigma_fb] by the Edwards-Sokal coupling
Estimate estimate_connectivity(const FiniteRegion& reg, const BoundaryArcs& arcs, int fa, int fb,
                               const ChainConfig& cfg);

// P[open circuit around the hole] on an annulus region with free BC.
// At criticality this winding probability is genuinely tiny (order 1e-4 on
// the modulus-3 annulus: winding costs four glued long-way arm crossings),
// so it serves as an archived constant and as an off-critical contrast
// audit, not as a two-sided criticality witness.
Estimate circuit_in_annulus(const FiniteRegion& reg, const ChainConfig& cfg,
                            const double* x_override = nullptr);

// The RSW box-crossing witness on the same annulus: P[the inner face layer
// of the right arm connects to its outer face layer] with free BC. This is
// the building block whose uniform two-sided bounds constitute the RSW
// property; at criticality it sits near 1/2 and is stable in ell.
Estimate rsw_arm_crossing(const FiniteRegion& reg, const ChainConfig& cfg,
                          const double* x_override = nullptr);

// P[(ab) <-> (cd)] with free BC; a,b,c,d are boundary corners in
// counterclockwise order, arcs taken as the boundary face stretches a->b and
// c->d. Throws GateError when the stretches overlap.
Estimate crossing_probability(const FiniteRegion& reg, int a, int b, int c, int d,
                              const ChainConfig& cfg);

// empirical histogram over full bond masks (gate: <= 16 bonds)
std::vector<int64_t> fk_sample_histogram(const FiniteRegion& reg, const BoundaryArcs& arcs,
                                         const ChainConfig& cfg);

// ---- exact reference ----

struct FkModel {
  int nnodes = 0;  // region faces, plus a trailing super node when wired
  std::vector<std::array<int, 2>> ends;
  std::vector<double> p;
  std::vector<std::pair<int, int>> pre;  // permanent identifications
};
FkModel fk_model(const FiniteRegion& reg, const BoundaryArcs& arcs);

// visits all 2^bonds configurations with their normalized probability;
// roots[i] is the cluster representative of node i. Gate: <= 24 bonds.
void fk_enumerate(const FkModel& m,
                  const std::function<void(uint32_t, const std::vector<int>&, double)>& visit);
double fk_probability(const FkModel& m,
                      const std::function<bool(uint32_t, const std::vector<int>&)>& event);
std::vector<double> fk_exact_distribution(const FkModel& m);

// ---- exact audits (enumeration, no MC) ----

// min over single-edge event pairs of P[A and B] - P[A] P[B], free BC
double fkg_audit(const FiniteRegion& reg);
// min over edges of P_wired[e open] - P_free[e open]
double bc_monotonicity_audit(const FiniteRegion& reg);
// conditional law on edges left of split_x given any configuration of the
// rest vs the quotient-graph law; returns the worst absolute gap
double domain_markov_audit(const FiniteRegion& reg, double split_x);
// ratio P[A and B]/(P[A] P[B]) for the two most distant single-edge events
std::pair<double, double> mixing_ratio_record(const FiniteRegion& reg);

}  // namespace ising
