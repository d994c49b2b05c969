#pragma once
// Finite regions cut out of a scaled s-embedding. A region is the set of quads
// whose tangency centers delta*S(z) fall strictly inside a continuum target
// shape; quads carry their parent edge plus the translation cell, and the
// boundary is recovered as closed walks over the one-sided corner segments.
//
// The half-plane strip is a horizontal cylinder: cells are reduced modulo
// `wrap` copies of the first period, which must be the horizontal one.

#include <array>
#include <complex>
#include <cstdint>
#include <string>
#include <vector>

#include "ising/s_embedding.hpp"

namespace ising {

struct ShapeSpec {
  enum class Kind { Rect, Annulus, Strip, Disk, Corner };
  Kind kind = Kind::Rect;
  // Rect / Corner: open box (x0,x1) x (y0,y1). Corner(m,ell) is the box
  // (0,m) x (0,ell) with the canonical marks on the axes' far ends.
  double x0 = 0, y0 = 0, x1 = 0, y1 = 0;
  double ell = 0;                // Annulus: (-3ell,3ell)^2 minus [-ell,ell]^2
  double cx = 0, cy = 0, rad = 0;  // Disk
  double height = 0;             // Strip: 0 < y < height, width 4*height, periodic in x

  static ShapeSpec rect(double x0, double y0, double x1, double y1);
  static ShapeSpec square_annulus(double ell);
  static ShapeSpec halfplane_strip(double R);
  static ShapeSpec disk(double cx, double cy, double r);
  static ShapeSpec corner(double m, double ell);

  bool contains(double x, double y) const;  // strict interior test
  ShapeSpec scaled(double s) const;
  bool simply_connected_target() const;
  std::string describe() const;
};

struct RegionVert {
  int v = -1, a1 = 0, a2 = 0;  // parent vertex and cell
  bool interior = false;       // full rotation fan retained
  bool pinched = false;        // retained fan splits into several runs
};
struct RegionFace {
  int f = -1, a1 = 0, a2 = 0;
  bool interior = false;
  bool pinched = false;
};
struct RegionEdge {
  int e = -1, a1 = 0, a2 = 0;   // parent edge, cell of its v0 copy
  int v0 = -1, v1 = -1;         // region vertex ids
  int fl = -1, fr = -1;         // region face ids
  double x = 0;                 // Ising weight, p_open = 1-x on the dual bond
};
// Corner of the region = edge of Lambda(G): a (vertex, face) wedge. Boundary
// corners border exactly one retained quad.
struct RegionCorner {
  int c = -1, a1 = 0, a2 = 0;  // parent corner id and cell of its vertex
  int rv = -1, rf = -1;
  int quad[2] = {-1, -1};      // incident retained quads (region edge ids)
  int nquad = 0;
};
// One boundary segment, traversed with the retained quad on the left.
// from_vert: the segment runs S(vertex) -> S(face); otherwise face -> vertex.
struct BoundaryStep {
  int corner = -1;  // region corner id
  int quad = -1;    // the single retained quad
  bool from_vert = false;
};

struct FiniteRegion {
  const SEmbedding* emb = nullptr;
  double delta = 1;
  ShapeSpec shape;
  int wrap = 0;  // > 0: cell coordinate a1 lives in Z/wrap (strip geometry)

  std::vector<RegionVert> verts;
  std::vector<RegionFace> faces;
  std::vector<RegionEdge> edges;
  std::vector<RegionCorner> corners;
  std::vector<std::array<int, 4>> quad_corner;  // per edge: region corner ids (c00,c10,c11,c01)

  // closed boundary walks; [0] is the outer one (strip: [0] bottom, [1] top)
  std::vector<std::vector<BoundaryStep>> boundary;
  bool simply_connected = false;
  bool pinched = false;
  double hausdorff_gap = 0;

  int nv() const { return (int)verts.size(); }
  int nf() const { return (int)faces.size(); }
  int ne() const { return (int)edges.size(); }
  int nc() const { return (int)corners.size(); }

  int find_vert(int v, int a1, int a2) const;
  int find_face(int f, int a1, int a2) const;
  int find_edge(int e, int a1, int a2) const;

  cplx vpos(int rv) const;
  cplx fpos(int rf) const;
  double vq(int rv) const;  // scaled origami value delta*(Q + cell periods)
  double fq(int rf) const;
  cplx corner_pos(int rc) const;  // midpoint of the Lambda segment
  cplx quad_center(int re) const;
  // scaled embedding increment S(v)-S(f) = (delta^(1/2) X)^2 at a corner,
  // in the parent's canonical lift (sign fixed separately by covers)
  cplx corner_sq(int rc) const;

  int nearest_face(cplx target) const;             // euclidean, deterministic tie-break
  int nearest_vert(cplx target) const;
  int nearest_boundary_corner(cplx target) const;  // over boundary walk corners

  // walk node helpers: nodes of boundary[k] in order, vertex ids >= 0 stored
  // as (rv), faces as ~rf (bit-complement) so callers can distinguish them
  std::vector<int> walk_nodes(int k) const;

private:
  friend FiniteRegion extract_region(const SEmbedding&, const ShapeSpec&, double);
  std::vector<int64_t> vkey_, fkey_, ekey_, ckey_;  // sorted lookup tables
  std::vector<int> vidx_, fidx_, eidx_, cidx_;
};

// Throws GateError when the shape is too small for the mesh (no quads, or a
// strip/annulus below the configured minimum size).
FiniteRegion extract_region(const SEmbedding& emb, const ShapeSpec& shape, double delta);

// Boundary conditions. For Dobrushin arcs: walking the outer boundary from
// corner a to corner b, the faces passed are wired; from b back to a, the
// vertices passed are free. vert_even marks vertices whose domain-wall degree
// must stay even (interior vertices plus boundary vertices between two wired
// faces); the remaining vertices are unconstrained in the even-subgraph sums.
struct BoundaryArcs {
  int a = -1, b = -1;            // region corner ids, -1 for uniform BC
  std::vector<char> face_wired;  // per region face
  std::vector<char> vert_free;   // boundary vertices on the free stretch
  std::vector<char> vert_even;   // parity-constrained vertex set
  std::vector<int> wired_faces;  // in walk order
  std::vector<int> free_verts;   // in walk order
};

BoundaryArcs mark_dobrushin(const FiniteRegion& reg, int a, int b);
BoundaryArcs arcs_all_wired(const FiniteRegion& reg);
BoundaryArcs arcs_all_free(const FiniteRegion& reg);

// Double cover of the region's corner graph. Branch flags are per region
// vertex/face (only interior ones generate constraints; open boundary fans
// carry none) plus optionally every quad. Sheet signs come from a BFS tree
// rooted at the lexicographically least corner, which gets sign +1.
struct RegionCover {
  std::vector<char> branch_vert, branch_face;
  bool branch_quads = true;
  std::vector<std::array<int8_t, 4>> leg;  // per region edge, legs as in DoubleCover
  std::vector<int8_t> sheet_sign;          // per region corner, tree-transported
  std::vector<int> tree_parent;            // corner -> corner (-1 at root)
  std::vector<int> tree_leg;               // uedge index (4*quad+leg) used
  int root = -1;

  int eta(int re, int l) const { return leg[re][l]; }
};

// mode_times = true: branch over all vertices/faces except those listed, and
// over every quad. mode_times = false: branch only over the listed cells.
RegionCover build_region_cover(const FiniteRegion& reg, const std::vector<int>& piv,
                               const std::vector<int>& pif, bool mode_times = true);

// Verifies the winding invariant: holonomy of every elementary cycle (quads,
// interior vertex fans, interior face rings) and of n_random random closed
// walks equals (-1)^(number of branch points enclosed). Throws InvariantError.
void check_region_cover(const FiniteRegion& reg, const RegionCover& cov, int n_random = 100,
                        uint64_t seed = 1);

// Solves sigma(corner) * cum(q,i) = lambda(q) * dress(q,i) over {+-1}, where
// cum(q,i) = (1, eta0, eta0*eta1, eta0*eta1*eta2) are the cumulative leg signs
// of quad q. Each quad's dress pattern fixes its corners' section signs up to
// one global flip lambda(q); the patterns must be cover-consistent or this
// throws InvariantError. Used to glue per-quad canonical tuples into one
// coherent section of the double cover.
std::vector<int8_t> coherent_section_signs(const FiniteRegion& reg, const RegionCover& cov,
                                           const std::vector<std::array<int8_t, 4>>& dress);

// The reference fermion on the region: a coherent section W with
// W(c)^2 = corner_sq(c) exactly and, per quad, the cumulative-leg tuple
// (W00, e0*W10, e0*e1*W11, e0*e1*e2*W01) solving the propagation rows.
// Requires a cover built with branch_quads = true and no pinching.
std::vector<cplx> region_corner_spinor(const FiniteRegion& reg, const RegionCover& cov);

}  // namespace ising
