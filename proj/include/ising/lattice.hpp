#pragma once
// Doubly-periodic weighted planar graphs, given as a fundamental domain with
// a rotation system. One quad per edge; corners are (vertex, face) incidences.
//
// Conventions:
//  * edge e runs v0 -> v1; the head sits in the cell shifted by (s1,s2) periods
//    relative to the tail's cell. f_left / f_right are relative to that direction.
//  * rotation[v] lists the edge ends incident to v in counterclockwise order.
//  * quad(e) = (v0, f_right, v1, f_left) in counterclockwise order; its corners
//    are c_pq = (vertex p, face q) with q=0 the right face, q=1 the left face.
//  * edge weight x(e) in (0,1); theta(e) = 2*atan(x) in (0, pi/2).

#include <array>
#include <string>
#include <vector>

#include "ising/util.hpp"

namespace ising {

struct Vec2 {
  double x = 0, y = 0;
};
inline Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
inline Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
inline Vec2 operator*(double t, Vec2 a) { return {t * a.x, t * a.y}; }

struct EdgeSpec {
  int v0 = 0, v1 = 0;
  int s1 = 0, s2 = 0;  // cell of head relative to cell of tail
  int f_left = 0, f_right = 0;
  double weight = 0;
};

// One end of an edge: end == 0 is the v0 occurrence, end == 1 the v1 occurrence.
struct DirRef {
  int e = -1;
  int end = 0;
  bool operator==(const DirRef&) const = default;
};

// Wedge between rotation[v][slot] and rotation[v][slot+1]; holds face f whose
// copy lives in cell (fs1,fs2) relative to v's cell.
struct Corner {
  int v = -1, slot = -1;
  int f = -1, fs1 = 0, fs2 = 0;
};

struct Quad {
  int e = -1;
  int c00 = -1, c10 = -1, c11 = -1, c01 = -1;  // corner ids
  double theta = 0;                            // 2*atan(x)
  int corner(int p, int q) const {
    return p == 0 ? (q == 0 ? c00 : c01) : (q == 0 ? c10 : c11);
  }
};

struct PeriodicLattice {
  std::vector<Vec2> vpos, fpos;
  Vec2 per1, per2;
  std::vector<EdgeSpec> edges;
  std::vector<std::vector<DirRef>> rot;

  // derived by finalize():
  std::vector<Corner> corners;
  std::vector<std::vector<int>> corner_at;           // [v][slot] -> corner id
  std::vector<Quad> quads;                           // one per edge
  std::vector<std::array<int, 2>> lshift, rshift;    // face-copy cell per side, rel v0's cell
  std::vector<int> face_degree;
  std::vector<std::vector<DirRef>> face_walk;        // [f] -> ccw boundary, end=direction

  int nv() const { return (int)vpos.size(); }
  int nf() const { return (int)fpos.size(); }
  int ne() const { return (int)edges.size(); }
  int nc() const { return (int)corners.size(); }

  double weight(int e) const { return edges[e].weight; }
  void set_weight(int e, double x);
  void scale_weights(double t);  // multiplies every weight by t (gate: stays in (0,1))

  // Validates the rotation system, traces faces, builds corners and quads.
  void finalize();
};

// Builtins: "square" (param = x, default sqrt(2)-1), "hex" (param = x, default
// 1/sqrt(3)), "brick-asym" (param = t, weights (t, t, t/2), default 1/sqrt(2)).
PeriodicLattice make_builtin(const std::string& name, double param = -1.0);

PeriodicLattice lattice_from_json(const std::string& text);
std::string lattice_to_json(const PeriodicLattice& lat);
std::string lattice_digest(const PeriodicLattice& lat);

double theta_of_weight(double x);
double weight_of_theta(double th);
// Kramers-Wannier dual weight x* = (1-x)/(1+x).
double dual_weight(double x);

}  // namespace ising
