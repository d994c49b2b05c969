#include "ising/region.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <unordered_map>

namespace ising {

// ---------------------------------------------------------------- shapes

ShapeSpec ShapeSpec::rect(double x0, double y0, double x1, double y1) {
  ShapeSpec s;
  s.kind = Kind::Rect;
  s.x0 = x0;
  s.y0 = y0;
  s.x1 = x1;
  s.y1 = y1;
  return s;
}
ShapeSpec ShapeSpec::square_annulus(double ell) {
  ShapeSpec s;
  s.kind = Kind::Annulus;
  s.ell = ell;
  return s;
}
ShapeSpec ShapeSpec::halfplane_strip(double R) {
  ShapeSpec s;
  s.kind = Kind::Strip;
  s.height = R;
  return s;
}
ShapeSpec ShapeSpec::disk(double cx, double cy, double r) {
  ShapeSpec s;
  s.kind = Kind::Disk;
  s.cx = cx;
  s.cy = cy;
  s.rad = r;
  return s;
}
ShapeSpec ShapeSpec::corner(double m, double ell) {
  ShapeSpec s;
  s.kind = Kind::Corner;
  s.x0 = 0;
  s.y0 = 0;
  s.x1 = m;
  s.y1 = ell;
  return s;
}

bool ShapeSpec::contains(double x, double y) const {
  switch (kind) {
    case Kind::Rect:
    case Kind::Corner:
      return x > x0 && x < x1 && y > y0 && y < y1;
    case Kind::Annulus: {
      double m = std::max(std::fabs(x), std::fabs(y));
      return m < 3 * ell && m > ell;
    }
    case Kind::Strip:
      return y > 0 && y < height;
    case Kind::Disk: {
      double dx = x - cx, dy = y - cy;
      return dx * dx + dy * dy < rad * rad;
    }
  }
  return false;
}

ShapeSpec ShapeSpec::scaled(double s) const {
  ShapeSpec r = *this;
  r.x0 *= s;
  r.y0 *= s;
  r.x1 *= s;
  r.y1 *= s;
  r.ell *= s;
  r.cx *= s;
  r.cy *= s;
  r.rad *= s;
  r.height *= s;
  return r;
}

bool ShapeSpec::simply_connected_target() const {
  return kind == Kind::Rect || kind == Kind::Disk || kind == Kind::Corner;
}

std::string ShapeSpec::describe() const {
  char buf[160];
  switch (kind) {
    case Kind::Rect:
      std::snprintf(buf, sizeof buf, "rect(%g,%g,%g,%g)", x0, y0, x1, y1);
      break;
    case Kind::Annulus:
      std::snprintf(buf, sizeof buf, "annulus(%g)", ell);
      break;
    case Kind::Strip:
      std::snprintf(buf, sizeof buf, "strip(%g)", height);
      break;
    case Kind::Disk:
      std::snprintf(buf, sizeof buf, "disk(%g,%g,%g)", cx, cy, rad);
      break;
    case Kind::Corner:
      std::snprintf(buf, sizeof buf, "corner(%g,%g)", x1, y1);
      break;
  }
  return buf;
}

// ---------------------------------------------------------------- lookups

static int64_t pack_key(int id, int a1, int a2) {
  const int64_t OFF = 1 << 21;
  return ((int64_t)id << 44) | ((int64_t)(a1 + OFF) << 22) | (int64_t)(a2 + OFF);
}

static int find_in(const std::vector<int64_t>& keys, const std::vector<int>& idx, int64_t k) {
  auto it = std::lower_bound(keys.begin(), keys.end(), k);
  if (it == keys.end() || *it != k) return -1;
  return idx[it - keys.begin()];
}

static void build_index(std::vector<int64_t>& keys, std::vector<int>& idx) {
  idx.resize(keys.size());
  for (size_t i = 0; i < idx.size(); ++i) idx[i] = (int)i;
  std::sort(idx.begin(), idx.end(), [&](int a, int b) { return keys[a] < keys[b]; });
  std::vector<int64_t> sorted(keys.size());
  for (size_t i = 0; i < idx.size(); ++i) sorted[i] = keys[idx[i]];
  keys.swap(sorted);
}

int FiniteRegion::find_vert(int v, int a1, int a2) const {
  if (wrap) a1 = ((a1 % wrap) + wrap) % wrap;
  return find_in(vkey_, vidx_, pack_key(v, a1, a2));
}
int FiniteRegion::find_face(int f, int a1, int a2) const {
  if (wrap) a1 = ((a1 % wrap) + wrap) % wrap;
  return find_in(fkey_, fidx_, pack_key(f, a1, a2));
}
int FiniteRegion::find_edge(int e, int a1, int a2) const {
  if (wrap) a1 = ((a1 % wrap) + wrap) % wrap;
  return find_in(ekey_, eidx_, pack_key(e, a1, a2));
}

cplx FiniteRegion::vpos(int rv) const {
  const RegionVert& n = verts[rv];
  return delta * emb->S_vertex(n.v, n.a1, n.a2);
}
cplx FiniteRegion::fpos(int rf) const {
  const RegionFace& n = faces[rf];
  return delta * emb->S_face(n.f, n.a1, n.a2);
}
double FiniteRegion::vq(int rv) const {
  const RegionVert& n = verts[rv];
  return delta * (emb->Qv[n.v] + n.a1 * emb->q1 + n.a2 * emb->q2);
}
double FiniteRegion::fq(int rf) const {
  const RegionFace& n = faces[rf];
  return delta * (emb->Qf[n.f] + n.a1 * emb->q1 + n.a2 * emb->q2);
}
cplx FiniteRegion::corner_pos(int rc) const {
  return 0.5 * (vpos(corners[rc].rv) + fpos(corners[rc].rf));
}
cplx FiniteRegion::quad_center(int re) const {
  const RegionEdge& ed = edges[re];
  return delta * emb->S_quad(ed.e, ed.a1, ed.a2);
}
cplx FiniteRegion::corner_sq(int rc) const {
  return delta * emb->X[corners[rc].c] * emb->X[corners[rc].c];
}

int FiniteRegion::nearest_face(cplx target) const {
  int best = -1;
  double bd = 0;
  for (int i = 0; i < nf(); ++i) {
    double d = std::abs(fpos(i) - target);
    if (best < 0 || d < bd - 1e-15) {
      best = i;
      bd = d;
    }
  }
  return best;
}
int FiniteRegion::nearest_vert(cplx target) const {
  int best = -1;
  double bd = 0;
  for (int i = 0; i < nv(); ++i) {
    double d = std::abs(vpos(i) - target);
    if (best < 0 || d < bd - 1e-15) {
      best = i;
      bd = d;
    }
  }
  return best;
}
int FiniteRegion::nearest_boundary_corner(cplx target) const {
  int best = -1;
  double bd = 0;
  for (const auto& cyc : boundary)
    for (const BoundaryStep& st : cyc) {
      double d = std::abs(corner_pos(st.corner) - target);
      if (best < 0 || d < bd - 1e-15) {
        best = st.corner;
        bd = d;
      }
    }
  return best;
}

std::vector<int> FiniteRegion::walk_nodes(int k) const {
  std::vector<int> out;
  for (const BoundaryStep& st : boundary[k]) {
    const RegionCorner& c = corners[st.corner];
    out.push_back(st.from_vert ? ~c.rf : c.rv);  // head node of the step
  }
  return out;
}

// ---------------------------------------------------------------- extraction

namespace {

struct NodeGrid {
  double cell = 1;
  std::unordered_map<int64_t, std::vector<int>> bins;
  const std::vector<cplx>* pts = nullptr;

  void build(const std::vector<cplx>& p, double c) {
    pts = &p;
    cell = c;
    for (size_t i = 0; i < p.size(); ++i) bins[key(p[i])].push_back((int)i);
  }
  int64_t key(cplx p) const {
    int64_t ix = (int64_t)std::floor(p.real() / cell), iy = (int64_t)std::floor(p.imag() / cell);
    return (ix << 32) ^ (iy & 0xffffffffll);
  }
  double nearest(cplx p) const {
    double best = 1e300;
    int64_t ix = (int64_t)std::floor(p.real() / cell), iy = (int64_t)std::floor(p.imag() / cell);
    for (int r = 1; r < 64; ++r) {  // expand rings until a hit is safely closest
      for (int64_t dx = -r; dx <= r; ++dx)
        for (int64_t dy = -r; dy <= r; ++dy) {
          if (std::max(std::labs(dx), std::labs(dy)) != r - 1 && r > 1) {
            if (std::max(std::labs(dx), std::labs(dy)) < r - 1) continue;
          }
          auto it = bins.find(((ix + dx) << 32) ^ ((iy + dy) & 0xffffffffll));
          if (it == bins.end()) continue;
          for (int i : it->second) best = std::min(best, std::abs((*pts)[i] - p));
        }
      if (best < (r - 1) * cell) break;
    }
    return best;
  }
};

double dist_to_box(cplx p, double x0, double y0, double x1, double y1) {
  // distance to the rectangle's boundary curve
  double dx = std::max({x0 - p.real(), p.real() - x1, 0.0});
  double dy = std::max({y0 - p.imag(), p.imag() - y1, 0.0});
  if (dx > 0 || dy > 0) return std::hypot(dx, dy);
  double ix = std::min(p.real() - x0, x1 - p.real());
  double iy = std::min(p.imag() - y0, y1 - p.imag());
  return std::min(ix, iy);
}

void sample_box(double x0, double y0, double x1, double y1, double step, std::vector<cplx>& out) {
  int nx = std::max(2, (int)std::ceil((x1 - x0) / step)), ny = std::max(2, (int)std::ceil((y1 - y0) / step));
  for (int i = 0; i <= nx; ++i) {
    double x = x0 + (x1 - x0) * i / nx;
    out.push_back({x, y0});
    out.push_back({x, y1});
  }
  for (int i = 0; i <= ny; ++i) {
    double y = y0 + (y1 - y0) * i / ny;
    out.push_back({x0, y});
    out.push_back({x1, y});
  }
}

}  // namespace

FiniteRegion extract_region(const SEmbedding& emb, const ShapeSpec& shape, double delta) {
  if (!(delta > 0)) throw ParseError("mesh must be positive");
  const PeriodicLattice& lat = emb.lat;
  FiniteRegion R;
  R.emb = &emb;
  R.delta = delta;
  R.shape = shape;

  if (shape.kind == ShapeSpec::Kind::Annulus && shape.ell < 12 * delta)
    throw GateError("annulus arm below the minimum of 12 mesh units");

  const double L1x = emb.L1.real(), L2x = emb.L2.real(), L2y = emb.L2.imag();
  if (!(L1x > 0) || std::fabs(emb.L1.imag()) > 1e-9 * L1x)
    throw InvariantError("first embedding period is not horizontal");
  if (std::fabs(L2y) < 1e-12) throw InvariantError("degenerate period lattice");

  if (shape.kind == ShapeSpec::Kind::Strip) {
    long W = std::lround(4 * shape.height / (delta * L1x));
    if (emb.s1 < 0 && (W & 1)) W -= 1;  // spinor sector must close around the cylinder
    if (W < 2) throw GateError("strip narrower than two fundamental domains");
    R.wrap = (int)W;
  }

  double zlo1 = 1e300, zhi1 = -1e300, zlo2 = 1e300, zhi2 = -1e300;
  for (int e = 0; e < lat.ne(); ++e) {
    zlo1 = std::min(zlo1, emb.Sz[e].real());
    zhi1 = std::max(zhi1, emb.Sz[e].real());
    zlo2 = std::min(zlo2, emb.Sz[e].imag());
    zhi2 = std::max(zhi2, emb.Sz[e].imag());
  }
  double xlo = 0, xhi = 0, ylo = 0, yhi = 0;
  switch (shape.kind) {
    case ShapeSpec::Kind::Rect:
    case ShapeSpec::Kind::Corner:
      xlo = shape.x0, xhi = shape.x1, ylo = shape.y0, yhi = shape.y1;
      break;
    case ShapeSpec::Kind::Annulus:
      xlo = -3 * shape.ell, xhi = 3 * shape.ell, ylo = xlo, yhi = xhi;
      break;
    case ShapeSpec::Kind::Disk:
      xlo = shape.cx - shape.rad, xhi = shape.cx + shape.rad;
      ylo = shape.cy - shape.rad, yhi = shape.cy + shape.rad;
      break;
    case ShapeSpec::Kind::Strip:
      ylo = 0, yhi = shape.height;
      break;
  }

  double b1 = (ylo / delta - zhi2) / L2y, b2 = (yhi / delta - zlo2) / L2y;
  long a2lo = (long)std::floor(std::min(b1, b2)) - 2, a2hi = (long)std::ceil(std::max(b1, b2)) + 2;

  std::unordered_map<int64_t, int> vmap, fmap, emap, cmap;
  auto vert_id = [&](int v, int a1, int a2) {
    if (R.wrap) a1 = ((a1 % R.wrap) + R.wrap) % R.wrap;
    auto [it, fresh] = vmap.try_emplace(pack_key(v, a1, a2), (int)R.verts.size());
    if (fresh) R.verts.push_back({v, a1, a2});
    return it->second;
  };
  auto face_id = [&](int f, int a1, int a2) {
    if (R.wrap) a1 = ((a1 % R.wrap) + R.wrap) % R.wrap;
    auto [it, fresh] = fmap.try_emplace(pack_key(f, a1, a2), (int)R.faces.size());
    if (fresh) R.faces.push_back({f, a1, a2});
    return it->second;
  };
  auto corner_id = [&](int c, int a1, int a2, int rv, int rf) {
    if (R.wrap) a1 = ((a1 % R.wrap) + R.wrap) % R.wrap;
    auto [it, fresh] = cmap.try_emplace(pack_key(c, a1, a2), (int)R.corners.size());
    if (fresh) R.corners.push_back({c, a1, a2, rv, rf, {-1, -1}, 0});
    return it->second;
  };

  for (long a2 = a2lo; a2 <= a2hi; ++a2) {
    long a1lo, a1hi;
    if (R.wrap) {
      a1lo = 0;
      a1hi = R.wrap - 1;
    } else {
      double c1 = (xlo / delta - a2 * L2x - zhi1) / L1x, c2 = (xhi / delta - a2 * L2x - zlo1) / L1x;
      a1lo = (long)std::floor(std::min(c1, c2)) - 2;
      a1hi = (long)std::ceil(std::max(c1, c2)) + 2;
    }
    for (long a1 = a1lo; a1 <= a1hi; ++a1)
      for (int e = 0; e < lat.ne(); ++e) {
        double px = delta * (emb.Sz[e].real() + a1 * L1x + a2 * L2x);
        double py = delta * (emb.Sz[e].imag() + a2 * L2y);
        if (!shape.contains(px, py)) continue;
        const EdgeSpec& es = lat.edges[e];
        int re = (int)R.edges.size();
        emap.emplace(pack_key(e, R.wrap ? (int)(((a1 % R.wrap) + R.wrap) % R.wrap) : (int)a1, (int)a2), re);
        RegionEdge red;
        red.e = e;
        red.a1 = R.wrap ? (int)(((a1 % R.wrap) + R.wrap) % R.wrap) : (int)a1;
        red.a2 = (int)a2;
        red.x = es.weight;
        red.v0 = vert_id(es.v0, (int)a1, (int)a2);
        red.v1 = vert_id(es.v1, (int)a1 + es.s1, (int)a2 + es.s2);
        red.fl = face_id(es.f_left, (int)a1 + lat.lshift[e][0], (int)a2 + lat.lshift[e][1]);
        red.fr = face_id(es.f_right, (int)a1 + lat.rshift[e][0], (int)a2 + lat.rshift[e][1]);
        R.edges.push_back(red);

        const Quad& q = lat.quads[e];
        auto reg_corner = [&](int pc, int ca1, int ca2, int rv, int rf) {
          int rc = corner_id(pc, ca1, ca2, rv, rf);
          RegionCorner& C = R.corners[rc];
          if (C.nquad >= 2) throw InvariantError("corner incident to more than two quads");
          C.quad[C.nquad++] = re;
          return rc;
        };
        std::array<int, 4> qc;  // order (c00, c10, c11, c01)
        qc[0] = reg_corner(q.c00, (int)a1, (int)a2, red.v0, red.fr);
        qc[1] = reg_corner(q.c10, (int)a1 + es.s1, (int)a2 + es.s2, red.v1, red.fr);
        qc[2] = reg_corner(q.c11, (int)a1 + es.s1, (int)a2 + es.s2, red.v1, red.fl);
        qc[3] = reg_corner(q.c01, (int)a1, (int)a2, red.v0, red.fl);
        R.quad_corner.push_back(qc);
      }
  }
  if (R.edges.empty()) throw GateError("shape retains no quads at this mesh");

  // corner sanity: wedge face must match the quad side it was registered from
  for (int re = 0; re < R.ne(); ++re) {
    const auto& qc = R.quad_corner[re];
    if (R.corners[qc[0]].rf != R.edges[re].fr || R.corners[qc[1]].rf != R.edges[re].fr ||
        R.corners[qc[2]].rf != R.edges[re].fl || R.corners[qc[3]].rf != R.edges[re].fl)
      throw InvariantError("corner face does not match quad side");
  }

  auto edge_at = [&](int e, int a1, int a2) -> int {
    if (R.wrap) a1 = ((a1 % R.wrap) + R.wrap) % R.wrap;
    auto it = emap.find(pack_key(e, a1, a2));
    return it == emap.end() ? -1 : it->second;
  };

  // fan classification
  for (RegionVert& n : R.verts) {
    const auto& rot = lat.rot[n.v];
    int m = (int)rot.size(), trans = 0;
    std::vector<char> ret(m);
    for (int k = 0; k < m; ++k) {
      const EdgeSpec& es = lat.edges[rot[k].e];
      int b1 = n.a1 - (rot[k].end ? es.s1 : 0), b2 = n.a2 - (rot[k].end ? es.s2 : 0);
      ret[k] = edge_at(rot[k].e, b1, b2) >= 0;
    }
    for (int k = 0; k < m; ++k)
      if (!ret[k] && ret[(k + 1) % m]) ++trans;
    n.interior = (trans == 0);
    n.pinched = (trans >= 2);
    if (n.pinched) R.pinched = true;
  }
  for (RegionFace& n : R.faces) {
    const auto& fw = lat.face_walk[n.f];
    int m = (int)fw.size(), trans = 0;
    std::vector<char> ret(m);
    for (int k = 0; k < m; ++k) {
      int e = fw[k].e;
      int b1 = n.a1 - (fw[k].end == 0 ? lat.lshift[e][0] : lat.rshift[e][0]);
      int b2 = n.a2 - (fw[k].end == 0 ? lat.lshift[e][1] : lat.rshift[e][1]);
      ret[k] = edge_at(e, b1, b2) >= 0;
    }
    for (int k = 0; k < m; ++k)
      if (!ret[k] && ret[(k + 1) % m]) ++trans;
    n.interior = (trans == 0);
    n.pinched = (trans >= 2);
    if (n.pinched) R.pinched = true;
  }

  // boundary walk over one-sided corner segments; quad stays on the left
  auto twin = [&](int re, int i) -> std::pair<int, int> {
    const RegionCorner& c = R.corners[R.quad_corner[re][i]];
    int other = (c.quad[0] == re) ? c.quad[1] : c.quad[0];
    if (c.nquad < 2) return {-1, -1};
    for (int j = 0; j < 4; ++j)
      if (R.quad_corner[other][j] == R.quad_corner[re][i]) return {other, j};
    throw InvariantError("twin side not found");
  };
  std::vector<char> visited(4 * R.ne(), 0);
  std::vector<std::vector<BoundaryStep>> cycles;
  for (int re0 = 0; re0 < R.ne(); ++re0)
    for (int i0 = 0; i0 < 4; ++i0) {
      if (visited[4 * re0 + i0] || R.corners[R.quad_corner[re0][i0]].nquad == 2) continue;
      std::vector<BoundaryStep> cyc;
      int re = re0, i = i0;
      do {
        visited[4 * re + i] = 1;
        cyc.push_back({R.quad_corner[re][i], re, (i & 1) == 0});
        int cr = re, ci = (i + 1) % 4;
        int guard = 0;
        while (R.corners[R.quad_corner[cr][ci]].nquad == 2) {
          auto [tr, tj] = twin(cr, ci);
          cr = tr;
          ci = (tj + 1) % 4;
          if (++guard > 4 * R.ne()) throw InvariantError("boundary pivot does not terminate");
        }
        re = cr;
        i = ci;
      } while (!(re == re0 && i == i0));
      cycles.push_back(std::move(cyc));
    }
  if (cycles.empty()) throw InvariantError("no boundary found");

  // order the cycles: planar regions put the (ccw, positive area) outer cycle
  // first; strips sort bottom then top
  auto head_pos = [&](const BoundaryStep& st) {
    const RegionCorner& c = R.corners[st.corner];
    return st.from_vert ? R.fpos(c.rf) : R.vpos(c.rv);
  };
  if (R.wrap) {
    std::sort(cycles.begin(), cycles.end(), [&](const auto& A, const auto& B) {
      double ya = 0, yb = 0;
      for (const auto& st : A) ya += head_pos(st).imag();
      for (const auto& st : B) yb += head_pos(st).imag();
      return ya / A.size() < yb / B.size();
    });
  } else {
    std::vector<double> area(cycles.size(), 0);
    for (size_t k = 0; k < cycles.size(); ++k) {
      const auto& cyc = cycles[k];
      for (size_t t = 0; t < cyc.size(); ++t) {
        cplx p = head_pos(cyc[t]), q = head_pos(cyc[(t + 1) % cyc.size()]);
        area[k] += 0.5 * (p.real() * q.imag() - q.real() * p.imag());
      }
    }
    int outer = 0;
    for (size_t k = 1; k < area.size(); ++k)
      if (area[k] > area[outer]) outer = (int)k;
    if (area[outer] <= 0) throw InvariantError("no positively oriented outer boundary");
    std::swap(cycles[0], cycles[outer]);
  }
  R.boundary = std::move(cycles);
  R.simply_connected = (R.boundary.size() == 1) && !R.pinched;
  if (!R.pinched && !R.wrap) {
    long chi = (long)R.nv() + R.nf() + R.ne() - R.nc();
    if (chi != 2 - (long)R.boundary.size()) throw InvariantError("Euler characteristic mismatch");
  }

  // Hausdorff gap between the achieved boundary and the target outline
  double step = std::max(delta / 2, 1e-9);
  double gap = 0;
  auto cycle_nodes = [&](int k) {
    std::vector<cplx> p;
    for (const auto& st : R.boundary[k]) p.push_back(head_pos(st));
    return p;
  };
  auto one_sided = [&](const std::vector<cplx>& nodes, const std::vector<cplx>& samples,
                       double (*dist)(cplx, const ShapeSpec&), const ShapeSpec& sh) {
    for (cplx p : nodes) gap = std::max(gap, dist(p, sh));
    NodeGrid g;
    g.build(nodes, std::max(step, 2 * delta));
    for (cplx s : samples) gap = std::max(gap, g.nearest(s));
  };
  switch (shape.kind) {
    case ShapeSpec::Kind::Rect:
    case ShapeSpec::Kind::Corner: {
      std::vector<cplx> samples;
      sample_box(shape.x0, shape.y0, shape.x1, shape.y1, step, samples);
      auto d = +[](cplx p, const ShapeSpec& sh) { return dist_to_box(p, sh.x0, sh.y0, sh.x1, sh.y1); };
      std::vector<cplx> nodes;
      for (size_t k = 0; k < R.boundary.size(); ++k)
        for (cplx p : cycle_nodes((int)k)) nodes.push_back(p);
      one_sided(nodes, samples, d, shape);
      break;
    }
    case ShapeSpec::Kind::Disk: {
      std::vector<cplx> samples;
      int n = std::max(16, (int)std::ceil(2 * M_PI * shape.rad / step));
      for (int i = 0; i < n; ++i)
        samples.push_back(cplx(shape.cx, shape.cy) +
                          shape.rad * std::exp(cplx(0, 2 * M_PI * i / n)));
      auto d = +[](cplx p, const ShapeSpec& sh) {
        return std::fabs(std::abs(p - cplx(sh.cx, sh.cy)) - sh.rad);
      };
      one_sided(cycle_nodes(0), samples, d, shape);
      break;
    }
    case ShapeSpec::Kind::Annulus: {
      if (R.boundary.size() != 2) throw InvariantError("annulus does not have two boundary cycles");
      std::vector<cplx> souter, sinner;
      sample_box(-3 * shape.ell, -3 * shape.ell, 3 * shape.ell, 3 * shape.ell, step, souter);
      sample_box(-shape.ell, -shape.ell, shape.ell, shape.ell, step, sinner);
      auto douter = +[](cplx p, const ShapeSpec& sh) {
        return dist_to_box(p, -3 * sh.ell, -3 * sh.ell, 3 * sh.ell, 3 * sh.ell);
      };
      auto dinner = +[](cplx p, const ShapeSpec& sh) {
        return dist_to_box(p, -sh.ell, -sh.ell, sh.ell, sh.ell);
      };
      one_sided(cycle_nodes(0), souter, douter, shape);
      one_sided(cycle_nodes(1), sinner, dinner, shape);
      break;
    }
    case ShapeSpec::Kind::Strip: {
      if (R.boundary.size() != 2) throw InvariantError("strip does not have two boundary cycles");
      double width = R.wrap * delta * L1x;
      for (int k = 0; k < 2; ++k) {
        double target = (k == 0) ? 0 : shape.height;
        auto nodes = cycle_nodes(k);
        for (cplx p : nodes) gap = std::max(gap, std::fabs(p.imag() - target));
        // horizontal samples against the wrapped node set
        int n = std::max(8, (int)std::ceil(width / step));
        for (int i = 0; i < n; ++i) {
          double x = width * i / n, best = 1e300;
          for (cplx p : nodes)
            for (int w = -1; w <= 1; ++w)
              best = std::min(best, std::hypot(p.real() - x + w * width, p.imag() - target));
          gap = std::max(gap, best);
        }
      }
      break;
    }
  }
  R.hausdorff_gap = gap;
  if (gap > 10 * delta) throw InvariantError("boundary exceeds 10-mesh Hausdorff gap: " + std::to_string(gap / delta));

  // freeze lookup tables
  R.vkey_.resize(R.nv());
  for (int i = 0; i < R.nv(); ++i) R.vkey_[i] = pack_key(R.verts[i].v, R.verts[i].a1, R.verts[i].a2);
  R.fkey_.resize(R.nf());
  for (int i = 0; i < R.nf(); ++i) R.fkey_[i] = pack_key(R.faces[i].f, R.faces[i].a1, R.faces[i].a2);
  R.ekey_.resize(R.ne());
  for (int i = 0; i < R.ne(); ++i) R.ekey_[i] = pack_key(R.edges[i].e, R.edges[i].a1, R.edges[i].a2);
  R.ckey_.resize(R.nc());
  for (int i = 0; i < R.nc(); ++i) R.ckey_[i] = pack_key(R.corners[i].c, R.corners[i].a1, R.corners[i].a2);
  build_index(R.vkey_, R.vidx_);
  build_index(R.fkey_, R.fidx_);
  build_index(R.ekey_, R.eidx_);
  build_index(R.ckey_, R.cidx_);
  return R;
}

// ---------------------------------------------------------------- arcs

static void finish_even_set(const FiniteRegion& reg, BoundaryArcs& arcs) {
  arcs.vert_even.assign(reg.nv(), 0);
  for (int i = 0; i < reg.nv(); ++i)
    if (reg.verts[i].interior) arcs.vert_even[i] = 1;
  // boundary vertex: even iff both walk-neighbour faces are wired
  for (const auto& cyc : reg.boundary) {
    int L = (int)cyc.size();
    for (int t = 0; t < L; ++t) {
      if (cyc[t].from_vert) continue;  // head is a vertex for face->vertex steps
      int rv = reg.corners[cyc[t].corner].rv;
      int fprev = reg.corners[cyc[t].corner].rf;
      int fnext = reg.corners[cyc[(t + 1) % L].corner].rf;
      if (arcs.face_wired[fprev] && arcs.face_wired[fnext]) arcs.vert_even[rv] = 1;
    }
  }
}

BoundaryArcs mark_dobrushin(const FiniteRegion& reg, int a, int b) {
  if (a == b) throw ParseError("dobrushin marks coincide");
  if (a < 0 || b < 0 || a >= reg.nc() || b >= reg.nc()) throw ParseError("corner id out of range");
  const auto& walk = reg.boundary.at(0);
  int ia = -1, ib = -1, L = (int)walk.size();
  for (int t = 0; t < L; ++t) {
    if (walk[t].corner == a) ia = t;
    if (walk[t].corner == b) ib = t;
  }
  if (ia < 0 || ib < 0) throw ParseError("dobrushin mark is not on the outer boundary");

  BoundaryArcs arcs;
  arcs.a = a;
  arcs.b = b;
  arcs.face_wired.assign(reg.nf(), 0);
  arcs.vert_free.assign(reg.nv(), 0);
  // heads of steps ia..ib-1 lie strictly between a and b (wired side);
  // heads of steps ib..ia-1 lie between b and a (free side)
  for (int t = ia; t != ib; t = (t + 1) % L) {
    const BoundaryStep& st = walk[t];
    if (st.from_vert) {  // head is a face
      int rf = reg.corners[st.corner].rf;
      if (!arcs.face_wired[rf]) {
        arcs.face_wired[rf] = 1;
        arcs.wired_faces.push_back(rf);
      }
    }
  }
  for (int t = ib; t != ia; t = (t + 1) % L) {
    const BoundaryStep& st = walk[t];
    if (!st.from_vert) {  // head is a vertex
      int rv = reg.corners[st.corner].rv;
      if (!arcs.vert_free[rv]) {
        arcs.vert_free[rv] = 1;
        arcs.free_verts.push_back(rv);
      }
    }
  }
  if (arcs.wired_faces.empty()) throw ParseError("wired arc is empty");
  finish_even_set(reg, arcs);
  return arcs;
}

BoundaryArcs arcs_all_wired(const FiniteRegion& reg) {
  BoundaryArcs arcs;
  arcs.face_wired.assign(reg.nf(), 0);
  arcs.vert_free.assign(reg.nv(), 0);
  for (const auto& cyc : reg.boundary)
    for (const BoundaryStep& st : cyc)
      if (st.from_vert) {
        int rf = reg.corners[st.corner].rf;
        if (!arcs.face_wired[rf]) {
          arcs.face_wired[rf] = 1;
          arcs.wired_faces.push_back(rf);
        }
      }
  finish_even_set(reg, arcs);
  return arcs;
}

BoundaryArcs arcs_all_free(const FiniteRegion& reg) {
  BoundaryArcs arcs;
  arcs.face_wired.assign(reg.nf(), 0);
  arcs.vert_free.assign(reg.nv(), 0);
  for (const auto& cyc : reg.boundary)
    for (const BoundaryStep& st : cyc)
      if (!st.from_vert) {
        int rv = reg.corners[st.corner].rv;
        if (!arcs.vert_free[rv]) {
          arcs.vert_free[rv] = 1;
          arcs.free_verts.push_back(rv);
        }
      }
  finish_even_set(reg, arcs);
  return arcs;
}

// ---------------------------------------------------------------- double cover

namespace {

// dense GF(2) elimination, same scheme as the torus cover
struct Gf2 {
  int nvars;
  std::vector<std::vector<uint64_t>> rows;
  explicit Gf2(int n) : nvars(n) {}
  void add(const std::vector<int>& vars, int rhs) {
    std::vector<uint64_t> r((nvars + 1 + 63) / 64, 0);
    for (int v : vars) r[v >> 6] ^= 1ull << (v & 63);
    if (rhs) r[nvars >> 6] ^= 1ull << (nvars & 63);
    rows.push_back(std::move(r));
  }
  std::vector<uint8_t> solve() {
    int W = (nvars + 1 + 63) / 64, rank = 0;
    std::vector<int> pivot;
    for (int col = 0; col < nvars && rank < (int)rows.size(); ++col) {
      int pr = -1;
      for (int r = rank; r < (int)rows.size(); ++r)
        if ((rows[r][col >> 6] >> (col & 63)) & 1) {
          pr = r;
          break;
        }
      if (pr < 0) continue;
      std::swap(rows[rank], rows[pr]);
      for (int r = 0; r < (int)rows.size(); ++r)
        if (r != rank && ((rows[r][col >> 6] >> (col & 63)) & 1))
          for (int w = 0; w < W; ++w) rows[r][w] ^= rows[rank][w];
      pivot.push_back(col);
      ++rank;
    }
    for (int r = rank; r < (int)rows.size(); ++r)
      if ((rows[r][nvars >> 6] >> (nvars & 63)) & 1) throw InvariantError("inconsistent sign system");
    std::vector<uint8_t> x(nvars, 0);
    for (int r = 0; r < rank; ++r) x[pivot[r]] = (rows[r][nvars >> 6] >> (nvars & 63)) & 1;
    return x;
  }
};

}  // namespace

RegionCover build_region_cover(const FiniteRegion& reg, const std::vector<int>& piv,
                               const std::vector<int>& pif, bool mode_times) {
  const PeriodicLattice& lat = reg.emb->lat;
  RegionCover cov;
  cov.branch_quads = mode_times;
  cov.branch_vert.assign(reg.nv(), mode_times ? 1 : 0);
  cov.branch_face.assign(reg.nf(), mode_times ? 1 : 0);
  for (int rv : piv) cov.branch_vert.at(rv) = mode_times ? 0 : 1;
  for (int rf : pif) cov.branch_face.at(rf) = mode_times ? 0 : 1;

  Gf2 sys(4 * reg.ne());
  for (int re = 0; re < reg.ne(); ++re)
    sys.add({4 * re, 4 * re + 1, 4 * re + 2, 4 * re + 3}, cov.branch_quads ? 1 : 0);

  auto fan_edges = [&](const RegionVert& n) {
    std::vector<int> vars;
    for (DirRef d : lat.rot[n.v]) {
      const EdgeSpec& es = lat.edges[d.e];
      int re = reg.find_edge(d.e, n.a1 - (d.end ? es.s1 : 0), n.a2 - (d.end ? es.s2 : 0));
      if (re >= 0) vars.push_back(4 * re + (d.end == 0 ? 3 : 1));
    }
    return vars;
  };
  for (int rv = 0; rv < reg.nv(); ++rv)
    if (reg.verts[rv].interior) sys.add(fan_edges(reg.verts[rv]), cov.branch_vert[rv] ? 1 : 0);
  for (int rf = 0; rf < reg.nf(); ++rf) {
    const RegionFace& n = reg.faces[rf];
    if (!n.interior) continue;
    std::vector<int> vars;
    for (DirRef d : lat.face_walk[n.f]) {
      int e = d.e;
      int re = reg.find_edge(e, n.a1 - (d.end == 0 ? lat.lshift[e][0] : lat.rshift[e][0]),
                             n.a2 - (d.end == 0 ? lat.lshift[e][1] : lat.rshift[e][1]));
      if (re < 0) throw InvariantError("interior face with missing quad");
      vars.push_back(4 * re + (d.end == 0 ? 2 : 0));
    }
    sys.add(vars, cov.branch_face[rf] ? 1 : 0);
  }
  std::vector<uint8_t> eps = sys.solve();
  cov.leg.resize(reg.ne());
  for (int re = 0; re < reg.ne(); ++re)
    for (int l = 0; l < 4; ++l) cov.leg[re][l] = eps[4 * re + l] ? -1 : 1;

  // spanning tree from the lexicographically least corner; root sign +1
  int root = 0;
  for (int rc = 1; rc < reg.nc(); ++rc) {
    const RegionCorner &A = reg.corners[rc], &B = reg.corners[root];
    if (std::array<int, 3>{A.c, A.a1, A.a2} < std::array<int, 3>{B.c, B.a1, B.a2}) root = rc;
  }
  cov.root = root;
  cov.sheet_sign.assign(reg.nc(), 0);
  cov.tree_parent.assign(reg.nc(), -1);
  cov.tree_leg.assign(reg.nc(), -1);
  std::vector<int> queue = {root};
  cov.sheet_sign[root] = 1;
  static const int LEG_FROM[4] = {0, 1, 2, 3};
  for (size_t qh = 0; qh < queue.size(); ++qh) {
    int rc = queue[qh];
    const RegionCorner& C = reg.corners[rc];
    for (int k = 0; k < C.nquad; ++k) {
      int re = C.quad[k];
      const auto& qc = reg.quad_corner[re];
      for (int l : LEG_FROM) {
        int c0 = qc[l], c1 = qc[(l + 1) % 4];
        int other = (c0 == rc) ? c1 : (c1 == rc ? c0 : -1);
        if (other < 0 || cov.sheet_sign[other] != 0) continue;
        cov.sheet_sign[other] = (int8_t)(cov.sheet_sign[rc] * cov.leg[re][l]);
        cov.tree_parent[other] = rc;
        cov.tree_leg[other] = 4 * re + l;
        queue.push_back(other);
      }
    }
  }
  for (int rc = 0; rc < reg.nc(); ++rc)
    if (cov.sheet_sign[rc] == 0) throw InvariantError("corner graph is disconnected");
  return cov;
}

void check_region_cover(const FiniteRegion& reg, const RegionCover& cov, int n_random, uint64_t seed) {
  const PeriodicLattice& lat = reg.emb->lat;
  for (int re = 0; re < reg.ne(); ++re) {
    int p = cov.leg[re][0] * cov.leg[re][1] * cov.leg[re][2] * cov.leg[re][3];
    if (p != (cov.branch_quads ? -1 : 1)) throw InvariantError("quad holonomy mismatch");
  }
  for (int rv = 0; rv < reg.nv(); ++rv) {
    const RegionVert& n = reg.verts[rv];
    if (!n.interior) continue;
    int p = 1;
    for (DirRef d : lat.rot[n.v]) {
      const EdgeSpec& es = lat.edges[d.e];
      int re = reg.find_edge(d.e, n.a1 - (d.end ? es.s1 : 0), n.a2 - (d.end ? es.s2 : 0));
      p *= cov.leg[re][d.end == 0 ? 3 : 1];
    }
    if (p != (cov.branch_vert[rv] ? -1 : 1)) throw InvariantError("vertex holonomy mismatch");
  }
  for (int rf = 0; rf < reg.nf(); ++rf) {
    const RegionFace& n = reg.faces[rf];
    if (!n.interior) continue;
    int p = 1;
    for (DirRef d : lat.face_walk[n.f]) {
      int e = d.e;
      int re = reg.find_edge(e, n.a1 - (d.end == 0 ? lat.lshift[e][0] : lat.rshift[e][0]),
                             n.a2 - (d.end == 0 ? lat.lshift[e][1] : lat.rshift[e][1]));
      p *= cov.leg[re][d.end == 0 ? 2 : 0];
    }
    if (p != (cov.branch_face[rf] ? -1 : 1)) throw InvariantError("face holonomy mismatch");
  }
  if (n_random <= 0) return;
  if (reg.wrap) throw InvariantError("winding checks need a planar region");

  // adjacency by upsilon edge
  std::vector<std::vector<std::pair<int, int>>> adj(reg.nc());  // (other corner, 4*re+leg)
  for (int re = 0; re < reg.ne(); ++re)
    for (int l = 0; l < 4; ++l) {
      int c0 = reg.quad_corner[re][l], c1 = reg.quad_corner[re][(l + 1) % 4];
      adj[c0].push_back({c1, 4 * re + l});
      adj[c1].push_back({c0, 4 * re + l});
    }
  std::vector<cplx> branch_pts;
  for (int rv = 0; rv < reg.nv(); ++rv)
    if (reg.verts[rv].interior && cov.branch_vert[rv]) branch_pts.push_back(reg.vpos(rv));
  for (int rf = 0; rf < reg.nf(); ++rf)
    if (reg.faces[rf].interior && cov.branch_face[rf]) branch_pts.push_back(reg.fpos(rf));
  if (cov.branch_quads)
    for (int re = 0; re < reg.ne(); ++re) branch_pts.push_back(reg.quad_center(re));

  uint64_t st = seed ? seed : 0x9e3779b97f4a7c15ull;
  auto rnd = [&]() {
    st ^= st << 13;
    st ^= st >> 7;
    st ^= st << 17;
    return st;
  };
  int done = 0, attempts = 0;
  while (done < n_random && attempts < 50 * n_random) {
    ++attempts;
    int cur = (int)(rnd() % reg.nc());
    std::vector<int> path = {cur}, legs;
    std::vector<int> seen_at(reg.nc(), -1);
    seen_at[cur] = 0;
    int loop_from = -1;
    for (int stp = 0; stp < 80 && loop_from < 0; ++stp) {
      const auto& nb = adj[cur];
      auto [nxt, leg] = nb[rnd() % nb.size()];
      path.push_back(nxt);
      legs.push_back(leg);
      if (seen_at[nxt] >= 0) {
        loop_from = seen_at[nxt];
      } else {
        seen_at[nxt] = (int)path.size() - 1;
      }
      cur = nxt;
    }
    if (loop_from < 0) continue;
    // loop portion: path[loop_from .. end]
    int hol = 1;
    std::vector<cplx> poly;
    for (size_t t = loop_from; t + 1 < path.size(); ++t) {
      hol *= cov.leg[legs[t] / 4][legs[t] % 4];
      poly.push_back(reg.corner_pos(path[t]));
    }
    if (poly.size() < 3) continue;
    long wind_par = 0;
    bool ok = true;
    for (cplx bp : branch_pts) {
      double ang = 0;
      for (size_t t = 0; t < poly.size() && ok; ++t) {
        cplx u = poly[t] - bp, v = poly[(t + 1) % poly.size()] - bp;
        double du = std::abs(u), dv = std::abs(v);
        if (du < 1e-12 || dv < 1e-12) ok = false;
        ang += std::atan2(u.real() * v.imag() - u.imag() * v.real(),
                          u.real() * v.real() + u.imag() * v.imag());
      }
      if (!ok) break;
      double w = ang / (2 * M_PI);
      if (std::fabs(w - std::lround(w)) > 0.01) ok = false;
      wind_par += std::lround(w);
    }
    if (!ok) continue;
    int expect = (wind_par & 1) ? -1 : 1;
    if (hol != expect) throw InvariantError("random cycle holonomy mismatch");
    ++done;
  }
  if (done < n_random) throw InvariantError("could not generate enough random cycles");
}

std::vector<int8_t> coherent_section_signs(const FiniteRegion& reg, const RegionCover& cov,
                                           const std::vector<std::array<int8_t, 4>>& dress) {
  if ((int)dress.size() != reg.ne()) throw ParseError("one dress pattern per quad required");
  std::vector<int8_t> sigma(reg.nc(), 0);
  std::vector<int8_t> lambda(reg.ne(), 0);
  auto cum = [&](int q, int i) {
    int s = 1;
    for (int l = 0; l < i; ++l) s *= cov.leg[q][l];
    return s;
  };
  for (int q0 = 0; q0 < reg.ne(); ++q0) {
    if (lambda[q0]) continue;
    lambda[q0] = 1;
    std::vector<int> queue = {q0};
    for (size_t qh = 0; qh < queue.size(); ++qh) {
      int q = queue[qh];
      for (int i = 0; i < 4; ++i) {
        int rc = reg.quad_corner[q][i];
        int want = lambda[q] * dress[q][i] * cum(q, i);
        if (sigma[rc] == 0)
          sigma[rc] = (int8_t)want;
        else if (sigma[rc] != want)
          throw InvariantError("dress patterns are not cover-consistent");
        const RegionCorner& C = reg.corners[rc];
        for (int k = 0; k < C.nquad; ++k) {
          int q2 = C.quad[k];
          if (lambda[q2]) continue;
          int j = 0;
          while (reg.quad_corner[q2][j] != rc) ++j;
          lambda[q2] = (int8_t)(sigma[rc] * dress[q2][j] * cum(q2, j));
          queue.push_back(q2);
        }
      }
    }
  }
  return sigma;
}

std::vector<cplx> region_corner_spinor(const FiniteRegion& reg, const RegionCover& cov) {
  if (!cov.branch_quads) throw ParseError("spinor lift needs the fully branched cover");
  if (reg.wrap) throw ParseError("spinor lift needs a planar region");
  const SEmbedding& emb = *reg.emb;
  std::vector<std::array<int8_t, 4>> dress(reg.ne());
  for (int q = 0; q < reg.ne(); ++q) {
    auto s = emb.dc.quad_signs(reg.edges[q].e);
    for (int i = 0; i < 4; ++i) dress[q][i] = (int8_t)s[i];
  }
  std::vector<int8_t> sigma = coherent_section_signs(reg, cov, dress);
  double rt = std::sqrt(reg.delta);
  std::vector<cplx> W(reg.nc());
  for (int rc = 0; rc < reg.nc(); ++rc) {
    const RegionCorner& C = reg.corners[rc];
    W[rc] = rt * (double)sigma[rc] * emb.sector_sign(C.a1, C.a2) * emb.X[C.c];
  }
  for (int q = 0; q < reg.ne(); ++q) {  // propagation rows in the cumulative-leg lift
    double th = emb.lat.quads[reg.edges[q].e].theta;
    double m1 = cov.leg[q][0], m2 = m1 * cov.leg[q][1], m3 = m2 * cov.leg[q][2];
    cplx a = W[reg.quad_corner[q][0]], b = m1 * W[reg.quad_corner[q][1]];
    cplx c = m2 * W[reg.quad_corner[q][2]], d = m3 * W[reg.quad_corner[q][3]];
    double scale = std::abs(a) + std::abs(b) + std::abs(c) + std::abs(d);
    if (std::abs(a + d * std::cos(th) - b * std::sin(th)) > 1e-9 * scale ||
        std::abs(b - c * std::cos(th) - a * std::sin(th)) > 1e-9 * scale)
      throw InvariantError("region spinor fails the propagation rows");
  }
  return W;
}

}  // namespace ising
