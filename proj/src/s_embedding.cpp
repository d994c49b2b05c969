#include "ising/s_embedding.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <deque>
#include <string>

namespace ising {

namespace {

constexpr double kPi = 3.14159265358979323846;

// propagation matrix in one period-sign sector; columns are corners
Eigen::MatrixXd assemble(const PeriodicLattice& lat, const DoubleCover& dc, int s1, int s2) {
  const int E = lat.ne();
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(2 * E, lat.nc());
  for (int e = 0; e < E; ++e) {
    const Quad& q = lat.quads[e];
    auto sg = dc.quad_signs(e);
    double sig = ((lat.edges[e].s1 & 1) && s1 < 0 ? -1.0 : 1.0) *
                 ((lat.edges[e].s2 & 1) && s2 < 0 ? -1.0 : 1.0);
    double ct = std::cos(q.theta), st = std::sin(q.theta);
    // Xh00 + Xh01*cos - Xh10*sin = 0 ; Xh10 - Xh11*cos - Xh00*sin = 0
    A(2 * e + 0, q.c00) += 1.0;
    A(2 * e + 0, q.c01) += sg[3] * ct;
    A(2 * e + 0, q.c10) -= sg[1] * sig * st;
    A(2 * e + 1, q.c10) += sg[1] * sig;
    A(2 * e + 1, q.c11) -= sg[2] * sig * ct;
    A(2 * e + 1, q.c00) -= st;
  }
  return A;
}

struct PathStep {
  int corner;
  double sign;  // +1 when the step goes face -> vertex, -1 vertex -> face
};

// paths in the vertex/face incidence graph realizing the two period classes
std::array<std::vector<PathStep>, 2> period_paths(const PeriodicLattice& lat) {
  const int W = 6, S = 2 * W + 1;
  const int nn = lat.nv() + lat.nf();
  auto idx = [&](int node, int a1, int a2) { return (node * S + (a1 + W)) * S + (a2 + W); };
  std::vector<int> par_state(nn * S * S, -1), par_corner(nn * S * S, -1);
  std::vector<int8_t> seen(nn * S * S, 0);
  std::deque<int> bfs;
  int start = idx(0, 0, 0);
  seen[start] = 1;
  bfs.push_back(start);
  while (!bfs.empty()) {
    int cur = bfs.front();
    bfs.pop_front();
    int a2 = cur % S - W, a1 = (cur / S) % S - W, node = cur / (S * S);
    for (int c = 0; c < lat.nc(); ++c) {
      const Corner& co = lat.corners[c];
      int nnode, b1, b2;
      if (node < lat.nv()) {
        if (co.v != node) continue;
        nnode = lat.nv() + co.f;
        b1 = a1 + co.fs1;
        b2 = a2 + co.fs2;
      } else {
        if (co.f != node - lat.nv()) continue;
        nnode = co.v;
        b1 = a1 - co.fs1;
        b2 = a2 - co.fs2;
      }
      if (std::abs(b1) > W || std::abs(b2) > W) continue;
      int ni = idx(nnode, b1, b2);
      if (seen[ni]) continue;
      seen[ni] = 1;
      par_state[ni] = cur;
      par_corner[ni] = c;
      bfs.push_back(ni);
    }
  }
  std::array<std::vector<PathStep>, 2> out;
  for (int j = 0; j < 2; ++j) {
    int tgt = j == 0 ? idx(0, 1, 0) : idx(0, 0, 1);
    if (!seen[tgt]) throw InvariantError("period path not found in incidence graph");
    for (int cur = tgt; cur != start; cur = par_state[cur]) {
      int prev = par_state[cur];
      int pnode = prev / (S * S);
      // sign of the S-increment picked up entering `cur` from `prev`
      out[j].push_back({par_corner[cur], pnode < lat.nv() ? -1.0 : 1.0});
    }
    std::reverse(out[j].begin(), out[j].end());
  }
  return out;
}

cplx incircle(const std::array<cplx, 4>& P, double* radius) {
  double area = 0, perim = 0;
  for (int k = 0; k < 4; ++k) {
    cplx a = P[k], b = P[(k + 1) % 4];
    area += 0.5 * (a.real() * b.imag() - a.imag() * b.real());
    perim += std::abs(b - a);
  }
  double r = area / (0.5 * perim);
  // least squares for the point at distance r from all four side lines
  Eigen::MatrixXd M(4, 2);
  Eigen::VectorXd rhs(4);
  for (int k = 0; k < 4; ++k) {
    cplx d = P[(k + 1) % 4] - P[k];
    cplx n = cplx(0, 1) * (d / std::abs(d));  // inward for ccw
    M(k, 0) = n.real();
    M(k, 1) = n.imag();
    rhs(k) = r + n.real() * P[k].real() + n.imag() * P[k].imag();
  }
  Eigen::Vector2d c = M.colPivHouseholderQr().solve(rhs);
  double scale = std::abs(P[2] - P[0]) + std::abs(P[3] - P[1]);
  if ((M * c - rhs).cwiseAbs().maxCoeff() > 1e-8 * scale)
    throw InvariantError("quad image is not tangential");
  *radius = r;
  return {c(0), c(1)};
}

double corner_angle(cplx at, cplx to1, cplx to2) {
  cplx a = to1 - at, b = to2 - at;
  double cr = a.real() * b.imag() - a.imag() * b.real();
  double dt = a.real() * b.real() + a.imag() * b.imag();
  return std::atan2(std::abs(cr), dt);
}

}  // namespace

std::array<cplx, 4> SEmbedding::quad_points(int e, int a1, int a2) const {
  const EdgeSpec& ed = lat.edges[e];
  auto ls = lat.lshift[e], rs = lat.rshift[e];
  return {S_vertex(ed.v0, a1, a2), S_face(ed.f_right, a1 + rs[0], a2 + rs[1]),
          S_vertex(ed.v1, a1 + ed.s1, a2 + ed.s2), S_face(ed.f_left, a1 + ls[0], a2 + ls[1])};
}

SectorScan scan_sectors(const PeriodicLattice& lat, const DoubleCover& dc, double tol) {
  SectorScan sc{};
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) {
      int s1 = i ? -1 : 1, s2 = j ? -1 : 1;
      Eigen::JacobiSVD<Eigen::MatrixXd> svd(assemble(lat, dc, s1, s2));
      auto sv = svd.singularValues();
      sc.min_sv[i][j] = sv(sv.size() - 1);
      int dim = 0;
      for (int k = 0; k < sv.size(); ++k)
        if (sv(k) <= tol * sv(0)) ++dim;
      sc.kernel_dim[i][j] = dim;
      if (dim == 2) {
        if (sc.s1 != 0) throw InvariantError("two sectors both carry a 2-dim kernel");
        sc.s1 = s1;
        sc.s2 = s2;
      }
    }
  return sc;
}

SEmbedding build_s_embedding(const PeriodicLattice& lat) {
  SEmbedding se;
  se.lat = lat;
  se.dc = build_double_cover(lat);
  SectorScan sc = scan_sectors(lat, se.dc);
  if (sc.s1 == 0) {
    std::string msg = "no sector has a 2-dim kernel (lattice not critical?); min sv:";
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) msg += " " + std::to_string(sc.min_sv[i][j]);
    throw GateError(msg);
  }
  se.s1 = sc.s1;
  se.s2 = sc.s2;

  const int nc = lat.nc();
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(assemble(lat, se.dc, se.s1, se.s2),
                                        Eigen::ComputeFullV);
  Eigen::VectorXd ku = svd.matrixV().col(nc - 1), kv = svd.matrixV().col(nc - 2);
  se.u.assign(ku.data(), ku.data() + nc);
  se.v.assign(kv.data(), kv.data() + nc);

  // tau from closing both Q-periods: A + 2 Re(tau) B + |tau|^2 C = 0 on each
  auto paths = period_paths(lat);
  Eigen::Matrix2d M;
  Eigen::Vector2d rhs;
  for (int j = 0; j < 2; ++j) {
    double A = 0, B = 0, C = 0;
    for (const PathStep& st : paths[j]) {
      A += st.sign * se.u[st.corner] * se.u[st.corner];
      B += st.sign * se.u[st.corner] * se.v[st.corner];
      C += st.sign * se.v[st.corner] * se.v[st.corner];
    }
    M(j, 0) = 2 * B;
    M(j, 1) = C;
    rhs(j) = -A;
  }
  if (std::abs(M.determinant()) < 1e-12 * (M.cwiseAbs().maxCoeff() + 1e-300))
    throw InvariantError("Q-period system for tau is degenerate");
  Eigen::Vector2d pm = M.colPivHouseholderQr().solve(rhs);
  double im2 = pm(1) - pm(0) * pm(0);
  if (!(im2 > 0)) throw InvariantError("tau has no positive imaginary part");
  se.tau = {pm(0), std::sqrt(im2)};

  se.X.resize(nc);
  for (int c = 0; c < nc; ++c) se.X[c] = se.u[c] + se.tau * se.v[c];

  // integrate S (complex) and Q (real) from the corner increments
  const int nv = lat.nv(), nf = lat.nf();
  int N = nv - 1 + nf + 2;  // S(v0) pinned to 0
  auto col_v = [&](int v) { return v - 1; };
  auto col_f = [&](int f) { return nv - 1 + f; };
  int cL1 = nv - 1 + nf, cL2 = cL1 + 1;
  Eigen::MatrixXcd Ms = Eigen::MatrixXcd::Zero(nc, N);
  Eigen::VectorXcd bs(nc);
  Eigen::MatrixXd Mq = Eigen::MatrixXd::Zero(nc, N);
  Eigen::VectorXd bq(nc);
  for (int c = 0; c < nc; ++c) {
    const Corner& co = lat.corners[c];
    if (co.v > 0) {
      Ms(c, col_v(co.v)) += 1.0;
      Mq(c, col_v(co.v)) += 1.0;
    }
    Ms(c, col_f(co.f)) -= 1.0;
    Mq(c, col_f(co.f)) -= 1.0;
    Ms(c, cL1) -= co.fs1;
    Ms(c, cL2) -= co.fs2;
    Mq(c, cL1) -= co.fs1;
    Mq(c, cL2) -= co.fs2;
    bs(c) = se.X[c] * se.X[c];
    bq(c) = std::norm(se.X[c]);
  }
  Eigen::VectorXcd ws = Ms.colPivHouseholderQr().solve(bs);
  Eigen::VectorXd wq = Mq.colPivHouseholderQr().solve(bq);
  double scale_s = bs.cwiseAbs().maxCoeff();
  if ((Ms * ws - bs).cwiseAbs().maxCoeff() > 1e-9 * scale_s)
    throw InvariantError("S-increments do not close");
  if ((Mq * wq - bq).cwiseAbs().maxCoeff() > 1e-9 * scale_s)
    throw InvariantError("Q-increments do not close");

  se.Sv.resize(nv);
  se.Sf.resize(nf);
  se.Qv.resize(nv);
  se.Qf.resize(nf);
  se.Sv[0] = 0;
  se.Qv[0] = 0;
  for (int v = 1; v < nv; ++v) se.Sv[v] = ws(col_v(v)), se.Qv[v] = wq(col_v(v));
  for (int f = 0; f < nf; ++f) se.Sf[f] = ws(col_f(f)), se.Qf[f] = wq(col_f(f));
  se.L1 = ws(cL1);
  se.L2 = ws(cL2);
  se.q1 = wq(cL1);
  se.q2 = wq(cL2);
  if (std::abs(se.q1) + std::abs(se.q2) > 1e-8 * scale_s)
    throw InvariantError("Q-periods failed to vanish");

  // normalize: L1 -> |declared period 1| > 0, then fix orientation
  double p1len = std::hypot(lat.per1.x, lat.per1.y);
  cplx g = p1len / se.L1;
  cplx gs = std::sqrt(g);
  for (auto& z : se.Sv) z *= g;
  for (auto& z : se.Sf) z *= g;
  se.L1 *= g;
  se.L2 *= g;
  for (auto& z : se.X) z *= gs;
  double ga = std::abs(g);
  for (auto& x : se.Qv) x *= ga;
  for (auto& x : se.Qf) x *= ga;
  se.q1 *= ga;
  se.q2 *= ga;

  auto P0 = se.quad_points(0);
  double sh = 0;
  for (int k = 0; k < 4; ++k) {
    cplx a = P0[k], b = P0[(k + 1) % 4];
    sh += a.real() * b.imag() - a.imag() * b.real();
  }
  if (sh < 0) {
    for (auto& z : se.Sv) z = std::conj(z);
    for (auto& z : se.Sf) z = std::conj(z);
    for (auto& z : se.X) z = std::conj(z);
    se.L1 = std::conj(se.L1);
    se.L2 = std::conj(se.L2);
    se.tau = std::conj(se.tau);
  }

  se.Sz.resize(lat.ne());
  se.rz.resize(lat.ne());
  for (int e = 0; e < lat.ne(); ++e) se.Sz[e] = incircle(se.quad_points(e), &se.rz[e]);
  return se;
}

double recover_theta(const SEmbedding& se, int e) {
  auto P = se.quad_points(e);
  double hv0 = 0.5 * corner_angle(P[0], P[1], P[3]);
  double hf0 = 0.5 * corner_angle(P[1], P[2], P[0]);
  double hv1 = 0.5 * corner_angle(P[2], P[3], P[1]);
  double hf1 = 0.5 * corner_angle(P[3], P[0], P[2]);
  return std::atan(std::sqrt(std::sin(hv0) * std::sin(hv1) / (std::sin(hf0) * std::sin(hf1))));
}

UnifReport check_unif(const SEmbedding& se) {
  UnifReport r;
  r.r_min = 1e300;
  r.theta_min = 1e300;
  for (int e = 0; e < se.lat.ne(); ++e) {
    r.r_min = std::min(r.r_min, se.rz[e]);
    r.r_max = std::max(r.r_max, se.rz[e]);
    double th = recover_theta(se, e);
    r.theta_min = std::min({r.theta_min, th, kPi / 2 - th});
  }
  return r;
}

void check_properness(const SEmbedding& se) {
  const PeriodicLattice& lat = se.lat;
  double cell_area = std::abs((std::conj(se.L1) * se.L2).imag());
  double quad_area = 0;
  for (int e = 0; e < lat.ne(); ++e) {
    auto P = se.quad_points(e);
    double a = 0;
    for (int k = 0; k < 4; ++k) {
      cplx u = P[(k + 1) % 4] - P[k], w = P[(k + 2) % 4] - P[(k + 1) % 4];
      double cr = u.real() * w.imag() - u.imag() * w.real();
      if (!(cr > 0)) throw InvariantError("quad image not convex/ccw at edge " + std::to_string(e));
      cplx x = P[k], y = P[(k + 1) % 4];
      a += 0.5 * (x.real() * y.imag() - x.imag() * y.real());
    }
    quad_area += a;
  }
  if (std::abs(quad_area - cell_area) > 1e-9 * cell_area)
    throw InvariantError("quad areas do not tile the period cell (degree != 1)");
  // full angle fans around every vertex and face image
  for (int v = 0; v < lat.nv(); ++v) {
    double sum = 0;
    for (DirRef d : lat.rot[v]) {
      auto P = se.quad_points(d.e);
      sum += d.end == 0 ? corner_angle(P[0], P[1], P[3]) : corner_angle(P[2], P[3], P[1]);
    }
    if (std::abs(sum - 2 * kPi) > 1e-9)
      throw InvariantError("angle fan around vertex " + std::to_string(v) + " is not 2*pi");
  }
  for (int f = 0; f < lat.nf(); ++f) {
    double sum = 0;
    for (DirRef d : lat.face_walk[f]) {
      auto P = se.quad_points(d.e);
      sum += d.end == 1 ? corner_angle(P[1], P[2], P[0]) : corner_angle(P[3], P[0], P[2]);
    }
    if (std::abs(sum - 2 * kPi) > 1e-9)
      throw InvariantError("angle fan around face " + std::to_string(f) + " is not 2*pi");
  }
}

}  // namespace ising
