#include "ising/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include "json.hpp"

namespace ising {

double theta_of_weight(double x) { return 2.0 * std::atan(x); }
double weight_of_theta(double th) { return std::tan(th / 2.0); }
double dual_weight(double x) { return (1.0 - x) / (1.0 + x); }

void PeriodicLattice::set_weight(int e, double x) {
  if (!(x > 0.0 && x < 1.0)) throw GateError("edge weight outside (0,1)");
  edges[e].weight = x;
  if (!quads.empty()) quads[e].theta = theta_of_weight(x);
}

void PeriodicLattice::scale_weights(double t) {
  for (int e = 0; e < ne(); ++e) set_weight(e, edges[e].weight * t);
}

namespace {

struct DirInfo {
  int head = 0, tail = 0;
  int hs1 = 0, hs2 = 0;  // head cell minus tail cell
};

DirInfo dir_info(const EdgeSpec& ed, int dir) {
  if (dir == 0) return {ed.v1, ed.v0, ed.s1, ed.s2};
  return {ed.v0, ed.v1, -ed.s1, -ed.s2};
}

}  // namespace

void PeriodicLattice::finalize() {
  const int V = nv(), F = nf(), E = ne();
  if (V <= 0 || F <= 0 || E <= 0) throw ParseError("lattice needs vertices, faces, edges");
  if (V - E + F != 0)
    throw ParseError("Euler count V-E+F must be 0 on the torus, got " +
                     std::to_string(V - E + F));
  double det = per1.x * per2.y - per1.y * per2.x;
  if (std::abs(det) < 1e-12) throw ParseError("periods are degenerate");
  for (auto& ed : edges) {
    if (ed.v0 < 0 || ed.v0 >= V || ed.v1 < 0 || ed.v1 >= V) throw ParseError("edge vertex id out of range");
    if (ed.f_left < 0 || ed.f_left >= F || ed.f_right < 0 || ed.f_right >= F)
      throw ParseError("edge face id out of range");
    if (!(ed.weight > 0.0 && ed.weight < 1.0)) throw GateError("edge weight outside (0,1)");
  }
  if ((int)rot.size() != V) throw ParseError("rotation must cover every vertex");

  // each edge end appears exactly once across all rotations
  std::vector<std::array<int, 2>> end_seen(E, {0, 0});
  std::vector<std::array<int, 2>> end_slot(E, {-1, -1});  // slot of (e,end) in rot[v]
  for (int v = 0; v < V; ++v) {
    for (int k = 0; k < (int)rot[v].size(); ++k) {
      DirRef d = rot[v][k];
      if (d.e < 0 || d.e >= E || d.end < 0 || d.end > 1) throw ParseError("bad rotation entry");
      int want = d.end == 0 ? edges[d.e].v0 : edges[d.e].v1;
      if (want != v) throw ParseError("rotation lists an edge end at the wrong vertex");
      if (end_seen[d.e][d.end]++) throw ParseError("edge end repeated in rotation");
      end_slot[d.e][d.end] = k;
    }
  }
  for (int e = 0; e < E; ++e)
    if (!end_seen[e][0] || !end_seen[e][1]) throw ParseError("edge end missing from rotation");

  // trace left-face walks; each directed edge (e,dir) lies on exactly one
  auto rot_slot = [&](int e, int end) { return end_slot[e][end]; };
  std::vector<std::array<int, 2>> face_of_dir(E, {-1, -1});
  std::vector<std::array<std::array<int, 2>, 2>> lf_cell(E);  // cell of left face copy rel tail
  int cycles = 0;
  face_degree.assign(F, 0);
  face_walk.assign(F, {});
  std::vector<int> face_claimed(F, 0);
  for (int e0 = 0; e0 < E; ++e0)
    for (int dir0 = 0; dir0 < 2; ++dir0) {
      if (face_of_dir[e0][dir0] >= 0) continue;
      // declared face on the left of this directed edge
      int f = dir0 == 0 ? edges[e0].f_left : edges[e0].f_right;
      if (face_claimed[f]++) throw ParseError("two face walks claim face " + std::to_string(f));
      ++cycles;
      int e = e0, dir = dir0;
      int a1 = 0, a2 = 0;  // tail cell of current directed edge (anchor tail = origin)
      int deg = 0;
      do {
        int fdecl = dir == 0 ? edges[e].f_left : edges[e].f_right;
        if (fdecl != f) throw ParseError("face walk disagrees with declared f_left/f_right");
        if (face_of_dir[e][dir] >= 0) throw ParseError("face walk self-intersects");
        face_of_dir[e][dir] = f;
        lf_cell[e][dir] = {-a1, -a2};  // face's canonical copy rel this dir's tail at origin
        face_walk[f].push_back({e, dir});
        ++deg;
        if (deg > 2 * E) throw ParseError("face walk does not close");
        DirInfo di = dir_info(edges[e], dir);
        a1 += di.hs1;
        a2 += di.hs2;
        // at the head, step one slot clockwise from the reversed edge
        int w = di.head;
        int k = rot_slot(e, dir == 0 ? 1 : 0);
        int m = (int)rot[w].size();
        DirRef nxt = rot[w][(k - 1 + m) % m];
        e = nxt.e;
        dir = nxt.end == 0 ? 0 : 1;
      } while (!(e == e0 && dir == dir0));
      if (a1 != 0 || a2 != 0) throw ParseError("face walk winds around the torus");
      face_degree[f] = deg;
    }
  if (cycles != F) throw ParseError("face walk count != declared face count");

  lshift.assign(E, {0, 0});
  rshift.assign(E, {0, 0});
  for (int e = 0; e < E; ++e) {
    // both sides expressed relative to v0's cell (the trace of dir=1 is
    // anchored at v1, so shift it back by the edge crossing vector)
    lshift[e] = lf_cell[e][0];
    rshift[e] = {lf_cell[e][1][0] + edges[e].s1, lf_cell[e][1][1] + edges[e].s2};
  }

  // corners: wedge between rot[v][k] and rot[v][k+1]; its face is the left
  // face of rot[v][k] outgoing, which must equal the right face of rot[v][k+1]
  corners.clear();
  corner_at.assign(V, {});
  auto left_of_outgoing = [&](DirRef d) {
    int dir = d.end == 0 ? 0 : 1;
    return std::array<int, 3>{face_of_dir[d.e][dir], lf_cell[d.e][dir][0], lf_cell[d.e][dir][1]};
  };
  auto right_of_outgoing = [&](DirRef d) {
    int dir = d.end == 0 ? 0 : 1;
    int rdir = 1 - dir;
    DirInfo di = dir_info(edges[d.e], dir);
    // left face of the reversed edge, re-expressed relative to this tail
    return std::array<int, 3>{face_of_dir[d.e][rdir], lf_cell[d.e][rdir][0] + di.hs1,
                              lf_cell[d.e][rdir][1] + di.hs2};
  };
  for (int v = 0; v < V; ++v) {
    int m = (int)rot[v].size();
    if (m < 2) throw ParseError("vertex degree must be >= 2");
    corner_at[v].assign(m, -1);
    for (int k = 0; k < m; ++k) {
      auto lf = left_of_outgoing(rot[v][k]);
      auto rf = right_of_outgoing(rot[v][(k + 1) % m]);
      if (lf != rf) throw ParseError("rotation and face sides disagree at a corner");
      corner_at[v][k] = (int)corners.size();
      corners.push_back({v, k, lf[0], lf[1], lf[2]});
    }
  }

  // quads
  quads.assign(E, {});
  for (int e = 0; e < E; ++e) {
    Quad q;
    q.e = e;
    int m0 = (int)rot[edges[e].v0].size(), m1 = (int)rot[edges[e].v1].size();
    int k0 = end_slot[e][0], k1 = end_slot[e][1];
    q.c01 = corner_at[edges[e].v0][k0];
    q.c00 = corner_at[edges[e].v0][(k0 - 1 + m0) % m0];
    q.c10 = corner_at[edges[e].v1][k1];
    q.c11 = corner_at[edges[e].v1][(k1 - 1 + m1) % m1];
    q.theta = theta_of_weight(edges[e].weight);
    quads[e] = q;
    // sanity: corner faces match declared sides (q = 0 right, q = 1 left)
    if (corners[q.c00].f != edges[e].f_right || corners[q.c01].f != edges[e].f_left ||
        corners[q.c10].f != edges[e].f_right || corners[q.c11].f != edges[e].f_left)
      throw InvariantError("quad corner faces disagree with edge sides");
  }
}

PeriodicLattice make_builtin(const std::string& name, double param) {
  PeriodicLattice L;
  if (name == "square") {
    double x = param > 0 ? param : std::sqrt(2.0) - 1.0;
    L.vpos = {{0, 0}};
    L.fpos = {{0.5, 0.5}};
    L.per1 = {1, 0};
    L.per2 = {0, 1};
    L.edges = {{0, 0, 1, 0, 0, 0, x}, {0, 0, 0, 1, 0, 0, x}};
    L.rot = {{{0, 0}, {1, 0}, {0, 1}, {1, 1}}};
  } else if (name == "hex") {
    double x = param > 0 ? param : 1.0 / std::sqrt(3.0);
    double s3 = std::sqrt(3.0);
    L.vpos = {{0, 0}, {0.5, 0.5 / s3}};
    L.fpos = {{0.5, 0.5 * s3 - 0.5 / s3}};
    L.per1 = {1, 0};
    L.per2 = {0.5, 0.5 * s3};
    L.edges = {{0, 1, 0, 0, 0, 0, x}, {0, 1, -1, 0, 0, 0, x}, {0, 1, 0, -1, 0, 0, x}};
    L.rot = {{{0, 0}, {1, 0}, {2, 0}}, {{2, 1}, {0, 1}, {1, 1}}};
  } else if (name == "brick-asym") {
    double t = param > 0 ? param : 1.0 / std::sqrt(2.0);
    L.vpos = {{0, 0}, {1, 0}};
    L.fpos = {{1, 0.5}};
    L.per1 = {2, 0};
    L.per2 = {1, 1};
    // e0,e1: brick halves (weight t); e2: mortar joint (weight t/2)
    L.edges = {{0, 1, 0, 0, 0, 0, t}, {1, 0, 1, 0, 0, 0, t}, {0, 1, -1, 1, 0, 0, 0.5 * t}};
    L.rot = {{{0, 0}, {2, 0}, {1, 1}}, {{1, 0}, {0, 1}, {2, 1}}};
  } else {
    throw ParseError("unknown builtin lattice: " + name);
  }
  L.finalize();
  return L;
}

PeriodicLattice lattice_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const std::exception& ex) {
    throw ParseError(std::string("lattice json: ") + ex.what());
  }
  PeriodicLattice L;
  try {
    std::map<long long, int> vid, fid, eid;
    for (auto& v : j.at("vertices")) {
      vid[v.at("id").get<long long>()] = (int)L.vpos.size();
      L.vpos.push_back({v.at("x").get<double>(), v.at("y").get<double>()});
    }
    for (auto& f : j.at("faces")) {
      fid[f.at("id").get<long long>()] = (int)L.fpos.size();
      L.fpos.push_back({f.at("x").get<double>(), f.at("y").get<double>()});
    }
    auto per = j.at("periods");
    L.per1 = {per.at(0).at(0).get<double>(), per.at(0).at(1).get<double>()};
    L.per2 = {per.at(1).at(0).get<double>(), per.at(1).at(1).get<double>()};
    for (auto& e : j.at("edges")) {
      EdgeSpec ed;
      eid[e.at("id").get<long long>()] = (int)L.edges.size();
      ed.v0 = vid.at(e.at("v0").get<long long>());
      ed.v1 = vid.at(e.at("v1").get<long long>());
      ed.f_left = fid.at(e.at("f_left").get<long long>());
      ed.f_right = fid.at(e.at("f_right").get<long long>());
      ed.weight = e.at("weight").get<double>();
      if (e.contains("shift")) {
        ed.s1 = e.at("shift").at(0).get<int>();
        ed.s2 = e.at("shift").at(1).get<int>();
      }
      L.edges.push_back(ed);
    }
    L.rot.assign(L.vpos.size(), {});
    std::map<long long, std::vector<long long>> rot_raw;
    for (auto& [key, val] : j.at("rotation").items()) {
      long long v = std::stoll(key);
      std::vector<int> seen_count(L.edges.size(), 0);
      for (auto& item : val) {
        DirRef d;
        if (item.is_object()) {
          d.e = eid.at(item.at("edge").get<long long>());
          d.end = item.at("end").get<int>();
        } else {
          d.e = eid.at(item.get<long long>());
          const EdgeSpec& ed = L.edges[d.e];
          int vv = vid.at(v);
          if (ed.v0 == vv && ed.v1 == vv)
            d.end = seen_count[d.e];  // self-loop: first occurrence = tail end
          else if (ed.v0 == vv)
            d.end = 0;
          else if (ed.v1 == vv)
            d.end = 1;
          else
            throw ParseError("rotation lists edge not incident to vertex");
        }
        ++seen_count[d.e];
        L.rot[vid.at(v)].push_back(d);
      }
    }
  } catch (const nlohmann::json::exception& ex) {
    throw ParseError(std::string("lattice json: ") + ex.what());
  }
  L.finalize();
  return L;
}

std::string lattice_to_json(const PeriodicLattice& L) {
  nlohmann::json j;
  j["vertices"] = nlohmann::json::array();
  for (int v = 0; v < L.nv(); ++v)
    j["vertices"].push_back({{"id", v}, {"x", L.vpos[v].x}, {"y", L.vpos[v].y}});
  j["faces"] = nlohmann::json::array();
  for (int f = 0; f < L.nf(); ++f)
    j["faces"].push_back({{"id", f}, {"x", L.fpos[f].x}, {"y", L.fpos[f].y}});
  j["periods"] = {{L.per1.x, L.per1.y}, {L.per2.x, L.per2.y}};
  j["edges"] = nlohmann::json::array();
  for (int e = 0; e < L.ne(); ++e) {
    const EdgeSpec& ed = L.edges[e];
    j["edges"].push_back({{"id", e},
                          {"v0", ed.v0},
                          {"v1", ed.v1},
                          {"f_left", ed.f_left},
                          {"f_right", ed.f_right},
                          {"shift", {ed.s1, ed.s2}},
                          {"weight", ed.weight}});
  }
  j["rotation"] = nlohmann::json::object();
  for (int v = 0; v < L.nv(); ++v) {
    nlohmann::json arr = nlohmann::json::array();
    for (auto d : L.rot[v]) arr.push_back({{"edge", d.e}, {"end", d.end}});
    j["rotation"][std::to_string(v)] = arr;
  }
  return j.dump(2);
}

std::string lattice_digest(const PeriodicLattice& L) { return sha256_hex(lattice_to_json(L)); }

}  // namespace ising
