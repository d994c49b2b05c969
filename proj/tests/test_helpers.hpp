#pragma once
// shared by the unit test binaries
#include "ising/lattice.hpp"

// n x n block of the square lattice as one fundamental domain
inline ising::PeriodicLattice square_block(int n, double x) {
  using namespace ising;
  PeriodicLattice L;
  auto vid = [&](int i, int j) { return n * ((i + n) % n) + (j + n) % n; };
  auto hid = [&](int i, int j) { return n * ((i + n) % n) + (j + n) % n; };
  auto wid = [&](int i, int j) { return n * n + n * ((i + n) % n) + (j + n) % n; };
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) L.vpos.push_back({(double)i, (double)j});
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) L.fpos.push_back({i + 0.5, j + 0.5});
  L.per1 = {(double)n, 0};
  L.per2 = {0, (double)n};
  L.edges.resize(2 * n * n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      L.edges[hid(i, j)] = {vid(i, j), vid(i + 1, j), i == n - 1 ? 1 : 0, 0,
                            vid(i, j), vid(i, j - 1), x};
      L.edges[wid(i, j)] = {vid(i, j), vid(i, j + 1), 0, j == n - 1 ? 1 : 0,
                            vid(i - 1, j), vid(i, j), x};
    }
  L.rot.assign(n * n, {});
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      L.rot[vid(i, j)] = {{hid(i, j), 0}, {wid(i, j), 0}, {hid(i - 1, j), 1}, {wid(i, j - 1), 1}};
  L.finalize();
  return L;
}
