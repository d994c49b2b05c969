#pragma once
// Small numeric and string helpers shared across the toolkit.

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace ising {

// Neumaier compensated accumulator; keeps O(eps) error over ~2^28 additions.
struct KahanSum {
  double s = 0.0, c = 0.0;
  void add(double x) {
    double t = s + x;
    if (std::abs(s) >= std::abs(x))
      c += (s - t) + x;
    else
      c += (x - t) + s;
    s = t;
  }
  double value() const { return s + c; }
};

// Thrown when a structural invariant fails (CLI exit code 4).
struct InvariantError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
// Thrown when a precondition/budget gate fails (CLI exit code 3).
struct GateError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
// Thrown on malformed input files or flags (CLI exit code 2).
struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Weighted least-squares fit of y = a + b*x; weights w_i = 1/sigma_i^2.
// Returns {a, b, stderr_a, stderr_b}.
struct LineFit {
  double a = 0, b = 0, sa = 0, sb = 0;
};
LineFit fit_line_weighted(const std::vector<double>& x, const std::vector<double>& y,
                          const std::vector<double>& sigma);

std::string sha256_hex(const void* data, size_t len);
inline std::string sha256_hex(const std::string& s) { return sha256_hex(s.data(), s.size()); }

// Locale-independent float formatting used by all data writers.
std::string fmt_g17(double v);

}  // namespace ising
