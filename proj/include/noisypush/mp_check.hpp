#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

#include "noisypush/core.hpp"
#include "noisypush/noise.hpp"

namespace noisypush {

inline constexpr double kLpFeasTolerance = 1e-9;

/// Result of the majority-preservation check for matrix P, opinion m and
/// bias delta: for every rival i != m, the exact minimum of
/// (c.P)_m - (c.P)_i over all delta-biased opinion distributions c, plus the
/// minimizing distribution. P is (eps, delta)-majority-preserving iff every
/// margin exceeds eps*delta.
struct MpReport {
  OpinionId m = 1;
  double delta = 0.0;
  std::vector<OpinionId> rivals;
  std::vector<double> margins;
  std::vector<std::vector<double>> witnesses;

  double min_margin() const {
    double v = std::numeric_limits<double>::infinity();
    for (double g : margins) v = std::min(v, g);
    return v;
  }
  bool is_mp_for(double epsilon) const { return min_margin() > epsilon * delta; }
  /// Largest eps for which the matrix is majority preserving at this delta
  /// (supremum; the property holds strictly below it).
  double epsilon_threshold() const { return min_margin() / delta; }
};

namespace detail {

/// Gaussian elimination with partial pivoting on a dense k x k system.
/// Returns nothing when the system is (near-)singular.
inline std::optional<std::vector<double>> solve_linear(std::vector<double> a,
                                                       std::vector<double> b,
                                                       std::size_t k) {
  for (std::size_t col = 0; col < k; ++col) {
    std::size_t pivot = col;
    double best = std::fabs(a[col * k + col]);
    for (std::size_t r = col + 1; r < k; ++r) {
      const double v = std::fabs(a[r * k + col]);
      if (v > best) {
        best = v;
        pivot = r;
      }
    }
    if (best < 1e-12) return std::nullopt;
    if (pivot != col) {
      for (std::size_t j = 0; j < k; ++j) std::swap(a[col * k + j], a[pivot * k + j]);
      std::swap(b[col], b[pivot]);
    }
    const double inv = 1.0 / a[col * k + col];
    for (std::size_t r = col + 1; r < k; ++r) {
      const double f = a[r * k + col] * inv;
      if (f == 0.0) continue;
      for (std::size_t j = col; j < k; ++j) a[r * k + j] -= f * a[col * k + j];
      b[r] -= f * b[col];
    }
  }
  std::vector<double> x(k);
  for (std::size_t row = k; row-- > 0;) {
    double v = b[row];
    for (std::size_t j = row + 1; j < k; ++j) v -= a[row * k + j] * x[j];
    x[row] = v / a[row * k + row];
  }
  return x;
}

}  // namespace detail

/// All vertices of the delta-biased polytope
///   {c >= 0, sum c = 1, c_m - c_j >= delta for j != m}.
/// Every vertex activates the simplex equality plus k-1 of the 2(k-1)
/// candidate constraints {c_j = 0} and {c_m - c_j = delta} (j != m);
/// singular subsets are skipped.
inline std::vector<std::vector<double>> biased_polytope_vertices(std::uint32_t k,
                                                                 OpinionId m,
                                                                 double delta) {
  if (m == kUndecided || m > k) throw BadRangeError("mp check: opinion out of range");
  if (!(delta > 0.0)) throw BadRangeError("mp check: delta must be positive");
  if (delta > 1.0) throw EmptyPolytopeError("delta > 1: no delta-biased distribution exists");

  struct Constraint {
    OpinionId j;
    bool is_zero;  // c_j = 0 if true, else c_m - c_j = delta
  };
  std::vector<Constraint> candidates;
  for (OpinionId j = 1; j <= k; ++j) {
    if (j == m) continue;
    candidates.push_back({j, true});
    candidates.push_back({j, false});
  }
  const std::size_t total = candidates.size();
  const std::size_t need = k - 1;

  std::vector<std::vector<double>> vertices;
  std::vector<std::size_t> pick(need);
  for (std::size_t i = 0; i < need; ++i) pick[i] = i;
  while (true) {
    std::vector<double> a(static_cast<std::size_t>(k) * k, 0.0);
    std::vector<double> b(k, 0.0);
    for (std::uint32_t j = 0; j < k; ++j) a[j] = 1.0;  // simplex equality
    b[0] = 1.0;
    for (std::size_t r = 0; r < need; ++r) {
      const Constraint& cst = candidates[pick[r]];
      if (cst.is_zero) {
        a[(r + 1) * k + (cst.j - 1)] = 1.0;
        b[r + 1] = 0.0;
      } else {
        a[(r + 1) * k + (m - 1)] = 1.0;
        a[(r + 1) * k + (cst.j - 1)] = -1.0;
        b[r + 1] = delta;
      }
    }
    if (auto x = detail::solve_linear(std::move(a), std::move(b), k)) {
      bool feasible = true;
      for (std::uint32_t j = 0; j < k && feasible; ++j) {
        if ((*x)[j] < -kLpFeasTolerance) feasible = false;
        if (j + 1 != m && (*x)[m - 1] - (*x)[j] < delta - kLpFeasTolerance) feasible = false;
      }
      if (feasible) vertices.push_back(std::move(*x));
    }

    // next combination
    std::size_t i = need;
    while (i > 0 && pick[i - 1] == total - need + (i - 1)) --i;
    if (i == 0) break;
    ++pick[i - 1];
    for (std::size_t r = i; r < need; ++r) pick[r] = pick[r - 1] + 1;
  }
  if (vertices.empty()) throw EmptyPolytopeError("delta-biased polytope is empty");
  return vertices;
}

/// Objective (c.P)_m - (c.P)_i at a given distribution c.
inline double mp_objective(const std::vector<double>& c, const NoiseMatrix& P, OpinionId m,
                           OpinionId i) {
  double v = 0.0;
  for (std::uint32_t t = 0; t < P.k(); ++t) v += c[t] * (P.at(t, m - 1) - P.at(t, i - 1));
  return v;
}

/// Exact per-rival minima of the post-channel lead over the delta-biased
/// polytope. A linear objective over a compact polytope attains its minimum
/// at a vertex, so vertex enumeration is exact.
inline MpReport mp_margin(const NoiseMatrix& P, OpinionId m, double delta) {
  P.validate();
  if (!(delta > 0.0 && delta <= 1.0)) throw BadRangeError("mp_margin: need 0 < delta <= 1");
  const auto vertices = biased_polytope_vertices(P.k(), m, delta);

  MpReport report;
  report.m = m;
  report.delta = delta;
  for (OpinionId i = 1; i <= P.k(); ++i) {
    if (i == m) continue;
    double best = std::numeric_limits<double>::infinity();
    const std::vector<double>* arg = nullptr;
    for (const auto& v : vertices) {
      const double obj = mp_objective(v, P, m, i);
      if (obj < best) {
        best = obj;
        arg = &v;
      }
    }
    report.rivals.push_back(i);
    report.margins.push_back(best);
    report.witnesses.push_back(*arg);
  }
  return report;
}

}  // namespace noisypush
