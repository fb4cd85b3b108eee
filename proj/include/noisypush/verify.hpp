#pragma once

#include <cmath>
#include <cstdint>
#include <sstream>
#include <string>
#include <vector>

#include "noisypush/analysis.hpp"
#include "noisypush/rng.hpp"
#include "noisypush/stats.hpp"

namespace noisypush::verify {

struct CheckRow {
  std::string name;
  bool pass = false;
  double worst_slack = 0.0;  // smallest margin by which the check held
  std::string note;
};

/// Exhaustive scan of the majority-amplification bound: k in 2..4, odd
/// ell <= 15, q on a 0.05 grid with a unique plurality opinion.
inline CheckRow check_amplification_scan() {
  CheckRow row{"majority amplification bound (exhaustive grid)"};
  std::int64_t points = 0, violations = 0;
  double min_slack = 1e300;
  for (std::uint32_t k = 2; k <= 4; ++k) {
    const int denom = 20;
    std::vector<int> comp(k, 0);
    comp[k - 1] = denom;
    while (true) {
      std::vector<double> q(k);
      for (std::uint32_t i = 0; i < k; ++i) q[i] = comp[i] / static_cast<double>(denom);
      int best = 0, ties = 0;
      for (std::uint32_t i = 0; i < k; ++i) best = std::max(best, comp[i]);
      for (std::uint32_t i = 0; i < k; ++i)
        if (comp[i] == best) ++ties;
      if (ties == 1) {
        for (std::int64_t ell = 3; ell <= 15; ell += 2) {
          const auto res = analysis::check_amplification(ell, q, k);
          ++points;
          if (!res.ok || !res.strict_ok) ++violations;
          min_slack = std::min(min_slack, res.exact_diff - res.bound);
        }
      }
      std::uint32_t pos = 0;
      while (pos < k - 1) {
        if (comp[k - 1] > 0) {
          ++comp[pos];
          --comp[k - 1];
          break;
        }
        comp[k - 1] += comp[pos];
        comp[pos] = 0;
        ++pos;
      }
      if (pos == k - 1) break;
    }
  }
  row.pass = violations == 0;
  row.worst_slack = min_slack;
  std::ostringstream note;
  note << points << " grid points, " << violations << " violations";
  row.note = note.str();
  return row;
}

/// Binary-case amplification: exact binomial lead vs sqrt(2l/pi) g(d, l)
/// for odd ell <= 21 and leads d = 0.02 .. 0.5.
inline CheckRow check_binary_amplification() {
  CheckRow row{"binary majority lead lower bound"};
  std::int64_t violations = 0;
  double min_slack = 1e300;
  for (std::int64_t ell = 3; ell <= 21; ell += 2) {
    for (int di = 1; di <= 25; ++di) {
      const double d = 0.02 * di;
      const std::vector<double> q{0.5 + d / 2.0, 0.5 - d / 2.0};
      const auto dist = analysis::exact_maj_distribution(ell, q);
      const double diff = dist.probs[0] - dist.probs[1];
      const double bound = std::sqrt(2.0 * static_cast<double>(ell) / M_PI) * analysis::g(d, ell);
      if (diff < bound - 1e-12) ++violations;
      min_slack = std::min(min_slack, diff - bound);
    }
  }
  row.pass = violations == 0;
  row.worst_slack = min_slack;
  row.note = std::to_string(violations) + " violations over 250 points";
  return row;
}

/// Binomial-tail / incomplete-beta identity on the grid ell <= 30, all j,
/// p in {0.05, ..., 0.95}.
inline CheckRow check_binbeta_grid() {
  CheckRow row{"binomial tail = incomplete beta (quadrature)"};
  double worst = 0.0;
  for (std::int64_t ell = 1; ell <= 30; ++ell)
    for (std::int64_t j = 0; j <= ell; ++j)
      for (int pi = 1; pi <= 19; ++pi) {
        const auto [lhs, rhs] = analysis::binbeta_identity(ell, j, 0.05 * pi);
        worst = std::max(worst, std::fabs(lhs - rhs));
      }
  row.pass = worst <= 1e-9;
  row.worst_slack = 1e-9 - worst;
  std::ostringstream note;
  note << "max |lhs-rhs| = " << worst;
  row.note = note.str();
  return row;
}

/// Sample-size parity: odd ell and ell+1 give the identical majority law,
/// and ell+2 moves toward the leading opinion. Scan: odd ell <= 21,
/// q1 in {0.5, 0.55, ..., 0.95}.
inline CheckRow check_parity_scan() {
  CheckRow row{"sample-size parity and monotone step"};
  std::int64_t violations = 0;
  double worst_eq = 0.0;
  for (std::int64_t ell = 3; ell <= 21; ell += 2) {
    for (int qi = 0; qi <= 9; ++qi) {
      const double q1 = 0.5 + 0.05 * qi;
      const auto rep = analysis::parity_check(ell, {q1, 1.0 - q1});
      if (!rep.equality_holds || !rep.monotone_holds) ++violations;
      worst_eq = std::max(worst_eq, std::fabs(rep.p_ell_1 - rep.p_ell1_1));
    }
  }
  row.pass = violations == 0;
  row.worst_slack = 1e-12 - worst_eq;
  std::ostringstream note;
  note << violations << " violations, max equality gap " << worst_eq;
  row.note = note.str();
  return row;
}

/// g monotone in the bias, anti-monotone in the sample size, on the
/// 0.01 x {1..200} grid, including branch continuity at delta = 1/sqrt(ell).
inline CheckRow check_g_monotonicity() {
  CheckRow row{"amplification kernel monotonicity"};
  const auto rep = analysis::g_monotonicity_scan();
  row.pass = rep.pass;
  row.worst_slack = rep.worst_step;
  row.note = std::to_string(rep.x_violations) + " bias violations, " +
             std::to_string(rep.y_violations) + " sample-size violations";
  return row;
}

/// The claimed central-binomial sandwich, checked against exact values
/// rather than trusted. The row reports how many r pass each side; its own
/// pass condition is the report's internal consistency (the upper bound and
/// the vanishing-ratio limit), since the claimed lower-bound constant is
/// verifiably wrong for small r.
inline CheckRow check_stirling_report() {
  CheckRow row{"central binomial bounds report"};
  const auto rows = analysis::stirling_sandwich_report(60);
  std::int64_t lower_fail = 0, upper_fail = 0;
  for (const auto& r : rows) {
    if (!r.lower_holds) ++lower_fail;
    if (!r.upper_holds) ++upper_fail;
  }
  const auto [lo500, up500] = analysis::stirling_central_binomial_bounds(500);
  const double ratio = up500 / lo500;
  row.pass = upper_fail == 0 && ratio < 1.001;
  row.worst_slack = 1.001 - ratio;
  std::ostringstream note;
  note << "lower bound fails at " << lower_fail << "/60 r values, upper holds at "
       << (60 - upper_fail) << "/60; ratio(500) = " << ratio;
  row.note = note.str();
  return row;
}

/// Monte-Carlo check of the signed-sum tail bound: the empirical tail
/// frequency never exceeds the closed form.
inline CheckRow check_signed_sum_tail() {
  CheckRow row{"signed-sum tail bound (Monte Carlo)"};
  const std::int64_t n = 2000;
  const double p = 0.4, q = 0.3, theta = 0.2;
  const double bound = analysis::chernoff_diff_bound(n, p, 1.0 - p - q, q, theta);
  const double expectation = static_cast<double>(n) * (p - q);
  const double cutoff = (1.0 - theta) * expectation - theta * static_cast<double>(n);
  Rng rng = Rng::stream(20240601, 7);
  const std::int64_t trials = 200000;
  std::int64_t hits = 0;
  for (std::int64_t t = 0; t < trials; ++t) {
    std::int64_t sum = 0;
    for (std::int64_t i = 0; i < n; ++i) {
      const double u = rng.next_double();
      if (u < p) ++sum;
      else if (u >= p + (1.0 - p - q)) --sum;
    }
    if (static_cast<double>(sum) <= cutoff) ++hits;
  }
  const double freq = static_cast<double>(hits) / static_cast<double>(trials);
  row.pass = freq <= bound;
  row.worst_slack = bound - freq;
  std::ostringstream note;
  note << "empirical " << freq << " <= bound " << bound;
  row.note = note.str();
  return row;
}

/// Smallest odd sample size for which the amplification bound holds on the
/// whole grid (the analysis only promises existence of such a threshold).
inline CheckRow check_amplification_threshold() {
  CheckRow row{"smallest grid-valid sample size"};
  std::ostringstream note;
  row.pass = true;
  for (std::uint32_t k = 2; k <= 4; ++k) {
    std::int64_t found = -1;
    for (std::int64_t ell = 1; ell <= 15 && found < 0; ell += 2) {
      bool all_ok = true;
      const int denom = 20;
      std::vector<int> comp(k, 0);
      comp[k - 1] = denom;
      while (all_ok) {
        std::vector<double> q(k);
        for (std::uint32_t i = 0; i < k; ++i) q[i] = comp[i] / static_cast<double>(denom);
        int best = 0, ties = 0;
        for (std::uint32_t i = 0; i < k; ++i) best = std::max(best, comp[i]);
        for (std::uint32_t i = 0; i < k; ++i)
          if (comp[i] == best) ++ties;
        if (ties == 1 && !analysis::check_amplification(ell, q, k).ok) all_ok = false;
        std::uint32_t pos = 0;
        while (pos < k - 1) {
          if (comp[k - 1] > 0) {
            ++comp[pos];
            --comp[k - 1];
            break;
          }
          comp[k - 1] += comp[pos];
          comp[pos] = 0;
          ++pos;
        }
        if (pos == k - 1) break;
      }
      if (all_ok) found = ell;
    }
    if (found < 0) row.pass = false;
    note << "k=" << k << ": ell0=" << found << "  ";
  }
  row.note = note.str();
  return row;
}

inline std::vector<CheckRow> run_all() {
  return {check_amplification_scan(), check_binary_amplification(), check_binbeta_grid(),
          check_parity_scan(),        check_g_monotonicity(),       check_stirling_report(),
          check_signed_sum_tail(),    check_amplification_threshold()};
}

}  // namespace noisypush::verify
