#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <vector>

#include "noisypush/core.hpp"
#include "noisypush/stats.hpp"

namespace noisypush::analysis {

inline constexpr std::int64_t kDefaultEnumBudget = 10'000'000;

/// Exact law of the most-frequent opinion in an i.i.d. sample of size ell
/// drawn from q, ties broken uniformly at random. strict_probs counts only
/// the outcomes with a unique mode.
struct MajDistribution {
  std::int64_t ell = 0;
  std::vector<double> q;
  std::vector<double> probs;
  std::vector<double> strict_probs;
};

namespace detail {

inline std::int64_t composition_count(std::int64_t ell, std::uint32_t k) {
  // C(ell + k - 1, k - 1) with overflow saturation
  long double v = 1.0L;
  for (std::uint32_t i = 1; i < k; ++i) v = v * static_cast<long double>(ell + i) / i;
  if (v > 9e17L) return std::numeric_limits<std::int64_t>::max();
  return static_cast<std::int64_t>(v + 0.5L);
}

}  // namespace detail

/// Enumerates every composition of ell into k parts with an iterative
/// odometer and accumulates the multinomial pmf (log-space) into the
/// tie-broken and strict mode probabilities.
inline MajDistribution exact_maj_distribution(std::int64_t ell, const std::vector<double>& q,
                                              std::int64_t budget = kDefaultEnumBudget) {
  const std::uint32_t k = static_cast<std::uint32_t>(q.size());
  if (ell < 1) throw BadRangeError("exact_maj_distribution: ell must be >= 1");
  if (k < 1) throw BadRangeError("exact_maj_distribution: empty q");
  double qs = 0.0;
  for (double v : q) {
    if (v < -kMassTolerance) throw BadRangeError("exact_maj_distribution: negative probability");
    qs += v;
  }
  if (std::fabs(qs - 1.0) > 1e-9) throw BadRangeError("exact_maj_distribution: q must sum to 1");
  if (detail::composition_count(ell, k) > budget)
    throw BudgetExceededError("exact_maj_distribution: composition count exceeds budget");

  std::vector<double> lgamma_table(static_cast<std::size_t>(ell) + 2);
  for (std::size_t i = 0; i < lgamma_table.size(); ++i)
    lgamma_table[i] = std::lgamma(static_cast<double>(i) + 1.0);
  std::vector<double> logq(k);
  for (std::uint32_t i = 0; i < k; ++i)
    logq[i] = q[i] > 0.0 ? std::log(q[i]) : -std::numeric_limits<double>::infinity();

  MajDistribution out;
  out.ell = ell;
  out.q = q;
  out.probs.assign(k, 0.0);
  out.strict_probs.assign(k, 0.0);

  std::vector<std::int64_t> x(k, 0);
  x[k - 1] = ell;
  std::vector<std::uint32_t> modes;
  modes.reserve(k);
  while (true) {
    double logp = lgamma_table[static_cast<std::size_t>(ell)];
    bool possible = true;
    for (std::uint32_t i = 0; i < k; ++i) {
      if (x[i] == 0) continue;
      if (q[i] <= 0.0) {
        possible = false;
        break;
      }
      logp += static_cast<double>(x[i]) * logq[i] - lgamma_table[static_cast<std::size_t>(x[i])];
    }
    if (possible) {
      const double p = std::exp(logp);
      std::int64_t mx = 0;
      for (std::uint32_t i = 0; i < k; ++i) mx = std::max(mx, x[i]);
      modes.clear();
      for (std::uint32_t i = 0; i < k; ++i)
        if (x[i] == mx) modes.push_back(i);
      const double share = p / static_cast<double>(modes.size());
      for (std::uint32_t i : modes) out.probs[i] += share;
      if (modes.size() == 1) out.strict_probs[modes[0]] += p;
    }

    // odometer over the first k-1 parts; the last part absorbs the remainder
    if (k == 1) break;
    std::uint32_t pos = 0;
    while (pos < k - 1) {
      if (x[k - 1] > 0) {
        ++x[pos];
        --x[k - 1];
        break;
      }
      x[k - 1] += x[pos];
      x[pos] = 0;
      ++pos;
    }
    if (pos == k - 1) break;
  }
  return out;
}

/// The bias-amplification kernel: increasing in delta up to 1/sqrt(ell),
/// constant beyond; non-increasing in ell.
inline double g(double delta, std::int64_t ell) {
  if (!(delta >= 0.0 && delta <= 1.0)) throw BadRangeError("g: delta must be in [0,1]");
  if (ell < 1) throw BadRangeError("g: ell must be >= 1");
  const double half = static_cast<double>(ell - 1) / 2.0;
  const double cap = 1.0 / std::sqrt(static_cast<double>(ell));
  if (delta < cap) return delta * std::pow(1.0 - delta * delta, half);
  return cap * std::pow(1.0 - 1.0 / static_cast<double>(ell), half);
}

/// Lower bound on Pr(maj = m) - Pr(maj = i) for a sample of odd size ell
/// drawn from a distribution whose leading opinion has lead delta:
/// sqrt(2 ell / pi) * g(delta, ell) / 4^(k-2).
inline double amplification_bound(double delta, std::int64_t ell, std::uint32_t k) {
  if (k < 2) throw BadRangeError("amplification_bound: k must be >= 2");
  if (ell < 1 || ell % 2 == 0) throw BadRangeError("amplification_bound: ell must be odd");
  return std::sqrt(2.0 * static_cast<double>(ell) / M_PI) * g(delta, ell) /
         std::pow(4.0, static_cast<double>(k) - 2.0);
}

struct AmplificationCheck {
  bool ok = false;         // exact lead >= closed-form bound
  bool strict_ok = false;  // tie-broken lead >= strict (unique-mode) lead, every rival
  double exact_diff = 0.0;
  double bound = 0.0;
  double delta = 0.0;
};

/// Compares the exact tie-broken majority lead of the plurality opinion of q
/// against amplification_bound at q's own bias.
inline AmplificationCheck check_amplification(std::int64_t ell, const std::vector<double>& q,
                                              std::uint32_t k,
                                              std::int64_t budget = kDefaultEnumBudget) {
  if (q.size() != k) throw BadRangeError("check_amplification: q size mismatch");
  std::uint32_t m = 0;
  for (std::uint32_t i = 1; i < k; ++i)
    if (q[i] > q[m]) m = i;
  double rival = -std::numeric_limits<double>::infinity();
  for (std::uint32_t i = 0; i < k; ++i)
    if (i != m) rival = std::max(rival, q[i]);
  const double delta = q[m] - rival;
  if (delta < 0.0) throw BadRangeError("check_amplification: no unique plurality opinion");

  const MajDistribution d = exact_maj_distribution(ell, q, budget);
  AmplificationCheck res;
  res.delta = delta;
  res.exact_diff = std::numeric_limits<double>::infinity();
  res.strict_ok = true;
  for (std::uint32_t i = 0; i < k; ++i) {
    if (i == m) continue;
    res.exact_diff = std::min(res.exact_diff, d.probs[m] - d.probs[i]);
    if (d.probs[m] - d.probs[i] < d.strict_probs[m] - d.strict_probs[i] - 1e-12)
      res.strict_ok = false;
  }
  res.bound = amplification_bound(delta, ell, k);
  res.ok = res.exact_diff >= res.bound - 1e-12;
  return res;
}

namespace detail {

inline double simpson(const std::function<double(double)>& f, double a, double b, double fa,
                      double fm, double fb, double whole, double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm), frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (depth <= 0 || std::fabs(delta) <= 15.0 * tol)
    return left + right + delta / 15.0;
  return simpson(f, a, m, fa, flm, fm, left, tol * 0.5, depth - 1) +
         simpson(f, m, b, fm, frm, fb, right, tol * 0.5, depth - 1);
}

inline double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                               double tol = 1e-12, int max_depth = 40) {
  const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return simpson(f, a, b, fa, fm, fb, whole, tol, max_depth);
}

}  // namespace detail

/// Both sides of the binomial-tail / incomplete-beta identity:
///   sum_{i > j} C(ell, i) p^i (1-p)^(ell-i)
///     = C(ell, j+1) (j+1) * int_0^p z^j (1-z)^(ell-j-1) dz.
/// The right side is evaluated by adaptive Simpson quadrature (the integrand
/// is polynomial, so the quadrature is exact to tolerance).
inline std::pair<double, double> binbeta_identity(std::int64_t ell, std::int64_t j, double p) {
  if (ell < 1 || j < 0 || j > ell) throw BadRangeError("binbeta_identity: need 0 <= j <= ell");
  if (!(p > 0.0 && p < 1.0)) throw BadRangeError("binbeta_identity: need 0 < p < 1");
  double lhs = 0.0;
  for (std::int64_t i = j + 1; i <= ell; ++i) {
    lhs += std::exp(stats::log_binom(ell, i) + static_cast<double>(i) * std::log(p) +
                    static_cast<double>(ell - i) * std::log1p(-p));
  }
  const double coef = std::exp(stats::log_binom(ell, j + 1)) * static_cast<double>(j + 1);
  const double rhs =
      coef * detail::adaptive_simpson(
                 [j, ell](double z) {
                   return std::pow(z, static_cast<double>(j)) *
                          std::pow(1.0 - z, static_cast<double>(ell - j - 1));
                 },
                 0.0, p);
  return {lhs, rhs};
}

/// The claimed central-binomial sandwich 4^r/sqrt(pi r) * e^(1/9r) <= C(2r, r)
/// <= 4^r/sqrt(pi r) * e^(1/8r). Returned verbatim; see
/// stirling_sandwich_report for how it compares against the exact value.
inline std::pair<double, double> stirling_central_binomial_bounds(std::int64_t r) {
  if (r < 1) throw BadRangeError("stirling bounds: r must be >= 1");
  const double base = std::pow(4.0, static_cast<double>(r)) /
                      std::sqrt(M_PI * static_cast<double>(r));
  return {base * std::exp(1.0 / (9.0 * static_cast<double>(r))),
          base * std::exp(1.0 / (8.0 * static_cast<double>(r)))};
}

/// Exact C(2r, r) as a 128-bit integer (valid through r = 63).
inline unsigned __int128 central_binomial_exact(std::int64_t r) {
  if (r < 1 || r > 63) throw BadRangeError("central_binomial_exact: r must be in 1..63");
  unsigned __int128 v = 1;
  for (std::int64_t i = 1; i <= r; ++i) {
    v = v * static_cast<unsigned __int128>(r + i);
    v /= static_cast<unsigned __int128>(i);
  }
  return v;
}

struct StirlingRow {
  std::int64_t r;
  double exact;
  double lower;
  double upper;
  bool lower_holds;
  bool upper_holds;
};

/// Per-r comparison of the claimed sandwich against the exact central
/// binomial coefficient. The bounds are checked, not trusted: rows where a
/// side fails are reported as such.
inline std::vector<StirlingRow> stirling_sandwich_report(std::int64_t r_max = 60) {
  std::vector<StirlingRow> rows;
  for (std::int64_t r = 1; r <= r_max; ++r) {
    const auto [lo, up] = stirling_central_binomial_bounds(r);
    const double exact = static_cast<double>(central_binomial_exact(r));
    rows.push_back({r, exact, lo, up, lo <= exact, exact <= up});
  }
  return rows;
}

/// Tail bound for a sum of i.i.d. {+1, 0, -1} variables with probabilities
/// (p, r, q): Pr(sum <= (1-theta) E - theta n) <= exp(-(theta^2/4)(E + n)),
/// E = n (p - q).
inline double chernoff_diff_bound(std::int64_t n, double p, double r, double q, double theta) {
  if (n < 1) throw BadRangeError("chernoff_diff_bound: n must be >= 1");
  if (std::fabs(p + r + q - 1.0) > kMassTolerance)
    throw BadRangeError("chernoff_diff_bound: p + r + q must equal 1");
  if (p < 0.0 || r < 0.0 || q < 0.0) throw BadRangeError("chernoff_diff_bound: negative probability");
  if (!(theta > 0.0 && theta < 1.0)) throw BadRangeError("chernoff_diff_bound: theta in (0,1)");
  const double expectation = static_cast<double>(n) * (p - q);
  return std::exp(-(theta * theta / 4.0) * (expectation + static_cast<double>(n)));
}

struct ParityReport {
  double p_ell_1, p_ell1_1, p_ell2_1;  // Pr(maj = 1) at sample sizes ell, ell+1, ell+2
  double p_ell_2, p_ell1_2, p_ell2_2;
  bool equality_holds;   // maj at ell and ell+1 agree to 1e-12
  bool monotone_holds;   // step to ell+2 moves toward the leading opinion
};

/// Parity insensitivity of the sampling rule (binary case): for odd ell and
/// q1 >= q2, Pr(maj_ell = 1) = Pr(maj_{ell+1} = 1) <= Pr(maj_{ell+2} = 1),
/// with the mirrored inequalities for opinion 2.
inline ParityReport parity_check(std::int64_t ell_odd, const std::vector<double>& q) {
  if (q.size() != 2) throw BadRangeError("parity_check: q must be binary");
  if (ell_odd < 1 || ell_odd % 2 == 0) throw BadRangeError("parity_check: ell must be odd");
  if (q[0] < q[1]) throw BadRangeError("parity_check: need q1 >= q2");
  const MajDistribution a = exact_maj_distribution(ell_odd, q);
  const MajDistribution b = exact_maj_distribution(ell_odd + 1, q);
  const MajDistribution c = exact_maj_distribution(ell_odd + 2, q);
  ParityReport r{a.probs[0], b.probs[0], c.probs[0], a.probs[1], b.probs[1], c.probs[1],
                 false, false};
  r.equality_holds =
      std::fabs(r.p_ell_1 - r.p_ell1_1) <= 1e-12 && std::fabs(r.p_ell_2 - r.p_ell1_2) <= 1e-12;
  r.monotone_holds = r.p_ell2_1 >= r.p_ell1_1 - 1e-12 && r.p_ell2_2 <= r.p_ell1_2 + 1e-12;
  return r;
}

struct MonotonicityReport {
  bool pass = true;
  std::int64_t x_violations = 0;
  std::int64_t y_violations = 0;
  double worst_step = 0.0;
};

/// Grid scan of g: non-decreasing in its first argument, non-increasing in
/// the second. Plateaus are accepted to 1e-12.
inline MonotonicityReport g_monotonicity_scan(double x_step = 0.01, std::int64_t y_max = 200) {
  MonotonicityReport rep;
  const std::int64_t nx = static_cast<std::int64_t>(std::llround(1.0 / x_step));
  for (std::int64_t y = 1; y <= y_max; ++y) {
    double prev = g(0.0, y);
    for (std::int64_t xi = 1; xi <= nx; ++xi) {
      const double cur = g(static_cast<double>(xi) * x_step, y);
      if (cur < prev - 1e-12) {
        ++rep.x_violations;
        rep.worst_step = std::min(rep.worst_step, cur - prev);
      }
      prev = cur;
    }
  }
  for (std::int64_t xi = 0; xi <= nx; ++xi) {
    const double x = static_cast<double>(xi) * x_step;
    double prev = g(x, 1);
    for (std::int64_t y = 2; y <= y_max; ++y) {
      const double cur = g(x, y);
      if (cur > prev + 1e-12) {
        ++rep.y_violations;
        rep.worst_step = std::min(rep.worst_step, prev - cur);
      }
      prev = cur;
    }
  }
  rep.pass = rep.x_violations == 0 && rep.y_violations == 0;
  return rep;
}

}  // namespace noisypush::analysis
