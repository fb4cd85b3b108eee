#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <vector>

namespace noisypush::stats {

inline double log_binom(std::int64_t n, std::int64_t k) {
  if (k < 0 || k > n) return -std::numeric_limits<double>::infinity();
  return std::lgamma(static_cast<double>(n) + 1.0) -
         std::lgamma(static_cast<double>(k) + 1.0) -
         std::lgamma(static_cast<double>(n - k) + 1.0);
}

/// Regularized lower incomplete gamma P(a, x); series expansion for
/// x < a + 1, Lentz continued fraction otherwise.
inline double gamma_p(double a, double x) {
  if (x < 0.0 || a <= 0.0) throw std::domain_error("gamma_p: bad arguments");
  if (x == 0.0) return 0.0;
  const double lg = std::lgamma(a);
  if (x < a + 1.0) {
    double ap = a, sum = 1.0 / a, del = sum;
    for (int i = 0; i < 500; ++i) {
      ap += 1.0;
      del *= x / ap;
      sum += del;
      if (std::fabs(del) < std::fabs(sum) * 1e-16) break;
    }
    return sum * std::exp(-x + a * std::log(x) - lg);
  }
  const double tiny = 1e-300;
  double b = x + 1.0 - a, c = 1.0 / tiny, d = 1.0 / b, h = d;
  for (int i = 1; i < 500; ++i) {
    double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < 1e-16) break;
  }
  return 1.0 - std::exp(-x + a * std::log(x) - lg) * h;
}

inline double gamma_q(double a, double x) { return 1.0 - gamma_p(a, x); }

/// Survival function of the chi-square distribution with df degrees of freedom.
inline double chi2_sf(double stat, double df) {
  if (stat <= 0.0) return 1.0;
  return gamma_q(df / 2.0, stat / 2.0);
}

struct Chi2Result {
  double stat = 0.0;
  double df = 0.0;
  double p_value = 1.0;
};

/// Goodness of fit of observed counts against expected counts.
inline Chi2Result chi_square_gof(const std::vector<double>& observed,
                                 const std::vector<double>& expected) {
  if (observed.size() != expected.size() || observed.empty())
    throw std::invalid_argument("chi_square_gof: size mismatch");
  Chi2Result r;
  std::size_t cells = 0;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    if (expected[i] <= 0.0) continue;
    double d = observed[i] - expected[i];
    r.stat += d * d / expected[i];
    ++cells;
  }
  r.df = static_cast<double>(cells > 1 ? cells - 1 : 1);
  r.p_value = chi2_sf(r.stat, r.df);
  return r;
}

/// Two-sample chi-square homogeneity test over categorical outcomes.
/// Cells whose combined count falls below min_combined are pooled into one.
template <typename Key>
Chi2Result two_sample_chi_square(const std::map<Key, std::int64_t>& a,
                                 const std::map<Key, std::int64_t>& b,
                                 std::int64_t min_combined = 10) {
  std::map<Key, std::pair<std::int64_t, std::int64_t>> cells;
  std::int64_t na = 0, nb = 0;
  for (const auto& [k, v] : a) {
    cells[k].first += v;
    na += v;
  }
  for (const auto& [k, v] : b) {
    cells[k].second += v;
    nb += v;
  }
  if (na == 0 || nb == 0) throw std::invalid_argument("two_sample_chi_square: empty sample");

  std::vector<std::pair<std::int64_t, std::int64_t>> kept;
  std::pair<std::int64_t, std::int64_t> pooled{0, 0};
  for (const auto& [k, v] : cells) {
    if (v.first + v.second < min_combined) {
      pooled.first += v.first;
      pooled.second += v.second;
    } else {
      kept.push_back(v);
    }
  }
  if (pooled.first + pooled.second > 0) kept.push_back(pooled);
  if (kept.size() < 2) throw std::invalid_argument("two_sample_chi_square: too few cells");

  const double fa = static_cast<double>(na) / static_cast<double>(na + nb);
  const double fb = static_cast<double>(nb) / static_cast<double>(na + nb);
  Chi2Result r;
  for (const auto& [ca, cb] : kept) {
    const double row = static_cast<double>(ca + cb);
    const double ea = row * fa;
    const double eb = row * fb;
    const double da = static_cast<double>(ca) - ea;
    const double db = static_cast<double>(cb) - eb;
    r.stat += da * da / ea + db * db / eb;
  }
  r.df = static_cast<double>(kept.size() - 1);
  r.p_value = chi2_sf(r.stat, r.df);
  return r;
}

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
};

/// Ordinary least squares y = slope*x + intercept.
inline LinearFit ols_fit(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("ols_fit: bad input");
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  LinearFit f;
  const double denom = n * sxx - sx * sx;
  if (denom == 0.0) throw std::invalid_argument("ols_fit: degenerate x");
  f.slope = (n * sxy - sx * sy) / denom;
  f.intercept = (sy - f.slope * sx) / n;
  double ss_res = 0, ss_tot = 0;
  const double mean_y = sy / n;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double fit = f.slope * x[i] + f.intercept;
    ss_res += (y[i] - fit) * (y[i] - fit);
    ss_tot += (y[i] - mean_y) * (y[i] - mean_y);
  }
  f.r_squared = ss_tot == 0.0 ? 1.0 : 1.0 - ss_res / ss_tot;
  return f;
}

/// Nearest-rank percentile (q in [0,1]) of an unsorted sample.
inline double percentile(std::vector<double> v, double q) {
  if (v.empty()) throw std::invalid_argument("percentile: empty sample");
  std::sort(v.begin(), v.end());
  const double idx = q * static_cast<double>(v.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(idx);
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  const double frac = idx - static_cast<double>(lo);
  return v[lo] * (1.0 - frac) + v[hi] * frac;
}

}  // namespace noisypush::stats
