#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "noisypush/analysis.hpp"
#include "noisypush/rng.hpp"
#include "noisypush/verify.hpp"

using namespace noisypush;
using namespace noisypush::analysis;

TEST(ExactMaj, SingleDrawIsQ) {
  const std::vector<double> q{0.2, 0.5, 0.3};
  const auto d = exact_maj_distribution(1, q);
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(d.probs[i], q[i], 1e-15);
}

TEST(ExactMaj, UniformQIsSymmetric) {
  for (std::uint32_t k : {2u, 3u, 4u}) {
    const std::vector<double> q(k, 1.0 / k);
    const auto d = exact_maj_distribution(7, q);
    for (double p : d.probs) EXPECT_NEAR(p, 1.0 / k, 1e-12);
  }
}

TEST(ExactMaj, BinomialCase) {
  const auto d = exact_maj_distribution(3, {0.6, 0.4});
  EXPECT_NEAR(d.probs[0], 0.648, 1e-12);
  EXPECT_NEAR(d.probs[1], 0.352, 1e-12);
}

TEST(ExactMaj, SumsToOne) {
  Rng rng(21);
  for (int trial = 0; trial < 40; ++trial) {
    const std::uint32_t k = 2 + static_cast<std::uint32_t>(rng.below(3));
    std::vector<double> q(k);
    double sum = 0.0;
    for (double& v : q) sum += (v = rng.next_double() + 0.01);
    for (double& v : q) v /= sum;
    const std::int64_t ell = 1 + static_cast<std::int64_t>(rng.below(12));
    const auto d = exact_maj_distribution(ell, q);
    double total = 0.0, strict_total = 0.0;
    for (std::uint32_t i = 0; i < k; ++i) {
      total += d.probs[i];
      strict_total += d.strict_probs[i];
      EXPECT_LE(d.strict_probs[i], d.probs[i] + 1e-15);
    }
    EXPECT_NEAR(total, 1.0, 1e-12);
    EXPECT_LE(strict_total, 1.0 + 1e-12);
  }
}

TEST(ExactMaj, PermutationEquivariance) {
  const std::vector<double> q{0.5, 0.2, 0.3};
  const std::vector<double> qp{0.3, 0.5, 0.2};  // permutation (1 2 3) -> (3 1 2)
  const auto d = exact_maj_distribution(5, q);
  const auto dp = exact_maj_distribution(5, qp);
  EXPECT_NEAR(d.probs[0], dp.probs[1], 1e-13);
  EXPECT_NEAR(d.probs[1], dp.probs[2], 1e-13);
  EXPECT_NEAR(d.probs[2], dp.probs[0], 1e-13);
}

TEST(ExactMaj, MonteCarloAgreement) {
  struct Case {
    std::int64_t ell;
    std::vector<double> q;
  };
  const std::vector<Case> cases{{5, {0.55, 0.45}}, {7, {0.45, 0.35, 0.2}},
                                {9, {0.4, 0.3, 0.2, 0.1}}};
  Rng rng(31);
  for (const auto& cs : cases) {
    const auto d = exact_maj_distribution(cs.ell, cs.q);
    const std::uint32_t k = static_cast<std::uint32_t>(cs.q.size());
    std::vector<double> freq(k, 0.0);
    const int draws = 1000000;
    std::vector<std::int64_t> occ(k);
    for (int t = 0; t < draws; ++t) {
      std::fill(occ.begin(), occ.end(), 0);
      for (std::int64_t i = 0; i < cs.ell; ++i) {
        double u = rng.next_double(), cum = 0.0;
        for (std::uint32_t j = 0; j < k; ++j) {
          cum += cs.q[j];
          if (u < cum || j + 1 == k) {
            ++occ[j];
            break;
          }
        }
      }
      std::int64_t best = 0;
      for (std::int64_t o : occ) best = std::max(best, o);
      std::uint32_t ties = 0;
      for (std::int64_t o : occ)
        if (o == best) ++ties;
      std::uint64_t pick = rng.below(ties);
      for (std::uint32_t j = 0; j < k; ++j) {
        if (occ[j] == best) {
          if (pick == 0) {
            freq[j] += 1.0;
            break;
          }
          --pick;
        }
      }
    }
    double tv = 0.0;
    for (std::uint32_t j = 0; j < k; ++j)
      tv += std::fabs(freq[j] / draws - d.probs[j]);
    EXPECT_LE(tv / 2.0, 0.005);
  }
}

TEST(ExactMaj, BudgetGuard) {
  const std::vector<double> q(6, 1.0 / 6.0);
  EXPECT_THROW(exact_maj_distribution(400, q, 1000), BudgetExceededError);
}

TEST(G, BasicValues) {
  EXPECT_DOUBLE_EQ(g(0.0, 5), 0.0);
  EXPECT_DOUBLE_EQ(g(0.3, 1), 0.3);  // exponent 0
  EXPECT_NEAR(g(0.2, 9), 0.2 * std::pow(0.96, 4.0), 1e-15);
}

TEST(G, BranchContinuity) {
  for (std::int64_t ell : {4, 9, 25, 100}) {
    const double cap = 1.0 / std::sqrt(static_cast<double>(ell));
    EXPECT_NEAR(g(cap - 1e-13, ell), g(cap, ell), 1e-10);
  }
}

TEST(AmplificationBound, Values) {
  EXPECT_DOUBLE_EQ(amplification_bound(0.0, 5, 2), 0.0);
  EXPECT_NEAR(amplification_bound(0.2, 3, 2), std::sqrt(6.0 / M_PI) * 0.2 * 0.96, 1e-12);
  // each extra opinion divides the bound by 4
  EXPECT_NEAR(amplification_bound(0.2, 3, 3) * 4.0, amplification_bound(0.2, 3, 2), 1e-15);
  EXPECT_THROW(amplification_bound(0.2, 4, 2), BadRangeError);
}

TEST(CheckAmplification, BinomialExample) {
  const auto res = check_amplification(3, {0.6, 0.4}, 2);
  EXPECT_TRUE(res.ok);
  EXPECT_NEAR(res.exact_diff, 0.296, 1e-12);
  EXPECT_NEAR(res.bound, 0.2653395067939856, 1e-12);
}

TEST(CheckAmplification, UniformBoundaryHolds) {
  // no strict plurality lead: delta = 0, bound = 0, diff = 0
  const auto res = check_amplification(5, {0.25, 0.25, 0.25, 0.25}, 4);
  EXPECT_TRUE(res.ok);
  EXPECT_NEAR(res.exact_diff, 0.0, 1e-12);
  EXPECT_NEAR(res.bound, 0.0, 1e-15);
}

TEST(BinBeta, DegenerateTopTerm) {
  // j = ell-1: both sides reduce to p^ell
  const auto [lhs, rhs] = binbeta_identity(6, 5, 0.4);
  EXPECT_NEAR(lhs, std::pow(0.4, 6.0), 1e-14);
  EXPECT_NEAR(rhs, std::pow(0.4, 6.0), 1e-12);
}

TEST(BinBeta, SmallPBothSidesVanish) {
  const auto [lhs, rhs] = binbeta_identity(9, 3, 1e-6);
  EXPECT_LT(lhs, 1e-20);
  EXPECT_NEAR(lhs, rhs, 1e-15);
}

TEST(BinBeta, SpecPoint) {
  const auto [lhs, rhs] = binbeta_identity(5, 2, 0.3);
  EXPECT_NEAR(lhs, 0.16308, 1e-10);
  EXPECT_NEAR(lhs, rhs, 1e-10);
}

TEST(Stirling, FormulasAndHonestComparison) {
  // the claimed sandwich constants are checked against exact values,
  // not assumed; the lower side fails for every r
  const auto rows = stirling_sandwich_report(60);
  for (const auto& r : rows) {
    EXPECT_TRUE(r.upper_holds) << "r=" << r.r;
    EXPECT_FALSE(r.lower_holds) << "r=" << r.r;
  }
  EXPECT_EQ(static_cast<double>(central_binomial_exact(1)), 2.0);
  EXPECT_EQ(static_cast<double>(central_binomial_exact(10)), 184756.0);
  const auto [lo, up] = stirling_central_binomial_bounds(500);
  EXPECT_LT(up / lo, 1.001);
}

TEST(ChernoffDiff, PluggedValues) {
  EXPECT_NEAR(chernoff_diff_bound(100, 0.3, 0.4, 0.3, 0.1), std::exp(-0.25), 1e-12);
  EXPECT_NEAR(chernoff_diff_bound(100, 0.3, 0.4, 0.3, 1e-6), 1.0, 1e-9);
  EXPECT_THROW(chernoff_diff_bound(100, 0.5, 0.5, 0.2, 0.1), BadRangeError);
}

TEST(Parity, SymmetricHalf) {
  const auto rep = parity_check(5, {0.5, 0.5});
  EXPECT_NEAR(rep.p_ell_1, 0.5, 1e-12);
  EXPECT_NEAR(rep.p_ell1_1, 0.5, 1e-12);
  EXPECT_NEAR(rep.p_ell2_1, 0.5, 1e-12);
}

TEST(Parity, BinomialPoint) {
  const auto rep = parity_check(3, {0.6, 0.4});
  EXPECT_NEAR(rep.p_ell_1, 0.648, 1e-12);
  EXPECT_NEAR(rep.p_ell1_1, 0.648, 1e-12);
  EXPECT_NEAR(rep.p_ell2_1, 0.68256, 1e-12);
  EXPECT_TRUE(rep.equality_holds);
  EXPECT_TRUE(rep.monotone_holds);
}

TEST(Parity, FullScan) {
  for (std::int64_t ell = 3; ell <= 21; ell += 2) {
    for (int qi = 0; qi <= 9; ++qi) {
      const double q1 = 0.5 + 0.05 * qi;
      const auto rep = parity_check(ell, {q1, 1.0 - q1});
      EXPECT_TRUE(rep.equality_holds) << "ell=" << ell << " q1=" << q1;
      EXPECT_TRUE(rep.monotone_holds) << "ell=" << ell << " q1=" << q1;
    }
  }
}

TEST(GMonotonicity, ScanPasses) {
  const auto rep = g_monotonicity_scan();
  EXPECT_TRUE(rep.pass) << rep.x_violations << " / " << rep.y_violations;
}

TEST(VerifySuite, AllRowsPass) {
  for (const auto& row : verify::run_all()) {
    EXPECT_TRUE(row.pass) << row.name << ": " << row.note;
  }
}
