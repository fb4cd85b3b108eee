#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <sstream>
#include <vector>

#include "noisypush/mp_check.hpp"
#include "noisypush/noise.hpp"
#include "noisypush/stats.hpp"

using namespace noisypush;

namespace {

OpinionDistribution dist(std::vector<double> fractions, double undecided = 0.0) {
  return OpinionDistribution{std::move(fractions), undecided, std::nullopt};
}

NoiseMatrix identity(std::uint32_t k) { return parse_noise_spec("identity:" + std::to_string(k)); }

}  // namespace

TEST(Validate, IdentityIsStochastic) { EXPECT_NO_THROW(identity(3).validate()); }

TEST(Validate, BadRowSumRejected) {
  NoiseMatrix m(2, {0.6, 0.5, 0.5, 0.5});
  EXPECT_THROW(m.validate(), NotStochasticError);
}

TEST(Validate, BinaryChannelMatrix) {
  EXPECT_NO_THROW(make_binary(0.1).validate());
  EXPECT_DOUBLE_EQ(make_binary(0.1).at(0, 0), 0.6);
  EXPECT_DOUBLE_EQ(make_binary(0.1).at(0, 1), 0.4);
}

TEST(Constructors, BinaryPlugged) {
  const auto m = make_binary(0.25);
  EXPECT_DOUBLE_EQ(m.at(0, 0), 0.75);
  EXPECT_DOUBLE_EQ(m.at(1, 0), 0.25);
  EXPECT_THROW(make_binary(0.5), BadRangeError);
  EXPECT_THROW(make_binary(0.0), BadRangeError);
}

TEST(Constructors, UniformGeneralizesBinary) {
  const auto u = make_uniform(2, 0.1);
  const auto b = make_binary(0.1);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) EXPECT_NEAR(u.at(i, j), b.at(i, j), 1e-15);
}

TEST(Constructors, UniformK3) {
  const auto m = make_uniform(3, 0.2);
  EXPECT_NEAR(m.at(0, 0), 1.0 / 3.0 + 0.2, 1e-15);
  EXPECT_NEAR(m.at(0, 1), 1.0 / 3.0 - 0.1, 1e-15);
  EXPECT_NO_THROW(m.validate());
  EXPECT_THROW(make_uniform(3, 0.7), BadRangeError);
}

TEST(Constructors, CyclicDominant) {
  const auto m = make_cyclic_dominant(0.1);
  EXPECT_DOUBLE_EQ(m.at(0, 0), 0.6);
  EXPECT_DOUBLE_EQ(m.at(0, 2), 0.4);
  EXPECT_DOUBLE_EQ(m.at(1, 0), 0.4);
  EXPECT_NO_THROW(m.validate());
  for (std::uint32_t i = 0; i < 3; ++i)
    for (std::uint32_t j = 0; j < 3; ++j)
      if (i != j) EXPECT_GT(m.at(i, i), m.at(i, j));
}

TEST(PushThrough, IdentityIsNoiseless) {
  const auto c = dist({0.5, 0.3, 0.2});
  const auto out = push_through(c, identity(3));
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(out.fractions[i], c.fractions[i], 1e-15);
}

TEST(PushThrough, BinaryLeadShrinksByTwiceEpsilon) {
  // lead of 0.2 through the eps=0.1 binary channel comes out as 0.04
  const auto out = push_through(dist({0.6, 0.4}), make_binary(0.1));
  EXPECT_NEAR(out.fractions[0] - out.fractions[1], 0.04, 1e-15);
}

TEST(PushThrough, PointMassSelectsRow) {
  NoiseMatrix m(3, {0.7, 0.2, 0.1, 0.1, 0.8, 0.1, 0.1, 0.1, 0.8});
  const auto out = push_through(dist({1.0, 0.0, 0.0}), m);
  EXPECT_NEAR(out.fractions[0], 0.7, 1e-15);
  EXPECT_NEAR(out.fractions[1], 0.2, 1e-15);
  EXPECT_NEAR(out.fractions[2], 0.1, 1e-15);
}

TEST(PushThrough, PreservesMassAndComposes) {
  Rng rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    // random stochastic 3x3 matrices and a random partial distribution
    auto random_matrix = [&rng]() {
      std::vector<double> e(9);
      for (int i = 0; i < 3; ++i) {
        double sum = 0.0;
        for (int j = 0; j < 3; ++j) sum += (e[i * 3 + j] = rng.next_double() + 0.01);
        for (int j = 0; j < 3; ++j) e[i * 3 + j] /= sum;
      }
      return NoiseMatrix(3, e);
    };
    const auto p1 = random_matrix(), p2 = random_matrix();
    std::vector<double> f(3);
    double sum = 0.0;
    for (double& v : f) sum += (v = rng.next_double());
    const double a = 0.25 + 0.75 * rng.next_double();
    for (double& v : f) v *= a / sum;
    const auto c = dist(f, 1.0 - a);

    const auto once = push_through(c, p1);
    EXPECT_NEAR(once.opinionated_mass(), a, 1e-12);
    for (double v : once.fractions) EXPECT_GE(v, 0.0);

    const auto seq = push_through(once, p2);
    const auto prod = push_through(c, p1 * p2);
    for (int i = 0; i < 3; ++i) EXPECT_NEAR(seq.fractions[i], prod.fractions[i], 1e-12);
  }
}

TEST(SampleChannel, IdentityIsDeterministic) {
  Rng rng(3);
  const auto m = identity(3);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(sample_channel(2, m, rng), 2u);
}

TEST(SampleChannel, FrequenciesMatchRow) {
  Rng rng(11);
  const auto m = make_binary(0.1);
  const int draws = 1000000;
  int ones = 0;
  for (int i = 0; i < draws; ++i)
    if (sample_channel(1, m, rng) == 1) ++ones;
  EXPECT_NEAR(static_cast<double>(ones) / draws, 0.6, 0.002);
}

TEST(SampleChannel, UniformRowsChiSquare) {
  Rng rng(13);
  const auto m = make_uniform(4, 1e-9);  // essentially uniform rows
  const int draws = 1000000;
  std::vector<double> obs(4, 0.0);
  for (int i = 0; i < draws; ++i) obs[sample_channel(2, m, rng) - 1] += 1.0;
  for (double o : obs) EXPECT_NEAR(o / draws, 0.25, 0.002);
  std::vector<double> expected(4);
  for (int j = 0; j < 4; ++j) expected[j] = m.at(1, j) * draws;
  EXPECT_GT(stats::chi_square_gof(obs, expected).p_value, 0.001);
}

TEST(SampleChannel, SkewedRowChiSquare) {
  Rng rng(17);
  NoiseMatrix m(3, {0.7, 0.2, 0.1, 0.1, 0.8, 0.1, 0.1, 0.1, 0.8});
  const int draws = 1000000;
  std::vector<double> obs(3, 0.0);
  for (int i = 0; i < draws; ++i) obs[sample_channel(1, m, rng) - 1] += 1.0;
  std::vector<double> expected{0.7 * draws, 0.2 * draws, 0.1 * draws};
  EXPECT_GT(stats::chi_square_gof(obs, expected).p_value, 0.001);
}

TEST(BoundedSufficient, ZeroSpread) {
  EXPECT_TRUE(check_bounded_sufficient(0.5, 0.3, 0.3, 0.1));
}

TEST(BoundedSufficient, BoundaryCases) {
  EXPECT_TRUE(check_bounded_sufficient(0.5, 0.25, 0.3, 0.5));   // 0.05 >= 0.05
  EXPECT_FALSE(check_bounded_sufficient(0.5, 0.2, 0.3, 0.5));   // 0.05 >= 0.1 fails
  EXPECT_THROW(check_bounded_sufficient(0.2, 0.3, 0.25, 0.5), BadRangeError);
}

TEST(MpMargin, IdentityGivesDelta) {
  for (double delta : {0.1, 0.4, 0.9}) {
    const auto rep = mp_margin(identity(3), 1, delta);
    for (double m : rep.margins) EXPECT_NEAR(m, delta, 1e-12);
    EXPECT_TRUE(rep.is_mp_for(0.99));
  }
}

TEST(MpMargin, UniformClosedForm) {
  // (c P)_m - (c P)_i = eps k/(k-1) (c_m - c_i); minimum over the polytope
  // is attained where the lead equals delta
  const auto rep = mp_margin(make_uniform(3, 0.2), 1, 0.4);
  for (double m : rep.margins) EXPECT_NEAR(m, 0.12, 1e-12);
  EXPECT_TRUE(rep.is_mp_for(0.2));
  EXPECT_NEAR(rep.epsilon_threshold(), 0.3, 1e-12);
}

TEST(MpMargin, CyclicCounterExampleLosesMajority) {
  const auto P = make_cyclic_dominant(0.1).transposed();
  const auto rep = mp_margin(P, 1, 0.1);
  EXPECT_LT(rep.min_margin(), 0.0);
  // value at the half-half witness, by direct matrix-vector arithmetic
  const double witness = mp_objective({0.6, 0.4, 0.0}, P, 1, 2);
  EXPECT_NEAR(witness, -0.12, 1e-9);
  EXPECT_LE(rep.min_margin(), witness + 1e-9);
}

TEST(MpMargin, WitnessReproducesMargin) {
  const auto P = make_uniform(4, 0.15);
  const auto rep = mp_margin(P, 2, 0.3);
  for (std::size_t r = 0; r < rep.rivals.size(); ++r) {
    const double re = mp_objective(rep.witnesses[r], P, rep.m, rep.rivals[r]);
    EXPECT_NEAR(re, rep.margins[r], 1e-9);
  }
}

TEST(MpMargin, EmptyPolytopeRejected) {
  EXPECT_THROW(mp_margin(identity(3), 1, 1.5), BadRangeError);
}

TEST(MpMargin, UniformFamilyIsMpForAllDeltas) {
  for (std::uint32_t k : {2u, 3u, 4u, 5u}) {
    for (double eps : {0.05, 0.1, 0.2}) {
      const auto P = make_uniform(k, eps);
      for (int di = 1; di <= 19; ++di) {
        const double delta = 0.05 * di;
        const auto rep = mp_margin(P, 1, delta);
        EXPECT_TRUE(rep.is_mp_for(eps)) << "k=" << k << " eps=" << eps << " delta=" << delta;
        const double closed = eps * k / (k - 1.0) * delta;
        EXPECT_NEAR(rep.min_margin(), closed, 1e-9);
      }
    }
  }
}

// dense grid search over the delta-biased polytope, step 0.01: the
// independent oracle for the vertex-enumeration margins
namespace {

double grid_min_margin(const NoiseMatrix& P, OpinionId m, OpinionId rival, double delta) {
  const int denom = 100;
  const std::uint32_t k = P.k();
  double best = 1e300;
  std::vector<int> comp(k, 0);
  comp[k - 1] = denom;
  while (true) {
    bool feasible = true;
    for (std::uint32_t j = 0; j < k && feasible; ++j) {
      if (j + 1 == m) continue;
      if (comp[m - 1] - comp[j] < static_cast<int>(std::lround(delta * denom))) feasible = false;
    }
    if (feasible) {
      std::vector<double> c(k);
      for (std::uint32_t i = 0; i < k; ++i) c[i] = comp[i] / static_cast<double>(denom);
      best = std::min(best, mp_objective(c, P, m, rival));
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
  return best;
}

}  // namespace

TEST(MpMargin, VertexEnumerationMatchesGridSearch) {
  std::vector<NoiseMatrix> cases{identity(3), make_uniform(3, 0.2), make_uniform(4, 0.1),
                                 make_cyclic_dominant(0.1).transposed(),
                                 NoiseMatrix(4, {0.55, 0.2, 0.15, 0.1,  //
                                                 0.1, 0.6, 0.2, 0.1,   //
                                                 0.05, 0.15, 0.7, 0.1, //
                                                 0.25, 0.25, 0.25, 0.25})};
  for (const auto& P : cases) {
    const double delta = 0.2;
    const auto rep = mp_margin(P, 1, delta);
    for (std::size_t r = 0; r < rep.rivals.size(); ++r) {
      const double grid = grid_min_margin(P, 1, rep.rivals[r], delta);
      EXPECT_LE(rep.margins[r], grid + 1e-9);   // the true minimum cannot exceed the grid's
      EXPECT_NEAR(rep.margins[r], grid, 0.02);  // and the grid resolves it to 0.02
    }
  }
}

TEST(MatrixText, RoundTrip) {
  const auto m = make_uniform(3, 0.2);
  std::istringstream in(format_matrix_text(m));
  const auto back = parse_matrix_text(in);
  ASSERT_EQ(back.k(), 3u);
  for (std::uint32_t i = 0; i < 3; ++i)
    for (std::uint32_t j = 0; j < 3; ++j) EXPECT_DOUBLE_EQ(back.at(i, j), m.at(i, j));
}

TEST(MatrixText, SpecStrings) {
  EXPECT_EQ(parse_noise_spec("binary:0.1").k(), 2u);
  EXPECT_EQ(parse_noise_spec("uniform:4:0.1").k(), 4u);
  EXPECT_EQ(parse_noise_spec("cyclic:0.1").k(), 3u);
  EXPECT_THROW(parse_noise_spec("nope:1"), ConfigError);
}
