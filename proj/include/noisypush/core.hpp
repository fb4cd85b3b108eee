#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace noisypush {

/// Opinions are integers in 1..k. 0 is the internal "undecided" sentinel and
/// is never transmitted as a message.
using OpinionId = std::uint32_t;
inline constexpr OpinionId kUndecided = 0;

inline constexpr double kMassTolerance = 1e-12;

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NotStochasticError : ConfigError {
  NotStochasticError(std::size_t row, double deviation)
      : ConfigError("noise matrix row " + std::to_string(row) +
                    " is not stochastic (deviation " + std::to_string(deviation) + ")"),
        row(row),
        deviation(deviation) {}
  std::size_t row;
  double deviation;
};
struct DimensionMismatchError : ConfigError {
  using ConfigError::ConfigError;
};
struct BadRangeError : ConfigError {
  using ConfigError::ConfigError;
};
struct ZeroOpinionatedError : ConfigError {
  ZeroOpinionatedError() : ConfigError("opinionated mass is zero; bias undefined") {}
};
struct BudgetExceededError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct EmptyPolytopeError : ConfigError {
  using ConfigError::ConfigError;
};
struct EmptySampleError : ConfigError {
  EmptySampleError() : ConfigError("majority of an empty sample") {}
};

/// Fractions of the population holding each opinion, plus the undecided mass.
/// Fractions sum to the opinionated mass a; a + undecided = 1.
struct OpinionDistribution {
  std::vector<double> fractions;
  double undecided = 0.0;
  std::optional<std::int64_t> n_ref;

  std::size_t k() const { return fractions.size(); }

  double opinionated_mass() const {
    double a = 0.0;
    for (double f : fractions) a += f;
    return a;
  }

  void validate() const {
    double a = 0.0;
    for (double f : fractions) {
      if (f < -kMassTolerance) throw BadRangeError("negative opinion fraction");
      a += f;
    }
    if (undecided < -kMassTolerance) throw BadRangeError("negative undecided mass");
    if (std::fabs(a + undecided - 1.0) > kMassTolerance)
      throw BadRangeError("opinion distribution does not sum to 1");
  }
};

/// Lead of opinion m over its strongest rival, among opinionated nodes
/// (fractions renormalized by the opinionated mass a).
inline double bias(const OpinionDistribution& c, OpinionId m) {
  if (m == kUndecided || m > c.k()) throw BadRangeError("bias: opinion out of range");
  const double a = c.opinionated_mass();
  if (a <= 0.0) throw ZeroOpinionatedError();
  double best_rival = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < c.k(); ++i) {
    if (i + 1 == m) continue;
    best_rival = std::max(best_rival, c.fractions[i]);
  }
  return (c.fractions[m - 1] - best_rival) / a;
}

inline OpinionDistribution counts_to_distribution(const std::vector<std::int64_t>& counts,
                                                  std::int64_t n) {
  if (n <= 0) throw BadRangeError("population size must be positive");
  std::int64_t total = 0;
  OpinionDistribution d;
  d.fractions.reserve(counts.size());
  for (std::int64_t c : counts) {
    if (c < 0) throw BadRangeError("negative opinion count");
    total += c;
    d.fractions.push_back(static_cast<double>(c) / static_cast<double>(n));
  }
  if (total > n) throw BadRangeError("opinion counts exceed population size");
  d.undecided = static_cast<double>(n - total) / static_cast<double>(n);
  d.n_ref = n;
  return d;
}

enum class Mode { kRumor, kPlurality };

/// Everything the schedule and both stages need: population, opinion count,
/// channel strength parameter, and the stage constants phi > beta > s > 0.
struct ProtocolParams {
  std::int64_t n = 0;
  std::uint32_t k = 0;
  double epsilon = 0.0;
  double s = 1.0;
  double beta = 2.0;
  double phi = 4.0;
  double c_stage2 = 3.0;
  double c_final = 4.0;
  Mode mode = Mode::kRumor;
  std::int64_t initial_opinionated = 1;  // |S|; 1 in rumor mode

  bool operator==(const ProtocolParams&) const = default;

  void validate() const {
    if (n < 2) throw ConfigError("n must be >= 2");
    if (k < 2) throw ConfigError("k must be >= 2");
    if (!(epsilon > 0.0 && epsilon < 1.0)) throw ConfigError("epsilon must be in (0,1)");
    if (!(s > 0.0 && beta > s && phi > beta))
      throw ConfigError("stage-1 constants must satisfy phi > beta > s > 0");
    if (!(c_stage2 > 0.0)) throw ConfigError("stage-2 sample constant must be > 0");
    if (!(c_final > 0.0)) throw ConfigError("final-phase constant must be > 0");
    if (initial_opinionated < 1 || initial_opinionated > n)
      throw ConfigError("initial opinionated count out of range");
    if (mode == Mode::kRumor && initial_opinionated != 1)
      throw ConfigError("rumor mode starts from a single source");
  }
};

/// Round/phase layout of both stages. stage1_phase_lengths has T+2 entries
/// (phase 0 has length 0 in plurality mode), stage2_phase_lengths has T'+1.
/// tau holds the cumulative round index at the end of every phase.
struct PhaseSchedule {
  std::vector<std::int64_t> stage1_phase_lengths;
  std::vector<std::int64_t> stage2_phase_lengths;
  std::int64_t T = 0;
  std::int64_t T_prime = 0;
  std::int64_t ell = 0;
  std::int64_t ell_prime = 0;
  std::vector<std::int64_t> tau;

  std::size_t phase_count() const {
    return stage1_phase_lengths.size() + stage2_phase_lengths.size();
  }
  bool is_stage2(std::size_t phase) const { return phase >= stage1_phase_lengths.size(); }
  std::int64_t phase_length(std::size_t phase) const {
    return is_stage2(phase) ? stage2_phase_lengths[phase - stage1_phase_lengths.size()]
                            : stage1_phase_lengths[phase];
  }
  /// Stage-2 sample size L for the phase (ell, or ell_prime in the last phase).
  std::int64_t sample_target(std::size_t phase) const {
    if (!is_stage2(phase)) return 1;
    return phase + 1 == phase_count() ? ell_prime : ell;
  }
  std::int64_t total_rounds() const { return tau.empty() ? 0 : tau.back(); }
};

enum class ProcessKind { kO, kB, kP };

inline char process_kind_letter(ProcessKind p) {
  switch (p) {
    case ProcessKind::kO: return 'O';
    case ProcessKind::kB: return 'B';
    case ProcessKind::kP: return 'P';
  }
  return '?';
}

/// Distribution snapshot taken at a phase boundary, with the phase's message
/// traffic h = |M| = |N| (h is what Poisson-approximation applicability
/// depends on, so it is kept per phase).
struct PhaseStat {
  int stage = 1;
  std::int64_t phase = 0;
  std::int64_t round = 0;
  OpinionDistribution dist;
  std::int64_t traffic = 0;
  bool unanimous = false;
};

/// Replayable outcome of one seeded trial.
struct RunRecord {
  std::uint64_t seed = 0;
  ProtocolParams params;
  ProcessKind process = ProcessKind::kO;
  OpinionId target = 1;
  std::vector<PhaseStat> per_phase;
  OpinionId converged_to = kUndecided;      // unanimous opinion at completion, or kUndecided
  std::int64_t convergence_round = -1;      // first tau with unanimity, or -1
  std::int64_t max_sample_size = 0;         // max messages any node received in one phase
  std::int64_t max_round_deliveries = 0;    // max messages any node received in one round (process O)
};

}  // namespace noisypush
