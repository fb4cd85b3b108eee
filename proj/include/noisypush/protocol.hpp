#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "noisypush/core.hpp"
#include "noisypush/rng.hpp"

namespace noisypush {

namespace detail {

inline std::int64_t ceil_positive(double v) {
  return static_cast<std::int64_t>(std::ceil(v - 1e-12));
}

inline std::int64_t force_odd(std::int64_t v) { return v % 2 == 0 ? v + 1 : v; }

}  // namespace detail

/// Raw stage-2 sample size before the odd adjustment.
inline std::int64_t stage2_sample_size_raw(double c, double epsilon) {
  return detail::ceil_positive(c / (epsilon * epsilon));
}

/// Builds the full round/phase layout for both stages.
///
/// Stage 1 (rumor mode): phase 0 of ceil((s/eps^2) ln n) rounds, T middle
/// phases of ceil(beta/eps^2) rounds with
///   T = floor( ln(n / ((2s/eps^2) ln n)) / ln(beta/eps^2 + 1) ),
/// then a final phase of ceil((phi/eps^2) ln n) rounds. Plurality mode skips
/// phase 0 (kept as a zero-length entry so phase numbering is stable) and
/// computes T from the known initial opinionated count.
///
/// Stage 2: T' = ceil(ln sqrt(n / ln n)) phases of length 2*ell with
/// ell = ceil(c/eps^2), then a final phase of length 2*ell' with
/// ell' = ceil(c_final (ln n)/eps^2). Sample sizes are forced odd (an even
/// sample has exactly the same majority law as the preceding odd one, so
/// this costs nothing and keeps the amplification analysis applicable).
inline PhaseSchedule compute_schedule(const ProtocolParams& p) {
  p.validate();
  const double eps2 = p.epsilon * p.epsilon;
  const double ln_n = std::log(static_cast<double>(p.n));

  PhaseSchedule sched;
  double inner;
  if (p.mode == Mode::kRumor) {
    inner = static_cast<double>(p.n) / ((2.0 * p.s / eps2) * ln_n);
  } else {
    inner = static_cast<double>(p.n) / static_cast<double>(p.initial_opinionated);
  }
  if (inner <= 1.0)
    throw ConfigError("schedule: T argument n/(growth seed) = " + std::to_string(inner) +
                      " <= 1; n too small for these constants");
  const double growth = p.beta / eps2 + 1.0;
  sched.T = std::max<std::int64_t>(
      0, static_cast<std::int64_t>(std::floor(std::log(inner) / std::log(growth))));

  sched.stage1_phase_lengths.push_back(
      p.mode == Mode::kRumor ? detail::ceil_positive((p.s / eps2) * ln_n) : 0);
  const std::int64_t mid = detail::ceil_positive(p.beta / eps2);
  for (std::int64_t j = 0; j < sched.T; ++j) sched.stage1_phase_lengths.push_back(mid);
  sched.stage1_phase_lengths.push_back(detail::ceil_positive((p.phi / eps2) * ln_n));

  if (static_cast<double>(p.n) / ln_n <= 1.0)
    throw ConfigError("schedule: n too small for stage 2");
  sched.T_prime = std::max<std::int64_t>(
      1, detail::ceil_positive(std::log(std::sqrt(static_cast<double>(p.n) / ln_n))));
  sched.ell = detail::force_odd(stage2_sample_size_raw(p.c_stage2, p.epsilon));
  sched.ell_prime = detail::force_odd(detail::ceil_positive(p.c_final * ln_n / eps2));
  for (std::int64_t j = 0; j < sched.T_prime; ++j)
    sched.stage2_phase_lengths.push_back(2 * sched.ell);
  sched.stage2_phase_lengths.push_back(2 * sched.ell_prime);

  std::int64_t cum = 0;
  for (std::int64_t len : sched.stage1_phase_lengths) sched.tau.push_back(cum += len);
  for (std::int64_t len : sched.stage2_phase_lengths) sched.tau.push_back(cum += len);
  return sched;
}

// ---------------------------------------------------------------------------
// Node-level rules. These are pure per node given its rng stream; the engine
// applies them at phase boundaries.

/// Per-node protocol state.
struct NodeState {
  OpinionId opinion = kUndecided;
  OpinionId val = kUndecided;              // committed stage-1 opinion
  std::int64_t first_reception_phase = -1;  // j_u
};

/// Standard reservoir step: the t-th message of the stream (1-based) is
/// appended while the buffer has room, and afterwards replaces a uniform
/// slot with probability L/t. The buffer ends up a uniform L-subset of the
/// stream.
inline void reservoir_push(std::vector<OpinionId>& buffer, OpinionId msg, std::int64_t seen_count,
                           std::int64_t L, Rng& rng) {
  if (seen_count <= L) {
    buffer.push_back(msg);
    return;
  }
  const std::uint64_t slot = rng.below(static_cast<std::uint64_t>(seen_count));
  if (slot < static_cast<std::uint64_t>(L)) buffer[slot] = msg;
}

/// Most frequent opinion in the sample, ties broken uniformly at random:
/// Pr(result = i) = 1{i in mode} / |mode|.
inline OpinionId majority(std::span<const OpinionId> sample, std::uint32_t k, Rng& rng) {
  if (sample.empty()) throw EmptySampleError();
  std::vector<std::int64_t> occ(k + 1, 0);
  for (OpinionId v : sample) ++occ[v];
  std::int64_t best = 0;
  for (std::uint32_t i = 1; i <= k; ++i) best = std::max(best, occ[i]);
  std::uint32_t ties = 0;
  for (std::uint32_t i = 1; i <= k; ++i)
    if (occ[i] == best) ++ties;
  std::uint64_t pick = rng.below(ties);
  for (std::uint32_t i = 1; i <= k; ++i) {
    if (occ[i] == best) {
      if (pick == 0) return i;
      --pick;
    }
  }
  return kUndecided;  // unreachable
}

/// Stage-1 phase-end rule: an undecided node that received anything adopts a
/// uniform element of the received multiset (counting multiplicities, via a
/// single-slot reservoir) and is opinionated from the next phase on.
/// Opinionated nodes never change during the stage.
inline void stage1_on_phase_end(NodeState& node, std::span<const OpinionId> received,
                                std::int64_t phase, Rng& rng) {
  if (node.opinion != kUndecided || received.empty()) return;
  OpinionId slot = kUndecided;
  std::int64_t seen = 0;
  for (OpinionId msg : received) {
    ++seen;
    if (rng.below(static_cast<std::uint64_t>(seen)) == 0) slot = msg;
  }
  node.opinion = slot;
  node.val = slot;
  node.first_reception_phase = phase;
}

/// Stage-2 phase-end rule: provided the node received at least L messages
/// during the phase, it adopts the majority of its L-sample. Below the
/// threshold the opinion is kept; undecided nodes stay silent and never
/// adopt here.
inline void stage2_on_phase_end(NodeState& node, std::span<const OpinionId> sample,
                                std::int64_t received_count, std::int64_t L, std::uint32_t k,
                                Rng& rng) {
  if (node.opinion == kUndecided) return;
  if (received_count < L) return;
  node.opinion = majority(sample, k, rng);
}

}  // namespace noisypush
