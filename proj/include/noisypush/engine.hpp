#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <thread>
#include <vector>

#include "noisypush/core.hpp"
#include "noisypush/noise.hpp"
#include "noisypush/protocol.hpp"
#include "noisypush/rng.hpp"

namespace noisypush {

/// Initial opinion assignment. Rumor mode: a single source with the correct
/// opinion. Plurality mode: per-opinion counts, the target being the
/// plurality opinion.
struct InitialCondition {
  OpinionId target = 1;
  std::vector<std::int64_t> counts;

  std::int64_t total() const {
    std::int64_t t = 0;
    for (std::int64_t c : counts) t += c;
    return t;
  }

  static InitialCondition rumor(OpinionId m, std::uint32_t k) {
    if (m == kUndecided || m > k) throw BadRangeError("rumor source opinion out of range");
    InitialCondition ic;
    ic.target = m;
    ic.counts.assign(k, 0);
    ic.counts[m - 1] = 1;
    return ic;
  }

  static InitialCondition plurality(std::vector<std::int64_t> counts) {
    InitialCondition ic;
    ic.counts = std::move(counts);
    std::int64_t best = -1;
    for (std::size_t i = 0; i < ic.counts.size(); ++i) {
      if (ic.counts[i] < 0) throw BadRangeError("negative initial count");
      if (ic.counts[i] > best) {
        best = ic.counts[i];
        ic.target = static_cast<OpinionId>(i + 1);
      }
    }
    if (best < 1) throw ConfigError("plurality mode needs at least one opinionated node");
    return ic;
  }
};

/// One seeded execution of the two-stage protocol under process O (the real
/// uniform push), B (per-phase balls-into-bins) or P (Poissonized). Stepped
/// phase by phase so callers can stop early or inspect mid-run state.
class Trial {
 public:
  Trial(const ProtocolParams& params, const NoiseMatrix& noise, ProcessKind kind,
        const InitialCondition& initial, std::uint64_t seed)
      : params_(params), noise_(noise), kind_(kind) {
    params_.initial_opinionated = initial.total();
    params_.validate();
    noise_.validate();
    if (initial.counts.size() != params_.k)
      throw ConfigError("initial counts must list every opinion");
    if (noise_.k() != params_.k) throw DimensionMismatchError("noise matrix k != params k");
    if (initial.total() > params_.n) throw ConfigError("initial counts exceed n");
    schedule_ = compute_schedule(params_);

    const std::size_t n = static_cast<std::size_t>(params_.n);
    opinions_.assign(n, kUndecided);
    val_.assign(n, kUndecided);
    first_reception_phase_.assign(n, -1);
    std::size_t next = 0;
    for (std::size_t i = 0; i < initial.counts.size(); ++i) {
      for (std::int64_t c = 0; c < initial.counts[i]; ++c) {
        opinions_[next] = static_cast<OpinionId>(i + 1);
        val_[next] = static_cast<OpinionId>(i + 1);
        ++next;
      }
    }

    node_rng_.reserve(n);
    for (std::size_t u = 0; u < n; ++u) node_rng_.push_back(Rng::stream(seed, u + 1));
    channel_rng_ = Rng::stream(seed, 0);

    recv_count_.assign(n, 0);
    slot_.assign(n, kUndecided);
    round_stamp_.assign(n, -1);
    round_count_.assign(n, 0);

    record_.seed = seed;
    record_.params = params_;
    record_.process = kind_;
    record_.target = initial.target;
  }

  bool done() const { return next_phase_ >= schedule_.phase_count(); }
  const PhaseSchedule& schedule() const { return schedule_; }
  const RunRecord& record() const { return record_; }
  std::span<const OpinionId> opinions() const { return opinions_; }
  const std::vector<std::int64_t>& phase_delivered() const { return phase_delivered_; }

  void run_next_phase() {
    const std::size_t phase = next_phase_;
    const bool stage2 = schedule_.is_stage2(phase);
    const std::int64_t len = schedule_.phase_length(phase);
    const std::int64_t L = schedule_.sample_target(phase);
    std::int64_t traffic = 0;
    delivered_ = 0;

    if (len > 0) {
      rebuild_pushers();
      std::fill(recv_count_.begin(), recv_count_.end(), 0);
      if (stage2) buffer_.resize(static_cast<std::size_t>(params_.n) * L);
      traffic = len * static_cast<std::int64_t>(pushers_.size());

      switch (kind_) {
        case ProcessKind::kO: run_phase_rounds(len, stage2, L); break;
        case ProcessKind::kB: run_phase_balls(len, stage2, L); break;
        case ProcessKind::kP: run_phase_poisson(len, stage2, L); break;
      }
      apply_phase_end(phase, stage2, L);
    }
    phase_delivered_.push_back(delivered_);
    record_phase_stat(phase, traffic);
    ++next_phase_;
  }

  void run_all() {
    while (!done()) run_next_phase();
  }

 private:
  OpinionId pushed_value(std::size_t u, bool stage2) const {
    return stage2 ? opinions_[u] : val_[u];
  }

  void rebuild_pushers() {
    pushers_.clear();
    for (std::size_t u = 0; u < opinions_.size(); ++u)
      if (opinions_[u] != kUndecided) pushers_.push_back(static_cast<std::uint32_t>(u));
  }

  void deliver(std::size_t u, OpinionId v, bool stage2, std::int64_t L) {
    ++delivered_;
    const std::int64_t cnt = ++recv_count_[u];
    if (stage2) {
      if (cnt <= L) {
        buffer_[u * static_cast<std::size_t>(L) + static_cast<std::size_t>(cnt - 1)] = v;
      } else {
        const std::uint64_t slot = node_rng_[u].below(static_cast<std::uint64_t>(cnt));
        if (slot < static_cast<std::uint64_t>(L))
          buffer_[u * static_cast<std::size_t>(L) + slot] = v;
      }
    } else if (opinions_[u] == kUndecided) {
      // single-slot reservoir: uniform over the phase's received stream
      if (node_rng_[u].below(static_cast<std::uint64_t>(cnt)) == 0) slot_[u] = v;
    }
  }

  // Process O: every pusher sends one noisy message per round to a uniform
  // node (self included); all simultaneous messages are delivered, in a
  // random order within the round.
  void run_phase_rounds(std::int64_t len, bool stage2, std::int64_t L) {
    const std::uint64_t n = static_cast<std::uint64_t>(params_.n);
    for (std::int64_t r = 0; r < len; ++r) {
      ++round_;
      order_ = pushers_;
      channel_rng_.shuffle(order_);
      for (std::uint32_t u : order_) {
        const OpinionId noisy = sample_channel(pushed_value(u, stage2), noise_, channel_rng_);
        const std::size_t recv = static_cast<std::size_t>(node_rng_[u].below(n));
        deliver(recv, noisy, stage2, L);
        if (round_stamp_[recv] != round_) {
          round_stamp_[recv] = round_;
          round_count_[recv] = 0;
        }
        record_.max_round_deliveries =
            std::max<std::int64_t>(record_.max_round_deliveries, ++round_count_[recv]);
      }
    }
  }

  void collect_posted_counts(std::int64_t len, bool stage2, std::vector<std::int64_t>& n_counts) {
    const std::uint32_t k = params_.k;
    std::vector<std::int64_t> m_counts(k + 1, 0);
    for (std::uint32_t u : pushers_) m_counts[pushed_value(u, stage2)] += len;
    n_counts.assign(k + 1, 0);
    for (OpinionId i = 1; i <= k; ++i)
      for (std::int64_t b = 0; b < m_counts[i]; ++b)
        ++n_counts[sample_channel(i, noise_, channel_rng_)];
  }

  // Process B: the phase's messages become colored balls, are re-colored
  // independently by the channel, and land in uniform bins. No intra-phase
  // ordering exists.
  void run_phase_balls(std::int64_t len, bool stage2, std::int64_t L) {
    std::vector<std::int64_t> n_counts;
    collect_posted_counts(len, stage2, n_counts);
    const std::uint64_t n = static_cast<std::uint64_t>(params_.n);
    for (OpinionId j = 1; j <= params_.k; ++j)
      for (std::int64_t b = 0; b < n_counts[j]; ++b)
        deliver(static_cast<std::size_t>(channel_rng_.below(n)), j, stage2, L);
  }

  // Process P: each node receives an independent Poisson(h_i / n) number of
  // copies of opinion i, where h_i counts opinion i in the post-channel
  // multiset. Total delivered mass is not conserved.
  void run_phase_poisson(std::int64_t len, bool stage2, std::int64_t L) {
    std::vector<std::int64_t> n_counts;
    collect_posted_counts(len, stage2, n_counts);
    const std::uint32_t k = params_.k;
    const double n = static_cast<double>(params_.n);
    std::vector<std::int64_t> counts(k + 1, 0);
    for (std::size_t u = 0; u < opinions_.size(); ++u) {
      std::int64_t total = 0;
      for (OpinionId i = 1; i <= k; ++i) {
        counts[i] = node_rng_[u].poisson(static_cast<double>(n_counts[i]) / n);
        total += counts[i];
      }
      recv_count_[u] = total;
      delivered_ += total;
      if (total == 0) continue;
      if (!stage2) {
        if (opinions_[u] == kUndecided) {
          std::uint64_t r = node_rng_[u].below(static_cast<std::uint64_t>(total));
          for (OpinionId i = 1; i <= k; ++i) {
            if (r < static_cast<std::uint64_t>(counts[i])) {
              slot_[u] = i;
              break;
            }
            r -= static_cast<std::uint64_t>(counts[i]);
          }
        }
      } else if (total >= L) {
        // uniform L-subset of the received multiset, without replacement
        std::vector<std::int64_t> rem(counts);
        std::int64_t remaining = total;
        for (std::int64_t t = 0; t < L; ++t) {
          std::uint64_t r = node_rng_[u].below(static_cast<std::uint64_t>(remaining));
          for (OpinionId i = 1; i <= k; ++i) {
            if (r < static_cast<std::uint64_t>(rem[i])) {
              buffer_[u * static_cast<std::size_t>(L) + static_cast<std::size_t>(t)] = i;
              --rem[i];
              break;
            }
            r -= static_cast<std::uint64_t>(rem[i]);
          }
          --remaining;
        }
      }
    }
  }

  void apply_phase_end(std::size_t phase, bool stage2, std::int64_t L) {
    std::int64_t max_recv = 0;
    if (!stage2) {
      for (std::size_t u = 0; u < opinions_.size(); ++u) {
        max_recv = std::max(max_recv, recv_count_[u]);
        if (opinions_[u] == kUndecided && recv_count_[u] > 0) {
          opinions_[u] = slot_[u];
          val_[u] = slot_[u];
          first_reception_phase_[u] = static_cast<std::int64_t>(phase);
        }
      }
    } else {
      for (std::size_t u = 0; u < opinions_.size(); ++u) {
        max_recv = std::max(max_recv, recv_count_[u]);
        if (opinions_[u] == kUndecided || recv_count_[u] < L) continue;
        opinions_[u] = majority(
            std::span<const OpinionId>(buffer_.data() + u * static_cast<std::size_t>(L),
                                       static_cast<std::size_t>(L)),
            params_.k, node_rng_[u]);
      }
    }
    record_.max_sample_size = std::max(record_.max_sample_size, max_recv);
  }

  void record_phase_stat(std::size_t phase, std::int64_t traffic) {
    std::vector<std::int64_t> counts(params_.k, 0);
    std::int64_t undecided = 0;
    for (OpinionId v : opinions_) {
      if (v == kUndecided)
        ++undecided;
      else
        ++counts[v - 1];
    }
    PhaseStat stat;
    stat.stage = schedule_.is_stage2(phase) ? 2 : 1;
    stat.phase = schedule_.is_stage2(phase)
                     ? static_cast<std::int64_t>(phase - schedule_.stage1_phase_lengths.size())
                     : static_cast<std::int64_t>(phase);
    stat.round = schedule_.tau[phase];
    stat.dist = counts_to_distribution(counts, params_.n);
    stat.traffic = traffic;
    stat.unanimous = undecided == 0 &&
                     *std::max_element(counts.begin(), counts.end()) == params_.n;
    if (stat.unanimous && record_.convergence_round < 0)
      record_.convergence_round = stat.round;
    record_.per_phase.push_back(std::move(stat));

    if (phase + 1 == schedule_.phase_count()) {
      const PhaseStat& last = record_.per_phase.back();
      if (last.unanimous) {
        for (std::uint32_t i = 0; i < params_.k; ++i)
          if (last.dist.fractions[i] > 0.5) record_.converged_to = i + 1;
      }
    }
  }

  ProtocolParams params_;
  NoiseMatrix noise_;
  ProcessKind kind_;
  PhaseSchedule schedule_;

  std::vector<OpinionId> opinions_;
  std::vector<OpinionId> val_;
  std::vector<std::int64_t> first_reception_phase_;
  std::vector<Rng> node_rng_;
  Rng channel_rng_;

  std::vector<std::uint32_t> pushers_;
  std::vector<std::uint32_t> order_;
  std::vector<std::int64_t> recv_count_;
  std::vector<OpinionId> slot_;       // stage-1 single-slot reservoir
  std::vector<OpinionId> buffer_;     // stage-2 reservoir, n rows of L
  std::vector<std::int64_t> round_stamp_;
  std::vector<std::int32_t> round_count_;
  std::vector<std::int64_t> phase_delivered_;

  std::int64_t round_ = 0;
  std::int64_t delivered_ = 0;
  std::size_t next_phase_ = 0;
  RunRecord record_;
};

inline RunRecord run_trial(const ProtocolParams& params, const NoiseMatrix& noise,
                           ProcessKind kind, const InitialCondition& initial,
                           std::uint64_t seed) {
  Trial t(params, noise, kind, initial, seed);
  t.run_all();
  return t.record();
}

struct BatchConfig {
  ProtocolParams params;
  NoiseMatrix noise;
  ProcessKind process = ProcessKind::kO;
  InitialCondition initial;
  std::int64_t trials = 1;
  std::uint64_t base_seed = 1;
  int parallelism = 1;
};

struct BatchAggregate {
  std::int64_t trials = 0;
  std::int64_t successes = 0;
  double success_rate = 0.0;
  double mean_convergence_round = std::numeric_limits<double>::quiet_NaN();
  double median_convergence_round = std::numeric_limits<double>::quiet_NaN();
  double p90_convergence_round = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> per_phase_mean_bias;
  std::vector<double> per_phase_mean_mass;
};

struct BatchResult {
  std::vector<RunRecord> records;
  BatchAggregate aggregate;
};

/// Independent seeded trials (seed = base_seed + index), optionally fanned
/// out over threads. Aggregation reads the records in index order, so the
/// result is identical at every parallelism level.
inline BatchResult trial_batch(const BatchConfig& config) {
  if (config.trials < 1) throw ConfigError("trials must be >= 1");
  if (config.parallelism < 1) throw ConfigError("parallelism must be >= 1");

  BatchResult result;
  result.records.resize(static_cast<std::size_t>(config.trials));
  std::atomic<std::int64_t> next{0};
  auto worker = [&]() {
    while (true) {
      const std::int64_t idx = next.fetch_add(1);
      if (idx >= config.trials) break;
      result.records[static_cast<std::size_t>(idx)] =
          run_trial(config.params, config.noise, config.process, config.initial,
                    config.base_seed + static_cast<std::uint64_t>(idx));
    }
  };
  const int workers = static_cast<int>(
      std::min<std::int64_t>(config.parallelism, config.trials));
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  BatchAggregate& agg = result.aggregate;
  agg.trials = config.trials;
  std::vector<double> rounds;
  for (const RunRecord& rec : result.records) {
    if (rec.converged_to == config.initial.target) {
      ++agg.successes;
      if (rec.convergence_round >= 0)
        rounds.push_back(static_cast<double>(rec.convergence_round));
    }
  }
  agg.success_rate =
      static_cast<double>(agg.successes) / static_cast<double>(agg.trials);
  if (!rounds.empty()) {
    double sum = 0.0;
    for (double r : rounds) sum += r;
    agg.mean_convergence_round = sum / static_cast<double>(rounds.size());
    agg.median_convergence_round = stats::percentile(rounds, 0.5);
    agg.p90_convergence_round = stats::percentile(rounds, 0.9);
  }
  const std::size_t phases = result.records.front().per_phase.size();
  agg.per_phase_mean_bias.assign(phases, 0.0);
  agg.per_phase_mean_mass.assign(phases, 0.0);
  for (const RunRecord& rec : result.records) {
    for (std::size_t p = 0; p < phases; ++p) {
      agg.per_phase_mean_bias[p] += bias(rec.per_phase[p].dist, config.initial.target);
      agg.per_phase_mean_mass[p] += rec.per_phase[p].dist.opinionated_mass();
    }
  }
  for (std::size_t p = 0; p < phases; ++p) {
    agg.per_phase_mean_bias[p] /= static_cast<double>(config.trials);
    agg.per_phase_mean_mass[p] /= static_cast<double>(config.trials);
  }
  return result;
}

}  // namespace noisypush
