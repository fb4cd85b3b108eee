#pragma once

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "noisypush/core.hpp"
#include "noisypush/engine.hpp"

namespace noisypush::io {

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

/// One CSV row per (trial, phase): trial, stage, phase, round, a, c_1..c_k,
/// bias, converged. Full-precision decimals; rows ordered by trial then
/// phase, so identical inputs give byte-identical files.
inline std::string records_to_csv(const std::vector<RunRecord>& records) {
  std::ostringstream out;
  out << "trial,stage,phase,round,a";
  const std::uint32_t k = records.empty() ? 0 : records.front().params.k;
  for (std::uint32_t i = 1; i <= k; ++i) out << ",c_" << i;
  out << ",bias,converged\n";
  for (std::size_t t = 0; t < records.size(); ++t) {
    const RunRecord& rec = records[t];
    for (const PhaseStat& ph : rec.per_phase) {
      out << t << ',' << ph.stage << ',' << ph.phase << ',' << ph.round << ','
          << format_double(ph.dist.opinionated_mass());
      for (double f : ph.dist.fractions) out << ',' << format_double(f);
      out << ',' << format_double(bias(ph.dist, rec.target)) << ',' << (ph.unanimous ? 1 : 0)
          << '\n';
    }
  }
  return out.str();
}

inline nlohmann::json params_to_json(const ProtocolParams& p) {
  return nlohmann::json{{"n", p.n},
                        {"k", p.k},
                        {"epsilon", p.epsilon},
                        {"s", p.s},
                        {"beta", p.beta},
                        {"phi", p.phi},
                        {"c", p.c_stage2},
                        {"c_final", p.c_final},
                        {"mode", p.mode == Mode::kRumor ? "rumor" : "plurality"},
                        {"initial_opinionated", p.initial_opinionated}};
}

/// Replayable JSON form of a trial: seed, params, process, per-phase arrays
/// (round, opinionated mass, fractions, bias, traffic h), convergence fields
/// and the peak per-phase reception count.
inline nlohmann::json record_to_json(const RunRecord& rec) {
  nlohmann::json phases = nlohmann::json::array();
  for (const PhaseStat& ph : rec.per_phase) {
    phases.push_back({{"stage", ph.stage},
                      {"phase", ph.phase},
                      {"round", ph.round},
                      {"a", ph.dist.opinionated_mass()},
                      {"c", ph.dist.fractions},
                      {"bias", bias(ph.dist, rec.target)},
                      {"h", ph.traffic},
                      {"unanimous", ph.unanimous}});
  }
  nlohmann::json j{{"seed", rec.seed},
                   {"params", params_to_json(rec.params)},
                   {"process", std::string(1, process_kind_letter(rec.process))},
                   {"target", rec.target},
                   {"phases", std::move(phases)},
                   {"max_sample_size", rec.max_sample_size},
                   {"max_round_deliveries", rec.max_round_deliveries}};
  if (rec.converged_to != kUndecided) {
    j["converged_to"] = rec.converged_to;
    j["convergence_round"] = rec.convergence_round;
  } else {
    j["converged_to"] = nullptr;
    j["convergence_round"] = nullptr;
  }
  return j;
}

inline nlohmann::json batch_to_json(const BatchResult& result) {
  nlohmann::json trials = nlohmann::json::array();
  for (const RunRecord& rec : result.records) trials.push_back(record_to_json(rec));
  const BatchAggregate& agg = result.aggregate;
  nlohmann::json jagg{{"trials", agg.trials},
                      {"successes", agg.successes},
                      {"success_rate", agg.success_rate},
                      {"per_phase_mean_bias", agg.per_phase_mean_bias},
                      {"per_phase_mean_mass", agg.per_phase_mean_mass}};
  if (!std::isnan(agg.median_convergence_round)) {
    jagg["mean_convergence_round"] = agg.mean_convergence_round;
    jagg["median_convergence_round"] = agg.median_convergence_round;
    jagg["p90_convergence_round"] = agg.p90_convergence_round;
  }
  return nlohmann::json{{"aggregate", std::move(jagg)}, {"trials", std::move(trials)}};
}

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot open output file: " + path);
  out << content;
}

}  // namespace noisypush::io
