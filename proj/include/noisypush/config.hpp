#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "noisypush/core.hpp"
#include "noisypush/engine.hpp"
#include "noisypush/noise.hpp"

namespace noisypush {

/// A full experiment: protocol parameters, channel, process, initial
/// opinions, trial count and seeding, output prefix and an optional sweep
/// axis. Serialized as a key = value document; CLI flags override file
/// values.
struct ExperimentConfig {
  ProtocolParams params;
  std::string noise_spec = "uniform:3:0.3";
  ProcessKind process = ProcessKind::kO;
  OpinionId target = 1;                     // rumor source opinion
  std::vector<std::int64_t> initial_counts; // plurality mode only
  std::int64_t undecided_count = 0;         // informational; n - sum(initial)
  std::int64_t trials = 1;
  std::uint64_t base_seed = 1;
  int parallelism = 1;
  std::string output_prefix;
  std::string sweep_axis;                   // "", "epsilon" or "n"
  std::vector<double> sweep_values;

  bool operator==(const ExperimentConfig& other) const = default;

  InitialCondition initial_condition() const {
    if (params.mode == Mode::kRumor) return InitialCondition::rumor(target, params.k);
    return InitialCondition::plurality(initial_counts);
  }

  BatchConfig batch_config() const {
    BatchConfig bc;
    bc.params = params;
    bc.noise = parse_noise_spec(noise_spec);
    bc.process = process;
    bc.initial = initial_condition();
    bc.params.initial_opinionated = bc.initial.total();
    bc.trials = trials;
    bc.base_seed = base_seed;
    bc.parallelism = parallelism;
    return bc;
  }

  /// Regime warnings (not errors): exploring the failure regimes is a
  /// legitimate use, so these only inform.
  std::vector<std::string> warnings() const {
    std::vector<std::string> w;
    const double ln_n = std::log(static_cast<double>(params.n));
    if (params.epsilon < std::pow(static_cast<double>(params.n), -0.25))
      w.push_back("epsilon below n^(-1/4): outside the analyzed rumor-spreading regime");
    if (params.mode == Mode::kPlurality) {
      std::int64_t total = 0, best = 0, second = 0;
      for (std::int64_t c : initial_counts) {
        total += c;
        if (c >= best) {
          second = best;
          best = c;
        } else if (c > second) {
          second = c;
        }
      }
      if (static_cast<double>(total) < ln_n / (params.epsilon * params.epsilon))
        w.push_back("initial opinionated set smaller than (ln n)/eps^2");
      if (best == second)
        w.push_back("no strictly largest initial opinion; plurality target is ambiguous");
    }
    return w;
  }
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::int64_t> parse_count_list(const std::string& text, std::uint32_t k) {
  // "i:count,i:count,..." with opinions in 1..k
  std::vector<std::int64_t> counts(k, 0);
  std::istringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    const auto colon = item.find(':');
    if (colon == std::string::npos) throw ConfigError("bad initial counts entry: " + item);
    const std::uint64_t op = std::stoull(trim(item.substr(0, colon)));
    if (op == 0 || op > k) throw ConfigError("initial counts: opinion out of range");
    counts[op - 1] = std::stoll(trim(item.substr(colon + 1)));
  }
  return counts;
}

inline std::string format_count_list(const std::vector<std::int64_t>& counts) {
  std::ostringstream out;
  bool first = true;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    if (counts[i] == 0) continue;
    if (!first) out << ',';
    out << (i + 1) << ':' << counts[i];
    first = false;
  }
  return out.str();
}

}  // namespace detail

inline std::string emit_config(const ExperimentConfig& c) {
  std::ostringstream out;
  char buf[40];
  auto num = [&buf](double v) {
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return std::string(buf);
  };
  out << "n = " << c.params.n << "\n";
  out << "k = " << c.params.k << "\n";
  out << "epsilon = " << num(c.params.epsilon) << "\n";
  out << "s = " << num(c.params.s) << "\n";
  out << "beta = " << num(c.params.beta) << "\n";
  out << "phi = " << num(c.params.phi) << "\n";
  out << "c = " << num(c.params.c_stage2) << "\n";
  out << "c_final = " << num(c.params.c_final) << "\n";
  out << "mode = " << (c.params.mode == Mode::kRumor ? "rumor" : "plurality") << "\n";
  out << "noise = " << c.noise_spec << "\n";
  out << "process = " << process_kind_letter(c.process) << "\n";
  out << "target = " << c.target << "\n";
  if (!c.initial_counts.empty())
    out << "initial = " << detail::format_count_list(c.initial_counts) << "\n";
  out << "trials = " << c.trials << "\n";
  out << "seed = " << c.base_seed << "\n";
  out << "parallelism = " << c.parallelism << "\n";
  if (!c.output_prefix.empty()) out << "out = " << c.output_prefix << "\n";
  if (!c.sweep_axis.empty()) {
    out << "sweep_axis = " << c.sweep_axis << "\n";
    out << "sweep_values =";
    for (double v : c.sweep_values) out << ' ' << num(v);
    out << "\n";
  }
  return out.str();
}

inline ExperimentConfig parse_config(std::istream& in) {
  ExperimentConfig c;
  std::string line;
  std::string initial_text;
  while (std::getline(in, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string value = detail::trim(line.substr(eq + 1));
    if (key == "n") c.params.n = std::stoll(value);
    else if (key == "k") c.params.k = static_cast<std::uint32_t>(std::stoul(value));
    else if (key == "epsilon") c.params.epsilon = std::stod(value);
    else if (key == "s") c.params.s = std::stod(value);
    else if (key == "beta") c.params.beta = std::stod(value);
    else if (key == "phi") c.params.phi = std::stod(value);
    else if (key == "c") c.params.c_stage2 = std::stod(value);
    else if (key == "c_final") c.params.c_final = std::stod(value);
    else if (key == "mode") {
      if (value == "rumor") c.params.mode = Mode::kRumor;
      else if (value == "plurality") c.params.mode = Mode::kPlurality;
      else throw ConfigError("bad mode: " + value);
    } else if (key == "noise") c.noise_spec = value;
    else if (key == "process") {
      if (value == "O") c.process = ProcessKind::kO;
      else if (value == "B") c.process = ProcessKind::kB;
      else if (value == "P") c.process = ProcessKind::kP;
      else throw ConfigError("bad process: " + value);
    } else if (key == "target") c.target = static_cast<OpinionId>(std::stoul(value));
    else if (key == "initial") initial_text = value;
    else if (key == "trials") c.trials = std::stoll(value);
    else if (key == "seed") c.base_seed = std::stoull(value);
    else if (key == "parallelism") c.parallelism = std::stoi(value);
    else if (key == "out") c.output_prefix = value;
    else if (key == "sweep_axis") c.sweep_axis = value;
    else if (key == "sweep_values") {
      std::istringstream vs(value);
      double v;
      while (vs >> v) c.sweep_values.push_back(v);
    } else throw ConfigError("unknown config key: " + key);
  }
  if (!initial_text.empty()) c.initial_counts = detail::parse_count_list(initial_text, c.params.k);
  if (c.params.mode == Mode::kPlurality) {
    std::int64_t total = 0;
    for (std::int64_t v : c.initial_counts) total += v;
    c.undecided_count = c.params.n - total;
    c.params.initial_opinionated = total;
  }
  return c;
}

inline ExperimentConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  return parse_config(in);
}

}  // namespace noisypush
