#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "noisypush/core.hpp"
#include "noisypush/rng.hpp"

namespace noisypush {

/// Row-stochastic k x k channel matrix: entry (i, j) is the probability that
/// a sent opinion i is delivered as opinion j.
class NoiseMatrix {
 public:
  NoiseMatrix() = default;
  NoiseMatrix(std::uint32_t k, std::vector<double> entries)
      : k_(k), entries_(std::move(entries)) {
    if (entries_.size() != static_cast<std::size_t>(k_) * k_)
      throw DimensionMismatchError("noise matrix entry count does not match k");
  }

  std::uint32_t k() const { return k_; }
  double at(std::uint32_t i, std::uint32_t j) const { return entries_[i * k_ + j]; }
  double& at(std::uint32_t i, std::uint32_t j) { return entries_[i * k_ + j]; }
  const double* row(std::uint32_t i) const { return entries_.data() + i * k_; }
  const std::vector<double>& entries() const { return entries_; }

  void validate() const {
    if (k_ < 2) throw ConfigError("noise matrix needs k >= 2");
    for (std::uint32_t i = 0; i < k_; ++i) {
      double sum = 0.0;
      for (std::uint32_t j = 0; j < k_; ++j) {
        if (at(i, j) < 0.0) throw NotStochasticError(i, at(i, j));
        sum += at(i, j);
      }
      if (std::fabs(sum - 1.0) > kMassTolerance) throw NotStochasticError(i, sum - 1.0);
    }
  }

  NoiseMatrix transposed() const {
    NoiseMatrix t(k_, std::vector<double>(entries_.size()));
    for (std::uint32_t i = 0; i < k_; ++i)
      for (std::uint32_t j = 0; j < k_; ++j) t.at(j, i) = at(i, j);
    return t;
  }

  NoiseMatrix operator*(const NoiseMatrix& other) const {
    if (other.k_ != k_) throw DimensionMismatchError("matrix product dimension mismatch");
    NoiseMatrix out(k_, std::vector<double>(entries_.size(), 0.0));
    for (std::uint32_t i = 0; i < k_; ++i)
      for (std::uint32_t t = 0; t < k_; ++t) {
        const double v = at(i, t);
        if (v == 0.0) continue;
        for (std::uint32_t j = 0; j < k_; ++j) out.at(i, j) += v * other.at(t, j);
      }
    return out;
  }

 private:
  std::uint32_t k_ = 0;
  std::vector<double> entries_;
};

/// Expected post-channel opinion distribution c . P (row-vector convention).
/// Opinionated mass and undecided mass are both preserved, since P is
/// row-stochastic.
inline OpinionDistribution push_through(const OpinionDistribution& c, const NoiseMatrix& P) {
  if (c.k() != P.k()) throw DimensionMismatchError("push_through: k mismatch");
  OpinionDistribution out;
  out.fractions.assign(c.k(), 0.0);
  out.undecided = c.undecided;
  out.n_ref = c.n_ref;
  for (std::uint32_t i = 0; i < P.k(); ++i) {
    const double ci = c.fractions[i];
    if (ci == 0.0) continue;
    for (std::uint32_t j = 0; j < P.k(); ++j) out.fractions[j] += ci * P.at(i, j);
  }
  return out;
}

/// Send opinion i through the channel: returns j with probability P(i, j).
/// Inverse-CDF sampling on row i.
inline OpinionId sample_channel(OpinionId i, const NoiseMatrix& P, Rng& rng) {
  if (i == kUndecided || i > P.k()) throw BadRangeError("sample_channel: opinion out of range");
  const double* row = P.row(i - 1);
  double u = rng.next_double();
  double cum = 0.0;
  for (std::uint32_t j = 0; j + 1 < P.k(); ++j) {
    cum += row[j];
    if (u < cum) return j + 1;
  }
  return P.k();
}

/// Binary channel: opinion kept with probability 1/2 + eps.
inline NoiseMatrix make_binary(double epsilon) {
  if (!(epsilon > 0.0 && epsilon < 0.5)) throw BadRangeError("binary noise needs 0 < eps < 1/2");
  return NoiseMatrix(2, {0.5 + epsilon, 0.5 - epsilon, 0.5 - epsilon, 0.5 + epsilon});
}

/// k-ary uniform channel: diagonal 1/k + eps, off-diagonal 1/k - eps/(k-1).
inline NoiseMatrix make_uniform(std::uint32_t k, double epsilon) {
  if (k < 2) throw BadRangeError("uniform noise needs k >= 2");
  const double off = 1.0 / k - epsilon / (k - 1);
  if (!(epsilon > 0.0) || off < 0.0)
    throw BadRangeError("uniform noise needs 0 < eps < 1 - 1/k");
  std::vector<double> e(static_cast<std::size_t>(k) * k, off);
  for (std::uint32_t i = 0; i < k; ++i) e[i * k + i] = 1.0 / k + epsilon;
  return NoiseMatrix(k, e);
}

/// The diagonally dominant 3x3 matrix that fails to preserve majority:
/// each opinion leaks only to its cyclic successor.
inline NoiseMatrix make_cyclic_dominant(double epsilon) {
  if (!(epsilon > 0.0 && epsilon < 0.5)) throw BadRangeError("cyclic noise needs 0 < eps < 1/2");
  const double d = 0.5 + epsilon, o = 0.5 - epsilon;
  return NoiseMatrix(3, {d, 0.0, o, o, d, 0.0, 0.0, o, d});
}

/// Sufficient condition for a matrix with constant diagonal p and
/// off-diagonal entries in [q_l, q_u] to be majority preserving:
/// (p - q_u) * delta / 2 >= q_u - q_l, with implied eps = (p - q_u)/2.
inline bool check_bounded_sufficient(double p, double q_l, double q_u, double delta) {
  if (!(0.0 <= q_l && q_l <= q_u && q_u <= p && p <= 1.0))
    throw BadRangeError("check_bounded_sufficient: need 0 <= q_l <= q_u <= p <= 1");
  if (!(delta > 0.0 && delta <= 1.0))
    throw BadRangeError("check_bounded_sufficient: need 0 < delta <= 1");
  return (p - q_u) * delta / 2.0 >= (q_u - q_l);
}

// ---------------------------------------------------------------------------
// Matrix text format: a key-value document with a `k = <int>` line followed by
// k `row = v1 v2 ... vk` lines, in order. `#` starts a comment.

inline NoiseMatrix parse_matrix_text(std::istream& in) {
  std::uint32_t k = 0;
  std::vector<double> entries;
  std::string line;
  while (std::getline(in, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    std::string key = line.substr(0, eq);
    std::string value = line.substr(eq + 1);
    key.erase(0, key.find_first_not_of(" \t"));
    key.erase(key.find_last_not_of(" \t") + 1);
    if (key == "k") {
      k = static_cast<std::uint32_t>(std::stoul(value));
    } else if (key == "row") {
      std::istringstream vs(value);
      double v;
      while (vs >> v) entries.push_back(v);
    }
  }
  if (k < 2) throw ConfigError("matrix file: missing or bad k");
  NoiseMatrix m(k, std::move(entries));
  m.validate();
  return m;
}

inline NoiseMatrix load_matrix_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open matrix file: " + path);
  return parse_matrix_text(in);
}

inline std::string format_matrix_text(const NoiseMatrix& m) {
  std::ostringstream out;
  out << "k = " << m.k() << "\n";
  char buf[32];
  for (std::uint32_t i = 0; i < m.k(); ++i) {
    out << "row =";
    for (std::uint32_t j = 0; j < m.k(); ++j) {
      std::snprintf(buf, sizeof(buf), " %.17g", m.at(i, j));
      out << buf;
    }
    out << "\n";
  }
  return out.str();
}

/// Inline CLI specs: "binary:EPS", "uniform:K:EPS", "cyclic:EPS",
/// "cyclicT:EPS" (the transposed counter-example), "identity:K", "file:PATH".
inline NoiseMatrix parse_noise_spec(const std::string& spec) {
  const auto colon = spec.find(':');
  if (colon == std::string::npos) throw ConfigError("bad noise spec: " + spec);
  const std::string kind = spec.substr(0, colon);
  const std::string rest = spec.substr(colon + 1);
  if (kind == "binary") return make_binary(std::stod(rest));
  if (kind == "cyclic") return make_cyclic_dominant(std::stod(rest));
  if (kind == "cyclicT") return make_cyclic_dominant(std::stod(rest)).transposed();
  if (kind == "uniform") {
    const auto c2 = rest.find(':');
    if (c2 == std::string::npos) throw ConfigError("uniform spec needs k and eps: " + spec);
    return make_uniform(static_cast<std::uint32_t>(std::stoul(rest.substr(0, c2))),
                        std::stod(rest.substr(c2 + 1)));
  }
  if (kind == "identity") {
    const std::uint32_t k = static_cast<std::uint32_t>(std::stoul(rest));
    if (k < 2) throw ConfigError("identity spec needs k >= 2");
    std::vector<double> e(static_cast<std::size_t>(k) * k, 0.0);
    for (std::uint32_t i = 0; i < k; ++i) e[i * k + i] = 1.0;
    return NoiseMatrix(k, std::move(e));
  }
  if (kind == "file") return load_matrix_file(rest);
  throw ConfigError("unknown noise spec kind: " + kind);
}

}  // namespace noisypush
