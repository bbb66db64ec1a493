#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>

#include "treempc/error.hpp"

namespace treempc {

/// ceil(n^exponent), never below `floor_value`.
inline std::size_t ceil_power(std::size_t n, double exponent, std::size_t floor_value = 2) {
  if (n == 0) return floor_value;
  const double raw = std::pow(static_cast<double>(n), exponent);
  // guard against pow returning 3.0000000001 for exact powers
  const double snapped = std::nearbyint(raw);
  const double value = std::abs(raw - snapped) < 1e-9 ? snapped : std::ceil(raw);
  return std::max<std::size_t>(floor_value, static_cast<std::size_t>(value));
}

inline std::size_t ceil_log2(std::size_t x) {
  std::size_t r = 0;
  while ((std::size_t{1} << r) < x) ++r;
  return r;
}

/// ceil(log_base(x)) for base > 1, clamped at 0 for x <= 1.
inline std::size_t ceil_log(double base, double x) {
  if (x <= 1.0) return 0;
  const double raw = std::log(x) / std::log(base);
  const double snapped = std::nearbyint(raw);
  return static_cast<std::size_t>(std::abs(raw - snapped) < 1e-9 ? snapped : std::ceil(raw));
}

/// Explicit capacity overrides; unset fields fall back to the power-law
/// defaults computed by MpcConfig::make.
struct CapacityOverrides {
  std::optional<std::size_t> local_capacity;
  std::optional<std::size_t> k_param;
  std::optional<std::size_t> epsilon_capacity;
  std::optional<std::size_t> cap2;
  std::optional<std::size_t> cap3;
  std::optional<std::size_t> cap6;
  std::optional<std::size_t> subtree_size;
  std::optional<std::size_t> round_charge;
  std::optional<std::size_t> extra_iterations;
  std::optional<std::size_t> balexp_iterations;
  std::optional<std::size_t> hdecomp_iterations;
  std::optional<std::size_t> round_ceiling;
};

/// Low-space MPC parameters. Every fractional power of n is evaluated as a
/// ceiling and may be replaced by an absolute value.
///
///   local_capacity   S = n^delta words per machine
///   epsilon_capacity n^{delta/8}   (importance threshold, per-direction cap)
///   cap2             n^{2 delta/8} (per-direction bound on exponentiation)
///   cap3             n^{3 delta/8} (full threshold / high-degree cutoff)
///   cap6             n^{6 delta/8} (largest answerable knowledge set)
///   subtree_size     n^{delta/10}  (x handed to the subtree rake step)
struct MpcConfig {
  std::size_t n = 0;
  double delta = 0.5;
  std::size_t local_capacity = 2;
  std::size_t k_param = 1;
  std::size_t epsilon_capacity = 2;
  std::size_t cap2 = 2;
  std::size_t cap3 = 3;
  std::size_t cap6 = 4;
  std::size_t subtree_size = 2;
  std::size_t fan_out = 2;
  std::size_t round_charge = 4;
  std::size_t extra_iterations = 10;
  std::optional<std::size_t> balexp_iterations_override;
  std::optional<std::size_t> hdecomp_iterations_override;
  std::size_t round_ceiling = 0;

  static MpcConfig make(std::size_t n, double delta, const CapacityOverrides& o = {}) {
    if (!(delta > 0.0 && delta < 1.0)) {
      throw Error(ErrorCode::kInvalidConfig, "delta must lie in (0,1)");
    }
    MpcConfig c;
    c.n = n;
    c.delta = delta;
    c.epsilon_capacity = o.epsilon_capacity.value_or(ceil_power(n, delta / 8));
    const std::size_t default_k =
        std::min<std::size_t>(c.epsilon_capacity, std::max<std::size_t>(1, 100 * ceil_log2(n)));
    c.k_param = o.k_param.value_or(default_k);
    const std::size_t k_eps = c.k_param * c.epsilon_capacity;
    // At desk-scale n the ceilings of n^{2e}, n^{3e} can collapse onto k*n^e;
    // the defaults are lifted so the orderings the probing relies on survive.
    c.cap2 = o.cap2.value_or(std::max(ceil_power(n, 2 * delta / 8), k_eps));
    c.cap3 = o.cap3.value_or(std::max(ceil_power(n, 3 * delta / 8), k_eps + 1));
    c.cap6 = o.cap6.value_or(std::max(ceil_power(n, 6 * delta / 8), c.cap3 * c.cap2 + 1));
    // a machine must hold a quarter-machine's worth of headroom for the
    // largest answerable knowledge record (5 words per tuple)
    c.local_capacity = o.local_capacity.value_or(
        std::max(ceil_power(n, delta), 4 * (5 * c.cap6 + c.cap3 + 1)));
    c.subtree_size = o.subtree_size.value_or(ceil_power(n, delta / 10));
    c.fan_out = ceil_power(n, delta / 2);
    c.round_charge = o.round_charge.value_or(4);
    c.extra_iterations = o.extra_iterations.value_or(10);
    c.balexp_iterations_override = o.balexp_iterations;
    c.hdecomp_iterations_override = o.hdecomp_iterations;
    const std::size_t loglog = ceil_log2(ceil_log2(std::max<std::size_t>(n, 4)));
    c.round_ceiling = o.round_ceiling.value_or(
        64 * (loglog + ceil_log2(std::max<std::size_t>(c.k_param, 2)) + 8));
    c.validate();
    return c;
  }

  /// Capacities large enough that no size test ever triggers (used to check
  /// the exploration logic in isolation).
  static MpcConfig non_binding(std::size_t n, double delta, std::size_t k) {
    CapacityOverrides o;
    const std::size_t big = std::max<std::size_t>(n, 2) + 1;
    o.k_param = k;
    o.epsilon_capacity = std::max(big, k);
    o.cap2 = k * *o.epsilon_capacity;
    o.cap3 = k * *o.epsilon_capacity + 1;
    o.cap6 = *o.cap3 * *o.cap2 + 1;
    o.local_capacity = 8 * (k + 1) * *o.cap3;
    return make(n, delta, o);
  }

  void validate() const {
    auto fail = [](const std::string& what) { throw Error(ErrorCode::kInvalidConfig, what); };
    if (epsilon_capacity < 2 || cap2 < 2 || cap3 < 2 || cap6 < 2 || local_capacity < 2) {
      fail("all capacities must be >= 2");
    }
    if (k_param > epsilon_capacity) fail("k must not exceed epsilon_capacity");
    if (cap3 <= k_param * epsilon_capacity) {
      fail("cap3 must exceed k * epsilon_capacity so high-degree directions get blocked");
    }
    if (round_charge == 0) fail("round_charge must be positive");
  }

  /// J = ceil(log_{6/5}(k/5)), clamped at 0.
  std::size_t shrink_iterations() const {
    return ceil_log(6.0 / 5.0, static_cast<double>(k_param) / 5.0);
  }

  std::size_t balexp_iterations() const {
    return balexp_iterations_override.value_or(shrink_iterations() + extra_iterations);
  }

  std::size_t hdecomp_iterations() const {
    return hdecomp_iterations_override.value_or(
        static_cast<std::size_t>(std::ceil(10.0 / delta - 1e-9)));
  }

  /// Layers per strict-H iteration: ceil(log2(n+1)) + 1.
  static std::size_t offset_for(std::size_t nodes) { return ceil_log2(nodes + 1) + 1; }

  /// Tree depth bound for aggregation structures: ceil(2/delta).
  std::size_t aggregation_depth_bound() const {
    return static_cast<std::size_t>(std::ceil(2.0 / delta - 1e-9));
  }
};

/// key=value lines, '#' comments, blank lines ignored.
inline std::map<std::string, std::string> read_key_values(std::istream& in) {
  std::map<std::string, std::string> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorCode::kParseError, "config line " + std::to_string(line_no) + ": missing '='");
    }
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
    };
    out[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return out;
}

}  // namespace treempc
