#pragma once

#include <algorithm>
#include <cstdint>
#include <istream>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "treempc/error.hpp"
#include "treempc/forest.hpp"

namespace treempc {

using Layer = std::uint32_t;
inline constexpr Layer kInfinity = std::numeric_limits<Layer>::max();

/// layer: V(F) -> {1, 2, ...} ∪ {∞}.
class Layering {
 public:
  Layering() = default;
  explicit Layering(std::size_t n, Layer fill = kInfinity) : layer_(n, fill) {}
  explicit Layering(std::vector<Layer> layers) : layer_(std::move(layers)) {}

  std::size_t size() const { return layer_.size(); }
  Layer operator[](NodeId v) const { return layer_[v]; }
  Layer& operator[](NodeId v) { return layer_[v]; }
  const std::vector<Layer>& values() const { return layer_; }

  bool finite(NodeId v) const { return layer_[v] != kInfinity; }

  std::size_t infinite_count() const {
    return static_cast<std::size_t>(std::count(layer_.begin(), layer_.end(), kInfinity));
  }

  /// Largest finite layer, 0 if none.
  Layer max_finite() const {
    Layer best = 0;
    for (Layer l : layer_) {
      if (l != kInfinity) best = std::max(best, l);
    }
    return best;
  }

  /// Nodes still at ∞, sorted.
  std::vector<NodeId> infinite_nodes() const {
    std::vector<NodeId> out;
    for (NodeId v = 0; v < layer_.size(); ++v) {
      if (layer_[v] == kInfinity) out.push_back(v);
    }
    return out;
  }

  friend bool operator==(const Layering&, const Layering&) = default;

 private:
  std::vector<Layer> layer_;
};

struct Verdict {
  bool ok = true;
  std::optional<NodeId> node;  // first violating node
  std::string reason;

  explicit operator bool() const { return ok; }

  static Verdict pass() { return {}; }
  static Verdict fail(NodeId v, std::string why) { return {false, v, std::move(why)}; }
};

namespace detail {

inline void require_domain(const Forest& f, const Layering& l) {
  if (l.size() != f.node_count()) {
    throw Error(ErrorCode::kDomainMismatch, "layering covers " + std::to_string(l.size()) +
                                                " nodes, forest has " +
                                                std::to_string(f.node_count()));
  }
}

}  // namespace detail

/// Every finite-layer node has at most two neighbors at its own or a higher layer.
inline Verdict validate_partial_h(const Forest& f, const Layering& l) {
  detail::require_domain(f, l);
  for (NodeId v = 0; v < f.node_count(); ++v) {
    if (!l.finite(v)) continue;
    std::size_t up = 0;
    for (NodeId w : f.neighbors(v)) up += l[w] >= l[v];
    if (up > 2) {
      return Verdict::fail(v, std::to_string(up) + " neighbors at layer >= " + std::to_string(l[v]));
    }
  }
  return Verdict::pass();
}

/// Finite nodes whose layer is at least that of every neighbor.
inline std::vector<bool> pivot_nodes(const Forest& f, const Layering& l) {
  std::vector<bool> pivot(f.node_count(), false);
  for (NodeId v = 0; v < f.node_count(); ++v) {
    if (!l.finite(v)) continue;
    pivot[v] = std::all_of(f.neighbors(v).begin(), f.neighbors(v).end(),
                           [&](NodeId w) { return l[v] >= l[w]; });
  }
  return pivot;
}

/// Partial H plus: every finite non-pivot node has at most one neighbor that
/// is either a non-pivot at the same layer or anything at a higher layer.
inline Verdict validate_strict_h(const Forest& f, const Layering& l) {
  if (Verdict base = validate_partial_h(f, l); !base) return base;
  const auto pivot = pivot_nodes(f, l);
  for (NodeId v = 0; v < f.node_count(); ++v) {
    if (!l.finite(v) || pivot[v]) continue;
    std::size_t count = 0;
    for (NodeId w : f.neighbors(v)) {
      if (l[w] > l[v] || (l[w] == l[v] && !pivot[w])) ++count;
    }
    if (count > 1) {
      return Verdict::fail(v, "non-pivot with " + std::to_string(count) +
                                  " same-layer non-pivot or higher neighbors");
    }
  }
  return Verdict::pass();
}

inline Layering min_combine(const Layering& a, const Layering& b) {
  if (a.size() != b.size()) {
    throw Error(ErrorCode::kDomainMismatch,
                std::to_string(a.size()) + " vs " + std::to_string(b.size()) + " nodes");
  }
  Layering out(a.size());
  for (NodeId v = 0; v < a.size(); ++v) out[v] = std::min(a[v], b[v]);
  return out;
}

/// Text form: one `node layer` line per node, `inf` for ∞.
inline void write_layering(std::ostream& os, const Layering& l) {
  for (NodeId v = 0; v < l.size(); ++v) {
    os << v << ' ';
    if (l.finite(v)) {
      os << l[v];
    } else {
      os << "inf";
    }
    os << '\n';
  }
}

/// Parses the text form; every node 0..n-1 must appear exactly once.
inline Layering read_layering(std::istream& is, std::size_t n) {
  Layering l(n);
  std::vector<bool> seen(n, false);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream ss(line);
    long long node = -1;
    std::string value;
    std::string extra;
    if (!(ss >> node >> value) || (ss >> extra)) {
      throw Error(ErrorCode::kFormatError, "line " + std::to_string(line_no) + ": expected `node layer`");
    }
    if (node < 0 || static_cast<std::size_t>(node) >= n) {
      throw Error(ErrorCode::kFormatError, "line " + std::to_string(line_no) + ": node out of range");
    }
    if (seen[node]) {
      throw Error(ErrorCode::kFormatError, "line " + std::to_string(line_no) + ": node repeated");
    }
    seen[node] = true;
    if (value == "inf") continue;
    try {
      std::size_t used = 0;
      const unsigned long long x = std::stoull(value, &used);
      if (used != value.size() || x == 0 || x >= kInfinity) throw std::invalid_argument(value);
      l[static_cast<NodeId>(node)] = static_cast<Layer>(x);
    } catch (const std::exception&) {
      throw Error(ErrorCode::kFormatError, "line " + std::to_string(line_no) + ": bad layer `" + value + "`");
    }
  }
  for (NodeId v = 0; v < n; ++v) {
    if (!seen[v]) throw Error(ErrorCode::kFormatError, "node " + std::to_string(v) + " missing");
  }
  return l;
}

}  // namespace treempc
