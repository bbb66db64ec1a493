#pragma once

#include <algorithm>
#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "treempc/error.hpp"
#include "treempc/forest.hpp"
#include "treempc/symmetry.hpp"

namespace treempc {

struct EdgeListInput {
  Forest forest;
  std::vector<std::uint64_t> original_ids;  // dense id -> id in the file
  bool remapped = false;
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  const auto e = s.find_last_not_of(" \t\r");
  return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
}

/// Non-comment, non-blank lines split into whitespace tokens.
template <class Fn>
void for_each_record(std::istream& is, ErrorCode code, Fn&& fn) {
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    std::istringstream ss(t);
    std::vector<std::uint64_t> values;
    std::string tok;
    while (ss >> tok) {
      try {
        std::size_t used = 0;
        if (tok[0] == '-' || tok[0] == '+') throw std::invalid_argument(tok);
        values.push_back(std::stoull(tok, &used));
        if (used != tok.size()) throw std::invalid_argument(tok);
      } catch (const std::exception&) {
        throw Error(code, "line " + std::to_string(line_no) + ": `" + tok + "` is not a node id");
      }
    }
    fn(line_no, values);
  }
}

}  // namespace detail

/// `u v` per line, `#` comments. A `# n=<count>` comment fixes the node
/// count (for isolated nodes). Without it, ids that are not exactly 0..m-1
/// are remapped in increasing order and the table is kept.
inline EdgeListInput parse_edge_list(std::istream& is) {
  std::optional<std::size_t> declared;
  std::vector<std::pair<std::uint64_t, std::uint64_t>> raw;
  std::string line;
  std::size_t line_no = 0;
  std::ostringstream body;
  while (std::getline(is, line)) {
    ++line_no;
    const std::string t = detail::trim(line);
    if (t.rfind("#", 0) == 0) {
      const std::string rest = detail::trim(t.substr(1));
      if (rest.rfind("n=", 0) == 0) {
        try {
          std::size_t used = 0;
          declared = std::stoull(rest.substr(2), &used);
          if (used != rest.size() - 2) throw std::invalid_argument(rest);
        } catch (const std::exception&) {
          throw Error(ErrorCode::kParseError, "line " + std::to_string(line_no) + ": bad node count");
        }
      }
    }
    body << line << '\n';
  }
  std::istringstream records(body.str());
  detail::for_each_record(records, ErrorCode::kParseError,
                          [&](std::size_t no, const std::vector<std::uint64_t>& vals) {
                            if (vals.size() != 2) {
                              throw Error(ErrorCode::kParseError,
                                          "line " + std::to_string(no) + ": expected `u v`");
                            }
                            raw.push_back({vals[0], vals[1]});
                          });
  EdgeListInput in;
  std::vector<std::uint64_t> ids;
  for (const auto& [u, v] : raw) {
    ids.push_back(u);
    ids.push_back(v);
  }
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  std::size_t n = 0;
  if (declared) {
    n = *declared;
    if (!ids.empty() && ids.back() >= n) {
      throw Error(ErrorCode::kParseError, "node id " + std::to_string(ids.back()) +
                                              " outside declared n=" + std::to_string(n));
    }
  } else if (ids.empty() || ids.back() + 1 == ids.size()) {
    n = ids.size();
  } else {
    in.remapped = true;
    n = ids.size();
  }
  std::vector<Edge> edges;
  edges.reserve(raw.size());
  auto dense = [&](std::uint64_t x) {
    if (!in.remapped) return static_cast<NodeId>(x);
    return static_cast<NodeId>(std::lower_bound(ids.begin(), ids.end(), x) - ids.begin());
  };
  for (const auto& [u, v] : raw) edges.push_back({dense(u), dense(v)});
  in.forest = build_forest(edges, n);
  if (in.remapped) {
    in.original_ids = ids;
  } else {
    in.original_ids.resize(n);
    for (std::size_t i = 0; i < n; ++i) in.original_ids[i] = i;
  }
  return in;
}

/// The `# n=` header is written only when some node has no edge; otherwise
/// the edge lines alone determine the node set.
inline void write_edge_list(std::ostream& os, const Forest& f) {
  bool isolated = false;
  for (NodeId v = 0; v < f.node_count() && !isolated; ++v) isolated = f.degree(v) == 0;
  if (isolated) os << "# n=" << f.node_count() << '\n';
  for (const Edge& e : f.edges()) os << e.u << ' ' << e.v << '\n';
}

/// `dense original` per line.
inline void write_id_table(std::ostream& os, const std::vector<std::uint64_t>& ids) {
  for (std::size_t i = 0; i < ids.size(); ++i) os << i << ' ' << ids[i] << '\n';
}

inline void write_coloring(std::ostream& os, std::span<const Color> c) {
  for (NodeId v = 0; v < c.size(); ++v) os << v << ' ' << c[v] << '\n';
}

inline void write_node_set(std::ostream& os, std::span<const NodeId> nodes) {
  for (NodeId v : nodes) os << v << '\n';
}

inline void write_edge_set(std::ostream& os, std::span<const Edge> edges) {
  for (const Edge& e : edges) os << e.u << ' ' << e.v << '\n';
}

/// Every node 0..n-1 exactly once with a positive color.
inline std::vector<Color> read_coloring(std::istream& is, std::size_t n) {
  std::vector<Color> c(n, kNoColor);
  detail::for_each_record(is, ErrorCode::kFormatError,
                          [&](std::size_t no, const std::vector<std::uint64_t>& vals) {
                            const std::string where = "line " + std::to_string(no) + ": ";
                            if (vals.size() != 2) throw Error(ErrorCode::kFormatError, where + "expected `node color`");
                            if (vals[0] >= n) throw Error(ErrorCode::kFormatError, where + "node out of range");
                            if (c[vals[0]] != kNoColor) throw Error(ErrorCode::kFormatError, where + "node repeated");
                            if (vals[1] == 0 || vals[1] > 0xffffffffULL) {
                              throw Error(ErrorCode::kFormatError, where + "bad color");
                            }
                            c[vals[0]] = static_cast<Color>(vals[1]);
                          });
  for (NodeId v = 0; v < n; ++v) {
    if (c[v] == kNoColor) throw Error(ErrorCode::kFormatError, "node " + std::to_string(v) + " missing");
  }
  return c;
}

inline std::vector<NodeId> read_node_set(std::istream& is, std::size_t n) {
  std::vector<NodeId> out;
  detail::for_each_record(is, ErrorCode::kFormatError,
                          [&](std::size_t no, const std::vector<std::uint64_t>& vals) {
                            if (vals.size() != 1 || vals[0] >= n) {
                              throw Error(ErrorCode::kFormatError, "line " + std::to_string(no) + ": expected a node id");
                            }
                            out.push_back(static_cast<NodeId>(vals[0]));
                          });
  return out;
}

inline std::vector<Edge> read_edge_set(std::istream& is, std::size_t n) {
  std::vector<Edge> out;
  detail::for_each_record(is, ErrorCode::kFormatError,
                          [&](std::size_t no, const std::vector<std::uint64_t>& vals) {
                            if (vals.size() != 2 || vals[0] >= n || vals[1] >= n) {
                              throw Error(ErrorCode::kFormatError, "line " + std::to_string(no) + ": expected `u v`");
                            }
                            out.push_back({static_cast<NodeId>(vals[0]), static_cast<NodeId>(vals[1])});
                          });
  return out;
}

}  // namespace treempc
