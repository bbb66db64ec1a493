#pragma once

#include <cctype>
#include <chrono>
#include <cstdint>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "treempc/config.hpp"
#include "treempc/forest.hpp"
#include "treempc/hdecomp.hpp"
#include "treempc/io.hpp"
#include "treempc/layering.hpp"
#include "treempc/mpcsim.hpp"
#include "treempc/symmetry.hpp"

namespace treempc {

inline constexpr int kReportSchemaVersion = 1;

enum class Task { kHDecomp, kColor, kMis, kMatching };
enum class Mode { kDirect, kMpc };

inline constexpr std::string_view to_string(Task t) {
  switch (t) {
    case Task::kHDecomp: return "hdecomp";
    case Task::kColor: return "color";
    case Task::kMis: return "mis";
    case Task::kMatching: return "matching";
  }
  return "unknown";
}

inline constexpr std::string_view to_string(Mode m) {
  return m == Mode::kMpc ? "mpc" : "direct";
}

inline std::optional<Task> parse_task(std::string_view s) {
  for (Task t : {Task::kHDecomp, Task::kColor, Task::kMis, Task::kMatching}) {
    if (to_string(t) == s) return t;
  }
  return std::nullopt;
}

inline std::optional<Mode> parse_mode(std::string_view s) {
  if (s == "direct") return Mode::kDirect;
  if (s == "mpc") return Mode::kMpc;
  return std::nullopt;
}

struct RunOptions {
  Task task = Task::kHDecomp;
  Mode mode = Mode::kDirect;
  double delta = 0.5;
  bool optimal_space = false;
  std::optional<std::size_t> preprocess_iterations;
  CapacityOverrides overrides;
};

/// Applies `key=value` settings on top of `opts`. Unknown keys are an error.
inline void apply_settings(const std::map<std::string, std::string>& kv, RunOptions& opts) {
  auto number = [](const std::string& key, const std::string& value) {
    try {
      std::size_t used = 0;
      if (value.empty() || !std::isdigit(static_cast<unsigned char>(value[0]))) {
        throw std::invalid_argument(value);
      }
      const unsigned long long x = std::stoull(value, &used);
      if (used != value.size()) throw std::invalid_argument(value);
      return static_cast<std::size_t>(x);
    } catch (const std::exception&) {
      throw Error(ErrorCode::kParseError, key + ": `" + value + "` is not a count");
    }
  };
  auto& o = opts.overrides;
  const std::map<std::string, std::optional<std::size_t>*> counts = {
      {"local_capacity", &o.local_capacity},
      {"k", &o.k_param},
      {"epsilon_capacity", &o.epsilon_capacity},
      {"cap2", &o.cap2},
      {"cap3", &o.cap3},
      {"cap6", &o.cap6},
      {"subtree_size", &o.subtree_size},
      {"round_charge", &o.round_charge},
      {"extra_iterations", &o.extra_iterations},
      {"balexp_iterations", &o.balexp_iterations},
      {"hdecomp_iterations", &o.hdecomp_iterations},
      {"round_ceiling", &o.round_ceiling},
      {"preprocess_iterations", &opts.preprocess_iterations},
  };
  for (const auto& [key, value] : kv) {
    if (auto it = counts.find(key); it != counts.end()) {
      *it->second = number(key, value);
    } else if (key == "delta") {
      try {
        std::size_t used = 0;
        opts.delta = std::stod(value, &used);
        if (used != value.size()) throw std::invalid_argument(value);
      } catch (const std::exception&) {
        throw Error(ErrorCode::kParseError, "delta: `" + value + "` is not a number");
      }
    } else if (key == "mode") {
      const auto m = parse_mode(value);
      if (!m) throw Error(ErrorCode::kParseError, "mode: `" + value + "`");
      opts.mode = *m;
    } else if (key == "optimal_space") {
      opts.optimal_space = value == "1" || value == "true";
    } else {
      throw Error(ErrorCode::kParseError, "unknown setting `" + key + "`");
    }
  }
}

struct RunOutput {
  MpcConfig cfg;
  Layering layering;
  std::vector<Color> colors;
  std::vector<NodeId> mis;
  std::vector<Edge> matching;
  std::size_t max_path_length = 0;
  std::size_t preprocessed = 0;  // nodes layered before the main driver
  SpaceLedger ledger;
  nlohmann::ordered_json verdicts = nlohmann::ordered_json::object();
  bool ok = true;
};

/// Strict H-decomposition of the whole forest. With `optimal_space` the
/// pivot/leaf peel runs first and the residual layers are stacked above it.
inline Layering decompose(const Forest& f, const MpcConfig& cfg, const RunOptions& opts,
                          SpaceLedger& ledger, std::size_t* preprocessed = nullptr) {
  const bool mpc = opts.mode == Mode::kMpc;
  if (!opts.optimal_space) {
    HDecompResult r = strict_h_decomp(f, cfg, mpc);
    if (mpc) ledger.absorb(r.ledger);
    if (preprocessed) *preprocessed = 0;
    return std::move(r.layering);
  }
  const std::size_t iters =
      opts.preprocess_iterations.value_or(default_preprocess_iterations(f.node_count()));
  PreprocessResult pre = optimal_space_preprocess(f, iters, mpc ? &cfg : nullptr, mpc ? &ledger : nullptr);
  HDecompResult r = strict_h_decomp(pre.residual.forest, cfg, mpc);
  if (mpc) ledger.absorb(r.ledger);
  Layering out = pre.layering;
  for (NodeId v = 0; v < r.layering.size(); ++v) {
    out[pre.residual.to_parent[v]] = static_cast<Layer>(iters + r.layering[v]);
  }
  if (preprocessed) *preprocessed = f.node_count() - pre.residual.forest.node_count();
  return out;
}

inline nlohmann::ordered_json verdict_json(const Verdict& v) {
  nlohmann::ordered_json j;
  j["ok"] = v.ok;
  if (v.node) j["node"] = *v.node;
  if (!v.reason.empty()) j["reason"] = v.reason;
  return j;
}

inline RunOutput run_task(const Forest& f, const RunOptions& opts) {
  RunOutput out;
  out.cfg = MpcConfig::make(f.node_count(), opts.delta, opts.overrides);
  out.ledger = SpaceLedger(out.cfg.local_capacity);
  const bool mpc = opts.mode == Mode::kMpc;
  out.layering = decompose(f, out.cfg, opts, out.ledger, &out.preprocessed);
  auto record = [&](const char* name, const Verdict& v) {
    out.verdicts[name] = verdict_json(v);
    out.ok = out.ok && v.ok;
  };
  record("strict_h", validate_strict_h(f, out.layering));
  const std::size_t bound =
      (out.cfg.hdecomp_iterations() + 1) * MpcConfig::offset_for(f.node_count()) +
      (opts.optimal_space
           ? opts.preprocess_iterations.value_or(default_preprocess_iterations(f.node_count()))
           : 0);
  record("layer_bound", out.layering.max_finite() <= bound
                            ? Verdict::pass()
                            : Verdict::fail(0, "max layer " + std::to_string(out.layering.max_finite()) +
                                                   " above " + std::to_string(bound)));
  if (opts.task == Task::kHDecomp) return out;

  ThreeColoring tc = three_color(f, out.layering, out.cfg);
  if (mpc) out.ledger.absorb(tc.ledger);
  out.colors = std::move(tc.color);
  out.max_path_length = tc.max_path_length;
  record("coloring", validate_coloring(f, out.colors, 3));
  if (opts.task == Task::kMis) {
    MisResult m = mis_from_coloring(f, out.colors, out.cfg.local_capacity);
    if (mpc) out.ledger.absorb(m.ledger);
    out.mis = std::move(m.nodes);
    record("mis", validate_mis(f, out.mis));
  } else if (opts.task == Task::kMatching) {
    MatchingResult m = matching_from_coloring(f, out.layering, out.colors, out.cfg.local_capacity);
    if (mpc) out.ledger.absorb(m.ledger);
    out.matching = std::move(m.edges);
    record("matching", validate_matching(f, out.matching));
  }
  return out;
}

/// Report without any wall-clock field, so reruns compare byte for byte.
inline nlohmann::ordered_json make_report(const Forest& f, const RunOptions& opts, const RunOutput& out) {
  nlohmann::ordered_json j;
  j["schema_version"] = kReportSchemaVersion;
  j["task"] = to_string(opts.task);
  j["mode"] = to_string(opts.mode);
  j["n"] = f.node_count();
  j["edges"] = f.edge_count();
  j["delta"] = opts.delta;
  j["optimal_space"] = opts.optimal_space;
  nlohmann::ordered_json cfg;
  cfg["local_capacity"] = out.cfg.local_capacity;
  cfg["k"] = out.cfg.k_param;
  cfg["epsilon_capacity"] = out.cfg.epsilon_capacity;
  cfg["cap2"] = out.cfg.cap2;
  cfg["cap3"] = out.cfg.cap3;
  cfg["cap6"] = out.cfg.cap6;
  cfg["subtree_size"] = out.cfg.subtree_size;
  cfg["round_charge"] = out.cfg.round_charge;
  cfg["balexp_iterations"] = out.cfg.balexp_iterations();
  cfg["hdecomp_iterations"] = out.cfg.hdecomp_iterations();
  j["config"] = cfg;
  j["rounds"] = out.ledger.rounds();
  j["global_peak_words"] = out.ledger.global_peak_words();
  j["machine_peak_words"] = out.ledger.machine_peak_words();
  j["max_sent_words"] = out.ledger.max_sent_words();
  j["max_received_words"] = out.ledger.max_received_words();
  j["max_layer"] = out.layering.max_finite();
  j["preprocessed_nodes"] = out.preprocessed;
  if (opts.task != Task::kHDecomp) j["max_path_length"] = out.max_path_length;
  nlohmann::ordered_json phases = nlohmann::ordered_json::array();
  for (const auto& p : out.ledger.phases()) phases.push_back({{"phase", p.phase}, {"rounds", p.rounds}});
  j["phases"] = phases;
  nlohmann::ordered_json viol = nlohmann::ordered_json::array();
  for (const auto& v : out.ledger.violations()) {
    viol.push_back({{"round", v.round}, {"machine", v.machine}, {"words", v.words}, {"what", v.what}});
  }
  j["violations"] = viol;
  j["verdicts"] = out.verdicts;
  return j;
}

inline bool report_passes(const RunOutput& out) { return out.ok && out.ledger.violations().empty(); }

/// The task's result file: layering, coloring, MIS nodes or matching edges.
inline void write_result(std::ostream& os, Task task, const RunOutput& out) {
  switch (task) {
    case Task::kHDecomp: write_layering(os, out.layering); break;
    case Task::kColor: write_coloring(os, out.colors); break;
    case Task::kMis: write_node_set(os, out.mis); break;
    case Task::kMatching: write_edge_set(os, out.matching); break;
  }
}

enum class ArtifactKind { kLayering, kColoring, kMis, kMatching };

inline std::optional<ArtifactKind> parse_artifact_kind(std::string_view s) {
  if (s == "layering" || s == "hdecomp") return ArtifactKind::kLayering;
  if (s == "coloring" || s == "color") return ArtifactKind::kColoring;
  if (s == "mis") return ArtifactKind::kMis;
  if (s == "matching") return ArtifactKind::kMatching;
  return std::nullopt;
}

/// Re-checks a result file against its forest. Layerings must be complete
/// strict H-decompositions; colorings proper with colors in {1,2,3}.
inline Verdict verify_artifact(const Forest& f, std::istream& artifact, ArtifactKind kind) {
  switch (kind) {
    case ArtifactKind::kLayering: {
      const Layering l = read_layering(artifact, f.node_count());
      if (l.infinite_count() > 0) {
        return Verdict::fail(l.infinite_nodes().front(), "layer is infinite");
      }
      return validate_strict_h(f, l);
    }
    case ArtifactKind::kColoring: {
      const auto c = read_coloring(artifact, f.node_count());
      return validate_coloring(f, c, 3);
    }
    case ArtifactKind::kMis: return validate_mis(f, read_node_set(artifact, f.node_count()));
    case ArtifactKind::kMatching: return validate_matching(f, read_edge_set(artifact, f.node_count()));
  }
  return Verdict::pass();
}

struct BenchRow {
  std::size_t n = 0;
  std::uint64_t seed = 0;
  std::size_t repetition = 0;
  std::size_t rounds = 0;
  std::size_t global_peak_words = 0;
  bool ok = true;
  double wall_ms = 0;
};

inline std::vector<BenchRow> bench(GeneratorKind kind, const std::vector<std::size_t>& sizes,
                                   const std::vector<std::uint64_t>& seeds, std::size_t repetitions,
                                   const RunOptions& opts) {
  std::vector<BenchRow> rows;
  for (std::size_t n : sizes) {
    for (std::uint64_t seed : seeds) {
      const Forest f = generate(kind, n, seed);
      for (std::size_t rep = 0; rep < repetitions; ++rep) {
        const auto t0 = std::chrono::steady_clock::now();
        const RunOutput out = run_task(f, opts);
        const auto t1 = std::chrono::steady_clock::now();
        rows.push_back({n, seed, rep, out.ledger.rounds(), out.ledger.global_peak_words(),
                        report_passes(out),
                        std::chrono::duration<double, std::milli>(t1 - t0).count()});
      }
    }
  }
  return rows;
}

inline void write_bench_csv(std::ostream& os, const std::vector<BenchRow>& rows) {
  os << "n,seed,repetition,rounds,global_peak_words,ok,wall_ms\n";
  for (const auto& r : rows) {
    os << r.n << ',' << r.seed << ',' << r.repetition << ',' << r.rounds << ','
       << r.global_peak_words << ',' << (r.ok ? 1 : 0) << ',' << r.wall_ms << '\n';
  }
}

}  // namespace treempc
