// treempc: generate forests, run the decomposition pipeline, verify results,
// and sweep sizes for round counts.

#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "treempc/pipeline.hpp"

namespace {

using namespace treempc;

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIoError, "cannot read " + path);
  return in;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write " + path);
  return out;
}

GeneratorKind kind_or_throw(const std::string& s) {
  const auto k = parse_generator_kind(s);
  if (!k) throw Error(ErrorCode::kParseError, "unknown forest kind `" + s + "`");
  return *k;
}

struct RunFlags {
  std::string input;
  std::string task = "hdecomp";
  std::string mode = "direct";
  double delta = 0.5;
  std::size_t k = 0;
  bool optimal_space = false;
  bool trace = false;
  std::string config;
  std::string report;
  std::string out;
};

RunOptions options_from(const RunFlags& flags, const CLI::App& cmd) {
  RunOptions opts;
  if (!flags.config.empty()) {
    auto in = open_in(flags.config);
    apply_settings(read_key_values(in), opts);
  }
  const auto task = parse_task(flags.task);
  if (!task) throw Error(ErrorCode::kParseError, "unknown task `" + flags.task + "`");
  opts.task = *task;
  if (cmd.count("--mode") > 0) {
    const auto mode = parse_mode(flags.mode);
    if (!mode) throw Error(ErrorCode::kParseError, "unknown mode `" + flags.mode + "`");
    opts.mode = *mode;
  }
  if (cmd.count("--delta") > 0) opts.delta = flags.delta;
  if (cmd.count("--k") > 0) opts.overrides.k_param = flags.k;
  if (flags.optimal_space) opts.optimal_space = true;
  return opts;
}

int cmd_run(const RunFlags& flags, const CLI::App& cmd) {
  const RunOptions opts = options_from(flags, cmd);
  auto in = open_in(flags.input);
  const EdgeListInput input = parse_edge_list(in);
  const RunOutput out = run_task(input.forest, opts);
  if (flags.trace) {
    for (const auto& p : out.ledger.phases()) std::cerr << p.phase << ' ' << p.rounds << '\n';
  }
  if (!flags.out.empty()) {
    auto os = open_out(flags.out);
    write_result(os, opts.task, out);
    if (input.remapped) {
      auto ids = open_out(flags.out + ".ids");
      write_id_table(ids, input.original_ids);
    }
  }
  const std::string report = make_report(input.forest, opts, out).dump(2) + "\n";
  if (flags.report.empty()) {
    std::cout << report;
  } else {
    auto os = open_out(flags.report);
    os << report;
  }
  return report_passes(out) ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Forest decomposition on a simulated low-space MPC runtime"};
  app.require_subcommand(1);

  auto* gen = app.add_subcommand("generate", "write a generated forest as an edge list");
  std::string kind = "random_tree";
  std::size_t n = 0;
  std::uint64_t seed = 1;
  std::string gen_out;
  gen->add_option("--kind", kind, "path|star|caterpillar|balanced_binary|random_tree|random_forest");
  gen->add_option("--n", n, "node count")->required();
  gen->add_option("--seed", seed, "generator seed");
  gen->add_option("--out", gen_out, "output file (stdout if omitted)");

  auto* run = app.add_subcommand("run", "run a task on an edge-list forest");
  RunFlags flags;
  run->add_option("input", flags.input, "edge-list file")->required();
  run->add_option("--task", flags.task, "hdecomp|color|mis|matching");
  run->add_option("--mode", flags.mode, "direct|mpc");
  run->add_option("--delta", flags.delta, "local space exponent in (0,1)");
  run->add_option("--k", flags.k, "exploration radius");
  run->add_flag("--optimal-space", flags.optimal_space, "peel pivots and leaves before the main driver");
  run->add_flag("--trace", flags.trace, "print per-phase round charges to stderr");
  run->add_option("--config", flags.config, "key=value settings file");
  run->add_option("--report", flags.report, "report JSON path (stdout if omitted)");
  run->add_option("--out", flags.out, "result file");

  auto* ver = app.add_subcommand("verify", "check a result file against its forest");
  std::string ver_forest;
  std::string ver_artifact;
  std::string ver_kind = "layering";
  ver->add_option("forest", ver_forest, "edge-list file")->required();
  ver->add_option("artifact", ver_artifact, "result file")->required();
  ver->add_option("--kind", ver_kind, "layering|coloring|mis|matching");

  auto* bn = app.add_subcommand("bench", "sweep sizes and report rounds as CSV");
  std::string bench_task = "hdecomp";
  std::string bench_kind = "random_tree";
  std::string bench_mode = "mpc";
  std::vector<std::size_t> sizes;
  std::vector<std::uint64_t> seeds{1};
  std::size_t repetitions = 1;
  double bench_delta = 0.5;
  bool bench_optimal = false;
  std::string bench_out;
  bn->add_option("--task", bench_task, "hdecomp|color|mis|matching");
  bn->add_option("--kind", bench_kind, "forest kind");
  bn->add_option("--mode", bench_mode, "direct|mpc");
  bn->add_option("--sizes", sizes, "node counts")->required()->delimiter(',');
  bn->add_option("--seeds", seeds, "generator seeds")->delimiter(',');
  bn->add_option("--repetitions", repetitions, "runs per (size, seed)");
  bn->add_option("--delta", bench_delta, "local space exponent");
  bn->add_flag("--optimal-space", bench_optimal, "peel pivots and leaves first");
  bn->add_option("--out", bench_out, "CSV path (stdout if omitted)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) {
      const Forest f = generate(kind_or_throw(kind), n, seed);
      if (gen_out.empty()) {
        write_edge_list(std::cout, f);
      } else {
        auto os = open_out(gen_out);
        write_edge_list(os, f);
      }
      return 0;
    }
    if (*run) return cmd_run(flags, *run);
    if (*ver) {
      auto fin = open_in(ver_forest);
      const EdgeListInput input = parse_edge_list(fin);
      const auto k = parse_artifact_kind(ver_kind);
      if (!k) throw Error(ErrorCode::kParseError, "unknown artifact kind `" + ver_kind + "`");
      auto ain = open_in(ver_artifact);
      const Verdict v = verify_artifact(input.forest, ain, *k);
      if (v) {
        std::cout << "PASS\n";
        return 0;
      }
      std::cout << "FAIL node " << *v.node << ": " << v.reason << '\n';
      return 1;
    }
    if (*bn) {
      RunOptions opts;
      const auto task = parse_task(bench_task);
      const auto mode = parse_mode(bench_mode);
      if (!task || !mode) throw Error(ErrorCode::kParseError, "unknown task or mode");
      opts.task = *task;
      opts.mode = *mode;
      opts.delta = bench_delta;
      opts.optimal_space = bench_optimal;
      const auto rows = bench(kind_or_throw(bench_kind), sizes, seeds, repetitions, opts);
      if (bench_out.empty()) {
        write_bench_csv(std::cout, rows);
      } else {
        auto os = open_out(bench_out);
        write_bench_csv(os, rows);
      }
      for (const auto& r : rows) {
        if (!r.ok) return 1;
      }
      return 0;
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
