// Command-line front end: analyze a contract bundle, emit a patched
// source, or replay recorded transactions against a fixed bundle.
//
// Exit codes: 0 clean, 2 vulnerabilities found, 1 error or timeout.

#include <atomic>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "evmguard/evmguard.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitClean = 0;
constexpr int kExitError = 1;
constexpr int kExitVulnerable = 2;

void write_output(const std::string& path, const std::string& content) {
  if (path.empty() || path == "-") {
    std::cout << content;
    if (!content.empty() && content.back() != '\n') std::cout << '\n';
    return;
  }
  std::ofstream out(path);
  if (!out) throw evmguard::AnalysisError("cannot write " + path);
  out << content;
}

struct AnalyzeArgs {
  std::string bundle_path;
  std::string batch_dir;
  unsigned jobs = 1;
  double timeout = 300;
  std::uint64_t loop_cap = 50;
  std::string dump_traces, dump_cfg, dump_deps, out;
};

std::string dump_traces_text(const evmguard::Analysis& a) {
  std::ostringstream oss;
  for (std::size_t t = 0; t < a.traces.traces.size(); ++t) {
    const auto& tr = a.traces.traces[t];
    oss << "trace " << t << " (halt "
        << evmguard::mnemonic_name(tr.halt) << "):\n";
    for (const auto& s : tr.steps) {
      oss << "  " << s.pc << " " << evmguard::mnemonic_name(s.op);
      if (s.result) oss << " -> " << evmguard::sym_to_string(s.result);
      oss << '\n';
    }
  }
  return oss.str();
}

int analyze_one(const std::string& path, const AnalyzeArgs& args,
                std::ostream& out_stream) {
  evmguard::AnalysisOptions opts;
  opts.timeout_seconds = args.timeout;
  opts.loop_cap = args.loop_cap;
  evmguard::Analysis a =
      evmguard::analyze_bundle(evmguard::load_bundle(path), opts);

  if (!args.dump_traces.empty())
    write_output(args.dump_traces, dump_traces_text(a));
  if (!args.dump_cfg.empty()) {
    evmguard::CFG cfg = evmguard::build_static_cfg(a.program);
    write_output(args.dump_cfg,
                 evmguard::cfg_to_dot(cfg, &a.program, "static_cfg"));
  }
  if (!args.dump_deps.empty()) write_output(args.dump_deps, a.deps->to_dot());

  json report = evmguard::report_json(a);
  if (args.out.empty() || args.out == "-")
    out_stream << report.dump(2) << '\n';
  else
    write_output(args.out, report.dump(2) + "\n");
  return a.detection.vulnerable() ? kExitVulnerable : kExitClean;
}

int run_batch(const AnalyzeArgs& args) {
  std::vector<std::string> files;
  for (const auto& entry : fs::directory_iterator(args.batch_dir)) {
    if (!entry.is_regular_file()) continue;
    std::string p = entry.path().string();
    if (entry.path().extension() != ".json") continue;
    if (p.size() > 11 && p.ends_with(".fixed.json")) continue;
    files.push_back(p);
  }
  std::sort(files.begin(), files.end());

  std::mutex io;
  std::atomic<std::size_t> next{0};
  std::atomic<bool> any_vulnerable{false}, any_error{false};

  auto worker = [&]() {
    while (true) {
      std::size_t i = next.fetch_add(1);
      if (i >= files.size()) return;
      std::ostringstream local;
      int code;
      try {
        code = analyze_one(files[i], args, local);
      } catch (const std::exception& e) {
        code = kExitError;
        local << "error: " << e.what() << '\n';
      }
      if (code == kExitVulnerable) any_vulnerable = true;
      if (code == kExitError) any_error = true;
      std::lock_guard<std::mutex> lock(io);
      std::cout << "== " << files[i] << " ("
                << (code == kExitClean
                        ? "clean"
                        : code == kExitVulnerable ? "vulnerable" : "error")
                << ")\n"
                << local.str();
    }
  };

  unsigned jobs = std::max(1u, args.jobs);
  std::vector<std::thread> pool;
  for (unsigned i = 0; i < jobs; ++i) pool.emplace_back(worker);
  for (auto& t : pool) t.join();

  if (any_error) return kExitError;
  return any_vulnerable ? kExitVulnerable : kExitClean;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bytecode-level vulnerability analysis and repair for"
               " EVM-style contracts"};
  app.require_subcommand(1);

  AnalyzeArgs aargs;
  auto* analyze = app.add_subcommand("analyze", "Detect vulnerabilities");
  analyze->add_option("bundle", aargs.bundle_path, "Contract bundle JSON");
  analyze->add_option("--batch", aargs.batch_dir,
                      "Analyze every bundle in a directory");
  analyze->add_option("--jobs", aargs.jobs, "Parallel batch workers");
  analyze->add_option("--timeout", aargs.timeout,
                      "Analysis time budget in seconds");
  analyze->add_option("--loop-cap", aargs.loop_cap,
                      "Upper cap on per-loop exploration budgets");
  analyze->add_option("--dump-traces", aargs.dump_traces,
                      "Write the symbolic traces to a file ('-' = stdout)");
  analyze->add_option("--dump-cfg", aargs.dump_cfg,
                      "Write the control-flow graph as DOT");
  analyze->add_option("--dump-deps", aargs.dump_deps,
                      "Write the dependency graph as DOT");
  analyze->add_option("--out", aargs.out, "Write the JSON report to a file");

  std::string fix_bundle_path, emit_plan, fix_out;
  double fix_timeout = 300;
  std::uint64_t fix_loop_cap = 50;
  auto* fix = app.add_subcommand("fix", "Emit a patched source");
  fix->add_option("bundle", fix_bundle_path, "Contract bundle JSON")
      ->required();
  fix->add_option("--emit-plan", emit_plan,
                  "Write the patch plan as JSON ('-' = stdout)");
  fix->add_option("--out", fix_out, "Write the patched source to a file");
  fix->add_option("--timeout", fix_timeout,
                  "Analysis time budget in seconds");
  fix->add_option("--loop-cap", fix_loop_cap,
                  "Upper cap on per-loop exploration budgets");

  std::string replay_bundle_path, replay_fixed;
  auto* replay = app.add_subcommand(
      "replay", "Replay recorded transactions against a fixed bundle");
  replay->add_option("bundle", replay_bundle_path, "Original bundle JSON")
      ->required();
  replay->add_option("--fixed", replay_fixed,
                     "Fixed bundle (default: <bundle>.fixed.json)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (analyze->parsed()) {
      if (!aargs.batch_dir.empty()) return run_batch(aargs);
      if (aargs.bundle_path.empty()) {
        std::cerr << "error: either a bundle or --batch is required\n";
        return kExitError;
      }
      return analyze_one(aargs.bundle_path, aargs, std::cout);
    }
    if (fix->parsed()) {
      evmguard::AnalysisOptions opts;
      opts.timeout_seconds = fix_timeout;
      opts.loop_cap = fix_loop_cap;
      evmguard::Analysis a = evmguard::analyze_bundle(
          evmguard::load_bundle(fix_bundle_path), opts);
      evmguard::FixResult r = evmguard::fix_bundle(a);
      if (!emit_plan.empty()) write_output(emit_plan, r.plan.to_json().dump(2));
      write_output(fix_out, r.patched_source);
      return a.detection.vulnerable() ? kExitVulnerable : kExitClean;
    }
    if (replay->parsed()) {
      std::string fixed_path = replay_fixed;
      if (fixed_path.empty()) {
        fixed_path = replay_bundle_path;
        auto pos = fixed_path.rfind(".json");
        if (pos == std::string::npos)
          throw evmguard::AnalysisError("cannot derive fixed bundle path");
        fixed_path.replace(pos, 5, ".fixed.json");
      }
      evmguard::ReplayOutcome outcome = evmguard::replay_bundles(
          evmguard::load_bundle(replay_bundle_path),
          evmguard::load_bundle(fixed_path));
      json txs = json::array();
      for (const auto& t : outcome.transactions) {
        txs.push_back(
            {{"triggered", t.triggered},
             {"gas_original", t.gas_original},
             {"gas_fixed", t.gas_fixed},
             {"halt_original",
              t.halt_original
                  ? std::string(evmguard::mnemonic_name(*t.halt_original))
                  : ""},
             {"halt_fixed",
              t.halt_fixed
                  ? std::string(evmguard::mnemonic_name(*t.halt_fixed))
                  : ""}});
      }
      json out{{"transactions", txs},
               {"triggered", outcome.triggered_count},
               {"gas_original", outcome.total_gas_original},
               {"gas_fixed", outcome.total_gas_fixed},
               {"overhead_ratio", outcome.overhead_ratio()}};
      std::cout << out.dump(2) << '\n';
      return kExitClean;
    }
  } catch (const evmguard::TimeoutError& e) {
    std::cerr << "timeout: " << e.what() << '\n';
    return kExitError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitError;
  }
  return kExitError;
}
