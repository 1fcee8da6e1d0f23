#pragma once

#include <memory>
#include <set>
#include <string>

#include <nlohmann/json.hpp>

#include "evmguard/bundle.hpp"
#include "evmguard/deps.hpp"
#include "evmguard/detect.hpp"
#include "evmguard/patch.hpp"
#include "evmguard/traces.hpp"

namespace evmguard {

struct AnalysisOptions {
  std::uint64_t loop_cap = 50;
  double timeout_seconds = 300;
  bool recognise_guards = true;
  bool conservative_unresolvable = true;
  std::uint64_t max_traces = 4096;
};

// Everything the later stages need, kept alive together because the
// dependency analysis holds references into the trace set and program.
struct Analysis {
  ContractBundle bundle;
  Program program;
  TraceSet traces;
  std::unique_ptr<DependencyAnalysis> deps;
  DetectionResult detection;
};

inline Analysis analyze_bundle(ContractBundle bundle,
                               const AnalysisOptions& opts =
                                   AnalysisOptions{}) {
  Analysis a;
  a.bundle = std::move(bundle);
  a.program = a.bundle.to_program();

  TraceOptions topts;
  topts.loop_cap = opts.loop_cap;
  topts.timeout_seconds = opts.timeout_seconds;
  topts.max_traces = opts.max_traces;
  a.traces = enumerate_traces(a.program, &a.bundle, topts);

  DependencyOptions dopts;
  dopts.conservative_unresolvable = opts.conservative_unresolvable;
  a.deps = std::make_unique<DependencyAnalysis>(a.traces, a.program, dopts);

  DetectOptions det;
  det.recognise_guards = opts.recognise_guards;
  a.detection = detect(*a.deps, det);
  return a;
}

// Arithmetic patch sites: the targeted set covers only culprits the
// detector tied to an external call, the blanket set every arithmetic
// instruction in the program.
struct PatchSiteCounts {
  std::size_t targeted = 0;
  std::size_t blanket = 0;
};

inline PatchSiteCounts patch_site_counts(const Analysis& a) {
  PatchSiteCounts c;
  std::set<std::uint64_t> targeted;
  for (const Finding& f : a.detection.findings) {
    if (f.kind == VulnKind::Arithmetic) targeted.insert(f.culprit_pc);
  }
  c.targeted = targeted.size();
  for (const Instr& ins : a.program.code) {
    if (is_arithmetic_target(ins.op.mnemonic)) ++c.blanket;
  }
  return c;
}

inline nlohmann::json report_json(const Analysis& a) {
  nlohmann::json findings = nlohmann::json::array();
  for (const Finding& f : a.detection.findings) {
    findings.push_back({{"kind", std::string(vuln_kind_name(f.kind))},
                        {"critical_pc", f.critical_pc},
                        {"culprit_pc", f.culprit_pc},
                        {"critical_function", f.critical_function},
                        {"culprit_function", f.culprit_function}});
  }

  nlohmann::json bounds = nlohmann::json::object();
  for (const auto& [head, b] : a.traces.bounds.head_bounds)
    bounds[std::to_string(head)] = b;

  const TransformStats& st = a.deps->stats();
  auto counter = [](const TransformStats::Counter& c) {
    return nlohmann::json{{"resolved", c.resolved},
                          {"unresolved", c.unresolved}};
  };

  PatchSiteCounts sites = patch_site_counts(a);
  return nlohmann::json{
      {"name", a.bundle.name},
      {"vulnerable", a.detection.vulnerable()},
      {"findings", findings},
      {"trace_count", a.traces.traces.size()},
      {"truncated", a.traces.truncated},
      {"loop_bounds", bounds},
      {"guarded_functions",
       std::vector<std::string>(a.detection.guarded_functions.begin(),
                                a.detection.guarded_functions.end())},
      {"address_resolution",
       {{"sload", counter(st.sload)},
        {"sstore", counter(st.sstore)},
        {"mload", counter(st.mload)},
        {"mstore", counter(st.mstore)}}},
      {"patch_sites",
       {{"targeted", sites.targeted}, {"blanket", sites.blanket}}},
  };
}

struct FixResult {
  PatchPlan plan;
  std::string patched_source;
};

inline FixResult fix_bundle(const Analysis& a) {
  FixResult r;
  r.plan = build_patch_plan(a.bundle, a.program, a.detection);
  r.patched_source = apply_patch(a.bundle.source, r.plan);
  sanity_check(r.patched_source, r.plan);
  return r;
}

}  // namespace evmguard
