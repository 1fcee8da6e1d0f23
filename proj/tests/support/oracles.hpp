#pragma once

// Independent reference implementations used to cross-check the
// analysis results. These deliberately use different algorithms than
// the library: reachability under node removal instead of dataflow
// fixpoints, exhaustive path enumeration instead of symbolic pruning,
// and value perturbation instead of taint bookkeeping.

#include <deque>
#include <map>
#include <set>
#include <vector>

#include "evmguard/cfg.hpp"
#include "evmguard/concrete.hpp"
#include "evmguard/program.hpp"

namespace testsupport {

inline bool reaches_avoiding(const evmguard::CFG& cfg, evmguard::Node from,
                             evmguard::Node to, evmguard::Node removed,
                             bool remove_active) {
  if (remove_active && from == removed) return false;
  std::set<evmguard::Node> seen{from};
  std::deque<evmguard::Node> work{from};
  while (!work.empty()) {
    evmguard::Node n = work.front();
    work.pop_front();
    if (n == to) return true;
    for (evmguard::Node s : cfg.successors(n)) {
      if (remove_active && s == removed) continue;
      if (seen.insert(s).second) work.push_back(s);
    }
  }
  return false;
}

// n post-dominates m iff every path from m to the sink passes through
// n, i.e. deleting n cuts m off from the sink.
inline bool oracle_post_dominates(const evmguard::CFG& cfg,
                                  evmguard::Node sink, evmguard::Node n,
                                  evmguard::Node m) {
  if (n == m) return true;
  if (!reaches_avoiding(cfg, m, sink, 0, false)) return false;
  return !reaches_avoiding(cfg, m, sink, n, true);
}

// Control dependence: some arm of the branch must run n before the
// sink, while another arm can finish without it.
inline bool oracle_control_dependent(const evmguard::CFG& cfg,
                                     evmguard::Node sink, evmguard::Node n,
                                     evmguard::Node branch) {
  const auto& succs = cfg.successors(branch);
  if (succs.size() < 2) return false;
  bool forced = false, avoidable = false;
  for (evmguard::Node s : succs) {
    if (oracle_post_dominates(cfg, sink, n, s))
      forced = true;
    else
      avoidable = true;
  }
  return forced && avoidable;
}

// Counts entry-to-halt paths in the static graph, with each budgeted
// node allowed at most its budget of occurrences per path.
inline std::uint64_t oracle_count_paths(
    const evmguard::Program& program, const evmguard::CFG& cfg,
    const std::map<evmguard::Node, std::uint64_t>& budgets,
    std::uint64_t hard_cap = 1u << 20) {
  std::uint64_t count = 0;
  std::map<evmguard::Node, std::uint64_t> visits;

  auto is_halt = [&](evmguard::Node n) {
    const auto& op = program.at(n).op;
    return op.group() == evmguard::RuleGroup::Stop;
  };

  auto dfs = [&](auto&& self, evmguard::Node n) -> void {
    if (count >= hard_cap) return;
    auto b = budgets.find(n);
    if (b != budgets.end() && visits[n] + 1 > b->second) return;
    ++visits[n];
    if (is_halt(n)) {
      ++count;
    } else {
      for (evmguard::Node s : cfg.successors(n)) self(self, s);
    }
    --visits[n];
  };
  dfs(dfs, program.entry());
  return count;
}

// Does the value written at pc `writer` flow into any value observed at
// pc `reader`? Decided experimentally: nudge the written value and see
// whether the observations at the reader change.
inline bool oracle_value_flows(const evmguard::Program& program,
                               const evmguard::ExecutionEnv& env,
                               std::uint64_t writer, std::uint64_t reader,
                               std::uint64_t step_limit = 100000) {
  using namespace evmguard;
  auto observe = [&](bool perturb) {
    std::vector<Word> seen;
    RunHooks hooks;
    hooks.on_write = [&](std::uint64_t pc, Mnemonic, const Word&,
                         const Word& v) -> std::optional<Word> {
      if (perturb && pc == writer) return v + 1;
      return std::nullopt;
    };
    hooks.on_value = [&](std::uint64_t pc, Mnemonic, const Word& v) {
      if (pc == reader) seen.push_back(v);
    };
    run_concrete(program, env, step_limit, GasTable{}, &hooks);
    return seen;
  };
  return observe(false) != observe(true);
}

}  // namespace testsupport
