#pragma once

#include <chrono>
#include <cstdint>
#include <map>
#include <vector>

#include "evmguard/bounds.hpp"
#include "evmguard/bundle.hpp"
#include "evmguard/errors.hpp"
#include "evmguard/program.hpp"
#include "evmguard/symbolic.hpp"

namespace evmguard {

struct Trace {
  std::vector<TraceStep> steps;
  Mnemonic halt = Mnemonic::STOP;
};

struct TraceOptions {
  std::uint64_t loop_cap = 50;
  std::uint64_t max_traces = 4096;
  std::uint64_t max_steps_per_trace = 5000;
  double timeout_seconds = 0;  // 0 disables the deadline
};

struct TraceSet {
  std::vector<Trace> traces;
  LoopBounds bounds;
  // True when the loop cap cut a loop below its estimated bound.
  bool truncated = false;
};

// Depth-first enumeration of all feasible symbolic paths. Loop heads
// may occur in a single trace at most min(estimated bound, cap) times;
// paths that would exceed a budget are pruned at the offending edge.
inline TraceSet enumerate_traces(const Program& program,
                                 const ContractBundle* bundle = nullptr,
                                 const TraceOptions& opts = TraceOptions{}) {
  TraceSet result;
  result.bounds = compute_loop_bounds(program, bundle);

  std::map<Node, std::uint64_t> budget;
  for (const auto& [head, b] : result.bounds.head_bounds)
    budget[head] = std::min<std::uint64_t>(b, opts.loop_cap);

  auto deadline = std::chrono::steady_clock::now() +
                  std::chrono::duration<double>(
                      opts.timeout_seconds > 0 ? opts.timeout_seconds : 1e9);

  std::vector<TraceStep> current;
  std::map<Node, std::uint64_t> visits;

  auto dfs = [&](auto&& self, const SymbolicState& state) -> void {
    if (opts.timeout_seconds > 0 &&
        std::chrono::steady_clock::now() > deadline)
      throw TimeoutError(opts.timeout_seconds);
    if (result.traces.size() >= opts.max_traces) return;
    if (current.size() >= opts.max_steps_per_trace)
      throw StepLimitExceeded(opts.max_steps_per_trace);
    if (!program.has_pc(state.pc))
      throw InvalidJumpTarget(state.pc, state.pc);

    SymStepOutcome out = step_symbolic(state, program.at(state.pc).op);
    current.push_back(out.step);
    if (out.halt) {
      result.traces.push_back(Trace{current, *out.halt});
    } else {
      for (auto& [pc, succ] : out.successors) {
        auto it = budget.find(pc);
        if (it != budget.end()) {
          if (visits[pc] + 1 > it->second) {
            if (it->second < result.bounds.head_bounds.at(pc))
              result.truncated = true;
            continue;
          }
          ++visits[pc];
          self(self, succ);
          --visits[pc];
        } else {
          self(self, succ);
        }
      }
    }
    current.pop_back();
  };

  SymbolicState init;
  init.pc = program.entry();
  auto it = budget.find(init.pc);
  if (it != budget.end()) ++visits[init.pc];
  dfs(dfs, init);

  if (result.traces.empty()) throw EmptyTraceSet();
  return result;
}

}  // namespace evmguard
