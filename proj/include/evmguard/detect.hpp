#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "evmguard/cfg.hpp"
#include "evmguard/deps.hpp"
#include "evmguard/program.hpp"

namespace evmguard {

enum class VulnKind {
  IntraReentrancy,
  CrossReentrancy,
  TxOrigin,
  Arithmetic,
};

inline std::string_view vuln_kind_name(VulnKind k) {
  switch (k) {
    case VulnKind::IntraReentrancy: return "intra-function-reentrancy";
    case VulnKind::CrossReentrancy: return "cross-function-reentrancy";
    case VulnKind::TxOrigin: return "tx-origin";
    case VulnKind::Arithmetic: return "arithmetic";
  }
  return "?";
}

struct Finding {
  VulnKind kind;
  std::uint64_t critical_pc = 0;  // the external-action opcode at risk
  std::uint64_t culprit_pc = 0;   // the opcode to patch around
  std::string critical_function;
  std::string culprit_function;
};

struct DetectionResult {
  std::vector<Finding> findings;
  std::set<std::string> guarded_functions;

  bool vulnerable() const { return !findings.empty(); }

  std::vector<Finding> of_kind(VulnKind k) const {
    std::vector<Finding> out;
    for (const auto& f : findings)
      if (f.kind == k) out.push_back(f);
    return out;
  }
};

namespace detail {

// Follow the unconditional continuation from `pc` and report the
// halting opcode it runs into, if the path is straight-line.
inline std::optional<Mnemonic> straight_line_halt(const Program& program,
                                                  std::uint64_t pc) {
  for (int hops = 0; hops < 64; ++hops) {
    if (!program.has_pc(pc)) return std::nullopt;
    const Opcode& op = program.at(pc).op;
    switch (op.group()) {
      case RuleGroup::Stop:
        return op.mnemonic;
      case RuleGroup::Jump: {
        auto t = static_jump_target(program, pc);
        if (!t) return std::nullopt;
        pc = *t;
        break;
      }
      case RuleGroup::Jumpi:
      case RuleGroup::Call:
        return std::nullopt;
      default:
        ++pc;
    }
  }
  return std::nullopt;
}

// Does either arm of the branch at `pc` fall straight into one of the
// given halting opcodes?
inline bool branch_guards_with(const Program& program, std::uint64_t pc,
                               std::initializer_list<Mnemonic> causes) {
  auto matches = [&](std::optional<Mnemonic> h) {
    return h && std::find(causes.begin(), causes.end(), *h) != causes.end();
  };
  if (matches(straight_line_halt(program, pc + 1))) return true;
  if (auto t = static_jump_target(program, pc))
    return matches(straight_line_halt(program, *t));
  return false;
}

}  // namespace detail

struct DetectOptions {
  // Recognise assert-style checks and mutex locks already present and
  // suppress the findings they protect against.
  bool recognise_guards = true;
};

class Detector {
 public:
  Detector(const DependencyAnalysis& deps,
           const DetectOptions& opts = DetectOptions{})
      : deps_(deps), program_(deps.program()), opts_(opts) {}

  DetectionResult run() {
    DetectionResult result;
    if (opts_.recognise_guards) result.guarded_functions = find_guarded();

    const auto& traces = deps_.traces().traces;
    std::set<std::tuple<VulnKind, std::uint64_t, std::uint64_t>> seen;
    auto emit = [&](VulnKind kind, std::uint64_t crit, std::uint64_t culp) {
      if (!seen.insert({kind, crit, culp}).second) return;
      result.findings.push_back(Finding{kind, crit, culp,
                                        program_.function_of(crit),
                                        program_.function_of(culp)});
    };

    for (std::size_t t = 0; t < traces.size(); ++t) {
      const auto& steps = traces[t].steps;
      for (std::size_t i = 0; i < steps.size(); ++i) {
        if (!is_critical(steps[i].op)) continue;
        OccRef crit{t, i};
        std::string crit_fn = program_.function_of(steps[i].pc);
        bool crit_guarded = result.guarded_functions.count(crit_fn) > 0;
        auto cl = deps_.closure(crit);
        bool intra_vulnerable = false;

        // Storage writes the external call depends on.
        for (OccRef d : cl) {
          const TraceStep& ds = traces[d.trace].steps[d.step];
          if (ds.op != Mnemonic::SSTORE) continue;
          std::string culp_fn = program_.function_of(ds.pc);
          if (d.trace == t && d.step > i && culp_fn == crit_fn) {
            intra_vulnerable = true;
            if (!crit_guarded)
              emit(VulnKind::IntraReentrancy, steps[i].pc, ds.pc);
          }
        }
        if (intra_vulnerable) {
          for (OccRef d : cl) {
            const TraceStep& ds = traces[d.trace].steps[d.step];
            if (ds.op != Mnemonic::SSTORE) continue;
            std::string culp_fn = program_.function_of(ds.pc);
            if (culp_fn == crit_fn) continue;
            if (crit_guarded && result.guarded_functions.count(culp_fn))
              continue;
            emit(VulnKind::CrossReentrancy, steps[i].pc, ds.pc);
          }
        }

        // Authentication decisions rooted in the transaction origin.
        for (OccRef d : cl) {
          const TraceStep& ds = traces[d.trace].steps[d.step];
          if (ds.op == Mnemonic::ORIGIN && d.trace == t)
            emit(VulnKind::TxOrigin, steps[i].pc, ds.pc);
        }

        // Unchecked arithmetic feeding the call.
        for (OccRef d : cl) {
          if (d.trace != t) continue;
          const TraceStep& ds = traces[d.trace].steps[d.step];
          if (!is_arithmetic_target(ds.op)) continue;
          bool all_concrete = true;
          for (const auto& o : ds.operands)
            all_concrete = all_concrete && o->concrete;
          if (all_concrete) continue;
          if (opts_.recognise_guards && assert_checked(d)) continue;
          emit(VulnKind::Arithmetic, steps[i].pc, ds.pc);
        }
      }
    }
    return result;
  }

 private:
  // Is the arithmetic op covered by an assert-style check (a branch
  // that traps with INVALID on the failing side)? Overflow checks sit
  // after the operation, underflow checks before it, so any trap guard
  // sharing data with the operation counts.
  bool assert_checked(OccRef a) const {
    const auto& steps = deps_.traces().traces[a.trace].steps;
    std::set<std::size_t> interest = deps_.tainters(a);
    interest.insert(a.step);
    for (std::size_t g = 0; g < steps.size(); ++g) {
      if (rule_group(steps[g].op) != RuleGroup::Jumpi) continue;
      if (!detail::branch_guards_with(program_, steps[g].pc,
                                      {Mnemonic::INVALID}))
        continue;
      const auto& gt = deps_.tainters({a.trace, g});
      for (std::size_t x : interest) {
        if (gt.count(x)) return true;
      }
    }
    return false;
  }

  // Functions protected by a mutex: a storage flag is loaded, checked
  // by a revert guard, set non-zero, and cleared again on the way out.
  std::set<std::string> find_guarded() const {
    std::set<std::string> guarded;
    const auto& traces = deps_.traces().traces;
    for (std::size_t t = 0; t < traces.size(); ++t) {
      const auto& steps = traces[t].steps;
      for (std::size_t l = 0; l < steps.size(); ++l) {
        if (steps[l].op != Mnemonic::SLOAD) continue;
        auto lock = resolve_address(steps[l].operands[0], 1);
        if (!lock.resolvable()) continue;

        bool checked = false;
        for (std::size_t g = l + 1; g < steps.size() && !checked; ++g) {
          if (rule_group(steps[g].op) != RuleGroup::Jumpi) continue;
          if (!detail::branch_guards_with(
                  program_, steps[g].pc,
                  {Mnemonic::REVERT, Mnemonic::INVALID}))
            continue;
          checked = deps_.tainters({t, g}).count(l) > 0;
        }
        if (!checked) continue;

        bool set_nonzero = false, cleared = false;
        for (std::size_t s = l + 1; s < steps.size(); ++s) {
          if (steps[s].op != Mnemonic::SSTORE) continue;
          auto slot = resolve_address(steps[s].operands[0], 1);
          if (!ranges_intersect(lock, slot, false)) continue;
          const SymPtr& v = steps[s].operands[1];
          if (v->concrete && v->value != 0 && !cleared) set_nonzero = true;
          if (v->concrete && v->value == 0 && set_nonzero) cleared = true;
        }
        if (set_nonzero && cleared)
          guarded.insert(program_.function_of(steps[l].pc));
      }
    }
    return guarded;
  }

  const DependencyAnalysis& deps_;
  const Program& program_;
  DetectOptions opts_;
};

inline DetectionResult detect(const DependencyAnalysis& deps,
                              const DetectOptions& opts = DetectOptions{}) {
  return Detector(deps, opts).run();
}

}  // namespace evmguard
