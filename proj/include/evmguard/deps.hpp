#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "evmguard/cfg.hpp"
#include "evmguard/symbolic.hpp"
#include "evmguard/traces.hpp"

namespace evmguard {

// ---------------------------------------------------------------------------
// Address resolution

// The symbolic address of a load or store, normalised to a base plus a
// concrete byte offset. Bases are either absolute constants or hash
// expressions (mapping/array slots); hash bases compare structurally.
struct AddressRange {
  enum class Base { Constant, Hash, Unresolvable };
  Base base = Base::Unresolvable;
  SymPtr hash_node;  // when base == Hash
  Word lo = 0, hi = 0;  // inclusive byte interval relative to the base

  bool resolvable() const { return base != Base::Unresolvable; }
};

// Peels ADD-with-constant layers off a symbolic address. Width is the
// byte length of the access.
inline AddressRange resolve_address(const SymPtr& addr, const Word& width) {
  AddressRange r;
  if (width == 0) return r;
  SymPtr cur = addr;
  Word offset = 0;
  while (true) {
    if (cur->concrete) {
      r.base = AddressRange::Base::Constant;
      r.lo = cur->value + offset;
      r.hi = r.lo + width - 1;
      return r;
    }
    if (cur->op == Mnemonic::SHA3) {
      r.base = AddressRange::Base::Hash;
      r.hash_node = cur;
      r.lo = offset;
      r.hi = offset + width - 1;
      return r;
    }
    if (cur->op == Mnemonic::ADD && cur->operands.size() == 2) {
      if (cur->operands[0]->concrete) {
        offset += cur->operands[0]->value;
        cur = cur->operands[1];
        continue;
      }
      if (cur->operands[1]->concrete) {
        offset += cur->operands[1]->value;
        cur = cur->operands[0];
        continue;
      }
    }
    return r;  // unresolvable
  }
}

// Do two accesses possibly touch a common byte? Unresolvable addresses
// are treated as overlapping everything unless told otherwise; distinct
// resolved bases are assumed disjoint, since hash bases of different
// expressions land in unrelated regions.
inline bool ranges_intersect(const AddressRange& a, const AddressRange& b,
                             bool conservative_unresolvable = true) {
  if (!a.resolvable() || !b.resolvable()) return conservative_unresolvable;
  if (a.base != b.base) return false;
  if (a.base == AddressRange::Base::Hash &&
      !sym_equal(a.hash_node, b.hash_node))
    return false;
  return a.lo <= b.hi && b.lo <= a.hi;
}

// Per-opcode-class accounting of how many access addresses resolved.
struct TransformStats {
  struct Counter {
    std::uint64_t resolved = 0;
    std::uint64_t unresolved = 0;
  };
  Counter sload, sstore, mload, mstore;

  Counter& for_group(RuleGroup g) {
    switch (g) {
      case RuleGroup::Sload: return sload;
      case RuleGroup::Sstore: return sstore;
      case RuleGroup::Mload: return mload;
      default: return mstore;
    }
  }
};

// ---------------------------------------------------------------------------
// Dependency analysis over a trace set

// An opcode occurrence: trace index plus step index within that trace.
struct OccRef {
  std::size_t trace = 0;
  std::size_t step = 0;
  auto operator<=>(const OccRef&) const = default;
};

struct DependencyOptions {
  // Whether unresolved addresses overlap everything.
  bool conservative_unresolvable = true;
};

class DependencyAnalysis {
 public:
  DependencyAnalysis(const TraceSet& traces, const Program& program,
                     const DependencyOptions& opts = DependencyOptions{})
      : traces_(traces), program_(program), opts_(opts) {
    for (std::size_t t = 0; t < traces.traces.size(); ++t) replay_taint(t);
    collect_accesses();
    add_memory_edges();
    add_storage_edges();
    add_control_edges();
  }

  const TraceSet& traces() const { return traces_; }
  const Program& program() const { return program_; }
  const TransformStats& stats() const { return stats_; }

  const std::set<std::size_t>& tainters(OccRef o) const {
    return tainters_[o.trace][o.step];
  }

  // Direct dependency edges of an occurrence: its stack tainters, the
  // writers feeding its reads through memory and storage, and the
  // branches it is control dependent on.
  std::set<OccRef> direct_deps(OccRef o) const {
    std::set<OccRef> out;
    for (std::size_t j : tainters_[o.trace][o.step])
      out.insert({o.trace, j});
    auto it = channel_edges_.find(o);
    if (it != channel_edges_.end())
      out.insert(it->second.begin(), it->second.end());
    auto ct = control_edges_.find(o);
    if (ct != control_edges_.end())
      out.insert(ct->second.begin(), ct->second.end());
    return out;
  }

  // Transitive closure of direct_deps. The result contains every
  // occurrence the given one depends on, directly or indirectly.
  std::set<OccRef> closure(OccRef o) const {
    std::set<OccRef> seen;
    std::deque<OccRef> work{o};
    while (!work.empty()) {
      OccRef cur = work.front();
      work.pop_front();
      for (OccRef d : direct_deps(cur)) {
        if (seen.insert(d).second) work.push_back(d);
      }
    }
    return seen;
  }

  // Assignment-level data dependencies: the stack, memory, and storage
  // writers whose assignments flow into the occurrence, found by
  // walking tainters recursively and keeping only SWAP/MSTORE/SSTORE
  // occurrences.
  std::set<OccRef> data_deps(OccRef o) const {
    std::set<OccRef> out, visited;
    data_deps_rec(o, out, visited);
    return out;
  }

  const std::map<OccRef, std::set<OccRef>>& control_edges() const {
    return control_edges_;
  }

  std::string to_dot() const {
    std::ostringstream oss;
    oss << "digraph deps {\n";
    auto id = [](OccRef o) {
      std::ostringstream s;
      s << "t" << o.trace << "_" << o.step;
      return s.str();
    };
    for (std::size_t t = 0; t < traces_.traces.size(); ++t) {
      const auto& steps = traces_.traces[t].steps;
      for (std::size_t i = 0; i < steps.size(); ++i) {
        oss << "  " << id({t, i}) << " [label=\"" << t << ":" << i << " "
            << mnemonic_name(steps[i].op) << "@" << steps[i].pc << "\"];\n";
        for (OccRef d : direct_deps({t, i}))
          oss << "  " << id({t, i}) << " -> " << id(d) << ";\n";
      }
    }
    oss << "}\n";
    return oss.str();
  }

 private:
  struct Access {
    OccRef occ;
    AddressRange range;
  };

  void replay_taint(std::size_t t) {
    const auto& steps = traces_.traces[t].steps;
    std::vector<std::set<std::size_t>> stack;  // taint per slot, top at back
    tainters_.emplace_back(steps.size());

    for (std::size_t i = 0; i < steps.size(); ++i) {
      const TraceStep& s = steps[i];
      RuleGroup g = rule_group(s.op);
      auto& taint = tainters_[t][i];

      if (g == RuleGroup::Dup) {
        std::size_t src = stack.size() - shuffle_index(s.op);
        taint = stack[src];
        auto pushed = stack[src];
        pushed.insert(i);
        stack.push_back(std::move(pushed));
        continue;
      }
      if (g == RuleGroup::Swap) {
        std::size_t top = stack.size() - 1;
        std::size_t other = top - shuffle_index(s.op);
        taint = stack[top];
        taint.insert(stack[other].begin(), stack[other].end());
        std::swap(stack[top], stack[other]);
        stack[top].insert(i);
        stack[other].insert(i);
        continue;
      }

      int pops = rule_pops(g);
      for (int k = 0; k < pops; ++k) {
        taint.insert(stack.back().begin(), stack.back().end());
        stack.pop_back();
      }
      if (rule_pushes(g) == 1) {
        auto pushed = taint;
        pushed.insert(i);
        stack.push_back(std::move(pushed));
      }
    }
  }

  void collect_accesses() {
    for (std::size_t t = 0; t < traces_.traces.size(); ++t) {
      const auto& steps = traces_.traces[t].steps;
      for (std::size_t i = 0; i < steps.size(); ++i) {
        const TraceStep& s = steps[i];
        OccRef o{t, i};
        switch (rule_group(s.op)) {
          case RuleGroup::Mstore: {
            Word width = s.op == Mnemonic::MSTORE8 ? 1 : 32;
            auto r = resolve_address(s.operands[0], width);
            note_stats(RuleGroup::Mstore, r);
            mem_writes_[t].push_back({o, r});
            break;
          }
          case RuleGroup::Mload: {
            auto r = resolve_address(s.operands[0], 32);
            note_stats(RuleGroup::Mload, r);
            mem_reads_[t].push_back({o, r});
            break;
          }
          case RuleGroup::Sha3: {
            // Reads [p, p+n); a non-constant length defeats resolution.
            AddressRange r;
            if (s.operands[1]->concrete)
              r = resolve_address(s.operands[0], s.operands[1]->value);
            note_stats(RuleGroup::Mload, r);
            mem_reads_[t].push_back({o, r});
            break;
          }
          case RuleGroup::Sstore: {
            // Storage is slot-granular, not byte-granular.
            auto r = resolve_address(s.operands[0], 1);
            note_stats(RuleGroup::Sstore, r);
            st_writes_.push_back({o, r});
            break;
          }
          case RuleGroup::Sload: {
            auto r = resolve_address(s.operands[0], 1);
            note_stats(RuleGroup::Sload, r);
            st_reads_.push_back({o, r});
            break;
          }
          default:
            break;
        }
      }
    }
  }

  void note_stats(RuleGroup g, const AddressRange& r) {
    auto& c = stats_.for_group(g);
    if (r.resolvable())
      ++c.resolved;
    else
      ++c.unresolved;
  }

  // A memory read sees every earlier write in its own trace that may
  // touch the same bytes.
  void add_memory_edges() {
    for (const auto& [t, reads] : mem_reads_) {
      auto wit = mem_writes_.find(t);
      if (wit == mem_writes_.end()) continue;
      for (const Access& rd : reads) {
        for (const Access& wr : wit->second) {
          if (wr.occ.step >= rd.occ.step) continue;
          if (ranges_intersect(rd.range, wr.range,
                               opts_.conservative_unresolvable))
            channel_edges_[rd.occ].insert(wr.occ);
        }
      }
    }
  }

  // Storage persists across transactions, so a load may observe a store
  // from any trace regardless of order.
  void add_storage_edges() {
    for (const Access& rd : st_reads_) {
      for (const Access& wr : st_writes_) {
        if (rd.occ == wr.occ) continue;
        if (ranges_intersect(rd.range, wr.range,
                             opts_.conservative_unresolvable))
          channel_edges_[rd.occ].insert(wr.occ);
      }
    }
  }

  // An occurrence is control dependent on the most general branch
  // condition: node n depends on branch b when one successor of b leads
  // only through n while another can reach the end without it.
  void add_control_edges() {
    CFG cfg;
    const Node sink = static_cast<Node>(-1);
    for (const auto& tr : traces_.traces) {
      for (std::size_t i = 0; i + 1 < tr.steps.size(); ++i)
        cfg.add_edge(tr.steps[i].pc, tr.steps[i + 1].pc);
      if (!tr.steps.empty()) cfg.add_edge(tr.steps.back().pc, sink);
    }
    auto pdom = post_dominators(cfg, sink);

    // pc-level control dependence per the classic definition.
    std::map<Node, std::set<Node>> ctrl;  // node -> branch pcs
    for (const auto& [b, succs] : cfg.succ) {
      if (succs.size() < 2) continue;
      for (Node n : cfg.nodes) {
        if (n == b || n == sink) continue;
        bool dominates_some = false, dominates_all = true;
        for (Node s : succs) {
          bool d = s == n || pdom.at(s).count(n) > 0;
          dominates_some = dominates_some || d;
          dominates_all = dominates_all && d;
        }
        if (dominates_some && !dominates_all) ctrl[n].insert(b);
      }
    }

    for (std::size_t t = 0; t < traces_.traces.size(); ++t) {
      const auto& steps = traces_.traces[t].steps;
      // Last occurrence of each branch pc seen so far along the trace.
      std::map<Node, std::size_t> last_branch;
      for (std::size_t i = 0; i < steps.size(); ++i) {
        auto it = ctrl.find(steps[i].pc);
        if (it != ctrl.end()) {
          for (Node b : it->second) {
            auto lb = last_branch.find(b);
            if (lb != last_branch.end())
              control_edges_[{t, i}].insert({t, lb->second});
          }
        }
        if (rule_group(steps[i].op) == RuleGroup::Jumpi)
          last_branch[steps[i].pc] = i;
      }
    }
  }

  void data_deps_rec(OccRef o, std::set<OccRef>& out,
                     std::set<OccRef>& visited) const {
    if (!visited.insert(o).second) return;
    for (OccRef d : direct_deps(o)) {
      RuleGroup g = rule_group(traces_.traces[d.trace].steps[d.step].op);
      if (g == RuleGroup::Swap || g == RuleGroup::Mstore ||
          g == RuleGroup::Sstore)
        out.insert(d);
      data_deps_rec(d, out, visited);
    }
  }

  const TraceSet& traces_;
  const Program& program_;
  DependencyOptions opts_;
  std::vector<std::vector<std::set<std::size_t>>> tainters_;
  std::map<std::size_t, std::vector<Access>> mem_writes_, mem_reads_;
  std::vector<Access> st_writes_, st_reads_;
  std::map<OccRef, std::set<OccRef>> channel_edges_;
  std::map<OccRef, std::set<OccRef>> control_edges_;
  TransformStats stats_;
};

}  // namespace evmguard
