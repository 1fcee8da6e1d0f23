#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "evmguard/program.hpp"

namespace evmguard {

using Node = std::uint64_t;

struct CFG {
  std::set<Node> nodes;
  std::map<Node, std::set<Node>> succ;
  std::map<Node, std::set<Node>> pred;

  void add_node(Node n) { nodes.insert(n); }

  void add_edge(Node a, Node b) {
    nodes.insert(a);
    nodes.insert(b);
    succ[a].insert(b);
    pred[b].insert(a);
  }

  const std::set<Node>& successors(Node n) const {
    static const std::set<Node> empty;
    auto it = succ.find(n);
    return it == succ.end() ? empty : it->second;
  }

  const std::set<Node>& predecessors(Node n) const {
    static const std::set<Node> empty;
    auto it = pred.find(n);
    return it == pred.end() ? empty : it->second;
  }
};

// Jump targets are resolved syntactically: the nearest preceding PUSH
// whose immediate came from a label names the destination.
inline std::optional<Node> static_jump_target(const Program& program,
                                              std::uint64_t jump_pc) {
  for (std::uint64_t pc = jump_pc; pc-- > 0;) {
    const Opcode& op = program.code[pc].op;
    if (op.mnemonic == Mnemonic::PUSH && op.immediate_is_label)
      return low_u64(*op.immediate);
  }
  return std::nullopt;
}

inline CFG build_static_cfg(const Program& program) {
  CFG cfg;
  for (const auto& ins : program.code) {
    cfg.add_node(ins.pc);
    RuleGroup g = ins.op.group();
    bool halts = g == RuleGroup::Stop ||
                 ins.op.mnemonic == Mnemonic::SELFDESTRUCT;
    if (halts) continue;
    if (g == RuleGroup::Jump || g == RuleGroup::Jumpi) {
      if (auto t = static_jump_target(program, ins.pc)) {
        if (program.has_pc(*t)) cfg.add_edge(ins.pc, *t);
      }
      if (g == RuleGroup::Jump) continue;
    }
    if (program.has_pc(ins.pc + 1)) cfg.add_edge(ins.pc, ins.pc + 1);
  }
  return cfg;
}

// Strongly connected components (Tarjan), iterative to survive deep
// graphs. Returned in reverse topological order.
inline std::vector<std::vector<Node>> strongly_connected_components(
    const CFG& cfg) {
  std::map<Node, int> index, lowlink;
  std::set<Node> on_stack;
  std::vector<Node> stack;
  std::vector<std::vector<Node>> sccs;
  int counter = 0;

  struct Frame {
    Node n;
    std::set<Node>::const_iterator it, end;
  };

  for (Node root : cfg.nodes) {
    if (index.count(root)) continue;
    std::vector<Frame> frames;
    index[root] = lowlink[root] = counter++;
    stack.push_back(root);
    on_stack.insert(root);
    const auto& rs = cfg.successors(root);
    frames.push_back({root, rs.begin(), rs.end()});

    while (!frames.empty()) {
      Frame& f = frames.back();
      if (f.it != f.end) {
        Node w = *f.it++;
        if (!index.count(w)) {
          index[w] = lowlink[w] = counter++;
          stack.push_back(w);
          on_stack.insert(w);
          const auto& ws = cfg.successors(w);
          frames.push_back({w, ws.begin(), ws.end()});
        } else if (on_stack.count(w)) {
          lowlink[f.n] = std::min(lowlink[f.n], index[w]);
        }
      } else {
        Node n = f.n;
        frames.pop_back();
        if (!frames.empty())
          lowlink[frames.back().n] = std::min(lowlink[frames.back().n],
                                              lowlink[n]);
        if (lowlink[n] == index[n]) {
          std::vector<Node> comp;
          Node w;
          do {
            w = stack.back();
            stack.pop_back();
            on_stack.erase(w);
            comp.push_back(w);
          } while (w != n);
          sccs.push_back(std::move(comp));
        }
      }
    }
  }
  return sccs;
}

// Edges closing a cycle under DFS from the entry.
inline std::set<std::pair<Node, Node>> find_back_edges(const CFG& cfg,
                                                       Node entry) {
  std::set<std::pair<Node, Node>> back;
  std::set<Node> visited, in_path;

  struct Frame {
    Node n;
    std::set<Node>::const_iterator it, end;
  };
  std::vector<Frame> frames;

  auto start = [&](Node n) {
    visited.insert(n);
    in_path.insert(n);
    const auto& s = cfg.successors(n);
    frames.push_back({n, s.begin(), s.end()});
  };

  std::vector<Node> roots{entry};
  for (Node n : cfg.nodes) roots.push_back(n);

  for (Node root : roots) {
    if (!cfg.nodes.count(root) || visited.count(root)) continue;
    start(root);
    while (!frames.empty()) {
      Frame& f = frames.back();
      if (f.it != f.end) {
        Node w = *f.it++;
        if (in_path.count(w)) {
          back.insert({f.n, w});
        } else if (!visited.count(w)) {
          start(w);
        }
      } else {
        in_path.erase(f.n);
        frames.pop_back();
      }
    }
  }
  return back;
}

// Iterative post-dominator sets over the given sink. pdom(n) includes n.
inline std::map<Node, std::set<Node>> post_dominators(const CFG& cfg,
                                                      Node sink) {
  std::map<Node, std::set<Node>> pdom;
  std::set<Node> all = cfg.nodes;
  all.insert(sink);
  for (Node n : all) pdom[n] = (n == sink) ? std::set<Node>{sink} : all;

  bool changed = true;
  while (changed) {
    changed = false;
    for (Node n : all) {
      if (n == sink) continue;
      const auto& succs = cfg.successors(n);
      std::set<Node> meet;
      bool first = true;
      for (Node s : succs) {
        if (first) {
          meet = pdom[s];
          first = false;
        } else {
          std::set<Node> tmp;
          std::set_intersection(meet.begin(), meet.end(), pdom[s].begin(),
                                pdom[s].end(),
                                std::inserter(tmp, tmp.begin()));
          meet = std::move(tmp);
        }
      }
      if (first) meet.clear();  // no successors: unreachable from sink
      meet.insert(n);
      if (meet != pdom[n]) {
        pdom[n] = std::move(meet);
        changed = true;
      }
    }
  }
  return pdom;
}

inline std::string cfg_to_dot(const CFG& cfg, const Program* program = nullptr,
                              const std::string& name = "cfg") {
  std::ostringstream oss;
  oss << "digraph " << name << " {\n";
  for (Node n : cfg.nodes) {
    oss << "  n" << n << " [label=\"" << n;
    if (program && program->has_pc(n))
      oss << ": " << mnemonic_name(program->at(n).op.mnemonic);
    oss << "\"];\n";
  }
  for (const auto& [a, succs] : cfg.succ) {
    for (Node b : succs) oss << "  n" << a << " -> n" << b << ";\n";
  }
  oss << "}\n";
  return oss.str();
}

}  // namespace evmguard
