#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <vector>

#include "evmguard/bundle.hpp"
#include "evmguard/cfg.hpp"
#include "evmguard/program.hpp"

namespace evmguard {

// Does the instruction at `pc` write a loop-relevant variable? Stack
// writes (SWAP) and memory writes (MSTORE) count when the source map
// marks them as assignments; storage writes never do, since a storage
// slot does not bound an in-transaction loop counter. Without a source
// map entry, MSTORE is assumed to be an assignment and SWAP is not.
inline bool counts_as_assignment(const Opcode& op, const SourceMapEntry* map) {
  switch (op.group()) {
    case RuleGroup::Sstore:
      return false;
    case RuleGroup::Mstore:
      return map == nullptr || map->node == "assignment";
    case RuleGroup::Swap:
      return map != nullptr && map->node == "assignment";
    default:
      return false;
  }
}

struct LoopBounds {
  // Loop head (back-edge target) -> estimated iteration bound.
  std::map<Node, std::uint64_t> head_bounds;
  std::set<std::pair<Node, Node>> back_edges;
  // Per-node bound over the whole program (1 outside loops).
  std::map<Node, std::uint64_t> node_bounds;
};

// Iteration bounds from the shape of each loop body: with back edges
// cut, the body is a DAG, and the estimate at a node sums the estimates
// of its in-loop successors, plus one where the node is an assignment
// on a straight line. The sum over branch arms accounts for the loop
// counter advancing along whichever arm runs each iteration.
inline LoopBounds compute_loop_bounds(const Program& program,
                                      const ContractBundle* bundle = nullptr) {
  CFG cfg = build_static_cfg(program);
  LoopBounds result;
  result.back_edges = find_back_edges(cfg, program.entry());

  std::map<Node, std::size_t> scc_of;
  auto sccs = strongly_connected_components(cfg);
  for (std::size_t i = 0; i < sccs.size(); ++i) {
    for (Node n : sccs[i]) scc_of[n] = i;
  }
  std::vector<bool> nontrivial(sccs.size(), false);
  for (std::size_t i = 0; i < sccs.size(); ++i) {
    if (sccs[i].size() > 1) {
      nontrivial[i] = true;
    } else {
      Node n = sccs[i].front();
      nontrivial[i] = cfg.successors(n).count(n) > 0;
    }
  }

  auto is_assignment = [&](Node n) {
    const SourceMapEntry* map =
        bundle ? bundle->map_entry(n) : nullptr;
    return counts_as_assignment(program.at(n).op, map);
  };

  std::map<Node, std::uint64_t> memo;
  auto bound = [&](auto&& self, Node n) -> std::uint64_t {
    auto it = memo.find(n);
    if (it != memo.end()) return it->second;
    if (!nontrivial[scc_of[n]]) return memo[n] = 1;
    memo[n] = 1;  // cycle guard; back edges are cut below so this only
                  // fires on malformed graphs
    std::vector<Node> considered;
    for (Node s : cfg.successors(n)) {
      if (scc_of[s] != scc_of[n]) continue;
      if (result.back_edges.count({n, s})) continue;
      considered.push_back(s);
    }
    std::uint64_t total = 0;
    for (Node s : considered) total += self(self, s);
    if (considered.size() <= 1 && is_assignment(n)) total += 1;
    return memo[n] = total;
  };

  for (Node n : cfg.nodes) result.node_bounds[n] = bound(bound, n);
  // An assignment-free loop still needs one pass to be observed at all.
  for (const auto& [from, to] : result.back_edges)
    result.head_bounds[to] =
        std::max<std::uint64_t>(1, result.node_bounds[to]);
  return result;
}

}  // namespace evmguard
