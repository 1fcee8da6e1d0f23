#include <catch2/catch_amalgamated.hpp>

#include "evmguard/cfg.hpp"
#include "evmguard/program.hpp"
#include "support/oracles.hpp"

using namespace evmguard;

namespace {

const char* kDiamond =
    "PUSH 0x4\n"        // 0
    "CALLDATALOAD\n"    // 1
    "PUSH @else\n"      // 2
    "JUMPI\n"           // 3
    "PUSH 0x1\n"        // 4
    "PUSH @join\n"      // 5
    "JUMP\n"            // 6
    "@else:\n"
    "PUSH 0x2\n"        // 7
    "@join:\n"
    "PUSH 0x0\n"        // 8
    "SSTORE\n"          // 9
    "STOP\n";           // 10

const char* kLoop =
    "PUSH 0x4\n"        // 0
    "CALLDATALOAD\n"    // 1
    "@head:\n"
    "DUP1\n"            // 2
    "ISZERO\n"          // 3
    "PUSH @exit\n"      // 4
    "JUMPI\n"           // 5
    "PUSH 0x1\n"        // 6
    "SWAP1\n"           // 7
    "SUB\n"             // 8
    "PUSH @head\n"      // 9
    "JUMP\n"            // 10
    "@exit:\n"
    "STOP\n";           // 11

}  // namespace

TEST_CASE("static graph has fallthrough and resolved jump edges") {
  Program p = decode_program(kDiamond);
  CFG cfg = build_static_cfg(p);

  // JUMPI at 3 forks to the label (7) and the fallthrough (4).
  CHECK(cfg.successors(3) == std::set<Node>{4, 7});
  // JUMP at 6 goes only to the join (8).
  CHECK(cfg.successors(6) == std::set<Node>{8});
  // Halting instructions have no successors.
  CHECK(cfg.successors(10).empty());
  // Straight-line instructions fall through.
  CHECK(cfg.successors(0) == std::set<Node>{1});
  CHECK(cfg.successors(9) == std::set<Node>{10});
}

TEST_CASE("jump targets come from the nearest preceding label push") {
  Program p = decode_program(
      "PUSH @a\n"
      "PUSH @b\n"
      "JUMP\n"
      "@a:\nSTOP\n"
      "@b:\nSTOP\n");
  CHECK(static_jump_target(p, 2) == Node{4});

  // A jump with no label push in sight resolves to nothing.
  Program q = decode_program("PUSH 0x4\nCALLDATALOAD\nJUMP\nSTOP\n");
  CHECK_FALSE(static_jump_target(q, 2).has_value());
}

TEST_CASE("loops form a strongly connected component with a back edge") {
  Program p = decode_program(kLoop);
  CFG cfg = build_static_cfg(p);

  auto sccs = strongly_connected_components(cfg);
  std::set<Node> loop_nodes;
  for (const auto& scc : sccs) {
    if (scc.size() > 1) {
      REQUIRE(loop_nodes.empty());
      loop_nodes.insert(scc.begin(), scc.end());
    }
  }
  CHECK(loop_nodes == std::set<Node>{2, 3, 4, 5, 6, 7, 8, 9, 10});

  auto back = find_back_edges(cfg, p.entry());
  REQUIRE(back.size() == 1);
  CHECK(*back.begin() == std::pair<Node, Node>{10, 2});
}

TEST_CASE("acyclic graphs have no back edges or nontrivial components") {
  Program p = decode_program(kDiamond);
  CFG cfg = build_static_cfg(p);
  CHECK(find_back_edges(cfg, p.entry()).empty());
  for (const auto& scc : strongly_connected_components(cfg))
    CHECK(scc.size() == 1);
}

TEST_CASE("post-dominators match the node-removal oracle") {
  for (const char* src : {kDiamond, kLoop}) {
    Program p = decode_program(src);
    CFG cfg = build_static_cfg(p);
    const Node sink = 999;
    for (const auto& ins : p.code) {
      if (ins.op.group() == RuleGroup::Stop) cfg.add_edge(ins.pc, sink);
    }
    auto pdom = post_dominators(cfg, sink);
    for (Node n : cfg.nodes) {
      for (Node m : cfg.nodes) {
        if (n == sink || m == sink) continue;
        bool computed = pdom.at(m).count(n) > 0;
        bool expected = testsupport::oracle_post_dominates(cfg, sink, n, m);
        INFO("n=" << n << " m=" << m);
        CHECK(computed == expected);
      }
    }
  }
}

TEST_CASE("post-dominator sets on the diamond") {
  Program p = decode_program(kDiamond);
  CFG cfg = build_static_cfg(p);
  const Node sink = 999;
  cfg.add_edge(10, sink);
  auto pdom = post_dominators(cfg, sink);
  // The join post-dominates the branch; neither arm does.
  CHECK(pdom.at(3).count(8) == 1);
  CHECK(pdom.at(3).count(4) == 0);
  CHECK(pdom.at(3).count(7) == 0);
  // The arms are post-dominated by the join and store.
  CHECK(pdom.at(4).count(8) == 1);
  CHECK(pdom.at(7).count(9) == 1);
}

TEST_CASE("dot rendering names nodes and edges") {
  Program p = decode_program("PUSH 0x1\nSTOP\n");
  CFG cfg = build_static_cfg(p);
  std::string dot = cfg_to_dot(cfg, &p);
  CHECK(dot.find("digraph") != std::string::npos);
  CHECK(dot.find("PUSH") != std::string::npos);
  CHECK(dot.find("n0 -> n1") != std::string::npos);
}
