#include <catch2/catch_amalgamated.hpp>

#include "evmguard/deps.hpp"
#include "evmguard/traces.hpp"
#include "support/oracles.hpp"

using namespace evmguard;

namespace {

struct Analyzed {
  Program program;
  TraceSet traces;
  std::unique_ptr<DependencyAnalysis> deps;
};

Analyzed analyze(const std::string& asm_text,
                 DependencyOptions opts = DependencyOptions{}) {
  Analyzed a;
  a.program = decode_program(asm_text);
  a.traces = enumerate_traces(a.program);
  a.deps = std::make_unique<DependencyAnalysis>(a.traces, a.program, opts);
  return a;
}

// Step index of the i-th occurrence of a mnemonic in a trace.
std::size_t find_step(const Trace& tr, Mnemonic m, int nth = 0) {
  for (std::size_t i = 0; i < tr.steps.size(); ++i) {
    if (tr.steps[i].op == m && nth-- == 0) return i;
  }
  FAIL("opcode not found in trace");
  return 0;
}

SymPtr sha3_of_region(Word base, Word len) {
  return sym_node(Mnemonic::SHA3,
                  {sym_node(Mnemonic::MLOAD,
                            {sym_concrete(base), sym_concrete(len)})});
}

}  // namespace

TEST_CASE("address resolution") {
  auto r = resolve_address(sym_concrete(0x40), 32);
  CHECK(r.base == AddressRange::Base::Constant);
  CHECK(r.lo == 0x40);
  CHECK(r.hi == 0x5f);

  auto h = sha3_of_region(0, 0x40);
  auto r2 = resolve_address(sym_node(Mnemonic::ADD, {sym_concrete(0x20), h}),
                            32);
  CHECK(r2.base == AddressRange::Base::Hash);
  CHECK(r2.lo == 0x20);
  CHECK(r2.hi == 0x3f);

  // Nested offsets accumulate.
  auto nested = sym_node(
      Mnemonic::ADD,
      {sym_node(Mnemonic::ADD, {h, sym_concrete(0x10)}), sym_concrete(0x10)});
  CHECK(resolve_address(nested, 32).lo == 0x20);

  // A multiplicative address defeats resolution.
  auto r3 = resolve_address(
      sym_node(Mnemonic::MUL, {sym_concrete(2), h}), 32);
  CHECK_FALSE(r3.resolvable());
}

TEST_CASE("range intersection") {
  auto h1 = sha3_of_region(0, 0x40);
  auto h2 = sha3_of_region(0x40, 0x40);

  auto at = [](SymPtr base, Word off, Word width) {
    return resolve_address(
        base ? sym_node(Mnemonic::ADD, {sym_concrete(off), base})
             : sym_concrete(off),
        width);
  };

  // Same hash base: byte intervals decide.
  CHECK(ranges_intersect(at(h1, 0, 32), at(h1, 0x1f, 32)));
  CHECK_FALSE(ranges_intersect(at(h1, 0, 32), at(h1, 0x20, 32)));
  // Distinct bases never intersect.
  CHECK_FALSE(ranges_intersect(at(h1, 0, 32), at(h2, 0, 32)));
  CHECK_FALSE(ranges_intersect(at(h1, 0, 32), at(nullptr, 0, 32)));

  // Unresolvable addresses: the conservative flag decides.
  AddressRange unresolved;
  CHECK(ranges_intersect(unresolved, at(h1, 0, 32), true));
  CHECK_FALSE(ranges_intersect(unresolved, at(h1, 0, 32), false));
}

TEST_CASE("stack taint flows through operands") {
  auto a = analyze(
      "PUSH 0x1\n"   // 0
      "PUSH 0x2\n"   // 1
      "SWAP1\n"      // 2
      "ADD\n"        // 3
      "PUSH 0x0\n"   // 4
      "SSTORE\n"     // 5
      "STOP\n");
  const auto& tr = a.traces.traces.at(0);
  CHECK(a.deps->tainters({0, 3}) == std::set<std::size_t>{0, 1, 2});
  // The store's value operand carries the whole chain.
  CHECK(a.deps->tainters({0, 5}) == std::set<std::size_t>{0, 1, 2, 3, 4});
  // Assignment-level dependencies keep only SWAP/MSTORE/SSTORE.
  CHECK(a.deps->data_deps({0, 3}) == std::set<OccRef>{{0, 2}});
  (void)tr;
}

TEST_CASE("dup copies the source slot's taint") {
  auto a = analyze(
      "PUSH 0x1\n"   // 0
      "PUSH 0x2\n"   // 1
      "DUP2\n"       // 2 copies the value pushed at 0
      "PUSH 0x0\n"   // 3
      "SSTORE\n"     // 4 stores the duplicate
      "STOP\n");
  CHECK(a.deps->tainters({0, 4}).count(0) == 1);
  CHECK(a.deps->tainters({0, 4}).count(1) == 0);
  CHECK(a.deps->tainters({0, 4}).count(2) == 1);
}

TEST_CASE("memory channel connects loads to overlapping earlier writes") {
  auto a = analyze(
      "PUSH 0x4\nCALLDATALOAD\n"  // 0,1
      "PUSH 0x80\nMSTORE\n"       // 2,3: mem[0x80] = cd
      "PUSH 0x5\n"                // 4
      "PUSH 0xa0\nMSTORE\n"       // 5,6: mem[0xa0] = 5
      "PUSH 0x80\nMLOAD\n"        // 7,8: reads [0x80,0x9f]
      "PUSH 0x0\nSSTORE\n"        // 9,10
      "STOP\n");
  auto d = a.deps->direct_deps({0, 8});
  CHECK(d.count({0, 3}) == 1);   // overlapping write
  CHECK(d.count({0, 6}) == 0);   // disjoint write
  // And the load's value reaches the final store transitively.
  CHECK(a.deps->closure({0, 10}).count({0, 3}) == 1);
}

TEST_CASE("hashes read their whole source region") {
  auto a = analyze(
      "PUSH 0x4\nCALLDATALOAD\n"  // 0,1
      "PUSH 0x20\nMSTORE\n"       // 2,3: mem[0x20] = cd
      "PUSH 0x40\nPUSH 0x0\n"     // 4,5
      "SHA3\n"                    // 6: hashes [0x00,0x3f]
      "PUSH 0x0\nSSTORE\n"        // 7,8
      "STOP\n");
  CHECK(a.deps->direct_deps({0, 6}).count({0, 3}) == 1);
}

TEST_CASE("storage channel crosses traces in both directions") {
  // Two functions dispatched on calldata: one writes slot 0, the other
  // reads it.
  auto a = analyze(
      "PUSH 0x0\nCALLDATALOAD\n"  // selector
      "PUSH @reader\n"
      "JUMPI\n"
      "PUSH 0x4\nCALLDATALOAD\n"
      "PUSH 0x0\nSSTORE\n"        // writer branch
      "STOP\n"
      "@reader:\n"
      "PUSH 0x0\nSLOAD\n"
      "PUSH 0x1\nSSTORE\n"
      "STOP\n");
  REQUIRE(a.traces.traces.size() == 2);
  // Find which trace holds the reader.
  std::size_t rt = a.traces.traces[0].steps.back().pc >
                           a.traces.traces[1].steps.back().pc
                       ? 0
                       : 1;
  std::size_t wt = 1 - rt;
  const auto& reader = a.traces.traces[rt];
  const auto& writer = a.traces.traces[wt];
  OccRef sload{rt, find_step(reader, Mnemonic::SLOAD)};
  OccRef sstore{wt, find_step(writer, Mnemonic::SSTORE)};
  // The load in one trace depends on the store in the other, even
  // though neither precedes the other.
  CHECK(a.deps->direct_deps(sload).count(sstore) == 1);
  // But not on the unrelated slot-1 store in its own trace.
  OccRef other{rt, find_step(reader, Mnemonic::SSTORE)};
  CHECK(a.deps->direct_deps(sload).count(other) == 0);
}

TEST_CASE("control dependence matches the node-removal oracle") {
  auto a = analyze(
      "ORIGIN\n"              // 0
      "PUSH @skip\n"          // 1
      "JUMPI\n"               // 2
      "PUSH 0x1\n"            // 3
      "PUSH 0x0\n"            // 4
      "SSTORE\n"              // 5
      "@skip:\n"
      "PUSH 0x2\n"            // 6
      "PUSH 0x1\n"            // 7
      "SSTORE\n"              // 8
      "STOP\n");              // 9

  // Rebuild the trace graph the same way the analysis does and consult
  // the removal oracle.
  CFG cfg;
  const Node sink = static_cast<Node>(-1);
  for (const auto& tr : a.traces.traces) {
    for (std::size_t i = 0; i + 1 < tr.steps.size(); ++i)
      cfg.add_edge(tr.steps[i].pc, tr.steps[i + 1].pc);
    cfg.add_edge(tr.steps.back().pc, sink);
  }
  CHECK(testsupport::oracle_control_dependent(cfg, sink, 5, 2));
  CHECK_FALSE(testsupport::oracle_control_dependent(cfg, sink, 8, 2));

  // The guarded store is control dependent on the branch in the
  // fallthrough trace; the unconditional store is not, anywhere.
  bool guarded_edge = false;
  for (std::size_t t = 0; t < a.traces.traces.size(); ++t) {
    const auto& steps = a.traces.traces[t].steps;
    for (std::size_t i = 0; i < steps.size(); ++i) {
      auto d = a.deps->direct_deps({t, i});
      for (OccRef dep : d) {
        if (a.traces.traces[dep.trace].steps[dep.step].op != Mnemonic::JUMPI)
          continue;
        if (steps[i].pc == 5) guarded_edge = true;
        CHECK(steps[i].pc != 8);
      }
    }
  }
  CHECK(guarded_edge);

  // Through the branch condition, the guarded store depends on ORIGIN.
  for (std::size_t t = 0; t < a.traces.traces.size(); ++t) {
    const auto& steps = a.traces.traces[t].steps;
    for (std::size_t i = 0; i < steps.size(); ++i) {
      if (steps[i].pc != 5) continue;
      auto cl = a.deps->closure({t, i});
      bool sees_origin = false;
      for (OccRef d : cl)
        if (a.traces.traces[d.trace].steps[d.step].op == Mnemonic::ORIGIN)
          sees_origin = true;
      CHECK(sees_origin);
    }
  }
}

TEST_CASE("taint agrees with the value-perturbation experiment") {
  std::string src =
      "PUSH 0x5\n"                // 0
      "PUSH 0x2\n"                // 1
      "SSTORE\n"                  // 2: slot2 = 5
      "PUSH 0x4\nCALLDATALOAD\n"  // 3,4
      "PUSH 0x0\n"                // 5
      "SSTORE\n"                  // 6: slot0 = cd
      "PUSH 0x0\n"                // 7
      "SLOAD\n"                   // 8: reads slot0
      "PUSH 0x1\n"                // 9
      "ADD\n"                     // 10
      "PUSH 0x1\n"                // 11
      "SSTORE\n"                  // 12: slot1
      "STOP\n";                   // 13
  auto a = analyze(src);
  ExecutionEnv env;
  env.calldata[Word(4)] = 0x2a;

  // The experiment: nudging the slot-0 store changes what the load
  // sees; nudging the slot-2 store does not.
  CHECK(testsupport::oracle_value_flows(a.program, env, 6, 8));
  CHECK_FALSE(testsupport::oracle_value_flows(a.program, env, 2, 8));

  // The analysis draws exactly those edges.
  auto d = a.deps->direct_deps({0, 8});
  CHECK(d.count({0, 6}) == 1);
  CHECK(d.count({0, 2}) == 0);
  // And Algorithm-style assignment dependencies of the ADD find the
  // slot-0 writer through the load.
  CHECK(a.deps->data_deps({0, 10}) == std::set<OccRef>{{0, 6}});
}

TEST_CASE("closure is transitive and self-free for independent ops") {
  auto a = analyze(
      "PUSH 0x4\nCALLDATALOAD\n"
      "PUSH 0x0\nSSTORE\n"        // 2,3
      "PUSH 0x0\nSLOAD\n"         // 4,5
      "PUSH 0x1\nADD\n"           // 6,7
      "PUSH 0x1\nSSTORE\n"        // 8,9
      "STOP\n");
  auto cl = a.deps->closure({0, 9});
  // Everything upstream of the final store, including the first store
  // through the storage channel and the calldata read through taint.
  CHECK(cl.count({0, 3}) == 1);
  CHECK(cl.count({0, 1}) == 1);
  CHECK(cl.count({0, 7}) == 1);
  // Transitivity: anything in the closure of a member is in the closure.
  for (OccRef m : cl) {
    for (OccRef n : a.deps->closure(m)) CHECK(cl.count(n) == 1);
  }
}

TEST_CASE("address resolution statistics") {
  auto a = analyze(
      "PUSH 0x4\nCALLDATALOAD\n"
      "PUSH 0x2\nMUL\n"           // unresolvable address
      "MLOAD\n"
      "PUSH 0x80\nMLOAD\n"        // resolvable
      "ADD\n"
      "PUSH 0x0\nSSTORE\n"
      "STOP\n");
  const auto& st = a.deps->stats();
  CHECK(st.mload.resolved == 1);
  CHECK(st.mload.unresolved == 1);
  CHECK(st.sstore.resolved == 1);
}
