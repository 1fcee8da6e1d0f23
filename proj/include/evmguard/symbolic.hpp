#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "evmguard/concrete.hpp"
#include "evmguard/errors.hpp"
#include "evmguard/opcode.hpp"
#include "evmguard/word.hpp"

namespace evmguard {

// A symbolic value is either a concrete word or an operator node over
// other symbolic values. Nodes compare structurally.
struct SymValue;
using SymPtr = std::shared_ptr<const SymValue>;

struct SymValue {
  bool concrete = false;
  Word value = 0;              // when concrete
  Mnemonic op = Mnemonic::ADD;  // when a node
  std::vector<SymPtr> operands;
};

inline SymPtr sym_concrete(const Word& w) {
  auto v = std::make_shared<SymValue>();
  v->concrete = true;
  v->value = w;
  return v;
}

inline SymPtr sym_node(Mnemonic op, std::vector<SymPtr> operands) {
  auto v = std::make_shared<SymValue>();
  v->op = op;
  v->operands = std::move(operands);
  return v;
}

inline bool sym_equal(const SymPtr& a, const SymPtr& b) {
  if (a == b) return true;
  if (!a || !b) return false;
  if (a->concrete != b->concrete) return false;
  if (a->concrete) return a->value == b->value;
  if (a->op != b->op || a->operands.size() != b->operands.size()) return false;
  for (std::size_t i = 0; i < a->operands.size(); ++i) {
    if (!sym_equal(a->operands[i], b->operands[i])) return false;
  }
  return true;
}

inline std::string sym_to_string(const SymPtr& v) {
  if (!v) return "<null>";
  if (v->concrete) return to_hex(v->value);
  std::ostringstream oss;
  oss << mnemonic_name(v->op) << '(';
  for (std::size_t i = 0; i < v->operands.size(); ++i) {
    if (i) oss << ", ";
    oss << sym_to_string(v->operands[i]);
  }
  oss << ')';
  return oss.str();
}

// Does the expression mention any of the given opcodes?
inline bool sym_mentions(const SymPtr& v, Mnemonic m) {
  if (!v || v->concrete) return false;
  if (v->op == m) return true;
  for (const auto& o : v->operands) {
    if (sym_mentions(o, m)) return true;
  }
  return false;
}

constexpr Word kFreePointerSlot = 0x40;
constexpr std::uint64_t kInitialFreePointer = 0x80;
// A symbolic allocation through the free pointer is assumed to take at
// most ten words.
constexpr std::uint64_t kSymbolicAllocSlots = 10;

struct SymbolicState {
  std::uint64_t pc = 0;
  std::vector<SymPtr> stack;  // top at back
  std::uint64_t free_ptr = kInitialFreePointer;
  std::uint64_t fresh_counter = 0;

  SymPtr fresh(Mnemonic op, std::uint64_t site_pc) {
    return sym_node(op, {sym_concrete(Word(site_pc)),
                         sym_concrete(Word(fresh_counter++))});
  }
};

// One executed opcode occurrence in a trace. Operands are recorded in
// pop order (stack top first); stores also keep address/value split out.
struct TraceStep {
  std::uint64_t pc = 0;
  Mnemonic op = Mnemonic::STOP;
  std::vector<SymPtr> operands;
  SymPtr result;  // null when the rule pushes nothing
};

// Outcome of one symbolic step: either the successor pcs to explore or
// a halt. JUMPI yields both branch targets.
struct SymStepOutcome {
  std::vector<std::pair<std::uint64_t, SymbolicState>> successors;
  std::optional<Mnemonic> halt;
  TraceStep step;
};

inline SymStepOutcome step_symbolic(const SymbolicState& state,
                                    const Opcode& opc) {
  SymStepOutcome out;
  SymbolicState next = state;
  Mnemonic m = opc.mnemonic;
  RuleGroup g = opc.group();
  out.step.pc = state.pc;
  out.step.op = m;

  auto require = [&](int n) {
    if (static_cast<int>(next.stack.size()) < n)
      throw StackUnderflow(state.pc);
  };
  auto pop = [&]() {
    SymPtr v = next.stack.back();
    next.stack.pop_back();
    out.step.operands.push_back(v);
    return v;
  };
  auto push = [&](SymPtr v) {
    if (next.stack.size() >= kStackLimit) throw StackOverflow(state.pc);
    out.step.result = v;
    next.stack.push_back(std::move(v));
  };
  auto fallthrough = [&]() {
    next.pc = state.pc + 1;
    out.successors.emplace_back(next.pc, std::move(next));
  };
  require(required_stack(m));

  switch (g) {
    case RuleGroup::Stop:
      out.halt = m;
      return out;
    case RuleGroup::Pop:
      pop();
      fallthrough();
      return out;
    case RuleGroup::Unary: {
      SymPtr x = pop();
      if (is_pure(m) && x->concrete)
        push(sym_concrete(apply_unary(m, x->value)));
      else
        push(sym_node(m, {x}));
      fallthrough();
      return out;
    }
    case RuleGroup::Binary: {
      SymPtr x = pop(), y = pop();
      if (x->concrete && y->concrete)
        push(sym_concrete(apply_binary(m, x->value, y->value)));
      else
        push(sym_node(m, {x, y}));
      fallthrough();
      return out;
    }
    case RuleGroup::Ternary: {
      SymPtr x = pop(), y = pop(), z = pop();
      if (is_pure(m) && x->concrete && y->concrete && z->concrete)
        push(sym_concrete(apply_ternary(m, x->value, y->value, z->value)));
      else
        push(sym_node(m, {x, y, z}));
      fallthrough();
      return out;
    }
    case RuleGroup::Mload: {
      SymPtr p = pop();
      if (p->concrete && p->value == kFreePointerSlot)
        push(sym_concrete(Word(next.free_ptr)));
      else
        push(sym_node(Mnemonic::MLOAD, {p}));
      fallthrough();
      return out;
    }
    case RuleGroup::Mstore: {
      SymPtr p = pop(), v = pop();
      if (p->concrete && p->value == kFreePointerSlot && !v->concrete) {
        // The written expression cannot be tracked precisely; bump the
        // free-pointer estimate by a fixed allocation instead.
        next.free_ptr += kSymbolicAllocSlots * 0x20;
      }
      fallthrough();
      return out;
    }
    case RuleGroup::Sload: {
      SymPtr p = pop();
      push(sym_node(Mnemonic::SLOAD, {p}));
      fallthrough();
      return out;
    }
    case RuleGroup::Sstore: {
      pop();
      pop();
      fallthrough();
      return out;
    }
    case RuleGroup::Sha3: {
      SymPtr p = pop(), n = pop();
      // Content-insensitive: two hashes of the same memory region are
      // the same value regardless of intervening writes.
      push(sym_node(Mnemonic::SHA3, {sym_node(Mnemonic::MLOAD, {p, n})}));
      fallthrough();
      return out;
    }
    case RuleGroup::Dup: {
      int i = shuffle_index(m);
      SymPtr v = next.stack[next.stack.size() - i];
      out.step.operands.push_back(v);
      push(v);
      fallthrough();
      return out;
    }
    case RuleGroup::Swap: {
      int i = shuffle_index(m);
      std::size_t top = next.stack.size() - 1;
      out.step.operands.push_back(next.stack[top]);
      out.step.operands.push_back(next.stack[top - i]);
      std::swap(next.stack[top], next.stack[top - i]);
      fallthrough();
      return out;
    }
    case RuleGroup::Jump: {
      SymPtr lbl = pop();
      if (!lbl->concrete) throw SymbolicJumpTarget(state.pc);
      next.pc = low_u64(lbl->value);
      out.successors.emplace_back(next.pc, std::move(next));
      return out;
    }
    case RuleGroup::Jumpi: {
      SymPtr lbl = pop(), cond = pop();
      if (!lbl->concrete) throw SymbolicJumpTarget(state.pc);
      if (cond->concrete) {
        // A decided branch explores only the taken side.
        std::uint64_t target =
            cond->value != 0 ? low_u64(lbl->value) : state.pc + 1;
        next.pc = target;
        out.successors.emplace_back(target, std::move(next));
        return out;
      }
      SymbolicState taken = next;
      taken.pc = low_u64(lbl->value);
      out.successors.emplace_back(taken.pc, std::move(taken));
      next.pc = state.pc + 1;
      out.successors.emplace_back(next.pc, std::move(next));
      return out;
    }
    case RuleGroup::Call: {
      if (m == Mnemonic::SELFDESTRUCT) {
        out.halt = m;
        return out;
      }
      push(next.fresh(m, state.pc));
      fallthrough();
      return out;
    }
    case RuleGroup::Push: {
      if (m == Mnemonic::PUSH)
        push(sym_concrete(*opc.immediate));
      else
        push(sym_node(m, {}));
      fallthrough();
      return out;
    }
  }
  throw ArityMismatch("unhandled rule group");
}

}  // namespace evmguard
