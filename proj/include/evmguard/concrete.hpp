#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <variant>
#include <vector>

#include "evmguard/errors.hpp"
#include "evmguard/opcode.hpp"
#include "evmguard/program.hpp"
#include "evmguard/word.hpp"

namespace evmguard {

constexpr std::size_t kStackLimit = 1024;

// Fixed 256-bit hash of a word sequence. Not keccak; the analysis only
// relies on determinism and collision-freeness at fixture scale.
inline Word hash_words(const std::vector<Word>& words) {
  auto mix = [](std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
  };
  std::uint64_t lanes[4] = {0x6a09e667f3bcc908ULL, 0xbb67ae8584caa73bULL,
                            0x3c6ef372fe94f82bULL, 0xa54ff53a5f1d36f1ULL};
  for (const auto& w : words) {
    for (int i = 0; i < 4; ++i) {
      std::uint64_t limb = low_u64(w >> (64 * i));
      lanes[i] = mix(lanes[i] ^ limb);
      lanes[(i + 1) % 4] ^= lanes[i];
    }
  }
  Word out = 0;
  for (int i = 0; i < 4; ++i) out |= Word(mix(lanes[i])) << (64 * i);
  return out;
}

// Pure arithmetic meaning of the computable opcodes, shared by the
// concrete interpreter and symbolic constant folding. x is the value
// popped first (stack top).
inline Word apply_binary(Mnemonic m, const Word& x, const Word& y) {
  switch (m) {
    case Mnemonic::ADD: return x + y;
    case Mnemonic::MUL: return x * y;
    case Mnemonic::SUB: return x - y;
    case Mnemonic::DIV: return y == 0 ? Word(0) : x / y;
    case Mnemonic::MOD: return y == 0 ? Word(0) : x % y;
    case Mnemonic::EXP: {
      Word base = x, exp = y, acc = 1;
      while (exp != 0) {
        if (boost::multiprecision::bit_test(exp, 0)) acc *= base;
        base *= base;
        exp >>= 1;
      }
      return acc;
    }
    case Mnemonic::SDIV: {
      if (y == 0) return 0;
      bool sx = word_sign_bit(x), sy = word_sign_bit(y);
      Word ax = sx ? word_neg(x) : x;
      Word ay = sy ? word_neg(y) : y;
      Word q = ax / ay;
      return (sx != sy) ? word_neg(q) : q;
    }
    case Mnemonic::SMOD: {
      if (y == 0) return 0;
      bool sx = word_sign_bit(x);
      Word ax = sx ? word_neg(x) : x;
      Word ay = word_sign_bit(y) ? word_neg(y) : y;
      Word r = ax % ay;
      return sx ? word_neg(r) : r;
    }
    case Mnemonic::SIGNEXTEND: {
      if (x >= 31) return y;
      unsigned bit = static_cast<unsigned>(low_u64(x)) * 8 + 7;
      Word mask = (Word(1) << (bit + 1)) - 1;
      if (boost::multiprecision::bit_test(y, bit)) return y | ~mask;
      return y & mask;
    }
    case Mnemonic::LT: return Word(x < y ? 1 : 0);
    case Mnemonic::GT: return Word(x > y ? 1 : 0);
    case Mnemonic::SLT: {
      bool sx = word_sign_bit(x), sy = word_sign_bit(y);
      if (sx != sy) return Word(sx ? 1 : 0);
      return Word(x < y ? 1 : 0);
    }
    case Mnemonic::SGT: {
      bool sx = word_sign_bit(x), sy = word_sign_bit(y);
      if (sx != sy) return Word(sy ? 1 : 0);
      return Word(x > y ? 1 : 0);
    }
    case Mnemonic::EQ: return Word(x == y ? 1 : 0);
    case Mnemonic::AND: return x & y;
    case Mnemonic::OR: return x | y;
    case Mnemonic::XOR: return x ^ y;
    case Mnemonic::BYTE: {
      if (x >= 32) return 0;
      unsigned shift = (31 - static_cast<unsigned>(low_u64(x))) * 8;
      return (y >> shift) & Word(0xff);
    }
    case Mnemonic::SHL: return x >= 256 ? Word(0) : Word(y << low_u64(x));
    case Mnemonic::SHR: return x >= 256 ? Word(0) : Word(y >> low_u64(x));
    case Mnemonic::SAR: {
      bool neg = word_sign_bit(y);
      if (x >= 256) return neg ? word_max() : Word(0);
      Word r = y >> low_u64(x);
      if (neg) r |= ~(word_max() >> low_u64(x));
      return r;
    }
    default:
      throw ArityMismatch("not a binary opcode");
  }
}

inline Word apply_unary(Mnemonic m, const Word& x) {
  switch (m) {
    case Mnemonic::ISZERO: return Word(x == 0 ? 1 : 0);
    case Mnemonic::NOT: return ~x;
    default:
      throw ArityMismatch("not a pure unary opcode");
  }
}

inline Word apply_ternary(Mnemonic m, const Word& x, const Word& y,
                          const Word& z) {
  switch (m) {
    case Mnemonic::ADDMOD:
      return z == 0 ? Word(0)
                    : Word((WideWord(x) + WideWord(y)) % WideWord(z));
    case Mnemonic::MULMOD:
      return z == 0 ? Word(0)
                    : Word((WideWord(x) * WideWord(y)) % WideWord(z));
    default:
      throw ArityMismatch("not a pure ternary opcode");
  }
}

// Can the opcode be folded to a constant when all operands are concrete?
// Environment reads (calldata, balances, ...) and MLOAD/SLOAD stay
// symbolic even with concrete operands.
inline bool is_pure(Mnemonic m) {
  switch (rule_group(m)) {
    case RuleGroup::Binary:
      return true;
    case RuleGroup::Unary:
      return m == Mnemonic::ISZERO || m == Mnemonic::NOT;
    case RuleGroup::Ternary:
      return m == Mnemonic::ADDMOD || m == Mnemonic::MULMOD;
    default:
      return false;
  }
}

struct ExecutionEnv {
  std::map<Word, Word> calldata;
  Word origin = 0;
  Word caller = 0;
  std::vector<Word> call_results;  // consumed in order; default result is 1
  std::map<Word, Word> initial_storage;

  Word calldata_at(const Word& offset) const {
    auto it = calldata.find(offset);
    return it == calldata.end() ? Word(0) : it->second;
  }
};

struct ConcreteState {
  std::uint64_t pc = 0;
  std::vector<Word> stack;  // top at back
  std::map<Word, Word> memory;
  std::map<Word, Word> storage;

  Word mem_read(const Word& addr) const {
    auto it = memory.find(addr);
    return it == memory.end() ? Word(0) : it->second;
  }
  Word storage_read(const Word& addr) const {
    auto it = storage.find(addr);
    return it == storage.end() ? Word(0) : it->second;
  }
};

struct Halt {
  Mnemonic cause;
};

using StepResult = std::variant<ConcreteState, Halt>;

// Test hooks for the perturbation oracle.
struct RunHooks {
  // Called for every SSTORE/MSTORE; may replace the written value.
  std::function<std::optional<Word>(std::uint64_t pc, Mnemonic m,
                                    const Word& addr, const Word& value)>
      on_write;
  // Called with each value an opcode reads off the stack or a load
  // produces; keyed by pc.
  std::function<void(std::uint64_t pc, Mnemonic m, const Word& value)>
      on_value;
};

struct ExecContext {
  const Program& program;
  const ExecutionEnv& env;
  std::size_t call_index = 0;
  const RunHooks* hooks = nullptr;

  Word next_call_result() {
    if (call_index < env.call_results.size())
      return env.call_results[call_index++];
    ++call_index;
    return 1;
  }
};

inline StepResult step_concrete(const ConcreteState& state, const Opcode& op,
                                ExecContext& ctx) {
  ConcreteState next = state;
  auto m = op.mnemonic;
  auto g = op.group();

  auto require = [&](int n) {
    if (static_cast<int>(next.stack.size()) < n)
      throw StackUnderflow(state.pc);
  };
  auto pop = [&]() {
    Word v = next.stack.back();
    next.stack.pop_back();
    return v;
  };
  auto push = [&](const Word& v) {
    if (next.stack.size() >= kStackLimit) throw StackOverflow(state.pc);
    next.stack.push_back(v);
  };
  auto note = [&](const Word& v) {
    if (ctx.hooks && ctx.hooks->on_value) ctx.hooks->on_value(state.pc, m, v);
  };
  require(required_stack(m));

  switch (g) {
    case RuleGroup::Stop:
      return Halt{m};
    case RuleGroup::Pop:
      note(pop());
      break;
    case RuleGroup::Unary: {
      Word x = pop();
      note(x);
      Word z;
      if (m == Mnemonic::CALLDATALOAD) {
        z = ctx.env.calldata_at(x);
      } else if (is_pure(m)) {
        z = apply_unary(m, x);
      } else {
        z = 0;  // BALANCE/EXTCODESIZE/... default environment
      }
      push(z);
      break;
    }
    case RuleGroup::Binary: {
      Word x = pop(), y = pop();
      note(x);
      note(y);
      push(apply_binary(m, x, y));
      break;
    }
    case RuleGroup::Ternary: {
      Word x = pop(), y = pop(), z = pop();
      note(x);
      note(y);
      note(z);
      if (m == Mnemonic::ADDMOD || m == Mnemonic::MULMOD)
        push(apply_ternary(m, x, y, z));
      else
        push(0);  // copy opcodes yield a unit result under the ternary rule
      break;
    }
    case RuleGroup::Mload: {
      Word p = pop();
      Word v = next.mem_read(p);
      note(v);
      push(v);
      break;
    }
    case RuleGroup::Mstore: {
      Word p = pop(), v = pop();
      if (m == Mnemonic::MSTORE8) {
        v = (next.mem_read(p) & ~Word(0xff)) | (v & Word(0xff));
      }
      if (ctx.hooks && ctx.hooks->on_write) {
        if (auto repl = ctx.hooks->on_write(state.pc, m, p, v)) v = *repl;
      }
      next.memory[p] = v;
      break;
    }
    case RuleGroup::Sload: {
      Word p = pop();
      Word v = next.storage_read(p);
      note(v);
      push(v);
      break;
    }
    case RuleGroup::Sstore: {
      Word p = pop(), v = pop();
      if (ctx.hooks && ctx.hooks->on_write) {
        if (auto repl = ctx.hooks->on_write(state.pc, m, p, v)) v = *repl;
      }
      next.storage[p] = v;
      break;
    }
    case RuleGroup::Sha3: {
      Word p = pop(), n = pop();
      std::vector<Word> range;
      for (Word a = p; a < p + n; a += 0x20) range.push_back(next.mem_read(a));
      Word v = hash_words(range);
      note(v);
      push(v);
      break;
    }
    case RuleGroup::Dup: {
      int i = shuffle_index(m);
      push(next.stack[next.stack.size() - i]);
      break;
    }
    case RuleGroup::Swap: {
      int i = shuffle_index(m);
      std::swap(next.stack[next.stack.size() - 1],
                next.stack[next.stack.size() - 1 - i]);
      break;
    }
    case RuleGroup::Jump: {
      Word lbl = pop();
      if (lbl >= ctx.program.size())
        throw InvalidJumpTarget(state.pc, low_u64(lbl));
      next.pc = low_u64(lbl);
      return next;
    }
    case RuleGroup::Jumpi: {
      Word lbl = pop(), c = pop();
      note(c);
      if (c != 0) {
        if (lbl >= ctx.program.size())
          throw InvalidJumpTarget(state.pc, low_u64(lbl));
        next.pc = low_u64(lbl);
      } else {
        next.pc = state.pc + 1;
      }
      return next;
    }
    case RuleGroup::Call: {
      if (m == Mnemonic::SELFDESTRUCT) return Halt{m};
      push(ctx.next_call_result());
      break;
    }
    case RuleGroup::Push: {
      if (m == Mnemonic::PUSH)
        push(*op.immediate);
      else if (m == Mnemonic::ORIGIN)
        push(ctx.env.origin);
      else
        push(ctx.env.caller);
      break;
    }
  }
  next.pc = state.pc + 1;
  return next;
}

struct ConcreteRun {
  std::vector<std::pair<std::uint64_t, Mnemonic>> steps;
  ConcreteState final_state;
  std::optional<Mnemonic> halt;  // empty if the step limit fired
  std::uint64_t gas_used = 0;
  bool step_limit_hit = false;
};

inline ConcreteRun run_concrete(const Program& program,
                                const ExecutionEnv& env,
                                std::uint64_t step_limit = 100000,
                                const GasTable& gas = GasTable{},
                                const RunHooks* hooks = nullptr,
                                std::map<Word, Word> storage_override = {}) {
  ExecContext ctx{program, env, 0, hooks};
  ConcreteState state;
  state.storage =
      storage_override.empty() ? env.initial_storage : std::move(storage_override);

  ConcreteRun run;
  for (std::uint64_t n = 0; n < step_limit; ++n) {
    if (!program.has_pc(state.pc)) throw InvalidJumpTarget(state.pc, state.pc);
    const Instr& ins = program.at(state.pc);
    run.steps.emplace_back(ins.pc, ins.op.mnemonic);
    run.gas_used += gas.cost(ins.op.group());
    StepResult r = step_concrete(state, ins.op, ctx);
    if (std::holds_alternative<Halt>(r)) {
      run.halt = std::get<Halt>(r).cause;
      run.final_state = state;
      return run;
    }
    state = std::move(std::get<ConcreteState>(r));
  }
  run.step_limit_hit = true;
  run.final_state = state;
  return run;
}

}  // namespace evmguard
