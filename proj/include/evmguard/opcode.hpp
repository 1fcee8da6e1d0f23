#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

#include "evmguard/word.hpp"

namespace evmguard {

// Semantic rule groups. Each mnemonic executes under exactly one group.
enum class RuleGroup {
  Stop,
  Pop,
  Unary,
  Binary,
  Ternary,
  Mload,
  Sha3,
  Mstore,
  Sload,
  Sstore,
  Dup,
  Swap,
  Jumpi,
  Jump,
  Call,
  Push,  // constant and environment pushes (PUSH, ORIGIN, CALLER)
};

// clang-format off
#define EVMGUARD_MNEMONICS(X)                \
  /* halting */                              \
  X(STOP, Stop)                              \
  X(RETURN, Stop)                            \
  X(REVERT, Stop)                            \
  X(INVALID, Stop)                           \
  X(SELFDESTRUCT, Stop)                      \
  X(POP, Pop)                                \
  /* unary */                                \
  X(ISZERO, Unary)                           \
  X(NOT, Unary)                              \
  X(CALLDATALOAD, Unary)                     \
  X(EXTCODESIZE, Unary)                      \
  X(BLOCKHASH, Unary)                        \
  X(BALANCE, Unary)                          \
  X(EXTCODEHASH, Unary)                      \
  /* binary */                               \
  X(ADD, Binary)                             \
  X(MUL, Binary)                             \
  X(SUB, Binary)                             \
  X(DIV, Binary)                             \
  X(SDIV, Binary)                            \
  X(MOD, Binary)                             \
  X(SMOD, Binary)                            \
  X(EXP, Binary)                             \
  X(SIGNEXTEND, Binary)                      \
  X(LT, Binary)                              \
  X(GT, Binary)                              \
  X(SLT, Binary)                             \
  X(SGT, Binary)                             \
  X(EQ, Binary)                              \
  X(AND, Binary)                             \
  X(OR, Binary)                              \
  X(XOR, Binary)                             \
  X(BYTE, Binary)                            \
  X(SHL, Binary)                             \
  X(SHR, Binary)                             \
  X(SAR, Binary)                             \
  /* ternary */                              \
  X(ADDMOD, Ternary)                         \
  X(MULMOD, Ternary)                         \
  X(CALLDATACOPY, Ternary)                   \
  X(CODECOPY, Ternary)                       \
  X(RETURNDATACOPY, Ternary)                 \
  /* memory / storage */                     \
  X(MLOAD, Mload)                            \
  X(SHA3, Sha3)                              \
  X(MSTORE, Mstore)                          \
  X(MSTORE8, Mstore)                         \
  X(SLOAD, Sload)                            \
  X(SSTORE, Sstore)                          \
  /* stack shuffles */                       \
  X(DUP1, Dup)  X(DUP2, Dup)  X(DUP3, Dup)  X(DUP4, Dup)   \
  X(DUP5, Dup)  X(DUP6, Dup)  X(DUP7, Dup)  X(DUP8, Dup)   \
  X(DUP9, Dup)  X(DUP10, Dup) X(DUP11, Dup) X(DUP12, Dup)  \
  X(DUP13, Dup) X(DUP14, Dup) X(DUP15, Dup) X(DUP16, Dup)  \
  X(SWAP1, Swap)  X(SWAP2, Swap)  X(SWAP3, Swap)  X(SWAP4, Swap)   \
  X(SWAP5, Swap)  X(SWAP6, Swap)  X(SWAP7, Swap)  X(SWAP8, Swap)   \
  X(SWAP9, Swap)  X(SWAP10, Swap) X(SWAP11, Swap) X(SWAP12, Swap)  \
  X(SWAP13, Swap) X(SWAP14, Swap) X(SWAP15, Swap) X(SWAP16, Swap)  \
  /* control flow */                         \
  X(JUMPI, Jumpi)                            \
  X(JUMP, Jump)                              \
  /* external calls */                       \
  X(CALL, Call)                              \
  X(CALLCODE, Call)                          \
  X(DELEGATECALL, Call)                      \
  X(STATICCALL, Call)                        \
  X(CREATE, Call)                            \
  X(CREATE2, Call)                           \
  /* pushes */                               \
  X(PUSH, Push)                              \
  X(ORIGIN, Push)                            \
  X(CALLER, Push)
// clang-format on

enum class Mnemonic {
#define X(name, group) name,
  EVMGUARD_MNEMONICS(X)
#undef X
};

inline RuleGroup rule_group(Mnemonic m) {
  switch (m) {
#define X(name, group) \
  case Mnemonic::name: \
    return RuleGroup::group;
    EVMGUARD_MNEMONICS(X)
#undef X
  }
  throw std::logic_error("unknown mnemonic");
}

inline std::string_view mnemonic_name(Mnemonic m) {
  switch (m) {
#define X(name, group) \
  case Mnemonic::name: \
    return #name;
    EVMGUARD_MNEMONICS(X)
#undef X
  }
  return "?";
}

inline const std::map<std::string, Mnemonic, std::less<>>& mnemonic_table() {
  static const std::map<std::string, Mnemonic, std::less<>> table = {
#define X(name, group) {#name, Mnemonic::name},
      EVMGUARD_MNEMONICS(X)
#undef X
  };
  return table;
}

inline std::optional<Mnemonic> parse_mnemonic(std::string_view name) {
  const auto& table = mnemonic_table();
  auto it = table.find(name);
  if (it == table.end()) return std::nullopt;
  return it->second;
}

// DUP-i / SWAP-i index in [1, 16].
inline int shuffle_index(Mnemonic m) {
  auto g = rule_group(m);
  if (g == RuleGroup::Dup)
    return static_cast<int>(m) - static_cast<int>(Mnemonic::DUP1) + 1;
  if (g == RuleGroup::Swap)
    return static_cast<int>(m) - static_cast<int>(Mnemonic::SWAP1) + 1;
  return 0;
}

// Number of stack operands popped under the group's rule.
inline int rule_pops(RuleGroup g) {
  switch (g) {
    case RuleGroup::Stop: return 0;
    case RuleGroup::Pop: return 1;
    case RuleGroup::Unary: return 1;
    case RuleGroup::Binary: return 2;
    case RuleGroup::Ternary: return 3;
    case RuleGroup::Mload: return 1;
    case RuleGroup::Sha3: return 2;
    case RuleGroup::Mstore: return 2;
    case RuleGroup::Sload: return 1;
    case RuleGroup::Sstore: return 2;
    case RuleGroup::Dup: return 0;
    case RuleGroup::Swap: return 0;
    case RuleGroup::Jumpi: return 2;
    case RuleGroup::Jump: return 1;
    case RuleGroup::Call: return 0;
    case RuleGroup::Push: return 0;
  }
  return 0;
}

inline int rule_pushes(RuleGroup g) {
  switch (g) {
    case RuleGroup::Unary:
    case RuleGroup::Binary:
    case RuleGroup::Ternary:
    case RuleGroup::Mload:
    case RuleGroup::Sha3:
    case RuleGroup::Sload:
    case RuleGroup::Dup:
    case RuleGroup::Call:
    case RuleGroup::Push:
      return 1;
    default:
      return 0;
  }
}

// Minimum stack depth required before executing the opcode.
inline int required_stack(Mnemonic m) {
  auto g = rule_group(m);
  if (g == RuleGroup::Dup) return shuffle_index(m);
  if (g == RuleGroup::Swap) return shuffle_index(m) + 1;
  return rule_pops(g);
}

// External-call opcodes whose dependencies make a trace critical.
// STATICCALL cannot write the callee's storage and is excluded.
inline bool is_critical(Mnemonic m) {
  switch (m) {
    case Mnemonic::CALL:
    case Mnemonic::CALLCODE:
    case Mnemonic::DELEGATECALL:
    case Mnemonic::SELFDESTRUCT:
    case Mnemonic::CREATE:
    case Mnemonic::CREATE2:
      return true;
    default:
      return false;
  }
}

inline bool is_arithmetic_target(Mnemonic m) {
  return m == Mnemonic::ADD || m == Mnemonic::SUB || m == Mnemonic::MUL ||
         m == Mnemonic::DIV;
}

// A decoded instruction operand-wise: PUSH carries its constant, and
// constants that came from a label reference are flagged so the static
// CFG builder can resolve jump targets.
struct Opcode {
  Mnemonic mnemonic;
  std::optional<Word> immediate;
  bool immediate_is_label = false;

  RuleGroup group() const { return rule_group(mnemonic); }
};

struct GasTable {
  std::uint64_t stop = 0;
  std::uint64_t push = 3;
  std::uint64_t pop = 3;
  std::uint64_t unary = 3;
  std::uint64_t binary = 3;
  std::uint64_t ternary = 3;
  std::uint64_t dup = 3;
  std::uint64_t swap = 3;
  std::uint64_t mload = 3;
  std::uint64_t mstore = 3;
  std::uint64_t sload = 200;
  std::uint64_t sstore = 5000;
  std::uint64_t sha3 = 30;
  std::uint64_t jump = 8;
  std::uint64_t jumpi = 10;
  std::uint64_t call = 700;

  std::uint64_t cost(RuleGroup g) const {
    switch (g) {
      case RuleGroup::Stop: return stop;
      case RuleGroup::Pop: return pop;
      case RuleGroup::Unary: return unary;
      case RuleGroup::Binary: return binary;
      case RuleGroup::Ternary: return ternary;
      case RuleGroup::Mload: return mload;
      case RuleGroup::Sha3: return sha3;
      case RuleGroup::Mstore: return mstore;
      case RuleGroup::Sload: return sload;
      case RuleGroup::Sstore: return sstore;
      case RuleGroup::Dup: return dup;
      case RuleGroup::Swap: return swap;
      case RuleGroup::Jumpi: return jumpi;
      case RuleGroup::Jump: return jump;
      case RuleGroup::Call: return call;
      case RuleGroup::Push: return push;
    }
    return 0;
  }
};

}  // namespace evmguard
