#pragma once

#include <string>
#include <string_view>

#include "evmguard/opcode.hpp"

namespace evmguard {

// Checked-arithmetic helpers and the mutex modifier injected into
// patched sources. The checks trap (assert semantics) rather than
// revert, so a failing check is distinguishable from an input guard.

inline std::string_view helper_name(Mnemonic m) {
  switch (m) {
    case Mnemonic::ADD: return "add_uint256";
    case Mnemonic::SUB: return "sub_uint256";
    case Mnemonic::MUL: return "mul_uint256";
    case Mnemonic::DIV: return "div_uint256";
    case Mnemonic::EXP: return "pow_uint256";
    default: return "";
  }
}

inline std::string_view helper_operator(Mnemonic m) {
  switch (m) {
    case Mnemonic::ADD: return "+";
    case Mnemonic::SUB: return "-";
    case Mnemonic::MUL: return "*";
    case Mnemonic::DIV: return "/";
    case Mnemonic::EXP: return "**";
    default: return "";
  }
}

inline std::string_view helper_definition(Mnemonic m) {
  switch (m) {
    case Mnemonic::ADD:
      return "  function add_uint256(uint256 a, uint256 b) internal pure"
             " returns (uint256) {\n"
             "    uint256 c = a + b;\n"
             "    assert(c >= a);\n"
             "    return c;\n"
             "  }\n";
    case Mnemonic::SUB:
      return "  function sub_uint256(uint256 a, uint256 b) internal pure"
             " returns (uint256) {\n"
             "    assert(b <= a);\n"
             "    return a - b;\n"
             "  }\n";
    case Mnemonic::MUL:
      return "  function mul_uint256(uint256 a, uint256 b) internal pure"
             " returns (uint256) {\n"
             "    if (a == 0) { return 0; }\n"
             "    uint256 c = a * b;\n"
             "    assert(c / a == b);\n"
             "    return c;\n"
             "  }\n";
    case Mnemonic::DIV:
      return "  function div_uint256(uint256 a, uint256 b) internal pure"
             " returns (uint256) {\n"
             "    assert(b > 0);\n"
             "    return a / b;\n"
             "  }\n";
    case Mnemonic::EXP:
      return "  function pow_uint256(uint256 a, uint256 b) internal pure"
             " returns (uint256) {\n"
             "    uint256 c = 1;\n"
             "    for (uint256 i = 0; i < b; i++) {\n"
             "      c = mul_uint256(c, a);\n"
             "    }\n"
             "    return c;\n"
             "  }\n";
    default:
      return "";
  }
}

inline std::string_view mutex_definition() {
  return "  bool private reentrancy_lock;\n"
         "  modifier nonReentrant() {\n"
         "    require(!reentrancy_lock);\n"
         "    reentrancy_lock = true;\n"
         "    _;\n"
         "    reentrancy_lock = false;\n"
         "  }\n";
}

}  // namespace evmguard
