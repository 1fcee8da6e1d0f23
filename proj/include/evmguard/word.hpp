#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <cstdint>
#include <sstream>
#include <string>

namespace evmguard {

// 256-bit EVM machine word. Unsigned, wraps modulo 2^256.
using Word = boost::multiprecision::uint256_t;
using WideWord = boost::multiprecision::uint512_t;

inline Word word_max() {
  Word w = 0;
  return ~w;
}

inline bool word_sign_bit(const Word& w) {
  return boost::multiprecision::bit_test(w, 255);
}

// Two's-complement negation.
inline Word word_neg(const Word& w) {
  return Word(0) - w;
}

inline std::string to_hex(const Word& w) {
  std::ostringstream oss;
  oss << "0x" << std::hex << w;
  return oss.str();
}

inline Word word_from_hex(const std::string& text) {
  return Word(text);
}

inline std::uint64_t low_u64(const Word& w) {
  return static_cast<std::uint64_t>(w & Word(0xffffffffffffffffULL));
}

}  // namespace evmguard
