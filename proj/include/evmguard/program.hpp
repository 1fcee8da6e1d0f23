#pragma once

#include <cctype>
#include <cstdint>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "evmguard/errors.hpp"
#include "evmguard/opcode.hpp"

namespace evmguard {

struct Instr {
  std::uint64_t pc;
  Opcode op;
};

struct FunctionInfo {
  std::string name;
  std::uint64_t pc_start = 0;
  std::uint64_t pc_end = 0;
  // Offset in the source text just past the parameter list of the
  // declaration; used as the modifier insertion point.
  std::optional<std::size_t> params_end;

  bool contains(std::uint64_t pc) const {
    return pc >= pc_start && pc <= pc_end;
  }
};

class Program {
 public:
  std::vector<Instr> code;
  std::vector<FunctionInfo> functions;

  std::uint64_t entry() const { return 0; }
  std::size_t size() const { return code.size(); }

  bool has_pc(std::uint64_t pc) const { return pc < code.size(); }

  const Instr& at(std::uint64_t pc) const {
    if (!has_pc(pc)) throw InvalidJumpTarget(pc, pc);
    return code[pc];
  }

  // Function membership by pc range; anything outside every declared
  // range is grouped under a synthetic fallback function.
  std::string function_of(std::uint64_t pc) const {
    for (const auto& f : functions) {
      if (f.contains(pc)) return f.name;
    }
    return "@fallback";
  }

  const FunctionInfo* find_function(const std::string& name) const {
    for (const auto& f : functions) {
      if (f.name == name) return &f;
    }
    return nullptr;
  }
};

namespace detail {

inline std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

inline std::string strip_comment(const std::string& line) {
  auto pos = line.find('#');
  return pos == std::string::npos ? line : line.substr(0, pos);
}

}  // namespace detail

// Line-oriented assembly: one `MNEMONIC [immediate]` per line, `#`
// comments, labels declared as `@name:` and referenced as `@name`
// immediates. pcs are assigned sequentially from 0.
inline Program decode_program(const std::string& text) {
  struct RawLine {
    std::size_t lineno;
    std::string mnemonic;
    std::string operand;
  };

  std::vector<RawLine> raw;
  std::map<std::string, std::uint64_t> labels;

  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string body = detail::trim(detail::strip_comment(line));
    if (body.empty()) continue;
    if (body.front() == '@') {
      if (body.back() != ':')
        throw ParseError(lineno, "label declaration must end with ':'");
      std::string name = body.substr(0, body.size() - 1);
      if (labels.count(name))
        throw ParseError(lineno, "duplicate label " + name);
      labels[name] = raw.size();
      continue;
    }
    std::istringstream ls(body);
    RawLine rl;
    rl.lineno = lineno;
    ls >> rl.mnemonic >> rl.operand;
    std::string extra;
    if (ls >> extra) throw ParseError(lineno, "trailing tokens: " + extra);
    raw.push_back(rl);
  }

  if (raw.empty()) throw ParseError(0, "empty program");

  Program prog;
  prog.code.reserve(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    const auto& rl = raw[i];
    auto m = parse_mnemonic(rl.mnemonic);
    if (!m) throw UnknownOpcode(rl.mnemonic);
    Opcode op{*m, std::nullopt, false};
    if (!rl.operand.empty()) {
      if (rl.operand.front() == '@') {
        auto it = labels.find(rl.operand);
        if (it == labels.end())
          throw ParseError(rl.lineno, "unknown label " + rl.operand);
        op.immediate = Word(it->second);
        op.immediate_is_label = true;
      } else {
        try {
          op.immediate = word_from_hex(rl.operand);
        } catch (const std::exception&) {
          throw ParseError(rl.lineno, "bad immediate " + rl.operand);
        }
      }
    }
    if (*m == Mnemonic::PUSH && !op.immediate)
      throw ParseError(rl.lineno, "PUSH requires an immediate");
    prog.code.push_back(Instr{static_cast<std::uint64_t>(i), op});
  }

  // Concrete jump immediates must land on a real pc.
  for (const auto& ins : prog.code) {
    if (ins.op.immediate_is_label &&
        low_u64(*ins.op.immediate) >= prog.code.size()) {
      throw ParseError(0, "label resolves past end of program");
    }
  }
  return prog;
}

}  // namespace evmguard
