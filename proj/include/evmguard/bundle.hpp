#pragma once

#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "evmguard/concrete.hpp"
#include "evmguard/errors.hpp"
#include "evmguard/program.hpp"
#include "evmguard/word.hpp"

namespace evmguard {

// One entry of the pc -> source-span map. `node` is the syntactic kind
// of the mapped construct ("assignment", "condition", "call", ...).
struct SourceMapEntry {
  std::uint64_t pc = 0;
  std::size_t start = 0;
  std::size_t length = 0;
  std::string node;
};

// A transaction to drive the concrete interpreter during replay.
struct Transaction {
  std::map<Word, Word> calldata;
  Word origin = 0;
  Word caller = 0;
  std::vector<Word> call_results;

  ExecutionEnv to_env(const std::map<Word, Word>& storage) const {
    ExecutionEnv env;
    env.calldata = calldata;
    env.origin = origin;
    env.caller = caller;
    env.call_results = call_results;
    env.initial_storage = storage;
    return env;
  }
};

struct ContractBundle {
  std::string name;
  std::string assembly;
  std::string source;
  std::vector<SourceMapEntry> sourcemap;
  std::vector<FunctionInfo> functions;
  std::map<Word, Word> initial_storage;
  std::vector<Transaction> transactions;

  Program to_program() const {
    Program p = decode_program(assembly);
    p.functions = functions;
    return p;
  }

  const SourceMapEntry* map_entry(std::uint64_t pc) const {
    for (const auto& e : sourcemap) {
      if (e.pc == pc) return &e;
    }
    return nullptr;
  }
};

namespace detail {

inline Word json_word(const nlohmann::json& j) {
  if (j.is_number_unsigned()) return Word(j.get<std::uint64_t>());
  if (j.is_string()) return word_from_hex(j.get<std::string>());
  throw ParseError(0, "expected number or hex string");
}

inline std::map<Word, Word> json_word_map(const nlohmann::json& j) {
  std::map<Word, Word> out;
  for (auto it = j.begin(); it != j.end(); ++it) {
    out[word_from_hex(it.key())] = json_word(it.value());
  }
  return out;
}

}  // namespace detail

inline ContractBundle parse_bundle(const nlohmann::json& j) {
  ContractBundle b;
  b.name = j.value("name", "");
  if (!j.contains("assembly"))
    throw ParseError(0, "bundle is missing the assembly field");
  b.assembly = j.at("assembly").get<std::string>();
  b.source = j.value("source", "");

  for (const auto& e : j.value("sourcemap", nlohmann::json::array())) {
    SourceMapEntry entry;
    entry.pc = e.at("pc").get<std::uint64_t>();
    entry.start = e.at("start").get<std::size_t>();
    entry.length = e.at("length").get<std::size_t>();
    entry.node = e.value("node", "");
    b.sourcemap.push_back(entry);
  }

  for (const auto& f : j.value("functions", nlohmann::json::array())) {
    FunctionInfo fi;
    fi.name = f.at("name").get<std::string>();
    fi.pc_start = f.at("pc_start").get<std::uint64_t>();
    fi.pc_end = f.at("pc_end").get<std::uint64_t>();
    if (f.contains("params_end"))
      fi.params_end = f.at("params_end").get<std::size_t>();
    b.functions.push_back(fi);
  }

  if (j.contains("storage")) b.initial_storage = detail::json_word_map(j.at("storage"));

  for (const auto& t : j.value("transactions", nlohmann::json::array())) {
    Transaction tx;
    if (t.contains("calldata")) tx.calldata = detail::json_word_map(t.at("calldata"));
    if (t.contains("origin")) tx.origin = detail::json_word(t.at("origin"));
    if (t.contains("caller")) tx.caller = detail::json_word(t.at("caller"));
    for (const auto& r : t.value("call_results", nlohmann::json::array()))
      tx.call_results.push_back(detail::json_word(r));
    b.transactions.push_back(tx);
  }
  return b;
}

inline ContractBundle load_bundle(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(0, "cannot open bundle file " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(0, std::string("bad bundle JSON: ") + e.what());
  }
  return parse_bundle(j);
}

}  // namespace evmguard
