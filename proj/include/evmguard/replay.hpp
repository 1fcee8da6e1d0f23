#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <vector>

#include "evmguard/bundle.hpp"
#include "evmguard/concrete.hpp"
#include "evmguard/errors.hpp"

namespace evmguard {

constexpr std::size_t kMaxReplayTransactions = 10;

struct TxReplay {
  std::optional<Mnemonic> halt_original;
  std::optional<Mnemonic> halt_fixed;
  std::uint64_t gas_original = 0;
  std::uint64_t gas_fixed = 0;
  // The fixed contract trapped or reverted where the original ran
  // through: an injected check fired.
  bool triggered = false;

  std::int64_t gas_overhead() const {
    return static_cast<std::int64_t>(gas_fixed) -
           static_cast<std::int64_t>(gas_original);
  }
};

struct ReplayOutcome {
  std::vector<TxReplay> transactions;
  std::uint64_t total_gas_original = 0;
  std::uint64_t total_gas_fixed = 0;
  std::size_t triggered_count = 0;

  // Relative gas overhead over the non-triggered transactions.
  double overhead_ratio() const {
    if (total_gas_original == 0) return 0.0;
    return static_cast<double>(total_gas_fixed) /
               static_cast<double>(total_gas_original) -
           1.0;
  }
};

namespace detail {

inline std::map<Word, Word> nonzero_slots(const std::map<Word, Word>& s) {
  std::map<Word, Word> out;
  for (const auto& [k, v] : s) {
    if (v != 0) out[k] = v;
  }
  return out;
}

inline bool reverting_halt(const std::optional<Mnemonic>& h) {
  return h && (*h == Mnemonic::REVERT || *h == Mnemonic::INVALID);
}

}  // namespace detail

// Runs the bundled transactions against the original and the fixed
// program side by side. Storage persists across transactions within
// each side. A transaction counts as triggered when only the fixed
// side rejects it; on triggered transactions the fixed storage is
// rolled back, everywhere else the two sides must agree on halting
// behaviour and on final storage (ignoring zero-valued slots, so the
// cleared mutex flag does not count as a difference).
inline ReplayOutcome replay_bundles(const ContractBundle& original,
                                    const ContractBundle& fixed,
                                    const GasTable& gas = GasTable{},
                                    std::uint64_t step_limit = 100000) {
  if (original.transactions.size() > kMaxReplayTransactions)
    throw AnalysisError("too many replay transactions");

  Program prog_orig = original.to_program();
  Program prog_fixed = fixed.to_program();

  std::map<Word, Word> storage_orig = original.initial_storage;
  std::map<Word, Word> storage_fixed = fixed.initial_storage;

  ReplayOutcome outcome;
  for (const Transaction& tx : original.transactions) {
    ExecutionEnv env_orig = tx.to_env(storage_orig);
    ExecutionEnv env_fixed = tx.to_env(storage_fixed);

    ConcreteRun run_orig =
        run_concrete(prog_orig, env_orig, step_limit, gas);
    ConcreteRun run_fixed =
        run_concrete(prog_fixed, env_fixed, step_limit, gas);
    if (run_orig.step_limit_hit || run_fixed.step_limit_hit)
      throw StepLimitExceeded(step_limit);

    TxReplay r;
    r.halt_original = run_orig.halt;
    r.halt_fixed = run_fixed.halt;
    r.gas_original = run_orig.gas_used;
    r.gas_fixed = run_fixed.gas_used;
    r.triggered = detail::reverting_halt(run_fixed.halt) &&
                  !detail::reverting_halt(run_orig.halt);

    bool orig_reverted = detail::reverting_halt(run_orig.halt);
    if (!orig_reverted) storage_orig = run_orig.final_state.storage;
    if (!detail::reverting_halt(run_fixed.halt))
      storage_fixed = run_fixed.final_state.storage;

    if (r.triggered) {
      ++outcome.triggered_count;
    } else {
      if (detail::reverting_halt(run_orig.halt) !=
          detail::reverting_halt(run_fixed.halt))
        throw DivergentRun("fixed contract accepts what the original rejects");
      if (detail::nonzero_slots(storage_orig) !=
          detail::nonzero_slots(storage_fixed))
        throw DivergentRun("storage diverges on an untriggered transaction");
      outcome.total_gas_original += r.gas_original;
      outcome.total_gas_fixed += r.gas_fixed;
    }
    outcome.transactions.push_back(r);
  }
  return outcome;
}

}  // namespace evmguard
