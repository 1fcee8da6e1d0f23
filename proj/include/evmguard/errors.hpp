#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace evmguard {

struct AnalysisError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ParseError : AnalysisError {
  ParseError(std::size_t line, const std::string& reason)
      : AnalysisError("parse error at line " + std::to_string(line) + ": " +
                      reason),
        line(line),
        reason(reason) {}
  std::size_t line;
  std::string reason;
};

struct UnknownOpcode : AnalysisError {
  explicit UnknownOpcode(const std::string& name)
      : AnalysisError("unknown opcode: " + name), name(name) {}
  std::string name;
};

struct StackUnderflow : AnalysisError {
  explicit StackUnderflow(std::uint64_t pc)
      : AnalysisError("stack underflow at pc " + std::to_string(pc)), pc(pc) {}
  std::uint64_t pc;
};

struct StackOverflow : AnalysisError {
  explicit StackOverflow(std::uint64_t pc)
      : AnalysisError("stack limit exceeded at pc " + std::to_string(pc)),
        pc(pc) {}
  std::uint64_t pc;
};

struct InvalidJumpTarget : AnalysisError {
  InvalidJumpTarget(std::uint64_t pc, std::uint64_t target)
      : AnalysisError("jump from pc " + std::to_string(pc) +
                      " to nonexistent pc " + std::to_string(target)),
        pc(pc),
        target(target) {}
  std::uint64_t pc;
  std::uint64_t target;
};

struct SymbolicJumpTarget : AnalysisError {
  explicit SymbolicJumpTarget(std::uint64_t pc)
      : AnalysisError("jump target at pc " + std::to_string(pc) +
                      " is not a concrete value"),
        pc(pc) {}
  std::uint64_t pc;
};

struct StepLimitExceeded : AnalysisError {
  explicit StepLimitExceeded(std::uint64_t limit)
      : AnalysisError("step limit of " + std::to_string(limit) + " exceeded"),
        limit(limit) {}
  std::uint64_t limit;
};

struct ArityMismatch : AnalysisError {
  using AnalysisError::AnalysisError;
};

struct TimeoutError : AnalysisError {
  explicit TimeoutError(double budget_seconds)
      : AnalysisError("analysis budget of " + std::to_string(budget_seconds) +
                      "s exceeded"),
        budget_seconds(budget_seconds) {}
  double budget_seconds;
};

struct EmptyTraceSet : AnalysisError {
  EmptyTraceSet() : AnalysisError("trace set is empty") {}
};

struct SpanConflict : AnalysisError {
  using AnalysisError::AnalysisError;
};

struct SpanOutOfBounds : AnalysisError {
  using AnalysisError::AnalysisError;
};

struct SanityCheckFailed : AnalysisError {
  using AnalysisError::AnalysisError;
};

struct UnmappedReport : AnalysisError {
  explicit UnmappedReport(std::uint64_t pc)
      : AnalysisError("no source span for pc " + std::to_string(pc)), pc(pc) {}
  std::uint64_t pc;
};

struct OracleBudgetExceeded : AnalysisError {
  using AnalysisError::AnalysisError;
};

struct DivergentRun : AnalysisError {
  using AnalysisError::AnalysisError;
};

}  // namespace evmguard
