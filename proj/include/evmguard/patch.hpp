#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "evmguard/bundle.hpp"
#include "evmguard/detect.hpp"
#include "evmguard/errors.hpp"
#include "evmguard/safemath.hpp"

namespace evmguard {

enum class EditKind {
  InsertModifier,
  WrapCallOpen,    // "name(" at the start of an expression span
  WrapCallComma,   // the infix operator replaced by ", "
  WrapCallClose,   // ")" at the end of the span
  ReplaceIdentifier,
  InjectHelper,
};

struct SourceEdit {
  EditKind kind;
  std::size_t pos = 0;
  std::size_t erase = 0;
  std::string text;
  // Width of the expression span the edit belongs to; at equal
  // positions the narrower (inner) span is applied first so wrappers
  // nest correctly.
  std::size_t span_width = 0;
  std::string note;
};

struct PatchPlan {
  std::vector<SourceEdit> edits;

  nlohmann::json to_json() const {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& e : edits) {
      const char* kind = "";
      switch (e.kind) {
        case EditKind::InsertModifier: kind = "insert-modifier"; break;
        case EditKind::WrapCallOpen: kind = "wrap-call-open"; break;
        case EditKind::WrapCallComma: kind = "wrap-call-comma"; break;
        case EditKind::WrapCallClose: kind = "wrap-call-close"; break;
        case EditKind::ReplaceIdentifier: kind = "replace-identifier"; break;
        case EditKind::InjectHelper: kind = "inject-helper"; break;
      }
      arr.push_back({{"kind", kind},
                     {"pos", e.pos},
                     {"erase", e.erase},
                     {"text", e.text},
                     {"note", e.note}});
    }
    return arr;
  }
};

namespace detail {

// Position of the top-level infix operator inside the expression text.
// With left-associative operators the outermost application is the
// rightmost operator at bracket depth zero.
inline std::size_t find_top_level_operator(const std::string& expr,
                                           std::string_view op,
                                           std::uint64_t pc) {
  int depth = 0;
  std::size_t found = std::string::npos;
  for (std::size_t i = 0; i < expr.size(); ++i) {
    char c = expr[i];
    if (c == '(' || c == '[') ++depth;
    else if (c == ')' || c == ']') --depth;
    if (depth != 0) continue;
    if (expr.compare(i, op.size(), op) != 0) continue;
    // A lone '*' must not match half of '**'.
    if (op == "*" &&
        ((i + 1 < expr.size() && expr[i + 1] == '*') ||
         (i > 0 && expr[i - 1] == '*')))
      continue;
    found = i;
    if (op == "**") ++i;
  }
  if (found == std::string::npos)
    throw UnmappedReport(pc);
  return found;
}

}  // namespace detail

inline PatchPlan build_patch_plan(const ContractBundle& bundle,
                                  const Program& program,
                                  const DetectionResult& detection) {
  PatchPlan plan;
  std::set<Mnemonic> helpers_needed;
  bool mutex_needed = false;
  std::set<std::uint64_t> wrapped_pcs;
  std::set<std::uint64_t> replaced_pcs;
  std::set<std::string> guarded;

  for (const Finding& f : detection.findings) {
    switch (f.kind) {
      case VulnKind::Arithmetic: {
        if (!wrapped_pcs.insert(f.culprit_pc).second) break;
        const SourceMapEntry* map = bundle.map_entry(f.culprit_pc);
        if (!map) throw UnmappedReport(f.culprit_pc);
        if (map->start + map->length > bundle.source.size())
          throw SpanOutOfBounds("arithmetic span past end of source");
        Mnemonic m = program.at(f.culprit_pc).op.mnemonic;
        std::string expr = bundle.source.substr(map->start, map->length);
        std::size_t op_at = detail::find_top_level_operator(
            expr, helper_operator(m), f.culprit_pc);
        std::size_t op_len = helper_operator(m).size();
        // Swallow the spaces around the operator into the comma.
        std::size_t lo = op_at, hi = op_at + op_len;
        while (lo > 0 && expr[lo - 1] == ' ') --lo;
        while (hi < expr.size() && expr[hi] == ' ') ++hi;

        std::string open(helper_name(m));
        open += '(';
        plan.edits.push_back({EditKind::WrapCallOpen, map->start, 0, open,
                              map->length, std::string(helper_name(m))});
        plan.edits.push_back({EditKind::WrapCallComma, map->start + lo,
                              hi - lo, ", ", map->length, ""});
        plan.edits.push_back({EditKind::WrapCallClose,
                              map->start + map->length, 0, ")", map->length,
                              ""});
        helpers_needed.insert(m);
        if (m == Mnemonic::EXP) helpers_needed.insert(Mnemonic::MUL);
        break;
      }
      case VulnKind::TxOrigin: {
        if (!replaced_pcs.insert(f.culprit_pc).second) break;
        const SourceMapEntry* map = bundle.map_entry(f.culprit_pc);
        if (!map) throw UnmappedReport(f.culprit_pc);
        plan.edits.push_back({EditKind::ReplaceIdentifier, map->start,
                              map->length, "msg.sender", map->length,
                              "tx.origin"});
        break;
      }
      case VulnKind::IntraReentrancy:
      case VulnKind::CrossReentrancy: {
        for (const std::string& fn :
             {f.critical_function, f.culprit_function}) {
          if (!guarded.insert(fn).second) continue;
          const FunctionInfo* info = program.find_function(fn);
          if (!info || !info->params_end)
            throw UnmappedReport(f.critical_pc);
          plan.edits.push_back({EditKind::InsertModifier, *info->params_end,
                                0, " nonReentrant", 0, fn});
          mutex_needed = true;
        }
        break;
      }
    }
  }

  if (mutex_needed || !helpers_needed.empty()) {
    std::size_t close = bundle.source.rfind('}');
    if (close == std::string::npos)
      throw SpanOutOfBounds("source has no closing brace");
    std::string block = "\n";
    if (mutex_needed) block += mutex_definition();
    for (Mnemonic m : helpers_needed) block += helper_definition(m);
    plan.edits.push_back({EditKind::InjectHelper, close, 0, block, 0,
                          "helpers"});
  }
  return plan;
}

inline std::string apply_patch(const std::string& source,
                               const PatchPlan& plan) {
  std::vector<SourceEdit> edits = plan.edits;
  for (const auto& e : edits) {
    if (e.pos > source.size() || e.pos + e.erase > source.size())
      throw SpanOutOfBounds("edit past end of source");
  }
  // Replacements must not overlap each other.
  std::vector<std::pair<std::size_t, std::size_t>> spans;
  for (const auto& e : edits) {
    if (e.erase > 0) spans.emplace_back(e.pos, e.pos + e.erase);
  }
  std::sort(spans.begin(), spans.end());
  for (std::size_t i = 1; i < spans.size(); ++i) {
    if (spans[i].first < spans[i - 1].second)
      throw SpanConflict("overlapping source edits");
  }

  // Apply back to front so earlier offsets stay valid; at equal
  // positions inner spans go first so outer wrappers end up outside.
  std::stable_sort(edits.begin(), edits.end(),
                   [](const SourceEdit& a, const SourceEdit& b) {
                     if (a.pos != b.pos) return a.pos > b.pos;
                     return a.span_width < b.span_width;
                   });
  std::string out = source;
  for (const auto& e : edits) out.replace(e.pos, e.erase, e.text);
  return out;
}

// Structural checks on the patched text: brackets stay balanced and
// every helper the patch calls is also defined.
inline void sanity_check(const std::string& patched, const PatchPlan& plan) {
  long paren = 0, brace = 0, bracket = 0;
  for (char c : patched) {
    if (c == '(') ++paren;
    if (c == ')') --paren;
    if (c == '{') ++brace;
    if (c == '}') --brace;
    if (c == '[') ++bracket;
    if (c == ']') --bracket;
    if (paren < 0 || brace < 0 || bracket < 0)
      throw SanityCheckFailed("unbalanced brackets after patching");
  }
  if (paren != 0 || brace != 0 || bracket != 0)
    throw SanityCheckFailed("unbalanced brackets after patching");

  std::set<std::string> referenced;
  bool mutex_used = false;
  for (const auto& e : plan.edits) {
    if (e.kind == EditKind::WrapCallOpen)
      referenced.insert(e.text.substr(0, e.text.size() - 1));
    if (e.kind == EditKind::InsertModifier) mutex_used = true;
  }
  for (const auto& name : referenced) {
    if (patched.find("function " + name + "(") == std::string::npos)
      throw SanityCheckFailed("helper " + name + " is called but not defined");
  }
  if (mutex_used &&
      patched.find("modifier nonReentrant()") == std::string::npos)
    throw SanityCheckFailed("nonReentrant modifier used but not defined");
}

}  // namespace evmguard
