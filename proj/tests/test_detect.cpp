#include <catch2/catch_amalgamated.hpp>

#include "support/helpers.hpp"

using namespace evmguard;
using testsupport::analyze_fixture;

namespace {

bool has_finding(const DetectionResult& d, VulnKind k, std::uint64_t crit,
                 std::uint64_t culprit) {
  for (const auto& f : d.findings) {
    if (f.kind == k && f.critical_pc == crit && f.culprit_pc == culprit)
      return true;
  }
  return false;
}

}  // namespace

TEST_CASE("state update after an external call is reentrancy") {
  auto a = analyze_fixture("reentrancy_withdraw.json");
  auto intra = a.detection.of_kind(VulnKind::IntraReentrancy);
  REQUIRE(intra.size() == 1);
  CHECK(intra[0].critical_pc == 15);
  CHECK(intra[0].culprit_pc == 21);
  CHECK(intra[0].critical_function == "withdraw");
  CHECK(intra[0].culprit_function == "withdraw");
  // The balance arithmetic behind the store is unchecked as well.
  CHECK(has_finding(a.detection, VulnKind::Arithmetic, 15, 19));
  CHECK(a.detection.of_kind(VulnKind::TxOrigin).empty());
}

TEST_CASE("state update before the call is not reentrancy") {
  auto a = analyze_fixture("safe_withdraw.json");
  CHECK(a.detection.of_kind(VulnKind::IntraReentrancy).empty());
  CHECK(a.detection.of_kind(VulnKind::CrossReentrancy).empty());
}

TEST_CASE("writes to the shared mapping in another function are flagged") {
  auto a = analyze_fixture("cross_reentrancy.json");
  auto cross = a.detection.of_kind(VulnKind::CrossReentrancy);
  REQUIRE(cross.size() == 2);
  for (const auto& f : cross) {
    CHECK(f.critical_function == "withdraw");
    CHECK(f.culprit_function == "transfer");
  }
  std::set<std::uint64_t> culprits{cross[0].culprit_pc, cross[1].culprit_pc};
  CHECK(culprits == std::set<std::uint64_t>{51, 64});
  // The intra-function case is still reported alongside.
  REQUIRE(a.detection.of_kind(VulnKind::IntraReentrancy).size() == 1);
}

TEST_CASE("origin-based authentication before a call") {
  auto a = analyze_fixture("tx_origin.json");
  auto origin = a.detection.of_kind(VulnKind::TxOrigin);
  REQUIRE(origin.size() == 1);
  CHECK(origin[0].critical_pc == 7);
  CHECK(origin[0].culprit_pc == 2);
  CHECK(origin[0].critical_function == "send");
  CHECK(a.detection.of_kind(VulnKind::IntraReentrancy).empty());
  CHECK(a.detection.of_kind(VulnKind::Arithmetic).empty());
}

TEST_CASE("read-only external calls raise nothing") {
  auto a = analyze_fixture("staticcall_negative.json");
  CHECK(a.detection.findings.empty());
}

TEST_CASE("constant-folded arithmetic is not a finding") {
  auto a = analyze_fixture("const_arith.json");
  CHECK(a.detection.findings.empty());
}

TEST_CASE("writes to an unrelated mapping after a call are fine") {
  auto a = analyze_fixture("disjoint_slots.json");
  CHECK(a.detection.findings.empty());
}

TEST_CASE("only call-reaching arithmetic is targeted for patching") {
  auto a = analyze_fixture("targeted_blanket.json");
  auto arith = a.detection.of_kind(VulnKind::Arithmetic);
  std::set<std::uint64_t> culprits;
  for (const auto& f : arith) culprits.insert(f.culprit_pc);
  CHECK(culprits == std::set<std::uint64_t>{4, 7});

  auto sites = patch_site_counts(a);
  CHECK(sites.targeted == 2);
  CHECK(sites.blanket == 5);
}

TEST_CASE("findings are deduplicated across traces") {
  auto a = analyze_fixture("cross_reentrancy.json");
  std::set<std::tuple<VulnKind, std::uint64_t, std::uint64_t>> keys;
  for (const auto& f : a.detection.findings) {
    CHECK(keys.insert({f.kind, f.critical_pc, f.culprit_pc}).second);
  }
}

TEST_CASE("loop fixture analyzes with the documented bound") {
  auto a = analyze_fixture("loop_bound.json");
  REQUIRE(a.traces.bounds.head_bounds.size() == 1);
  CHECK(a.traces.bounds.head_bounds.begin()->second == 5);
  CHECK_FALSE(a.traces.truncated);
  CHECK(a.detection.findings.empty());
}

TEST_CASE("path explosion aborts with a timeout") {
  AnalysisOptions opts;
  opts.timeout_seconds = 0.5;
  CHECK_THROWS_AS(analyze_fixture("explosion.json", opts), TimeoutError);
}
