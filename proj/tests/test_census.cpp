#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <set>
#include <string>
#include <vector>

#include "census_checks.hpp"
#include "corpus.hpp"
#include "orbitree/census.hpp"

using namespace orbitree;

namespace {

// Small per-item budgets: plenty for 1..3-state automata, quick in bulk.
Budgets census_budgets() {
  Budgets b;
  b.member_budget = 200'000;
  b.max_level = 6;
  b.tree_depth = 5;
  b.k_budget = 30;
  b.level_budget = 5;
  b.closure_elements = 500;
  b.closure_nodes = 300'000;
  b.enum_max_len = 4;
  return b;
}

std::vector<CensusItem> collect(const CensusOptions& opt,
                                CensusSummary* summary = nullptr) {
  std::vector<CensusItem> items;
  CensusSummary s =
      run_census(opt, [&](const CensusItem& it) { items.push_back(it); });
  if (summary) *summary = s;
  return items;
}

std::vector<std::string> json_dumps(const std::vector<CensusItem>& items) {
  std::vector<std::string> out;
  for (const CensusItem& it : items) out.push_back(it.to_json().dump());
  return out;
}

}  // namespace

TEST_CASE("two-state census over two letters") {
  CensusOptions opt;
  opt.num_states = 2;
  opt.num_letters = 2;
  opt.budgets = census_budgets();

  CensusSummary summary;
  std::vector<CensusItem> items = collect(opt, &summary);

  CHECK(summary.classes == 9);
  CHECK(summary.emitted == 9);
  CHECK(summary.finite == 8);
  CHECK(summary.infinite == 1);
  CHECK(summary.unknown == 0);
  CHECK(summary.unclassified == 0);
  CHECK_FALSE(summary.table_budget_hit);

  SECTION("items stream sorted, canonical, and fully flagged") {
    std::size_t connected = 0, bireversible = 0;
    for (std::size_t i = 0; i < items.size(); ++i) {
      const CensusItem& it = items[i];
      CHECK(it.index == i);
      if (i > 0) CHECK(items[i - 1].key < it.key);
      // Representatives are fixed points of canonicalization.
      CHECK(census_key_of(it.automaton) == it.key);
      CHECK(it.invertible);
      CHECK(it.reversible);
      connected += it.connected;
      bireversible += it.bireversible;
      REQUIRE(it.classification.has_value());
    }
    CHECK(connected == 6);
    CHECK(bireversible == 8);
  }

  SECTION("the single infinite class is the non-bireversible one") {
    std::vector<const CensusItem*> infinite;
    for (const CensusItem& it : items)
      if (it.classification->verdict == GroupClassification::Verdict::Infinite)
        infinite.push_back(&it);
    REQUIRE(infinite.size() == 1);
    const CensusItem& it = *infinite.front();
    CHECK(it.key == "0110|0110");
    CHECK_FALSE(it.bireversible);
    CHECK(it.classification->certificate.kind ==
          Certificate::Kind::NotBireversible);
    CHECK(verify_certificate(it.automaton, it.classification->certificate,
                             opt.budgets));
  }

  SECTION("every class passes the cross-checks") {
    for (const CensusItem& it : items) {
      INFO("class " << it.key);
      CHECK(census_checks::dual_involution_ok(it.automaton));
      CHECK(census_checks::no_full_label_below_degree(it.automaton,
                                                      opt.budgets));
      CHECK(census_checks::dual_verdicts_consistent(
          it.automaton, *it.classification, opt.budgets));
      CHECK(census_checks::minimized_powers_consistent(it.automaton,
                                                       *it.classification));
    }
  }

  SECTION("items serialize with their verdicts") {
    nlohmann::json j = items.front().to_json();
    CHECK(j.at("index") == 0);
    CHECK(j.at("states").size() == 2);
    CHECK(j.at("classification").at("verdict") == "Finite");
  }
}

TEST_CASE("three-state census over two letters") {
  CensusOptions opt;
  opt.num_states = 3;
  opt.num_letters = 2;
  opt.classify = false;

  CensusSummary summary;
  std::vector<CensusItem> items = collect(opt, &summary);

  CHECK(summary.classes == 42);
  CHECK(summary.unclassified == 42);
  std::size_t connected = 0;
  for (const CensusItem& it : items) {
    CHECK(it.invertible);
    CHECK(it.reversible);
    CHECK_FALSE(it.classification.has_value());
    connected += it.connected;
  }
  CHECK(connected == 26);

  SECTION("structural cross-checks hold classwise") {
    Budgets b = census_budgets();
    for (const CensusItem& it : items) {
      INFO("class " << it.key);
      CHECK(census_checks::dual_involution_ok(it.automaton));
      CHECK(census_checks::no_full_label_below_degree(it.automaton, b));
    }
  }

  SECTION("dualization is a bijection onto the transposed census") {
    CensusOptions t = opt;
    t.num_states = 2;
    t.num_letters = 3;
    std::vector<CensusItem> transposed = collect(t);
    REQUIRE(transposed.size() == items.size());
    std::set<std::string> dual_keys, transposed_keys;
    for (const CensusItem& it : items)
      dual_keys.insert(census_key_of(dual(it.automaton)));
    for (const CensusItem& it : transposed) transposed_keys.insert(it.key);
    CHECK(dual_keys == transposed_keys);
  }
}

TEST_CASE("single-state censuses classify finite") {
  // One-state classes are letter permutations up to conjugacy, i.e. integer
  // partitions of the alphabet size, and every such group is cyclic.
  const std::size_t expected_classes[] = {1, 2, 3};
  for (int na = 1; na <= 3; ++na) {
    CensusOptions opt;
    opt.num_states = 1;
    opt.num_letters = na;
    opt.budgets = census_budgets();
    CensusSummary summary;
    std::vector<CensusItem> items = collect(opt, &summary);
    INFO("alphabet size " << na);
    CHECK(summary.classes == expected_classes[na - 1]);
    CHECK(summary.finite == summary.classes);
    for (const CensusItem& it : items)
      CHECK(it.classification->verdict == GroupClassification::Verdict::Finite);
  }
}

TEST_CASE("disconnected three-letter census holds the bundled example") {
  CensusOptions opt;
  opt.num_states = 3;
  opt.num_letters = 3;
  opt.classify = false;
  opt.connected = false;

  std::vector<CensusItem> items = collect(opt);
  CHECK(items.size() == 185);
  for (const CensusItem& it : items) CHECK_FALSE(it.connected);

  const std::string a2_key = census_key_of(corpus::a2());
  bool found = false;
  for (const CensusItem& it : items) found |= it.key == a2_key;
  CHECK(found);
}

TEST_CASE("resume and worker runs reproduce the canonical stream") {
  CensusOptions opt;
  opt.num_states = 2;
  opt.num_letters = 2;
  opt.budgets = census_budgets();

  CensusSummary full_summary;
  std::vector<std::string> full = json_dumps(collect(opt, &full_summary));

  SECTION("resuming emits exactly the tail") {
    CensusOptions r = opt;
    r.resume_index = 4;
    CensusSummary s;
    std::vector<std::string> tail = json_dumps(collect(r, &s));
    CHECK(s.classes == full_summary.classes);
    REQUIRE(tail.size() == 5);
    for (std::size_t i = 0; i < tail.size(); ++i) CHECK(tail[i] == full[i + 4]);
  }

  SECTION("resuming past the end emits nothing") {
    CensusOptions r = opt;
    r.resume_index = 99;
    CensusSummary s;
    CHECK(collect(r, &s).empty());
    CHECK(s.classes == 9);
    CHECK(s.emitted == 0);
  }

  SECTION("a worker pool preserves order and tallies") {
    CensusOptions w = opt;
    w.workers = 3;
    CensusSummary s;
    std::vector<std::string> parallel = json_dumps(collect(w, &s));
    CHECK(parallel == full);
    CHECK(s.finite == full_summary.finite);
    CHECK(s.infinite == full_summary.infinite);
  }
}

TEST_CASE("census options are validated") {
  CensusOptions opt;
  opt.num_states = 4;
  CHECK_THROWS_AS(enumerate_census(opt), std::invalid_argument);
  opt.num_states = 2;
  opt.num_letters = 0;
  CHECK_THROWS_AS(enumerate_census(opt), std::invalid_argument);
}

TEST_CASE("the general scan honors its table budget") {
  CensusOptions opt;
  opt.num_states = 2;
  opt.num_letters = 2;
  opt.require_invertible = false;
  opt.require_reversible = false;
  opt.classify = false;

  CensusSummary s;
  std::vector<CensusItem> all = collect(opt, &s);
  CHECK(all.size() == 76);
  CHECK_FALSE(s.table_budget_hit);

  SECTION("a tight budget truncates the scan and reports it") {
    CensusOptions tight = opt;
    tight.table_budget = 100;
    CensusSummary ts;
    std::vector<CensusItem> some = collect(tight, &ts);
    CHECK(ts.table_budget_hit);
    CHECK(some.size() == 63);
  }

  SECTION("one-sided filters agree with the dual symmetry") {
    CensusOptions inv = opt;
    inv.require_invertible = true;
    CensusOptions rev = opt;
    rev.require_reversible = true;
    CHECK(collect(inv).size() == 24);
    CHECK(collect(rev).size() == 24);
  }
}
