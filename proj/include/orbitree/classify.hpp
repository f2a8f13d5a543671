#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "orbitree/automaton.hpp"
#include "orbitree/budgets.hpp"
#include "orbitree/errors.hpp"
#include "orbitree/orbit_tree.hpp"
#include "orbitree/orbits.hpp"
#include "orbitree/order.hpp"
#include "orbitree/words.hpp"

namespace orbitree {

// A verdict's self-contained justification.  `data` carries everything
// verify_certificate needs; verification never re-runs the search that
// produced the certificate, only the cheaper fact it rests on.
struct Certificate {
  enum class Kind {
    SemigroupClosure,      // finite: every distinct generated action listed
    NotBireversible,       // infinite: invertible-reversible, not bireversible
    AllSplitAtDegree,      // finite: total split below the degree vertex
    InfiniteOrderElement,  // infinite: a word together with its order evidence
    HeavyBranchEvidence,   // inconclusive: explored heavy-branch label prefix
  };

  Kind kind = Kind::HeavyBranchEvidence;
  std::string statement;  // the fact relied on, in plain words
  nlohmann::json data;

  static const char* kind_name(Kind k) {
    switch (k) {
      case Kind::SemigroupClosure: return "SemigroupClosure";
      case Kind::NotBireversible: return "NotBireversible";
      case Kind::AllSplitAtDegree: return "AllSplitAtDegree";
      case Kind::InfiniteOrderElement: return "InfiniteOrderElement";
      case Kind::HeavyBranchEvidence: return "HeavyBranchEvidence";
    }
    return "HeavyBranchEvidence";
  }

  static std::optional<Kind> kind_from_name(const std::string& name) {
    for (Kind k : {Kind::SemigroupClosure, Kind::NotBireversible,
                   Kind::AllSplitAtDegree, Kind::InfiniteOrderElement,
                   Kind::HeavyBranchEvidence})
      if (name == kind_name(k)) return k;
    return std::nullopt;
  }

  nlohmann::json to_json() const {
    return nlohmann::json{
        {"kind", kind_name(kind)}, {"statement", statement}, {"data", data}};
  }

  static Certificate from_json(const nlohmann::json& j) {
    auto k = kind_from_name(j.at("kind").get<std::string>());
    if (!k) throw std::invalid_argument("unknown certificate kind");
    Certificate c;
    c.kind = *k;
    c.statement = j.at("statement").get<std::string>();
    c.data = j.at("data");
    return c;
  }
};

struct GroupClassification {
  enum class Verdict { Finite, Infinite, Unknown };
  Verdict verdict = Verdict::Unknown;
  Certificate certificate;

  static const char* verdict_name(Verdict v) {
    switch (v) {
      case Verdict::Finite: return "Finite";
      case Verdict::Infinite: return "Infinite";
      case Verdict::Unknown: return "Unknown";
    }
    return "Unknown";
  }
};

struct InfiniteOrderSearch {
  enum class Outcome { Candidate, NotApplicable, NotFound };
  Outcome outcome = Outcome::NotFound;
  StateWord word;                      // set for Candidate
  OrderVerdict order;                  // AtLeast evidence for the candidate
  GrowthTrajectory growth;
  std::uint64_t growth_threshold = 0;
  bool proven = false;                 // true when infiniteness was certified
  std::string reason;                  // NotApplicable / NotFound explanation
};

namespace detail {

inline std::uint64_t pow3(int e) {
  std::uint64_t v = 1;
  for (int i = 0; i < e; ++i) v *= 3;
  return v;
}

inline nlohmann::json word_to_json(const MealyAutomaton& a,
                                   const StateWord& w) {
  nlohmann::json out = nlohmann::json::array();
  for (symbol_t q : w) out.push_back(a.state_names()[q]);
  return out;
}

inline StateWord word_from_json(const MealyAutomaton& a,
                                const nlohmann::json& j) {
  StateWord w;
  for (const auto& name : j) {
    auto q = a.state_index(name.get<std::string>());
    if (!q) throw UnknownStateError("unknown state in certificate");
    w.push_back(*q);
  }
  return w;
}

}  // namespace detail

// Searches for a word with strong infinite-order evidence: a cyclically
// orbital word whose powers up to k_budget all act nontrivially and whose
// orbit sizes outgrow 3^(degree + growth_offset).  When `certified_infinite`
// is set the caller has an independent infiniteness certificate, which
// upgrades the first candidate from evidence to a proven witness.
inline InfiniteOrderSearch find_infinite_order_element(
    const MealyAutomaton& a, const Budgets& b = Budgets{},
    bool certified_infinite = false) {
  InfiniteOrderSearch r;
  auto not_applicable = [&](std::string why) {
    r.outcome = InfiniteOrderSearch::Outcome::NotApplicable;
    r.reason = std::move(why);
    return r;
  };
  if (a.num_states() != 3) return not_applicable("stateset size is not 3");
  if (!is_invertible(a) || !is_reversible(a))
    return not_applicable("automaton is not invertible-reversible");
  if (!is_connected(a)) return not_applicable("automaton is disconnected");
  try {
    OrbitTree tree(a, b);
    auto red = tree.reduction_edge();
    if (red.kind == ReductionEdge::Kind::NotApplicable)
      return not_applicable(red.reason);
    if (red.kind == ReductionEdge::Kind::AllSplit)
      return not_applicable(
          "all children split at the degree vertex; the group is finite");
    auto gr = build_window_graph(tree);
    if (!gr.graph) return not_applicable(gr.not_applicable);
    r.growth_threshold = detail::pow3(red.degree + b.growth_offset);
    for (const StateWord& w :
         enumerate_cyclically_orbital(*gr.graph, b.enum_max_len)) {
      OrderVerdict order = element_order(a, w, b.k_budget, b);
      if (order.finite) continue;
      GrowthTrajectory growth = component_growth(a, w, b.level_budget, b);
      std::uint64_t peak = 0;
      for (std::uint64_t s : growth.sizes) peak = std::max(peak, s);
      if (peak <= r.growth_threshold) continue;
      r.outcome = InfiniteOrderSearch::Outcome::Candidate;
      r.word = w;
      r.order = std::move(order);
      r.growth = std::move(growth);
      r.proven = certified_infinite;
      return r;
    }
    r.reason = "no enumerated cyclically orbital word completed its evidence";
  } catch (const BudgetExceededError& e) {
    r.reason = std::string("budget exhausted: ") + e.what();
  }
  r.outcome = InfiniteOrderSearch::Outcome::NotFound;
  return r;
}

namespace detail {

inline Certificate not_bireversible_certificate(const MealyAutomaton& a) {
  Certificate c;
  c.kind = Certificate::Kind::NotBireversible;
  c.statement =
      "an invertible-reversible Mealy automaton that is not bireversible "
      "generates an infinite group";
  c.data = nlohmann::json{{"invertible", is_invertible(a)},
                          {"reversible", is_reversible(a)},
                          {"bireversible", is_bireversible(a)}};
  return c;
}

inline Certificate all_split_certificate(const ReductionEdge& red) {
  Certificate c;
  c.kind = Certificate::Kind::AllSplitAtDegree;
  c.statement =
      "every child of the connected vertex at the connection degree splits "
      "completely, so the generated group is finite";
  c.data = nlohmann::json{{"degree", red.degree},
                          {"child_labels", nlohmann::json::array({1, 1, 1})}};
  return c;
}

inline Certificate closure_certificate(const MealyAutomaton& a,
                                       const ClosureResult& cl) {
  Certificate c;
  c.kind = Certificate::Kind::SemigroupClosure;
  c.statement =
      "the generated semigroup has finitely many distinct actions, and the "
      "group generated by a Mealy automaton is finite exactly when the "
      "semigroup it generates is finite";
  nlohmann::json elems = nlohmann::json::array();
  for (const StateWord& w : cl.elements) elems.push_back(word_to_json(a, w));
  nlohmann::json gens = nlohmann::json::array();
  for (symbol_t g : cl.generators) gens.push_back(a.state_names()[g]);
  c.data = nlohmann::json{{"elements", std::move(elems)},
                          {"generators", std::move(gens)}};
  return c;
}

inline Certificate infinite_order_certificate(const MealyAutomaton& a,
                                              const InfiniteOrderSearch& s) {
  Certificate c;
  c.kind = Certificate::Kind::InfiniteOrderElement;
  c.statement =
      s.proven
          ? "a cyclically orbital word of a connected 3-state "
            "invertible-reversible automaton generating an infinite group "
            "acts with infinite order"
          : "evidence-grade witness: every tested power acts nontrivially "
            "and the orbit sizes grow past the configured threshold; no "
            "finite-time certificate of infinite order exists";
  c.data = nlohmann::json{{"word", word_to_json(a, s.word)},
                          {"k_tested", s.order.k},
                          {"nontrivial_powers", s.order.nontrivial_powers},
                          {"growth", s.growth.sizes},
                          {"growth_truncated", s.growth.truncated},
                          {"growth_threshold", s.growth_threshold},
                          {"evidence_grade", !s.proven}};
  return c;
}

inline Certificate heavy_branch_certificate(const MealyAutomaton& a,
                                            const Budgets& b,
                                            const std::string& note) {
  Certificate c;
  c.kind = Certificate::Kind::HeavyBranchEvidence;
  c.statement =
      "no finiteness or infiniteness certificate was reached within budget; "
      "the explored heavy-branch prefix is reported as evidence";
  nlohmann::json prefix = nlohmann::json::array();
  int depth = 0;
  try {
    OrbitTree tree(a, b);
    depth = std::min(b.tree_depth, 5);
    auto profile = tree.block_profile(depth);
    for (int label : profile.heavy_prefix) prefix.push_back(label);
  } catch (const BudgetExceededError&) {
    depth = 0;
    prefix = nlohmann::json::array();
  }
  c.data = nlohmann::json{
      {"depth", depth}, {"heavy_prefix", std::move(prefix)}, {"note", note}};
  return c;
}

}  // namespace detail

// Budgeted classification.  Finite verdicts come only from a closed
// semigroup or a total split at the degree vertex; Infinite verdicts only
// from the bireversibility criterion or an infinite-order witness; anything
// else is Unknown with the explored evidence attached.  Budget exhaustion in
// one stage falls through to the next, never into a wrong verdict.
inline GroupClassification classify_group(const MealyAutomaton& a,
                                          const Budgets& b = Budgets{}) {
  if (!is_invertible(a))
    throw NotInvertibleError("classification needs an invertible automaton");
  GroupClassification out;

  if (is_reversible(a) && !is_bireversible(a)) {
    out.verdict = GroupClassification::Verdict::Infinite;
    out.certificate = detail::not_bireversible_certificate(a);
    return out;
  }

  std::string note;
  if (a.num_states() == 3 && is_reversible(a) && is_connected(a)) {
    try {
      OrbitTree tree(a, b);
      auto red = tree.reduction_edge();
      if (red.kind == ReductionEdge::Kind::AllSplit) {
        out.verdict = GroupClassification::Verdict::Finite;
        out.certificate = detail::all_split_certificate(red);
        return out;
      }
    } catch (const BudgetExceededError& e) {
      note = std::string("split check: ") + e.what();
    }
  }

  try {
    ClosureResult cl = semigroup_closure(a, b);
    if (cl.closed) {
      out.verdict = GroupClassification::Verdict::Finite;
      out.certificate = detail::closure_certificate(a, cl);
      return out;
    }
    note = "semigroup closure still open at " +
           std::to_string(cl.elements.size()) + " elements";
  } catch (const BudgetExceededError& e) {
    note = std::string("semigroup closure: ") + e.what();
  }

  InfiniteOrderSearch s = find_infinite_order_element(a, b, false);
  if (s.outcome == InfiniteOrderSearch::Outcome::Candidate) {
    out.verdict = GroupClassification::Verdict::Infinite;
    out.certificate = detail::infinite_order_certificate(a, s);
    return out;
  }
  if (!s.reason.empty()) note += (note.empty() ? "" : "; ") + s.reason;

  out.verdict = GroupClassification::Verdict::Unknown;
  out.certificate = detail::heavy_branch_certificate(a, b, note);
  return out;
}

// Independent re-check of a certificate against the automaton it was issued
// for.  Returns false instead of throwing: an unverifiable certificate is an
// invalid one.
inline bool verify_certificate(const MealyAutomaton& a, const Certificate& c,
                               const Budgets& b = Budgets{}) {
  try {
    switch (c.kind) {
      case Certificate::Kind::NotBireversible: {
        if (!c.data.at("invertible").get<bool>() ||
            !c.data.at("reversible").get<bool>() ||
            c.data.at("bireversible").get<bool>())
          return false;
        return is_invertible(a) && is_reversible(a) && !is_bireversible(a);
      }
      case Certificate::Kind::AllSplitAtDegree: {
        if (a.num_states() != 3 || !is_invertible(a) || !is_reversible(a) ||
            !is_connected(a))
          return false;
        OrbitTree tree(a, b);
        auto red = tree.reduction_edge();
        return red.kind == ReductionEdge::Kind::AllSplit &&
               red.degree == c.data.at("degree").get<int>();
      }
      case Certificate::Kind::SemigroupClosure: {
        const auto& elems = c.data.at("elements");
        if (elems.empty()) return false;
        std::unordered_set<std::string> keys;
        std::vector<StateWord> words;
        for (const auto& e : elems) {
          StateWord w = detail::word_from_json(a, e);
          if (w.empty()) return false;
          if (!keys.insert(action_key(a, w, b)).second) return false;
          words.push_back(std::move(w));
        }
        for (symbol_t g = 0; g < a.num_states(); ++g)
          if (!keys.count(action_key(a, StateWord{g}, b))) return false;
        for (const StateWord& w : words)
          for (symbol_t g = 0; g < a.num_states(); ++g) {
            StateWord wg = w;
            wg.push_back(g);
            if (!keys.count(action_key(a, wg, b))) return false;
          }
        return true;
      }
      case Certificate::Kind::InfiniteOrderElement: {
        StateWord w = detail::word_from_json(a, c.data.at("word"));
        if (w.empty()) return false;
        int k = c.data.at("k_tested").get<int>();
        if (k < 1) return false;
        OrderVerdict order = element_order(a, w, k, b);
        if (order.finite) return false;
        std::uint64_t threshold =
            c.data.at("growth_threshold").get<std::uint64_t>();
        auto recorded = c.data.at("growth").get<std::vector<std::uint64_t>>();
        if (recorded.empty()) return false;
        GrowthTrajectory growth =
            component_growth(a, w, static_cast<int>(recorded.size()), b);
        if (growth.sizes != recorded) return false;
        std::uint64_t peak = 0;
        for (std::uint64_t s : growth.sizes) peak = std::max(peak, s);
        return peak > threshold;
      }
      case Certificate::Kind::HeavyBranchEvidence: {
        int depth = c.data.at("depth").get<int>();
        if (depth == 0) return true;  // nothing reproducible was recorded
        OrbitTree tree(a, b);
        auto profile = tree.block_profile(depth);
        nlohmann::json prefix = nlohmann::json::array();
        for (int label : profile.heavy_prefix) prefix.push_back(label);
        return prefix == c.data.at("heavy_prefix");
      }
    }
  } catch (...) {
    return false;
  }
  return false;
}

}  // namespace orbitree
