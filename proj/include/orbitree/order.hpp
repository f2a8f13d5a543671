#pragma once

#include <deque>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "orbitree/automaton.hpp"
#include "orbitree/budgets.hpp"
#include "orbitree/errors.hpp"
#include "orbitree/orbits.hpp"

namespace orbitree {

struct GrowthTrajectory {
  std::vector<std::uint64_t> sizes;  // entry n-1 = size of the orbit of u^n
  bool truncated = false;
};

struct OrderVerdict {
  bool finite = false;
  int k = 0;                            // Finite: the order; AtLeast: max tested
  std::uint64_t witness_closure = 0;    // Finite: triviality closure size
  std::vector<int> nontrivial_powers;   // AtLeast: every power tested
  GrowthTrajectory growth;              // AtLeast evidence (reversible inputs)
};

struct ClosureResult {
  bool closed = false;
  std::vector<StateWord> elements;      // shortlex reps, one per distinct action
  std::vector<symbol_t> generators;
  std::uint64_t nodes_spent = 0;
};

inline StateWord power_word(const StateWord& u, int n) {
  StateWord w;
  w.reserve(u.size() * static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) w.insert(w.end(), u.begin(), u.end());
  return w;
}

// Letter-level production row of the composite action of u.
inline std::vector<symbol_t> production_row(const MealyAutomaton& a,
                                            const StateWord& u) {
  std::vector<symbol_t> row(static_cast<std::size_t>(a.num_letters()));
  for (symbol_t j = 0; j < a.num_letters(); ++j) {
    symbol_t cur = j;
    for (symbol_t q : u) cur = a.rho(q, cur);
    row[j] = cur;
  }
  return row;
}

namespace detail {

inline bool is_identity_row(const std::vector<symbol_t>& row) {
  for (std::size_t j = 0; j < row.size(); ++j)
    if (row[j] != j) return false;
  return true;
}

// Closure of {u} under dual steps; nullopt as soon as one reached word does
// not act as the identity on letters.
inline std::optional<std::uint64_t> triviality_closure(
    const MealyAutomaton& a, const StateWord& u, std::uint64_t budget) {
  std::unordered_set<StateWord, WordHash> seen{u};
  std::deque<StateWord> queue{u};
  while (!queue.empty()) {
    StateWord w = std::move(queue.front());
    queue.pop_front();
    if (!is_identity_row(production_row(a, w))) return std::nullopt;
    for (symbol_t j = 0; j < a.num_letters(); ++j) {
      StateWord next = dual_step(a, j, w);
      if (seen.insert(next).second) {
        if (seen.size() > budget)
          throw BudgetExceededError("triviality closure budget", seen.size());
        queue.push_back(std::move(next));
      }
    }
  }
  return seen.size();
}

// Reachable action machine of u: one node per distinct state word in the
// dual-step closure, with per-letter successors and production rows.
struct ActionMachine {
  std::vector<StateWord> words;
  std::vector<std::vector<std::uint32_t>> next;  // [node][letter]
  std::vector<std::vector<symbol_t>> out;        // [node][letter]
};

inline ActionMachine action_machine(const MealyAutomaton& a,
                                    const StateWord& u, std::uint64_t budget) {
  ActionMachine m;
  std::unordered_map<StateWord, std::uint32_t, WordHash> index;
  index.emplace(u, 0);
  m.words.push_back(u);
  for (std::uint32_t i = 0; i < m.words.size(); ++i) {
    StateWord w = m.words[i];
    m.next.emplace_back();
    m.out.push_back(production_row(a, w));
    for (symbol_t j = 0; j < a.num_letters(); ++j) {
      StateWord s = dual_step(a, j, w);
      auto [it, fresh] = index.emplace(s, static_cast<std::uint32_t>(m.words.size()));
      if (fresh) {
        if (m.words.size() >= budget)
          throw BudgetExceededError("action closure budget", m.words.size());
        m.words.push_back(std::move(s));
      }
      m.next[i].push_back(it->second);
    }
  }
  return m;
}

// Canonical form of the minimized machine, BFS-numbered from u's class.
inline std::string canonical_action(const MealyAutomaton& a,
                                    const ActionMachine& m) {
  const std::size_t n = m.words.size();
  const int na = a.num_letters();
  std::vector<std::uint32_t> cls(n);
  {
    std::map<std::vector<symbol_t>, std::uint32_t> first;
    for (std::size_t i = 0; i < n; ++i)
      cls[i] = first.emplace(m.out[i], static_cast<std::uint32_t>(first.size()))
                   .first->second;
  }
  for (;;) {
    std::map<std::pair<std::uint32_t, std::vector<std::uint32_t>>, std::uint32_t>
        refine;
    std::vector<std::uint32_t> next_cls(n);
    for (std::size_t i = 0; i < n; ++i) {
      std::vector<std::uint32_t> sig;
      sig.reserve(static_cast<std::size_t>(na));
      for (int j = 0; j < na; ++j) sig.push_back(cls[m.next[i][static_cast<std::size_t>(j)]]);
      next_cls[i] =
          refine.emplace(std::make_pair(cls[i], std::move(sig)),
                         static_cast<std::uint32_t>(refine.size()))
              .first->second;
    }
    bool stable = true;
    for (std::size_t i = 0; i < n; ++i)
      if (next_cls[i] != cls[i]) {
        stable = false;
        break;
      }
    cls = std::move(next_cls);
    if (stable) break;
  }
  // BFS renumbering from the start class; every class is reachable.
  std::uint32_t nclasses = 0;
  for (std::uint32_t c : cls) nclasses = std::max(nclasses, c + 1);
  std::vector<std::uint32_t> rep(nclasses, 0);
  std::vector<bool> have(nclasses, false);
  for (std::size_t i = 0; i < n; ++i)
    if (!have[cls[i]]) {
      have[cls[i]] = true;
      rep[cls[i]] = static_cast<std::uint32_t>(i);
    }
  std::vector<std::uint32_t> order(nclasses, nclasses);
  std::vector<std::uint32_t> bfs{cls[0]};
  order[cls[0]] = 0;
  for (std::size_t h = 0; h < bfs.size(); ++h) {
    std::uint32_t node = rep[bfs[h]];
    for (int j = 0; j < na; ++j) {
      std::uint32_t c = cls[m.next[node][static_cast<std::size_t>(j)]];
      if (order[c] == nclasses) {
        order[c] = static_cast<std::uint32_t>(bfs.size());
        bfs.push_back(c);
      }
    }
  }
  std::string key = std::to_string(bfs.size());
  for (std::uint32_t c : bfs) {
    std::uint32_t node = rep[c];
    for (int j = 0; j < na; ++j) {
      key += '.';
      key += std::to_string(order[cls[m.next[node][static_cast<std::size_t>(j)]]]);
      key += '/';
      key += std::to_string(m.out[node][static_cast<std::size_t>(j)]);
    }
  }
  return key;
}

}  // namespace detail

// True iff the action of u is the identity on all of the letter tree.
inline bool is_trivial_action(const MealyAutomaton& a, const StateWord& u,
                              const Budgets& b = Budgets{}) {
  for (symbol_t s : u)
    if (s >= a.num_states()) throw UnknownStateError("state index out of range");
  return detail::triviality_closure(a, u, b.member_budget).has_value();
}

// True iff u and v induce the same action; synchronized closure over pairs.
inline bool actions_equal(const MealyAutomaton& a, const StateWord& u,
                          const StateWord& v, const Budgets& b = Budgets{}) {
  using Pair = std::pair<StateWord, StateWord>;
  struct PairHash {
    std::size_t operator()(const Pair& p) const noexcept {
      return WordHash{}(p.first) * 1000003 + WordHash{}(p.second);
    }
  };
  std::unordered_set<Pair, PairHash> seen{{u, v}};
  std::deque<Pair> queue{{u, v}};
  while (!queue.empty()) {
    auto [x, y] = std::move(queue.front());
    queue.pop_front();
    if (production_row(a, x) != production_row(a, y)) return false;
    for (symbol_t j = 0; j < a.num_letters(); ++j) {
      Pair next{dual_step(a, j, x), dual_step(a, j, y)};
      if (seen.insert(next).second) {
        if (seen.size() > b.member_budget)
          throw BudgetExceededError("action equality budget", seen.size());
        queue.push_back(std::move(next));
      }
    }
  }
  return true;
}

// Canonical key of the action of u; equal keys iff equal actions.
inline std::string action_key(const MealyAutomaton& a, const StateWord& u,
                              const Budgets& b = Budgets{}) {
  return detail::canonical_action(a, detail::action_machine(a, u, b.member_budget));
}

// Orbit sizes of u^n for n = 1..level_budget; partial and flagged when the
// level budget stops the scan early.
inline GrowthTrajectory component_growth(const MealyAutomaton& a,
                                         const StateWord& u, int level_budget,
                                         const Budgets& b = Budgets{}) {
  if (!is_reversible(a))
    throw std::invalid_argument("component growth needs a reversible automaton");
  GrowthTrajectory g;
  for (int n = 1; n <= level_budget; ++n) {
    try {
      g.sizes.push_back(component_of(a, power_word(u, n), b, false).size);
    } catch (const BudgetExceededError&) {
      g.truncated = true;
      break;
    }
  }
  return g;
}

// Finite(k) for the least k with trivial u^k, else AtLeast(k_budget) with the
// tested powers and the growth trajectory as evidence.
inline OrderVerdict element_order(const MealyAutomaton& a, const StateWord& u,
                                  int k_budget, const Budgets& b = Budgets{}) {
  if (u.empty()) throw std::invalid_argument("element order of the empty word");
  if (!is_invertible(a))
    throw NotInvertibleError("element order needs an invertible automaton");
  OrderVerdict v;
  for (int k = 1; k <= k_budget; ++k) {
    auto closure = detail::triviality_closure(a, power_word(u, k), b.member_budget);
    if (closure) {
      v.finite = true;
      v.k = k;
      v.witness_closure = *closure;
      return v;
    }
    v.nontrivial_powers.push_back(k);
  }
  v.finite = false;
  v.k = k_budget;
  if (is_reversible(a)) v.growth = component_growth(a, u, b.level_budget, b);
  return v;
}

// BFS over products of generators, deduplicated by canonical action key.
// Stops closed when no product adds a new action, or open on budget.
inline ClosureResult semigroup_closure(const MealyAutomaton& a,
                                       std::vector<symbol_t> generators,
                                       const Budgets& b = Budgets{}) {
  for (symbol_t g : generators)
    if (g >= a.num_states()) throw UnknownStateError("generator out of range");
  ClosureResult r;
  r.generators = generators;
  std::unordered_set<std::string> keys;
  std::deque<StateWord> queue;
  auto add = [&](StateWord w) {
    std::uint64_t left = b.closure_nodes > r.nodes_spent
                             ? b.closure_nodes - r.nodes_spent
                             : 0;
    std::uint64_t per_call = std::min<std::uint64_t>(b.member_budget, left);
    if (per_call == 0) throw BudgetExceededError("closure node budget", r.nodes_spent);
    auto machine = detail::action_machine(a, w, per_call);
    r.nodes_spent += machine.words.size();
    if (keys.insert(detail::canonical_action(a, machine)).second) {
      r.elements.push_back(w);
      queue.push_back(std::move(w));
    }
  };
  try {
    for (symbol_t g : generators) {
      if (r.elements.size() >= b.closure_elements) return r;
      add(StateWord{g});
    }
    while (!queue.empty()) {
      StateWord w = std::move(queue.front());
      queue.pop_front();
      for (symbol_t g : generators) {
        if (r.elements.size() >= b.closure_elements) return r;
        StateWord x = w;
        x.push_back(g);
        add(std::move(x));
      }
    }
  } catch (const BudgetExceededError&) {
    return r;  // open: budget spent before the frontier emptied
  }
  r.closed = true;
  return r;
}

inline ClosureResult semigroup_closure(const MealyAutomaton& a,
                                       const Budgets& b = Budgets{}) {
  std::vector<symbol_t> gens;
  for (symbol_t q = 0; q < a.num_states(); ++q) gens.push_back(q);
  return semigroup_closure(a, std::move(gens), b);
}

}  // namespace orbitree
