#pragma once

#include <algorithm>
#include <vector>

#include "orbitree/automaton.hpp"
#include "orbitree/budgets.hpp"
#include "orbitree/classify.hpp"
#include "orbitree/orbit_tree.hpp"
#include "orbitree/orbits.hpp"

// Cross-checks applied to whole census sweeps.  Each returns true when the
// invariant holds so callers can assert one line per item.
namespace census_checks {

using Verdict = orbitree::GroupClassification::Verdict;

// The dual is an involution and swaps invertibility with reversibility.
inline bool dual_involution_ok(const orbitree::MealyAutomaton& a) {
  orbitree::MealyAutomaton d = orbitree::dual(a);
  orbitree::MealyAutomaton dd = orbitree::dual(d);
  return dd.delta_table() == a.delta_table() &&
         dd.rho_table() == a.rho_table() &&
         orbitree::is_invertible(d) == orbitree::is_reversible(a) &&
         orbitree::is_reversible(d) == orbitree::is_invertible(a);
}

// A full-label edge at level n means the component there did not split, which
// pushes the connection degree past n.  With an exact degree known, no edge
// at or below the degree vertex may carry label |Q|.
inline bool no_full_label_below_degree(const orbitree::MealyAutomaton& a,
                                       const orbitree::Budgets& b) {
  orbitree::ConnectionDegree cd = orbitree::connection_degree(a, b);
  if (!cd.exact) return true;  // nothing checkable without an exact degree
  orbitree::OrbitTree tree(a, b);
  const int depth = std::min(b.tree_depth, cd.value + 3);
  std::vector<orbitree::NodeId> frontier{tree.root()};
  for (int level = 0; level < depth; ++level) {
    std::vector<orbitree::NodeId> next;
    for (const orbitree::NodeId& id : frontier)
      for (const orbitree::TreeEdge& e : tree.expand(id)) {
        if (e.level >= cd.value && e.label == a.num_states()) return false;
        next.push_back(e.child);
      }
    frontier = std::move(next);
  }
  return true;
}

// An automaton and its dual generate finite groups together, so definite
// verdicts on the two sides may never disagree.
inline bool dual_verdicts_consistent(const orbitree::MealyAutomaton& a,
                                     const orbitree::GroupClassification& got,
                                     const orbitree::Budgets& b) {
  orbitree::MealyAutomaton d = orbitree::dual(a);
  if (!orbitree::is_invertible(d)) return true;
  orbitree::GroupClassification dual_got = orbitree::classify_group(d, b);
  if (got.verdict == Verdict::Unknown || dual_got.verdict == Verdict::Unknown)
    return true;
  return got.verdict == dual_got.verdict;
}

// Isomorphic minimized powers certify a finite group, so an Infinite verdict
// must never coexist with such a pair.
inline bool minimized_powers_consistent(const orbitree::MealyAutomaton& a,
                                        const orbitree::GroupClassification& got,
                                        int max_power = 4) {
  if (!orbitree::is_invertible(a)) return true;
  if (got.verdict != Verdict::Infinite) return true;
  std::vector<orbitree::MealyAutomaton> mins;
  for (int p = 1; p <= max_power; ++p)
    mins.push_back(orbitree::minimize(orbitree::power(a, p)));
  for (std::size_t i = 0; i < mins.size(); ++i)
    for (std::size_t j = i + 1; j < mins.size(); ++j)
      if (orbitree::are_isomorphic(mins[i], mins[j])) return false;
  return true;
}

}  // namespace census_checks
