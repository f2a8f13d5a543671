#pragma once

#include <cstdint>
#include <optional>
#include <unordered_set>
#include <vector>

#include "orbitree/automaton.hpp"
#include "orbitree/budgets.hpp"
#include "orbitree/errors.hpp"

namespace orbitree {

// One step of the dual action: the letter runs through the state word from
// the left, each state is replaced by its delta image under the incoming
// letter and emits the rho image for the next position.
inline StateWord dual_step(const MealyAutomaton& a, symbol_t letter,
                           const StateWord& u) {
  StateWord out(u.size());
  symbol_t j = letter;
  for (std::size_t k = 0; k < u.size(); ++k) {
    out[k] = a.delta(u[k], j);
    j = a.rho(u[k], j);
  }
  return out;
}

// An orbit of the dual action on level-n state words.  `rep` is the
// lexicographically least member; `members` is sorted when materialized.
struct Component {
  int level = 0;
  std::uint64_t size = 0;
  StateWord rep;
  std::optional<std::vector<StateWord>> members;
};

// Exact(n): levels 1..n connected and level n+1 is not (n = 0 means level 1
// is already disconnected).  AtLeast(n): levels 1..n verified connected but
// the scan stopped on a budget or depth limit.
struct ConnectionDegree {
  bool exact = false;
  int value = 0;
};

namespace detail {

inline int bits_for(int nq) {
  int b = 1;
  while ((1 << b) < nq) ++b;
  return b;
}

// Big-endian symbol packing: numeric order of codes equals lexicographic
// order of equal-length words.
struct PackedWords {
  int bits;
  int len;
  std::uint64_t mask;

  static std::optional<PackedWords> make(int nq, int len) {
    int bits = bits_for(nq);
    if (len <= 0 || bits * len > 64) return std::nullopt;
    return PackedWords{bits, len, (bits == 64) ? ~0ULL : ((1ULL << bits) - 1)};
  }

  std::uint64_t pack(const StateWord& u) const {
    std::uint64_t code = 0;
    for (symbol_t s : u) code = (code << bits) | s;
    return code;
  }
  StateWord unpack(std::uint64_t code) const {
    StateWord u(static_cast<std::size_t>(len));
    for (int k = len - 1; k >= 0; --k) {
      u[k] = static_cast<symbol_t>(code & mask);
      code >>= bits;
    }
    return u;
  }
  std::uint64_t dual_step(const MealyAutomaton& a, symbol_t letter,
                          std::uint64_t code) const {
    std::uint64_t out = 0;
    symbol_t j = letter;
    for (int k = len - 1; k >= 0; --k) {
      symbol_t s = static_cast<symbol_t>((code >> (bits * k)) & mask);
      out = (out << bits) | a.delta(s, j);
      j = a.rho(s, j);
    }
    return out;
  }
};

inline std::uint64_t level_size_checked(int nq, int level,
                                        std::uint64_t limit) {
  std::uint64_t total = 1;
  for (int i = 0; i < level; ++i) {
    if (total > limit / static_cast<std::uint64_t>(nq) + 1)
      return limit + 1;
    total *= static_cast<std::uint64_t>(nq);
    if (total > limit) return limit + 1;
  }
  return total;
}

// Forward closure under dual steps.  Valid as an orbit for reversible
// automata, where every dual step permutes the level.
inline Component forward_orbit(const MealyAutomaton& a, const StateWord& u,
                               std::size_t member_budget, bool keep_members) {
  Component c;
  c.level = static_cast<int>(u.size());
  if (u.empty()) {
    c.size = 1;
    c.rep = {};
    if (keep_members) c.members = std::vector<StateWord>{{}};
    return c;
  }
  const int na = a.num_letters();
  if (auto codec = PackedWords::make(a.num_states(), c.level)) {
    std::unordered_set<std::uint64_t> seen;
    std::vector<std::uint64_t> queue;
    std::uint64_t start = codec->pack(u);
    seen.insert(start);
    queue.push_back(start);
    for (std::size_t head = 0; head < queue.size(); ++head) {
      std::uint64_t cur = queue[head];
      for (int j = 0; j < na; ++j) {
        std::uint64_t next = codec->dual_step(a, symbol_t(j), cur);
        if (seen.insert(next).second) {
          if (seen.size() > member_budget)
            throw BudgetExceededError("orbit exceeds member budget",
                                      seen.size());
          queue.push_back(next);
        }
      }
    }
    std::sort(queue.begin(), queue.end());
    c.size = queue.size();
    c.rep = codec->unpack(queue.front());
    if (keep_members) {
      std::vector<StateWord> members;
      members.reserve(queue.size());
      for (std::uint64_t code : queue) members.push_back(codec->unpack(code));
      c.members = std::move(members);
    }
    return c;
  }
  std::unordered_set<StateWord, WordHash> seen;
  std::vector<StateWord> queue;
  seen.insert(u);
  queue.push_back(u);
  for (std::size_t head = 0; head < queue.size(); ++head) {
    StateWord cur = queue[head];
    for (int j = 0; j < na; ++j) {
      StateWord next = dual_step(a, symbol_t(j), cur);
      if (seen.insert(next).second) {
        if (seen.size() > member_budget)
          throw BudgetExceededError("orbit exceeds member budget", seen.size());
        queue.push_back(next);
      }
    }
  }
  std::sort(queue.begin(), queue.end());
  c.size = queue.size();
  c.rep = queue.front();
  if (keep_members) c.members = std::move(queue);
  return c;
}

struct UnionFind {
  std::vector<std::uint32_t> parent;

  explicit UnionFind(std::size_t n) : parent(n) {
    for (std::size_t i = 0; i < n; ++i)
      parent[i] = static_cast<std::uint32_t>(i);
  }
  std::uint32_t find(std::uint32_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
  void unite(std::uint32_t a, std::uint32_t b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
};

// Equivalence closure of all dual-step edges over the full level; used when
// forward closure is not guaranteed to be symmetric.
inline std::vector<Component> level_partition(const MealyAutomaton& a,
                                              int level,
                                              std::size_t member_budget,
                                              bool keep_members) {
  const int nq = a.num_states(), na = a.num_letters();
  std::uint64_t total = level_size_checked(nq, level, member_budget);
  if (total > member_budget)
    throw BudgetExceededError("level exceeds member budget", total);
  if (level == 0) {
    Component c;
    c.level = 0;
    c.size = 1;
    c.rep = {};
    if (keep_members) c.members = std::vector<StateWord>{{}};
    return {c};
  }
  UnionFind uf(static_cast<std::size_t>(total));
  StateWord u(static_cast<std::size_t>(level), 0);
  auto rank = [&](const StateWord& w) {
    std::uint64_t r = 0;
    for (symbol_t s : w) r = r * nq + s;
    return static_cast<std::uint32_t>(r);
  };
  for (std::uint64_t idx = 0; idx < total; ++idx) {
    for (int j = 0; j < na; ++j)
      uf.unite(static_cast<std::uint32_t>(idx), rank(dual_step(a, symbol_t(j), u)));
    for (int k = level - 1; k >= 0; --k) {
      if (++u[k] < nq) break;
      u[k] = 0;
    }
  }
  std::vector<std::int64_t> group(static_cast<std::size_t>(total), -1);
  std::vector<Component> out;
  std::fill(u.begin(), u.end(), 0);
  for (std::uint64_t idx = 0; idx < total; ++idx) {
    std::uint32_t root = uf.find(static_cast<std::uint32_t>(idx));
    if (group[root] < 0) {
      group[root] = static_cast<std::int64_t>(out.size());
      Component c;
      c.level = level;
      c.rep = u;
      if (keep_members) c.members = std::vector<StateWord>{};
      out.push_back(std::move(c));
    }
    Component& c = out[static_cast<std::size_t>(group[root])];
    c.size += 1;
    if (keep_members) c.members->push_back(u);
    for (int k = level - 1; k >= 0; --k) {
      if (++u[k] < nq) break;
      u[k] = 0;
    }
  }
  return out;
}

}  // namespace detail

// Orbit of a single word.  Reversible automata use forward closure; others
// fall back to materializing the whole level.
inline Component component_of(const MealyAutomaton& a, const StateWord& u,
                              const Budgets& b = Budgets{},
                              bool keep_members = true) {
  for (symbol_t s : u)
    if (s >= a.num_states())
      throw UnknownStateError("state index out of range");
  if (is_reversible(a))
    return detail::forward_orbit(a, u, b.member_budget, keep_members);
  auto parts = detail::level_partition(a, static_cast<int>(u.size()),
                                       b.member_budget, true);
  for (auto& c : parts)
    if (std::binary_search(c.members->begin(), c.members->end(), u)) {
      if (!keep_members) c.members.reset();
      return c;
    }
  throw InconsistencyError("word missing from its own level");
}

// All orbits of the given level, sorted by representative.
inline std::vector<Component> components_at_level(const MealyAutomaton& a,
                                                  int level,
                                                  const Budgets& b = Budgets{},
                                                  bool keep_members = true) {
  if (level < 0) throw std::invalid_argument("level must be nonnegative");
  return detail::level_partition(a, level, b.member_budget, keep_members);
}

// Largest n such that every level up to n forms a single orbit.
inline ConnectionDegree connection_degree(const MealyAutomaton& a,
                                          const Budgets& b = Budgets{}) {
  const int nq = a.num_states();
  int verified = 0;
  StateWord u;
  for (int n = 1; n <= b.max_level; ++n) {
    std::uint64_t total = detail::level_size_checked(nq, n, b.member_budget);
    if (total > b.member_budget) return {false, verified};
    u.push_back(0);
    Component c = component_of(a, u, b, false);
    if (c.size < total) return {true, n - 1};
    verified = n;
  }
  return {false, verified};
}

// Orbits of one-letter extensions of the parent, paired with the ratio of
// child to parent size.  The ratios of one parent always sum to |Q| and the
// children come back sorted by representative.
inline std::vector<std::pair<Component, int>> child_components(
    const MealyAutomaton& a, const Component& parent,
    const Budgets& b = Budgets{}, bool keep_members = true) {
  const int nq = a.num_states();
  const std::vector<StateWord>* members = nullptr;
  Component recomputed;
  if (parent.members) {
    members = &*parent.members;
  } else {
    recomputed = component_of(a, parent.rep, b, true);
    members = &*recomputed.members;
  }
  if (parent.size == 0 || members->size() != parent.size)
    throw InconsistencyError("parent component has inconsistent size");

  std::unordered_set<StateWord, WordHash> assigned;
  std::vector<std::pair<Component, int>> out;
  std::uint64_t covered = 0;
  for (const StateWord& u : *members) {
    StateWord w = u;
    w.push_back(0);
    for (int q = 0; q < nq; ++q) {
      w.back() = static_cast<symbol_t>(q);
      if (assigned.count(w)) continue;
      Component c = component_of(a, w, b, true);
      if (c.size % parent.size != 0)
        throw InconsistencyError("child orbit size does not divide evenly");
      for (const StateWord& m : *c.members) assigned.insert(m);
      covered += c.size;
      int label = static_cast<int>(c.size / parent.size);
      if (!keep_members) c.members.reset();
      out.emplace_back(std::move(c), label);
    }
  }
  if (covered != parent.size * static_cast<std::uint64_t>(nq))
    throw InconsistencyError("children do not cover the parent extensions");
  return out;
}

}  // namespace orbitree
