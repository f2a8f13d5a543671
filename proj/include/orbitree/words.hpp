#pragma once

#include <algorithm>
#include <deque>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "orbitree/automaton.hpp"
#include "orbitree/budgets.hpp"
#include "orbitree/errors.hpp"
#include "orbitree/orbit_tree.hpp"
#include "orbitree/order.hpp"

#include <nlohmann/json.hpp>

namespace orbitree {

// Overlap graph of the allowed windows: an edge appends one letter and drops
// the first.  Built from the reduction orbit; also constructible from an
// arbitrary window set for diagnostic use.
struct WindowGraph {
  int window_length = 0;
  int num_states = 0;
  std::vector<std::string> state_names;
  std::vector<StateWord> windows;                  // sorted
  std::vector<std::vector<std::uint32_t>> succ;    // successor node indices
  std::vector<std::vector<symbol_t>> succ_letter;  // appended letters
  std::vector<std::uint32_t> scc_id;
  std::vector<bool> scc_terminal;                  // indexed by scc id
  std::vector<bool> recurrent;                     // node lies on a cycle

  std::optional<std::uint32_t> index_of(const StateWord& win) const {
    auto it = std::lower_bound(windows.begin(), windows.end(), win);
    if (it == windows.end() || *it != win) return std::nullopt;
    return static_cast<std::uint32_t>(it - windows.begin());
  }

  std::string window_name(std::uint32_t i) const {
    std::string out;
    for (symbol_t s : windows[i]) out += state_names[s];
    return out;
  }

  nlohmann::json to_json() const {
    nlohmann::json nodes = nlohmann::json::array();
    nlohmann::json edges = nlohmann::json::array();
    nlohmann::json rec = nlohmann::json::array();
    for (std::uint32_t i = 0; i < windows.size(); ++i) {
      nodes.push_back(window_name(i));
      if (recurrent[i]) rec.push_back(window_name(i));
      for (std::size_t k = 0; k < succ[i].size(); ++k)
        edges.push_back({{"from", window_name(i)},
                         {"to", window_name(succ[i][k])},
                         {"letter", state_names[succ_letter[i][k]]}});
    }
    return {{"window_length", window_length},
            {"windows", nodes},
            {"edges", edges},
            {"recurrent", rec}};
  }

  std::string to_dot() const {
    std::string out = "digraph window_graph {\n  rankdir=LR;\n";
    for (std::uint32_t i = 0; i < windows.size(); ++i) {
      out += "  \"" + window_name(i) + "\"";
      if (recurrent[i]) out += " [penwidth=2]";
      out += ";\n";
    }
    for (std::uint32_t i = 0; i < windows.size(); ++i)
      for (std::size_t k = 0; k < succ[i].size(); ++k)
        out += "  \"" + window_name(i) + "\" -> \"" +
               window_name(succ[i][k]) + "\" [label=\"" +
               state_names[succ_letter[i][k]] + "\"];\n";
    out += "}\n";
    return out;
  }
};

struct WindowGraphResult {
  std::optional<WindowGraph> graph;
  std::string not_applicable;  // set when no graph is produced
};

struct OrbitalWord {
  StateWord word;
  std::vector<std::uint32_t> windows;  // validity witness, empty for short words
};

namespace detail {

// Iterative Tarjan over the successor lists.
inline void window_sccs(WindowGraph& g) {
  const std::uint32_t n = static_cast<std::uint32_t>(g.windows.size());
  const std::uint32_t none = n == 0 ? 1 : n + 1;
  std::vector<std::uint32_t> index(n, none), low(n, 0);
  std::vector<bool> on_stack(n, false);
  std::vector<std::uint32_t> stack;
  std::vector<std::uint32_t> comp(n, 0);
  std::uint32_t counter = 0, ncomp = 0;

  struct Frame {
    std::uint32_t node;
    std::size_t edge;
  };
  for (std::uint32_t start = 0; start < n; ++start) {
    if (index[start] != none) continue;
    std::vector<Frame> frames{{start, 0}};
    index[start] = low[start] = counter++;
    stack.push_back(start);
    on_stack[start] = true;
    while (!frames.empty()) {
      Frame& f = frames.back();
      if (f.edge < g.succ[f.node].size()) {
        std::uint32_t next = g.succ[f.node][f.edge++];
        if (index[next] == none) {
          index[next] = low[next] = counter++;
          stack.push_back(next);
          on_stack[next] = true;
          frames.push_back({next, 0});
        } else if (on_stack[next]) {
          low[f.node] = std::min(low[f.node], index[next]);
        }
      } else {
        if (low[f.node] == index[f.node]) {
          for (;;) {
            std::uint32_t v = stack.back();
            stack.pop_back();
            on_stack[v] = false;
            comp[v] = ncomp;
            if (v == f.node) break;
          }
          ++ncomp;
        }
        std::uint32_t done = f.node;
        frames.pop_back();
        if (!frames.empty())
          low[frames.back().node] =
              std::min(low[frames.back().node], low[done]);
      }
    }
  }
  g.scc_id = std::move(comp);
  g.scc_terminal.assign(ncomp, true);
  std::vector<std::uint32_t> size(ncomp, 0);
  std::vector<bool> has_loop(ncomp, false);
  for (std::uint32_t v = 0; v < n; ++v) {
    ++size[g.scc_id[v]];
    for (std::uint32_t t : g.succ[v]) {
      if (g.scc_id[t] != g.scc_id[v]) g.scc_terminal[g.scc_id[v]] = false;
      if (t == v) has_loop[g.scc_id[v]] = true;
    }
  }
  g.recurrent.assign(n, false);
  for (std::uint32_t v = 0; v < n; ++v)
    g.recurrent[v] = size[g.scc_id[v]] > 1 || has_loop[g.scc_id[v]];
}

}  // namespace detail

// Graph over an explicit window set; no degree checks (diagnostic inputs may
// violate the genuine out-degree invariant on purpose).
inline WindowGraph window_graph_from(const MealyAutomaton& a,
                                     std::vector<StateWord> windows,
                                     int window_length) {
  WindowGraph g;
  g.window_length = window_length;
  g.num_states = a.num_states();
  g.state_names = a.state_names();
  std::sort(windows.begin(), windows.end());
  windows.erase(std::unique(windows.begin(), windows.end()), windows.end());
  g.windows = std::move(windows);
  g.succ.resize(g.windows.size());
  g.succ_letter.resize(g.windows.size());
  for (std::uint32_t i = 0; i < g.windows.size(); ++i) {
    StateWord shifted(g.windows[i].begin() + 1, g.windows[i].end());
    shifted.push_back(0);
    for (symbol_t c = 0; c < a.num_states(); ++c) {
      shifted.back() = c;
      if (auto j = g.index_of(shifted)) {
        g.succ[i].push_back(*j);
        g.succ_letter[i].push_back(c);
      }
    }
  }
  detail::window_sccs(g);
  return g;
}

// Windows are the members of the reduction orbit, one level below the
// connection degree; every node must have out-degree exactly 2.
inline WindowGraphResult build_window_graph(OrbitTree& tree) {
  WindowGraphResult out;
  ReductionEdge r = tree.reduction_edge();
  if (r.kind == ReductionEdge::Kind::AllSplit) {
    out.not_applicable = "all children split at the degree vertex";
    return out;
  }
  if (r.kind == ReductionEdge::Kind::NotApplicable) {
    out.not_applicable = r.reason;
    return out;
  }
  const Component& bottom = tree.node(r.edge->child);
  if (!bottom.members)
    throw BudgetExceededError("reduction orbit not materialized", bottom.size);
  WindowGraph g = window_graph_from(tree.automaton(), *bottom.members,
                                    r.degree + 1);
  for (std::uint32_t i = 0; i < g.windows.size(); ++i)
    if (g.succ[i].size() != 2)
      throw InconsistencyError("window out-degree is not 2");
  out.graph = std::move(g);
  return out;
}

// Every length-w factor must be allowed; shorter words must occur inside
// some allowed window (the vacuous reading would break factor-closedness).
inline bool is_orbital(const WindowGraph& g, const StateWord& u) {
  const std::size_t w = static_cast<std::size_t>(g.window_length);
  if (u.size() < w) {
    if (u.empty()) return true;
    for (const StateWord& win : g.windows)
      for (std::size_t off = 0; off + u.size() <= win.size(); ++off)
        if (std::equal(u.begin(), u.end(), win.begin() + static_cast<long>(off)))
          return true;
    return false;
  }
  for (std::size_t off = 0; off + w <= u.size(); ++off) {
    StateWord win(u.begin() + static_cast<long>(off),
                  u.begin() + static_cast<long>(off + w));
    if (!g.index_of(win)) return false;
  }
  return true;
}

inline std::optional<OrbitalWord> make_orbital(const WindowGraph& g,
                                               const StateWord& u) {
  if (!is_orbital(g, u)) return std::nullopt;
  OrbitalWord o;
  o.word = u;
  const std::size_t w = static_cast<std::size_t>(g.window_length);
  for (std::size_t off = 0; off + w <= u.size(); ++off) {
    StateWord win(u.begin() + static_cast<long>(off),
                  u.begin() + static_cast<long>(off + w));
    o.windows.push_back(*g.index_of(win));
  }
  return o;
}

// Wraparound windows: factors of u repeated, truncated to |u| + w - 1.
inline bool is_cyclically_orbital(const WindowGraph& g, const StateWord& u) {
  if (u.empty()) return false;
  const std::size_t w = static_cast<std::size_t>(g.window_length);
  StateWord ext;
  while (ext.size() < u.size() + w - 1)
    ext.insert(ext.end(), u.begin(), u.end());
  ext.resize(u.size() + w - 1);
  return is_orbital(g, ext);
}

// Primitive cyclic words up to max_len, one representative per rotation
// class (the least rotation), in length-then-lexicographic order.
inline std::vector<StateWord> enumerate_cyclically_orbital(
    const WindowGraph& g, int max_len) {
  std::vector<StateWord> out;
  const int nq = g.num_states;
  for (int len = 1; len <= max_len; ++len) {
    StateWord u(static_cast<std::size_t>(len), 0);
    for (;;) {
      bool least = true;
      for (int r = 1; r < len && least; ++r) {
        StateWord rot(u.begin() + r, u.end());
        rot.insert(rot.end(), u.begin(), u.begin() + r);
        if (rot < u) least = false;
      }
      bool primitive = true;
      for (int d = 1; d < len && primitive; ++d) {
        if (len % d != 0) continue;
        bool repeats = true;
        for (int i = d; i < len && repeats; ++i)
          if (u[static_cast<std::size_t>(i)] !=
              u[static_cast<std::size_t>(i - d)])
            repeats = false;
        if (repeats) primitive = false;
      }
      if (least && primitive && is_cyclically_orbital(g, u)) out.push_back(u);
      int pos = len - 1;
      while (pos >= 0 && u[static_cast<std::size_t>(pos)] == nq - 1)
        u[static_cast<std::size_t>(pos--)] = 0;
      if (pos < 0) break;
      ++u[static_cast<std::size_t>(pos)];
    }
  }
  return out;
}

namespace detail {

// Walk positions are the (w-1)-suffixes; stepping appends one letter when
// the induced window is allowed.
inline std::vector<symbol_t> position_options(const WindowGraph& g,
                                              const StateWord& pos) {
  std::vector<symbol_t> out;
  StateWord win = pos;
  win.push_back(0);
  for (symbol_t c = 0; c < g.num_states; ++c) {
    win.back() = c;
    if (g.index_of(win)) out.push_back(c);
  }
  return out;
}

inline StateWord advance_position(const StateWord& pos, symbol_t c) {
  StateWord next(pos.begin() + 1, pos.end());
  next.push_back(c);
  return next;
}

// Shortest letter word from `from` to a position satisfying `goal`;
// deterministic via ascending letter expansion.
template <typename Goal>
std::optional<std::pair<StateWord, StateWord>> position_walk(
    const WindowGraph& g, const StateWord& from, Goal goal) {
  std::map<StateWord, std::pair<StateWord, symbol_t>> parent;
  std::deque<StateWord> queue{from};
  parent.emplace(from, std::make_pair(StateWord{}, symbol_t{0}));
  while (!queue.empty()) {
    StateWord pos = std::move(queue.front());
    queue.pop_front();
    if (goal(pos)) {
      StateWord letters;
      StateWord cur = pos;
      while (cur != from) {
        auto& [prev, letter] = parent.at(cur);
        letters.push_back(letter);
        cur = prev;
      }
      std::reverse(letters.begin(), letters.end());
      return std::make_pair(letters, pos);
    }
    for (symbol_t c : position_options(g, pos)) {
      StateWord next = advance_position(pos, c);
      if (parent.emplace(next, std::make_pair(pos, c)).second)
        queue.push_back(next);
    }
  }
  return std::nullopt;
}

}  // namespace detail

// Greedy common continuation: both current positions allow two of the three
// states, so a shared next letter always exists.
inline std::optional<StateWord> common_successor(const WindowGraph& g,
                                                 const OrbitalWord& u,
                                                 const OrbitalWord& v, int n) {
  const std::size_t p = static_cast<std::size_t>(g.window_length) - 1;
  if (u.word.size() < p || v.word.size() < p) return std::nullopt;
  StateWord pu(u.word.end() - static_cast<long>(p), u.word.end());
  StateWord pv(v.word.end() - static_cast<long>(p), v.word.end());
  StateWord r;
  for (int i = 0; i < n; ++i) {
    auto ou = detail::position_options(g, pu);
    auto ov = detail::position_options(g, pv);
    std::optional<symbol_t> pick;
    for (symbol_t c : ou)
      if (std::find(ov.begin(), ov.end(), c) != ov.end()) {
        pick = c;
        break;
      }
    if (!pick) return std::nullopt;
    r.push_back(*pick);
    pu = detail::advance_position(pu, *pick);
    pv = detail::advance_position(pv, *pick);
  }
  return r;
}

// Every state must close walks inside every recurrent part; a miss is an
// internal inconsistency, not a negative answer.
inline std::vector<bool> state_coverage(const WindowGraph& g) {
  std::vector<bool> covered(static_cast<std::size_t>(g.num_states), false);
  std::map<std::uint32_t, std::vector<bool>> per_scc;
  for (std::uint32_t i = 0; i < g.windows.size(); ++i) {
    if (!g.recurrent[i]) continue;
    auto it = per_scc
                  .emplace(g.scc_id[i],
                           std::vector<bool>(
                               static_cast<std::size_t>(g.num_states), false))
                  .first;
    it->second[g.windows[i].back()] = true;
  }
  if (per_scc.empty())
    throw InconsistencyError("window graph has no recurrent part");
  for (symbol_t q = 0; q < g.num_states; ++q) {
    bool everywhere = true;
    for (const auto& [scc, seen] : per_scc)
      if (!seen[q]) everywhere = false;
    covered[q] = everywhere;
    if (!everywhere)
      throw InconsistencyError("state " + g.state_names[q] +
                               " closes no walk in some recurrent part");
  }
  return covered;
}

struct CyclicEquivalent {
  bool found = false;
  StateWord word;
  int exponent = 0;
};

namespace detail {

// Proof-shaped construction: inside one terminal strongly connected part,
// interleave the letters of `word` with fillers that are closed walks raised
// to their action order.  Walk targets are deterministic per letter, so the
// segment repeats with period one and the whole segment is a closed walk.
inline std::optional<StateWord> guided_equivalent(const MealyAutomaton& a,
                                                  const WindowGraph& g,
                                                  const StateWord& word,
                                                  const Budgets& b) {
  const std::size_t plen = static_cast<std::size_t>(g.window_length) - 1;

  std::uint32_t base_node = 0;
  {
    std::optional<std::uint32_t> best;
    std::vector<bool> reach(g.windows.size(), false);
    std::deque<std::uint32_t> queue;
    if (word.size() >= static_cast<std::size_t>(g.window_length)) {
      StateWord last(word.end() - g.window_length, word.end());
      if (auto i = g.index_of(last)) {
        reach[*i] = true;
        queue.push_back(*i);
      }
    }
    if (queue.empty())
      for (std::uint32_t i = 0; i < g.windows.size(); ++i) {
        reach[i] = true;
        queue.push_back(i);
      }
    while (!queue.empty()) {
      std::uint32_t v = queue.front();
      queue.pop_front();
      if (g.scc_terminal[g.scc_id[v]] && g.recurrent[v] &&
          (!best || g.windows[v] < g.windows[*best]))
        best = v;
      for (std::uint32_t t : g.succ[v])
        if (!reach[t]) {
          reach[t] = true;
          queue.push_back(t);
        }
    }
    if (!best) return std::nullopt;
    base_node = *best;
  }
  const StateWord base(g.windows[base_node].end() - static_cast<long>(plen),
                       g.windows[base_node].end());

  auto allows = [&](const StateWord& pos, symbol_t c) {
    StateWord win = pos;
    win.push_back(c);
    return g.index_of(win).has_value();
  };
  // Target position and approach word from base, per letter.
  std::vector<std::optional<std::pair<StateWord, StateWord>>> approach(
      static_cast<std::size_t>(g.num_states));
  auto target_for = [&](symbol_t c)
      -> const std::optional<std::pair<StateWord, StateWord>>& {
    auto& slot = approach[c];
    if (!slot.has_value())
      slot = position_walk(g, base,
                           [&](const StateWord& p) { return allows(p, c); });
    return slot;
  };

  StateWord out;
  StateWord pos;
  {
    const auto& first = target_for(word.front());
    if (!first) return std::nullopt;
    pos = first->second;
  }
  for (std::size_t i = 0; i < word.size(); ++i) {
    symbol_t cur = word[i];
    symbol_t next = word[(i + 1) % word.size()];
    if (!allows(pos, cur)) return std::nullopt;
    out.push_back(cur);
    pos = advance_position(pos, cur);

    const auto& landing = target_for(next);
    if (!landing) return std::nullopt;
    const StateWord& pb = landing->second;
    // Common continuation synchronizes the two walk states.
    OrbitalWord from_here{pos, {}};
    OrbitalWord from_target{pb, {}};
    auto r = common_successor(g, from_here, from_target,
                              static_cast<int>(plen));
    if (!r) return std::nullopt;
    auto back = position_walk(g, *r, [&](const StateWord& p) { return p == base; });
    if (!back) return std::nullopt;
    StateWord filler = *r;
    filler.insert(filler.end(), back->first.begin(), back->first.end());
    filler.insert(filler.end(), landing->first.begin(), landing->first.end());
    if (!is_cyclically_orbital(g, filler)) return std::nullopt;
    OrderVerdict ord = element_order(a, filler, b.filler_order_cap, b);
    if (!ord.finite) return std::nullopt;
    for (int copy = 0; copy < ord.k; ++copy)
      out.insert(out.end(), filler.begin(), filler.end());
    pos = pb;
  }
  return out;
}

}  // namespace detail

// Returns (w, k) with w cyclically orbital and the action of w equal to the
// action of word^k, both facts re-verified before returning; Exhausted
// (found = false) when neither the guided construction nor the bounded
// search produces a verified answer.
inline CyclicEquivalent cyclically_orbital_equivalent(const MealyAutomaton& a,
                                                      const WindowGraph& g,
                                                      const StateWord& word,
                                                      const Budgets& b = Budgets{}) {
  if (word.empty()) throw std::invalid_argument("empty word");
  CyclicEquivalent res;
  if (is_cyclically_orbital(g, word)) {
    res.found = true;
    res.word = word;
    res.exponent = 1;
    return res;
  }
  try {
    if (auto guided = detail::guided_equivalent(a, g, word, b)) {
      if (is_cyclically_orbital(g, *guided) &&
          actions_equal(a, *guided, word, b)) {
        res.found = true;
        res.word = *guided;
        res.exponent = 1;
        return res;
      }
    }
  } catch (const BudgetExceededError&) {
  }

  // Bounded search: match canonical action keys of enumerated cyclic words
  // against the keys of word^k.  Key closures get a reduced cap so that
  // infinite-order inputs stop extending the target list early.
  Budgets key_budget = b;
  key_budget.member_budget = std::min<std::uint64_t>(b.member_budget, 50'000);
  std::unordered_map<std::string, int> targets;
  try {
    for (int k = 1; k <= b.repetition_budget; ++k) {
      std::string key = action_key(a, power_word(word, k), key_budget);
      if (!targets.emplace(std::move(key), k).second) break;
    }
  } catch (const BudgetExceededError&) {
  }
  for (const StateWord& cyc : enumerate_cyclically_orbital(g, b.enum_max_len)) {
    std::string key;
    try {
      key = action_key(a, cyc, key_budget);
    } catch (const BudgetExceededError&) {
      continue;
    }
    auto hit = targets.find(key);
    if (hit == targets.end()) continue;
    if (is_cyclically_orbital(g, cyc) &&
        actions_equal(a, cyc, power_word(word, hit->second), b)) {
      res.found = true;
      res.word = cyc;
      res.exponent = hit->second;
      return res;
    }
  }
  return res;
}

}  // namespace orbitree
