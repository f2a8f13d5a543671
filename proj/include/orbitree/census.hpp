#pragma once

#include <algorithm>
#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "orbitree/automaton.hpp"
#include "orbitree/budgets.hpp"
#include "orbitree/classify.hpp"
#include "orbitree/errors.hpp"

namespace orbitree {

// Census of small Mealy automata up to automaton isomorphism, i.e. joint
// relabeling of states and letters.  Representatives stream in canonical
// (sorted-key) order, so runs are deterministic and resumable by index.
struct CensusOptions {
  int num_states = 2;
  int num_letters = 2;
  bool require_invertible = true;
  bool require_reversible = true;
  std::optional<bool> connected;         // keep only matching items when set
  bool classify = true;                  // classify invertible items
  Budgets budgets{};                     // per-item classification budgets
  std::uint64_t table_budget = 20'000'000;  // tables scanned in general mode
  int workers = 1;
  std::size_t resume_index = 0;          // first index to classify and emit
};

struct CensusItem {
  std::size_t index = 0;
  std::string key;                       // canonical table encoding
  MealyAutomaton automaton;              // canonical representative
  bool invertible = false;
  bool reversible = false;
  bool bireversible = false;
  bool connected = false;
  std::optional<GroupClassification> classification;

  nlohmann::json to_json() const {
    nlohmann::json j{{"index", index},
                     {"key", key},
                     {"states", automaton.state_names()},
                     {"letters", automaton.letter_names()},
                     {"delta", automaton.delta_table()},
                     {"rho", automaton.rho_table()},
                     {"invertible", invertible},
                     {"reversible", reversible},
                     {"bireversible", bireversible},
                     {"connected", connected}};
    if (classification) {
      j["classification"] = nlohmann::json{
          {"verdict",
           GroupClassification::verdict_name(classification->verdict)},
          {"certificate", classification->certificate.to_json()}};
    } else {
      j["classification"] = nullptr;
    }
    return j;
  }
};

struct CensusSummary {
  std::size_t classes = 0;     // representatives after filtering
  std::size_t emitted = 0;     // items emitted by this run
  std::size_t finite = 0;
  std::size_t infinite = 0;
  std::size_t unknown = 0;
  std::size_t unclassified = 0;
  bool table_budget_hit = false;
};

namespace detail {

inline void census_names(int nq, int na, std::vector<std::string>& states,
                         std::vector<std::string>& letters) {
  const char* qs[] = {"x", "y", "z"};
  states.assign(qs, qs + nq);
  letters.clear();
  for (int i = 0; i < na; ++i) letters.push_back(std::to_string(i + 1));
}

inline std::string encode_tables(const std::vector<symbol_t>& delta,
                                 const std::vector<symbol_t>& rho) {
  std::string s;
  s.reserve(delta.size() + rho.size() + 1);
  for (symbol_t v : delta) s.push_back(static_cast<char>('0' + v));
  s.push_back('|');
  for (symbol_t v : rho) s.push_back(static_cast<char>('0' + v));
  return s;
}

// Least encoding over all joint state/letter relabelings.
inline std::string census_key(int nq, int na,
                              const std::vector<symbol_t>& delta,
                              const std::vector<symbol_t>& rho) {
  std::vector<symbol_t> sp(nq), lp(na);
  std::vector<symbol_t> d2(delta.size()), r2(rho.size());
  std::string best;
  for (int i = 0; i < nq; ++i) sp[i] = static_cast<symbol_t>(i);
  do {
    for (int i = 0; i < na; ++i) lp[i] = static_cast<symbol_t>(i);
    do {
      for (int q = 0; q < nq; ++q)
        for (int l = 0; l < na; ++l) {
          std::size_t from = static_cast<std::size_t>(q) * na + l;
          std::size_t to = static_cast<std::size_t>(sp[q]) * na + lp[l];
          d2[to] = sp[delta[from]];
          r2[to] = lp[rho[from]];
        }
      std::string enc = encode_tables(d2, r2);
      if (best.empty() || enc < best) best = std::move(enc);
    } while (std::next_permutation(lp.begin(), lp.end()));
  } while (std::next_permutation(sp.begin(), sp.end()));
  return best;
}

inline MealyAutomaton decode_key(int nq, int na, const std::string& key,
                                 std::string name) {
  std::vector<symbol_t> delta, rho;
  std::size_t bar = key.find('|');
  for (std::size_t i = 0; i < bar; ++i)
    delta.push_back(static_cast<symbol_t>(key[i] - '0'));
  for (std::size_t i = bar + 1; i < key.size(); ++i)
    rho.push_back(static_cast<symbol_t>(key[i] - '0'));
  std::vector<std::string> states, letters;
  census_names(nq, na, states, letters);
  return MealyAutomaton(std::move(name), std::move(letters), std::move(states),
                        std::move(delta), std::move(rho));
}

inline bool rows_are_permutations(int nq, int na,
                                  const std::vector<symbol_t>& rho) {
  std::vector<char> seen(na);
  for (int q = 0; q < nq; ++q) {
    std::fill(seen.begin(), seen.end(), 0);
    for (int l = 0; l < na; ++l) {
      symbol_t v = rho[static_cast<std::size_t>(q) * na + l];
      if (seen[v]) return false;
      seen[v] = 1;
    }
  }
  return true;
}

inline bool columns_are_permutations(int nq, int na,
                                     const std::vector<symbol_t>& delta) {
  std::vector<char> seen(nq);
  for (int l = 0; l < na; ++l) {
    std::fill(seen.begin(), seen.end(), 0);
    for (int q = 0; q < nq; ++q) {
      symbol_t v = delta[static_cast<std::size_t>(q) * na + l];
      if (seen[v]) return false;
      seen[v] = 1;
    }
  }
  return true;
}

}  // namespace detail

// Canonical key of an automaton under joint state/letter relabeling; two
// automata of equal shape are isomorphic exactly when their keys agree.
inline std::string census_key_of(const MealyAutomaton& a) {
  return detail::census_key(a.num_states(), a.num_letters(), a.delta_table(),
                            a.rho_table());
}

// Canonical representatives matching the option filters, sorted by key.
// The general (unrestricted) scan respects `table_budget` and reports the
// cut through the summary flag of run_census.
inline std::vector<MealyAutomaton> enumerate_census(
    const CensusOptions& opt, bool* table_budget_hit = nullptr) {
  const int nq = opt.num_states, na = opt.num_letters;
  if (nq < 1 || nq > 3 || na < 1 || na > 3)
    throw std::invalid_argument("census supports 1..3 states and letters");
  if (table_budget_hit) *table_budget_hit = false;

  std::set<std::string> keys;
  auto consider = [&](const std::vector<symbol_t>& delta,
                      const std::vector<symbol_t>& rho) {
    if (opt.require_invertible &&
        !detail::rows_are_permutations(nq, na, rho))
      return;
    if (opt.require_reversible &&
        !detail::columns_are_permutations(nq, na, delta))
      return;
    keys.insert(detail::census_key(nq, na, delta, rho));
  };

  if (opt.require_invertible && opt.require_reversible) {
    // Structured scan: one state permutation per letter column, one letter
    // permutation per state row.
    std::vector<std::vector<symbol_t>> qperm, lperm;
    std::vector<symbol_t> p(nq);
    for (int i = 0; i < nq; ++i) p[i] = static_cast<symbol_t>(i);
    do qperm.push_back(p); while (std::next_permutation(p.begin(), p.end()));
    p.resize(na);
    for (int i = 0; i < na; ++i) p[i] = static_cast<symbol_t>(i);
    do lperm.push_back(p); while (std::next_permutation(p.begin(), p.end()));

    std::vector<std::size_t> dsel(na, 0), rsel(nq, 0);
    auto advance = [](std::vector<std::size_t>& sel, std::size_t base) {
      for (std::size_t& v : sel) {
        if (++v < base) return true;
        v = 0;
      }
      return false;
    };
    std::vector<symbol_t> delta(static_cast<std::size_t>(nq) * na);
    std::vector<symbol_t> rho(delta.size());
    do {
      do {
        for (int q = 0; q < nq; ++q)
          for (int l = 0; l < na; ++l) {
            delta[static_cast<std::size_t>(q) * na + l] = qperm[dsel[l]][q];
            rho[static_cast<std::size_t>(q) * na + l] = lperm[rsel[q]][l];
          }
        consider(delta, rho);
      } while (advance(rsel, lperm.size()));
    } while (advance(dsel, qperm.size()));
  } else {
    const std::size_t cells = static_cast<std::size_t>(nq) * na;
    std::vector<symbol_t> delta(cells, 0), rho(cells, 0);
    std::uint64_t scanned = 0;
    auto advance = [](std::vector<symbol_t>& t, int base) {
      for (symbol_t& v : t) {
        if (++v < base) return true;
        v = 0;
      }
      return false;
    };
    bool more = true;
    while (more) {
      bool inner = true;
      while (inner) {
        if (++scanned > opt.table_budget) {
          if (table_budget_hit) *table_budget_hit = true;
          more = false;
          break;
        }
        consider(delta, rho);
        inner = advance(rho, na);
      }
      if (!more) break;
      more = advance(delta, nq);
    }
  }

  std::vector<MealyAutomaton> reps;
  for (const std::string& key : keys) {
    // Naming by the post-filter position keeps indices contiguous.
    MealyAutomaton a =
        detail::decode_key(nq, na, key, "c" + std::to_string(reps.size()));
    if (opt.connected && is_connected(a) != *opt.connected) continue;
    reps.push_back(std::move(a));
  }
  return reps;
}

inline CensusItem make_census_item(std::size_t index, MealyAutomaton a,
                                   const CensusOptions& opt) {
  CensusItem item{index, detail::encode_tables(a.delta_table(), a.rho_table()),
                  std::move(a)};
  item.invertible = is_invertible(item.automaton);
  item.reversible = is_reversible(item.automaton);
  item.bireversible = is_bireversible(item.automaton);
  item.connected = is_connected(item.automaton);
  if (opt.classify && item.invertible)
    item.classification = classify_group(item.automaton, opt.budgets);
  return item;
}

// Streams items (classified from resume_index on) in canonical order.
template <typename Emit>
CensusSummary run_census(const CensusOptions& opt, Emit&& emit) {
  CensusSummary summary;
  std::vector<MealyAutomaton> reps =
      enumerate_census(opt, &summary.table_budget_hit);
  summary.classes = reps.size();

  auto tally = [&](const CensusItem& item) {
    ++summary.emitted;
    if (!item.classification) {
      ++summary.unclassified;
    } else {
      switch (item.classification->verdict) {
        case GroupClassification::Verdict::Finite: ++summary.finite; break;
        case GroupClassification::Verdict::Infinite: ++summary.infinite; break;
        case GroupClassification::Verdict::Unknown: ++summary.unknown; break;
      }
    }
    emit(item);
  };

  const std::size_t n = reps.size();
  const std::size_t first = std::min(opt.resume_index, n);
  if (opt.workers <= 1) {
    for (std::size_t i = first; i < n; ++i)
      tally(make_census_item(i, std::move(reps[i]), opt));
    return summary;
  }

  // Bounded pool; emission stays in canonical order via a results buffer.
  std::vector<std::optional<CensusItem>> results(n);
  std::mutex m;
  std::condition_variable cv;
  std::atomic<std::size_t> next{first};
  auto work = [&]() {
    while (true) {
      std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      CensusItem item = make_census_item(i, reps[i], opt);
      {
        std::lock_guard<std::mutex> lock(m);
        results[i] = std::move(item);
      }
      cv.notify_all();
    }
  };
  std::vector<std::thread> pool;
  const int nw = std::min<int>(opt.workers, static_cast<int>(n - first) + 1);
  pool.reserve(static_cast<std::size_t>(nw));
  for (int w = 0; w < nw; ++w) pool.emplace_back(work);
  for (std::size_t i = first; i < n; ++i) {
    std::unique_lock<std::mutex> lock(m);
    cv.wait(lock, [&] { return results[i].has_value(); });
    CensusItem item = std::move(*results[i]);
    results[i].reset();
    lock.unlock();
    tally(item);
  }
  for (std::thread& t : pool) t.join();
  return summary;
}

}  // namespace orbitree
