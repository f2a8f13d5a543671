#pragma once

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "orbitree/errors.hpp"

namespace orbitree {

// States and letters are dense indices into the name tables of their
// automaton; words are index sequences.
using symbol_t = std::uint8_t;
using StateWord = std::vector<symbol_t>;
using LetterWord = std::vector<symbol_t>;

struct WordHash {
  std::size_t operator()(const std::vector<symbol_t>& w) const noexcept {
    std::size_t h = 1469598103934665603ULL;
    for (symbol_t c : w) {
      h ^= c;
      h *= 1099511628211ULL;
    }
    return h;
  }
};

// A complete deterministic letter-to-letter transducer with stateset Q and
// alphabet S: delta(q, a) is the next state, rho(q, a) the output letter.
// Tables are stored row-major by state.
class MealyAutomaton {
 public:
  MealyAutomaton(std::string name, std::vector<std::string> letters,
                 std::vector<std::string> states, std::vector<symbol_t> delta,
                 std::vector<symbol_t> rho)
      : name_(std::move(name)),
        letters_(std::move(letters)),
        states_(std::move(states)),
        delta_(std::move(delta)),
        rho_(std::move(rho)) {
    if (letters_.empty()) throw std::invalid_argument("empty alphabet");
    if (states_.empty()) throw std::invalid_argument("empty stateset");
    if (states_.size() > 255 || letters_.size() > 255)
      throw std::invalid_argument("symbol tables are limited to 255 entries");
    const std::size_t cells = states_.size() * letters_.size();
    if (delta_.size() != cells || rho_.size() != cells)
      throw std::invalid_argument("table size mismatch");
    for (symbol_t q : delta_)
      if (q >= states_.size()) throw std::invalid_argument("state out of range");
    for (symbol_t a : rho_)
      if (a >= letters_.size())
        throw std::invalid_argument("letter out of range");
    for (std::size_t i = 0; i < states_.size(); ++i)
      state_index_[states_[i]] = static_cast<symbol_t>(i);
    for (std::size_t i = 0; i < letters_.size(); ++i)
      letter_index_[letters_[i]] = static_cast<symbol_t>(i);
    if (state_index_.size() != states_.size())
      throw std::invalid_argument("duplicate state name");
    if (letter_index_.size() != letters_.size())
      throw std::invalid_argument("duplicate letter name");
  }

  const std::string& name() const { return name_; }
  int num_states() const { return static_cast<int>(states_.size()); }
  int num_letters() const { return static_cast<int>(letters_.size()); }
  const std::vector<std::string>& state_names() const { return states_; }
  const std::vector<std::string>& letter_names() const { return letters_; }

  symbol_t delta(symbol_t state, symbol_t letter) const {
    return delta_[static_cast<std::size_t>(state) * letters_.size() + letter];
  }
  symbol_t rho(symbol_t state, symbol_t letter) const {
    return rho_[static_cast<std::size_t>(state) * letters_.size() + letter];
  }
  const std::vector<symbol_t>& delta_table() const { return delta_; }
  const std::vector<symbol_t>& rho_table() const { return rho_; }

  std::optional<symbol_t> state_index(std::string_view name) const {
    auto it = state_index_.find(std::string(name));
    if (it == state_index_.end()) return std::nullopt;
    return it->second;
  }
  std::optional<symbol_t> letter_index(std::string_view name) const {
    auto it = letter_index_.find(std::string(name));
    if (it == letter_index_.end()) return std::nullopt;
    return it->second;
  }

  std::string state_word_name(const StateWord& u, const char* sep = "") const {
    std::string out;
    for (std::size_t i = 0; i < u.size(); ++i) {
      if (i > 0) out += sep;
      out += states_[u[i]];
    }
    return out;
  }
  std::string letter_word_name(const LetterWord& w, const char* sep = "") const {
    std::string out;
    for (std::size_t i = 0; i < w.size(); ++i) {
      if (i > 0) out += sep;
      out += letters_[w[i]];
    }
    return out;
  }

  // Equality of the labeled tables; the automaton name is metadata only.
  friend bool operator==(const MealyAutomaton& a, const MealyAutomaton& b) {
    return a.letters_ == b.letters_ && a.states_ == b.states_ &&
           a.delta_ == b.delta_ && a.rho_ == b.rho_;
  }

 private:
  std::string name_;
  std::vector<std::string> letters_;
  std::vector<std::string> states_;
  std::vector<symbol_t> delta_;
  std::vector<symbol_t> rho_;
  std::unordered_map<std::string, symbol_t> state_index_;
  std::unordered_map<std::string, symbol_t> letter_index_;
};

namespace detail {

inline bool all_single_char(const std::vector<std::string>& names) {
  return std::all_of(names.begin(), names.end(),
                     [](const std::string& s) { return s.size() == 1; });
}

struct Token {
  std::string text;
  int line;
};

inline std::vector<std::vector<Token>> tokenize_lines(std::string_view text) {
  std::vector<std::vector<Token>> lines;
  int lineno = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t eol = text.find('\n', pos);
    std::string_view line = text.substr(
        pos, eol == std::string_view::npos ? std::string_view::npos
                                           : eol - pos);
    ++lineno;
    std::size_t hash = line.find('#');
    if (hash != std::string_view::npos) line = line.substr(0, hash);
    std::vector<Token> toks;
    std::size_t i = 0;
    while (i < line.size()) {
      while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i])))
        ++i;
      std::size_t j = i;
      while (j < line.size() &&
             !std::isspace(static_cast<unsigned char>(line[j])))
        ++j;
      if (j > i) toks.push_back({std::string(line.substr(i, j - i)), lineno});
      i = j;
    }
    if (!toks.empty()) lines.push_back(std::move(toks));
    if (eol == std::string_view::npos) break;
    pos = eol + 1;
  }
  return lines;
}

}  // namespace detail

// Text format:
//   mealy <name>
//   alphabet <letter> ...
//   states <state> ...
//   <state>: <in>|<out>-><state> ...   (one line per state, every letter once)
// '#' starts a comment; blank lines are ignored.
inline MealyAutomaton parse_automaton(std::string_view text) {
  using detail::Token;
  auto lines = detail::tokenize_lines(text);
  std::size_t li = 0;
  auto need_line = [&](const char* what) -> std::vector<Token>& {
    if (li >= lines.size())
      throw ParseError(ParseError::Kind::Syntax,
                       lines.empty() ? 1 : lines.back().front().line,
                       std::string("expected ") + what);
    return lines[li++];
  };

  auto& header = need_line("'mealy <name>' header");
  if (header[0].text != "mealy" || header.size() != 2)
    throw ParseError(ParseError::Kind::Syntax, header[0].line,
                     "expected 'mealy <name>' header");
  std::string name = header[1].text;

  auto& alph = need_line("'alphabet' line");
  if (alph[0].text != "alphabet")
    throw ParseError(ParseError::Kind::Syntax, alph[0].line,
                     "expected 'alphabet' line");
  if (alph.size() == 1)
    throw ParseError(ParseError::Kind::EmptyAlphabet, alph[0].line,
                     "alphabet must list at least one letter");
  std::vector<std::string> letters;
  std::unordered_map<std::string, symbol_t> letter_of;
  for (std::size_t i = 1; i < alph.size(); ++i) {
    if (!letter_of.emplace(alph[i].text, static_cast<symbol_t>(letters.size()))
             .second)
      throw ParseError(ParseError::Kind::DuplicateName, alph[i].line,
                       "duplicate letter '" + alph[i].text + "'");
    letters.push_back(alph[i].text);
  }

  auto& sts = need_line("'states' line");
  if (sts[0].text != "states")
    throw ParseError(ParseError::Kind::Syntax, sts[0].line,
                     "expected 'states' line");
  if (sts.size() == 1)
    throw ParseError(ParseError::Kind::EmptyStateset, sts[0].line,
                     "stateset must list at least one state");
  std::vector<std::string> states;
  std::unordered_map<std::string, symbol_t> state_of;
  for (std::size_t i = 1; i < sts.size(); ++i) {
    if (!state_of.emplace(sts[i].text, static_cast<symbol_t>(states.size()))
             .second)
      throw ParseError(ParseError::Kind::DuplicateName, sts[i].line,
                       "duplicate state '" + sts[i].text + "'");
    states.push_back(sts[i].text);
  }

  const std::size_t nq = states.size(), na = letters.size();
  std::vector<symbol_t> delta(nq * na), rho(nq * na);
  std::vector<char> seen(nq * na, 0);
  std::vector<int> state_line(nq, 0);

  while (li < lines.size()) {
    auto& row = lines[li++];
    // The defining state is the first token, with an attached or free ':'.
    std::string head = row[0].text;
    std::size_t arg = 1;
    if (!head.empty() && head.back() == ':') {
      head.pop_back();
    } else if (row.size() > 1 && row[1].text == ":") {
      arg = 2;
    } else {
      throw ParseError(ParseError::Kind::Syntax, row[0].line,
                       "expected '<state>:' at start of transition line");
    }
    auto sit = state_of.find(head);
    if (sit == state_of.end())
      throw ParseError(ParseError::Kind::UnknownSymbol, row[0].line,
                       "unknown state '" + head + "'");
    symbol_t q = sit->second;
    if (state_line[q] != 0)
      throw ParseError(ParseError::Kind::DuplicateTransition, row[0].line,
                       "state '" + head + "' already defined on line " +
                           std::to_string(state_line[q]));
    state_line[q] = row[0].line;

    for (std::size_t t = arg; t < row.size(); ++t) {
      const std::string& tok = row[t].text;
      std::size_t bar = tok.find('|');
      std::size_t arrow = tok.find("->", bar == std::string::npos ? 0 : bar);
      if (bar == std::string::npos || arrow == std::string::npos ||
          bar == 0 || arrow <= bar + 1 || arrow + 2 >= tok.size())
        throw ParseError(ParseError::Kind::Syntax, row[t].line,
                         "expected '<in>|<out>-><state>', got '" + tok + "'");
      std::string in = tok.substr(0, bar);
      std::string out = tok.substr(bar + 1, arrow - bar - 1);
      std::string next = tok.substr(arrow + 2);
      auto iit = letter_of.find(in);
      if (iit == letter_of.end())
        throw ParseError(ParseError::Kind::UnknownSymbol, row[t].line,
                         "unknown letter '" + in + "'");
      auto oit = letter_of.find(out);
      if (oit == letter_of.end())
        throw ParseError(ParseError::Kind::UnknownSymbol, row[t].line,
                         "unknown letter '" + out + "'");
      auto nit = state_of.find(next);
      if (nit == state_of.end())
        throw ParseError(ParseError::Kind::UnknownSymbol, row[t].line,
                         "unknown state '" + next + "'");
      std::size_t cell = static_cast<std::size_t>(q) * na + iit->second;
      if (seen[cell])
        throw ParseError(ParseError::Kind::DuplicateTransition, row[t].line,
                         "duplicate transition for state '" + head +
                             "' on letter '" + in + "'");
      seen[cell] = 1;
      delta[cell] = nit->second;
      rho[cell] = oit->second;
    }
    for (std::size_t a = 0; a < na; ++a)
      if (!seen[static_cast<std::size_t>(q) * na + a])
        throw ParseError(ParseError::Kind::MissingTransition, row[0].line,
                         "state '" + head + "' has no transition for letter '" +
                             letters[a] + "'");
  }
  for (std::size_t q = 0; q < nq; ++q)
    if (state_line[q] == 0)
      throw ParseError(ParseError::Kind::MissingTransition,
                       lines.empty() ? 1 : lines.back().front().line,
                       "state '" + states[q] + "' has no transition line");

  return MealyAutomaton(std::move(name), std::move(letters), std::move(states),
                        std::move(delta), std::move(rho));
}

inline MealyAutomaton load_automaton(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw std::runtime_error("cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_automaton(buf.str());
}

inline std::string to_text(const MealyAutomaton& a) {
  std::ostringstream out;
  out << "mealy " << a.name() << "\n";
  out << "alphabet";
  for (const auto& l : a.letter_names()) out << ' ' << l;
  out << "\nstates";
  for (const auto& s : a.state_names()) out << ' ' << s;
  out << "\n";
  for (int q = 0; q < a.num_states(); ++q) {
    out << a.state_names()[q] << ":";
    for (int i = 0; i < a.num_letters(); ++i) {
      out << ' ' << a.letter_names()[i] << '|'
          << a.letter_names()[a.rho(symbol_t(q), symbol_t(i))] << "->"
          << a.state_names()[a.delta(symbol_t(q), symbol_t(i))];
    }
    out << "\n";
  }
  return out.str();
}

// Every rho row is a permutation of the alphabet.
inline bool is_invertible(const MealyAutomaton& a) {
  std::vector<char> hit(a.num_letters());
  for (int q = 0; q < a.num_states(); ++q) {
    std::fill(hit.begin(), hit.end(), 0);
    for (int i = 0; i < a.num_letters(); ++i) {
      symbol_t o = a.rho(symbol_t(q), symbol_t(i));
      if (hit[o]) return false;
      hit[o] = 1;
    }
  }
  return true;
}

// Every delta column is a permutation of the stateset.
inline bool is_reversible(const MealyAutomaton& a) {
  std::vector<char> hit(a.num_states());
  for (int i = 0; i < a.num_letters(); ++i) {
    std::fill(hit.begin(), hit.end(), 0);
    for (int q = 0; q < a.num_states(); ++q) {
      symbol_t n = a.delta(symbol_t(q), symbol_t(i));
      if (hit[n]) return false;
      hit[n] = 1;
    }
  }
  return true;
}

// Exchanges the roles of states and letters: transitions of the dual follow
// the output function of the original and vice versa.
inline MealyAutomaton dual(const MealyAutomaton& a) {
  const int nq = a.num_states(), na = a.num_letters();
  std::vector<symbol_t> delta(static_cast<std::size_t>(na) * nq);
  std::vector<symbol_t> rho(static_cast<std::size_t>(na) * nq);
  for (int i = 0; i < na; ++i)
    for (int q = 0; q < nq; ++q) {
      delta[static_cast<std::size_t>(i) * nq + q] = a.rho(symbol_t(q), symbol_t(i));
      rho[static_cast<std::size_t>(i) * nq + q] = a.delta(symbol_t(q), symbol_t(i));
    }
  return MealyAutomaton("d." + a.name(), a.state_names(), a.letter_names(),
                        std::move(delta), std::move(rho));
}

// Runs letters backwards through the output permutations.  State names are
// kept, so taking the inverse twice restores the original tables exactly.
inline MealyAutomaton inverse(const MealyAutomaton& a) {
  if (!is_invertible(a))
    throw NotInvertibleError("automaton '" + a.name() + "' is not invertible");
  const int nq = a.num_states(), na = a.num_letters();
  std::vector<symbol_t> delta(static_cast<std::size_t>(nq) * na);
  std::vector<symbol_t> rho(static_cast<std::size_t>(nq) * na);
  for (int q = 0; q < nq; ++q)
    for (int i = 0; i < na; ++i) {
      symbol_t o = a.rho(symbol_t(q), symbol_t(i));
      delta[static_cast<std::size_t>(q) * na + o] = a.delta(symbol_t(q), symbol_t(i));
      rho[static_cast<std::size_t>(q) * na + o] = symbol_t(i);
    }
  return MealyAutomaton("inv." + a.name(), a.letter_names(), a.state_names(),
                        std::move(delta), std::move(rho));
}

inline bool is_bireversible(const MealyAutomaton& a) {
  return is_invertible(a) && is_reversible(a) &&
         is_reversible(inverse(a));
}

// Image of the letter word under the composed action of the states of u,
// first state applied first.
inline LetterWord apply_action(const MealyAutomaton& a, const StateWord& u,
                               const LetterWord& w) {
  LetterWord cur = w;
  for (symbol_t s : u) {
    symbol_t q = s;
    for (auto& x : cur) {
      symbol_t o = a.rho(q, x);
      q = a.delta(q, x);
      x = o;
    }
  }
  return cur;
}

// The n-th power automaton: states are length-n state words acting by
// composition.  Rows are laid out in lexicographic word order.
inline MealyAutomaton power(const MealyAutomaton& a, int n) {
  if (n < 1) throw std::invalid_argument("power requires n >= 1");
  const int nq = a.num_states(), na = a.num_letters();
  std::size_t count = 1;
  for (int i = 0; i < n; ++i) {
    count *= static_cast<std::size_t>(nq);
    if (count > 255)
      throw BudgetExceededError("power automaton exceeds symbol range", count);
  }
  const bool tight = detail::all_single_char(a.state_names());
  std::vector<std::string> states(count);
  std::vector<symbol_t> delta(count * na), rho(count * na);
  StateWord u(static_cast<std::size_t>(n), 0);
  for (std::size_t idx = 0; idx < count; ++idx) {
    states[idx] = a.state_word_name(u, tight ? "" : ".");
    for (int i = 0; i < na; ++i) {
      symbol_t x = symbol_t(i);
      std::size_t next = 0;
      for (int k = 0; k < n; ++k) {
        symbol_t o = a.rho(u[k], x);
        next = next * nq + a.delta(u[k], x);
        x = o;
      }
      delta[idx * na + i] = static_cast<symbol_t>(next);
      rho[idx * na + i] = x;
    }
    for (int k = n - 1; k >= 0; --k) {
      if (++u[k] < nq) break;
      u[k] = 0;
    }
  }
  return MealyAutomaton(a.name() + "^" + std::to_string(n), a.letter_names(),
                        std::move(states), std::move(delta), std::move(rho));
}

// Nerode quotient: states are merged when they have equal output rows and
// equivalent successors on every letter.  Class representatives keep the
// name of their first member in declaration order.
inline MealyAutomaton minimize(const MealyAutomaton& a) {
  const int nq = a.num_states(), na = a.num_letters();
  std::vector<int> cls(nq);
  {
    std::unordered_map<std::string, int> by_row;
    for (int q = 0; q < nq; ++q) {
      std::string row;
      for (int i = 0; i < na; ++i)
        row += char(a.rho(symbol_t(q), symbol_t(i)));
      cls[q] = by_row.emplace(row, static_cast<int>(by_row.size())).first->second;
    }
  }
  for (;;) {
    std::unordered_map<std::string, int> by_sig;
    std::vector<int> next(nq);
    for (int q = 0; q < nq; ++q) {
      std::string sig;
      sig += char(cls[q]);
      for (int i = 0; i < na; ++i)
        sig += char(cls[a.delta(symbol_t(q), symbol_t(i))]);
      next[q] = by_sig.emplace(sig, static_cast<int>(by_sig.size())).first->second;
    }
    if (next == cls) break;
    cls = std::move(next);
  }
  // Renumber classes by first occurrence so output order is deterministic.
  std::vector<int> order(nq, -1);
  int nc = 0;
  for (int q = 0; q < nq; ++q)
    if (order[cls[q]] < 0) order[cls[q]] = nc++;
  std::vector<std::string> states(nc);
  std::vector<symbol_t> delta(static_cast<std::size_t>(nc) * na);
  std::vector<symbol_t> rho(static_cast<std::size_t>(nc) * na);
  std::vector<char> done(nc, 0);
  for (int q = 0; q < nq; ++q) {
    int c = order[cls[q]];
    if (done[c]) continue;
    done[c] = 1;
    states[c] = a.state_names()[q];
    for (int i = 0; i < na; ++i) {
      delta[static_cast<std::size_t>(c) * na + i] =
          static_cast<symbol_t>(order[cls[a.delta(symbol_t(q), symbol_t(i))]]);
      rho[static_cast<std::size_t>(c) * na + i] = a.rho(symbol_t(q), symbol_t(i));
    }
  }
  return MealyAutomaton("m." + a.name(), a.letter_names(), std::move(states),
                        std::move(delta), std::move(rho));
}

// Weak connectivity of the transition graph.  For reversible automata this
// coincides with the level-1 orbit structure being a single class.
inline bool is_connected(const MealyAutomaton& a) {
  const int nq = a.num_states(), na = a.num_letters();
  std::vector<int> parent(nq);
  for (int q = 0; q < nq; ++q) parent[q] = q;
  auto find = [&](int q) {
    while (parent[q] != q) q = parent[q] = parent[parent[q]];
    return q;
  };
  for (int q = 0; q < nq; ++q)
    for (int i = 0; i < na; ++i) {
      int r1 = find(q), r2 = find(a.delta(symbol_t(q), symbol_t(i)));
      if (r1 != r2) parent[r1] = r2;
    }
  int root = find(0);
  for (int q = 1; q < nq; ++q)
    if (find(q) != root) return false;
  return true;
}

namespace detail {

// Maps letters of b onto letters of a by name; the alphabets must carry the
// same names (order may differ).
inline std::vector<symbol_t> align_letters(const MealyAutomaton& a,
                                           const MealyAutomaton& b) {
  if (a.num_letters() != b.num_letters())
    throw AlphabetMismatchError("alphabets have different sizes");
  std::vector<symbol_t> map(b.num_letters());
  for (int i = 0; i < b.num_letters(); ++i) {
    auto idx = a.letter_index(b.letter_names()[i]);
    if (!idx)
      throw AlphabetMismatchError("letter '" + b.letter_names()[i] +
                                  "' has no counterpart");
    map[i] = *idx;
  }
  return map;
}

}  // namespace detail

// State-relabeling isomorphism with the alphabet fixed pointwise (letters
// are matched by name).  Choosing the image of one state forces the images
// of everything it reaches, so the search branches only on representatives
// of unmapped source states.
inline bool are_isomorphic(const MealyAutomaton& a, const MealyAutomaton& b) {
  if (a.num_states() != b.num_states()) return false;
  std::vector<symbol_t> lmap = detail::align_letters(a, b);
  const int nq = a.num_states(), na = a.num_letters();
  // b's tables rewritten in a's letter order.
  std::vector<symbol_t> bdelta(static_cast<std::size_t>(nq) * na);
  std::vector<symbol_t> brho(static_cast<std::size_t>(nq) * na);
  std::vector<symbol_t> linv(na);
  for (int i = 0; i < na; ++i) linv[lmap[i]] = symbol_t(i);
  for (int q = 0; q < nq; ++q)
    for (int i = 0; i < na; ++i) {
      bdelta[static_cast<std::size_t>(q) * na + i] =
          b.delta(symbol_t(q), linv[i]);
      brho[static_cast<std::size_t>(q) * na + i] =
          lmap[b.rho(symbol_t(q), linv[i])];
    }

  std::vector<int> fwd(nq, -1), used(nq, 0);
  std::vector<std::pair<int, int>> trail;

  auto propagate = [&](int s, int t) -> bool {
    std::vector<std::pair<int, int>> queue{{s, t}};
    while (!queue.empty()) {
      auto [u, v] = queue.back();
      queue.pop_back();
      if (fwd[u] != -1) {
        if (fwd[u] != v) return false;
        continue;
      }
      if (used[v]) return false;
      for (int i = 0; i < na; ++i)
        if (a.rho(symbol_t(u), symbol_t(i)) !=
            brho[static_cast<std::size_t>(v) * na + i])
          return false;
      fwd[u] = v;
      used[v] = 1;
      trail.push_back({u, v});
      for (int i = 0; i < na; ++i)
        queue.push_back({a.delta(symbol_t(u), symbol_t(i)),
                         bdelta[static_cast<std::size_t>(v) * na + i]});
    }
    return true;
  };

  auto unwind = [&](std::size_t mark) {
    while (trail.size() > mark) {
      auto [u, v] = trail.back();
      trail.pop_back();
      fwd[u] = -1;
      used[v] = 0;
    }
  };

  auto solve = [&](auto&& self, int from) -> bool {
    int s = -1;
    for (int q = from; q < nq; ++q)
      if (fwd[q] == -1) {
        s = q;
        break;
      }
    if (s == -1) return true;
    for (int t = 0; t < nq; ++t) {
      if (used[t]) continue;
      std::size_t mark = trail.size();
      if (propagate(s, t) && self(self, s + 1)) return true;
      unwind(mark);
    }
    return false;
  };
  return solve(solve, 0);
}

}  // namespace orbitree
