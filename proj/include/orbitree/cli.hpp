#pragma once

#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "orbitree/automaton.hpp"
#include "orbitree/budgets.hpp"
#include "orbitree/census.hpp"
#include "orbitree/classify.hpp"
#include "orbitree/errors.hpp"
#include "orbitree/orbit_tree.hpp"
#include "orbitree/orbits.hpp"
#include "orbitree/order.hpp"

namespace orbitree::cli {

inline constexpr const char* kVersion = "0.1.0";

inline constexpr int kOk = 0;
inline constexpr int kParseError = 2;
inline constexpr int kBudgetExceeded = 3;
inline constexpr int kBadArgument = 4;

namespace detail {

inline std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << v;
  return os.str();
}

inline nlohmann::json budgets_json(const Budgets& b) {
  return nlohmann::json{{"member_budget", b.member_budget},
                        {"max_level", b.max_level},
                        {"tree_depth", b.tree_depth},
                        {"k_budget", b.k_budget},
                        {"level_budget", b.level_budget},
                        {"closure_elements", b.closure_elements},
                        {"closure_nodes", b.closure_nodes},
                        {"enum_max_len", b.enum_max_len},
                        {"growth_offset", b.growth_offset},
                        {"repetition_budget", b.repetition_budget},
                        {"filler_order_cap", b.filler_order_cap}};
}

inline nlohmann::json growth_json(const GrowthTrajectory& g) {
  return nlohmann::json{{"sizes", g.sizes}, {"truncated", g.truncated}};
}

inline nlohmann::json order_json(const OrderVerdict& v) {
  if (v.finite)
    return nlohmann::json{{"kind", "Finite"},
                          {"k", v.k},
                          {"witness_closure", v.witness_closure}};
  return nlohmann::json{{"kind", "AtLeast"},
                        {"k", v.k},
                        {"nontrivial_powers", v.nontrivial_powers}};
}

inline std::vector<std::string> word_names(const MealyAutomaton& a,
                                           const StateWord& w) {
  std::vector<std::string> out;
  for (symbol_t q : w) out.push_back(a.state_names()[q]);
  return out;
}

// Words come in either as whitespace/comma separated state names or, when
// every name is a single character, as one unseparated block like "xyz".
inline StateWord parse_state_word(const MealyAutomaton& a,
                                  const std::string& text) {
  std::vector<std::string> tokens;
  std::string cur;
  for (char c : text) {
    if (c == ' ' || c == '\t' || c == ',') {
      if (!cur.empty()) tokens.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (!cur.empty()) tokens.push_back(std::move(cur));
  if (tokens.empty())
    throw std::invalid_argument("the word must be nonempty");
  StateWord w;
  if (tokens.size() == 1 && !a.state_index(tokens.front())) {
    for (char c : tokens.front()) {
      auto i = a.state_index(std::string(1, c));
      if (!i)
        throw UnknownStateError("unknown state '" + std::string(1, c) + "'");
      w.push_back(*i);
    }
    return w;
  }
  for (const std::string& t : tokens) {
    auto i = a.state_index(t);
    if (!i) throw UnknownStateError("unknown state '" + t + "'");
    w.push_back(*i);
  }
  return w;
}

inline std::string join(const std::vector<std::string>& parts,
                        const std::string& sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

inline const char* yes_no(bool v) { return v ? "yes" : "no"; }

}  // namespace detail

// Everything one invocation needs; echoed verbatim into JSON reports.
struct RunState {
  std::string command;
  std::string input;
  std::string format = "text";
  std::string out_path;
  std::string checkpoint;
  std::string word;
  long long seed = 0;
  int depth = -1;  // orbit-tree; -1 means "use budgets.tree_depth"
  bool certified = false;
  Budgets budgets{};

  // enumerate
  int states = 2;
  int letters = 2;
  bool invertible = true;
  bool reversible = true;
  std::optional<int> connected;
  bool classify = true;
  std::uint64_t table_budget = 20'000'000;
  int workers = 1;

  nlohmann::json config_json() const {
    nlohmann::json j{{"command", command},
                     {"format", format},
                     {"seed", seed},
                     {"budgets", detail::budgets_json(budgets)}};
    if (!input.empty()) j["input"] = input;
    if (command == "orbit-tree") j["depth"] = effective_depth();
    if (command == "order") j["word"] = word;
    if (command == "find-infinite") j["certified"] = certified;
    if (command == "enumerate") {
      j["states"] = states;
      j["letters"] = letters;
      j["invertible"] = invertible;
      j["reversible"] = reversible;
      j["connected"] =
          connected ? nlohmann::json(*connected != 0) : nlohmann::json();
      j["classify"] = classify;
      j["table_budget"] = table_budget;
      j["workers"] = workers;
    }
    return j;
  }

  // The checkpoint ties a resume to every option that shapes the stream;
  // workers and paths only affect scheduling and are free to change.
  std::string census_config_hash() const {
    nlohmann::json j = config_json();
    j.erase("workers");
    return detail::hex64(detail::fnv1a(j.dump()));
  }

  int effective_depth() const {
    return depth >= 0 ? depth : budgets.tree_depth;
  }

  nlohmann::json envelope(nlohmann::json result) const {
    return nlohmann::json{{"tool", "orbitree"},
                          {"version", kVersion},
                          {"command", command},
                          {"config", config_json()},
                          {"result", std::move(result)}};
  }
};

namespace detail {

// Renders one finished report to --out or the standard stream.
inline int finish(const RunState& rs, const nlohmann::json& result,
                  const std::string& text, int code, std::ostream& out,
                  std::ostream& err) {
  std::string body =
      rs.format == "json" ? rs.envelope(result).dump(2) + "\n" : text;
  if (!rs.out_path.empty()) {
    std::ofstream f(rs.out_path, std::ios::binary);
    if (!f) {
      err << "error: cannot write '" << rs.out_path << "'\n";
      return kBadArgument;
    }
    f << body;
    return code;
  }
  out << body;
  return code;
}

inline int cmd_info(const RunState& rs, std::ostream& out, std::ostream& err) {
  MealyAutomaton a = load_automaton(rs.input);
  nlohmann::json result{{"name", a.name()},
                        {"states", a.state_names()},
                        {"letters", a.letter_names()},
                        {"invertible", is_invertible(a)},
                        {"reversible", is_reversible(a)},
                        {"bireversible", is_bireversible(a)},
                        {"connected", is_connected(a)}};
  std::ostringstream text;
  text << "automaton: " << a.name() << "\n"
       << "states: " << a.num_states() << " (" << join(a.state_names(), " ")
       << ")\n"
       << "letters: " << a.num_letters() << " (" << join(a.letter_names(), " ")
       << ")\n"
       << "invertible: " << yes_no(is_invertible(a)) << "\n"
       << "reversible: " << yes_no(is_reversible(a)) << "\n"
       << "bireversible: " << yes_no(is_bireversible(a)) << "\n"
       << "connected: " << yes_no(is_connected(a)) << "\n";
  int code = kOk;
  try {
    result["minimized_states"] = minimize(a).num_states();
    ConnectionDegree cd = connection_degree(a, rs.budgets);
    result["connection_degree"] = {{"exact", cd.exact}, {"value", cd.value}};
    text << "minimized states: " << minimize(a).num_states() << "\n"
         << "connection degree: " << (cd.exact ? "exact " : "at least ")
         << cd.value << "\n";
  } catch (const BudgetExceededError& e) {
    result["partial"] = true;
    result["budget_error"] = e.what();
    text << "budget exceeded: " << e.what() << "\n";
    code = kBudgetExceeded;
  }
  return finish(rs, result, text.str(), code, out, err);
}

inline int cmd_orbit_tree(const RunState& rs, std::ostream& out,
                          std::ostream& err) {
  MealyAutomaton a = load_automaton(rs.input);
  if (!is_reversible(a))
    throw std::invalid_argument(
        "the orbit tree is defined for reversible automata");
  OrbitTree tree(a, rs.budgets);
  const int depth = rs.effective_depth();
  nlohmann::json result;
  std::string text;
  int code = kOk;
  try {
    if (rs.format == "dot") {
      std::string dot = tree.to_dot(depth);
      return finish(rs, nlohmann::json{}, dot, kOk, out, err);
    }
    result = tree.to_json(depth);
    std::ostringstream t;
    t << "orbit tree of " << a.name() << " to depth " << depth << "\n";
    for (const auto& n : result.at("nodes"))
      t << "  level " << n.at("level").get<int>() << ": "
        << n.at("rep").get<std::string>() << " (size "
        << n.at("size").get<std::uint64_t>() << ")\n";
    t << "heavy branch:";
    for (const auto& l : result.at("heavy_branch"))
      t << " " << l.get<int>();
    t << "\n";
    text = t.str();
  } catch (const BudgetExceededError& e) {
    result["partial"] = true;
    result["budget_error"] = e.what();
    text = std::string("budget exceeded: ") + e.what() + "\n";
    code = kBudgetExceeded;
  }
  return finish(rs, result, text, code, out, err);
}

inline int cmd_order(const RunState& rs, std::ostream& out,
                     std::ostream& err) {
  MealyAutomaton a = load_automaton(rs.input);
  StateWord w = parse_state_word(a, rs.word);
  nlohmann::json result{{"word", word_names(a, w)}};
  std::ostringstream text;
  text << "word: " << join(word_names(a, w), " ") << "\n";
  int code = kOk;
  try {
    OrderVerdict v = element_order(a, w, rs.budgets.k_budget, rs.budgets);
    result["order"] = order_json(v);
    GrowthTrajectory g = v.growth;
    if (v.finite && is_reversible(a))
      g = component_growth(a, w, rs.budgets.level_budget, rs.budgets);
    result["growth"] = growth_json(g);
    if (v.finite)
      text << "order: finite " << v.k << "\n"
           << "triviality closure: " << v.witness_closure << "\n";
    else
      text << "order: at least " << v.k << "\n";
    text << "growth:";
    for (std::uint64_t s : g.sizes) text << " " << s;
    text << (g.truncated ? " (truncated)\n" : "\n");
  } catch (const BudgetExceededError& e) {
    result["partial"] = true;
    result["budget_error"] = e.what();
    text << "budget exceeded: " << e.what() << "\n";
    code = kBudgetExceeded;
  }
  return finish(rs, result, text.str(), code, out, err);
}

inline int cmd_classify(const RunState& rs, std::ostream& out,
                        std::ostream& err) {
  MealyAutomaton a = load_automaton(rs.input);
  nlohmann::json result;
  std::ostringstream text;
  int code = kOk;
  try {
    GroupClassification got = classify_group(a, rs.budgets);
    bool verified = verify_certificate(a, got.certificate, rs.budgets);
    result = {{"verdict", GroupClassification::verdict_name(got.verdict)},
              {"certificate", got.certificate.to_json()},
              {"verified", verified}};
    text << "verdict: " << GroupClassification::verdict_name(got.verdict)
         << "\n"
         << "certificate: " << Certificate::kind_name(got.certificate.kind)
         << "\n"
         << "statement: " << got.certificate.statement << "\n"
         << "verified: " << yes_no(verified) << "\n";
  } catch (const BudgetExceededError& e) {
    result["partial"] = true;
    result["budget_error"] = e.what();
    text << "budget exceeded: " << e.what() << "\n";
    code = kBudgetExceeded;
  }
  return finish(rs, result, text.str(), code, out, err);
}

inline int cmd_find_infinite(const RunState& rs, std::ostream& out,
                             std::ostream& err) {
  MealyAutomaton a = load_automaton(rs.input);
  nlohmann::json result;
  std::ostringstream text;
  int code = kOk;
  try {
    InfiniteOrderSearch s =
        find_infinite_order_element(a, rs.budgets, rs.certified);
    const char* outcome =
        s.outcome == InfiniteOrderSearch::Outcome::Candidate ? "Candidate"
        : s.outcome == InfiniteOrderSearch::Outcome::NotApplicable
            ? "NotApplicable"
            : "NotFound";
    result = {{"outcome", outcome}, {"proven", s.proven}};
    text << "outcome: " << outcome << "\n";
    if (s.outcome == InfiniteOrderSearch::Outcome::Candidate) {
      result["word"] = word_names(a, s.word);
      result["order"] = order_json(s.order);
      result["growth"] = growth_json(s.growth);
      result["growth_threshold"] = s.growth_threshold;
      text << "word: " << join(word_names(a, s.word), " ") << "\n"
           << "order: at least " << s.order.k << "\n"
           << "growth threshold: " << s.growth_threshold << "\n"
           << "proven: " << yes_no(s.proven) << "\n";
    } else {
      result["reason"] = s.reason;
      text << "reason: " << s.reason << "\n";
    }
  } catch (const BudgetExceededError& e) {
    result["partial"] = true;
    result["budget_error"] = e.what();
    text << "budget exceeded: " << e.what() << "\n";
    code = kBudgetExceeded;
  }
  return finish(rs, result, text.str(), code, out, err);
}

inline int cmd_enumerate(const RunState& rs, std::ostream& out,
                         std::ostream& err) {
  CensusOptions opt;
  opt.num_states = rs.states;
  opt.num_letters = rs.letters;
  opt.require_invertible = rs.invertible;
  opt.require_reversible = rs.reversible;
  if (rs.connected) opt.connected = *rs.connected != 0;
  opt.classify = rs.classify;
  opt.budgets = rs.budgets;
  opt.table_budget = rs.table_budget;
  opt.workers = rs.workers;

  const std::string hash = rs.census_config_hash();
  if (!rs.checkpoint.empty()) {
    std::ifstream f(rs.checkpoint, std::ios::binary);
    if (f) {
      nlohmann::json j;
      try {
        f >> j;
        if (j.at("config_hash").get<std::string>() != hash) {
          err << "error: checkpoint '" << rs.checkpoint
              << "' was written by a different configuration\n";
          return kBadArgument;
        }
        opt.resume_index = j.at("emitted").get<std::size_t>();
      } catch (const nlohmann::json::exception&) {
        err << "error: checkpoint '" << rs.checkpoint
            << "' is not readable\n";
        return kBadArgument;
      }
    }
  }

  std::ofstream file;
  if (!rs.out_path.empty()) {
    file.open(rs.out_path, std::ios::binary);
    if (!file) {
      err << "error: cannot write '" << rs.out_path << "'\n";
      return kBadArgument;
    }
  }
  std::ostream& sink = rs.out_path.empty() ? out : file;

  const bool json = rs.format == "json";
  if (json)
    sink << nlohmann::json{{"tool", "orbitree"},
                           {"version", kVersion},
                           {"command", rs.command},
                           {"config", rs.config_json()}}
                .dump()
         << "\n";

  auto save_checkpoint = [&](std::size_t emitted) {
    if (rs.checkpoint.empty()) return;
    std::ofstream c(rs.checkpoint, std::ios::binary);
    c << nlohmann::json{{"tool", "orbitree"},
                        {"version", kVersion},
                        {"config_hash", hash},
                        {"emitted", emitted}}
             .dump()
      << "\n";
  };

  CensusSummary summary = run_census(opt, [&](const CensusItem& it) {
    if (json) {
      sink << it.to_json().dump() << "\n";
    } else {
      sink << it.index << " " << it.key << " inv=" << it.invertible
           << " rev=" << it.reversible << " birev=" << it.bireversible
           << " conn=" << it.connected;
      if (it.classification)
        sink << " verdict="
             << GroupClassification::verdict_name(it.classification->verdict);
      sink << "\n";
    }
    sink.flush();
    save_checkpoint(it.index + 1);
  });

  nlohmann::json sj{{"classes", summary.classes},
                    {"emitted", summary.emitted},
                    {"finite", summary.finite},
                    {"infinite", summary.infinite},
                    {"unknown", summary.unknown},
                    {"unclassified", summary.unclassified},
                    {"table_budget_hit", summary.table_budget_hit}};
  if (json)
    sink << nlohmann::json{{"summary", sj}}.dump() << "\n";
  else
    sink << "classes=" << summary.classes << " emitted=" << summary.emitted
         << " finite=" << summary.finite << " infinite=" << summary.infinite
         << " unknown=" << summary.unknown
         << " unclassified=" << summary.unclassified
         << " table_budget_hit=" << summary.table_budget_hit << "\n";
  save_checkpoint(summary.classes);
  return summary.table_budget_hit ? kBudgetExceeded : kOk;
}

}  // namespace detail

// Parses `args` (no program name) and runs one subcommand.  All reports go
// to `out` or --out; diagnostics go to `err`.
inline int run_cli(const std::vector<std::string>& args, std::ostream& out,
                   std::ostream& err) {
  RunState rs;
  if (const char* scale = std::getenv("ORBITREE_BUDGET_SCALE"))
    rs.budgets = rs.budgets.scaled(std::strtod(scale, nullptr));

  CLI::App app{"orbit trees, orbital words, and finiteness certificates "
               "for Mealy automata"};
  app.name("orbitree");
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);
  app.option_defaults()->always_capture_default();

  auto add_common = [&](CLI::App* cmd, bool with_input,
                        std::vector<std::string> formats) {
    if (with_input)
      cmd->add_option("input", rs.input, "automaton description file")
          ->required();
    cmd->add_option("--format", rs.format, "report format")
        ->check(CLI::IsMember(formats));
    cmd->add_option("--out", rs.out_path, "write the report to this file");
    cmd->add_option("--seed", rs.seed, "seed echoed into reports");
    Budgets& b = rs.budgets;
    cmd->add_option("--member-budget", b.member_budget,
                    "words per orbit enumeration");
    cmd->add_option("--max-level", b.max_level,
                    "connection degree scan depth");
    cmd->add_option("--tree-depth", b.tree_depth,
                    "default orbit tree expansion");
    cmd->add_option("--k-budget", b.k_budget, "powers tried per order query");
    cmd->add_option("--level-budget", b.level_budget,
                    "levels per growth trajectory");
    cmd->add_option("--closure-elements", b.closure_elements,
                    "distinct actions per closure");
    cmd->add_option("--closure-nodes", b.closure_nodes,
                    "total search nodes per closure");
    cmd->add_option("--enum-max-len", b.enum_max_len,
                    "cyclically orbital enumeration length");
    cmd->add_option("--growth-offset", b.growth_offset,
                    "growth threshold exponent offset");
    cmd->add_option("--repetition-budget", b.repetition_budget,
                    "rounds in the equivalence search");
    cmd->add_option("--filler-order-cap", b.filler_order_cap,
                    "order bound for filler words");
  };

  CLI::App* info = app.add_subcommand(
      "info", "structural flags, minimized size, connection degree");
  add_common(info, true, {"text", "json"});

  CLI::App* tree = app.add_subcommand(
      "orbit-tree", "labeled orbit tree with its heavy branch");
  add_common(tree, true, {"text", "json", "dot"});
  tree->add_option("--depth", rs.depth, "expansion depth")
      ->check(CLI::NonNegativeNumber);

  CLI::App* order = app.add_subcommand(
      "order", "order verdict and growth table for one word");
  add_common(order, true, {"text", "json"});
  order->add_option("--word", rs.word, "state word, e.g. 'xyz' or 'x y z'")
      ->required();

  CLI::App* classify = app.add_subcommand(
      "classify", "finiteness verdict with a checkable certificate");
  add_common(classify, true, {"text", "json"});

  CLI::App* find = app.add_subcommand(
      "find-infinite", "search for an infinite-order element");
  add_common(find, true, {"text", "json"});
  find->add_flag("--certified", rs.certified,
                 "treat the group as already certified infinite");

  CLI::App* enumerate = app.add_subcommand(
      "enumerate", "census of small automata up to isomorphism");
  add_common(enumerate, false, {"text", "json"});
  enumerate->get_option("--format")->default_str("json");
  enumerate->add_option("--states", rs.states, "stateset size")
      ->check(CLI::Range(1, 3));
  enumerate->add_option("--letters", rs.letters, "alphabet size")
      ->check(CLI::Range(1, 3));
  enumerate->add_flag("--invertible,!--no-invertible", rs.invertible,
                      "keep invertible automata only");
  enumerate->add_flag("--reversible,!--no-reversible", rs.reversible,
                      "keep reversible automata only");
  enumerate->add_option("--connected", rs.connected,
                        "keep connected (1) or disconnected (0) only")
      ->check(CLI::IsMember({0, 1}));
  enumerate->add_flag("--classify,!--no-classify", rs.classify,
                      "classify every invertible item");
  enumerate->add_option("--table-budget", rs.table_budget,
                        "tables scanned in the general mode");
  enumerate->add_option("--workers", rs.workers, "classification threads")
      ->check(CLI::Range(1, 64));
  enumerate->add_option("--checkpoint", rs.checkpoint,
                        "progress file for resumable runs");

  try {
    app.parse(std::vector<std::string>(args.rbegin(), args.rend()));
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::CallForVersion&) {
    out << kVersion << "\n";
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kBadArgument;
  }

  CLI::App* picked = app.get_subcommands().front();
  rs.command = picked->get_name();
  if (picked->get_option("--format")->count() == 0)
    rs.format = rs.command == "enumerate" ? "json" : "text";
  try {
    if (picked == info) return detail::cmd_info(rs, out, err);
    if (picked == tree) return detail::cmd_orbit_tree(rs, out, err);
    if (picked == order) return detail::cmd_order(rs, out, err);
    if (picked == classify) return detail::cmd_classify(rs, out, err);
    if (picked == find) return detail::cmd_find_infinite(rs, out, err);
    return detail::cmd_enumerate(rs, out, err);
  } catch (const ParseError& e) {
    err << "parse error: " << e.what() << "\n";
    return kParseError;
  } catch (const BudgetExceededError& e) {
    err << "budget exceeded: " << e.what() << "\n";
    return kBudgetExceeded;
  } catch (const UnknownStateError& e) {
    err << "error: " << e.what() << "\n";
    return kBadArgument;
  } catch (const NotInvertibleError& e) {
    err << "error: " << e.what() << "\n";
    return kBadArgument;
  } catch (const AlphabetMismatchError& e) {
    err << "error: " << e.what() << "\n";
    return kBadArgument;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << "\n";
    return kBadArgument;
  } catch (const std::runtime_error& e) {
    err << "error: " << e.what() << "\n";
    return kBadArgument;
  }
}

}  // namespace orbitree::cli
