#include <catch2/catch_amalgamated.hpp>

#include <random>
#include <set>

#include "corpus.hpp"
#include "oracles.hpp"
#include "orbitree/automaton.hpp"

using namespace orbitree;

namespace {

LetterWord letters(const MealyAutomaton& a, const std::string& text) {
  LetterWord w;
  for (char c : text) {
    auto idx = a.letter_index(std::string(1, c));
    REQUIRE(idx.has_value());
    w.push_back(*idx);
  }
  return w;
}

StateWord states(const MealyAutomaton& a, const std::string& text) {
  StateWord u;
  for (char c : text) {
    auto idx = a.state_index(std::string(1, c));
    REQUIRE(idx.has_value());
    u.push_back(*idx);
  }
  return u;
}

}  // namespace

TEST_CASE("parser reads the bundled machines") {
  auto a1 = corpus::a1();
  CHECK(a1.name() == "a1");
  CHECK(a1.num_states() == 3);
  CHECK(a1.num_letters() == 4);
  CHECK(a1.state_names() == std::vector<std::string>{"x", "y", "z"});
  CHECK(a1.letter_names() == std::vector<std::string>{"1", "2", "3", "4"});

  symbol_t x = *a1.state_index("x"), z = *a1.state_index("z");
  symbol_t l4 = *a1.letter_index("4"), l3 = *a1.letter_index("3");
  CHECK(a1.delta(x, l4) == z);
  CHECK(a1.rho(x, l4) == l3);

  auto a2 = corpus::a2();
  symbol_t y2 = *a2.state_index("y"), z2 = *a2.state_index("z");
  CHECK(a2.delta(y2, *a2.letter_index("3")) == z2);
  CHECK(a2.rho(z2, *a2.letter_index("1")) == *a2.letter_index("2"));
}

TEST_CASE("serialization round-trips") {
  for (const char* file : {"a1.mealy", "a2.mealy", "i3.mealy", "cs.mealy"}) {
    auto a = load_automaton(corpus::path(file));
    auto b = parse_automaton(to_text(a));
    CHECK(a == b);
    CHECK(a.name() == b.name());
  }
}

TEST_CASE("parser accepts free-form spacing and comments") {
  auto a = parse_automaton(
      "# toy machine\n"
      "mealy toy\n"
      "alphabet 0 1\n\n"
      "states p q  # two states\n"
      "p : 0|1->q 1|0->p\n"
      "q: 1|1->q 0|0->q\n");
  CHECK(a.num_states() == 2);
  CHECK(a.delta(*a.state_index("p"), *a.letter_index("0")) ==
        *a.state_index("q"));
  CHECK(a.rho(*a.state_index("q"), *a.letter_index("1")) ==
        *a.letter_index("1"));
}

TEST_CASE("parser reports precise errors") {
  auto kind_of = [](const std::string& text) {
    try {
      parse_automaton(text);
    } catch (const ParseError& e) {
      return std::make_pair(e.kind(), e.line());
    }
    return std::make_pair(ParseError::Kind::Syntax, -1);
  };

  SECTION("missing transition") {
    auto [kind, line] = kind_of(
        "mealy t\nalphabet 1 2\nstates p\np: 1|1->p\n");
    CHECK(kind == ParseError::Kind::MissingTransition);
    CHECK(line == 4);
  }
  SECTION("missing state line") {
    auto [kind, line] = kind_of(
        "mealy t\nalphabet 1\nstates p q\np: 1|1->q\n");
    CHECK(kind == ParseError::Kind::MissingTransition);
    CHECK(line == 4);
  }
  SECTION("duplicate transition") {
    auto [kind, line] = kind_of(
        "mealy t\nalphabet 1\nstates p\np: 1|1->p 1|1->p\n");
    CHECK(kind == ParseError::Kind::DuplicateTransition);
    CHECK(line == 4);
  }
  SECTION("redefined state") {
    auto [kind, line] = kind_of(
        "mealy t\nalphabet 1\nstates p q\np: 1|1->q\nq: 1|1->p\np: 1|1->p\n");
    CHECK(kind == ParseError::Kind::DuplicateTransition);
    CHECK(line == 6);
  }
  SECTION("unknown letter") {
    auto [kind, line] = kind_of(
        "mealy t\nalphabet 1\nstates p\np: 2|1->p\n");
    CHECK(kind == ParseError::Kind::UnknownSymbol);
    CHECK(line == 4);
  }
  SECTION("unknown target state") {
    auto [kind, line] = kind_of(
        "mealy t\nalphabet 1\nstates p\np: 1|1->r\n");
    CHECK(kind == ParseError::Kind::UnknownSymbol);
    CHECK(line == 4);
  }
  SECTION("empty alphabet") {
    auto [kind, line] = kind_of("mealy t\nalphabet\nstates p\n");
    CHECK(kind == ParseError::Kind::EmptyAlphabet);
    CHECK(line == 2);
  }
  SECTION("empty stateset") {
    auto [kind, line] = kind_of("mealy t\nalphabet 1\nstates\n");
    CHECK(kind == ParseError::Kind::EmptyStateset);
    CHECK(line == 3);
  }
  SECTION("duplicate state name") {
    auto [kind, line] = kind_of("mealy t\nalphabet 1\nstates p p\n");
    CHECK(kind == ParseError::Kind::DuplicateName);
    CHECK(line == 3);
  }
  SECTION("mangled transition token") {
    auto [kind, line] = kind_of(
        "mealy t\nalphabet 1\nstates p\np: 1->p\n");
    CHECK(kind == ParseError::Kind::Syntax);
    CHECK(line == 4);
  }
}

TEST_CASE("invertibility and reversibility") {
  CHECK(is_invertible(corpus::a1()));
  CHECK(is_reversible(corpus::a1()));
  CHECK(is_bireversible(corpus::a1()));
  CHECK(is_bireversible(corpus::a2()));
  CHECK(is_bireversible(corpus::i3()));
  CHECK(is_bireversible(corpus::cs()));

  auto sink = parse_automaton(
      "mealy sink\nalphabet 1 2\nstates p q\n"
      "p: 1|1->p 2|1->p\nq: 1|2->p 2|1->q\n");
  CHECK_FALSE(is_invertible(sink));
  CHECK_FALSE(is_reversible(sink));
  CHECK_THROWS_AS(inverse(sink), NotInvertibleError);

  std::mt19937 rng(7101);
  for (int t = 0; t < 200; ++t) {
    auto a = oracle::random_automaton(rng, 2 + t % 3, 2 + t % 2);
    bool inv = true;
    for (int q = 0; inv && q < a.num_states(); ++q) {
      std::set<symbol_t> outs;
      for (int i = 0; i < a.num_letters(); ++i)
        outs.insert(a.rho(symbol_t(q), symbol_t(i)));
      inv = outs.size() == static_cast<std::size_t>(a.num_letters());
    }
    CHECK(is_invertible(a) == inv);
  }
}

TEST_CASE("dual swaps the two coordinates") {
  auto a1 = corpus::a1();
  auto d = dual(a1);
  CHECK(d.num_states() == 4);
  CHECK(d.num_letters() == 3);
  CHECK(d.state_names() == a1.letter_names());
  CHECK(d.letter_names() == a1.state_names());
  CHECK(dual(d) == a1);

  std::mt19937 rng(7102);
  for (int t = 0; t < 100; ++t) {
    auto a = oracle::random_automaton(rng, 2 + t % 4, 2 + t % 3);
    CHECK(dual(dual(a)) == a);
    CHECK(is_invertible(a) == is_reversible(dual(a)));
    CHECK(is_reversible(a) == is_invertible(dual(a)));
  }
}

TEST_CASE("inverse undoes the action") {
  auto a1 = corpus::a1();
  auto inv = inverse(a1);
  CHECK(inverse(inv) == a1);

  std::mt19937 rng(7103);
  for (int t = 0; t < 100; ++t) {
    auto u = oracle::random_word(rng, a1, 1 + t % 5);
    auto w = oracle::random_letters(rng, a1, 1 + t % 7);
    StateWord rev(u.rbegin(), u.rend());
    CHECK(apply_action(inv, u, apply_action(a1, rev, w)) == w);
  }
  CHECK(is_reversible(inverse(corpus::a2())));
}

TEST_CASE("apply_action matches hand computations") {
  auto a1 = corpus::a1();
  CHECK(apply_action(a1, states(a1, "x"), letters(a1, "1234")) ==
        letters(a1, "2143"));
  CHECK(apply_action(a1, states(a1, "z"), letters(a1, "44")) ==
        letters(a1, "13"));

  auto a2 = corpus::a2();
  CHECK(apply_action(a2, states(a2, "z"), letters(a2, "123")) ==
        letters(a2, "213"));
  CHECK(apply_action(a2, states(a2, "yz"), letters(a2, "33")) ==
        letters(a2, "33"));

  SECTION("prefix stability and length preservation") {
    std::mt19937 rng(7104);
    for (int t = 0; t < 200; ++t) {
      auto a = oracle::random_automaton(rng, 2 + t % 3, 2 + t % 3);
      auto u = oracle::random_word(rng, a, 1 + t % 4);
      auto w = oracle::random_letters(rng, a, 2 + t % 6);
      auto img = apply_action(a, u, w);
      REQUIRE(img.size() == w.size());
      LetterWord head(w.begin(), w.begin() + w.size() / 2);
      auto img_head = apply_action(a, u, head);
      CHECK(LetterWord(img.begin(), img.begin() + head.size()) == img_head);
    }
  }
}

TEST_CASE("power composes actions") {
  auto a1 = corpus::a1();
  CHECK(power(a1, 1) == a1);

  auto p2 = power(a1, 2);
  CHECK(p2.num_states() == 9);
  CHECK(p2.letter_names() == a1.letter_names());
  REQUIRE(p2.state_index("xy").has_value());

  std::mt19937 rng(7105);
  for (int t = 0; t < 100; ++t) {
    auto u = oracle::random_word(rng, a1, 2);
    auto w = oracle::random_letters(rng, a1, 5);
    auto name = a1.state_word_name(u);
    StateWord packed{*p2.state_index(name)};
    CHECK(apply_action(p2, packed, w) == apply_action(a1, u, w));
  }

  CHECK(power(corpus::a2(), 3).num_states() == 27);
  CHECK_THROWS_AS(power(corpus::a2(), 6), BudgetExceededError);
}

TEST_CASE("minimize collapses equivalent states") {
  CHECK(minimize(corpus::i3()).num_states() == 1);
  CHECK(minimize(corpus::cs()).num_states() == 1);
  CHECK(minimize(corpus::a1()).num_states() == 3);
  CHECK(minimize(corpus::a2()).num_states() == 3);

  auto m = minimize(power(corpus::a1(), 2));
  CHECK(m.num_states() == 9);
  auto mm = minimize(m);
  CHECK(mm.num_states() == m.num_states());

  SECTION("representatives keep their behavior") {
    std::mt19937 rng(7106);
    auto a = power(corpus::a2(), 2);
    auto ma = minimize(a);
    for (const auto& name : ma.state_names()) {
      auto here = *ma.state_index(name);
      auto there = *a.state_index(name);
      for (int t = 0; t < 20; ++t) {
        auto w = oracle::random_letters(rng, a, 1 + t % 6);
        CHECK(apply_action(ma, {here}, w) == apply_action(a, {there}, w));
      }
    }
  }

  SECTION("merged pair") {
    auto twin = parse_automaton(
        "mealy twin\nalphabet 1 2\nstates p q\n"
        "p: 1|2->q 2|1->p\nq: 1|2->p 2|1->q\n");
    CHECK(minimize(twin).num_states() == 1);
  }
}

TEST_CASE("isomorphism is detected up to state relabeling") {
  auto a1 = corpus::a1();
  auto relabeled = parse_automaton(
      "mealy b\nalphabet 1 2 3 4\nstates u v w\n"
      "w: 1|2->w 2|1->w 3|4->w 4|3->u\n"
      "v: 1|2->v 2|1->u 3|4->v 4|3->w\n"
      "u: 1|2->u 2|3->v 3|4->u 4|1->v\n");
  CHECK(are_isomorphic(a1, relabeled));
  CHECK(are_isomorphic(relabeled, a1));
  CHECK_FALSE(are_isomorphic(corpus::a2(), corpus::i3()));
  CHECK_THROWS_AS(are_isomorphic(a1, corpus::cs()), AlphabetMismatchError);

  SECTION("agrees with the brute-force oracle") {
    std::mt19937 rng(7107);
    int positives = 0;
    for (int t = 0; t < 150; ++t) {
      auto a = oracle::random_automaton(rng, 2 + t % 3, 2);
      auto b = oracle::random_automaton(rng, a.num_states(), 2);
      bool expected = oracle::brute_isomorphic(a, b);
      positives += expected;
      CHECK(are_isomorphic(a, b) == expected);
    }
    // Shuffled copies guarantee positive cases as well.
    for (int t = 0; t < 50; ++t) {
      auto a = oracle::random_automaton(rng, 4, 3);
      std::string text = to_text(a);
      auto names = a.state_names();
      std::shuffle(names.begin(), names.end(), rng);
      for (int q = 0; q < a.num_states(); ++q) {
        // Rename q<i> to a fresh token, then to the shuffled target.
        std::string from = "q" + std::to_string(q);
        std::string tmp = "t" + std::to_string(q);
        size_t pos = 0;
        while ((pos = text.find(from, pos)) != std::string::npos) {
          text.replace(pos, from.size(), tmp);
          pos += tmp.size();
        }
      }
      for (int q = 0; q < a.num_states(); ++q) {
        std::string from = "t" + std::to_string(q);
        const std::string& to = names[q];
        size_t pos = 0;
        while ((pos = text.find(from, pos)) != std::string::npos) {
          text.replace(pos, from.size(), to);
          pos += to.size();
        }
      }
      CHECK(are_isomorphic(a, parse_automaton(text)));
    }
  }
}

TEST_CASE("connectivity of the transition graph") {
  CHECK(is_connected(corpus::a1()));
  CHECK(is_connected(corpus::cs()));
  CHECK_FALSE(is_connected(corpus::a2()));
  CHECK_FALSE(is_connected(corpus::i3()));
}
