#include "wts/term.hpp"

#include <catch2/catch_amalgamated.hpp>

using namespace wts;

namespace {
const RankedAlphabet kSda{{"sigma", 2}, {"delta", 1}, {"alpha", 0}};
}

TEST_CASE("stats of sigma(delta(alpha),alpha)") {
  Tree t = parse_term("sigma(delta(alpha),alpha)", kSda);
  TreeStats st = tree_stats(t);
  REQUIRE(st.size == 4);
  REQUIRE(st.height == 3);
  REQUIRE(st.positions == std::vector<Position>{{}, {1}, {1, 1}, {2}});
  REQUIRE(st.paths == std::set<std::string>{"sigma delta alpha", "sigma alpha"});
}

TEST_CASE("stats of a single leaf") {
  Tree t = parse_term("alpha", kSda);
  TreeStats st = tree_stats(t);
  REQUIRE(st.size == 1);
  REQUIRE(st.height == 1);
  REQUIRE(st.paths == std::set<std::string>{"alpha"});
}

TEST_CASE("subtree and label lookup") {
  Tree t = parse_term("sigma(delta(alpha),alpha)");
  REQUIRE(label_at(t, {1}) == "delta");
  REQUIRE(label_at(t, {1, 1}) == "alpha");
  REQUIRE(subtree(t, {2}) == Tree("alpha"));
  REQUIRE_THROWS_AS(subtree(t, {3}), std::out_of_range);
  REQUIRE_THROWS_AS(subtree(t, {1, 1, 1}), std::out_of_range);
}

TEST_CASE("unbalancedness over designated binary symbols") {
  Tree t = parse_term("sigma(delta(hash,sigma(hash,hash)),hash)");
  REQUIRE(unbalancedness(t, {"sigma", "delta"}) == 2);
  REQUIRE(unbalancedness(parse_term("hash"), {"sigma", "delta"}) == 0);
  // Non-designated binary nodes contribute nothing.
  REQUIRE(unbalancedness(parse_term("pair(delta(hash,hash),hash)"), {"delta"}) == 0);
}

TEST_CASE("parse errors carry positions and reasons") {
  REQUIRE_THROWS_AS(parse_term("sigma(alpha"), ParseError);
  REQUIRE_THROWS_AS(parse_term("alpha)"), ParseError);
  REQUIRE_THROWS_AS(parse_term(""), ParseError);
  REQUIRE_THROWS_AS(parse_term("si gma"), ParseError);
  REQUIRE_THROWS_AS(parse_term("sigma()"), ParseError);
  REQUIRE_THROWS_AS(parse_term("bogus", kSda), ParseError);
  REQUIRE_THROWS_AS(parse_term("sigma(alpha)", kSda), ParseError);
  REQUIRE_THROWS_AS(parse_term("alpha(alpha)", kSda), ParseError);
}

TEST_CASE("whitespace is insignificant") {
  REQUIRE(parse_term(" sigma ( delta( alpha ) ,\nalpha )", kSda) ==
          parse_term("sigma(delta(alpha),alpha)", kSda));
}

TEST_CASE("alphabet invariants") {
  RankedAlphabet a;
  a.add("f", 2);
  REQUIRE_THROWS_AS(a.add("f", 1), std::invalid_argument);
  a.add("f", 2);  // same rank is idempotent
  REQUIRE_FALSE(a.has_nullary());
  a.add("c", 0);
  REQUIRE(a.has_nullary());
  REQUIRE(a.maxrk() == 2);
  REQUIRE(a.of_rank(0) == std::vector<std::string>{"c"});
  REQUIRE_THROWS_AS(a.rank("nope"), std::invalid_argument);
}

TEST_CASE("render quotes labels outside the identifier charset") {
  Tree t("<(true, id id),sigma>", {Tree("alpha"), Tree("alpha")});
  std::string text = render(t);
  REQUIRE(text == "\"<(true, id id),sigma>\"(alpha,alpha)");
  REQUIRE(parse_term(text) == t);
}

TEST_CASE("parse-render round trip on enumerated trees") {
  for (const Tree& t : enumerate_trees(kSda, 6)) {
    REQUIRE(parse_term(render(t), kSda) == t);
  }
}

TEST_CASE("position set is prefix- and left-sibling-closed, lex sorted") {
  for (const Tree& t : enumerate_trees(kSda, 6)) {
    std::vector<Position> ps = positions(t);
    REQUIRE(std::is_sorted(ps.begin(), ps.end(), lex_less));
    std::set<Position> pset(ps.begin(), ps.end());
    REQUIRE(pset.size() == ps.size());
    for (const Position& w : ps) {
      if (!w.empty()) {
        Position parent(w.begin(), w.end() - 1);
        REQUIRE(pset.count(parent) == 1);
        if (w.back() > 1) {
          Position left = w;
          --left.back();
          REQUIRE(pset.count(left) == 1);
        }
      }
    }
  }
}

TEST_CASE("size and height agree with position characterizations") {
  for (const Tree& t : enumerate_trees(kSda, 6)) {
    std::vector<Position> ps = positions(t);
    REQUIRE(size(t) == ps.size());
    std::size_t deepest = 0;
    for (const Position& w : ps) deepest = std::max(deepest, w.size());
    REQUIRE(height(t) == static_cast<int>(deepest) + 1);
  }
}

TEST_CASE("enumeration is exhaustive and duplicate-free at small sizes") {
  std::vector<Tree> ts = enumerate_trees(kSda, 6);
  REQUIRE(ts.size() == 38);  // 1+1+2+4+9+21 over {sigma/2, delta/1, alpha/0}
  std::set<Tree> distinct(ts.begin(), ts.end());
  REQUIRE(distinct.size() == ts.size());
  for (const Tree& t : ts) REQUIRE(size(t) <= 6);
  // Sizes are non-decreasing in enumeration order.
  for (std::size_t i = 1; i < ts.size(); ++i) REQUIRE(size(ts[i - 1]) <= size(ts[i]));
}

TEST_CASE("position order: prefixes first, then sibling index") {
  REQUIRE(lex_less({1}, {1, 1}));
  REQUIRE(lex_less({1, 1}, {2}));
  REQUIRE(lex_less({}, {1}));
  REQUIRE_FALSE(lex_less({2}, {1, 9}));
}
