#include "wts/logic.hpp"

#include <catch2/catch_amalgamated.hpp>

#include "wts/grammar.hpp"
#include "wts/grammar_io.hpp"

using namespace wts;

namespace {

std::string fixture(const std::string& name) { return std::string(WTS_FIXTURES_DIR "/") + name; }

Tree leaf(const std::string& s) { return Tree{s, {}}; }

Tree balanced(int n) {
  Tree arm = leaf("alpha");
  for (int i = 0; i < n; ++i) arm = Tree{"delta", {arm}};
  return Tree{"sigma", {arm, arm}};
}

Tree spine(const std::string& unary, int n, const std::string& last) {
  Tree t = leaf(last);
  for (int i = 0; i < n; ++i) t = Tree{unary, {t}};
  return t;
}

const MMonoid kNat = *MMonoid::by_name("bimonoid(nat_inf)");

std::map<std::string, Op> ones_family() {
  return {{"sigma", Op::mul(2, Value::of(1))},
          {"delta", Op::mul(1, Value::of(1))},
          {"alpha", Op::mul(0, Value::of(1))}};
}

// Leaf counter: picks of a position fold to one, guarded to leaf picks.
MExpr leaf_counter() {
  return MExpr::sum_pos("x", MExpr::guard(Formula::label("alpha", "x"), MExpr::hom(ones_family())));
}

// Two to the number of delta positions.
MExpr delta_subsets() {
  Formula only_deltas = Formula::forall(
      "y", Formula::disj(Formula::negate(Formula::in("y", "X")), Formula::label("delta", "y")));
  return MExpr::sum_set("X", MExpr::guard(std::move(only_deltas), MExpr::hom(ones_family())));
}

}  // namespace

TEST_CASE("label and edge atoms") {
  Tree t = parse_term("sigma(delta(alpha),alpha)");
  Assignment a;
  a.pos["x"] = {};
  REQUIRE(models(t, Formula::label("sigma", "x"), a));
  REQUIRE_FALSE(models(t, Formula::label("alpha", "x"), a));

  a.pos["y"] = {1};
  REQUIRE(models(t, Formula::edge(1, "x", "y"), a));
  REQUIRE_FALSE(models(t, Formula::edge(2, "x", "y"), a));
  a.pos["y"] = {2};
  REQUIRE(models(t, Formula::edge(2, "x", "y"), a));

  a.pos["y"] = {1, 1};
  REQUIRE_FALSE(models(t, Formula::edge(1, "x", "y"), a));
  REQUIRE(models(t, Formula::edge_plus("x", "y"), a));
  REQUIRE_FALSE(models(t, Formula::edge_plus("y", "x"), a));

  a.pos["y"] = {};
  REQUIRE_FALSE(models(t, Formula::edge_plus("x", "y"), a));
  a.pos["x"] = {1};
  a.pos["y"] = {2};
  REQUIRE_FALSE(models(t, Formula::edge_plus("x", "y"), a));

  REQUIRE_THROWS_AS(models(t, Formula::label("alpha", "z"), a), std::invalid_argument);
  REQUIRE_THROWS_AS(Formula::edge(0, "x", "y"), std::invalid_argument);
}

TEST_CASE("membership and connectives") {
  Tree t = parse_term("delta(alpha)");
  Assignment a;
  a.pos["x"] = {};
  a.pos["y"] = {1};
  a.sets["X"] = {{1}};
  REQUIRE(models(t, Formula::in("y", "X"), a));
  REQUIRE_FALSE(models(t, Formula::in("x", "X"), a));
  REQUIRE(models(t, Formula::negate(Formula::in("x", "X")), a));
  REQUIRE(models(t, Formula::disj(Formula::in("x", "X"), Formula::in("y", "X")), a));
  REQUIRE_FALSE(models(t, Formula::conj(Formula::in("x", "X"), Formula::in("y", "X")), a));
  REQUIRE(models(t, Formula::implies(Formula::in("x", "X"), Formula::in("y", "X")), a));
  REQUIRE_THROWS_AS(models(t, Formula::in("y", "Z"), a), std::invalid_argument);
}

TEST_CASE("position quantifiers") {
  Tree t = parse_term("sigma(delta(alpha),alpha)");
  REQUIRE(models(t, Formula::exists("x", Formula::label("delta", "x"))));
  REQUIRE_FALSE(models(t, Formula::exists("x", Formula::label("beta", "x"))));
  Formula labeled = Formula::disj(Formula::label("sigma", "x"),
                                  Formula::disj(Formula::label("delta", "x"), Formula::label("alpha", "x")));
  REQUIRE(models(t, Formula::forall("x", labeled)));
  REQUIRE_FALSE(models(t, Formula::forall("x", Formula::label("alpha", "x"))));

  // The bound name does not matter.
  Formula renamed = Formula::exists("z", Formula::label("delta", "z"));
  REQUIRE(models(t, renamed) == models(t, Formula::exists("x", Formula::label("delta", "x"))));

  // The inner binding shadows the outer one.
  Formula shadow =
      Formula::exists("x", Formula::conj(Formula::label("alpha", "x"),
                                         Formula::exists("x", Formula::label("sigma", "x"))));
  REQUIRE(models(t, shadow));
}

TEST_CASE("set quantifiers enumerate subsets") {
  Tree t = parse_term("delta(alpha)");
  Assignment a;
  a.pos["x"] = {};
  a.pos["y"] = {1};
  Formula separating = Formula::conj(Formula::in("x", "X"), Formula::negate(Formula::in("y", "X")));
  REQUIRE(models(t, Formula::exists_set("X", separating), a));
  REQUIRE_FALSE(models(t, Formula::forall_set("X", separating), a));

  Formula renamed = Formula::conj(Formula::in("x", "Y"), Formula::negate(Formula::in("y", "Y")));
  REQUIRE(models(t, Formula::exists_set("Y", renamed), a) ==
          models(t, Formula::exists_set("X", separating), a));
  REQUIRE(models(t, Formula::forall_set("X", Formula::implies(Formula::in("x", "X"),
                                                              Formula::in("x", "X"))), a));

  Tree big = spine("delta", 21, "alpha");
  REQUIRE_THROWS_AS(models(big, Formula::exists_set("X", Formula::in("x", "X")), a),
                    std::domain_error);
}

TEST_CASE("ancestor relation matches its closure characterization") {
  // Every set that contains the children of x and is closed under child
  // steps contains exactly the proper descendants of x.
  Formula seed = Formula::forall(
      "v", Formula::implies(Formula::edge_any("x", "v", 2), Formula::in("v", "X")));
  Formula closed = Formula::forall(
      "u", Formula::forall("v", Formula::implies(Formula::conj(Formula::in("u", "X"),
                                                               Formula::edge_any("u", "v", 2)),
                                                 Formula::in("v", "X"))));
  Formula characterization = Formula::forall_set(
      "X", Formula::implies(Formula::conj(seed, closed), Formula::in("y", "X")));
  Formula native = Formula::edge_plus("x", "y");

  RankedAlphabet sigma{{"sigma", 2}, {"delta", 1}, {"alpha", 0}};
  int checked = 0;
  for (const Tree& t : enumerate_trees(sigma, 6)) {
    Assignment a;
    for (const Position& x : positions(t))
      for (const Position& y : positions(t)) {
        a.pos["x"] = x;
        a.pos["y"] = y;
        if (models(t, native, a) != models(t, characterization, a)) {
          CAPTURE(render(t), x, y);
          REQUIRE(false);
        }
        ++checked;
      }
  }
  REQUIRE(checked > 500);

  REQUIRE_THROWS_AS(Formula::edge_any("x", "y", 0), std::invalid_argument);
}

TEST_CASE("free variables") {
  Formula f = Formula::conj(Formula::label("alpha", "x"),
                            Formula::exists("y", Formula::edge_plus("y", "x")));
  VarSets v = free_vars(f);
  REQUIRE(v.pos == std::set<std::string>{"x"});
  REQUIRE(v.sets.empty());

  VarSets w = free_vars(Formula::in("x", "X"));
  REQUIRE(w.pos == std::set<std::string>{"x"});
  REQUIRE(w.sets == std::set<std::string>{"X"});

  MExpr open = MExpr::guard(Formula::label("alpha", "x"), MExpr::hom(ones_family()));
  REQUIRE(free_vars(open).pos == std::set<std::string>{"x"});
  REQUIRE_FALSE(is_sentence(open));
  REQUIRE(is_sentence(MExpr::sum_pos("x", open)));
  REQUIRE(is_sentence(leaf_counter()));
  REQUIRE(is_sentence(delta_subsets()));
}

TEST_CASE("homomorphic folding") {
  std::map<std::string, Op> fam = {{"sigma", Op::mul(2, Value::of(1))},
                                   {"delta", Op::mul(1, Value::of(2))},
                                   {"alpha", Op::mul(0, Value::of(1))}};
  REQUIRE(eval_mexpr(kNat, MExpr::hom(fam), balanced(2)) == Value::of(16));
  REQUIRE(eval_mexpr(kNat, MExpr::hom(fam), leaf("alpha")) == Value::of(1));

  // A symbol without an entry zeroes the whole fold.
  std::map<std::string, Op> partial = {{"alpha", Op::mul(0, Value::of(1))}};
  REQUIRE(eval_mexpr(kNat, MExpr::hom(partial), parse_term("delta(alpha)")) == Value::of(0));

  std::map<std::string, Op> wrong = {{"alpha", Op::mul(1, Value::of(1))}};
  REQUIRE_THROWS_AS(eval_mexpr(kNat, MExpr::hom(wrong), leaf("alpha")), std::invalid_argument);
}

TEST_CASE("guards and sums") {
  MExpr count = leaf_counter();
  REQUIRE(eval_mexpr(kNat, count, parse_term("sigma(delta(alpha),alpha)")) == Value::of(2));
  REQUIRE(eval_mexpr(kNat, count, spine("delta", 3, "alpha")) == Value::of(1));
  REQUIRE(eval_mexpr(kNat, count, balanced(2)) == Value::of(2));

  MExpr subsets = delta_subsets();
  REQUIRE(eval_mexpr(kNat, subsets, parse_term("sigma(delta(alpha),alpha)")) == Value::of(2));
  REQUIRE(eval_mexpr(kNat, subsets, spine("delta", 2, "alpha")) == Value::of(4));
  REQUIRE(eval_mexpr(kNat, subsets, leaf("alpha")) == Value::of(1));

  MExpr two = MExpr::plus(MExpr::hom(ones_family()), MExpr::hom(ones_family()));
  REQUIRE(eval_mexpr(kNat, two, leaf("alpha")) == Value::of(2));

  Formula nothing = Formula::exists("x", Formula::label("beta", "x"));
  MExpr guarded = MExpr::guard(nothing, MExpr::hom(ones_family()));
  REQUIRE(eval_mexpr(kNat, guarded, leaf("alpha")) == Value::of(0));

  MExpr open = MExpr::guard(Formula::label("alpha", "x"), MExpr::hom(ones_family()));
  REQUIRE_THROWS_AS(eval_mexpr(kNat, open, leaf("alpha")), std::invalid_argument);
  REQUIRE(eval_mexpr(kNat, count, leaf("alpha")) == Value::of(1));
}

TEST_CASE("worked behaviour tree details") {
  Tree za = leaf("<(top=gamma0, eps),alpha>");
  Tree zd = Tree{"<(top=gamma, pop),delta>", {za}};
  Tree zs = Tree{"<(true, id id),sigma>", {zd, zd}};
  Tree zeta = Tree{"<(true, push(gamma)),*>", {zs}};

  Formula above = Formula::forall(
      "y", Formula::implies(Formula::edge_plus("y", "x"),
                            Formula::label("<(true, push(gamma)),*>", "y")));
  Assignment a;
  a.pos["x"] = {1};
  REQUIRE(models(zeta, above, a));
  a.pos["x"] = {};
  REQUIRE(models(zeta, above, a));  // vacuous at the root
  REQUIRE_FALSE(models(zeta, Formula::label("<(true, id id),sigma>", "x"), a));

  LogicFile lf = load_logic_file(fixture("example7.sexp"));
  REQUIRE(models(zeta, *lf.expr.phi));
  REQUIRE(eval_mexpr(kNat, lf.expr.kids[0], zeta) == Value::of(8));

  Tree zeta2 = Tree{"<(true, push(gamma)),*>",
                    {Tree{"<(true, push(gamma)),*>",
                          {Tree{"<(true, id id),sigma>",
                                {Tree{"<(top=gamma, pop),delta>", {zd}},
                                 Tree{"<(top=gamma, pop),delta>", {zd}}}}}}}};
  REQUIRE(eval_mexpr(kNat, lf.expr.kids[0], zeta2) == Value::of(64));
}

TEST_CASE("set sums count subsets") {
  MExpr all_sets = MExpr::sum_set("X", MExpr::hom(ones_family()));
  REQUIRE(eval_mexpr(kNat, all_sets, spine("delta", 3, "alpha")) == Value::of(16));
  REQUIRE(eval_mexpr(kNat, all_sets, leaf("alpha")) == Value::of(2));
  REQUIRE_THROWS_AS(eval_mexpr(kNat, all_sets, spine("delta", 21, "alpha")), std::domain_error);
}

TEST_CASE("single behaviour at segment cap zero") {
  RankedAlphabet sigma{{"sigma", 2}, {"delta", 1}, {"alpha", 0}};
  BehaviourAlphabet delta = plain_behaviour_alphabet(sigma);
  std::map<std::string, Op> fam = {{plain_ext_symbol("sigma", 2), Op::mul(2, Value::of(1))},
                                   {plain_ext_symbol("delta", 1), Op::mul(1, Value::of(1))},
                                   {plain_ext_symbol("alpha", 0), Op::mul(0, Value::of(1))}};
  MExpr e = MExpr::hom(fam);
  for (const Tree& xi : {leaf("alpha"), balanced(2), spine("delta", 3, "alpha")}) {
    BehSumResult r = eval_behsum(kNat, e, delta, xi, 0);
    REQUIRE(r.value == Value::of(1));
    REQUIRE(r.exact);
  }
}

TEST_CASE("expression files parse") {
  LogicFile lf1 = load_logic_file(fixture("sent1.sexp"));
  REQUIRE_FALSE(lf1.behaviour_sum);
  REQUIRE(lf1.expr == leaf_counter());

  LogicFile lf2 = load_logic_file(fixture("sent2.sexp"));
  REQUIRE_FALSE(lf2.behaviour_sum);
  REQUIRE(lf2.expr == delta_subsets());

  LogicFile lf7 = load_logic_file(fixture("example7.sexp"));
  REQUIRE(lf7.behaviour_sum);
  REQUIRE(lf7.preds == std::vector<std::string>{"true", "top=gamma", "top=gamma0"});
  REQUIRE(lf7.instrs == std::vector<std::string>{"id", "push(gamma)", "pop"});
  REQUIRE(lf7.expr.kind == MExpr::Kind::Guard);
  REQUIRE(lf7.expr.phi->kind == Formula::Kind::ExistsPos);
  const MExpr& hom = lf7.expr.kids[0];
  REQUIRE(hom.kind == MExpr::Kind::Hom);
  REQUIRE(hom.family.size() == 4);
  REQUIRE(hom.family.at("<(true, id id),sigma>") == Op::mul(2, Value::of(1)));
  REQUIRE(hom.family.at("<(true, push(gamma)),*>") == Op::mul(1, Value::of(2)));
  REQUIRE(hom.family.at("<(top=gamma, pop),delta>") == Op::mul(1, Value::of(2)));
  REQUIRE(hom.family.at("<(top=gamma0, eps),alpha>") == Op::mul(0, Value::of(1)));
  REQUIRE(is_sentence(lf7.expr));
}

TEST_CASE("expression file errors") {
  REQUIRE_THROWS_AS(parse_logic_file("(mexpr (hom) (hom))"), ParseError);
  REQUIRE_THROWS_AS(parse_logic_file("(mexpr (hom)) junk"), ParseError);
  REQUIRE_THROWS_AS(parse_logic_file("(foo (hom))"), ParseError);
  REQUIRE_THROWS_AS(parse_logic_file("(mexpr (hom (sym a mul(0,1)) (sym a mul(0,1))))"),
                    ParseError);
  REQUIRE_THROWS_AS(parse_logic_file("(mexpr (hom (sym a bogus)))"), ParseError);
  REQUIRE_THROWS_AS(parse_logic_file("(mexpr (guard (label a) (hom)))"), ParseError);
  REQUIRE_THROWS_AS(parse_logic_file("(mexpr (guard (edge one x y) (hom)))"), ParseError);
  REQUIRE_THROWS_AS(parse_logic_file("(mexpr (hom (sym <oops mul(0,1))))"), ParseError);
  REQUIRE_THROWS_AS(parse_logic_file("(mexpr (hom"), ParseError);
  REQUIRE_THROWS_AS(parse_logic_file("(behsum (preds true) (instrs id) (mexpr (hom)))"),
                    ParseError);
  REQUIRE_THROWS_AS(parse_logic_file("(behsum :delta (preds) (instrs id) (mexpr (hom)))"),
                    ParseError);
  REQUIRE_THROWS_AS(parse_logic_file("(behsum :delta (preds true) (instrs id) (sumx x (hom)))"),
                    ParseError);
}

TEST_CASE("behaviour sums match grammar evaluation") {
  Wrtg g = load_wrtg(fixture("ex_run.wrtg"));
  LogicFile lf = load_logic_file(fixture("example7.sexp"));
  BehaviourAlphabet delta =
      BehaviourAlphabet::corresponding(g.storage, lf.preds, lf.instrs, g.sigma);

  long expected = 1;
  for (int n = 0; n <= 3; ++n) {
    Tree xi = balanced(n);
    BehSumResult r = eval_behsum(g.mm, lf.expr, delta, xi);
    REQUIRE(r.exact);
    REQUIRE(r.value == Value::of(expected));
    // The grammar's own chain graph is cyclic, so its evaluation is
    // bounded rather than certified; the values still agree and are
    // stable under a larger cap.
    REQUIRE(r.value == evaluate(g, xi).value);
    REQUIRE(r.value == evaluate(g, xi, 12).value);
    expected *= 8;
  }

  for (const char* off : {"sigma(delta(alpha),alpha)", "delta(alpha)", "alpha"}) {
    Tree xi = parse_term(off);
    BehSumResult r = eval_behsum(g.mm, lf.expr, delta, xi);
    REQUIRE(r.exact);
    REQUIRE(r.value == Value::of(0));
    REQUIRE(evaluate(g, xi).value == Value::of(0));
  }

  MExpr open = MExpr::guard(Formula::label("alpha", "x"), MExpr::hom({}));
  REQUIRE_THROWS_AS(eval_behsum(g.mm, open, delta, leaf("alpha")), std::invalid_argument);
}

TEST_CASE("plain sentences embed into behaviour sentences") {
  Wrtg g = load_wrtg(fixture("ex_run.wrtg"));
  BehaviourAlphabet delta = plain_behaviour_alphabet(g.sigma);

  for (const char* name : {"sent1.sexp", "sent2.sexp"}) {
    LogicFile lf = load_logic_file(fixture(name));
    MExpr bar = embed_sentence(lf.expr, g.sigma);
    REQUIRE(bar.kind == MExpr::Kind::Guard);
    Formula no_star =
        Formula::negate(Formula::exists("x", Formula::label("<(true, id),*>", "x")));
    REQUIRE(*bar.phi == no_star);
    for (const Tree& xi : enumerate_trees(g.sigma, 5)) {
      BehSumResult r = eval_behsum(g.mm, bar, delta, xi, 4);
      REQUIRE(r.exact);
      REQUIRE(r.value == eval_mexpr(g.mm, lf.expr, xi));
    }
  }

  // Inner guards survive the embedding.
  MExpr bar2 = embed_sentence(delta_subsets(), g.sigma);
  REQUIRE(bar2.kids[0].kind == MExpr::Kind::SumSet);
  REQUIRE(bar2.kids[0].kids[0].kind == MExpr::Kind::Guard);

  // Behaviours with star positions contribute zero, so even the
  // unrestricted bounded sum agrees with the plain value.
  MExpr bar1 = embed_sentence(leaf_counter(), g.sigma);
  Tree xi = parse_term("delta(alpha)");
  BehaviourOptions opts;
  opts.segment_cap = 2;
  std::vector<Tree> all = behaviours_on(xi, delta, opts);
  REQUIRE(all.size() > 1);
  Value acc = g.mm.zero();
  for (const Tree& zeta : all) acc = g.mm.add(acc, eval_mexpr(g.mm, bar1, zeta));
  REQUIRE(acc == eval_mexpr(g.mm, leaf_counter(), xi));

  MExpr open = MExpr::guard(Formula::label("alpha", "x"), MExpr::hom(ones_family()));
  REQUIRE_THROWS_AS(embed_sentence(open, g.sigma), std::invalid_argument);
  MExpr foreign = MExpr::guard(Formula::exists("x", Formula::label("beta", "x")),
                               MExpr::hom(ones_family()));
  REQUIRE_THROWS_AS(embed_sentence(foreign, g.sigma), std::invalid_argument);
}
