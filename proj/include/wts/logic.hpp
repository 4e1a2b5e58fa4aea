#pragma once

// Monadic second-order formulas on trees, weighted expressions built
// from operation families, and behaviour-summed evaluation. Formulas
// talk about positions (first order) and position sets (second order);
// expressions pair formulas with tree homomorphisms into an M-monoid.

#include <algorithm>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "wts/behaviour.hpp"
#include "wts/term.hpp"
#include "wts/weights.hpp"

namespace wts {

// ------------------------------------------------------------------
// Formulas
// ------------------------------------------------------------------

struct Formula {
  enum class Kind {
    Label,      // symbol, var
    Edge,       // index, var, var2
    EdgePlus,   // var, var2: proper-ancestor relation
    In,         // var, var2 (set variable)
    Not,        // kids[0]
    Or,         // kids[0], kids[1]
    And,        // kids[0], kids[1]
    ExistsPos,  // var, kids[0]
    ForallPos,  // var, kids[0]
    ExistsSet,  // var, kids[0]
    ForallSet,  // var, kids[0]
  };

  Kind kind = Kind::Label;
  std::string symbol;
  int index = 0;  // Edge: 1-based child index
  std::string var;
  std::string var2;
  std::vector<Formula> kids;

  bool operator==(const Formula&) const = default;

  static Formula label(std::string sym, std::string x) {
    Formula f;
    f.kind = Kind::Label;
    f.symbol = std::move(sym);
    f.var = std::move(x);
    return f;
  }
  static Formula edge(int i, std::string x, std::string y) {
    if (i < 1) throw std::invalid_argument("edge index must be >= 1");
    Formula f;
    f.kind = Kind::Edge;
    f.index = i;
    f.var = std::move(x);
    f.var2 = std::move(y);
    return f;
  }
  static Formula edge_plus(std::string x, std::string y) {
    Formula f;
    f.kind = Kind::EdgePlus;
    f.var = std::move(x);
    f.var2 = std::move(y);
    return f;
  }
  static Formula in(std::string x, std::string X) {
    Formula f;
    f.kind = Kind::In;
    f.var = std::move(x);
    f.var2 = std::move(X);
    return f;
  }
  static Formula negate(Formula p) {
    Formula f;
    f.kind = Kind::Not;
    f.kids.push_back(std::move(p));
    return f;
  }
  static Formula disj(Formula p, Formula q) {
    Formula f;
    f.kind = Kind::Or;
    f.kids.push_back(std::move(p));
    f.kids.push_back(std::move(q));
    return f;
  }
  static Formula conj(Formula p, Formula q) {
    Formula f;
    f.kind = Kind::And;
    f.kids.push_back(std::move(p));
    f.kids.push_back(std::move(q));
    return f;
  }
  // Shorthand: p -> q is (not p) or q.
  static Formula implies(Formula p, Formula q) { return disj(negate(std::move(p)), std::move(q)); }

  // Shorthand: y is some child of x, as a disjunction over child indices.
  static Formula edge_any(const std::string& x, const std::string& y, int maxrk) {
    if (maxrk < 1) throw std::invalid_argument("edge disjunction needs maxrk >= 1");
    Formula f = edge(1, x, y);
    for (int i = 2; i <= maxrk; ++i) f = disj(std::move(f), edge(i, x, y));
    return f;
  }

  static Formula quantified(Kind k, std::string v, Formula body) {
    Formula f;
    f.kind = k;
    f.var = std::move(v);
    f.kids.push_back(std::move(body));
    return f;
  }
  static Formula exists(std::string x, Formula body) {
    return quantified(Kind::ExistsPos, std::move(x), std::move(body));
  }
  static Formula forall(std::string x, Formula body) {
    return quantified(Kind::ForallPos, std::move(x), std::move(body));
  }
  static Formula exists_set(std::string X, Formula body) {
    return quantified(Kind::ExistsSet, std::move(X), std::move(body));
  }
  static Formula forall_set(std::string X, Formula body) {
    return quantified(Kind::ForallSet, std::move(X), std::move(body));
  }
};

// Free position and set variables, kept separate.
struct VarSets {
  std::set<std::string> pos;
  std::set<std::string> sets;

  bool empty() const { return pos.empty() && sets.empty(); }
};

namespace detail {

inline void free_vars_into(const Formula& f, std::set<std::string> bound_pos,
                           std::set<std::string> bound_set, VarSets& out) {
  using K = Formula::Kind;
  switch (f.kind) {
    case K::Label:
      if (!bound_pos.count(f.var)) out.pos.insert(f.var);
      return;
    case K::Edge:
    case K::EdgePlus:
      if (!bound_pos.count(f.var)) out.pos.insert(f.var);
      if (!bound_pos.count(f.var2)) out.pos.insert(f.var2);
      return;
    case K::In:
      if (!bound_pos.count(f.var)) out.pos.insert(f.var);
      if (!bound_set.count(f.var2)) out.sets.insert(f.var2);
      return;
    case K::Not:
    case K::Or:
    case K::And:
      for (const auto& k : f.kids) free_vars_into(k, bound_pos, bound_set, out);
      return;
    case K::ExistsPos:
    case K::ForallPos:
      bound_pos.insert(f.var);
      free_vars_into(f.kids[0], std::move(bound_pos), std::move(bound_set), out);
      return;
    case K::ExistsSet:
    case K::ForallSet:
      bound_set.insert(f.var);
      free_vars_into(f.kids[0], std::move(bound_pos), std::move(bound_set), out);
      return;
  }
}

}  // namespace detail

inline VarSets free_vars(const Formula& f) {
  VarSets out;
  detail::free_vars_into(f, {}, {}, out);
  return out;
}

// Values for the free variables of a formula: positions for first-order
// variables, position sets for second-order ones.
struct Assignment {
  std::map<std::string, Position> pos;
  std::map<std::string, std::set<Position>> sets;
};

namespace detail {

inline const Position& lookup_pos(const Assignment& a, const std::string& v) {
  auto it = a.pos.find(v);
  if (it == a.pos.end()) throw std::invalid_argument("unbound position variable " + v);
  return it->second;
}

inline const std::set<Position>& lookup_set(const Assignment& a, const std::string& v) {
  auto it = a.sets.find(v);
  if (it == a.sets.end()) throw std::invalid_argument("unbound set variable " + v);
  return it->second;
}

inline bool proper_prefix(const Position& x, const Position& y) {
  return x.size() < y.size() && std::equal(x.begin(), x.end(), y.begin());
}

// Subset quantification enumerates all 2^m subsets of the position set.
inline constexpr std::size_t kMaxSetPositions = 20;

}  // namespace detail

inline bool models(const Tree& xi, const Formula& f, const Assignment& a = {}) {
  using K = Formula::Kind;
  switch (f.kind) {
    case K::Label:
      return label_at(xi, detail::lookup_pos(a, f.var)) == f.symbol;
    case K::Edge: {
      const Position& x = detail::lookup_pos(a, f.var);
      const Position& y = detail::lookup_pos(a, f.var2);
      return y.size() == x.size() + 1 && detail::proper_prefix(x, y) && y.back() == f.index;
    }
    case K::EdgePlus:
      return detail::proper_prefix(detail::lookup_pos(a, f.var), detail::lookup_pos(a, f.var2));
    case K::In:
      return detail::lookup_set(a, f.var2).count(detail::lookup_pos(a, f.var)) != 0;
    case K::Not:
      return !models(xi, f.kids[0], a);
    case K::Or:
      return models(xi, f.kids[0], a) || models(xi, f.kids[1], a);
    case K::And:
      return models(xi, f.kids[0], a) && models(xi, f.kids[1], a);
    case K::ExistsPos:
    case K::ForallPos: {
      bool want = f.kind == K::ExistsPos;
      Assignment b = a;
      for (const Position& w : positions(xi)) {
        b.pos[f.var] = w;
        if (models(xi, f.kids[0], b) == want) return want;
      }
      return !want;
    }
    case K::ExistsSet:
    case K::ForallSet: {
      bool want = f.kind == K::ExistsSet;
      std::vector<Position> all = positions(xi);
      if (all.size() > detail::kMaxSetPositions)
        throw std::domain_error("set quantification supports at most " +
                                std::to_string(detail::kMaxSetPositions) + " positions");
      Assignment b = a;
      for (std::size_t mask = 0; mask < (std::size_t{1} << all.size()); ++mask) {
        std::set<Position> s;
        for (std::size_t i = 0; i < all.size(); ++i)
          if (mask & (std::size_t{1} << i)) s.insert(all[i]);
        b.sets[f.var] = std::move(s);
        if (models(xi, f.kids[0], b) == want) return want;
      }
      return !want;
    }
  }
  throw std::logic_error("unreachable formula kind");
}

// ------------------------------------------------------------------
// Weighted expressions
// ------------------------------------------------------------------

// Expression over an M-monoid: homomorphic images of the tree, guarded
// by formulas, summed over positions or position sets.
struct MExpr {
  enum class Kind {
    Hom,     // family: symbol -> operation; unlisted symbols act as zero
    Plus,    // kids[0] + kids[1]
    Guard,   // value of kids[0] when the guard holds, zero otherwise
    SumPos,  // sum of kids[0] over all positions assigned to var
    SumSet,  // sum of kids[0] over all position sets assigned to var
  };

  Kind kind = Kind::Hom;
  std::map<std::string, Op> family;
  std::optional<Formula> phi;
  std::string var;
  std::vector<MExpr> kids;

  bool operator==(const MExpr&) const = default;

  static MExpr hom(std::map<std::string, Op> fam) {
    MExpr e;
    e.kind = Kind::Hom;
    e.family = std::move(fam);
    return e;
  }
  static MExpr plus(MExpr l, MExpr r) {
    MExpr e;
    e.kind = Kind::Plus;
    e.kids.push_back(std::move(l));
    e.kids.push_back(std::move(r));
    return e;
  }
  static MExpr guard(Formula g, MExpr body) {
    MExpr e;
    e.kind = Kind::Guard;
    e.phi = std::move(g);
    e.kids.push_back(std::move(body));
    return e;
  }
  static MExpr sum_pos(std::string x, MExpr body) {
    MExpr e;
    e.kind = Kind::SumPos;
    e.var = std::move(x);
    e.kids.push_back(std::move(body));
    return e;
  }
  static MExpr sum_set(std::string X, MExpr body) {
    MExpr e;
    e.kind = Kind::SumSet;
    e.var = std::move(X);
    e.kids.push_back(std::move(body));
    return e;
  }
};

namespace detail {

inline void free_vars_into(const MExpr& e, std::set<std::string> bound_pos,
                           std::set<std::string> bound_set, VarSets& out) {
  using K = MExpr::Kind;
  switch (e.kind) {
    case K::Hom:
      return;
    case K::Plus:
      for (const auto& k : e.kids) free_vars_into(k, bound_pos, bound_set, out);
      return;
    case K::Guard: {
      VarSets g;
      free_vars_into(*e.phi, bound_pos, bound_set, g);
      out.pos.insert(g.pos.begin(), g.pos.end());
      out.sets.insert(g.sets.begin(), g.sets.end());
      free_vars_into(e.kids[0], std::move(bound_pos), std::move(bound_set), out);
      return;
    }
    case K::SumPos:
      bound_pos.insert(e.var);
      free_vars_into(e.kids[0], std::move(bound_pos), std::move(bound_set), out);
      return;
    case K::SumSet:
      bound_set.insert(e.var);
      free_vars_into(e.kids[0], std::move(bound_pos), std::move(bound_set), out);
      return;
  }
}

// Fold the tree through the operation family. Symbols without an entry
// get the zero operation of their rank, which absorbs the whole branch.
inline Value hom_value(const MMonoid& mm, const std::map<std::string, Op>& family, const Tree& t) {
  std::vector<Value> args;
  args.reserve(t.children.size());
  for (const Tree& k : t.children) args.push_back(hom_value(mm, family, k));
  int rank = static_cast<int>(t.children.size());
  auto it = family.find(t.label);
  if (it == family.end()) return mm.apply(Op::zero(rank), args);
  if (it->second.arity != rank)
    throw std::invalid_argument("operation for " + t.label + " has arity " +
                                std::to_string(it->second.arity) + ", symbol has rank " +
                                std::to_string(rank));
  return mm.apply(it->second, args);
}

}  // namespace detail

inline VarSets free_vars(const MExpr& e) {
  VarSets out;
  detail::free_vars_into(e, {}, {}, out);
  return out;
}

inline bool is_sentence(const MExpr& e) { return free_vars(e).empty(); }

inline Value eval_mexpr(const MMonoid& mm, const MExpr& e, const Tree& xi,
                        const Assignment& a = {}) {
  using K = MExpr::Kind;
  switch (e.kind) {
    case K::Hom:
      return detail::hom_value(mm, e.family, xi);
    case K::Plus:
      return mm.add(eval_mexpr(mm, e.kids[0], xi, a), eval_mexpr(mm, e.kids[1], xi, a));
    case K::Guard:
      return models(xi, *e.phi, a) ? eval_mexpr(mm, e.kids[0], xi, a) : mm.zero();
    case K::SumPos: {
      Value acc = mm.zero();
      Assignment b = a;
      for (const Position& w : positions(xi)) {
        b.pos[e.var] = w;
        acc = mm.add(acc, eval_mexpr(mm, e.kids[0], xi, b));
      }
      return acc;
    }
    case K::SumSet: {
      std::vector<Position> all = positions(xi);
      if (all.size() > detail::kMaxSetPositions)
        throw std::domain_error("set summation supports at most " +
                                std::to_string(detail::kMaxSetPositions) + " positions");
      Value acc = mm.zero();
      Assignment b = a;
      for (std::size_t mask = 0; mask < (std::size_t{1} << all.size()); ++mask) {
        std::set<Position> s;
        for (std::size_t i = 0; i < all.size(); ++i)
          if (mask & (std::size_t{1} << i)) s.insert(all[i]);
        b.sets[e.var] = std::move(s);
        acc = mm.add(acc, eval_mexpr(mm, e.kids[0], xi, b));
      }
      return acc;
    }
  }
  throw std::logic_error("unreachable expression kind");
}

// ------------------------------------------------------------------
// Behaviour-summed evaluation
// ------------------------------------------------------------------

// Union of all operation-family keys in the expression.
inline std::set<std::string> hom_symbols(const MExpr& e) {
  std::set<std::string> out;
  std::vector<const MExpr*> stack{&e};
  while (!stack.empty()) {
    const MExpr* cur = stack.back();
    stack.pop_back();
    for (const auto& [sym, op] : cur->family) out.insert(sym);
    for (const MExpr& k : cur->kids) stack.push_back(&k);
  }
  return out;
}

struct BehSumResult {
  Value value = Value::of(0);
  bool exact = false;
};

// Sum of the expression over all behaviours on xi. Enumeration is
// restricted to the symbols some operation family lists: a behaviour
// using any other symbol folds to zero in every homomorphism (the
// missing entry acts as the zero operation and every operation
// absorbs a zero argument), so its summand vanishes under any guard
// and the restriction never changes the sum. Exactness is cap
// stability of the restricted enumeration.
inline BehSumResult eval_behsum(const MMonoid& mm, const MExpr& e, const BehaviourAlphabet& delta,
                                const Tree& xi, int segment_cap = 8) {
  if (!is_sentence(e)) throw std::invalid_argument("behaviour sums need a sentence");
  BehaviourOptions opts;
  opts.segment_cap = segment_cap;
  opts.allowed = hom_symbols(e);
  Value acc = mm.zero();
  for (const Tree& zeta : behaviours_on(xi, delta, opts))
    acc = mm.add(acc, eval_mexpr(mm, e, zeta));
  return {acc, behaviours_cap_stable(xi, delta, opts)};
}

// ------------------------------------------------------------------
// Embedding plain sentences into behaviour sentences
// ------------------------------------------------------------------

// Extended-symbol spelling a plain symbol of the given rank gets under
// the trivial storage: always-true predicate, identity instructions.
inline std::string plain_ext_symbol(const std::string& sym, int rank) {
  BehSymbol b;
  b.pred = "true";
  b.instrs.assign(static_cast<std::size_t>(rank), "id");
  return ExtSymbol{b, false, sym}.str();
}

// Behaviour alphabet matching the trivial storage.
inline BehaviourAlphabet plain_behaviour_alphabet(const RankedAlphabet& sigma) {
  return BehaviourAlphabet::corresponding(Storage::triv(), {"true"}, {"id"}, sigma);
}

namespace detail {

inline Formula embed_formula(const Formula& f, const RankedAlphabet& sigma) {
  Formula out = f;
  if (f.kind == Formula::Kind::Label) {
    if (!sigma.contains(f.symbol))
      throw std::invalid_argument("label symbol " + f.symbol + " not in the alphabet");
    out.symbol = plain_ext_symbol(f.symbol, sigma.rank(f.symbol));
  }
  out.kids.clear();
  for (const Formula& k : f.kids) out.kids.push_back(embed_formula(k, sigma));
  return out;
}

inline MExpr embed_mexpr(const MExpr& e, const RankedAlphabet& sigma) {
  MExpr out = e;
  if (e.kind == MExpr::Kind::Hom) {
    out.family.clear();
    for (const auto& [sym, op] : e.family) {
      if (!sigma.contains(sym))
        throw std::invalid_argument("operation family symbol " + sym + " not in the alphabet");
      out.family.emplace(plain_ext_symbol(sym, sigma.rank(sym)), op);
    }
  }
  if (e.phi) out.phi = embed_formula(*e.phi, sigma);
  out.kids.clear();
  for (const MExpr& k : e.kids) out.kids.push_back(embed_mexpr(k, sigma));
  return out;
}

}  // namespace detail

// Turns a sentence over the plain alphabet into one over the trivial
// storage's extended alphabet with the same value on every tree: labels
// and family keys are respelled, and a guard forbids star positions so
// exactly one behaviour (the respelled tree itself) contributes.
inline MExpr embed_sentence(const MExpr& e, const RankedAlphabet& sigma) {
  if (!is_sentence(e)) throw std::invalid_argument("embedding needs a sentence");
  BehSymbol star;
  star.pred = "true";
  star.instrs = {"id"};
  Formula no_star =
      Formula::negate(Formula::exists("x", Formula::label(ExtSymbol{star, true, ""}.str(), "x")));
  return MExpr::guard(std::move(no_star), detail::embed_mexpr(e, sigma));
}

// ------------------------------------------------------------------
// Expression files
// ------------------------------------------------------------------

namespace detail {

struct SToken {
  std::string text;
  std::size_t at = 0;
};

// Splits into '(', ')' and atoms. '#' starts a comment running to end
// of line. '<...>' is one atom regardless of content; an atom also
// absorbs an immediately following balanced parenthesis group, so
// operation spellings like mul(2,1) stay single tokens.
inline std::vector<SToken> sexp_tokens(const std::string& text) {
  std::vector<SToken> out;
  std::size_t i = 0;
  auto is_space = [](char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r'; };
  while (i < text.size()) {
    char c = text[i];
    if (is_space(c)) {
      ++i;
      continue;
    }
    if (c == '#') {
      while (i < text.size() && text[i] != '\n') ++i;
      continue;
    }
    if (c == '(' || c == ')') {
      out.push_back({std::string(1, c), i});
      ++i;
      continue;
    }
    std::size_t start = i;
    if (c == '<') {
      while (i < text.size() && text[i] != '>') ++i;
      if (i == text.size()) throw ParseError("unterminated <...> token", start);
      ++i;
    } else {
      while (i < text.size() && !is_space(text[i]) && text[i] != '(' && text[i] != ')' &&
             text[i] != '#')
        ++i;
      if (i < text.size() && text[i] == '(') {
        int depth = 0;
        do {
          if (text[i] == '(') ++depth;
          if (text[i] == ')') --depth;
          ++i;
        } while (i < text.size() && depth > 0);
        if (depth > 0) throw ParseError("unbalanced parentheses in token", start);
      }
    }
    out.push_back({text.substr(start, i - start), start});
  }
  return out;
}

struct SNode {
  bool list = false;
  std::string atom;
  std::size_t at = 0;
  std::vector<SNode> kids;
};

inline SNode parse_snode(const std::vector<SToken>& toks, std::size_t& pos) {
  if (pos >= toks.size()) throw ParseError("unexpected end of input", toks.empty() ? 0 : toks.back().at);
  const SToken& t = toks[pos];
  if (t.text == ")") throw ParseError("unexpected )", t.at);
  if (t.text != "(") {
    ++pos;
    SNode n;
    n.atom = t.text;
    n.at = t.at;
    return n;
  }
  SNode n;
  n.list = true;
  n.at = t.at;
  ++pos;
  while (pos < toks.size() && toks[pos].text != ")") n.kids.push_back(parse_snode(toks, pos));
  if (pos >= toks.size()) throw ParseError("missing )", t.at);
  ++pos;
  return n;
}

inline SNode parse_sexp(const std::string& text) {
  std::vector<SToken> toks = sexp_tokens(text);
  std::size_t pos = 0;
  SNode n = parse_snode(toks, pos);
  if (pos != toks.size()) throw ParseError("trailing input after expression", toks[pos].at);
  return n;
}

inline const SNode& want_list(const SNode& n, const std::string& what) {
  if (!n.list) throw ParseError(what + " must be a parenthesized form", n.at);
  return n;
}

inline const std::string& want_atom(const SNode& n, const std::string& what) {
  if (n.list) throw ParseError(what + " must be a single token", n.at);
  return n.atom;
}

inline void want_arity(const SNode& n, std::size_t forms, const std::string& head) {
  if (n.kids.size() != forms + 1)
    throw ParseError("(" + head + " ...) takes " + std::to_string(forms) + " arguments", n.at);
}

inline Formula parse_formula_node(const SNode& n) {
  want_list(n, "formula");
  if (n.kids.empty() || n.kids[0].list) throw ParseError("formula needs a head atom", n.at);
  const std::string& head = n.kids[0].atom;
  if (head == "label") {
    want_arity(n, 2, head);
    return Formula::label(want_atom(n.kids[1], "symbol"), want_atom(n.kids[2], "variable"));
  }
  if (head == "edge") {
    want_arity(n, 3, head);
    const std::string& idx = want_atom(n.kids[1], "edge index");
    std::size_t used = 0;
    int i = 0;
    try {
      i = std::stoi(idx, &used);
    } catch (const std::exception&) {
      throw ParseError("edge index must be a positive integer", n.kids[1].at);
    }
    if (used != idx.size() || i < 1)
      throw ParseError("edge index must be a positive integer", n.kids[1].at);
    return Formula::edge(i, want_atom(n.kids[2], "variable"), want_atom(n.kids[3], "variable"));
  }
  if (head == "edge+") {
    want_arity(n, 2, head);
    return Formula::edge_plus(want_atom(n.kids[1], "variable"), want_atom(n.kids[2], "variable"));
  }
  if (head == "in") {
    want_arity(n, 2, head);
    return Formula::in(want_atom(n.kids[1], "variable"), want_atom(n.kids[2], "set variable"));
  }
  if (head == "not") {
    want_arity(n, 1, head);
    return Formula::negate(parse_formula_node(n.kids[1]));
  }
  if (head == "or" || head == "and") {
    want_arity(n, 2, head);
    Formula l = parse_formula_node(n.kids[1]);
    Formula r = parse_formula_node(n.kids[2]);
    return head == "or" ? Formula::disj(std::move(l), std::move(r))
                        : Formula::conj(std::move(l), std::move(r));
  }
  if (head == "exists" || head == "forall" || head == "existsS" || head == "forallS") {
    want_arity(n, 2, head);
    std::string v = want_atom(n.kids[1], "variable");
    Formula body = parse_formula_node(n.kids[2]);
    if (head == "exists") return Formula::exists(std::move(v), std::move(body));
    if (head == "forall") return Formula::forall(std::move(v), std::move(body));
    if (head == "existsS") return Formula::exists_set(std::move(v), std::move(body));
    return Formula::forall_set(std::move(v), std::move(body));
  }
  throw ParseError("unknown formula head " + head, n.at);
}

inline MExpr parse_mexpr_node(const SNode& n) {
  want_list(n, "expression");
  if (n.kids.empty() || n.kids[0].list) throw ParseError("expression needs a head atom", n.at);
  const std::string& head = n.kids[0].atom;
  if (head == "hom") {
    std::map<std::string, Op> fam;
    for (std::size_t i = 1; i < n.kids.size(); ++i) {
      const SNode& entry = want_list(n.kids[i], "family entry");
      if (entry.kids.size() != 3 || entry.kids[0].list || entry.kids[0].atom != "sym")
        throw ParseError("family entries look like (sym SYMBOL OPERATION)", entry.at);
      std::string sym = want_atom(entry.kids[1], "symbol");
      const std::string& spelled = want_atom(entry.kids[2], "operation");
      auto op = parse_op(spelled);
      if (!op) throw ParseError("bad operation " + spelled, entry.kids[2].at);
      if (!fam.emplace(sym, *op).second)
        throw ParseError("duplicate family entry for " + sym, entry.at);
    }
    return MExpr::hom(std::move(fam));
  }
  if (head == "plus") {
    want_arity(n, 2, head);
    MExpr l = parse_mexpr_node(n.kids[1]);
    MExpr r = parse_mexpr_node(n.kids[2]);
    return MExpr::plus(std::move(l), std::move(r));
  }
  if (head == "guard") {
    want_arity(n, 2, head);
    Formula g = parse_formula_node(n.kids[1]);
    return MExpr::guard(std::move(g), parse_mexpr_node(n.kids[2]));
  }
  if (head == "sumx" || head == "sumX") {
    want_arity(n, 2, head);
    std::string v = want_atom(n.kids[1], "variable");
    MExpr body = parse_mexpr_node(n.kids[2]);
    return head == "sumx" ? MExpr::sum_pos(std::move(v), std::move(body))
                          : MExpr::sum_set(std::move(v), std::move(body));
  }
  throw ParseError("unknown expression head " + head, n.at);
}

}  // namespace detail

// Parsed expression file. Plain files carry just a sentence over the
// tree alphabet; behaviour-sum files also name the predicate and
// instruction subsets of the behaviour alphabet (the storage itself
// comes from the grammar the expression is evaluated against).
struct LogicFile {
  bool behaviour_sum = false;
  std::vector<std::string> preds;
  std::vector<std::string> instrs;
  MExpr expr;
};

inline LogicFile parse_logic_file(const std::string& text) {
  detail::SNode top = detail::parse_sexp(text);
  detail::want_list(top, "expression file");
  if (top.kids.empty() || top.kids[0].list)
    throw ParseError("expression file needs a head atom", top.at);
  const std::string& head = top.kids[0].atom;
  LogicFile out;
  if (head == "mexpr") {
    detail::want_arity(top, 1, head);
    out.expr = detail::parse_mexpr_node(top.kids[1]);
    return out;
  }
  if (head != "behsum") throw ParseError("expression file starts with mexpr or behsum", top.at);
  detail::want_arity(top, 4, head);
  if (top.kids[1].list || top.kids[1].atom != ":delta")
    throw ParseError("behsum expects :delta before the alphabet sections", top.kids[1].at);
  auto names = [](const detail::SNode& n, const std::string& head_want) {
    detail::want_list(n, head_want + " section");
    if (n.kids.empty() || n.kids[0].list || n.kids[0].atom != head_want)
      throw ParseError("expected (" + head_want + " ...)", n.at);
    std::vector<std::string> out;
    for (std::size_t i = 1; i < n.kids.size(); ++i)
      out.push_back(detail::want_atom(n.kids[i], head_want.substr(0, head_want.size() - 1)));
    if (out.empty()) throw ParseError("(" + head_want + " ...) must not be empty", n.at);
    return out;
  };
  out.behaviour_sum = true;
  out.preds = names(top.kids[2], "preds");
  out.instrs = names(top.kids[3], "instrs");
  const detail::SNode& body = detail::want_list(top.kids[4], "expression");
  if (body.kids.empty() || body.kids[0].list || body.kids[0].atom != "mexpr")
    throw ParseError("behsum body must be (mexpr ...)", body.at);
  detail::want_arity(body, 1, "mexpr");
  out.expr = detail::parse_mexpr_node(body.kids[1]);
  return out;
}

inline LogicFile load_logic_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_logic_file(ss.str());
}

}  // namespace wts
