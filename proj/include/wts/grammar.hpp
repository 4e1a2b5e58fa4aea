#pragma once

// Weighted regular tree grammars over a storage type: rules with
// predicates and instructions, derivation-tree enumeration, weight
// evaluation, and the syntactic classifiers.

#include <algorithm>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "wts/behaviour.hpp"
#include "wts/storage.hpp"
#include "wts/term.hpp"
#include "wts/weights.hpp"

namespace wts {

// Form 1: lhs[pred] -> term(arg1[instr1], ..., argk[instrk]).
// Form 2 (chain): lhs[pred] -> to[instr].
struct Rule {
  std::string id;
  std::string lhs;
  std::string pred;
  bool is_chain = false;
  std::string term;                                        // form 1
  std::vector<std::pair<std::string, std::string>> args;   // form 1: (nonterminal, instruction)
  std::string chain_to, chain_instr;                       // form 2
  Op weight = Op::zero(0);

  // Number of nonterminals on the right-hand side = derivation rank.
  int rank() const { return is_chain ? 1 : static_cast<int>(args.size()); }

  bool operator==(const Rule&) const = default;
};

struct Wrtg {
  MMonoid mm = MMonoid::boolean();
  Storage storage = Storage::triv();
  RankedAlphabet sigma;
  std::vector<std::string> nonterminals;
  std::vector<std::string> initial;
  std::vector<Rule> rules;

  const Rule* rule(const std::string& id) const {
    for (const Rule& r : rules)
      if (r.id == id) return &r;
    return nullptr;
  }

  bool has_nonterminal(const std::string& n) const {
    return std::find(nonterminals.begin(), nonterminals.end(), n) != nonterminals.end();
  }

  // Distinct predicates of all rules, sorted.
  std::vector<std::string> preds_used() const {
    std::set<std::string> s;
    for (const Rule& r : rules) s.insert(r.pred);
    return {s.begin(), s.end()};
  }

  // Distinct instructions of all rules, sorted.
  std::vector<std::string> instrs_used() const {
    std::set<std::string> s;
    for (const Rule& r : rules) {
      if (r.is_chain) s.insert(r.chain_instr);
      for (const auto& [n, f] : r.args) s.insert(f);
    }
    return {s.begin(), s.end()};
  }

  bool operator==(const Wrtg&) const = default;
};

// Structural diagnostics; empty means the grammar is well-formed.
inline std::vector<std::string> validate(const Wrtg& g) {
  std::vector<std::string> out;
  if (g.rules.empty()) out.push_back("empty rule set");
  if (g.nonterminals.empty()) out.push_back("no nonterminals");
  std::set<std::string> nts(g.nonterminals.begin(), g.nonterminals.end());
  if (nts.size() != g.nonterminals.size()) out.push_back("duplicate nonterminal");
  for (const auto& n : g.nonterminals) {
    if (g.sigma.contains(n)) out.push_back("nonterminal " + n + " is also a terminal");
    if (n.empty() || n.find_first_of(" \t[]@") != std::string::npos)
      out.push_back("nonterminal name " + n + " contains reserved characters");
  }
  if (g.initial.empty()) out.push_back("empty initial set");
  for (const auto& z : g.initial)
    if (!nts.count(z)) out.push_back("initial nonterminal " + z + " not declared");
  std::set<std::string> ids;
  for (const Rule& r : g.rules) {
    if (!ids.insert(r.id).second) out.push_back("duplicate rule id " + r.id);
    if (!nts.count(r.lhs)) out.push_back(r.id + ": unknown nonterminal " + r.lhs);
    if (!g.storage.valid_pred(r.pred)) out.push_back(r.id + ": unknown predicate " + r.pred);
    if (r.is_chain) {
      if (!nts.count(r.chain_to)) out.push_back(r.id + ": unknown nonterminal " + r.chain_to);
      if (!g.storage.valid_instr(r.chain_instr))
        out.push_back(r.id + ": unknown instruction " + r.chain_instr);
    } else {
      if (!g.sigma.contains(r.term)) {
        out.push_back(r.id + ": unknown terminal " + r.term);
      } else if (g.sigma.rank(r.term) != static_cast<int>(r.args.size())) {
        out.push_back(r.id + ": terminal " + r.term + " has rank " +
                      std::to_string(g.sigma.rank(r.term)) + ", got " +
                      std::to_string(r.args.size()) + " arguments");
      }
      for (const auto& [n, f] : r.args) {
        if (!nts.count(n)) out.push_back(r.id + ": unknown nonterminal " + n);
        if (!g.storage.valid_instr(f)) out.push_back(r.id + ": unknown instruction " + f);
      }
    }
    if (std::string d = g.mm.check_op(r.weight); !d.empty()) out.push_back(r.id + ": " + d);
    if (r.weight.arity != r.rank())
      out.push_back(r.id + ": weight arity " + std::to_string(r.weight.arity) +
                    " differs from rule rank " + std::to_string(r.rank()));
  }
  return out;
}

// The behaviour alphabet induced by the grammar: its used predicates
// and instructions, rank bounded by the terminal alphabet.
inline BehaviourAlphabet delta_of(const Wrtg& g) {
  std::vector<std::string> preds = g.preds_used();
  std::vector<std::string> instrs = g.instrs_used();
  if (instrs.empty()) instrs.push_back("id");  // only nullary rules occur
  return BehaviourAlphabet::corresponding(g.storage, std::move(preds), std::move(instrs),
                                          g.sigma);
}

// Derived tree of a derivation: chain nodes vanish.
inline Tree pi(const Wrtg& g, const Tree& d) {
  const Rule* r = g.rule(d.label);
  if (!r) throw std::invalid_argument("unknown rule id " + d.label);
  if (static_cast<int>(d.children.size()) != r->rank())
    throw std::invalid_argument("derivation node for " + d.label + " has wrong child count");
  if (r->is_chain) return pi(g, d.children[0]);
  Tree out;
  out.label = r->term;
  for (const Tree& c : d.children) out.children.push_back(pi(g, c));
  return out;
}

// Behaviour relabeling of a derivation: positions are preserved, each
// rule contributes its predicate and instruction row.
inline Tree beta(const Wrtg& g, const Tree& d) {
  const Rule* r = g.rule(d.label);
  if (!r) throw std::invalid_argument("unknown rule id " + d.label);
  BehSymbol sym;
  sym.pred = r->pred;
  if (r->is_chain) {
    sym.instrs = {r->chain_instr};
  } else {
    for (const auto& [n, f] : r->args) sym.instrs.push_back(f);
  }
  Tree out;
  out.label = sym.str();
  for (const Tree& c : d.children) out.children.push_back(beta(g, c));
  return out;
}

// Chain-rule graph: edge lhs -> target for every form-2 rule.
inline std::map<std::string, std::set<std::string>> chain_edges(const Wrtg& g) {
  std::map<std::string, std::set<std::string>> out;
  for (const Rule& r : g.rules)
    if (r.is_chain) out[r.lhs].insert(r.chain_to);
  return out;
}

inline bool chain_acyclic(const Wrtg& g) {
  auto edges = chain_edges(g);
  std::map<std::string, int> state;  // 0 unseen, 1 active, 2 done
  std::vector<std::pair<std::string, bool>> stack;
  for (const auto& [start, _] : edges) {
    if (state[start]) continue;
    stack.push_back({start, false});
    while (!stack.empty()) {
      auto [n, leaving] = stack.back();
      stack.pop_back();
      if (leaving) {
        state[n] = 2;
        continue;
      }
      if (state[n] == 1) continue;
      state[n] = 1;
      stack.push_back({n, true});
      for (const auto& m : edges[n]) {
        if (state[m] == 1) return false;
        if (state[m] == 0) stack.push_back({m, false});
      }
    }
  }
  return true;
}

// Length of the longest chain path (edge count); meaningful only for
// acyclic chain graphs.
inline int longest_chain_path(const Wrtg& g) {
  auto edges = chain_edges(g);
  std::map<std::string, int> best;
  std::function<int(const std::string&)> depth = [&](const std::string& n) -> int {
    auto it = best.find(n);
    if (it != best.end()) return it->second;
    int d = 0;
    for (const auto& m : edges[n]) d = std::max(d, 1 + depth(m));
    best[n] = d;
    return d;
  };
  int out = 0;
  for (const auto& [n, _] : edges) out = std::max(out, depth(n));
  return out;
}

struct GrammarFlags {
  bool chain_free = false;
  bool simple = false;
  bool boolean_weights = false;
  bool trivial_storage = false;
};

inline GrammarFlags classify(const Wrtg& g) {
  GrammarFlags f;
  f.chain_free = true;
  f.simple = true;
  for (const Rule& r : g.rules)
    if (r.is_chain) {
      f.chain_free = false;
      if (!g.storage.is_true_pred(r.pred) || !g.storage.is_id_instr(r.chain_instr))
        f.simple = false;
    }
  f.boolean_weights = g.mm.is_boolean_valued();
  f.trivial_storage = g.storage.kind() == Storage::Kind::Triv;
  return f;
}

struct DerivationResult {
  std::vector<Tree> trees;  // labeled by rule ids
  bool exact = false;       // enumeration provably complete
};

namespace detail {

struct DerivEnumerator {
  const Wrtg& g;
  int chain_cap;
  std::vector<const Tree*> nodes;  // preorder positions of the input tree
  std::vector<std::vector<int>> kids;

  struct Key {
    int nt;
    int pos;
    Config config;
    int budget;
    bool operator<(const Key& o) const {
      if (nt != o.nt) return nt < o.nt;
      if (pos != o.pos) return pos < o.pos;
      if (int c = config.compare(o.config)) return c < 0;
      return budget < o.budget;
    }
  };
  std::map<Key, std::vector<Tree>> memo;
  std::map<std::string, int> nt_index;

  int index_tree(const Tree& t) {
    int id = static_cast<int>(nodes.size());
    nodes.push_back(&t);
    kids.emplace_back();
    std::vector<int> local;
    for (const Tree& c : t.children) local.push_back(index_tree(c));
    kids[static_cast<std::size_t>(id)] = std::move(local);
    return id;
  }

  const std::vector<Tree>& enumerate(int nt, int pos, const Config& c, int budget) {
    Key key{nt, pos, c, budget};
    auto it = memo.find(key);
    if (it != memo.end()) return it->second;
    std::vector<Tree> out;
    const Tree& xi = *nodes[static_cast<std::size_t>(pos)];
    const std::string& want = g.nonterminals[static_cast<std::size_t>(nt)];
    for (const Rule& r : g.rules) {
      if (r.lhs != want) continue;
      if (!g.storage.eval_pred(r.pred, c)) continue;
      if (r.is_chain) {
        if (budget <= 0) continue;
        auto next = g.storage.apply_instr(r.chain_instr, c);
        if (!next) continue;
        for (const Tree& sub :
             enumerate(nt_index.at(r.chain_to), pos, *next, budget - 1))
          out.push_back(Tree{r.id, {sub}});
        continue;
      }
      if (r.term != xi.label) continue;
      if (r.args.size() != xi.children.size()) continue;
      std::vector<Config> child_configs;
      bool defined = true;
      for (const auto& [n, f] : r.args) {
        auto next = g.storage.apply_instr(f, c);
        if (!next) {
          defined = false;
          break;
        }
        child_configs.push_back(*next);
      }
      if (!defined) continue;
      std::vector<Tree> partial{Tree{r.id, {}}};
      for (std::size_t i = 0; i < r.args.size() && !partial.empty(); ++i) {
        const auto& subs =
            enumerate(nt_index.at(r.args[i].first),
                      kids[static_cast<std::size_t>(pos)][i], child_configs[i], chain_cap);
        std::vector<Tree> next;
        for (const Tree& acc : partial)
          for (const Tree& sub : subs) {
            Tree t = acc;
            t.children.push_back(sub);
            next.push_back(std::move(t));
          }
        partial = std::move(next);
      }
      for (Tree& t : partial) out.push_back(std::move(t));
    }
    auto [slot, inserted] = memo.emplace(std::move(key), std::move(out));
    return slot->second;
  }
};

}  // namespace detail

// All derivation trees for xi from the given nonterminals at the given
// configuration, with at most chain_cap consecutive chain rules per
// segment. Exact iff the grammar is chain-free, or its chain graph is
// acyclic and the cap covers the longest chain path.
inline DerivationResult derivations(const Wrtg& g, const Tree& xi,
                                    const std::vector<std::string>& from, const Config& c,
                                    int chain_cap = 8) {
  if (chain_cap < 0) throw std::invalid_argument("chain cap must be >= 0");
  detail::DerivEnumerator e{g, chain_cap};
  e.index_tree(xi);
  for (std::size_t i = 0; i < g.nonterminals.size(); ++i)
    e.nt_index[g.nonterminals[i]] = static_cast<int>(i);
  DerivationResult out;
  std::set<std::string> seen;
  for (const auto& z : from) {
    auto it = e.nt_index.find(z);
    if (it == e.nt_index.end()) throw std::invalid_argument("unknown nonterminal " + z);
    for (const Tree& d : e.enumerate(it->second, 0, c, chain_cap))
      if (seen.insert(render(d)).second) out.trees.push_back(d);
  }
  GrammarFlags f = classify(g);
  out.exact =
      f.chain_free || (chain_acyclic(g) && chain_cap >= longest_chain_path(g));
  return out;
}

inline DerivationResult derivations(const Wrtg& g, const Tree& xi, int chain_cap = 8) {
  return derivations(g, xi, g.initial, g.storage.initial(), chain_cap);
}

// Bottom-up weight fold: children first, left to right.
inline Value weight_of(const Wrtg& g, const Tree& d) {
  const Rule* r = g.rule(d.label);
  if (!r) throw std::invalid_argument("unknown rule id " + d.label);
  if (static_cast<int>(d.children.size()) != r->rank())
    throw std::invalid_argument("derivation node for " + d.label + " has wrong child count");
  std::vector<Value> args;
  for (const Tree& c : d.children) args.push_back(weight_of(g, c));
  return g.mm.apply(r->weight, args);
}

struct EvalResult {
  Value value = Value::of(0);
  bool exact = false;
};

inline EvalResult evaluate(const Wrtg& g, const Tree& xi, int chain_cap = 8) {
  DerivationResult d = derivations(g, xi, chain_cap);
  std::vector<Value> weights;
  for (const Tree& t : d.trees) weights.push_back(weight_of(g, t));
  return {g.mm.sum(weights), d.exact};
}

// Exact membership for boolean-valued grammars whose configuration
// space is finite: least fixpoint over (nonterminal, configuration,
// position) triples, correct through chain cycles.
inline bool boolean_language_member(const Wrtg& g, const Tree& xi) {
  if (!g.mm.is_boolean_valued())
    throw std::domain_error("language membership needs boolean-valued weights");
  auto configs = g.storage.finite_configs();
  if (!configs)
    throw std::domain_error(
        "exact membership needs a finite configuration space; use bounded evaluation instead");

  std::vector<const Tree*> nodes;
  std::vector<std::vector<int>> kids;
  struct Indexer {
    std::vector<const Tree*>& nodes;
    std::vector<std::vector<int>>& kids;
    int go(const Tree& t) {
      int id = static_cast<int>(nodes.size());
      nodes.push_back(&t);
      kids.emplace_back();
      std::vector<int> local;
      for (const Tree& c : t.children) local.push_back(go(c));
      kids[static_cast<std::size_t>(id)] = std::move(local);
      return id;
    }
  };
  Indexer{nodes, kids}.go(xi);

  std::map<Config, int> config_index;
  for (std::size_t i = 0; i < configs->size(); ++i)
    config_index.emplace((*configs)[i], static_cast<int>(i));
  std::map<std::string, int> nt_index;
  for (std::size_t i = 0; i < g.nonterminals.size(); ++i)
    nt_index[g.nonterminals[i]] = static_cast<int>(i);

  auto slot = [&](int nt, int cfg, int pos) {
    return (static_cast<std::size_t>(nt) * configs->size() + static_cast<std::size_t>(cfg)) *
               nodes.size() +
           static_cast<std::size_t>(pos);
  };
  std::vector<bool> table(g.nonterminals.size() * configs->size() * nodes.size(), false);

  // Ignore rules whose weight is a zero operation: they contribute
  // nothing to any sum, so the support fixpoint must not see them.
  auto is_zero_weight = [&](const Rule& r) {
    if (r.weight.kind == Op::Kind::Zero) return true;
    auto a = mul_param(g.mm, r.weight);
    return a && *a == g.mm.backing()->zero();
  };

  bool changed = true;
  while (changed) {
    changed = false;
    for (const Rule& r : g.rules) {
      if (is_zero_weight(r)) continue;
      int nt = nt_index.at(r.lhs);
      for (const auto& [c, ci] : config_index) {
        if (!g.storage.eval_pred(r.pred, c)) continue;
        if (r.is_chain) {
          auto next = g.storage.apply_instr(r.chain_instr, c);
          if (!next) continue;
          int target = nt_index.at(r.chain_to);
          int tc = config_index.at(*next);
          for (std::size_t pos = 0; pos < nodes.size(); ++pos)
            if (!table[slot(nt, ci, static_cast<int>(pos))] &&
                table[slot(target, tc, static_cast<int>(pos))]) {
              table[slot(nt, ci, static_cast<int>(pos))] = true;
              changed = true;
            }
          continue;
        }
        std::vector<int> child_cfg;
        bool defined = true;
        for (const auto& [n, f] : r.args) {
          auto next = g.storage.apply_instr(f, c);
          if (!next) {
            defined = false;
            break;
          }
          child_cfg.push_back(config_index.at(*next));
        }
        if (!defined) continue;
        for (std::size_t pos = 0; pos < nodes.size(); ++pos) {
          if (table[slot(nt, ci, static_cast<int>(pos))]) continue;
          const Tree& node = *nodes[pos];
          if (node.label != r.term || node.children.size() != r.args.size()) continue;
          bool all = true;
          for (std::size_t i = 0; i < r.args.size() && all; ++i)
            all = table[slot(nt_index.at(r.args[i].first), child_cfg[i], kids[pos][i])];
          if (all) {
            table[slot(nt, ci, static_cast<int>(pos))] = true;
            changed = true;
          }
        }
      }
    }
  }

  int c0 = config_index.at(g.storage.initial());
  for (const auto& z : g.initial)
    if (table[slot(nt_index.at(z), c0, 0)]) return true;
  return false;
}

// Semi-decision: no tree up to the size bound has two derivations.
inline bool is_unambiguous_upto(const Wrtg& g, int size_bound, int chain_cap = 8) {
  for (const Tree& xi : enumerate_trees(g.sigma, size_bound))
    if (derivations(g, xi, chain_cap).trees.size() > 1) return false;
  return true;
}

}  // namespace wts
