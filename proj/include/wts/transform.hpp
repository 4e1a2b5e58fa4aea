#pragma once

// Grammar constructions: single-initial form, useless-nonterminal
// trimming, support grammars over zero-sum-free backings, chain-rule
// elimination, storage and weight separation with their fusions,
// finite-storage elimination, and the combined decomposition.

#include <algorithm>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "wts/grammar.hpp"

namespace wts {

namespace detail {

inline std::string fresh_name(std::string base, const std::set<std::string>& taken) {
  while (taken.count(base)) base += "_";
  return base;
}

// Separator for product nonterminal names; widened until all names are
// distinct and none clashes with the extra reserved names.
inline std::string product_sep(const std::vector<std::string>& lefts,
                               const std::vector<std::string>& rights,
                               const std::set<std::string>& reserved) {
  std::string sep = ".";
  for (;;) {
    std::set<std::string> seen = reserved;
    bool ok = true;
    for (const auto& a : lefts)
      for (const auto& b : rights)
        if (!seen.insert(a + sep + b).second) {
          ok = false;
          break;
        }
    if (ok) return sep;
    sep += ".";
  }
}

// All integer tuples of length n with entries in {0,...,hi}, in
// lexicographic order (last coordinate fastest).
inline std::vector<std::vector<int>> tuple_box(int n, int hi) {
  std::vector<std::vector<int>> out;
  std::vector<int> cur(static_cast<std::size_t>(n), 0);
  for (;;) {
    out.push_back(cur);
    int i = n - 1;
    while (i >= 0 && cur[static_cast<std::size_t>(i)] == hi) {
      cur[static_cast<std::size_t>(i)] = 0;
      --i;
    }
    if (i < 0) break;
    ++cur[static_cast<std::size_t>(i)];
  }
  return out;
}

inline std::string tuple_tag(const std::vector<int>& z) {
  std::string out = "z(";
  for (std::size_t i = 0; i < z.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(z[i]);
  }
  return out + ")";
}

inline std::string unique_rule_id(std::string id, std::set<std::string>& used) {
  while (!used.insert(id).second) id += "_";
  return id;
}

}  // namespace detail

// Removes nonterminals that generate no tree or are unreachable from
// the initial set, along with their rules. Names are kept. When nothing
// useful remains, the initial nonterminals survive with no rules so the
// grammar still serializes.
inline Wrtg trim_useless(const Wrtg& g) {
  std::set<std::string> productive;
  bool changed = true;
  while (changed) {
    changed = false;
    for (const Rule& r : g.rules) {
      if (productive.count(r.lhs)) continue;
      bool all = true;
      if (r.is_chain) {
        all = productive.count(r.chain_to) > 0;
      } else {
        for (const auto& [n, f] : r.args) all = all && productive.count(n) > 0;
      }
      if (all) {
        productive.insert(r.lhs);
        changed = true;
      }
    }
  }
  std::set<std::string> keep;
  for (const auto& z : g.initial)
    if (productive.count(z)) keep.insert(z);
  changed = true;
  while (changed) {
    changed = false;
    for (const Rule& r : g.rules) {
      if (!keep.count(r.lhs)) continue;
      std::vector<std::string> targets;
      if (r.is_chain) {
        targets.push_back(r.chain_to);
      } else {
        for (const auto& [n, f] : r.args) targets.push_back(n);
      }
      bool usable = true;
      for (const auto& n : targets) usable = usable && productive.count(n) > 0;
      if (!usable) continue;
      for (const auto& n : targets)
        if (keep.insert(n).second) changed = true;
    }
  }
  Wrtg out;
  out.mm = g.mm;
  out.storage = g.storage;
  out.sigma = g.sigma;
  for (const auto& n : g.nonterminals)
    if (keep.count(n)) out.nonterminals.push_back(n);
  for (const auto& z : g.initial)
    if (keep.count(z)) out.initial.push_back(z);
  for (const Rule& r : g.rules) {
    if (!keep.count(r.lhs)) continue;
    bool ok = true;
    if (r.is_chain) {
      ok = keep.count(r.chain_to) > 0;
    } else {
      for (const auto& [n, f] : r.args) ok = ok && keep.count(n) > 0;
    }
    if (ok) out.rules.push_back(r);
  }
  if (out.nonterminals.empty()) {
    std::set<std::string> seen;
    for (const auto& z : g.initial)
      if (seen.insert(z).second) {
        out.nonterminals.push_back(z);
        out.initial.push_back(z);
      }
  }
  return out;
}

// Same semantics with a single fresh initial nonterminal: each original
// nonterminal is copied once per original initial, the copy tracking
// which initial the derivation started from. An empty initial set is
// returned unchanged.
inline Wrtg one_initial(const Wrtg& g) {
  if (g.initial.empty()) return g;
  std::set<std::string> taken(g.nonterminals.begin(), g.nonterminals.end());
  for (const auto& [s, k] : g.sigma.symbols()) taken.insert(s);
  std::string z0 = detail::fresh_name("Z0", taken);
  std::string sep = detail::product_sep(g.nonterminals, g.initial, {z0});
  auto name = [&](const std::string& a, const std::string& a0) { return a + sep + a0; };

  Wrtg out;
  out.mm = g.mm;
  out.storage = g.storage;
  out.sigma = g.sigma;
  out.nonterminals.push_back(z0);
  for (const auto& a : g.nonterminals)
    for (const auto& a0 : g.initial) out.nonterminals.push_back(name(a, a0));
  out.initial = {z0};

  std::set<std::string> used_ids;
  auto retag = [&](Rule& c, const std::string& a0) {
    if (c.is_chain) {
      c.chain_to = name(c.chain_to, a0);
    } else {
      for (auto& [n, f] : c.args) n = name(n, a0);
    }
  };
  for (const Rule& r : g.rules) {
    if (std::find(g.initial.begin(), g.initial.end(), r.lhs) == g.initial.end()) continue;
    Rule c = r;
    c.lhs = z0;
    retag(c, r.lhs);
    c.id = detail::unique_rule_id(c.id, used_ids);
    out.rules.push_back(std::move(c));
  }
  for (const auto& a0 : g.initial)
    for (const Rule& r : g.rules) {
      Rule c = r;
      c.lhs = name(r.lhs, a0);
      retag(c, a0);
      c.id = detail::unique_rule_id(r.id + "." + a0, used_ids);
      out.rules.push_back(std::move(c));
    }
  return out;
}

// Product-of-generators arithmetic for support construction: the value
// of an exponent vector, the minimal vectors of its zero set, and the
// degree dg = largest coordinate over those minimal vectors.
struct SupportTables {
  Bimonoid backing = Bimonoid::boolean();
  std::vector<Value> generators;
  std::vector<std::vector<int>> min_zero;  // lexicographically sorted
  int dg = 0;

  Value eval(const std::vector<int>& z) const {
    if (z.size() != generators.size())
      throw std::invalid_argument("exponent vector length differs from generator count");
    Value acc = backing.one();
    for (std::size_t i = 0; i < z.size(); ++i)
      for (int t = 0; t < z[i]; ++t) acc = backing.mul(acc, generators[i]);
    return acc;
  }
};

inline std::vector<int> cut(std::vector<int> z, int k) {
  for (int& v : z) v = std::min(v, k);
  return z;
}

// Zero-divisor-free backings need no search: a product is zero exactly
// when a zero generator occurs, so the minimal zero vectors are the
// unit vectors of zero generators. Otherwise each generator's power
// sequence must cycle within the cap; the minimal vectors then lie in
// the box bounded by index+period per coordinate, since shrinking any
// larger coordinate by one period preserves the value.
inline SupportTables support_tables(const std::vector<Value>& weights, const Bimonoid& backing,
                                    int power_cap = 64) {
  if (!backing.commutative()) throw std::domain_error("support tables need a commutative backing");
  std::set<Value> distinct(weights.begin(), weights.end());
  if (distinct.size() != weights.size())
    throw std::invalid_argument("generators must be distinct");
  SupportTables st;
  st.backing = backing;
  st.generators = weights;
  const int m = static_cast<int>(weights.size());

  if (backing.zero_divisor_free()) {
    for (int i = 0; i < m; ++i)
      if (weights[static_cast<std::size_t>(i)] == backing.zero()) {
        std::vector<int> e(static_cast<std::size_t>(m), 0);
        e[static_cast<std::size_t>(i)] = 1;
        st.min_zero.push_back(std::move(e));
      }
    std::sort(st.min_zero.begin(), st.min_zero.end());
    st.dg = st.min_zero.empty() ? 0 : 1;
    return st;
  }

  std::vector<int> bound(static_cast<std::size_t>(m), 0);
  for (int i = 0; i < m; ++i) {
    std::vector<Value> powers{backing.one()};
    bool cycled = false;
    for (int t = 1; t <= power_cap; ++t) {
      Value p = backing.mul(powers.back(), weights[static_cast<std::size_t>(i)]);
      if (std::find(powers.begin(), powers.end(), p) != powers.end()) {
        bound[static_cast<std::size_t>(i)] = t;  // index + period
        cycled = true;
        break;
      }
      powers.push_back(p);
    }
    if (!cycled) throw std::domain_error("ZGP search bound exceeded");
  }

  std::size_t box = 1;
  for (int b : bound) {
    box *= static_cast<std::size_t>(b) + 1;
    if (box > (1u << 22)) throw std::domain_error("support search box too large");
  }
  std::vector<std::vector<int>> zeros;
  std::vector<int> cur(static_cast<std::size_t>(m), 0);
  for (;;) {
    if (st.eval(cur) == backing.zero()) zeros.push_back(cur);
    int i = m - 1;
    while (i >= 0 && cur[static_cast<std::size_t>(i)] == bound[static_cast<std::size_t>(i)]) {
      cur[static_cast<std::size_t>(i)] = 0;
      --i;
    }
    if (i < 0) break;
    ++cur[static_cast<std::size_t>(i)];
  }
  auto leq = [](const std::vector<int>& a, const std::vector<int>& b) {
    for (std::size_t i = 0; i < a.size(); ++i)
      if (a[i] > b[i]) return false;
    return true;
  };
  for (const auto& z : zeros) {
    bool minimal = true;
    for (const auto& y : zeros)
      if (y != z && leq(y, z)) {
        minimal = false;
        break;
      }
    if (minimal) st.min_zero.push_back(z);
  }
  std::sort(st.min_zero.begin(), st.min_zero.end());
  for (const auto& z : st.min_zero)
    for (int v : z) st.dg = std::max(st.dg, v);
  return st;
}

// Boolean grammar over the same storage whose language is the set of
// trees with nonzero weight. Nonterminals carry cut exponent vectors
// over the distinct rule weights; a rule instance adds its children's
// vectors plus the unit vector of its own weight, cut at dg. Requires a
// zero-sum-free commutative backing and product-shaped weights. Inputs
// with several initial nonterminals pass through one_initial first.
inline Wrtg support_grammar(const Wrtg& g0, bool trim = true, int power_cap = 64) {
  Wrtg g1 = g0.initial.size() == 1 ? g0 : one_initial(g0);
  const auto& backing = g1.mm.backing();
  if (!backing) throw std::domain_error("support needs a bimonoid backing");
  if (!backing->zero_sum_free() || !backing->commutative())
    throw std::domain_error("support needs a zero-sum-free commutative backing");

  std::vector<Value> gens;
  for (const Rule& r : g1.rules) {
    auto a = mul_param(g1.mm, r.weight);
    if (!a) throw std::domain_error("support needs product-shaped rule weights: rule " + r.id);
    gens.push_back(*a);
  }
  std::sort(gens.begin(), gens.end());
  gens.erase(std::unique(gens.begin(), gens.end()), gens.end());
  SupportTables st = support_tables(gens, *backing, power_cap);
  const int m = static_cast<int>(gens.size());

  std::vector<std::vector<int>> tuples = detail::tuple_box(m, st.dg);
  std::vector<std::string> tags;
  for (const auto& t : tuples) tags.push_back(detail::tuple_tag(t));
  std::string sep = detail::product_sep(g1.nonterminals, tags, {});
  auto name = [&](const std::string& a, const std::vector<int>& t) {
    return a + sep + detail::tuple_tag(t);
  };

  Wrtg out;
  out.mm = MMonoid::boolean();
  out.storage = g1.storage;
  out.sigma = g1.sigma;
  for (const auto& a : g1.nonterminals)
    for (const auto& t : tuples) out.nonterminals.push_back(name(a, t));
  for (const auto& z : g1.initial)
    for (const auto& t : tuples)
      if (!(st.eval(t) == backing->zero())) out.initial.push_back(name(z, t));

  auto gen_index = [&](const Rule& r) {
    Value a = *mul_param(g1.mm, r.weight);
    return static_cast<int>(std::find(gens.begin(), gens.end(), a) - gens.begin());
  };
  for (const Rule& r : g1.rules) {
    const int gi = gen_index(r);
    if (r.is_chain) {
      int n = 0;
      for (const auto& t1 : tuples) {
        ++n;
        std::vector<int> z = t1;
        ++z[static_cast<std::size_t>(gi)];
        Rule c;
        c.id = r.id + "." + std::to_string(n);
        c.lhs = name(r.lhs, cut(z, st.dg));
        c.pred = r.pred;
        c.is_chain = true;
        c.chain_to = name(r.chain_to, t1);
        c.chain_instr = r.chain_instr;
        c.weight = Op::all(1);
        out.rules.push_back(std::move(c));
      }
      continue;
    }
    const int k = static_cast<int>(r.args.size());
    std::vector<std::size_t> combo(static_cast<std::size_t>(k), 0);
    int n = 0;
    for (;;) {
      ++n;
      std::vector<int> z(static_cast<std::size_t>(m), 0);
      ++z[static_cast<std::size_t>(gi)];
      for (std::size_t i = 0; i < combo.size(); ++i)
        for (std::size_t j = 0; j < z.size(); ++j) z[j] += tuples[combo[i]][j];
      Rule c;
      c.id = r.id + "." + std::to_string(n);
      c.lhs = name(r.lhs, cut(z, st.dg));
      c.pred = r.pred;
      c.term = r.term;
      for (std::size_t i = 0; i < r.args.size(); ++i)
        c.args.push_back({name(r.args[i].first, tuples[combo[i]]), r.args[i].second});
      c.weight = Op::all(k);
      out.rules.push_back(std::move(c));
      int i = k - 1;
      while (i >= 0 && combo[static_cast<std::size_t>(i)] + 1 == tuples.size()) {
        combo[static_cast<std::size_t>(i)] = 0;
        --i;
      }
      if (i < 0) break;
      ++combo[static_cast<std::size_t>(i)];
    }
  }
  return trim ? trim_useless(out) : out;
}

// Boolean grammar over a finite configuration space flattened to the
// trivial storage: nonterminals pair the originals with configurations,
// rules are instantiated where the predicate holds and all instructions
// are defined. Duplicate instances collapse, which keeps unambiguity.
inline Wrtg eliminate_finite_storage_unweighted(const Wrtg& g) {
  if (!g.mm.is_boolean_valued())
    throw std::invalid_argument("finite-storage elimination needs boolean-valued weights");
  auto configs = g.storage.finite_configs();
  if (!configs) throw std::invalid_argument("storage has no finite-configuration witness");

  std::vector<std::string> tags;
  for (const Config& c : *configs) tags.push_back(c.str());
  std::string sep = detail::product_sep(g.nonterminals, tags, {});
  auto name = [&](const std::string& a, std::size_t ci) { return a + sep + tags[ci]; };
  auto config_index = [&](const Config& c) -> std::size_t {
    for (std::size_t i = 0; i < configs->size(); ++i)
      if ((*configs)[i].compare(c) == 0) return i;
    throw std::invalid_argument("instruction left the finite configuration space");
  };

  Wrtg out;
  out.mm = g.mm;
  out.storage = Storage::triv();
  out.sigma = g.sigma;
  for (const auto& a : g.nonterminals)
    for (std::size_t ci = 0; ci < configs->size(); ++ci) out.nonterminals.push_back(name(a, ci));
  const std::size_t c0 = config_index(g.storage.initial());
  for (const auto& z : g.initial) out.initial.push_back(name(z, c0));

  std::set<std::string> seen;
  for (const Rule& r : g.rules)
    for (std::size_t ci = 0; ci < configs->size(); ++ci) {
      const Config& c = (*configs)[ci];
      if (!g.storage.eval_pred(r.pred, c)) continue;
      Rule inst;
      inst.id = r.id + "." + tags[ci];
      inst.lhs = name(r.lhs, ci);
      inst.pred = "true";
      inst.weight = r.weight;
      std::string key;
      if (r.is_chain) {
        auto next = g.storage.apply_instr(r.chain_instr, c);
        if (!next) continue;
        inst.is_chain = true;
        inst.chain_to = name(r.chain_to, config_index(*next));
        inst.chain_instr = "id";
        key = inst.lhs + "\x1f>\x1f" + inst.chain_to;
      } else {
        bool defined = true;
        for (const auto& [nt, f] : r.args) {
          auto next = g.storage.apply_instr(f, c);
          if (!next) {
            defined = false;
            break;
          }
          inst.args.push_back({name(nt, config_index(*next)), "id"});
        }
        if (!defined) continue;
        inst.term = r.term;
        key = inst.lhs + "\x1f" + inst.term;
        for (const auto& [nt, f] : inst.args) key += "\x1f" + nt;
      }
      key += "\x1f" + inst.weight.str();
      if (!seen.insert(key).second) continue;
      out.rules.push_back(std::move(inst));
    }
  return out;
}

// Reads a grammar over the trivial storage as one over s: predicates
// become s's always-true predicate, instructions its identity.
inline Wrtg embed_storage(const Wrtg& g, const Storage& s) {
  if (g.storage.kind() != Storage::Kind::Triv)
    throw std::invalid_argument("storage embedding starts from the trivial storage");
  if (!s.has_true() || !s.has_id())
    throw std::invalid_argument("target storage lacks true or id");
  Wrtg out = g;
  out.storage = s;
  for (Rule& r : out.rules) {
    r.pred = "true";
    if (r.is_chain) {
      r.chain_instr = "id";
    } else {
      for (auto& [n, f] : r.args) f = "id";
    }
  }
  return out;
}

namespace detail {

using OpMatrix = std::vector<std::vector<UnaryOpSum>>;

// All-pairs closure W* = E + W + W^2 + ... over the unary-operation
// algebra: Gauss-Jordan style elimination when every pivot has a scalar
// star, otherwise fixpoint iteration capped at 2n^2+2 rounds.
inline OpMatrix op_closure(const OpMatrix& w, const UnaryAlgebra& alg) {
  const std::size_t n = w.size();
  OpMatrix m = w;
  bool ok = true;
  for (std::size_t k = 0; k < n && ok; ++k) {
    auto s = alg.star(m[k][k]);
    if (!s) {
      ok = false;
      break;
    }
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        m[i][j] = alg.add(m[i][j], alg.compose(m[i][k], alg.compose(*s, m[k][j])));
  }
  if (ok) {
    for (std::size_t i = 0; i < n; ++i) m[i][i] = alg.add(m[i][i], alg.identity());
    return m;
  }
  OpMatrix e(n, std::vector<UnaryOpSum>(n, alg.zero()));
  for (std::size_t i = 0; i < n; ++i) e[i][i] = alg.identity();
  OpMatrix p = e;
  for (std::size_t round = 0; round < 2 * n * n + 2; ++round) {
    OpMatrix next = e;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        for (std::size_t k = 0; k < n; ++k)
          next[i][j] = alg.add(next[i][j], alg.compose(w[i][k], p[k][j]));
    if (next == p) return p;
    p = std::move(next);
  }
  throw std::domain_error("chain weight closure did not converge");
}

}  // namespace detail

// Removes chain rules from a simple grammar (chain predicates true,
// chain instructions id): the chain-weight matrix is closed under
// composition and each remaining rule is re-emitted once per source
// nonterminal with the closure entry composed onto its weight.
// Zero-weight chain rules are dropped up front; zero-weight results are
// pruned.
inline Wrtg eliminate_chain_rules(const Wrtg& g) {
  std::vector<Rule> chains, finals;
  for (const Rule& r : g.rules) {
    if (!r.is_chain) {
      finals.push_back(r);
      continue;
    }
    if (!g.storage.is_true_pred(r.pred))
      throw std::invalid_argument("not simple: rule " + r.id + " chain with non-true predicate");
    if (!g.storage.is_id_instr(r.chain_instr))
      throw std::invalid_argument("not simple: rule " + r.id + " chain with non-id instruction");
    bool zero = r.weight.kind == Op::Kind::Zero;
    if (!zero && g.mm.backing()) {
      auto a = mul_param(g.mm, r.weight);
      zero = a && *a == g.mm.backing()->zero();
    }
    if (!zero) chains.push_back(r);
  }
  Wrtg out;
  out.mm = g.mm;
  out.storage = g.storage;
  out.sigma = g.sigma;
  out.nonterminals = g.nonterminals;
  out.initial = g.initial;
  if (chains.empty()) {
    out.rules = finals;
    return out;
  }
  const auto& backing = g.mm.backing();
  if (!backing)
    throw std::domain_error("chain elimination needs a bimonoid backing for nonzero chain weights");
  UnaryAlgebra alg(*backing);

  std::map<std::string, std::size_t> idx;
  for (std::size_t i = 0; i < g.nonterminals.size(); ++i) idx[g.nonterminals[i]] = i;
  const std::size_t n = g.nonterminals.size();
  detail::OpMatrix w(n, std::vector<UnaryOpSum>(n, alg.zero()));
  for (const Rule& c : chains) {
    auto a = mul_param(g.mm, c.weight);
    if (!a) throw std::domain_error("chain weight is not product-shaped: rule " + c.id);
    auto& cell = w[idx.at(c.lhs)][idx.at(c.chain_to)];
    cell = alg.add(cell, alg.mul1(*a));
  }
  detail::OpMatrix star = detail::op_closure(w, alg);

  std::set<std::string> used_ids;
  for (const Rule& r : finals) {
    const std::size_t dst = idx.at(r.lhs);
    auto b = mul_param(g.mm, r.weight);
    if (!b) throw std::domain_error("rule weight is not product-shaped: rule " + r.id);
    for (std::size_t i = 0; i < n; ++i) {
      const UnaryOpSum& u = star[i][dst];
      if (alg.is_zero(u)) continue;
      if (u.coeffs.size() > 1)
        throw std::domain_error(
            "chain weight closure is an operation sum; needs a semiring backing");
      Value a = u.coeffs[0];
      Value scaled = backing->mul(a, *b);
      if (scaled == backing->zero()) continue;
      Rule c = r;
      if (i != dst) {
        c.lhs = g.nonterminals[i];
        c.id = r.id + "." + g.nonterminals[i];
      }
      if (!(a == backing->one())) c.weight = Op::mul(r.rank(), scaled);
      c.id = detail::unique_rule_id(c.id, used_ids);
      out.rules.push_back(std::move(c));
    }
  }
  return out;
}

// Rank-respecting map from an abstract symbol alphabet into weight
// operations paired with terminals; unary symbols may map to a bare
// operation, in which case applying the map keeps the child's tree.
struct AlphabeticMapping {
  struct Entry {
    Op op = Op::zero(0);
    std::optional<std::string> term;
    bool operator==(const Entry&) const = default;
  };
  MMonoid mm = MMonoid::boolean();
  RankedAlphabet theta;
  RankedAlphabet sigma;
  std::map<std::string, Entry> entries;

  bool operator==(const AlphabeticMapping&) const = default;
};

inline std::vector<std::string> validate_mapping(const AlphabeticMapping& h) {
  std::vector<std::string> out;
  for (const auto& [t, k] : h.theta.symbols()) {
    auto it = h.entries.find(t);
    if (it == h.entries.end()) {
      out.push_back("no image for symbol " + t);
      continue;
    }
    const auto& e = it->second;
    if (e.op.arity != k)
      out.push_back(t + ": operation arity " + std::to_string(e.op.arity) +
                    " differs from rank " + std::to_string(k));
    if (std::string d = h.mm.check_op(e.op); !d.empty()) out.push_back(t + ": " + d);
    if (e.term) {
      if (!h.sigma.contains(*e.term)) {
        out.push_back(t + ": unknown terminal " + *e.term);
      } else if (h.sigma.rank(*e.term) != k) {
        out.push_back(t + ": terminal " + *e.term + " has rank " +
                      std::to_string(h.sigma.rank(*e.term)) + ", symbol has rank " +
                      std::to_string(k));
      }
    } else if (k != 1) {
      out.push_back(t + ": only unary symbols may lack a terminal image");
    }
  }
  for (const auto& [t, e] : h.entries)
    if (!h.theta.contains(t)) out.push_back("image for unknown symbol " + t);
  return out;
}

struct Monome {
  Value value = Value::of(0);
  Tree tree;
  bool operator==(const Monome&) const = default;
};

// Bottom-up fold of the mapping over a tree: operations apply to the
// children's values, terminal images rebuild the tree, bare unary
// images keep the child's tree.
inline Monome apply_alphabetic(const AlphabeticMapping& h, const Tree& zeta) {
  auto it = h.entries.find(zeta.label);
  if (it == h.entries.end())
    throw std::invalid_argument("symbol without an image: " + zeta.label);
  const auto& e = it->second;
  std::vector<Value> vals;
  std::vector<Tree> kids;
  for (const Tree& c : zeta.children) {
    Monome m = apply_alphabetic(h, c);
    vals.push_back(m.value);
    kids.push_back(std::move(m.tree));
  }
  Value v = h.mm.apply(e.op, vals);
  if (e.term) return {v, Tree{*e.term, std::move(kids)}};
  if (kids.size() != 1)
    throw std::invalid_argument("a symbol without a terminal image must be unary: " + zeta.label);
  return {v, std::move(kids[0])};
}

struct WeightSeparation {
  RankedAlphabet theta;
  Wrtg H;
  AlphabeticMapping h;
};

// Splits a grammar into a boolean chain-free shape grammar H over the
// rule identifiers and the mapping sending each identifier back to its
// weight and terminal; chain rules become unary symbols with a bare
// operation image.
inline WeightSeparation separate_weights(const Wrtg& g) {
  WeightSeparation out;
  for (const Rule& r : g.rules) out.theta.add(r.id, r.rank());
  out.H.mm = MMonoid::boolean();
  out.H.storage = g.storage;
  out.H.sigma = out.theta;
  out.H.nonterminals = g.nonterminals;
  out.H.initial = g.initial;
  for (const Rule& r : g.rules) {
    Rule c;
    c.id = r.id;
    c.lhs = r.lhs;
    c.pred = r.pred;
    c.term = r.id;
    if (r.is_chain) {
      c.args = {{r.chain_to, r.chain_instr}};
    } else {
      c.args = r.args;
    }
    c.weight = Op::all(r.rank());
    out.H.rules.push_back(std::move(c));
  }
  out.h.mm = g.mm;
  out.h.theta = out.theta;
  out.h.sigma = g.sigma;
  for (const Rule& r : g.rules)
    out.h.entries[r.id] = {r.weight,
                           r.is_chain ? std::nullopt : std::optional<std::string>(r.term)};
  return out;
}

// Sum of the mapped values over all trees in H's language whose image
// tree is xi. Preimages are enumerated by descending xi and H together;
// bare unary symbols stack up to segment_cap times per position.
inline Value alphabetic_image_value(const AlphabeticMapping& h, const Wrtg& H, const Tree& xi,
                                    int segment_cap = 8) {
  if (!classify(H).chain_free)
    throw std::invalid_argument("preimage search needs a chain-free shape grammar");
  if (segment_cap < 0) throw std::invalid_argument("segment cap must be >= 0");
  auto entry = [&](const std::string& t) -> const AlphabeticMapping::Entry& {
    auto it = h.entries.find(t);
    if (it == h.entries.end()) throw std::invalid_argument("symbol without an image: " + t);
    return it->second;
  };
  std::function<std::vector<Tree>(const std::string&, const Tree&, const Config&, int)> rec =
      [&](const std::string& nt, const Tree& node, const Config& c,
          int budget) -> std::vector<Tree> {
    std::vector<Tree> out;
    for (const Rule& r : H.rules) {
      if (r.lhs != nt) continue;
      if (!H.storage.eval_pred(r.pred, c)) continue;
      const auto& e = entry(r.term);
      if (e.term) {
        if (*e.term != node.label) continue;
        if (r.args.size() != node.children.size()) continue;
        std::vector<Config> child_cfg;
        bool defined = true;
        for (const auto& [n, f] : r.args) {
          auto next = H.storage.apply_instr(f, c);
          if (!next) {
            defined = false;
            break;
          }
          child_cfg.push_back(*next);
        }
        if (!defined) continue;
        std::vector<Tree> partial{Tree{r.term, {}}};
        for (std::size_t i = 0; i < r.args.size() && !partial.empty(); ++i) {
          auto subs = rec(r.args[i].first, node.children[i], child_cfg[i], segment_cap);
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
      } else {
        if (budget <= 0 || r.args.size() != 1) continue;
        auto next = H.storage.apply_instr(r.args[0].second, c);
        if (!next) continue;
        for (const Tree& sub : rec(r.args[0].first, node, *next, budget - 1))
          out.push_back(Tree{r.term, {sub}});
      }
    }
    return out;
  };
  std::set<std::string> seen;
  Value acc = h.mm.zero();
  for (const auto& z : H.initial)
    for (const Tree& zeta : rec(z, xi, H.storage.initial(), segment_cap))
      if (seen.insert(render(zeta)).second)
        acc = h.mm.add(acc, apply_alphabetic(h, zeta).value);
  return acc;
}

// Inverse of weight separation for an arbitrary mapping: nonterminals
// pair the shape grammar's with the symbol they are about to produce,
// so each tree's single shape derivation carries its weight. Requires H
// chain-free, boolean, and unambiguous up to the given size bound.
inline Wrtg fuse_weights(const RankedAlphabet& theta, const Wrtg& H, const AlphabeticMapping& h,
                         int unambiguity_bound = 5) {
  GrammarFlags flags = classify(H);
  if (!flags.chain_free)
    throw std::invalid_argument("weight fusion needs a chain-free shape grammar");
  if (!flags.boolean_weights)
    throw std::invalid_argument("weight fusion needs a boolean-valued shape grammar");
  if (!(H.sigma == theta))
    throw std::invalid_argument("shape grammar terminals differ from the symbol alphabet");
  if (!(h.theta == theta))
    throw std::invalid_argument("mapping domain differs from the symbol alphabet");
  if (auto diags = validate_mapping(h); !diags.empty())
    throw std::invalid_argument("invalid mapping: " + diags[0]);
  if (!is_unambiguous_upto(H, unambiguity_bound))
    throw std::invalid_argument("shape grammar is ambiguous within size " +
                                std::to_string(unambiguity_bound));

  std::vector<std::string> syms;
  std::map<std::string, std::size_t> sidx;
  for (const auto& [t, k] : theta.symbols()) {
    sidx[t] = syms.size();
    syms.push_back(t);
  }
  std::vector<std::string> tags;
  for (std::size_t i = 0; i < syms.size(); ++i) tags.push_back("t" + std::to_string(i + 1));
  std::string sep = detail::product_sep(H.nonterminals, tags, {});
  auto name = [&](const std::string& a, std::size_t i) { return a + sep + tags[i]; };

  Wrtg out;
  out.mm = h.mm;
  out.storage = H.storage;
  out.sigma = h.sigma;
  for (const auto& a : H.nonterminals)
    for (std::size_t i = 0; i < syms.size(); ++i) out.nonterminals.push_back(name(a, i));
  for (const auto& z : H.initial)
    for (std::size_t i = 0; i < syms.size(); ++i) out.initial.push_back(name(z, i));

  for (const Rule& r : H.rules) {
    const std::size_t it = sidx.at(r.term);
    const auto& e = h.entries.at(r.term);
    const std::size_t k = r.args.size();
    int n = 0;
    if (!e.term) {
      for (std::size_t j = 0; j < syms.size(); ++j) {
        ++n;
        Rule c;
        c.id = r.id + "." + std::to_string(n);
        c.lhs = name(r.lhs, it);
        c.pred = r.pred;
        c.is_chain = true;
        c.chain_to = name(r.args[0].first, j);
        c.chain_instr = r.args[0].second;
        c.weight = e.op;
        out.rules.push_back(std::move(c));
      }
      continue;
    }
    std::vector<std::size_t> combo(k, 0);
    for (;;) {
      ++n;
      Rule c;
      c.id = r.id + "." + std::to_string(n);
      c.lhs = name(r.lhs, it);
      c.pred = r.pred;
      c.term = *e.term;
      for (std::size_t i = 0; i < k; ++i)
        c.args.push_back({name(r.args[i].first, combo[i]), r.args[i].second});
      c.weight = e.op;
      out.rules.push_back(std::move(c));
      int i = static_cast<int>(k) - 1;
      while (i >= 0 && combo[static_cast<std::size_t>(i)] + 1 == syms.size()) {
        combo[static_cast<std::size_t>(i)] = 0;
        --i;
      }
      if (i < 0) break;
      ++combo[static_cast<std::size_t>(i)];
    }
  }
  return out;
}

struct StorageSeparation {
  BehaviourAlphabet delta;
  Wrtg grammar;
};

// Moves the storage into the terminal alphabet: the output is a
// chain-free grammar over the trivial storage whose terminals pair the
// input's behaviour symbols with terminals or the chain marker. Rule
// identifiers and weights are preserved.
inline Wrtg separate_storage_grammar(const Wrtg& g, const BehaviourAlphabet& delta) {
  Wrtg out;
  out.mm = g.mm;
  out.storage = Storage::triv();
  out.sigma = ExtendedAlphabet::of(delta, g.sigma).as_ranked();
  out.nonterminals = g.nonterminals;
  out.initial = g.initial;
  for (const Rule& r : g.rules) {
    Rule c;
    c.id = r.id;
    c.lhs = r.lhs;
    c.pred = "true";
    c.weight = r.weight;
    if (r.is_chain) {
      c.term = ExtSymbol{BehSymbol{r.pred, {r.chain_instr}}, true, ""}.str();
      c.args = {{r.chain_to, "id"}};
    } else {
      BehSymbol b;
      b.pred = r.pred;
      for (const auto& [n, f] : r.args) b.instrs.push_back(f);
      c.term = ExtSymbol{b, false, r.term}.str();
      for (const auto& [n, f] : r.args) c.args.push_back({n, "id"});
    }
    out.rules.push_back(std::move(c));
  }
  return out;
}

inline StorageSeparation separate_storage(const Wrtg& g) {
  StorageSeparation out{delta_of(g), Wrtg{}};
  out.grammar = separate_storage_grammar(g, out.delta);
  return out;
}

// Syntactic check of the rule-by-rule bijection between a grammar and a
// storage-separated one: same weights, nonterminals, and initials; each
// rule's predicate and instructions moved into the extended symbol.
inline bool related(const Wrtg& g, const Wrtg& gp) {
  if (gp.storage.kind() != Storage::Kind::Triv) return false;
  if (!(g.mm == gp.mm)) return false;
  if (!classify(gp).chain_free) return false;
  auto sorted = [](std::vector<std::string> v) {
    std::sort(v.begin(), v.end());
    return v;
  };
  if (sorted(g.nonterminals) != sorted(gp.nonterminals)) return false;
  if (sorted(g.initial) != sorted(gp.initial)) return false;
  if (g.rules.empty() || g.rules.size() != gp.rules.size()) return false;
  if (!(gp.sigma == ExtendedAlphabet::of(delta_of(g), g.sigma).as_ranked())) return false;
  for (const Rule& r : g.rules) {
    const Rule* q = gp.rule(r.id);
    if (!q || q->is_chain || q->lhs != r.lhs || !(q->weight == r.weight)) return false;
    if (!gp.storage.is_true_pred(q->pred)) return false;
    for (const auto& [n, f] : q->args)
      if (!gp.storage.is_id_instr(f)) return false;
    ExtSymbol e;
    try {
      e = parse_ext_symbol(q->term);
    } catch (const ParseError&) {
      return false;
    }
    if (e.beh.pred != r.pred) return false;
    if (r.is_chain) {
      if (!e.star || e.beh.instrs[0] != r.chain_instr) return false;
      if (q->args.size() != 1 || q->args[0].first != r.chain_to) return false;
    } else {
      if (e.star || e.term != r.term) return false;
      if (q->args.size() != r.args.size()) return false;
      if (e.beh.rank() != static_cast<int>(r.args.size())) return false;
      for (std::size_t i = 0; i < r.args.size(); ++i) {
        if (q->args[i].first != r.args[i].first) return false;
        if (e.beh.instrs[i] != r.args[i].second) return false;
      }
    }
  }
  return true;
}

// Inverse of storage separation: extended-symbol terminals fold back
// into predicates and instructions over delta's storage; starred
// symbols become chain rules.
inline Wrtg fuse_storage(const BehaviourAlphabet& delta, const Wrtg& gp) {
  if (!classify(gp).chain_free)
    throw std::invalid_argument("storage fusion needs a chain-free grammar");
  Wrtg out;
  out.mm = gp.mm;
  out.storage = delta.storage();
  out.nonterminals = gp.nonterminals;
  out.initial = gp.initial;
  for (const auto& [s, k] : gp.sigma.symbols()) {
    ExtSymbol e;
    try {
      e = parse_ext_symbol(s);
    } catch (const ParseError&) {
      throw std::invalid_argument("terminal is not an extended symbol: " + s);
    }
    if (!e.star) out.sigma.add(e.term, k);
  }
  for (const Rule& r : gp.rules) {
    ExtSymbol e;
    try {
      e = parse_ext_symbol(r.term);
    } catch (const ParseError&) {
      throw std::invalid_argument("terminal is not an extended symbol: " + r.term);
    }
    Rule c;
    c.id = r.id;
    c.lhs = r.lhs;
    c.pred = e.beh.pred;
    c.weight = r.weight;
    if (e.star) {
      if (r.args.size() != 1)
        throw std::invalid_argument("starred rule must have one argument: " + r.id);
      c.is_chain = true;
      c.chain_to = r.args[0].first;
      c.chain_instr = e.beh.instrs[0];
    } else {
      if (e.beh.rank() != static_cast<int>(r.args.size()))
        throw std::invalid_argument("rule arity differs from its symbol: " + r.id);
      c.term = e.term;
      for (std::size_t i = 0; i < r.args.size(); ++i)
        c.args.push_back({r.args[i].first, e.beh.instrs[i]});
    }
    out.rules.push_back(std::move(c));
  }
  return out;
}

// Weighted finite-storage elimination: separate the weights, flatten
// the boolean shape grammar, fuse the weights back.
inline Wrtg eliminate_finite_storage(const Wrtg& g, int unambiguity_bound = 5) {
  if (!g.storage.finite_configs())
    throw std::invalid_argument("storage has no finite-configuration witness");
  WeightSeparation sep = separate_weights(g);
  Wrtg flat = eliminate_finite_storage_unweighted(sep.H);
  return fuse_weights(sep.theta, flat, sep.h, unambiguity_bound);
}

// Full decomposition: behaviour alphabet, symbol alphabet, a boolean
// chain-free shape grammar over the trivial storage, and the mapping.
struct Decomposition {
  BehaviourAlphabet delta;
  RankedAlphabet theta;
  Wrtg H;
  AlphabeticMapping h;
};

inline Decomposition decompose(const Wrtg& g) {
  StorageSeparation ss = separate_storage(g);
  WeightSeparation ws = separate_weights(ss.grammar);
  return {ss.delta, ws.theta, std::move(ws.H), std::move(ws.h)};
}

inline Wrtg recompose(const Decomposition& d, int unambiguity_bound = 5) {
  return fuse_storage(d.delta, fuse_weights(d.theta, d.H, d.h, unambiguity_bound));
}

enum class Emptiness { Empty, NonEmpty, Unknown };

struct EmptinessResult {
  Emptiness status = Emptiness::Unknown;
  int bound = 0;  // size bound searched when not decided exactly
};

// Emptiness of the support: exact over trivial or finite storage via
// the trimmed support grammar, bounded tree search otherwise.
inline EmptinessResult support_empty(const Wrtg& g, int size_bound = 10, int power_cap = 64) {
  Wrtg sg = support_grammar(g, true, power_cap);
  auto decided = [](const Wrtg& t) { return t.initial.empty() || t.rules.empty(); };
  if (decided(sg)) return {Emptiness::Empty, 0};
  if (sg.storage.kind() == Storage::Kind::Triv) return {Emptiness::NonEmpty, 0};
  if (sg.storage.finite_configs()) {
    Wrtg flat = trim_useless(eliminate_finite_storage_unweighted(sg));
    return {decided(flat) ? Emptiness::Empty : Emptiness::NonEmpty, 0};
  }
  for (const Tree& xi : enumerate_trees(sg.sigma, size_bound))
    if (!derivations(sg, xi).trees.empty()) return {Emptiness::NonEmpty, size_bound};
  return {Emptiness::Unknown, size_bound};
}

}  // namespace wts
