#pragma once

// Behaviour alphabets over a storage type, their terminal extensions,
// behaviour validation with configuration families, and bounded
// root-down enumeration of the behaviours on a tree.

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "wts/storage.hpp"
#include "wts/term.hpp"

namespace wts {

// Symbol (p, f1 ... fk): one predicate, rank-many instructions.
struct BehSymbol {
  std::string pred;
  std::vector<std::string> instrs;

  int rank() const { return static_cast<int>(instrs.size()); }

  // `(p, eps)` at rank 0, `(p, f1 f2 ... fk)` otherwise.
  std::string str() const {
    std::ostringstream out;
    out << '(' << pred << ", ";
    if (instrs.empty()) {
      out << "eps";
    } else {
      for (std::size_t i = 0; i < instrs.size(); ++i) {
        if (i) out << ' ';
        out << instrs[i];
      }
    }
    out << ')';
    return out.str();
  }

  bool operator==(const BehSymbol& o) const { return pred == o.pred && instrs == o.instrs; }
  bool operator<(const BehSymbol& o) const {
    if (pred != o.pred) return pred < o.pred;
    return instrs < o.instrs;
  }
};

inline BehSymbol parse_beh_symbol(const std::string& text) {
  std::string s = detail::strip(text);
  if (s.size() < 2 || s.front() != '(' || s.back() != ')')
    throw ParseError("behaviour symbol must look like (p, f1 ... fk): " + text, 0);
  auto parts = detail::split_top(s.substr(1, s.size() - 2), ',');
  if (parts.size() != 2)
    throw ParseError("behaviour symbol needs exactly one top-level comma: " + text, 0);
  BehSymbol b;
  b.pred = detail::strip(parts[0]);
  if (b.pred.empty()) throw ParseError("behaviour symbol has an empty predicate: " + text, 0);
  std::string body = detail::strip(parts[1]);
  if (body != "eps") {
    for (const std::string& piece : detail::split_top(body, ' ')) {
      std::string f = detail::strip(piece);
      if (!f.empty()) b.instrs.push_back(f);
    }
    if (b.instrs.empty())
      throw ParseError("behaviour symbol needs instructions or eps: " + text, 0);
  }
  return b;
}

// Extended symbol: <beh,sigma> of the behaviour's rank, or the unary
// chain marker <beh,*>.
struct ExtSymbol {
  BehSymbol beh;
  bool star = false;
  std::string term;  // meaningful iff !star

  int rank() const { return star ? 1 : beh.rank(); }

  std::string str() const { return "<" + beh.str() + "," + (star ? "*" : term) + ">"; }

  bool operator==(const ExtSymbol& o) const {
    return star == o.star && beh == o.beh && (star || term == o.term);
  }
};

inline ExtSymbol parse_ext_symbol(const std::string& text) {
  std::string s = detail::strip(text);
  if (s.size() < 2 || s.front() != '<' || s.back() != '>')
    throw ParseError("extended symbol must look like <(p, f...),sigma>: " + text, 0);
  auto parts = detail::split_top(s.substr(1, s.size() - 2), ',');
  if (parts.size() != 2)
    throw ParseError("extended symbol needs one top-level comma: " + text, 0);
  ExtSymbol e;
  e.beh = parse_beh_symbol(parts[0]);
  std::string t = detail::strip(parts[1]);
  if (t == "*") {
    e.star = true;
    if (e.beh.rank() != 1)
      throw ParseError("a starred symbol carries exactly one instruction: " + text, 0);
  } else {
    e.term = t;
  }
  return e;
}

// Ranked alphabet whose rank-k symbols are P' x (F')^k for k up to a
// maximal rank n.
class BehaviourAlphabet {
 public:
  static BehaviourAlphabet corresponding(Storage storage, std::vector<std::string> preds,
                                         std::vector<std::string> instrs, int n) {
    if (preds.empty() || instrs.empty())
      throw std::invalid_argument("behaviour alphabet needs non-empty predicate and instruction sets");
    if (n < 0) throw std::invalid_argument("behaviour alphabet rank must be >= 0");
    for (const auto& p : preds)
      if (!storage.valid_pred(p)) throw std::invalid_argument("unknown predicate " + p);
    for (const auto& f : instrs)
      if (!storage.valid_instr(f)) throw std::invalid_argument("unknown instruction " + f);
    BehaviourAlphabet d;
    d.storage_ = std::move(storage);
    d.preds_ = std::move(preds);
    d.instrs_ = std::move(instrs);
    d.n_ = n;
    return d;
  }

  static BehaviourAlphabet corresponding(Storage storage, std::vector<std::string> preds,
                                         std::vector<std::string> instrs,
                                         const RankedAlphabet& sigma) {
    return corresponding(std::move(storage), std::move(preds), std::move(instrs), sigma.maxrk());
  }

  const Storage& storage() const { return storage_; }
  const std::vector<std::string>& preds() const { return preds_; }
  const std::vector<std::string>& instrs() const { return instrs_; }
  int max_rank() const { return n_; }

  // All rank-k symbols, predicates outermost, instruction tuples in
  // odometer order. Deterministic.
  std::vector<BehSymbol> symbols(int k) const {
    std::vector<BehSymbol> out;
    if (k < 0 || k > n_) return out;
    std::vector<std::vector<std::string>> tuples{{}};
    for (int i = 0; i < k; ++i) {
      std::vector<std::vector<std::string>> next;
      for (const auto& t : tuples)
        for (const auto& f : instrs_) {
          auto u = t;
          u.push_back(f);
          next.push_back(std::move(u));
        }
      tuples = std::move(next);
    }
    for (const auto& p : preds_)
      for (const auto& t : tuples) out.push_back(BehSymbol{p, t});
    return out;
  }

  bool contains(const BehSymbol& b) const {
    if (b.rank() > n_) return false;
    if (std::find(preds_.begin(), preds_.end(), b.pred) == preds_.end()) return false;
    for (const auto& f : b.instrs)
      if (std::find(instrs_.begin(), instrs_.end(), f) == instrs_.end()) return false;
    return true;
  }

  RankedAlphabet as_ranked() const {
    RankedAlphabet a;
    for (int k = 0; k <= n_; ++k)
      for (const auto& b : symbols(k)) a.add(b.str(), k);
    return a;
  }

 private:
  Storage storage_ = Storage::triv();
  std::vector<std::string> preds_;
  std::vector<std::string> instrs_;
  int n_ = 0;
};

// Terminal extension of a behaviour alphabet: rank-1 symbols pair a
// unary behaviour symbol with a unary terminal or the chain marker *,
// every other rank pairs rank-k behaviour symbols with rank-k
// terminals.
class ExtendedAlphabet {
 public:
  static ExtendedAlphabet of(BehaviourAlphabet delta, RankedAlphabet sigma) {
    ExtendedAlphabet e;
    e.delta_ = std::move(delta);
    e.sigma_ = std::move(sigma);
    return e;
  }

  const BehaviourAlphabet& delta() const { return delta_; }
  const RankedAlphabet& terminals() const { return sigma_; }

  bool contains(const ExtSymbol& s) const {
    if (s.star) return s.beh.rank() == 1 && delta_.contains(s.beh);
    if (!delta_.contains(s.beh)) return false;
    return sigma_.contains(s.term) && sigma_.rank(s.term) == s.beh.rank();
  }

  RankedAlphabet as_ranked() const {
    RankedAlphabet a;
    for (int k = 0; k <= delta_.max_rank(); ++k)
      for (const auto& b : delta_.symbols(k)) {
        if (k == 1) a.add(ExtSymbol{b, true, ""}.str(), 1);
        for (const auto& t : sigma_.of_rank(k)) a.add(ExtSymbol{b, false, t}.str(), k);
      }
    return a;
  }

  // The star-free part: the symbols a behaviour keeps in bijection
  // with the underlying tree's positions.
  RankedAlphabet theta_alphabet() const {
    RankedAlphabet a;
    for (int k = 0; k <= delta_.max_rank(); ++k)
      for (const auto& b : delta_.symbols(k))
        for (const auto& t : sigma_.of_rank(k)) a.add(ExtSymbol{b, false, t}.str(), k);
    return a;
  }

 private:
  BehaviourAlphabet delta_ = BehaviourAlphabet::corresponding(
      Storage::triv(), {"true"}, {"id"}, 0);
  RankedAlphabet sigma_;
};

// Outcome of validating a behaviour tree: either the family of
// configurations it determines, or the first violating position.
struct BehaviourCheck {
  bool ok = false;
  std::map<Position, Config> family;
  Position failed_at;
  std::string reason;
};

// Validates b (labels are behaviour-symbol spellings) against the
// storage, rooted at configuration c.
inline BehaviourCheck check_behaviour(const Tree& b, const Storage& storage, const Config& c) {
  BehaviourCheck out;
  struct Frame {
    const Tree* node;
    Position pos;
    Config config;
  };
  std::vector<Frame> stack{{&b, {}, c}};
  while (!stack.empty()) {
    Frame fr = std::move(stack.back());
    stack.pop_back();
    BehSymbol sym;
    try {
      sym = parse_beh_symbol(fr.node->label);
    } catch (const ParseError& e) {
      out.failed_at = fr.pos;
      out.reason = e.what();
      return out;
    }
    if (sym.rank() != static_cast<int>(fr.node->children.size())) {
      out.failed_at = fr.pos;
      out.reason = "symbol rank differs from child count";
      return out;
    }
    if (!storage.valid_pred(sym.pred)) {
      out.failed_at = fr.pos;
      out.reason = "unknown predicate " + sym.pred;
      return out;
    }
    if (!storage.eval_pred(sym.pred, fr.config)) {
      out.failed_at = fr.pos;
      out.reason = "predicate " + sym.pred + " is false at configuration " + fr.config.str();
      return out;
    }
    out.family.emplace(fr.pos, fr.config);
    for (int i = sym.rank(); i >= 1; --i) {
      const std::string& f = sym.instrs[static_cast<std::size_t>(i - 1)];
      Position child = fr.pos;
      child.push_back(i);
      if (!storage.valid_instr(f)) {
        out.failed_at = child;
        out.reason = "unknown instruction " + f;
        return out;
      }
      auto next = storage.apply_instr(f, fr.config);
      if (!next) {
        out.failed_at = child;
        out.reason = "instruction " + f + " undefined at configuration " + fr.config.str();
        return out;
      }
      stack.push_back({&fr.node->children[static_cast<std::size_t>(i - 1)], std::move(child), *next});
    }
  }
  out.ok = true;
  return out;
}

struct BehaviourOptions {
  int segment_cap = 8;
  // When set, only these extended-symbol spellings may be used. Sound
  // for sums in which every behaviour using an unlisted symbol
  // evaluates to zero.
  std::optional<std::set<std::string>> allowed;
  std::optional<Config> root;  // default: the storage's initial configuration
};

namespace detail {

struct BehEnumerator {
  const BehaviourAlphabet& delta;
  const BehaviourOptions& opts;
  std::vector<const Tree*> nodes;  // preorder
  std::vector<std::vector<int>> kids;

  struct Key {
    int node;
    Config config;
    int budget;
    bool operator<(const Key& o) const {
      if (node != o.node) return node < o.node;
      if (int c = config.compare(o.config)) return c < 0;
      return budget < o.budget;
    }
  };
  std::map<Key, std::vector<Tree>> memo;

  int index_tree(const Tree& t) {
    int id = static_cast<int>(nodes.size());
    nodes.push_back(&t);
    kids.emplace_back();
    std::vector<int> local;
    for (const Tree& c : t.children) local.push_back(index_tree(c));
    kids[static_cast<std::size_t>(id)] = std::move(local);
    return id;
  }

  bool allowed_symbol(const std::string& spelling) const {
    return !opts.allowed || opts.allowed->count(spelling) > 0;
  }

  const std::vector<Tree>& enumerate(int node, const Config& c, int budget) {
    Key key{node, c, budget};
    auto it = memo.find(key);
    if (it != memo.end()) return it->second;
    std::vector<Tree> out;
    const Storage& st = delta.storage();
    const Tree& xi = *nodes[static_cast<std::size_t>(node)];
    int k = static_cast<int>(xi.children.size());

    // Keep this position: a rank-k symbol paired with the terminal.
    for (const BehSymbol& b : delta.symbols(k)) {
      ExtSymbol ext{b, false, xi.label};
      if (!allowed_symbol(ext.str())) continue;
      if (!st.eval_pred(b.pred, c)) continue;
      std::vector<Config> child_configs;
      bool defined = true;
      for (const auto& f : b.instrs) {
        auto next = st.apply_instr(f, c);
        if (!next) {
          defined = false;
          break;
        }
        child_configs.push_back(*next);
      }
      if (!defined) continue;
      std::vector<std::vector<Tree>> per_child;
      bool feasible = true;
      for (int i = 0; i < k && feasible; ++i) {
        per_child.push_back(enumerate(kids[static_cast<std::size_t>(node)][static_cast<std::size_t>(i)],
                                      child_configs[static_cast<std::size_t>(i)],
                                      opts.segment_cap));
        if (per_child.back().empty()) feasible = false;
      }
      if (!feasible) continue;
      std::vector<Tree> partial{Tree{ext.str(), {}}};
      for (int i = 0; i < k; ++i) {
        std::vector<Tree> next;
        for (const Tree& acc : partial)
          for (const Tree& sub : per_child[static_cast<std::size_t>(i)]) {
            Tree t = acc;
            t.children.push_back(sub);
            next.push_back(std::move(t));
          }
        partial = std::move(next);
      }
      for (Tree& t : partial) out.push_back(std::move(t));
    }

    // Insert a chain marker above this position.
    if (budget > 0)
      for (const BehSymbol& b : delta.symbols(1)) {
        ExtSymbol ext{b, true, ""};
        if (!allowed_symbol(ext.str())) continue;
        if (!st.eval_pred(b.pred, c)) continue;
        auto next = st.apply_instr(b.instrs[0], c);
        if (!next) continue;
        for (const Tree& sub : enumerate(node, *next, budget - 1))
          out.push_back(Tree{ext.str(), {sub}});
      }

    auto [slot, inserted] = memo.emplace(std::move(key), std::move(out));
    return slot->second;
  }
};

}  // namespace detail

// All behaviours on xi within the star-segment cap: trees over the
// terminal extension whose star-free projection reconstructs xi and
// whose behaviour projection is valid from the root configuration.
// Exhaustive within the cap, duplicate-free, deterministic order.
inline std::vector<Tree> behaviours_on(const Tree& xi, const BehaviourAlphabet& delta,
                                       const BehaviourOptions& opts = {}) {
  if (opts.segment_cap < 0) throw std::invalid_argument("segment cap must be >= 0");
  detail::BehEnumerator e{delta, opts};
  e.index_tree(xi);
  Config root = opts.root ? *opts.root : delta.storage().initial();
  return e.enumerate(0, root, opts.segment_cap);
}

// True when raising the segment cap by one adds no behaviour, i.e. the
// bounded enumeration happens to be complete at this cap.
inline bool behaviours_cap_stable(const Tree& xi, const BehaviourAlphabet& delta,
                                  const BehaviourOptions& opts = {}) {
  BehaviourOptions next = opts;
  next.segment_cap = opts.segment_cap + 1;
  return behaviours_on(xi, delta, opts).size() == behaviours_on(xi, delta, next).size();
}

// Drops the terminal component: a tree over the behaviour alphabet.
inline Tree behaviour_projection(const Tree& zeta) {
  Tree out;
  out.label = parse_ext_symbol(zeta.label).beh.str();
  for (const Tree& c : zeta.children) out.children.push_back(behaviour_projection(c));
  return out;
}

// Drops star nodes and the behaviour components: the underlying tree.
inline Tree term_projection(const Tree& zeta) {
  ExtSymbol e = parse_ext_symbol(zeta.label);
  if (e.star) {
    if (zeta.children.size() != 1)
      throw std::invalid_argument("a starred node has exactly one child");
    return term_projection(zeta.children[0]);
  }
  Tree out;
  out.label = e.term;
  for (const Tree& c : zeta.children) out.children.push_back(term_projection(c));
  return out;
}

// Definitional membership test: zeta is a behaviour on xi iff its
// labels lie in the terminal extension, dropping stars and behaviour
// components reconstructs xi, and the behaviour projection validates
// from the root configuration. No enumeration, no cap.
inline bool is_behaviour_on(const Tree& xi, const BehaviourAlphabet& delta, const Tree& zeta,
                            const RankedAlphabet& sigma,
                            const std::optional<Config>& root = std::nullopt) {
  ExtendedAlphabet ext = ExtendedAlphabet::of(delta, sigma);
  for (const Position& w : positions(zeta)) {
    ExtSymbol e;
    try {
      e = parse_ext_symbol(label_at(zeta, w));
    } catch (const ParseError&) {
      return false;
    }
    if (!ext.contains(e)) return false;
  }
  try {
    if (term_projection(zeta) != xi) return false;
  } catch (const std::invalid_argument&) {
    return false;
  }
  Config c = root ? *root : delta.storage().initial();
  return check_behaviour(behaviour_projection(zeta), delta.storage(), c).ok;
}

// The unique lexicographic-order-preserving bijection from positions
// of xi to star-free positions of zeta.
inline std::map<Position, Position> theta_map(const Tree& xi, const Tree& zeta) {
  std::map<Position, Position> out;
  struct Walk {
    std::map<Position, Position>& out;
    void go(const Tree& x, const Position& xw, const Tree& z, Position zv) {
      const Tree* node = &z;
      ExtSymbol e = parse_ext_symbol(node->label);
      while (e.star) {
        if (node->children.size() != 1)
          throw std::invalid_argument("a starred node has exactly one child");
        node = &node->children[0];
        zv.push_back(1);
        e = parse_ext_symbol(node->label);
      }
      if (e.term != x.label || node->children.size() != x.children.size())
        throw std::invalid_argument("tree is not a behaviour on the given input");
      out[xw] = zv;
      for (std::size_t i = 0; i < x.children.size(); ++i) {
        Position cw = xw;
        cw.push_back(static_cast<int>(i + 1));
        Position cv = zv;
        cv.push_back(static_cast<int>(i + 1));
        go(x.children[i], cw, node->children[i], std::move(cv));
      }
    }
  };
  Walk w{out};
  w.go(xi, {}, zeta, {});
  return out;
}

}  // namespace wts
