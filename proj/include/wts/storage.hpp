#pragma once

// Storage types: configurations with named predicates and partial
// instructions. Provided kinds: trivial, counter, pushdown towers,
// word-pair appenders, and user-defined finite tables.

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "wts/term.hpp"

namespace wts {

// Immutable configuration value. Shared representation, structural
// comparison, canonical printing.
class Config {
 public:
  enum class Kind { Unit, Nat, Cells, WordPair, Named };

  struct Rep {
    Kind kind = Kind::Unit;
    std::uint64_t n = 0;
    std::vector<std::pair<std::string, Config>> cells;  // top cell first, never empty
    std::pair<std::string, std::string> words;
    std::string name;
  };

  static Config unit() {
    static const Config c{make(Rep{})};
    return c;
  }
  static Config nat(std::uint64_t n) {
    Rep r;
    r.kind = Kind::Nat;
    r.n = n;
    return Config{make(std::move(r))};
  }
  static Config cells(std::vector<std::pair<std::string, Config>> cs) {
    if (cs.empty()) throw std::invalid_argument("a pushdown configuration is never empty");
    Rep r;
    r.kind = Kind::Cells;
    r.cells = std::move(cs);
    return Config{make(std::move(r))};
  }
  static Config word_pair(std::string u, std::string v) {
    Rep r;
    r.kind = Kind::WordPair;
    r.words = {std::move(u), std::move(v)};
    return Config{make(std::move(r))};
  }
  static Config named(std::string name) {
    Rep r;
    r.kind = Kind::Named;
    r.name = std::move(name);
    return Config{make(std::move(r))};
  }

  Kind kind() const { return rep_->kind; }
  std::uint64_t num() const { return rep_->n; }
  const std::vector<std::pair<std::string, Config>>& cell_list() const { return rep_->cells; }
  const std::pair<std::string, std::string>& words() const { return rep_->words; }
  const std::string& name() const { return rep_->name; }

  int compare(const Config& o) const {
    if (rep_ == o.rep_) return 0;
    if (rep_->kind != o.rep_->kind) return rep_->kind < o.rep_->kind ? -1 : 1;
    switch (rep_->kind) {
      case Kind::Unit:
        return 0;
      case Kind::Nat:
        if (rep_->n != o.rep_->n) return rep_->n < o.rep_->n ? -1 : 1;
        return 0;
      case Kind::Cells: {
        const auto& a = rep_->cells;
        const auto& b = o.rep_->cells;
        for (std::size_t i = 0; i < a.size() && i < b.size(); ++i) {
          if (int c = a[i].first.compare(b[i].first)) return c < 0 ? -1 : 1;
          if (int c = a[i].second.compare(b[i].second)) return c;
        }
        if (a.size() != b.size()) return a.size() < b.size() ? -1 : 1;
        return 0;
      }
      case Kind::WordPair: {
        if (int c = rep_->words.first.compare(o.rep_->words.first)) return c < 0 ? -1 : 1;
        if (int c = rep_->words.second.compare(o.rep_->words.second)) return c < 0 ? -1 : 1;
        return 0;
      }
      case Kind::Named:
        if (int c = rep_->name.compare(o.rep_->name)) return c < 0 ? -1 : 1;
        return 0;
    }
    return 0;
  }
  bool operator==(const Config& o) const { return compare(o) == 0; }
  bool operator<(const Config& o) const { return compare(o) < 0; }

  std::string str() const {
    switch (rep_->kind) {
      case Kind::Unit:
        return "c";
      case Kind::Nat:
        return std::to_string(rep_->n);
      case Kind::Cells: {
        bool all_unit = true;
        for (const auto& [sym, inner] : rep_->cells)
          if (inner.kind() != Kind::Unit) all_unit = false;
        std::ostringstream out;
        out << '[';
        bool first = true;
        for (const auto& [sym, inner] : rep_->cells) {
          if (!first) out << ' ';
          first = false;
          if (all_unit)
            out << sym;
          else
            out << '(' << sym << ',' << inner.str() << ')';
        }
        out << ']';
        return out.str();
      }
      case Kind::WordPair:
        return "(" + rep_->words.first + "," + rep_->words.second + ")";
      case Kind::Named:
        return rep_->name;
    }
    return "";
  }

 private:
  explicit Config(std::shared_ptr<const Rep> rep) : rep_(std::move(rep)) {}
  static std::shared_ptr<const Rep> make(Rep r) { return std::make_shared<const Rep>(std::move(r)); }
  std::shared_ptr<const Rep> rep_;
};

// Explicit finite storage description: configuration names, total
// predicate tables, partial instruction tables.
struct FiniteTable {
  std::vector<std::string> configs;  // declaration order, no duplicates
  std::string initial;
  std::map<std::string, std::map<std::string, bool>> preds;
  std::map<std::string, std::map<std::string, std::string>> instrs;

  bool operator==(const FiniteTable& o) const {
    return configs == o.configs && initial == o.initial && preds == o.preds && instrs == o.instrs;
  }
};

namespace detail {

// Splits s on sep at parenthesis depth 0. Empty pieces are kept.
inline std::vector<std::string> split_top(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  int depth = 0;
  for (char ch : s) {
    if (ch == '(' || ch == '{') ++depth;
    if (ch == ')' || ch == '}') --depth;
    if (ch == sep && depth == 0) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  out.push_back(cur);
  return out;
}

inline std::string strip(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

}  // namespace detail

// A storage type: initial configuration plus named predicates (total)
// and named instructions (partial; an undefined result is a regular
// outcome, not an error). Every storage additionally accepts the
// always-true predicate `true` and the identity instruction `id`; the
// has_true/has_id flags report whether the base definition already
// contained them.
class Storage {
 public:
  enum class Kind { Triv, Count, Pushdown, Pcp, Finite };

  static Storage triv() { return Storage(Kind::Triv); }
  static Storage count() { return Storage(Kind::Count); }

  static Storage pushdown_of(Storage inner, std::string gamma0 = "gamma0") {
    Storage s(Kind::Pushdown);
    s.inner_ = std::make_shared<Storage>(std::move(inner));
    s.gamma0_ = std::move(gamma0);
    return s;
  }

  // n-fold pushdown tower over the trivial storage; the 0 tower is the
  // trivial storage itself.
  static Storage iterated_pushdown(int n, const std::string& gamma0 = "gamma0") {
    if (n < 0) throw std::invalid_argument("pushdown iteration count must be >= 0");
    Storage s = triv();
    for (int i = 0; i < n; ++i) s = pushdown_of(std::move(s), gamma0);
    return s;
  }

  static Storage pcp(std::vector<std::pair<std::string, std::string>> pairs) {
    if (pairs.empty()) throw std::invalid_argument("word-pair storage needs at least one pair");
    for (const auto& [u, v] : pairs)
      if (u.empty() || v.empty())
        throw std::invalid_argument("word-pair components must be non-empty");
    Storage s(Kind::Pcp);
    s.pairs_ = std::move(pairs);
    return s;
  }

  static Storage finite(FiniteTable table) {
    if (table.configs.empty()) throw std::invalid_argument("finite storage needs configurations");
    std::map<std::string, bool> seen;
    for (const auto& c : table.configs) {
      if (c.empty()) throw std::invalid_argument("empty configuration name");
      if (seen.count(c)) throw std::invalid_argument("duplicate configuration " + c);
      seen[c] = true;
    }
    if (!seen.count(table.initial))
      throw std::invalid_argument("initial configuration " + table.initial + " not declared");
    for (const auto& [p, row] : table.preds)
      for (const auto& c : table.configs)
        if (!row.count(c))
          throw std::invalid_argument("predicate " + p + " misses configuration " + c);
    for (const auto& [p, row] : table.preds)
      for (const auto& [c, v] : row)
        if (!seen.count(c)) throw std::invalid_argument("predicate " + p + " names unknown configuration " + c);
    for (const auto& [f, row] : table.instrs)
      for (const auto& [a, b] : row)
        if (!seen.count(a) || !seen.count(b))
          throw std::invalid_argument("instruction " + f + " names unknown configuration");
    Storage s(Kind::Finite);
    s.table_ = std::make_shared<FiniteTable>(std::move(table));
    return s;
  }

  Kind kind() const { return kind_; }
  const Storage& inner() const {
    if (kind_ != Kind::Pushdown) throw std::logic_error("not a pushdown storage");
    return *inner_;
  }
  const std::string& bottom_symbol() const { return gamma0_; }
  const std::vector<std::pair<std::string, std::string>>& pairs() const { return pairs_; }
  const FiniteTable& table() const {
    if (kind_ != Kind::Finite) throw std::logic_error("not a finite-table storage");
    return *table_;
  }

  // Depth of a pushdown tower whose base is the trivial storage;
  // nullopt when the base is anything else.
  std::optional<int> tower_depth() const {
    if (kind_ == Kind::Triv) return 0;
    if (kind_ != Kind::Pushdown) return std::nullopt;
    auto d = inner_->tower_depth();
    if (!d) return std::nullopt;
    return *d + 1;
  }

  Config initial() const {
    switch (kind_) {
      case Kind::Triv:
        return Config::unit();
      case Kind::Count:
        return Config::nat(0);
      case Kind::Pushdown:
        return Config::cells({{gamma0_, inner_->initial()}});
      case Kind::Pcp:
        return Config::word_pair("", "");
      case Kind::Finite:
        return Config::named(table_->initial);
    }
    return Config::unit();
  }

  bool valid_pred(const std::string& p) const {
    if (p == "true") return true;
    switch (kind_) {
      case Kind::Triv:
        return false;
      case Kind::Count:
        return p == "zero";
      case Kind::Pushdown: {
        if (p == "bottom") return true;
        if (p.rfind("top=", 0) == 0) return is_identifier(p.substr(4));
        if (p.size() > 6 && p.rfind("test(", 0) == 0 && p.back() == ')')
          return inner_->valid_pred(p.substr(5, p.size() - 6));
        return false;
      }
      case Kind::Pcp:
        return p == "equal";
      case Kind::Finite:
        return table_->preds.count(p) > 0;
    }
    return false;
  }

  bool valid_instr(const std::string& f) const {
    if (f == "id") return true;
    switch (kind_) {
      case Kind::Triv:
        return false;
      case Kind::Count:
        return f == "inc" || f == "dec";
      case Kind::Pushdown: {
        if (f == "pop") return true;
        if (f.size() > 6 && f.rfind("stay(", 0) == 0 && f.back() == ')')
          return is_identifier(f.substr(5, f.size() - 6));
        if (f.size() > 6 && f.rfind("push(", 0) == 0 && f.back() == ')') {
          auto parts = detail::split_top(f.substr(5, f.size() - 6), ',');
          if (parts.size() == 1)
            return is_identifier(parts[0]) && inner_->kind() == Kind::Triv;
          if (parts.size() == 2) return is_identifier(parts[0]) && inner_->valid_instr(parts[1]);
          return false;
        }
        return false;
      }
      case Kind::Pcp: {
        if (f.empty()) return false;
        for (char ch : f)
          if (!std::isdigit(static_cast<unsigned char>(ch))) return false;
        std::size_t i = std::stoull(f);
        return i >= 1 && i <= pairs_.size();
      }
      case Kind::Finite:
        return table_->instrs.count(f) > 0;
    }
    return false;
  }

  bool eval_pred(const std::string& p, const Config& c) const {
    if (!valid_pred(p)) throw std::invalid_argument("unknown predicate " + p);
    if (p == "true") return true;
    switch (kind_) {
      case Kind::Count:
        return c.num() == 0;  // p == "zero"
      case Kind::Pushdown: {
        const auto& cs = c.cell_list();
        if (p == "bottom") return cs.size() == 1;
        if (p.rfind("top=", 0) == 0) return cs.front().first == p.substr(4);
        return inner_->eval_pred(p.substr(5, p.size() - 6), cs.front().second);  // test(q)
      }
      case Kind::Pcp:
        return c.words().first == c.words().second;  // p == "equal"
      case Kind::Finite:
        return table_->preds.at(p).at(c.name());
      default:
        return true;
    }
  }

  std::optional<Config> apply_instr(const std::string& f, const Config& c) const {
    if (!valid_instr(f)) throw std::invalid_argument("unknown instruction " + f);
    if (f == "id") return c;
    switch (kind_) {
      case Kind::Count:
        if (f == "inc") return Config::nat(c.num() + 1);
        if (c.num() == 0) return std::nullopt;  // dec on 0
        return Config::nat(c.num() - 1);
      case Kind::Pushdown: {
        auto cs = c.cell_list();
        if (f == "pop") {
          if (cs.size() == 1) return std::nullopt;
          cs.erase(cs.begin());
          return Config::cells(std::move(cs));
        }
        if (f.rfind("stay(", 0) == 0) {
          cs.front().first = f.substr(5, f.size() - 6);
          return Config::cells(std::move(cs));
        }
        auto parts = detail::split_top(f.substr(5, f.size() - 6), ',');
        const std::string& sym = parts[0];
        std::string g = parts.size() == 2 ? parts[1] : "id";
        auto pushed = inner_->apply_instr(g, cs.front().second);
        if (!pushed) return std::nullopt;
        cs.insert(cs.begin(), {sym, *pushed});
        return Config::cells(std::move(cs));
      }
      case Kind::Pcp: {
        const auto& [u, v] = pairs_[std::stoull(f) - 1];
        return Config::word_pair(c.words().first + u, c.words().second + v);
      }
      case Kind::Finite: {
        const auto& row = table_->instrs.at(f);
        auto it = row.find(c.name());
        if (it == row.end()) return std::nullopt;
        return Config::named(it->second);
      }
      default:
        return c;
    }
  }

  // Exhaustive configuration list when the storage is finite.
  std::optional<std::vector<Config>> finite_configs() const {
    switch (kind_) {
      case Kind::Triv:
        return std::vector<Config>{Config::unit()};
      case Kind::Finite: {
        std::vector<Config> out;
        for (const auto& c : table_->configs) out.push_back(Config::named(c));
        return out;
      }
      default:
        return std::nullopt;
    }
  }

  bool has_true() const {
    if (kind_ == Kind::Finite && !ext_true_) {
      auto it = table_->preds.find("true");
      if (it == table_->preds.end()) return false;
      for (const auto& [c, v] : it->second)
        if (!v) return false;
      return true;
    }
    return true;  // provided (or force-added) on every other kind
  }

  bool has_id() const {
    if (ext_id_) return true;
    if (kind_ == Kind::Pcp) return false;
    if (kind_ == Kind::Finite) {
      auto it = table_->instrs.find("id");
      if (it == table_->instrs.end()) return false;
      for (const auto& c : table_->configs) {
        auto jt = it->second.find(c);
        if (jt == it->second.end() || jt->second != c) return false;
      }
      return true;
    }
    return true;
  }

  // Extension with the always-true predicate and identity instruction.
  // Finite tables are materialized so the extension survives
  // serialization; other kinds only flip the flags (evaluation already
  // accepts `true` and `id` everywhere).
  Storage with_true_id() const {
    Storage s = *this;
    if (kind_ == Kind::Finite) {
      FiniteTable t = *table_;
      if (!has_true()) {
        auto& row = t.preds["true"];
        for (const auto& c : t.configs) row[c] = true;
      }
      if (!has_id()) {
        auto& row = t.instrs["id"];
        for (const auto& c : t.configs) row[c] = c;
      }
      s = finite(std::move(t));
    }
    s.ext_true_ = true;
    s.ext_id_ = true;
    return s;
  }

  // Syntactic check for the always-true predicate (including nested
  // test wrappers on pushdown towers and all-1 rows of finite tables).
  bool is_true_pred(const std::string& p) const {
    if (!valid_pred(p)) return false;
    if (p == "true") return true;
    if (kind_ == Kind::Pushdown && p.rfind("test(", 0) == 0)
      return inner_->is_true_pred(p.substr(5, p.size() - 6));
    if (kind_ == Kind::Finite) {
      for (const auto& [c, v] : table_->preds.at(p))
        if (!v) return false;
      return true;
    }
    return false;
  }

  bool is_id_instr(const std::string& f) const {
    if (!valid_instr(f)) return false;
    if (f == "id") return true;
    if (kind_ == Kind::Finite) {
      const auto& row = table_->instrs.at(f);
      for (const auto& c : table_->configs) {
        auto it = row.find(c);
        if (it == row.end() || it->second != c) return false;
      }
      return true;
    }
    return false;
  }

  // Canonical file spelling. Parsing the result reproduces the storage.
  std::string name() const {
    switch (kind_) {
      case Kind::Triv:
        return "triv";
      case Kind::Count:
        return "count";
      case Kind::Pushdown: {
        auto d = tower_depth();
        if (d && gamma0_ == "gamma0") return *d == 1 ? "pd1" : "pd(" + std::to_string(*d) + ")";
        return "pd_of(" + inner_->name() + ")";  // no file spelling; descriptive only
      }
      case Kind::Pcp: {
        std::ostringstream out;
        out << "pcp{";
        bool first = true;
        for (const auto& [u, v] : pairs_) {
          if (!first) out << ';';
          first = false;
          out << '(' << u << ',' << v << ')';
        }
        out << '}';
        return out.str();
      }
      case Kind::Finite: {
        std::ostringstream out;
        out << "finite{configs:";
        for (const auto& c : table_->configs) out << ' ' << c;
        out << "; initial: " << table_->initial;
        for (const auto& [p, row] : table_->preds) {
          out << "; pred " << p << ':';
          for (const auto& c : table_->configs) out << ' ' << c << '=' << (row.at(c) ? 1 : 0);
        }
        for (const auto& [f, row] : table_->instrs) {
          out << "; instr " << f << ':';
          for (const auto& c : table_->configs) {
            auto it = row.find(c);
            if (it != row.end()) out << ' ' << c << "->" << it->second;
          }
        }
        out << '}';
        return out.str();
      }
    }
    return "";
  }

  // Parses a storage spelling; throws ParseError with a message
  // naming the offending part.
  static Storage parse(const std::string& text);

  static std::optional<Storage> by_name(const std::string& text) {
    try {
      return parse(text);
    } catch (const ParseError&) {
      return std::nullopt;
    } catch (const std::invalid_argument&) {
      return std::nullopt;
    }
  }

  bool operator==(const Storage& o) const {
    if (kind_ != o.kind_) return false;
    switch (kind_) {
      case Kind::Pushdown:
        return gamma0_ == o.gamma0_ && *inner_ == *o.inner_;
      case Kind::Pcp:
        return pairs_ == o.pairs_;
      case Kind::Finite:
        return *table_ == *o.table_;
      default:
        return true;
    }
  }

 private:
  explicit Storage(Kind k) : kind_(k) {}

  Kind kind_;
  std::shared_ptr<Storage> inner_;  // pushdown
  std::string gamma0_ = "gamma0";
  std::vector<std::pair<std::string, std::string>> pairs_;  // pcp
  std::shared_ptr<FiniteTable> table_;                      // finite
  bool ext_true_ = false;
  bool ext_id_ = false;
};

inline Storage Storage::parse(const std::string& text) {
  std::string s = detail::strip(text);
  auto fail = [&](const std::string& msg) -> Storage {
    throw ParseError("storage \"" + s + "\": " + msg, 0);
  };
  if (s == "triv") return triv();
  if (s == "count") return count();
  if (s == "pd1") return iterated_pushdown(1);
  if (s.rfind("pd(", 0) == 0 && s.back() == ')') {
    std::string arg = detail::strip(s.substr(3, s.size() - 4));
    if (arg.empty()) return fail("missing iteration count");
    for (char ch : arg)
      if (!std::isdigit(static_cast<unsigned char>(ch))) return fail("iteration count must be a number");
    return iterated_pushdown(static_cast<int>(std::stoul(arg)));
  }
  if (s.rfind("pcp{", 0) == 0 && s.back() == '}') {
    std::vector<std::pair<std::string, std::string>> pairs;
    for (const std::string& piece : detail::split_top(s.substr(4, s.size() - 5), ';')) {
      std::string p = detail::strip(piece);
      if (p.size() < 2 || p.front() != '(' || p.back() != ')') return fail("pair must look like (u,v)");
      auto parts = detail::split_top(p.substr(1, p.size() - 2), ',');
      if (parts.size() != 2) return fail("pair must have two components");
      std::string u = detail::strip(parts[0]), v = detail::strip(parts[1]);
      if (u.empty() || v.empty()) return fail("pair components must be non-empty");
      for (char ch : u + v)
        if (!std::isalnum(static_cast<unsigned char>(ch))) return fail("pair components must be alphanumeric");
      pairs.emplace_back(u, v);
    }
    return pcp(std::move(pairs));
  }
  if (s.rfind("finite{", 0) == 0 && s.back() == '}') {
    FiniteTable t;
    bool saw_configs = false, saw_initial = false;
    for (const std::string& piece : detail::split_top(s.substr(7, s.size() - 8), ';')) {
      std::string seg = detail::strip(piece);
      if (seg.empty()) continue;
      std::size_t colon = seg.find(':');
      if (colon == std::string::npos) return fail("segment \"" + seg + "\" needs a colon");
      std::string key = detail::strip(seg.substr(0, colon));
      std::string body = detail::strip(seg.substr(colon + 1));
      std::istringstream words(body);
      if (key == "configs") {
        saw_configs = true;
        std::string w;
        while (words >> w) t.configs.push_back(w);
      } else if (key == "initial") {
        saw_initial = true;
        t.initial = body;
      } else if (key.rfind("pred ", 0) == 0) {
        std::string pname = detail::strip(key.substr(5));
        std::string w;
        while (words >> w) {
          std::size_t eq = w.find('=');
          if (eq == std::string::npos) return fail("predicate entry \"" + w + "\" needs c=0 or c=1");
          std::string val = w.substr(eq + 1);
          if (val != "0" && val != "1") return fail("predicate value must be 0 or 1");
          t.preds[pname][w.substr(0, eq)] = val == "1";
        }
      } else if (key.rfind("instr ", 0) == 0) {
        std::string fname = detail::strip(key.substr(6));
        t.instrs[fname];  // an instruction may be everywhere-undefined
        std::string w;
        while (words >> w) {
          std::size_t arrow = w.find("->");
          if (arrow == std::string::npos) return fail("instruction entry \"" + w + "\" needs a->b");
          t.instrs[fname][w.substr(0, arrow)] = w.substr(arrow + 2);
        }
      } else {
        return fail("unknown segment key \"" + key + "\"");
      }
    }
    if (!saw_configs) return fail("missing configs segment");
    if (!saw_initial) return fail("missing initial segment");
    try {
      return finite(std::move(t));
    } catch (const std::invalid_argument& e) {
      return fail(e.what());
    }
  }
  return fail("unknown storage spelling");
}

}  // namespace wts
