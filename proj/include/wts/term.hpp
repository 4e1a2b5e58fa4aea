#pragma once

// Finite labeled ordered trees over ranked alphabets, plus the term syntax
//   tree := name | name "(" tree ("," tree)* ")"
// Names are identifiers; labels outside the identifier charset are rendered
// double-quoted so rendering always round-trips.

#include <algorithm>
#include <cctype>
#include <cstddef>
#include <cstdlib>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace wts {

class ParseError : public std::runtime_error {
public:
  ParseError(const std::string& what, std::size_t offset)
      : std::runtime_error(what + " (at offset " + std::to_string(offset) + ")"),
        offset_(offset) {}
  std::size_t offset() const { return offset_; }

private:
  std::size_t offset_;
};

// Symbol -> rank map. Symbols are unique; a symbol has exactly one rank.
class RankedAlphabet {
public:
  RankedAlphabet() = default;
  RankedAlphabet(std::initializer_list<std::pair<const std::string, int>> syms)
      : ranks_(syms) {}

  void add(const std::string& name, int rank) {
    if (rank < 0) throw std::invalid_argument("rank must be >= 0: " + name);
    auto [it, inserted] = ranks_.emplace(name, rank);
    if (!inserted && it->second != rank)
      throw std::invalid_argument("conflicting ranks for symbol: " + name);
  }

  bool contains(const std::string& name) const { return ranks_.count(name) != 0; }

  int rank(const std::string& name) const {
    auto it = ranks_.find(name);
    if (it == ranks_.end()) throw std::invalid_argument("unknown symbol: " + name);
    return it->second;
  }

  int maxrk() const {
    int m = 0;
    for (const auto& [_, k] : ranks_) m = std::max(m, k);
    return m;
  }

  bool has_nullary() const {
    for (const auto& [_, k] : ranks_)
      if (k == 0) return true;
    return false;
  }

  std::vector<std::string> of_rank(int k) const {
    std::vector<std::string> out;
    for (const auto& [s, r] : ranks_)
      if (r == k) out.push_back(s);
    return out;
  }

  const std::map<std::string, int>& symbols() const { return ranks_; }
  std::size_t size() const { return ranks_.size(); }
  bool operator==(const RankedAlphabet&) const = default;

private:
  std::map<std::string, int> ranks_;
};

struct Tree {
  std::string label;
  std::vector<Tree> children;

  Tree() = default;
  explicit Tree(std::string l, std::vector<Tree> cs = {})
      : label(std::move(l)), children(std::move(cs)) {}

  bool operator==(const Tree&) const = default;
};

inline int compare(const Tree& a, const Tree& b) {
  if (int c = a.label.compare(b.label); c != 0) return c < 0 ? -1 : 1;
  std::size_t n = std::min(a.children.size(), b.children.size());
  for (std::size_t i = 0; i < n; ++i)
    if (int c = compare(a.children[i], b.children[i]); c != 0) return c;
  if (a.children.size() != b.children.size())
    return a.children.size() < b.children.size() ? -1 : 1;
  return 0;
}

inline bool operator<(const Tree& a, const Tree& b) { return compare(a, b) < 0; }

// Child indices from the root, 1-based. The empty position is the root.
using Position = std::vector<int>;

// Prefixes precede their extensions; siblings order by index.
inline bool lex_less(const Position& a, const Position& b) {
  return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
}

namespace detail {
inline void collect_positions(const Tree& t, Position& here, std::vector<Position>& out) {
  out.push_back(here);
  for (std::size_t i = 0; i < t.children.size(); ++i) {
    here.push_back(static_cast<int>(i + 1));
    collect_positions(t.children[i], here, out);
    here.pop_back();
  }
}
}  // namespace detail

// Preorder = lexicographic order of positions.
inline std::vector<Position> positions(const Tree& t) {
  std::vector<Position> out;
  Position here;
  detail::collect_positions(t, here, out);
  return out;
}

inline const Tree& subtree(const Tree& t, const Position& w) {
  const Tree* cur = &t;
  for (int i : w) {
    if (i < 1 || static_cast<std::size_t>(i) > cur->children.size())
      throw std::out_of_range("no such position in tree");
    cur = &cur->children[static_cast<std::size_t>(i - 1)];
  }
  return *cur;
}

inline const std::string& label_at(const Tree& t, const Position& w) {
  return subtree(t, w).label;
}

inline std::size_t size(const Tree& t) {
  std::size_t n = 1;
  for (const Tree& c : t.children) n += size(c);
  return n;
}

// A single node has height 1.
inline int height(const Tree& t) {
  int h = 0;
  for (const Tree& c : t.children) h = std::max(h, height(c));
  return h + 1;
}

namespace detail {
inline void collect_paths(const Tree& t, std::string& prefix, std::set<std::string>& out) {
  std::size_t mark = prefix.size();
  if (!prefix.empty()) prefix += ' ';
  prefix += t.label;
  if (t.children.empty()) {
    out.insert(prefix);
  } else {
    for (const Tree& c : t.children) collect_paths(c, prefix, out);
  }
  prefix.resize(mark);
}
}  // namespace detail

// Root-to-leaf label sequences, space-joined.
inline std::set<std::string> paths(const Tree& t) {
  std::set<std::string> out;
  std::string prefix;
  detail::collect_paths(t, prefix, out);
  return out;
}

struct TreeStats {
  std::vector<Position> positions;
  std::size_t size = 0;
  int height = 0;
  std::set<std::string> paths;
};

inline TreeStats tree_stats(const Tree& t) {
  return TreeStats{positions(t), size(t), height(t), paths(t)};
}

// Max over positions labeled by a designated binary symbol of the height
// difference of the two child subtrees; 0 when no such position exists.
inline int unbalancedness(const Tree& t, const std::set<std::string>& binary_symbols) {
  int local = 0;
  if (t.children.size() == 2 && binary_symbols.count(t.label) != 0)
    local = std::abs(height(t.children[0]) - height(t.children[1]));
  for (const Tree& c : t.children) local = std::max(local, unbalancedness(c, binary_symbols));
  return local;
}

inline bool is_identifier(std::string_view s) {
  if (s.empty()) return false;
  auto head = [](char c) { return c == '_' || (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z'); };
  auto tail = [&](char c) { return head(c) || (c >= '0' && c <= '9'); };
  if (!head(s[0])) return false;
  for (char c : s.substr(1))
    if (!tail(c)) return false;
  return true;
}

inline std::string quote_label(const std::string& s) {
  if (is_identifier(s)) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  out += '"';
  return out;
}

inline std::string render(const Tree& t) {
  std::string out = quote_label(t.label);
  if (!t.children.empty()) {
    out += '(';
    for (std::size_t i = 0; i < t.children.size(); ++i) {
      if (i != 0) out += ',';
      out += render(t.children[i]);
    }
    out += ')';
  }
  return out;
}

namespace detail {

class TermParser {
public:
  explicit TermParser(std::string_view text) : text_(text) {}

  Tree parse(const RankedAlphabet* alpha) {
    Tree t = parse_tree(alpha);
    skip_ws();
    if (pos_ != text_.size()) throw ParseError("trailing input after term", pos_);
    return t;
  }

private:
  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool peek_is(char c) {
    skip_ws();
    return pos_ < text_.size() && text_[pos_] == c;
  }

  void expect(char c) {
    skip_ws();
    if (pos_ >= text_.size() || text_[pos_] != c)
      throw ParseError(std::string("expected '") + c + "'", pos_);
    ++pos_;
  }

  std::string parse_name() {
    skip_ws();
    if (pos_ >= text_.size()) throw ParseError("expected a name", pos_);
    if (text_[pos_] == '"') {
      ++pos_;
      std::string out;
      while (pos_ < text_.size() && text_[pos_] != '"') {
        if (text_[pos_] == '\\' && pos_ + 1 < text_.size()) ++pos_;
        out += text_[pos_++];
      }
      if (pos_ >= text_.size()) throw ParseError("unterminated quoted name", pos_);
      ++pos_;
      if (out.empty()) throw ParseError("empty quoted name", pos_);
      return out;
    }
    std::size_t start = pos_;
    auto head = [](char c) { return c == '_' || std::isalpha(static_cast<unsigned char>(c)); };
    auto tail = [&](char c) { return head(c) || std::isdigit(static_cast<unsigned char>(c)); };
    if (!head(text_[pos_])) throw ParseError("expected a name", pos_);
    ++pos_;
    while (pos_ < text_.size() && tail(text_[pos_])) ++pos_;
    return std::string(text_.substr(start, pos_ - start));
  }

  Tree parse_tree(const RankedAlphabet* alpha) {
    std::size_t at = pos_;
    Tree t(parse_name());
    if (peek_is('(')) {
      expect('(');
      t.children.push_back(parse_tree(alpha));
      while (peek_is(',')) {
        expect(',');
        t.children.push_back(parse_tree(alpha));
      }
      expect(')');
      if (t.children.empty()) throw ParseError("empty argument list", at);
    }
    if (alpha != nullptr) {
      if (!alpha->contains(t.label)) throw ParseError("unknown symbol: " + t.label, at);
      int k = alpha->rank(t.label);
      if (static_cast<std::size_t>(k) != t.children.size())
        throw ParseError("symbol " + t.label + " has rank " + std::to_string(k) + ", got " +
                             std::to_string(t.children.size()) + " arguments",
                         at);
    }
    return t;
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

}  // namespace detail

inline Tree parse_term(std::string_view text) {
  return detail::TermParser(text).parse(nullptr);
}

inline Tree parse_term(std::string_view text, const RankedAlphabet& alpha) {
  return detail::TermParser(text).parse(&alpha);
}

// All trees over the alphabet with at most max_size nodes, smaller sizes first;
// deterministic order (symbol order, then child size splits, then child choice).
inline std::vector<Tree> enumerate_trees(const RankedAlphabet& alpha, int max_size) {
  std::vector<std::vector<Tree>> by_size(static_cast<std::size_t>(std::max(max_size, 0)) + 1);
  for (int s = 1; s <= max_size; ++s) {
    for (const auto& [sym, k] : alpha.symbols()) {
      if (k == 0) {
        if (s == 1) by_size[1].push_back(Tree(sym));
        continue;
      }
      if (s < k + 1) continue;
      std::vector<Tree> kids;
      std::function<void(int, int)> fill = [&](int child, int budget) {
        if (child == k) {
          if (budget == 0) by_size[static_cast<std::size_t>(s)].push_back(Tree(sym, kids));
          return;
        }
        int tail = k - child - 1;  // children still to place after this one
        for (int sz = 1; sz + tail <= budget; ++sz) {
          for (const Tree& c : by_size[static_cast<std::size_t>(sz)]) {
            kids.push_back(c);
            fill(child + 1, budget - sz);
            kids.pop_back();
          }
        }
      };
      fill(0, s - 1);
    }
  }
  std::vector<Tree> out;
  for (auto& bucket : by_size)
    for (Tree& t : bucket) out.push_back(std::move(t));
  return out;
}

}  // namespace wts
