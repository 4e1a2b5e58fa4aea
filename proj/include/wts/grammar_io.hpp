#pragma once

// Line-oriented grammar file format:
//
//   wrtg
//   mmonoid: bimonoid(nat_inf)
//   storage: pd1
//   alphabet: sigma/2 delta/1 alpha/0
//   nonterminals: Z A
//   initial: Z
//   rule r1: Z[true] -> Z[push(gamma)] @ mul(1,2)
//   rule r2: Z[true] -> sigma(A[id],A[id]) @ mul(2,1)
//
// `#` starts a comment outside double quotes. Terminal symbols that
// are not plain identifiers are double-quoted with backslash escapes.

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "wts/grammar.hpp"

namespace wts {
namespace detail {

// Cuts a trailing comment, respecting double quotes.
inline std::string strip_comment(const std::string& line) {
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    char ch = line[i];
    if (ch == '\\' && quoted) {
      ++i;
      continue;
    }
    if (ch == '"') quoted = !quoted;
    if (ch == '#' && !quoted) return line.substr(0, i);
  }
  return line;
}

// Reads one whitespace-delimited token starting at i, keeping quoted
// sections (with their quotes) intact.
inline std::string next_token(const std::string& s, std::size_t& i) {
  while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
  std::string out;
  bool quoted = false;
  while (i < s.size()) {
    char ch = s[i];
    if (!quoted && std::isspace(static_cast<unsigned char>(ch))) break;
    out.push_back(ch);
    if (ch == '\\' && quoted && i + 1 < s.size()) {
      out.push_back(s[i + 1]);
      ++i;
    } else if (ch == '"') {
      quoted = !quoted;
    }
    ++i;
  }
  return out;
}

// Unquotes a possibly quoted symbol token.
inline std::string unquote(const std::string& tok, int line_no) {
  if (tok.empty() || tok.front() != '"') return tok;
  if (tok.size() < 2 || tok.back() != '"')
    throw ParseError("line " + std::to_string(line_no) + ": unterminated quote in " + tok, 0);
  std::string out;
  for (std::size_t i = 1; i + 1 < tok.size(); ++i) {
    if (tok[i] == '\\' && i + 2 < tok.size()) ++i;
    out.push_back(tok[i]);
  }
  return out;
}

// Position of the first occurrence of ch at parenthesis depth 0 and
// outside quotes; npos when absent.
inline std::size_t find_top(const std::string& s, char ch) {
  int depth = 0;
  bool quoted = false;
  for (std::size_t i = 0; i < s.size(); ++i) {
    char c = s[i];
    if (c == '\\' && quoted) {
      ++i;
      continue;
    }
    if (c == '"') quoted = !quoted;
    if (quoted) continue;
    if (c == '(') ++depth;
    if (c == ')') --depth;
    if (c == ch && depth == 0) return i;
  }
  return std::string::npos;
}

// One rhs argument `NT[instr]`.
inline std::pair<std::string, std::string> parse_rule_arg(const std::string& text, int line_no) {
  std::string s = strip(text);
  std::size_t open = find_top(s, '[');
  if (open == std::string::npos || s.back() != ']')
    throw ParseError(
        "line " + std::to_string(line_no) + ": expected nonterminal[instruction], got " + s, 0);
  std::string nt = strip(s.substr(0, open));
  std::string instr = strip(s.substr(open + 1, s.size() - open - 2));
  if (nt.empty() || instr.empty())
    throw ParseError("line " + std::to_string(line_no) + ": empty name in " + s, 0);
  return {nt, instr};
}

}  // namespace detail

inline Wrtg parse_wrtg(const std::string& text) {
  Wrtg g;
  bool saw_header = false, saw_mm = false, saw_storage = false, saw_alphabet = false;
  bool saw_nts = false, saw_initial = false;
  std::istringstream in(text);
  std::string raw;
  int line_no = 0;
  auto fail = [&](const std::string& msg) -> void {
    throw ParseError("line " + std::to_string(line_no) + ": " + msg, 0);
  };
  while (std::getline(in, raw)) {
    ++line_no;
    std::string line = detail::strip(detail::strip_comment(raw));
    if (line.empty()) continue;
    if (!saw_header) {
      if (line != "wrtg") fail("expected header line 'wrtg'");
      saw_header = true;
      continue;
    }
    std::size_t colon = line.find(':');
    if (colon == std::string::npos) fail("expected 'key: value'");
    std::string key = detail::strip(line.substr(0, colon));
    std::string body = detail::strip(line.substr(colon + 1));
    if (key == "mmonoid") {
      auto mm = MMonoid::by_name(body);
      if (!mm) fail("unknown weight structure " + body);
      g.mm = *mm;
      saw_mm = true;
    } else if (key == "storage") {
      g.storage = Storage::parse(body);
      saw_storage = true;
    } else if (key == "alphabet") {
      std::size_t i = 0;
      while (true) {
        std::string tok = detail::next_token(body, i);
        if (tok.empty()) break;
        std::size_t slash = tok.rfind('/');
        if (slash == std::string::npos) fail("alphabet entry " + tok + " needs /rank");
        std::string sym = detail::unquote(tok.substr(0, slash), line_no);
        std::string rk = tok.substr(slash + 1);
        if (rk.empty() || rk.find_first_not_of("0123456789") != std::string::npos)
          fail("bad rank in alphabet entry " + tok);
        try {
          g.sigma.add(sym, std::stoi(rk));
        } catch (const std::invalid_argument& e) {
          fail(e.what());
        }
      }
      saw_alphabet = true;
    } else if (key == "nonterminals") {
      std::istringstream words(body);
      std::string w;
      while (words >> w) g.nonterminals.push_back(w);
      saw_nts = true;
    } else if (key == "initial") {
      std::istringstream words(body);
      std::string w;
      while (words >> w) g.initial.push_back(w);
      saw_initial = true;
    } else if (key.rfind("rule ", 0) == 0) {
      Rule r;
      r.id = detail::strip(key.substr(5));
      if (r.id.empty()) fail("rule needs an id");
      std::size_t arrow = body.find("->");
      if (arrow == std::string::npos) fail("rule needs '->'");
      std::string lhs = detail::strip(body.substr(0, arrow));
      std::string rest = detail::strip(body.substr(arrow + 2));
      std::size_t at = detail::find_top(rest, '@');
      if (at == std::string::npos) fail("rule needs '@ weight'");
      std::string rhs = detail::strip(rest.substr(0, at));
      std::string weight = detail::strip(rest.substr(at + 1));

      std::size_t open = detail::find_top(lhs, '[');
      if (open == std::string::npos || lhs.back() != ']')
        fail("left-hand side must be nonterminal[predicate]");
      r.lhs = detail::strip(lhs.substr(0, open));
      r.pred = detail::strip(lhs.substr(open + 1, lhs.size() - open - 2));
      if (r.lhs.empty() || r.pred.empty()) fail("empty nonterminal or predicate");

      if (rhs.empty()) fail("empty right-hand side");
      if (rhs.front() != '"' && detail::find_top(rhs, '[') != std::string::npos) {
        // Chain rule: nonterminal[instruction].
        r.is_chain = true;
        auto [nt, instr] = detail::parse_rule_arg(rhs, line_no);
        r.chain_to = nt;
        r.chain_instr = instr;
      } else {
        std::string term;
        std::size_t i = 0;
        if (rhs.front() == '"') {
          while (i < rhs.size()) {
            if (rhs[i] == '\\' && i + 1 < rhs.size())
              i += 2;
            else if (rhs[i] == '"' && i > 0)
              break;
            else
              ++i;
          }
          if (i >= rhs.size()) fail("unterminated quote in terminal");
          term = detail::unquote(rhs.substr(0, i + 1), line_no);
          i = i + 1;
        } else {
          while (i < rhs.size() && rhs[i] != '(') ++i;
          term = detail::strip(rhs.substr(0, i));
        }
        r.term = term;
        std::string tail = detail::strip(rhs.substr(i));
        if (!tail.empty()) {
          if (tail.front() != '(' || tail.back() != ')') fail("malformed argument list");
          std::string inner = tail.substr(1, tail.size() - 2);
          if (detail::strip(inner).empty()) fail("empty argument list");
          for (const std::string& piece : detail::split_top(inner, ','))
            r.args.push_back(detail::parse_rule_arg(piece, line_no));
        }
      }

      auto op = parse_op(weight);
      if (!op) fail("bad weight " + weight);
      r.weight = *op;
      g.rules.push_back(std::move(r));
    } else {
      fail("unknown section " + key);
    }
  }
  if (!saw_header) throw ParseError("missing header line 'wrtg'", 0);
  if (!saw_mm) throw ParseError("missing mmonoid line", 0);
  if (!saw_storage) throw ParseError("missing storage line", 0);
  if (!saw_alphabet) throw ParseError("missing alphabet line", 0);
  if (!saw_nts) throw ParseError("missing nonterminals line", 0);
  if (!saw_initial) throw ParseError("missing initial line", 0);
  if (g.rules.empty()) throw ParseError("missing rule lines", 0);
  return g;
}

inline std::string serialize_rule(const Rule& r) {
  std::ostringstream out;
  out << "rule " << r.id << ": " << r.lhs << '[' << r.pred << "] -> ";
  if (r.is_chain) {
    out << r.chain_to << '[' << r.chain_instr << ']';
  } else {
    out << quote_label(r.term);
    if (!r.args.empty()) {
      out << '(';
      for (std::size_t i = 0; i < r.args.size(); ++i) {
        if (i) out << ',';
        out << r.args[i].first << '[' << r.args[i].second << ']';
      }
      out << ')';
    }
  }
  out << " @ " << r.weight.str();
  return out.str();
}

inline std::string serialize_wrtg(const Wrtg& g) {
  std::ostringstream out;
  out << "wrtg\n";
  out << "mmonoid: " << g.mm.name() << '\n';
  out << "storage: " << g.storage.name() << '\n';
  out << "alphabet:";
  for (const auto& [sym, rank] : g.sigma.symbols())
    out << ' ' << quote_label(sym) << '/' << rank;
  out << '\n';
  out << "nonterminals:";
  for (const auto& n : g.nonterminals) out << ' ' << n;
  out << '\n';
  out << "initial:";
  for (const auto& z : g.initial) out << ' ' << z;
  out << '\n';
  for (const Rule& r : g.rules) out << serialize_rule(r) << '\n';
  return out.str();
}

inline Wrtg load_wrtg(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_wrtg(buf.str());
}

inline void save_wrtg(const Wrtg& g, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << serialize_wrtg(g);
}

}  // namespace wts
