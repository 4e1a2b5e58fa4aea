#pragma once

// Sectioned file format for separated and decomposed grammars. A file
// starts with `wts-decomposition` and carries any of the sections
// [delta] (behaviour alphabet), [theta] (shape alphabet), [grammar]
// (a verbatim grammar), [mapping] (weight-and-terminal images). The
// storage separation writes delta+grammar, the weight separation
// theta+grammar+mapping, the full decomposition all four.

#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "wts/grammar_io.hpp"
#include "wts/transform.hpp"

namespace wts {

struct SeparationFile {
  std::optional<BehaviourAlphabet> delta;
  std::optional<RankedAlphabet> theta;
  std::optional<Wrtg> grammar;
  std::optional<AlphabeticMapping> mapping;
};

namespace detail {

inline void write_alphabet_inline(std::ostream& out, const RankedAlphabet& a) {
  out << "alphabet:";
  for (const auto& [sym, rank] : a.symbols()) out << ' ' << quote_label(sym) << '/' << rank;
  out << '\n';
}

// `SYM/rank SYM/rank ...` with quote-aware tokens.
inline RankedAlphabet parse_alphabet_body(const std::string& body, int line_no) {
  RankedAlphabet out;
  std::size_t i = 0;
  while (true) {
    std::string tok = next_token(body, i);
    if (tok.empty()) break;
    std::size_t slash = tok.rfind('/');
    if (slash == std::string::npos || slash + 1 == tok.size())
      throw ParseError("line " + std::to_string(line_no) + ": expected symbol/rank, got " + tok,
                       0);
    std::string sym = unquote(tok.substr(0, slash), line_no);
    int rank = 0;
    try {
      std::size_t used = 0;
      rank = std::stoi(tok.substr(slash + 1), &used);
      if (used != tok.size() - slash - 1) throw std::invalid_argument("");
    } catch (const std::exception&) {
      throw ParseError("line " + std::to_string(line_no) + ": bad rank in " + tok, 0);
    }
    out.add(sym, rank);
  }
  return out;
}

inline std::vector<std::string> parse_name_list(const std::string& body) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (true) {
    std::string tok = next_token(body, i);
    if (tok.empty()) break;
    out.push_back(tok);
  }
  return out;
}

// Splits `KEY: BODY`; empty key when the line has no top-level colon.
inline std::pair<std::string, std::string> split_kv(const std::string& line) {
  std::size_t colon = find_top(line, ':');
  if (colon == std::string::npos) return {"", line};
  return {strip(line.substr(0, colon)), strip(line.substr(colon + 1))};
}

// Position of ` -> ` at depth 0 outside quotes; npos when absent.
inline std::size_t find_arrow(const std::string& s) {
  int depth = 0;
  bool quoted = false;
  for (std::size_t i = 0; i + 1 < s.size(); ++i) {
    char c = s[i];
    if (c == '\\' && quoted) {
      ++i;
      continue;
    }
    if (c == '"') quoted = !quoted;
    if (quoted) continue;
    if (c == '(') ++depth;
    if (c == ')') --depth;
    if (depth == 0 && c == '-' && s[i + 1] == '>') return i;
  }
  return std::string::npos;
}

}  // namespace detail

inline std::string serialize_separation(const SeparationFile& f) {
  std::ostringstream out;
  out << "wts-decomposition\n";
  if (f.delta) {
    out << "[delta]\n";
    out << "storage: " << f.delta->storage().name() << '\n';
    out << "preds:";
    for (const auto& p : f.delta->preds()) out << ' ' << p;
    out << '\n';
    out << "instrs:";
    for (const auto& i : f.delta->instrs()) out << ' ' << i;
    out << '\n';
    out << "maxrank: " << f.delta->max_rank() << '\n';
  }
  if (f.theta) {
    out << "[theta]\n";
    detail::write_alphabet_inline(out, *f.theta);
  }
  if (f.grammar) {
    out << "[grammar]\n";
    out << serialize_wrtg(*f.grammar);
  }
  if (f.mapping) {
    out << "[mapping]\n";
    out << "mmonoid: " << f.mapping->mm.name() << '\n';
    detail::write_alphabet_inline(out, f.mapping->sigma);
    for (const auto& [sym, e] : f.mapping->entries) {
      out << "map " << quote_label(sym) << ": " << e.op.str();
      if (e.term) out << " -> " << quote_label(*e.term);
      out << '\n';
    }
  }
  return out.str();
}

inline std::string serialize_separation(const StorageSeparation& s) {
  SeparationFile f;
  f.delta = s.delta;
  f.grammar = s.grammar;
  return serialize_separation(f);
}

inline std::string serialize_separation(const WeightSeparation& w) {
  SeparationFile f;
  f.theta = w.theta;
  f.grammar = w.H;
  f.mapping = w.h;
  return serialize_separation(f);
}

inline std::string serialize_separation(const Decomposition& d) {
  SeparationFile f;
  f.delta = d.delta;
  f.theta = d.theta;
  f.grammar = d.H;
  f.mapping = d.h;
  return serialize_separation(f);
}

inline SeparationFile parse_separation(const std::string& text) {
  std::istringstream in(text);
  std::string raw;
  int line_no = 0;

  // Raw logical lines with comments stripped; blank lines dropped
  // outside the grammar section, kept verbatim inside it.
  bool saw_header = false;
  std::string section;
  SeparationFile out;

  std::optional<Storage> d_storage;
  std::vector<std::string> d_preds, d_instrs;
  std::optional<int> d_maxrank;
  std::ostringstream grammar_text;

  std::optional<MMonoid> m_mm;
  std::optional<RankedAlphabet> m_sigma;
  std::map<std::string, AlphabeticMapping::Entry> m_entries;

  auto fail = [&](const std::string& msg) {
    throw ParseError("line " + std::to_string(line_no) + ": " + msg, 0);
  };

  while (std::getline(in, raw)) {
    ++line_no;
    if (section == "grammar" && !(raw.size() > 1 && raw[0] == '[')) {
      grammar_text << raw << '\n';
      continue;
    }
    std::string line = detail::strip(detail::strip_comment(raw));
    if (line.empty()) continue;
    if (!saw_header) {
      if (line != "wts-decomposition") fail("expected wts-decomposition header");
      saw_header = true;
      continue;
    }
    if (line.front() == '[') {
      if (line == "[delta]" || line == "[theta]" || line == "[grammar]" || line == "[mapping]")
        section = line.substr(1, line.size() - 2);
      else
        fail("unknown section " + line);
      continue;
    }
    auto [key, body] = detail::split_kv(line);
    if (section == "delta") {
      if (key == "storage")
        d_storage = Storage::parse(body);
      else if (key == "preds")
        d_preds = detail::parse_name_list(body);
      else if (key == "instrs")
        d_instrs = detail::parse_name_list(body);
      else if (key == "maxrank") {
        try {
          d_maxrank = std::stoi(body);
        } catch (const std::exception&) {
          fail("bad maxrank " + body);
        }
      } else
        fail("unknown delta entry " + line);
    } else if (section == "theta") {
      if (key == "alphabet")
        out.theta = detail::parse_alphabet_body(body, line_no);
      else
        fail("unknown theta entry " + line);
    } else if (section == "mapping") {
      if (key == "mmonoid") {
        m_mm = MMonoid::by_name(body);
        if (!m_mm) fail("unknown M-monoid " + body);
      } else if (key == "alphabet") {
        m_sigma = detail::parse_alphabet_body(body, line_no);
      } else if (key.rfind("map ", 0) == 0) {
        std::string sym = detail::unquote(detail::strip(key.substr(4)), line_no);
        if (sym.empty()) fail("empty mapping symbol");
        std::size_t arrow = detail::find_arrow(body);
        AlphabeticMapping::Entry e;
        std::string op_text = detail::strip(arrow == std::string::npos ? body : body.substr(0, arrow));
        auto op = parse_op(op_text);
        if (!op) fail("bad operation " + op_text);
        e.op = *op;
        if (arrow != std::string::npos) {
          std::string term = detail::strip(body.substr(arrow + 2));
          std::size_t i = 0;
          e.term = detail::unquote(detail::next_token(term, i), line_no);
          if (!detail::next_token(term, i).empty()) fail("trailing text after terminal");
        }
        if (!m_entries.emplace(sym, std::move(e)).second) fail("duplicate mapping for " + sym);
      } else {
        fail("unknown mapping entry " + line);
      }
    } else {
      fail("content outside any section: " + line);
    }
  }
  if (!saw_header) throw ParseError("expected wts-decomposition header", 0);

  if (d_storage || !d_preds.empty() || !d_instrs.empty() || d_maxrank) {
    if (!d_storage || d_preds.empty() || d_instrs.empty() || !d_maxrank)
      throw ParseError("[delta] needs storage, preds, instrs and maxrank", 0);
    out.delta = BehaviourAlphabet::corresponding(*d_storage, d_preds, d_instrs, *d_maxrank);
  }
  if (!grammar_text.str().empty()) out.grammar = parse_wrtg(grammar_text.str());
  if (m_mm || m_sigma || !m_entries.empty()) {
    if (!m_mm || !m_sigma) throw ParseError("[mapping] needs mmonoid and alphabet", 0);
    if (!out.theta) throw ParseError("[mapping] needs a [theta] section", 0);
    AlphabeticMapping h;
    h.mm = *m_mm;
    h.theta = *out.theta;
    h.sigma = *m_sigma;
    h.entries = std::move(m_entries);
    if (auto problems = validate_mapping(h); !problems.empty())
      throw ParseError(problems.front(), 0);
    out.mapping = std::move(h);
  }
  return out;
}

inline SeparationFile load_separation(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_separation(buf.str());
}

inline StorageSeparation as_storage_separation(const SeparationFile& f) {
  if (!f.delta || !f.grammar)
    throw std::invalid_argument("storage separation needs [delta] and [grammar] sections");
  return {*f.delta, *f.grammar};
}

inline WeightSeparation as_weight_separation(const SeparationFile& f) {
  if (!f.theta || !f.grammar || !f.mapping)
    throw std::invalid_argument(
        "weight separation needs [theta], [grammar] and [mapping] sections");
  return {*f.theta, *f.grammar, *f.mapping};
}

inline Decomposition as_decomposition(const SeparationFile& f) {
  if (!f.delta || !f.theta || !f.grammar || !f.mapping)
    throw std::invalid_argument(
        "decomposition needs [delta], [theta], [grammar] and [mapping] sections");
  return {*f.delta, *f.theta, *f.grammar, *f.mapping};
}

// Reassembles a plain grammar from whichever separation the file holds.
inline Wrtg recompose_file(const SeparationFile& f, int unambiguity_bound = 5) {
  bool weights = f.theta && f.mapping;
  if (f.delta && weights) return recompose(as_decomposition(f), unambiguity_bound);
  if (f.delta && f.grammar) {
    StorageSeparation s = as_storage_separation(f);
    return fuse_storage(s.delta, s.grammar);
  }
  if (weights && f.grammar) {
    WeightSeparation w = as_weight_separation(f);
    return fuse_weights(w.theta, w.H, w.h, unambiguity_bound);
  }
  throw std::invalid_argument("file holds no recomposable section combination");
}

}  // namespace wts
