#pragma once

// Command-line driver: evaluation, transformations, derivation and
// behaviour enumeration, expression evaluation. Exit codes: 0 success,
// 1 malformed input or violated precondition, 2 exactness demanded via
// --require-exact but only an approximation is available.

#include <algorithm>
#include <atomic>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"

#include "wts/grammar_io.hpp"
#include "wts/logic.hpp"
#include "wts/transform.hpp"
#include "wts/transform_io.hpp"

namespace wts {

namespace cli_detail {

// Stdout by default, a file when -o was given.
struct Sink {
  std::ofstream file;
  std::ostream* os = &std::cout;

  explicit Sink(const std::string& path) {
    if (!path.empty()) {
      file.open(path);
      if (!file) throw std::runtime_error("cannot write " + path);
      os = &file;
    }
  }
  std::ostream& out() { return *os; }
};

inline std::string exactness(bool exact, int cap) {
  return exact ? "exact" : "approx(cap=" + std::to_string(cap) + ")";
}

struct Options {
  std::string grammar;
  std::string expr;
  std::string out;
  std::string kind;
  std::string storage_spec;
  std::vector<std::string> trees;
  std::vector<std::string> preds;
  std::vector<std::string> instrs;
  int chain_cap = 8;
  int segment_cap = 8;
  int size_bound = 6;
  int jobs = 1;
  bool require_exact = false;
  bool trim = false;
  bool no_trim = false;
};

inline int cmd_eval(const Options& o) {
  Wrtg g = load_wrtg(o.grammar);
  std::vector<Tree> trees;
  for (const std::string& t : o.trees) trees.push_back(parse_term(t, g.sigma));

  std::vector<EvalResult> results(trees.size());
  int jobs = std::max(1, o.jobs);
  if (jobs == 1 || trees.size() < 2) {
    for (std::size_t i = 0; i < trees.size(); ++i) results[i] = evaluate(g, trees[i], o.chain_cap);
  } else {
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
      for (std::size_t i = next.fetch_add(1); i < trees.size(); i = next.fetch_add(1))
        results[i] = evaluate(g, trees[i], o.chain_cap);
    };
    std::vector<std::thread> pool;
    for (int j = 0; j < std::min<int>(jobs, static_cast<int>(trees.size())); ++j)
      pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  Sink sink(o.out);
  bool all_exact = true;
  for (const EvalResult& r : results) {
    sink.out() << r.value.str() << ' ' << exactness(r.exact, o.chain_cap) << '\n';
    all_exact &= r.exact;
  }
  return o.require_exact && !all_exact ? 2 : 0;
}

inline int cmd_transform(const Options& o) {
  if (o.trim && o.no_trim) throw std::invalid_argument("--trim conflicts with --no-trim");
  Sink sink(o.out);

  if (o.kind == "separate-storage" || o.kind == "separate-weights" || o.kind == "decompose") {
    Wrtg g = load_wrtg(o.grammar);
    if (o.kind == "separate-storage")
      sink.out() << serialize_separation(separate_storage(g));
    else if (o.kind == "separate-weights")
      sink.out() << serialize_separation(separate_weights(g));
    else
      sink.out() << serialize_separation(decompose(g));
    return 0;
  }

  Wrtg result;
  if (o.kind == "recompose") {
    result = recompose_file(load_separation(o.grammar), o.size_bound);
  } else {
    Wrtg g = load_wrtg(o.grammar);
    if (o.kind == "one-initial") {
      result = one_initial(g);
    } else if (o.kind == "support") {
      result = support_grammar(g, !o.no_trim);
    } else if (o.kind == "chainfree") {
      result = eliminate_chain_rules(g);
    } else if (o.kind == "drop-finite-storage") {
      result = eliminate_finite_storage(g, o.size_bound);
    } else if (o.kind == "embed-storage") {
      if (o.storage_spec.empty())
        throw std::invalid_argument("embed-storage needs --storage with the target storage");
      result = embed_storage(g, Storage::parse(o.storage_spec));
    } else {
      throw std::invalid_argument("unknown transformation " + o.kind);
    }
  }
  if (o.trim && o.kind != "support") result = trim_useless(result);
  sink.out() << serialize_wrtg(result);
  return 0;
}

inline int cmd_derivations(const Options& o) {
  Wrtg g = load_wrtg(o.grammar);
  Tree xi = parse_term(o.trees.front(), g.sigma);
  DerivationResult r = derivations(g, xi, o.chain_cap);

  std::vector<std::string> lines;
  for (const Tree& d : r.trees) lines.push_back(render(d) + " @ " + weight_of(g, d).str());
  std::sort(lines.begin(), lines.end());

  Sink sink(o.out);
  for (const std::string& line : lines) sink.out() << line << '\n';
  sink.out() << "# " << lines.size() << ' ' << exactness(r.exact, o.chain_cap) << '\n';
  return o.require_exact && !r.exact ? 2 : 0;
}

inline int cmd_behaviours(const Options& o) {
  Wrtg g = load_wrtg(o.grammar);
  Tree xi = parse_term(o.trees.front(), g.sigma);
  // Defaults to the predicates and instructions the grammar uses; an
  // explicit smaller alphabet keeps the enumeration tractable.
  BehaviourAlphabet delta =
      o.preds.empty() && o.instrs.empty()
          ? delta_of(g)
          : BehaviourAlphabet::corresponding(
                g.storage, o.preds.empty() ? g.preds_used() : o.preds,
                o.instrs.empty() ? g.instrs_used() : o.instrs, g.sigma);
  BehaviourOptions opts;
  opts.segment_cap = o.segment_cap;

  std::vector<std::string> lines;
  for (const Tree& zeta : behaviours_on(xi, delta, opts)) lines.push_back(render(zeta));
  std::sort(lines.begin(), lines.end());
  bool exact = behaviours_cap_stable(xi, delta, opts);

  Sink sink(o.out);
  for (const std::string& line : lines) sink.out() << line << '\n';
  sink.out() << "# " << lines.size() << ' ' << exactness(exact, o.segment_cap) << '\n';
  return o.require_exact && !exact ? 2 : 0;
}

inline int cmd_logic_eval(const Options& o) {
  Wrtg g = load_wrtg(o.grammar);
  LogicFile lf = load_logic_file(o.expr);
  Tree xi = parse_term(o.trees.front(), g.sigma);

  Sink sink(o.out);
  if (lf.behaviour_sum) {
    BehaviourAlphabet delta =
        BehaviourAlphabet::corresponding(g.storage, lf.preds, lf.instrs, g.sigma);
    BehSumResult r = eval_behsum(g.mm, lf.expr, delta, xi, o.segment_cap);
    sink.out() << r.value.str() << ' ' << exactness(r.exact, o.segment_cap) << '\n';
    return o.require_exact && !r.exact ? 2 : 0;
  }
  Value v = eval_mexpr(g.mm, lf.expr, xi);
  sink.out() << v.str() << " exact\n";
  return 0;
}

}  // namespace cli_detail

inline int run_cli(int argc, const char* const* argv) {
  using cli_detail::Options;
  Options o;

  CLI::App app{"weighted tree grammars over storage types and M-monoids"};
  app.require_subcommand(1);

  auto add_grammar = [&](CLI::App* sub) {
    sub->add_option("-g,--grammar", o.grammar, "grammar file")->required();
  };
  auto add_out = [&](CLI::App* sub) {
    sub->add_option("-o,--out", o.out, "output file (default stdout)");
  };
  auto add_exact = [&](CLI::App* sub) {
    sub->add_flag("--require-exact", o.require_exact,
                  "exit with 2 when the result is an approximation");
  };

  CLI::App* eval = app.add_subcommand("eval", "evaluate the grammar on trees");
  add_grammar(eval);
  add_out(eval);
  add_exact(eval);
  eval->add_option("-t,--tree", o.trees, "tree term (repeatable)")->required();
  eval->add_option("--chain-cap", o.chain_cap, "chain applications per segment");
  eval->add_option("--jobs", o.jobs, "parallel evaluation threads for tree batches");

  CLI::App* transform = app.add_subcommand("transform", "rewrite the grammar");
  add_grammar(transform);
  add_out(transform);
  transform
      ->add_option("kind", o.kind, "transformation")
      ->required()
      ->check(CLI::IsMember({"one-initial", "support", "chainfree", "drop-finite-storage",
                             "embed-storage", "separate-storage", "separate-weights", "decompose",
                             "recompose"}));
  transform->add_flag("--trim", o.trim, "remove useless nonterminals from the output");
  transform->add_flag("--no-trim", o.no_trim, "keep useless nonterminals (support)");
  transform->add_option("--storage", o.storage_spec, "target storage for embed-storage");
  transform->add_option("--size-bound", o.size_bound,
                        "tree size bound for unambiguity checks during fusion");

  CLI::App* deriv = app.add_subcommand("derivations", "enumerate derivations for a tree");
  add_grammar(deriv);
  add_out(deriv);
  add_exact(deriv);
  deriv->add_option("-t,--tree", o.trees, "tree term")->required()->expected(1);
  deriv->add_option("--chain-cap", o.chain_cap, "chain applications per segment");

  CLI::App* beh = app.add_subcommand("behaviours", "enumerate behaviours on a tree");
  add_grammar(beh);
  add_out(beh);
  add_exact(beh);
  beh->add_option("-t,--tree", o.trees, "tree term")->required()->expected(1);
  beh->add_option("--segment-cap", o.segment_cap, "star segment length cap");
  beh->add_option("--preds", o.preds, "predicate subset (default: those the grammar uses)");
  beh->add_option("--instrs", o.instrs, "instruction subset (default: those the grammar uses)");

  CLI::App* logic = app.add_subcommand("logic-eval", "evaluate an expression file on a tree");
  add_grammar(logic);
  add_out(logic);
  add_exact(logic);
  logic->add_option("-e,--expr", o.expr, "expression file")->required();
  logic->add_option("-t,--tree", o.trees, "tree term")->required()->expected(1);
  logic->add_option("--segment-cap", o.segment_cap, "star segment length cap");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (eval->parsed()) return cli_detail::cmd_eval(o);
    if (transform->parsed()) return cli_detail::cmd_transform(o);
    if (deriv->parsed()) return cli_detail::cmd_derivations(o);
    if (beh->parsed()) return cli_detail::cmd_behaviours(o);
    if (logic->parsed()) return cli_detail::cmd_logic_eval(o);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}

}  // namespace wts
