#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "stv/compiler.hpp"
#include "stv/effects.hpp"
#include "stv/error.hpp"
#include "stv/history.hpp"
#include "stv/semantics.hpp"
#include "stv/syntax.hpp"
#include "stv/testgen.hpp"

namespace stv {

// Observables some source program in some source context can emit.
inline Alphabet source_alphabet() {
  Alphabet out;
  for (const char* name : {"print", "display", "send"}) {
    auto op = lookup_primitive(name);
    if (op && op->language == Language::Source && op->observable) out.insert(*op->observable);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Back-translation of target contexts

struct BackTranslationFailure {
  ExprPtr node;                      // offending target construct
  std::string reason;
  std::optional<std::string> action; // observable of the offending node, if any
};

using BackTranslation = std::variant<Context, BackTranslationFailure>;

namespace detail {

inline void collect_names(const ExprPtr& e, std::set<std::string>& out) {
  if (auto v = e->as<node::Var>()) out.insert(v->name);
  else if (auto l = e->as<node::Lam>()) out.insert(l->param);
  else if (auto l = e->as<node::Let>()) out.insert(l->name);
  else if (auto p = e->as<node::Prim>()) out.insert(p->op);
  for_each_child(*e, [&](const ExprPtr& c) { collect_names(c, out); });
}

class BackTranslator {
public:
  explicit BackTranslator(const ExprPtr& root) { collect_names(root, taken_); }

  ExprPtr go(const ExprPtr& e) {
    return std::visit([&](const auto& n) { return step(e, n); }, e->node);
  }

private:
  struct Failed {
    BackTranslationFailure failure;
  };

  std::set<std::string> taken_;
  std::vector<std::pair<std::string, std::string>> renamed_; // syscall -> source name, innermost last

public:
  BackTranslation run(const ExprPtr& root) {
    try {
      return Context{Language::Source, go(root)};
    } catch (Failed& f) {
      return std::move(f.failure);
    }
  }

private:
  std::optional<std::string> source_name(const std::string& syscall) const {
    for (auto it = renamed_.rbegin(); it != renamed_.rend(); ++it)
      if (it->first == syscall) return it->second;
    return std::nullopt;
  }

  std::string fresh_for(const std::string& syscall) {
    std::string base = syscall.substr(3) + "_impl";
    std::string name = base;
    for (std::size_t k = 1; taken_.count(name) || lookup_primitive(name); ++k) name = base + std::to_string(k);
    taken_.insert(name);
    return name;
  }

  // Binder name in the source image; syscall binders get a fresh name in scope
  // of `body`.
  template <class F> ExprPtr with_binder(const std::string& name, F&& body) {
    if (!is_syscall_name(name)) return body(name);
    renamed_.emplace_back(name, fresh_for(name));
    std::string src = renamed_.back().second;
    ExprPtr out = body(src);
    renamed_.pop_back();
    return out;
  }

  [[noreturn]] static void fail(const ExprPtr& e, std::string reason, std::optional<std::string> action = {}) {
    throw Failed{BackTranslationFailure{e, std::move(reason), std::move(action)}};
  }

  ExprPtr step(const ExprPtr& e, const node::Int&) { return e; }
  ExprPtr step(const ExprPtr& e, const node::Hole&) { return e; }

  ExprPtr step(const ExprPtr& e, const node::Var& n) {
    if (!is_syscall_name(n.name)) return e;
    if (auto s = source_name(n.name)) return ast::var(*s);
    fail(e, "syscall '" + n.name + "' is not bound by the context");
  }

  ExprPtr step(const ExprPtr&, const node::Lam& n) {
    return with_binder(n.param, [&](const std::string& x) { return ast::lam(x, go(n.body)); });
  }

  ExprPtr step(const ExprPtr&, const node::App& n) { return ast::app(go(n.fn), go(n.arg)); }

  ExprPtr step(const ExprPtr&, const node::If& n) {
    ExprPtr l = go(n.lhs);
    ExprPtr r = go(n.rhs);
    ExprPtr t = go(n.then_branch);
    return ast::if_(n.op, l, r, t, go(n.else_branch));
  }

  ExprPtr step(const ExprPtr&, const node::Seq& n) {
    ExprPtr a = go(n.first);
    return ast::seq(a, go(n.second));
  }

  ExprPtr step(const ExprPtr&, const node::Let& n) {
    ExprPtr bound = go(n.bound);
    return with_binder(n.name, [&](const std::string& x) { return ast::let(x, bound, go(n.body)); });
  }

  ExprPtr step(const ExprPtr& e, const node::Prim& n) {
    auto op = lookup_primitive(n.op);
    if (!op) fail(e, "unknown primitive '" + n.op + "'");
    if (op->syscall) {
      auto s = source_name(n.op);
      if (!s) fail(e, "syscall '" + n.op + "' is not bound by the context");
      return ast::app(ast::var(*s), go(n.arg));
    }
    if (op->language == Language::Source) return ast::prim(n.op, go(n.arg));
    // A target primitive maps back to the source primitive with the same observable.
    for (const char* candidate : {"print"}) {
      auto src = lookup_primitive(candidate);
      if (src->observable == op->observable) return ast::prim(candidate, go(n.arg));
    }
    fail(e, "'" + n.op + "' has no source counterpart", op->observable);
  }
};

} // namespace detail

// Syntactic source image of a target context, or the construct that has none.
inline BackTranslation back_translate(const Context& ctx) {
  if (ctx.language != Language::Target) throw LanguageError("back_translate expects a target context");
  return detail::BackTranslator(ctx.body).run(ctx.body);
}

// ---------------------------------------------------------------------------
// Verdicts

enum class RejectKind { AlphabetEscape, InclusionFailure, BackTranslationFailure };

inline std::string_view to_string(RejectKind k) {
  switch (k) {
  case RejectKind::AlphabetEscape: return "alphabet_escape";
  case RejectKind::InclusionFailure: return "inclusion_failure";
  case RejectKind::BackTranslationFailure: return "back_translation_failure";
  }
  return "?";
}

struct RejectReason {
  RejectKind kind;
  std::string detail;
  Alphabet escaped; // AlphabetEscape only: actions no source context can emit
};

struct Accept {
  Context source_context;
  Hist h_target;
  Hist h_source;
};

struct Reject {
  Word witness; // in pref(h_target)
  RejectReason reason;
  Hist h_target;
};

using Verdict = std::variant<Accept, Reject>;

inline bool accepted(const Verdict& v) { return std::holds_alternative<Accept>(v); }

namespace detail {
inline Alphabet alphabet_of(const Hist& a, const Hist& b) {
  Alphabet sigma = default_alphabet();
  collect_actions(a, sigma);
  collect_actions(b, sigma);
  return sigma;
}
} // namespace detail

// Decides whether every trace prefix of the compiled program in `ctx` is
// also a trace prefix of the source program in the back-translated context.
// Rejections may be false negatives: both histories over-approximate.
inline Verdict validate(const Program& p, const std::vector<std::string>& passes, const Context& ctx) {
  if (p.language != Language::Source) throw LanguageError("validate expects a source program");
  if (ctx.language != Language::Target) throw LanguageError("validate expects a target context");

  CompilationUnit unit = compile(p, passes);
  Hist h_target = infer_in_hole(ctx, unit.target);
  TraceAutomaton target_prefixes = prefix_close(to_automaton(h_target, detail::alphabet_of(h_target, hist::eps())));

  Alphabet foreign;
  Alphabet src = source_alphabet();
  for (const auto& a : actions(h_target))
    if (!src.count(a)) foreign.insert(a);
  std::optional<Word> escape;
  if (!foreign.empty()) escape = shortest_word_containing(target_prefixes, foreign);

  BackTranslation candidate = back_translate(ctx);
  if (auto failure = std::get_if<BackTranslationFailure>(&candidate)) {
    if (escape) {
      Alphabet used;
      for (const auto& a : *escape)
        if (foreign.count(a)) used.insert(a);
      std::string names;
      for (const auto& a : used) names += (names.empty() ? "" : ", ") + a;
      return Reject{*escape,
                    RejectReason{RejectKind::AlphabetEscape,
                                 "no source context can perform " + names + " (context: " + pretty(failure->node) + ")",
                                 used},
                    h_target};
    }
    Word witness;
    if (failure->action) {
      if (auto w = shortest_word_containing(target_prefixes, {*failure->action})) witness = *w;
    }
    return Reject{witness,
                  RejectReason{RejectKind::BackTranslationFailure, failure->reason + " at '" + pretty(failure->node) + "'", {}},
                  h_target};
  }

  const Context& source_context = std::get<Context>(candidate);
  Hist h_source = infer_in_hole(source_context, p);
  Alphabet sigma = detail::alphabet_of(h_target, h_source);
  auto inclusion = includes(prefix_close(to_automaton(h_source, sigma)), prefix_close(to_automaton(h_target, sigma)));
  if (inclusion.holds) return Accept{source_context, h_target, h_source};
  return Reject{*inclusion.counterexample,
                RejectReason{RejectKind::InclusionFailure,
                             "trace prefix has no counterpart in the source context " + pretty(source_context), {}},
                h_target};
}

// ---------------------------------------------------------------------------
// Soundness fuzzing

struct FuzzViolation {
  std::size_t index;
  std::string term;
  std::string detail;
};

struct FuzzReport {
  std::size_t cases = 0;
  std::size_t terminated = 0;
  std::size_t diverged = 0;
  std::uint64_t seed = 0;
  std::vector<FuzzViolation> violations;
};

// Checks one closed term: its erased dynamic trace and every prefix of it
// must be accepted by the inferred history (resp. its prefix closure).
// Returns a description of the violation, if any.
inline std::optional<std::string> check_soundness(const Program& plugged, std::size_t fuel = default_fuel,
                                                  std::optional<bool>* terminated = nullptr) {
  Typing typing;
  try {
    typing = infer(plugged);
  } catch (const TypeError& e) {
    return std::string("inference failed: ") + e.what();
  }
  RunResult result;
  try {
    result = run(plugged, fuel);
  } catch (const RuntimeError& e) {
    return std::string("well-typed term went wrong: ") + e.what();
  }
  if (terminated) *terminated = !result.diverged();
  Word trace = erase_payloads(result.trace);
  Alphabet sigma = default_alphabet();
  collect_actions(typing.effect, sigma);
  sigma.insert(trace.begin(), trace.end());
  TraceAutomaton traces = to_automaton(typing.effect, sigma);
  TraceAutomaton prefixes = prefix_close(traces);
  if (!result.diverged() && !member(trace, traces))
    return "trace [" + [&] {
      std::string s;
      for (const auto& a : trace) s += (s.empty() ? "" : ", ") + a;
      return s;
    }() + "] not in " + to_string(typing.effect);
  for (const auto& prefix : trace_prefixes(trace))
    if (!member(prefix, prefixes)) return "prefix of length " + std::to_string(prefix.size()) + " not in pref(" +
                                          to_string(typing.effect) + ")";
  return std::nullopt;
}

// Seed of the i-th case, so that any single case can be replayed.
inline std::uint64_t fuzz_case_seed(std::uint64_t seed, std::size_t i) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (i + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Generated source program, compiled and plugged into a generated target
// context, for case `i`.
inline Program fuzz_case(std::uint64_t seed, std::size_t i, std::size_t max_depth = 4) {
  GenConfig cfg;
  cfg.seed = fuzz_case_seed(seed, i);
  cfg.max_depth = max_depth;
  GenType shape = gen_type(cfg);
  Program source{Language::Source, gen_expr(cfg, Language::Source, shape)};
  Program target = translate(source);
  if (i % 3 == 2) target = factor_common_prefix(target);
  return plug(gen_context(cfg, Language::Target, shape), target);
}

inline FuzzReport soundness_fuzz(std::size_t n, std::uint64_t seed, std::size_t max_depth = 4) {
  if (n == 0) throw UsageError("soundness_fuzz needs at least one case");
  FuzzReport report;
  report.seed = seed;
  for (std::size_t i = 0; i < n; ++i) {
    Program term = fuzz_case(seed, i, max_depth);
    std::optional<bool> terminated; // unset when the term never ran
    ++report.cases;
    if (auto v = check_soundness(term, default_fuel, &terminated))
      report.violations.push_back({i, pretty(term), *v});
    if (terminated) ++(*terminated ? report.terminated : report.diverged);
  }
  return report;
}

} // namespace stv
