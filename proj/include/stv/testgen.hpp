#pragma once

#include <cstdint>
#include <random>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "stv/error.hpp"
#include "stv/history.hpp"
#include "stv/syntax.hpp"

namespace stv {

struct GenConfig {
  std::uint64_t seed = 0;
  std::size_t max_depth = 4;
  Alphabet alphabet = default_alphabet();
  bool allow_send_in_context = true;
};

// Shapes of values the generators produce.
enum class GenType {
  Int,
  Fn,       // int -> int
  HigherFn, // (int -> int) -> int
};

namespace detail {

inline void check_config(const GenConfig& cfg) {
  if (cfg.max_depth < 1) throw UsageError("max_depth must be at least 1");
}

class TermGenerator {
public:
  TermGenerator(const GenConfig& cfg, Language lang) : cfg_(cfg), lang_(lang), rng_(cfg.seed) {}

  using Scope = std::vector<std::pair<std::string, GenType>>;

  std::size_t pick(std::size_t n) { return static_cast<std::size_t>(rng_() % n); }
  bool coin() { return pick(2) == 0; }

  ExprPtr literal() { return ast::lit(static_cast<std::int64_t>(pick(11)) - 5); }

  std::string fresh(const char* base) { return base + std::to_string(counter_++); }

  const std::string* var_of(const Scope& scope, GenType t) {
    std::vector<const std::string*> found;
    for (const auto& [name, type] : scope)
      if (type == t && !is_syscall_name(name)) found.push_back(&name);
    if (found.empty()) return nullptr;
    return found[pick(found.size())];
  }

  bool has_syscall(const Scope& scope) const {
    for (const auto& [name, type] : scope)
      if (name == "sc_print" && type == GenType::Fn) return true;
    return false;
  }

  // Observable primitives available in this language.
  std::vector<std::string> primitives(bool allow_send) const {
    if (lang_ == Language::Source) return {"print"};
    std::vector<std::string> out;
    if (cfg_.alphabet.count("display")) out.push_back("display");
    if (allow_send && cfg_.alphabet.count("send")) out.push_back("send");
    return out;
  }

  ExprPtr gen(GenType t, const Scope& scope, std::size_t d, bool allow_send) {
    switch (t) {
    case GenType::Int: return gen_int(scope, d, allow_send);
    case GenType::Fn: return gen_fn(scope, d, allow_send);
    case GenType::HigherFn: return gen_higher(scope, d, allow_send);
    }
    return literal();
  }

  ExprPtr gen_int(const Scope& scope, std::size_t d, bool allow_send) {
    if (d <= 1) {
      if (auto v = var_of(scope, GenType::Int); v && coin()) return ast::var(*v);
      return literal();
    }
    for (;;) {
      switch (pick(9)) {
      case 0:
        if (auto v = var_of(scope, GenType::Int); v && coin()) return ast::var(*v);
        return literal();
      case 1: {
        auto prims = primitives(allow_send);
        if (prims.empty()) continue;
        return ast::prim(prims[pick(prims.size())], gen_int(scope, d - 1, allow_send));
      }
      case 2:
        if (lang_ != Language::Target || !has_syscall(scope)) continue;
        return ast::prim("sc_print", gen_int(scope, d - 1, allow_send));
      case 3:
        return ast::seq(gen_int(scope, d - 1, allow_send), gen_int(scope, d - 1, allow_send));
      case 4: {
        GenType bt = (d >= 3 && coin()) ? GenType::Fn : GenType::Int;
        std::string x = fresh("v");
        ExprPtr bound = gen(bt, scope, d - 1, allow_send);
        Scope inner = scope;
        inner.emplace_back(x, bt);
        return ast::let(x, bound, gen_int(inner, d - 1, allow_send));
      }
      case 5: {
        static constexpr CmpOp ops[] = {CmpOp::Ge, CmpOp::Le, CmpOp::Eq, CmpOp::Lt, CmpOp::Gt};
        CmpOp op = ops[pick(5)];
        ExprPtr l = gen_int(scope, d - 1, allow_send);
        ExprPtr r = gen_int(scope, d - 1, allow_send);
        ExprPtr a = gen_int(scope, d - 1, allow_send);
        ExprPtr b = gen_int(scope, d - 1, allow_send);
        return ast::if_(op, l, r, a, b);
      }
      case 6:
      case 7: {
        if (d < 3 && !var_of(scope, GenType::Fn)) continue;
        ExprPtr f = gen_fn(scope, d - 1, allow_send);
        return ast::app(f, gen_int(scope, d - 1, allow_send));
      }
      default: {
        if (d < 4) continue;
        // Higher-order functions are only ever applied where they are built,
        // so their parameter's latent effect is fixed by this single use.
        ExprPtr f = gen_higher(scope, d - 1, allow_send);
        return ast::app(f, gen_fn(scope, d - 1, allow_send));
      }
      }
    }
  }

  // Depth 2 at least unless a function variable is in scope.
  ExprPtr gen_fn(const Scope& scope, std::size_t d, bool allow_send) {
    if (auto v = var_of(scope, GenType::Fn); v && (d <= 1 || pick(3) == 0)) return ast::var(*v);
    std::string x = fresh("x");
    if (d <= 2) return ast::lam(x, coin() ? ast::var(x) : literal());
    Scope inner = scope;
    inner.emplace_back(x, GenType::Int);
    return ast::lam(x, gen_int(inner, d - 1, allow_send));
  }

  ExprPtr gen_higher(const Scope& scope, std::size_t d, bool allow_send) {
    std::string f = fresh("f");
    Scope inner = scope;
    inner.emplace_back(f, GenType::Fn);
    if (d <= 2) return ast::lam(f, ast::app(ast::var(f), literal()));
    return ast::lam(f, gen_int(inner, d - 1, allow_send));
  }

  // An Int-typed expression containing `use` exactly once, in evaluation position.
  ExprPtr wrap_hole(const ExprPtr& use, const Scope& scope, std::size_t d, bool allow_send) {
    if (d <= 1) return use;
    switch (pick(7)) {
    case 0: return use;
    case 1: return ast::seq(use, gen_int(scope, d - 1, allow_send));
    case 2: return ast::seq(gen_int(scope, d - 1, allow_send), wrap_hole(use, scope, d - 1, allow_send));
    case 3: {
      std::string y = fresh("r");
      Scope inner = scope;
      inner.emplace_back(y, GenType::Int);
      return ast::let(y, wrap_hole(use, scope, d - 1, allow_send), gen_int(inner, d - 1, allow_send));
    }
    case 4:
      return ast::if_(CmpOp::Ge, wrap_hole(use, scope, d - 1, allow_send), literal(),
                      gen_int(scope, d - 1, allow_send), gen_int(scope, d - 1, allow_send));
    case 5: {
      auto prims = primitives(allow_send);
      if (prims.empty()) return use;
      return ast::prim(prims[pick(prims.size())], wrap_hole(use, scope, d - 1, allow_send));
    }
    default:
      if (d < 3) return use;
      return ast::app(gen_fn(scope, d - 1, allow_send), wrap_hole(use, scope, d - 1, allow_send));
    }
  }

private:
  GenConfig cfg_;
  Language lang_;
  std::mt19937_64 rng_;
  std::size_t counter_ = 0;
};

} // namespace detail

// Closed, well-typed program of the requested shape with depth ≤ max_depth.
inline ExprPtr gen_expr(const GenConfig& cfg, Language lang, GenType type) {
  detail::check_config(cfg);
  detail::TermGenerator g(cfg, lang);
  if (type == GenType::HigherFn && cfg.max_depth < 3) type = GenType::Fn;
  if (type == GenType::Fn && cfg.max_depth < 2) type = GenType::Int;
  return g.gen(type, {}, cfg.max_depth, lang == Language::Target);
}

inline GenType gen_type(const GenConfig& cfg) {
  std::mt19937_64 rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
  std::size_t choices = cfg.max_depth >= 3 ? 3 : cfg.max_depth == 2 ? 2 : 1;
  return static_cast<GenType>(rng() % choices);
}

// Closed, well-typed program; identical configurations give identical ASTs.
inline Program gen_program(const GenConfig& cfg, Language lang) {
  return Program{lang, gen_expr(cfg, lang, gen_type(cfg))};
}

// A context accepting programs of shape `hole_type`:
//   target: (fun i -> let sc_print = fun x -> ... in W[use of the hole]) n
//   source: (fun i -> W[use of the hole]) n
inline Context gen_context(const GenConfig& cfg, Language lang, GenType hole_type) {
  detail::check_config(cfg);
  detail::TermGenerator g(GenConfig{cfg.seed ^ 0xc2b2ae3d27d4eb4fULL, cfg.max_depth, cfg.alphabet,
                                    cfg.allow_send_in_context},
                          lang);
  bool send = cfg.allow_send_in_context;
  std::size_t d = cfg.max_depth;
  detail::TermGenerator::Scope scope{{"i", GenType::Int}};

  ExprPtr use;
  switch (hole_type) {
  case GenType::Int: use = ast::hole(); break;
  case GenType::Fn: use = ast::app(ast::hole(), g.coin() ? ast::var("i") : g.gen_int(scope, d, send)); break;
  case GenType::HigherFn: use = ast::app(ast::hole(), g.gen_fn(scope, d, send)); break;
  }

  ExprPtr body;
  if (lang == Language::Target) {
    ExprPtr impl = ast::lam("x", g.gen_int({{"x", GenType::Int}}, d, send));
    auto inner = scope;
    inner.emplace_back("sc_print", GenType::Fn);
    body = ast::let("sc_print", impl, g.wrap_hole(use, inner, d, send));
  } else {
    body = g.wrap_hole(use, scope, d, send);
  }
  return Context{lang, ast::app(ast::lam("i", body), g.literal())};
}

// Random history expression over cfg.alphabet with depth ≤ max_depth.
inline Hist gen_history(const GenConfig& cfg) {
  detail::check_config(cfg);
  std::mt19937_64 rng(cfg.seed);
  std::vector<std::string> sigma(cfg.alphabet.begin(), cfg.alphabet.end());
  auto pick = [&](std::size_t n) { return static_cast<std::size_t>(rng() % n); };
  auto go = [&](auto& self, std::size_t d) -> Hist {
    if (d <= 1 || pick(4) == 0) {
      if (sigma.empty() || pick(4) == 0) return hist::eps();
      return hist::act(sigma[pick(sigma.size())]);
    }
    switch (pick(3)) {
    case 0: {
      Hist a = self(self, d - 1);
      return hist::seq(a, self(self, d - 1));
    }
    case 1: {
      Hist a = self(self, d - 1);
      return hist::choice(a, self(self, d - 1));
    }
    default: return hist::star(self(self, d - 1));
    }
  };
  return go(go, cfg.max_depth);
}

// Random trimmed automaton over cfg.alphabet, built directly rather than from
// a history expression.
inline TraceAutomaton gen_automaton(const GenConfig& cfg, std::size_t states = 4) {
  std::mt19937_64 rng(cfg.seed);
  auto pick = [&](std::size_t n) { return static_cast<std::size_t>(rng() % n); };
  TraceAutomaton a;
  a.alphabet.assign(cfg.alphabet.begin(), cfg.alphabet.end());
  a.initial = 0;
  a.accepting.resize(states);
  a.transitions.resize(states);
  for (std::size_t q = 0; q < states; ++q) {
    a.accepting[q] = pick(3) == 0;
    for (std::size_t sym = 0; sym < a.alphabet.size(); ++sym)
      for (std::size_t r = 0; r < states; ++r)
        if (pick(4) == 0) a.transitions[q].push_back({sym, r});
  }
  return detail::trim_reachable(a);
}

inline constexpr std::size_t enumeration_limit = 8;

// Every trace of `h` of length ≤ max_len, by direct recursion on the
// expression (stars unrolled until no new trace fits).
inline std::set<Word> enumerate_traces(const Hist& h, std::size_t max_len) {
  if (max_len > enumeration_limit)
    throw UsageError("enumerate_traces: max_len " + std::to_string(max_len) + " exceeds the limit of " +
                     std::to_string(enumeration_limit));
  auto concat = [max_len](const std::set<Word>& xs, const std::set<Word>& ys) {
    std::set<Word> out;
    for (const auto& x : xs)
      for (const auto& y : ys)
        if (x.size() + y.size() <= max_len) {
          Word w = x;
          w.insert(w.end(), y.begin(), y.end());
          out.insert(std::move(w));
        }
    return out;
  };
  return std::visit(
      [&](const auto& n) -> std::set<Word> {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, hist::Eps>) return {Word{}};
        else if constexpr (std::is_same_v<T, hist::Act>) {
          if (max_len == 0) return {};
          return {Word{n.name}};
        } else if constexpr (std::is_same_v<T, hist::Seq>) {
          return concat(enumerate_traces(n.first, max_len), enumerate_traces(n.second, max_len));
        } else if constexpr (std::is_same_v<T, hist::Choice>) {
          auto out = enumerate_traces(n.left, max_len);
          auto right = enumerate_traces(n.right, max_len);
          out.insert(right.begin(), right.end());
          return out;
        } else if constexpr (std::is_same_v<T, hist::Star>) {
          auto body = enumerate_traces(n.body, max_len);
          std::set<Word> acc{Word{}};
          for (;;) {
            auto next = concat(acc, body);
            std::size_t before = acc.size();
            acc.insert(next.begin(), next.end());
            if (acc.size() == before) return acc;
          }
        } else {
          throw Error("cannot enumerate an unresolved effect variable");
        }
      },
      h->node);
}

// All words over `alphabet` of length ≤ max_len.
inline std::vector<Word> all_words(const Alphabet& alphabet, std::size_t max_len) {
  std::vector<Word> out{Word{}};
  for (std::size_t begin = 0, len = 0; len < max_len; ++len) {
    std::size_t end = out.size();
    for (std::size_t i = begin; i < end; ++i)
      for (const auto& a : alphabet) {
        Word w = out[i];
        w.push_back(a);
        out.push_back(std::move(w));
      }
    begin = end;
  }
  return out;
}

} // namespace stv
