#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "stv/error.hpp"
#include "stv/syntax.hpp"

namespace stv {

// Observable event shared by both languages.
struct Action {
  std::string name;
  std::optional<std::int64_t> payload;

  friend bool operator==(const Action&, const Action&) = default;
};

using Trace = std::vector<Action>;

inline std::string to_string(const Action& a) {
  return a.payload ? a.name + "(" + std::to_string(*a.payload) + ")" : a.name;
}

// Trace with payloads erased: the alphabet history expressions talk about.
inline std::vector<std::string> erase_payloads(const Trace& t) {
  std::vector<std::string> out;
  out.reserve(t.size());
  for (const auto& a : t) out.push_back(a.name);
  return out;
}

// All prefixes, shortest first; always `t.size() + 1` of them.
template <class T> std::vector<std::vector<T>> trace_prefixes(const std::vector<T>& t) {
  std::vector<std::vector<T>> out;
  out.reserve(t.size() + 1);
  for (std::size_t n = 0; n <= t.size(); ++n) out.emplace_back(t.begin(), t.begin() + static_cast<std::ptrdiff_t>(n));
  return out;
}

struct Closure;
struct EnvNode;
using Env = std::shared_ptr<const EnvNode>;
using Value = std::variant<std::int64_t, std::shared_ptr<const Closure>>;

struct Closure {
  std::string param;
  ExprPtr body;
  Env env;
};

struct EnvNode {
  std::string name;
  Value value;
  Env next;
};

inline Env extend(Env env, std::string name, Value v) {
  return std::make_shared<const EnvNode>(EnvNode{std::move(name), std::move(v), std::move(env)});
}

inline const Value* lookup(const Env& env, const std::string& name) {
  for (const EnvNode* n = env.get(); n; n = n->next.get())
    if (n->name == name) return &n->value;
  return nullptr;
}

inline std::string to_string(const Value& v) {
  if (auto i = std::get_if<std::int64_t>(&v)) return std::to_string(*i);
  return "<fun " + std::get<std::shared_ptr<const Closure>>(v)->param + ">";
}

struct Divergence {};

struct RunResult {
  std::variant<Value, Divergence> outcome;
  Trace trace;

  bool diverged() const { return std::holds_alternative<Divergence>(outcome); }
  const Value& value() const { return std::get<Value>(outcome); }
};

inline constexpr std::size_t default_fuel = 10'000;

namespace detail {

struct OutOfFuel {};

// Call-by-value, left-to-right big-step evaluator.
class Interpreter {
public:
  explicit Interpreter(std::size_t fuel) : fuel_(fuel) {}

  Value eval(const ExprPtr& e, const Env& env) {
    if (fuel_ == 0) throw OutOfFuel{};
    --fuel_;
    return std::visit([&](const auto& n) { return step(n, env); }, e->node);
  }

  Trace trace;

private:
  std::size_t fuel_;

  static std::int64_t as_int(const Value& v, const char* what) {
    if (auto i = std::get_if<std::int64_t>(&v)) return *i;
    throw RuntimeError(std::string(what) + ": expected an integer, got a function");
  }

  Value apply(const Value& fn, Value arg) {
    auto c = std::get_if<std::shared_ptr<const Closure>>(&fn);
    if (!c) throw RuntimeError("application of a non-function value " + to_string(fn));
    return eval((*c)->body, extend((*c)->env, (*c)->param, std::move(arg)));
  }

  Value step(const node::Int& n, const Env&) { return n.value; }

  Value step(const node::Var& n, const Env& env) {
    if (auto v = lookup(env, n.name)) return *v;
    throw RuntimeError("unbound identifier '" + n.name + "'");
  }

  Value step(const node::Lam& n, const Env& env) {
    return std::make_shared<const Closure>(Closure{n.param, n.body, env});
  }

  Value step(const node::App& n, const Env& env) {
    Value fn = eval(n.fn, env);
    Value arg = eval(n.arg, env);
    return apply(fn, std::move(arg));
  }

  Value step(const node::If& n, const Env& env) {
    std::int64_t lhs = as_int(eval(n.lhs, env), "comparison");
    std::int64_t rhs = as_int(eval(n.rhs, env), "comparison");
    return eval(compare(n.op, lhs, rhs) ? n.then_branch : n.else_branch, env);
  }

  Value step(const node::Seq& n, const Env& env) {
    eval(n.first, env);
    return eval(n.second, env);
  }

  Value step(const node::Let& n, const Env& env) {
    Value bound = eval(n.bound, env);
    return eval(n.body, extend(env, n.name, std::move(bound)));
  }

  Value step(const node::Prim& n, const Env& env) {
    Value arg = eval(n.arg, env);
    auto op = lookup_primitive(n.op);
    if (!op) throw RuntimeError("unknown primitive '" + n.op + "'");
    if (op->syscall) {
      const Value* impl = lookup(env, n.op);
      if (!impl) throw RuntimeError("unbound syscall '" + n.op + "'");
      return apply(*impl, std::move(arg));
    }
    std::int64_t v = as_int(arg, n.op.c_str());
    trace.push_back(Action{*op->observable, v});
    return v;
  }

  Value step(const node::Hole&, const Env&) { throw RuntimeError("cannot evaluate a hole"); }
};

} // namespace detail

// Runs a closed expression. Exhausting the fuel yields Divergence together
// with the actions emitted so far; runtime type errors throw RuntimeError.
inline RunResult run(const ExprPtr& e, std::size_t fuel = default_fuel) {
  detail::Interpreter interp(fuel);
  try {
    Value v = interp.eval(e, nullptr);
    return RunResult{std::move(v), std::move(interp.trace)};
  } catch (const detail::OutOfFuel&) {
    return RunResult{Divergence{}, std::move(interp.trace)};
  }
}

inline RunResult run(const Program& p, std::size_t fuel = default_fuel) { return run(p.body, fuel); }

} // namespace stv
