#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "stv/error.hpp"
#include "stv/history.hpp"
#include "stv/syntax.hpp"

namespace stv {

struct EffTypeNode;
using EffType = std::shared_ptr<const EffTypeNode>;

namespace ty {
struct Int {};
struct Var { std::size_t id; };
// Function type; `latent` is the history of one application.
struct Arrow { EffType param; Hist latent; EffType result; };
} // namespace ty

struct EffTypeNode {
  std::variant<ty::Int, ty::Var, ty::Arrow> node;

  template <class T> const T* as() const { return std::get_if<T>(&node); }
};

namespace ty {
inline EffType make(decltype(EffTypeNode::node) n) { return std::make_shared<const EffTypeNode>(EffTypeNode{std::move(n)}); }
inline EffType int_() {
  static const EffType t = make(Int{});
  return t;
}
inline EffType var(std::size_t id) { return make(Var{id}); }
inline EffType arrow(EffType p, Hist latent, EffType r) { return make(Arrow{std::move(p), std::move(latent), std::move(r)}); }
} // namespace ty

inline std::string to_string(const EffType& t) {
  if (t->as<ty::Int>()) return "int";
  if (auto v = t->as<ty::Var>()) return "'t" + std::to_string(v->id);
  const auto& a = *t->as<ty::Arrow>();
  std::string param = to_string(a.param);
  if (a.param->as<ty::Arrow>()) param = "(" + param + ")";
  return param + " -[" + to_string(a.latent) + "]-> " + to_string(a.result);
}

using TypeEnv = std::map<std::string, EffType>;

struct Typing {
  EffType type;
  Hist effect; // normalized
};

namespace detail {

// Monomorphic type-and-effect inference by unification. Type variables and
// effect variables share no namespace.
class EffectInference {
public:
  Typing run(const ExprPtr& e, const TypeEnv& env) {
    auto [t, h] = infer(e, env);
    Hist effect = zonk(h);
    if (has_variables(effect)) throw TypeError("effect depends on an unconstrained function: " + to_string(effect));
    return Typing{zonk(t), normalize(effect)};
  }

private:
  std::vector<std::optional<EffType>> types_;
  std::vector<std::optional<Hist>> effects_;

  EffType fresh_type() {
    types_.emplace_back();
    return ty::var(types_.size() - 1);
  }

  Hist fresh_effect() {
    effects_.emplace_back();
    return hist::var(effects_.size() - 1);
  }

  EffType resolve(EffType t) const {
    while (auto v = t->as<ty::Var>()) {
      if (!types_[v->id]) break;
      t = *types_[v->id];
    }
    return t;
  }

  Hist zonk(const Hist& h) const {
    return std::visit(
        [&](const auto& n) -> Hist {
          using T = std::decay_t<decltype(n)>;
          if constexpr (std::is_same_v<T, hist::Var>) return effects_[n.id] ? zonk(*effects_[n.id]) : h;
          else if constexpr (std::is_same_v<T, hist::Seq>) return hist::seq(zonk(n.first), zonk(n.second));
          else if constexpr (std::is_same_v<T, hist::Choice>) return hist::choice(zonk(n.left), zonk(n.right));
          else if constexpr (std::is_same_v<T, hist::Star>) return hist::star(zonk(n.body));
          else return h;
        },
        h->node);
  }

  EffType zonk(const EffType& t) const {
    EffType r = resolve(t);
    if (auto a = r->as<ty::Arrow>()) return ty::arrow(zonk(a->param), normalize(zonk(a->latent)), zonk(a->result));
    return r;
  }

  bool occurs(std::size_t id, const EffType& t) const {
    EffType r = resolve(t);
    if (auto v = r->as<ty::Var>()) return v->id == id;
    if (auto a = r->as<ty::Arrow>()) return occurs(id, a->param) || occurs(id, a->result);
    return false;
  }

  static bool mentions(const Hist& h, std::size_t id) {
    return std::visit(
        [&](const auto& n) -> bool {
          using T = std::decay_t<decltype(n)>;
          if constexpr (std::is_same_v<T, hist::Var>) return n.id == id;
          else if constexpr (std::is_same_v<T, hist::Seq>) return mentions(n.first, id) || mentions(n.second, id);
          else if constexpr (std::is_same_v<T, hist::Choice>) return mentions(n.left, id) || mentions(n.right, id);
          else if constexpr (std::is_same_v<T, hist::Star>) return mentions(n.body, id);
          else return false;
        },
        h->node);
  }

  void unify(const EffType& a0, const EffType& b0) {
    EffType a = resolve(a0), b = resolve(b0);
    if (a == b) return;
    auto va = a->as<ty::Var>();
    auto vb = b->as<ty::Var>();
    if (va && vb && va->id == vb->id) return;
    if (va) return bind(va->id, b);
    if (vb) return bind(vb->id, a);
    if (a->as<ty::Int>() && b->as<ty::Int>()) return;
    auto fa = a->as<ty::Arrow>();
    auto fb = b->as<ty::Arrow>();
    if (fa && fb) {
      unify(fa->param, fb->param);
      unify_effects(fa->latent, fb->latent);
      unify(fa->result, fb->result);
      return;
    }
    throw TypeError("type mismatch: " + to_string(zonk(a)) + " vs " + to_string(zonk(b)));
  }

  void bind(std::size_t id, const EffType& t) {
    if (occurs(id, t)) throw TypeError("recursive type " + to_string(zonk(t)));
    types_[id] = t;
  }

  // Latent effects are joined by equality only; there is no subeffecting.
  void unify_effects(const Hist& a0, const Hist& b0) {
    Hist a = zonk(a0), b = zonk(b0);
    if (equal(a, b)) return;
    auto va = a->as<hist::Var>();
    auto vb = b->as<hist::Var>();
    if (va) return bind_effect(va->id, b);
    if (vb) return bind_effect(vb->id, a);
    if (!has_variables(a) && !has_variables(b)) {
      if (equiv(a, b)) return;
    } else if (equal(normalize(a), normalize(b))) {
      return;
    }
    throw TypeError("cannot join latent effects " + to_string(normalize(a)) + " and " + to_string(normalize(b)));
  }

  void bind_effect(std::size_t id, const Hist& h) {
    if (mentions(h, id)) throw TypeError("recursive latent effect " + to_string(h));
    effects_[id] = h;
  }

  std::pair<EffType, Hist> infer(const ExprPtr& e, const TypeEnv& env) {
    return std::visit([&](const auto& n) { return rule(n, env); }, e->node);
  }

  std::pair<EffType, Hist> rule(const node::Int&, const TypeEnv&) { return {ty::int_(), hist::eps()}; }

  std::pair<EffType, Hist> rule(const node::Var& n, const TypeEnv& env) {
    auto it = env.find(n.name);
    if (it == env.end()) throw TypeError("unbound identifier '" + n.name + "'");
    return {it->second, hist::eps()};
  }

  std::pair<EffType, Hist> rule(const node::Lam& n, const TypeEnv& env) {
    EffType param = fresh_type();
    TypeEnv inner = env;
    inner[n.param] = param;
    auto [result, body] = infer(n.body, inner);
    return {ty::arrow(param, body, result), hist::eps()};
  }

  std::pair<EffType, Hist> rule(const node::App& n, const TypeEnv& env) {
    auto [tf, hf] = infer(n.fn, env);
    auto [ta, ha] = infer(n.arg, env);
    EffType result = fresh_type();
    Hist latent = fresh_effect();
    unify(tf, ty::arrow(ta, latent, result));
    return {result, hist::seq(hf, hist::seq(ha, latent))};
  }

  std::pair<EffType, Hist> rule(const node::If& n, const TypeEnv& env) {
    auto [tl, hl] = infer(n.lhs, env);
    unify(tl, ty::int_());
    auto [tr, hr] = infer(n.rhs, env);
    unify(tr, ty::int_());
    auto [tt, ht] = infer(n.then_branch, env);
    auto [te, he] = infer(n.else_branch, env);
    unify(tt, te);
    return {tt, hist::seq(hl, hist::seq(hr, hist::choice(ht, he)))};
  }

  std::pair<EffType, Hist> rule(const node::Seq& n, const TypeEnv& env) {
    auto [t1, h1] = infer(n.first, env);
    auto [t2, h2] = infer(n.second, env);
    return {t2, hist::seq(h1, h2)};
  }

  std::pair<EffType, Hist> rule(const node::Let& n, const TypeEnv& env) {
    auto [t1, h1] = infer(n.bound, env);
    TypeEnv inner = env;
    inner[n.name] = t1;
    auto [t2, h2] = infer(n.body, inner);
    return {t2, hist::seq(h1, h2)};
  }

  std::pair<EffType, Hist> rule(const node::Prim& n, const TypeEnv& env) {
    auto op = lookup_primitive(n.op);
    if (!op) throw TypeError("unknown primitive '" + n.op + "'");
    auto [ta, ha] = infer(n.arg, env);
    if (op->syscall) {
      auto it = env.find(n.op);
      if (it == env.end()) throw TypeError("unbound syscall '" + n.op + "'");
      EffType result = fresh_type();
      Hist latent = fresh_effect();
      unify(it->second, ty::arrow(ta, latent, result));
      return {result, hist::seq(ha, latent)};
    }
    unify(ta, ty::int_());
    return {ty::int_(), hist::seq(ha, hist::act(*op->observable))};
  }

  std::pair<EffType, Hist> rule(const node::Hole&, const TypeEnv&) {
    throw TypeError("cannot analyse an unplugged hole");
  }
};

} // namespace detail

// Type and normalized history expression of `e`. Throws TypeError.
inline Typing infer(const ExprPtr& e, const TypeEnv& env = {}) { return detail::EffectInference{}.run(e, env); }

inline Typing infer(const Program& p, const TypeEnv& env = {}) { return infer(p.body, env); }

// History expression of the program plugged into the context.
inline Hist infer_in_hole(const Context& ctx, const Program& p) { return infer(plug(ctx, p)).effect; }

} // namespace stv
