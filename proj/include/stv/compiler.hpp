#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "stv/error.hpp"
#include "stv/syntax.hpp"

namespace stv {

// The syscall a source primitive is lowered to.
inline std::string syscall_for(std::string_view source_prim) { return "sc_" + std::string(source_prim); }

namespace detail {
inline ExprPtr translate_expr(const ExprPtr& e) {
  return std::visit(
      [&](const auto& n) -> ExprPtr {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, node::Lam>) return ast::lam(n.param, translate_expr(n.body));
        else if constexpr (std::is_same_v<T, node::App>) return ast::app(translate_expr(n.fn), translate_expr(n.arg));
        else if constexpr (std::is_same_v<T, node::If>)
          return ast::if_(n.op, translate_expr(n.lhs), translate_expr(n.rhs), translate_expr(n.then_branch),
                          translate_expr(n.else_branch));
        else if constexpr (std::is_same_v<T, node::Seq>) return ast::seq(translate_expr(n.first), translate_expr(n.second));
        else if constexpr (std::is_same_v<T, node::Let>)
          return ast::let(n.name, translate_expr(n.bound), translate_expr(n.body));
        else if constexpr (std::is_same_v<T, node::Prim>) return ast::prim(syscall_for(n.op), translate_expr(n.arg));
        else return e;
      },
      e->node);
}
} // namespace detail

// Node-for-node translation; source primitives become syscalls.
inline Program translate(const Program& p) {
  if (p.language != Language::Source) throw LanguageError("translate expects a source program");
  return Program{Language::Target, detail::translate_expr(p.body)};
}

// No primitive calls or applications outside lambda bodies.
inline bool is_effect_free(const ExprPtr& e) {
  if (e->is<node::Lam>()) return true;
  if (e->is<node::Prim>() || e->is<node::App>() || e->is<node::Hole>()) return false;
  bool pure = true;
  for_each_child(*e, [&](const ExprPtr& c) { pure = pure && is_effect_free(c); });
  return pure;
}

namespace detail {

// `if g then (p a; e1) else (p a; e2)` with the same effect-free `a`.
// The guard must be effect-free too, otherwise hoisting would reorder actions.
inline bool has_common_prefix(const node::If& n) {
  auto t = n.then_branch->as<node::Seq>();
  auto e = n.else_branch->as<node::Seq>();
  if (!t || !e) return false;
  auto pt = t->first->as<node::Prim>();
  auto pe = e->first->as<node::Prim>();
  if (!pt || !pe || pt->op != pe->op) return false;
  return equal(pt->arg, pe->arg) && is_effect_free(pt->arg) && is_effect_free(n.lhs) && is_effect_free(n.rhs);
}

inline ExprPtr factor_node(const ExprPtr& e) {
  auto n = e->as<node::If>();
  if (!n || !has_common_prefix(*n)) return e;
  const auto& t = *n->then_branch->as<node::Seq>();
  const auto& f = *n->else_branch->as<node::Seq>();
  ExprPtr rest = factor_node(ast::if_(n->op, n->lhs, n->rhs, t.second, f.second));
  return ast::seq(t.first, rest);
}

inline ExprPtr factor_expr(const ExprPtr& e) {
  ExprPtr rebuilt = std::visit(
      [&](const auto& n) -> ExprPtr {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, node::Lam>) return ast::lam(n.param, factor_expr(n.body));
        else if constexpr (std::is_same_v<T, node::App>) return ast::app(factor_expr(n.fn), factor_expr(n.arg));
        else if constexpr (std::is_same_v<T, node::If>)
          return ast::if_(n.op, factor_expr(n.lhs), factor_expr(n.rhs), factor_expr(n.then_branch),
                          factor_expr(n.else_branch));
        else if constexpr (std::is_same_v<T, node::Seq>) return ast::seq(factor_expr(n.first), factor_expr(n.second));
        else if constexpr (std::is_same_v<T, node::Let>)
          return ast::let(n.name, factor_expr(n.bound), factor_expr(n.body));
        else if constexpr (std::is_same_v<T, node::Prim>) return ast::prim(n.op, factor_expr(n.arg));
        else return e;
      },
      e->node);
  return factor_node(rebuilt);
}

} // namespace detail

// Hoists a primitive call shared by both branches of a conditional out of
// it. Applied bottom-up; the result is a fixpoint of the rewrite.
inline ExprPtr factor_common_prefix(const ExprPtr& e) { return detail::factor_expr(e); }

inline Program factor_common_prefix(const Program& p) { return Program{p.language, factor_common_prefix(p.body)}; }

inline constexpr std::string_view factor_common_prefix_pass = "factor_common_prefix";

// Accepts the dashed spelling used on the command line.
inline std::string canonical_pass_name(std::string_view name) {
  std::string s(name);
  for (auto& c : s)
    if (c == '-') c = '_';
  if (s != factor_common_prefix_pass) throw UsageError("unknown pass '" + std::string(name) + "'");
  return s;
}

struct CompilationUnit {
  Program source;
  Program target;
  std::vector<std::string> applied_passes;
};

inline CompilationUnit compile(const Program& p, const std::vector<std::string>& passes = {}) {
  std::vector<std::string> names;
  for (const auto& pass : passes) names.push_back(canonical_pass_name(pass));
  Program target = translate(p);
  for (const auto& pass : names) {
    if (pass == factor_common_prefix_pass) target = factor_common_prefix(target);
  }
  return CompilationUnit{p, std::move(target), std::move(names)};
}

} // namespace stv
