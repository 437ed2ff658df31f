#pragma once

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdint>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "stv/error.hpp"

namespace stv {

enum class Language { Source, Target };

inline std::string_view to_string(Language lang) {
  return lang == Language::Source ? "source" : "target";
}

enum class CmpOp { Ge, Le, Eq, Lt, Gt };

inline std::string_view to_string(CmpOp op) {
  switch (op) {
  case CmpOp::Ge: return ">=";
  case CmpOp::Le: return "<=";
  case CmpOp::Eq: return "=";
  case CmpOp::Lt: return "<";
  case CmpOp::Gt: return ">";
  }
  return "?";
}

inline bool compare(CmpOp op, std::int64_t lhs, std::int64_t rhs) {
  switch (op) {
  case CmpOp::Ge: return lhs >= rhs;
  case CmpOp::Le: return lhs <= rhs;
  case CmpOp::Eq: return lhs == rhs;
  case CmpOp::Lt: return lhs < rhs;
  case CmpOp::Gt: return lhs > rhs;
  }
  return false;
}

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

namespace node {
struct Int { std::int64_t value; };
struct Var { std::string name; };
struct Lam { std::string param; ExprPtr body; };
struct App { ExprPtr fn; ExprPtr arg; };
// Conditional with an integer comparison as guard.
struct If { CmpOp op; ExprPtr lhs; ExprPtr rhs; ExprPtr then_branch; ExprPtr else_branch; };
struct Seq { ExprPtr first; ExprPtr second; };
struct Let { std::string name; ExprPtr bound; ExprPtr body; };
struct Prim { std::string op; ExprPtr arg; };
struct Hole {};
} // namespace node

struct Expr {
  using Node = std::variant<node::Int, node::Var, node::Lam, node::App, node::If,
                            node::Seq, node::Let, node::Prim, node::Hole>;
  Node node;

  template <class T> const T* as() const { return std::get_if<T>(&node); }
  template <class T> bool is() const { return std::holds_alternative<T>(node); }
};

namespace ast {
inline ExprPtr make(Expr::Node n) { return std::make_shared<const Expr>(Expr{std::move(n)}); }
inline ExprPtr lit(std::int64_t v) { return make(node::Int{v}); }
inline ExprPtr var(std::string x) { return make(node::Var{std::move(x)}); }
inline ExprPtr lam(std::string x, ExprPtr body) { return make(node::Lam{std::move(x), std::move(body)}); }
inline ExprPtr app(ExprPtr f, ExprPtr a) { return make(node::App{std::move(f), std::move(a)}); }
inline ExprPtr if_(CmpOp op, ExprPtr l, ExprPtr r, ExprPtr t, ExprPtr e) {
  return make(node::If{op, std::move(l), std::move(r), std::move(t), std::move(e)});
}
inline ExprPtr seq(ExprPtr a, ExprPtr b) { return make(node::Seq{std::move(a), std::move(b)}); }
inline ExprPtr let(std::string x, ExprPtr bound, ExprPtr body) {
  return make(node::Let{std::move(x), std::move(bound), std::move(body)});
}
inline ExprPtr prim(std::string op, ExprPtr arg) { return make(node::Prim{std::move(op), std::move(arg)}); }
inline ExprPtr hole() { return make(node::Hole{}); }
} // namespace ast

// ---------------------------------------------------------------------------
// Primitives

struct PrimOp {
  std::string name;
  Language language;
  std::optional<std::string> observable; // action emitted on invocation
  bool syscall = false;                  // resolved through the enclosing bindings
};

inline bool is_syscall_name(std::string_view name) {
  return name.size() > 3 && name.substr(0, 3) == "sc_";
}

inline bool is_builtin_primitive(std::string_view name) {
  return name == "print" || name == "display" || name == "send";
}

inline std::optional<PrimOp> lookup_primitive(std::string_view name) {
  if (name == "print") return PrimOp{"print", Language::Source, "display", false};
  if (name == "display") return PrimOp{"display", Language::Target, "display", false};
  if (name == "send") return PrimOp{"send", Language::Target, "send", false};
  if (is_syscall_name(name)) return PrimOp{std::string(name), Language::Target, std::nullopt, true};
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Programs and contexts

struct Program {
  Language language;
  ExprPtr body;
};

struct Context {
  Language language;
  ExprPtr body; // exactly one node::Hole
};

inline Context identity_context(Language lang) { return Context{lang, ast::hole()}; }

// ---------------------------------------------------------------------------
// Structural queries

template <class F> void for_each_child(const Expr& e, F&& f) {
  std::visit(
      [&](const auto& n) {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, node::Lam>) {
          f(n.body);
        } else if constexpr (std::is_same_v<T, node::App>) {
          f(n.fn);
          f(n.arg);
        } else if constexpr (std::is_same_v<T, node::If>) {
          f(n.lhs);
          f(n.rhs);
          f(n.then_branch);
          f(n.else_branch);
        } else if constexpr (std::is_same_v<T, node::Seq>) {
          f(n.first);
          f(n.second);
        } else if constexpr (std::is_same_v<T, node::Let>) {
          f(n.bound);
          f(n.body);
        } else if constexpr (std::is_same_v<T, node::Prim>) {
          f(n.arg);
        }
      },
      e.node);
}

inline std::size_t hole_count(const ExprPtr& e) {
  if (e->is<node::Hole>()) return 1;
  std::size_t n = 0;
  for_each_child(*e, [&](const ExprPtr& c) { n += hole_count(c); });
  return n;
}

inline std::size_t node_count(const ExprPtr& e) {
  std::size_t n = 1;
  for_each_child(*e, [&](const ExprPtr& c) { n += node_count(c); });
  return n;
}

// Nesting depth; atoms have depth 1.
inline std::size_t depth(const ExprPtr& e) {
  std::size_t d = 0;
  for_each_child(*e, [&](const ExprPtr& c) { d = std::max(d, depth(c)); });
  return d + 1;
}

inline bool equal(const ExprPtr& a, const ExprPtr& b) {
  if (a == b) return true;
  if (a->node.index() != b->node.index()) return false;
  return std::visit(
      [&](const auto& x) -> bool {
        using T = std::decay_t<decltype(x)>;
        const T& y = std::get<T>(b->node);
        if constexpr (std::is_same_v<T, node::Int>) return x.value == y.value;
        else if constexpr (std::is_same_v<T, node::Var>) return x.name == y.name;
        else if constexpr (std::is_same_v<T, node::Lam>) return x.param == y.param && equal(x.body, y.body);
        else if constexpr (std::is_same_v<T, node::App>) return equal(x.fn, y.fn) && equal(x.arg, y.arg);
        else if constexpr (std::is_same_v<T, node::If>)
          return x.op == y.op && equal(x.lhs, y.lhs) && equal(x.rhs, y.rhs) &&
                 equal(x.then_branch, y.then_branch) && equal(x.else_branch, y.else_branch);
        else if constexpr (std::is_same_v<T, node::Seq>) return equal(x.first, y.first) && equal(x.second, y.second);
        else if constexpr (std::is_same_v<T, node::Let>)
          return x.name == y.name && equal(x.bound, y.bound) && equal(x.body, y.body);
        else if constexpr (std::is_same_v<T, node::Prim>) return x.op == y.op && equal(x.arg, y.arg);
        else return true;
      },
      a->node);
}

namespace detail {
inline void collect_free(const ExprPtr& e, std::vector<std::string>& bound, std::set<std::string>& out) {
  auto is_bound = [&](const std::string& x) {
    return std::find(bound.begin(), bound.end(), x) != bound.end();
  };
  if (auto v = e->as<node::Var>()) {
    if (!is_bound(v->name)) out.insert(v->name);
  } else if (auto l = e->as<node::Lam>()) {
    bound.push_back(l->param);
    collect_free(l->body, bound, out);
    bound.pop_back();
  } else if (auto l = e->as<node::Let>()) {
    collect_free(l->bound, bound, out);
    bound.push_back(l->name);
    collect_free(l->body, bound, out);
    bound.pop_back();
  } else if (auto p = e->as<node::Prim>()) {
    // Syscalls are variables looked up in the enclosing bindings.
    if (is_syscall_name(p->op) && !is_bound(p->op)) out.insert(p->op);
    collect_free(p->arg, bound, out);
  } else {
    for_each_child(*e, [&](const ExprPtr& c) { collect_free(c, bound, out); });
  }
}
} // namespace detail

// Free identifiers, syscall names included.
inline std::set<std::string> free_variables(const ExprPtr& e) {
  std::vector<std::string> bound;
  std::set<std::string> out;
  detail::collect_free(e, bound, out);
  return out;
}

// Throws ScopeError unless every identifier is bound. Syscall names are
// exempt in target code: the context supplies them.
inline void check_closed(const ExprPtr& e, Language lang) {
  for (const auto& x : free_variables(e)) {
    if (lang == Language::Target && is_syscall_name(x)) continue;
    throw ScopeError("unbound variable '" + x + "'");
  }
}

// ---------------------------------------------------------------------------
// Pretty printing

namespace detail {

// Syntactic position an expression is printed in, from loosest to tightest.
enum class Slot {
  Top,     // anything, sequences included
  Open,    // no bare sequence; nothing follows on the same level
  Closed,  // no bare sequence and something may follow
  Operand, // comparison operand
  Fn,      // function position of an application
  Arg,     // argument position
};

inline void print(std::ostream& os, const ExprPtr& e, Slot slot);

inline void print_paren(std::ostream& os, const ExprPtr& e) {
  os << '(';
  print(os, e, Slot::Top);
  os << ')';
}

inline void print(std::ostream& os, const ExprPtr& e, Slot slot) {
  std::visit(
      [&](const auto& n) {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, node::Int>) {
          if (n.value < 0) os << "(-" << (n.value == INT64_MIN ? std::string("9223372036854775808")
                                                                : std::to_string(-n.value)) << ')';
          else os << n.value;
        } else if constexpr (std::is_same_v<T, node::Var>) {
          os << n.name;
        } else if constexpr (std::is_same_v<T, node::Hole>) {
          os << "[.]";
        } else if constexpr (std::is_same_v<T, node::Seq>) {
          if (slot != Slot::Top) return print_paren(os, e);
          print(os, n.first, Slot::Closed);
          os << "; ";
          print(os, n.second, Slot::Top);
        } else if constexpr (std::is_same_v<T, node::Lam>) {
          if (slot != Slot::Top && slot != Slot::Open) return print_paren(os, e);
          os << "fun " << n.param << " -> ";
          print(os, n.body, Slot::Top);
        } else if constexpr (std::is_same_v<T, node::Let>) {
          if (slot != Slot::Top && slot != Slot::Open) return print_paren(os, e);
          os << "let " << n.name << " = ";
          print(os, n.bound, Slot::Open);
          os << " in ";
          print(os, n.body, Slot::Top);
        } else if constexpr (std::is_same_v<T, node::If>) {
          if (slot != Slot::Top && slot != Slot::Open && slot != Slot::Closed) return print_paren(os, e);
          os << "if ";
          print(os, n.lhs, Slot::Operand);
          os << ' ' << to_string(n.op) << ' ';
          print(os, n.rhs, Slot::Operand);
          os << " then ";
          print(os, n.then_branch, Slot::Open);
          os << " else ";
          print(os, n.else_branch, slot == Slot::Closed ? Slot::Closed : Slot::Open);
        } else if constexpr (std::is_same_v<T, node::App>) {
          if (slot == Slot::Arg) return print_paren(os, e);
          print(os, n.fn, Slot::Fn);
          os << ' ';
          print(os, n.arg, Slot::Arg);
        } else if constexpr (std::is_same_v<T, node::Prim>) {
          if (slot == Slot::Arg) return print_paren(os, e);
          os << n.op << ' ';
          print(os, n.arg, Slot::Arg);
        }
      },
      e->node);
}

} // namespace detail

inline std::string pretty(const ExprPtr& e) {
  std::ostringstream os;
  detail::print(os, e, detail::Slot::Top);
  return os.str();
}

inline std::string pretty(const Program& p) { return pretty(p.body); }
inline std::string pretty(const Context& c) { return pretty(c.body); }

// ---------------------------------------------------------------------------
// Parsing
//
//   expr    ::= stmt [ ';' expr ]
//   stmt    ::= 'fun' id ('->' | '=>') expr
//             | 'let' id '=' expr 'in' expr
//             | 'if' app cmp app 'then' expr 'else' stmt
//             | app
//   app     ::= head { atom }
//   head    ::= prim atom | atom
//   atom    ::= int | '(' '-' int ')' | id | '(' expr ')' | '[.]'

namespace detail {

enum class Tok { Int, Ident, Sym, Hole, End };

struct Token {
  Tok kind;
  std::string text;
  std::size_t line;
  std::size_t column;
};

inline std::vector<Token> tokenize(std::string_view src) {
  std::vector<Token> out;
  std::size_t line = 1, col = 1, i = 0;
  auto advance = [&](std::size_t n) {
    for (std::size_t k = 0; k < n; ++k, ++i) {
      if (src[i] == '\n') { ++line; col = 1; }
      else ++col;
    }
  };
  while (i < src.size()) {
    char c = src[i];
    if (std::isspace(static_cast<unsigned char>(c))) { advance(1); continue; }
    if (c == '(' && i + 1 < src.size() && src[i + 1] == '*') {
      // (* comment *)
      auto end = src.find("*)", i + 2);
      if (end == std::string_view::npos) throw SyntaxError("unterminated comment", line, col);
      advance(end + 2 - i);
      continue;
    }
    std::size_t l = line, cl = col, start = i;
    if (std::isdigit(static_cast<unsigned char>(c))) {
      while (i < src.size() && std::isdigit(static_cast<unsigned char>(src[i]))) advance(1);
      out.push_back({Tok::Int, std::string(src.substr(start, i - start)), l, cl});
    } else if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      while (i < src.size() && (std::isalnum(static_cast<unsigned char>(src[i])) || src[i] == '_' || src[i] == '\''))
        advance(1);
      out.push_back({Tok::Ident, std::string(src.substr(start, i - start)), l, cl});
    } else if (src.substr(i, 3) == "[.]") {
      advance(3);
      out.push_back({Tok::Hole, "[.]", l, cl});
    } else {
      static constexpr std::string_view two[] = {"->", "=>", ">=", "<="};
      bool matched = false;
      for (auto s : two) {
        if (src.substr(i, 2) == s) {
          advance(2);
          out.push_back({Tok::Sym, std::string(s), l, cl});
          matched = true;
          break;
        }
      }
      if (matched) continue;
      if (std::string_view("();=<>-").find(c) == std::string_view::npos)
        throw SyntaxError(std::string("unexpected character '") + c + "'", l, cl);
      advance(1);
      out.push_back({Tok::Sym, std::string(1, c), l, cl});
    }
  }
  out.push_back({Tok::End, "", line, col});
  return out;
}

inline bool is_keyword(std::string_view s) {
  return s == "fun" || s == "let" || s == "in" || s == "if" || s == "then" || s == "else";
}

class Parser {
public:
  Parser(std::string_view text, Language lang, bool allow_hole)
      : toks_(tokenize(text)), lang_(lang), allow_hole_(allow_hole) {}

  ExprPtr parse() {
    ExprPtr e = expr();
    if (peek().kind != Tok::End) fail("unexpected '" + peek().text + "'");
    return e;
  }

private:
  std::vector<Token> toks_;
  std::size_t pos_ = 0;
  Language lang_;
  bool allow_hole_;

  const Token& peek(std::size_t k = 0) const { return toks_[std::min(pos_ + k, toks_.size() - 1)]; }
  const Token& next() { return toks_[pos_ < toks_.size() - 1 ? pos_++ : pos_]; }

  [[noreturn]] void fail(const std::string& msg) const { fail_at(peek(), msg); }
  [[noreturn]] static void fail_at(const Token& t, const std::string& msg) {
    throw SyntaxError(msg, t.line, t.column);
  }

  bool at_sym(std::string_view s) const { return peek().kind == Tok::Sym && peek().text == s; }
  bool at_kw(std::string_view s) const { return peek().kind == Tok::Ident && peek().text == s; }

  void expect_sym(std::string_view s) {
    if (!at_sym(s)) fail("expected '" + std::string(s) + "'");
    next();
  }
  void expect_kw(std::string_view s) {
    if (!at_kw(s)) fail("expected '" + std::string(s) + "'");
    next();
  }

  // Rejects identifiers that belong to the other language.
  void check_language(const Token& t) const {
    auto op = lookup_primitive(t.text);
    if (op && op->language != lang_) {
      throw LanguageError(std::to_string(t.line) + ":" + std::to_string(t.column) + ": primitive '" + t.text +
                          "' is not part of the " + std::string(to_string(lang_)) + " language");
    }
  }

  std::string binder() {
    const Token& t = peek();
    if (t.kind != Tok::Ident || is_keyword(t.text)) fail("expected identifier");
    check_language(t);
    if (is_builtin_primitive(t.text)) fail("cannot bind primitive '" + t.text + "'");
    next();
    return t.text;
  }

  ExprPtr expr() {
    ExprPtr first = stmt();
    if (at_sym(";")) {
      next();
      return ast::seq(first, expr());
    }
    return first;
  }

  ExprPtr stmt() {
    if (at_kw("fun")) {
      next();
      std::string x = binder();
      if (at_sym("->") || at_sym("=>")) next();
      else fail("expected '->'");
      return ast::lam(x, expr());
    }
    if (at_kw("let")) {
      next();
      std::string x = binder();
      expect_sym("=");
      ExprPtr bound = expr();
      expect_kw("in");
      return ast::let(x, bound, expr());
    }
    if (at_kw("if")) {
      next();
      ExprPtr lhs = app();
      CmpOp op = cmp_op();
      ExprPtr rhs = app();
      expect_kw("then");
      ExprPtr t = expr();
      expect_kw("else");
      ExprPtr e = stmt();
      return ast::if_(op, lhs, rhs, t, e);
    }
    return app();
  }

  CmpOp cmp_op() {
    if (peek().kind == Tok::Sym) {
      const std::string& s = peek().text;
      std::optional<CmpOp> op;
      if (s == ">=") op = CmpOp::Ge;
      else if (s == "<=") op = CmpOp::Le;
      else if (s == "=") op = CmpOp::Eq;
      else if (s == "<") op = CmpOp::Lt;
      else if (s == ">") op = CmpOp::Gt;
      if (op) {
        next();
        return *op;
      }
    }
    fail("expected comparison operator");
  }

  bool at_atom_start() const {
    const Token& t = peek();
    if (t.kind == Tok::Int || t.kind == Tok::Hole) return true;
    if (t.kind == Tok::Sym) return t.text == "(";
    if (t.kind == Tok::Ident) return !is_keyword(t.text) && !is_builtin_primitive(t.text);
    return false;
  }

  ExprPtr app() {
    ExprPtr e = head();
    while (at_atom_start()) e = ast::app(e, atom());
    return e;
  }

  ExprPtr head() {
    const Token& t = peek();
    if (t.kind == Tok::Ident && lookup_primitive(t.text)) {
      check_language(t);
      bool syscall = is_syscall_name(t.text);
      if (syscall && !at_atom_start_after()) return atom();
      next();
      if (!at_atom_start()) fail("primitive '" + t.text + "' expects an argument");
      return ast::prim(t.text, atom());
    }
    return atom();
  }

  bool at_atom_start_after() {
    ++pos_;
    bool r = at_atom_start();
    --pos_;
    return r;
  }

  ExprPtr atom() {
    const Token& t = peek();
    switch (t.kind) {
    case Tok::Int: {
      next();
      return ast::lit(parse_int(t, false));
    }
    case Tok::Hole:
      if (!allow_hole_) fail("hole '[.]' is only allowed in contexts");
      next();
      return ast::hole();
    case Tok::Ident:
      if (is_keyword(t.text)) fail("unexpected keyword '" + t.text + "'");
      check_language(t);
      if (is_builtin_primitive(t.text)) fail("primitive '" + t.text + "' expects an argument");
      next();
      return ast::var(t.text);
    case Tok::Sym:
      if (t.text == "(") {
        next();
        if (at_sym("-")) {
          next();
          if (peek().kind != Tok::Int) fail("expected integer after '-'");
          const Token& n = next();
          expect_sym(")");
          return ast::lit(parse_int(n, true));
        }
        ExprPtr e = expr();
        expect_sym(")");
        return e;
      }
      fail("unexpected '" + t.text + "'");
    case Tok::End:
      fail("unexpected end of input");
    }
    fail("unexpected token");
  }

  static std::int64_t parse_int(const Token& t, bool negative) {
    std::string digits = negative ? "-" + t.text : t.text;
    std::int64_t v = 0;
    auto [p, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), v);
    if (ec != std::errc() || p != digits.data() + digits.size()) fail_at(t, "integer literal out of range");
    return v;
  }
};

} // namespace detail

// Parses without any scoping check; holes allowed when `allow_hole`.
inline ExprPtr parse_expr(std::string_view text, Language lang, bool allow_hole = false) {
  return detail::Parser(text, lang, allow_hole).parse();
}

inline Program parse_program(std::string_view text, Language lang) {
  ExprPtr e = parse_expr(text, lang, false);
  check_closed(e, lang);
  return Program{lang, e};
}

inline Context parse_context(std::string_view text, Language lang) {
  ExprPtr e = parse_expr(text, lang, true);
  std::size_t holes = hole_count(e);
  if (holes != 1) throw HoleError("context must contain exactly one hole, found " + std::to_string(holes));
  check_closed(e, lang);
  return Context{lang, e};
}

// ---------------------------------------------------------------------------
// Plugging

inline ExprPtr fill_hole(const ExprPtr& e, const ExprPtr& with) {
  return std::visit(
      [&](const auto& n) -> ExprPtr {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, node::Hole>) return with;
        else if constexpr (std::is_same_v<T, node::Lam>) return ast::lam(n.param, fill_hole(n.body, with));
        else if constexpr (std::is_same_v<T, node::App>) return ast::app(fill_hole(n.fn, with), fill_hole(n.arg, with));
        else if constexpr (std::is_same_v<T, node::If>)
          return ast::if_(n.op, fill_hole(n.lhs, with), fill_hole(n.rhs, with), fill_hole(n.then_branch, with),
                          fill_hole(n.else_branch, with));
        else if constexpr (std::is_same_v<T, node::Seq>) return ast::seq(fill_hole(n.first, with), fill_hole(n.second, with));
        else if constexpr (std::is_same_v<T, node::Let>)
          return ast::let(n.name, fill_hole(n.bound, with), fill_hole(n.body, with));
        else if constexpr (std::is_same_v<T, node::Prim>) return ast::prim(n.op, fill_hole(n.arg, with));
        else return e;
      },
      e->node);
}

// Substitutes the program for the hole. Binders around the hole capture the
// program's free identifiers: that is how a context supplies syscalls.
inline Program plug(const Context& ctx, const Program& prog) {
  if (ctx.language != prog.language) {
    throw LanguageError("cannot plug a " + std::string(to_string(prog.language)) + " program into a " +
                        std::string(to_string(ctx.language)) + " context");
  }
  return Program{ctx.language, fill_hole(ctx.body, prog.body)};
}

} // namespace stv
