#include <random>

#include "catch_amalgamated.hpp"
#include "fixtures.hpp"

using namespace stv;
using namespace stv::ast;

namespace {

ExprPtr program_S_ast() {
  return lam("i", if_(CmpOp::Ge, var("i"), lit(0), seq(prim("print", var("i")), var("i")), lit(-1)));
}

// Arbitrary (untyped, unscoped) trees over every constructor, for printer
// and parser agreement.
ExprPtr arbitrary(std::mt19937_64& rng, int depth, Language lang) {
  auto pick = [&](std::size_t n) { return static_cast<std::size_t>(rng() % n); };
  static const char* names[] = {"a", "b", "x", "i", "f"};
  if (depth <= 1) {
    if (pick(2)) return lit(static_cast<std::int64_t>(pick(7)) - 3);
    return var(names[pick(5)]);
  }
  auto sub = [&] { return arbitrary(rng, depth - 1, lang); };
  std::vector<std::string> prims = lang == Language::Source ? std::vector<std::string>{"print"}
                                                            : std::vector<std::string>{"display", "send", "sc_print"};
  static constexpr CmpOp ops[] = {CmpOp::Ge, CmpOp::Le, CmpOp::Eq, CmpOp::Lt, CmpOp::Gt};
  switch (pick(7)) {
  case 0: return lam(names[pick(5)], sub());
  case 1: {
    auto f = sub();
    return app(f, sub());
  }
  case 2: {
    auto l = sub(), r = sub(), t = sub();
    return if_(ops[pick(5)], l, r, t, sub());
  }
  case 3: {
    auto a = sub();
    return seq(a, sub());
  }
  case 4: {
    auto b = sub();
    return let(names[pick(5)], b, sub());
  }
  case 5: return prim(prims[pick(prims.size())], sub());
  default: return sub();
  }
}

} // namespace

TEST_CASE("parse_program: the running example program") {
  Program p = fixtures::S();
  CHECK(p.language == Language::Source);
  CHECK(equal(p.body, program_S_ast()));
  CHECK(pretty(p) == "fun i -> if i >= 0 then (print i; i) else (-1)");
  // The fat arrow is accepted too.
  CHECK(equal(parse_program("fun i => if i >= 0 then (print i; i) else (-1)", Language::Source).body, program_S_ast()));
}

TEST_CASE("parse_program: atoms and errors") {
  auto p = parse_program("42", Language::Source);
  REQUIRE(p.body->as<node::Int>());
  CHECK(p.body->as<node::Int>()->value == 42);

  CHECK_THROWS_AS(parse_program("fun x -> y", Language::Source), ScopeError);
  CHECK_THROWS_AS(parse_program("print 1", Language::Target), LanguageError);
  CHECK_THROWS_AS(parse_program("display 1", Language::Source), LanguageError);
  CHECK_THROWS_AS(parse_program("send 1", Language::Source), LanguageError);
  CHECK_THROWS_AS(parse_program("sc_print 1", Language::Source), LanguageError);
  CHECK_THROWS_AS(parse_program("[.]", Language::Source), SyntaxError);
  CHECK_THROWS_AS(parse_program("let print = 1 in 2", Language::Source), SyntaxError);
  CHECK_THROWS_AS(parse_program("print", Language::Source), SyntaxError);
  CHECK_THROWS_AS(parse_program("(-x)", Language::Source), SyntaxError);
  CHECK_THROWS_AS(parse_program("99999999999999999999", Language::Source), SyntaxError);
}

TEST_CASE("parse_program: syntax errors carry positions") {
  try {
    parse_program("fun x ->\n  (x 1", Language::Source);
    FAIL("expected a syntax error");
  } catch (const SyntaxError& e) {
    CHECK(e.line() == 2);
    CHECK(e.column() == 7);
  }
  try {
    parse_program("if 1 ? 2 then 3 else 4", Language::Source);
    FAIL("expected a syntax error");
  } catch (const SyntaxError& e) {
    CHECK(e.line() == 1);
    CHECK(e.column() == 6);
  }
}

TEST_CASE("parse_program: syscalls are free in target programs") {
  Program t = fixtures::T();
  CHECK(t.language == Language::Target);
  CHECK(free_variables(t.body) == std::set<std::string>{"sc_print"});
  // A bare syscall name is a variable.
  auto v = parse_program("let f = sc_print in f 1", Language::Target);
  CHECK(v.body->as<node::Let>()->bound->is<node::Var>());
}

TEST_CASE("parse_program: precedence and associativity") {
  auto e = parse_expr("a; b; c", Language::Source);
  REQUIRE(e->as<node::Seq>());
  CHECK(e->as<node::Seq>()->second->is<node::Seq>());

  auto f = parse_expr("f x y", Language::Source);
  CHECK(equal(f, app(app(var("f"), var("x")), var("y"))));

  auto g = parse_expr("print f x", Language::Source);
  CHECK(equal(g, app(prim("print", var("f")), var("x"))));

  // The else branch stops before a sequence; the then branch does not.
  auto h = parse_expr("if a >= b then c; d else e; g", Language::Source);
  CHECK(equal(h, seq(if_(CmpOp::Ge, var("a"), var("b"), seq(var("c"), var("d")), var("e")), var("g"))));

  auto k = parse_expr("fun x -> x; x", Language::Source);
  CHECK(equal(k, lam("x", seq(var("x"), var("x")))));

  auto m = parse_expr("(* c *) f (-3)", Language::Source);
  CHECK(equal(m, app(var("f"), lit(-3))));
}

TEST_CASE("parse_context: hole count") {
  Context evil = fixtures::evil();
  CHECK(hole_count(evil.body) == 1);
  auto outer = evil.body->as<node::App>();
  REQUIRE(outer);
  auto body = outer->fn->as<node::Lam>()->body->as<node::Let>();
  REQUIRE(body);
  CHECK(body->name == "sc_print");
  CHECK(equal(body->bound, lam("x", seq(prim("display", var("x")), prim("send", var("x"))))));
  CHECK(equal(body->body, app(hole(), var("i"))));

  Context id = parse_context("[.]", Language::Target);
  CHECK(id.body->is<node::Hole>());

  CHECK_THROWS_AS(parse_context("([.] 1) [.]", Language::Target), HoleError);
  CHECK_THROWS_AS(parse_context("1", Language::Target), HoleError);
  CHECK_THROWS_AS(parse_context("[.", Language::Target), SyntaxError);
  CHECK_THROWS_AS(parse_context("fun x -> y [.]", Language::Source), ScopeError);
}

TEST_CASE("plug") {
  Program t = fixtures::T();
  Program plugged = plug(fixtures::evil(), t);
  CHECK(plugged.language == Language::Target);
  CHECK(free_variables(plugged.body).empty());
  CHECK(pretty(plugged) == "(fun i -> let sc_print = fun x -> display x; send x in "
                           "(fun i -> if i >= 0 then (sc_print i; i) else (-1)) i) 42");

  CHECK(equal(plug(identity_context(Language::Target), t).body, t.body));

  Program friendly = plug(fixtures::friendly(), t);
  auto let_node = friendly.body->as<node::App>()->fn->as<node::Lam>()->body->as<node::Let>();
  REQUIRE(let_node);
  CHECK(let_node->name == "sc_print");
  CHECK(pretty(let_node->bound).find("send") == std::string::npos);

  CHECK_THROWS_AS(plug(fixtures::evil(), fixtures::S()), LanguageError);
}

TEST_CASE("round trip: parse after pretty is the identity on arbitrary trees") {
  for (Language lang : {Language::Source, Language::Target}) {
    std::mt19937_64 rng(lang == Language::Source ? 11 : 12);
    for (int i = 0; i < 2000; ++i) {
      ExprPtr e = arbitrary(rng, 1 + i % 6, lang);
      std::string text = pretty(e);
      INFO(text);
      ExprPtr back = parse_expr(text, lang);
      REQUIRE(equal(back, e));
      CHECK(pretty(back) == text);
    }
  }
}

TEST_CASE("round trip: generated programs and contexts") {
  for (std::uint64_t seed = 0; seed < 300; ++seed) {
    GenConfig cfg{seed, 1 + seed % 6};
    for (Language lang : {Language::Source, Language::Target}) {
      Program p = gen_program(cfg, lang);
      INFO(pretty(p));
      Program back = parse_program(pretty(p), lang);
      REQUIRE(equal(back.body, p.body));
      CHECK(equal(plug(identity_context(lang), p).body, p.body));

      Context c = gen_context(cfg, lang, GenType::Fn);
      Context cback = parse_context(pretty(c), lang);
      CHECK(hole_count(cback.body) == 1);
      CHECK(equal(cback.body, c.body));
    }
  }
}
