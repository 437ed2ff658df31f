#include "catch_amalgamated.hpp"
#include "fixtures.hpp"

using namespace stv;

namespace {

Context target_ctx(const std::string& text) { return parse_context(text, Language::Target); }

ExprPtr strip_sends(const ExprPtr& e) {
  if (auto p = e->as<node::Prim>(); p && p->op == "send") return strip_sends(p->arg);
  return std::visit(
      [&](const auto& n) -> ExprPtr {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, node::Lam>) return ast::lam(n.param, strip_sends(n.body));
        else if constexpr (std::is_same_v<T, node::App>) return ast::app(strip_sends(n.fn), strip_sends(n.arg));
        else if constexpr (std::is_same_v<T, node::If>)
          return ast::if_(n.op, strip_sends(n.lhs), strip_sends(n.rhs), strip_sends(n.then_branch),
                          strip_sends(n.else_branch));
        else if constexpr (std::is_same_v<T, node::Seq>) return ast::seq(strip_sends(n.first), strip_sends(n.second));
        else if constexpr (std::is_same_v<T, node::Let>) return ast::let(n.name, strip_sends(n.bound), strip_sends(n.body));
        else if constexpr (std::is_same_v<T, node::Prim>) return ast::prim(n.op, strip_sends(n.arg));
        else return e;
      },
      e->node);
}

void check_verdict_invariants(const Verdict& v) {
  if (auto r = std::get_if<Reject>(&v)) {
    Alphabet sigma = default_alphabet();
    collect_actions(r->h_target, sigma);
    CHECK(member(r->witness, prefix_close(to_automaton(r->h_target, sigma))));
    if (r->reason.kind == RejectKind::AlphabetEscape) {
      CHECK_FALSE(r->reason.escaped.empty());
      for (const auto& a : r->reason.escaped) CHECK_FALSE(source_alphabet().count(a));
    }
  } else {
    const auto& a = std::get<Accept>(v);
    Alphabet sigma = default_alphabet();
    collect_actions(a.h_target, sigma);
    collect_actions(a.h_source, sigma);
    CHECK(includes(prefix_close(to_automaton(a.h_source, sigma)), prefix_close(to_automaton(a.h_target, sigma))).holds);
    CHECK(a.source_context.language == Language::Source);
  }
}

} // namespace

TEST_CASE("source_alphabet") {
  CHECK(source_alphabet() == Alphabet{"display"});
  CHECK_FALSE(source_alphabet().count("send"));
  CHECK(source_alphabet().count("display"));
}

TEST_CASE("back_translate") {
  auto friendly = back_translate(fixtures::friendly());
  REQUIRE(std::holds_alternative<Context>(friendly));
  const auto& c = std::get<Context>(friendly);
  CHECK(c.language == Language::Source);
  CHECK(pretty(c) == "(fun i -> let print_impl = fun x -> print x in [.] i) 42");
  CHECK(equal(c.body, fixtures::context("friendly.sctx").body));

  auto evil = back_translate(fixtures::evil());
  REQUIRE(std::holds_alternative<BackTranslationFailure>(evil));
  const auto& f = std::get<BackTranslationFailure>(evil);
  CHECK(pretty(f.node) == "send x");
  CHECK(f.action == std::optional<std::string>("send"));

  auto id = back_translate(target_ctx("[.]"));
  REQUIRE(std::holds_alternative<Context>(id));
  CHECK(std::get<Context>(id).body->is<node::Hole>());

  CHECK_THROWS_AS(back_translate(fixtures::context("friendly.sctx")), LanguageError);
}

TEST_CASE("back_translate: calls in the context and name clashes") {
  auto own = back_translate(target_ctx("let sc_print = fun x -> display x in sc_print 1; [.]"));
  REQUIRE(std::holds_alternative<Context>(own));
  CHECK(pretty(std::get<Context>(own)) == "let print_impl = fun x -> print x in print_impl 1; [.]");

  auto clash = back_translate(target_ctx("let print_impl = 3 in let sc_print = fun x -> display print_impl in [.]"));
  REQUIRE(std::holds_alternative<Context>(clash));
  CHECK(pretty(std::get<Context>(clash)) ==
        "let print_impl = 3 in let print_impl1 = fun x -> print print_impl in [.]");

  auto shadow = back_translate(target_ctx("(fun sc_print -> [.]) (fun x -> x)"));
  REQUIRE(std::holds_alternative<Context>(shadow));
  CHECK(pretty(std::get<Context>(shadow)) == "(fun print_impl -> [.]) (fun x -> x)");

  auto unbound = back_translate(target_ctx("sc_out 1; [.]"));
  REQUIRE(std::holds_alternative<BackTranslationFailure>(unbound));
  CHECK_FALSE(std::get<BackTranslationFailure>(unbound).action);
}

TEST_CASE("validate: evil context is rejected") {
  Verdict v = validate(fixtures::S(), {}, fixtures::evil());
  REQUIRE(std::holds_alternative<Reject>(v));
  const auto& r = std::get<Reject>(v);
  CHECK(r.witness == Word{"display", "send"});
  CHECK(r.reason.kind == RejectKind::AlphabetEscape);
  CHECK(r.reason.escaped == Alphabet{"send"});
  CHECK(to_string(r.h_target) == "(display . send) + eps");
  check_verdict_invariants(v);
}

TEST_CASE("validate: friendly context is accepted") {
  Verdict v = validate(fixtures::S(), {}, fixtures::friendly());
  REQUIRE(std::holds_alternative<Accept>(v));
  const auto& a = std::get<Accept>(v);
  CHECK(to_string(a.h_target) == "display + eps");
  CHECK(to_string(a.h_source) == "display + eps");
  CHECK(pretty(a.source_context) == "(fun i -> let print_impl = fun x -> print x in [.] i) 42");
  check_verdict_invariants(v);
}

TEST_CASE("validate: optimized programs") {
  for (const char* file : {"S_prime.src", "S_prime_observable.src"}) {
    Program p = fixtures::source(file);
    Verdict v = validate(p, {"factor_common_prefix"}, fixtures::friendly());
    REQUIRE(std::holds_alternative<Accept>(v));
    const auto& a = std::get<Accept>(v);
    CHECK(equiv(a.h_target, a.h_source));
    check_verdict_invariants(v);
  }
}

TEST_CASE("validate: inclusion failure") {
  // The syscall prints twice; the canonical source context prints once.
  auto ctx = target_ctx("(fun i -> let sc_print = fun x -> (display x; display x) in [.] i) 42");
  Verdict v = validate(fixtures::S(), {}, ctx);
  REQUIRE(std::holds_alternative<Reject>(v));
  const auto& r = std::get<Reject>(v);
  CHECK(r.reason.kind == RejectKind::InclusionFailure);
  CHECK(r.witness == Word{"display", "display"});
  check_verdict_invariants(v);

  // A silent syscall is fine: fewer observables than the source.
  auto silent = target_ctx("(fun i -> let sc_print = fun x -> x in [.] i) 42");
  CHECK(accepted(validate(fixtures::S(), {}, silent)));
}

TEST_CASE("validate: back-translation failure without an escaping action") {
  auto ctx = target_ctx("(fun i -> let sc_print = fun x -> display x in let unused = fun y -> send y in [.] i) 42");
  Verdict v = validate(fixtures::S(), {}, ctx);
  REQUIRE(std::holds_alternative<Reject>(v));
  const auto& r = std::get<Reject>(v);
  CHECK(r.reason.kind == RejectKind::BackTranslationFailure);
  CHECK(r.witness.empty());
  CHECK(to_string(r.h_target) == "display + eps");
  check_verdict_invariants(v);
}

TEST_CASE("validate: statically rejected although no run sends") {
  Context ctx = fixtures::context("dead_send.tctx");
  for (std::int64_t n = -20; n <= 20; ++n) {
    auto probe = parse_context("(fun i -> let sc_print = fun x -> display x in (if 0 >= 1 then send 0 else 0); [.] i) " +
                                   (n < 0 ? "(" + std::to_string(n) + ")" : std::to_string(n)),
                               Language::Target);
    for (const auto& a : run(plug(probe, compile(fixtures::S()).target)).trace) CHECK(a.name != "send");
  }
  CHECK(erase_payloads(run(plug(ctx, compile(fixtures::S()).target)).trace) == Word{"display"});
  Verdict v = validate(fixtures::S(), {}, ctx);
  REQUIRE(std::holds_alternative<Reject>(v));
  CHECK(std::get<Reject>(v).witness == Word{"send"});
  check_verdict_invariants(v);
}

TEST_CASE("validate: tool errors are exceptions, not verdicts") {
  CHECK_THROWS_AS(validate(fixtures::S(), {}, target_ctx("[.] (fun x -> x)")), TypeError);
  CHECK_THROWS_AS(validate(fixtures::S(), {"unroll"}, fixtures::friendly()), UsageError);
  CHECK_THROWS_AS(validate(fixtures::T(), {}, fixtures::friendly()), LanguageError);
}

TEST_CASE("validate: verdict invariants and send removal on generated pairs") {
  std::size_t accepts = 0, rejects = 0, flips = 0;
  for (std::uint64_t seed = 0; seed < 300; ++seed) {
    GenConfig cfg{seed, 4};
    GenType shape = gen_type(cfg);
    Program p{Language::Source, gen_expr(cfg, Language::Source, shape)};
    Context ctx = gen_context(cfg, Language::Target, shape);
    Context stripped{Language::Target, strip_sends(ctx.body)};
    INFO(pretty(p) << "  in  " << pretty(ctx));
    Verdict v = validate(p, {}, ctx);
    Verdict w = validate(p, {}, stripped);
    check_verdict_invariants(v);
    check_verdict_invariants(w);
    accepted(v) ? ++accepts : ++rejects;
    if (accepted(v) && !accepted(w)) ++flips;
  }
  CHECK(flips == 0);
  CHECK(accepts > 0);
  CHECK(rejects > 0);
}

TEST_CASE("soundness_fuzz") {
  auto report = soundness_fuzz(100, 17);
  CHECK(report.cases == 100);
  CHECK(report.violations.empty());
  CHECK(report.terminated + report.diverged == 100);
  CHECK(report.terminated > 0);

  CHECK_FALSE(check_soundness(parse_program("0", Language::Source)));
  CHECK_THROWS_AS(soundness_fuzz(0, 1), UsageError);

  // Reproducible by seed.
  CHECK(pretty(fuzz_case(5, 3)) == pretty(fuzz_case(5, 3)));
}

TEST_CASE("check_soundness reports a wrong history") {
  // Ill-typed terms surface as violations, not crashes.
  CHECK(check_soundness(parse_program("1 2", Language::Source)));
}
