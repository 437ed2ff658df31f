#include <filesystem>
#include <sstream>

#include "catch_amalgamated.hpp"
#include "fixtures.hpp"

using namespace stv;
using json = nlohmann::json;

namespace {

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome invoke(std::vector<std::string> args) {
  std::ostringstream out, err;
  int code = stv::cli::run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

std::string fx(const std::string& name) { return fixtures::path(name); }

} // namespace

TEST_CASE("cli validate: evil context, JSON verdict") {
  auto r = invoke({"validate", fx("S.src"), "--ctx", fx("evil.tctx"), "--json"});
  CHECK(r.code == 1);
  auto doc = json::parse(r.out);
  CHECK(doc["verdict"] == "reject");
  CHECK(doc["witness"] == json::array({"display", "send"}));
  CHECK(doc["h_target"] == "(display . send) + eps");
  CHECK(doc["h_source"].is_null());
  CHECK(doc["reason"].get<std::string>().rfind("alphabet_escape:", 0) == 0);
}

TEST_CASE("cli validate: friendly context") {
  auto r = invoke({"validate", fx("S.src"), "--ctx", fx("friendly.tctx"), "--json"});
  CHECK(r.code == 0);
  auto doc = json::parse(r.out);
  CHECK(doc["verdict"] == "accept");
  CHECK(doc["witness"] == json::array());
  CHECK(doc["h_target"] == "display + eps");
  CHECK(doc["h_source"] == "display + eps");

  auto text = invoke({"validate", fx("S.src"), "--ctx", fx("friendly.tctx")});
  CHECK(text.code == 0);
  CHECK(text.out.rfind("accept", 0) == 0);

  auto opt = invoke({"validate", fx("S_prime.src"), "--ctx", fx("friendly.tctx"), "--pass", "factor-common-prefix"});
  CHECK(opt.code == 0);
}

TEST_CASE("cli validate: tool errors") {
  auto bad = invoke({"validate", fx("S.src"), "--ctx", fx("identity.tctx"), "--pass", "unroll", "--json"});
  CHECK(bad.code == 2);
  CHECK(json::parse(bad.out)["verdict"] == "error");

  CHECK(invoke({"validate", fx("missing.src"), "--ctx", fx("evil.tctx")}).code == 2);
  CHECK(invoke({"validate", fx("S.src")}).code == 2);
  CHECK(invoke({}).code == 2);
  CHECK(invoke({"validate", fx("S.src"), "--ctx", fx("evil.tctx"), "--bogus"}).code == 2);
  CHECK(invoke({"--help"}).code == 0);
}

TEST_CASE("cli compile") {
  auto r = invoke({"compile", fx("S.src")});
  CHECK(r.code == 0);
  CHECK(r.out == pretty(fixtures::T()) + "\n");

  auto path = std::filesystem::temp_directory_path() / "stv_cli_test_out.trg";
  auto w = invoke({"compile", fx("S_prime.src"), "--pass", "factor-common-prefix", "-o", path.string()});
  CHECK(w.code == 0);
  CHECK(w.out.empty());
  CHECK(stv::cli::read_file(path.string()) == "fun i -> sc_print 0; if i >= 0 then 1 else 2\n");
  std::filesystem::remove(path);

  auto j = invoke({"compile", fx("S_prime.src"), "--pass", "factor_common_prefix", "--json"});
  auto doc = json::parse(j.out);
  CHECK(doc["passes"] == json::array({"factor_common_prefix"}));
}

TEST_CASE("cli infer and trace") {
  auto h = invoke({"infer", fx("T.trg"), "--ctx", fx("evil.tctx")});
  CHECK(h.code == 0);
  CHECK(h.out == "(display . send) + eps\n");

  auto t = invoke({"trace", fx("T.trg"), "--ctx", fx("evil.tctx")});
  CHECK(t.code == 0);
  CHECK(t.out == "display(42)\nsend(42)\n");

  auto j = json::parse(invoke({"trace", fx("T.trg"), "--ctx", fx("friendly.tctx"), "--json"}).out);
  CHECK(j["trace"] == json::array({"display(42)"}));
  CHECK(j["value"] == "42");
  CHECK(j["diverged"] == false);

  // A source program has no syscall to resolve in a target context.
  CHECK(invoke({"trace", fx("S.src"), "--ctx", fx("evil.tctx")}).code == 2);
}

TEST_CASE("cli equiv") {
  auto r = invoke({"equiv", "(display . x) + (display . y)", "display . (x + y)", "--action", "x", "--action", "y"});
  CHECK(r.code == 0);
  CHECK(r.out == "equivalent\n");

  auto undeclared = invoke({"equiv", "(display . x) + (display . y)", "display . (x + y)"});
  CHECK(undeclared.code == 2);

  auto differ = invoke({"equiv", "display . send", "send . display", "--json"});
  CHECK(differ.code == 1);
  auto doc = json::parse(differ.out);
  CHECK(doc["equivalent"] == false);
  CHECK(doc["witness"] == json::array({"display", "send"}));
}

TEST_CASE("cli fuzz") {
  auto r = invoke({"fuzz", "--n", "30", "--seed", "3", "--json"});
  CHECK(r.code == 0);
  auto doc = json::parse(r.out);
  CHECK(doc["cases"] == 30);
  CHECK(doc["violations"] == json::array());
  CHECK(invoke({"fuzz", "--n", "0"}).code == 2);
  CHECK(invoke({"fuzz", "--n", "5", "--depth", "99"}).code == 2);
}
