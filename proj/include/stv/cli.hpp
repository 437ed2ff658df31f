#pragma once

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "stv/stv.hpp"

namespace stv::cli {

using json = nlohmann::json;

enum ExitCode : int { ok = 0, rejected = 1, tool_error = 2 };

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Language from the file extension unless given explicitly.
inline Language language_of(const std::string& path, const std::string& forced) {
  if (forced == "source") return Language::Source;
  if (forced == "target") return Language::Target;
  if (!forced.empty()) throw UsageError("--lang must be 'source' or 'target'");
  auto ext = std::filesystem::path(path).extension().string();
  if (ext == ".src" || ext == ".sctx") return Language::Source;
  if (ext == ".trg" || ext == ".tctx") return Language::Target;
  throw UsageError("cannot tell the language of '" + path + "'; use --lang");
}

inline Program load_program(const std::string& path, const std::string& forced = {}) {
  return parse_program(read_file(path), language_of(path, forced));
}

inline Context load_context(const std::string& path) {
  return parse_context(read_file(path), language_of(path, {}));
}

inline json word_json(const Word& w) { return json(w); }

inline std::string word_text(const Word& w) {
  if (w.empty()) return "eps";
  std::string s;
  for (const auto& a : w) s += (s.empty() ? "" : " . ") + a;
  return s;
}

// Verdict document: verdict, witness, reason, h_target, h_source.
inline json verdict_json(const Verdict& v) {
  if (auto a = std::get_if<Accept>(&v)) {
    return json{{"verdict", "accept"},
                {"witness", json::array()},
                {"reason", "every trace prefix has a source counterpart"},
                {"h_target", to_string(a->h_target)},
                {"h_source", to_string(a->h_source)}};
  }
  const auto& r = std::get<Reject>(v);
  return json{{"verdict", "reject"},
              {"witness", word_json(r.witness)},
              {"reason", std::string(to_string(r.reason.kind)) + ": " + r.reason.detail},
              {"h_target", to_string(r.h_target)},
              {"h_source", nullptr}};
}

inline json error_json(const std::string& msg) {
  return json{{"verdict", "error"}, {"witness", json::array()}, {"reason", msg}, {"h_target", ""}, {"h_source", nullptr}};
}

struct Options {
  bool json = false;
  std::string input;
  std::string output;
  std::string ctx;
  std::string lang;
  std::vector<std::string> passes;
  std::size_t fuel = default_fuel;
  std::string h1, h2;
  std::vector<std::string> actions;
  std::size_t n = 0;
  std::uint64_t seed = 0;
  std::size_t depth = 4;
};

inline Hist load_history(const std::string& arg) {
  std::error_code ec;
  if (std::filesystem::is_regular_file(arg, ec)) return parse_history(read_file(arg));
  return parse_history(arg);
}

inline int do_compile(const Options& o, std::ostream& out) {
  CompilationUnit unit = compile(load_program(o.input, o.lang.empty() ? "source" : o.lang), o.passes);
  std::string text = pretty(unit.target) + "\n";
  if (!o.output.empty()) {
    std::ofstream f(o.output, std::ios::binary);
    if (!f) throw Error("cannot write '" + o.output + "'");
    f << text;
  }
  if (o.json) {
    out << json{{"target", pretty(unit.target)}, {"passes", unit.applied_passes}}.dump() << "\n";
  } else if (o.output.empty()) {
    out << text;
  }
  return ok;
}

inline Program load_plugged(const Options& o) {
  Program p = load_program(o.input, o.lang);
  if (o.ctx.empty()) return p;
  return plug(load_context(o.ctx), p);
}

inline int do_infer(const Options& o, std::ostream& out) {
  Typing t = infer(load_plugged(o));
  if (o.json) out << json{{"history", to_string(t.effect)}, {"type", to_string(t.type)}}.dump() << "\n";
  else out << to_string(t.effect) << "\n";
  return ok;
}

inline int do_trace(const Options& o, std::ostream& out) {
  RunResult r = run(load_plugged(o), o.fuel);
  if (o.json) {
    json actions = json::array();
    for (const auto& a : r.trace) actions.push_back(to_string(a));
    out << json{{"trace", actions},
                {"diverged", r.diverged()},
                {"value", r.diverged() ? json(nullptr) : json(to_string(r.value()))}}
               .dump()
        << "\n";
  } else {
    for (const auto& a : r.trace) out << to_string(a) << "\n";
  }
  return ok;
}

inline int do_equiv(const Options& o, std::ostream& out) {
  Hist h1 = load_history(o.h1);
  Hist h2 = load_history(o.h2);
  Alphabet sigma = default_alphabet();
  sigma.insert(o.actions.begin(), o.actions.end());
  auto r = compare_languages(h1, h2, sigma);
  if (o.json) {
    json doc{{"equivalent", r.equivalent},
             {"h1", to_string(normalize(h1))},
             {"h2", to_string(normalize(h2))},
             {"witness", r.witness ? word_json(*r.witness) : json(nullptr)}};
    if (r.witness) doc["witness_in"] = r.witness_in_first ? "h1" : "h2";
    out << doc.dump() << "\n";
  } else if (r.equivalent) {
    out << "equivalent\n";
  } else {
    out << "not equivalent: " << word_text(*r.witness) << " is only in " << (r.witness_in_first ? "h1" : "h2")
        << "\n";
  }
  return r.equivalent ? ok : rejected;
}

inline int do_validate(const Options& o, std::ostream& out) {
  Program p = load_program(o.input, o.lang.empty() ? "source" : o.lang);
  Context ctx = load_context(o.ctx);
  Verdict v = validate(p, o.passes, ctx);
  if (o.json) {
    out << verdict_json(v).dump() << "\n";
  } else if (auto a = std::get_if<Accept>(&v)) {
    out << "accept\n"
        << "  h_target: " << to_string(a->h_target) << "\n"
        << "  h_source: " << to_string(a->h_source) << "\n"
        << "  source context: " << pretty(a->source_context) << "\n";
  } else {
    const auto& r = std::get<Reject>(v);
    out << "reject\n"
        << "  witness: " << word_text(r.witness) << "\n"
        << "  reason: " << to_string(r.reason.kind) << ": " << r.reason.detail << "\n"
        << "  h_target: " << to_string(r.h_target) << "\n"
        << "  note: histories over-approximate behaviour, so a rejection may be a false negative\n";
  }
  return accepted(v) ? ok : rejected;
}

inline int do_fuzz(const Options& o, std::ostream& out) {
  FuzzReport r = soundness_fuzz(o.n, o.seed, o.depth);
  if (o.json) {
    json violations = json::array();
    for (const auto& v : r.violations) violations.push_back({{"case", v.index}, {"term", v.term}, {"detail", v.detail}});
    out << json{{"cases", r.cases},
                {"seed", r.seed},
                {"terminated", r.terminated},
                {"diverged", r.diverged},
                {"violations", violations}}
               .dump()
        << "\n";
  } else {
    out << r.cases << " cases, " << r.terminated << " terminated, " << r.violations.size() << " violations\n";
    for (const auto& v : r.violations) out << "  case " << v.index << ": " << v.detail << "\n    " << v.term << "\n";
  }
  return r.violations.empty() ? ok : rejected;
}

// Entry point; returns the process exit code.
inline int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Load-time secure translation validation"};
  app.require_subcommand(1);
  Options o;

  auto* compile_cmd = app.add_subcommand("compile", "Compile a source program");
  compile_cmd->add_option("input", o.input, "Source program (.src)")->required();
  compile_cmd->add_option("-o,--output", o.output, "Write the target program here");
  compile_cmd->add_option("--pass", o.passes, "Optimization pass (factor-common-prefix); repeatable");

  auto* infer_cmd = app.add_subcommand("infer", "Print the history expression of a program");
  infer_cmd->add_option("input", o.input, "Program (.src or .trg)")->required();
  infer_cmd->add_option("--ctx", o.ctx, "Context to plug the program into");

  auto* trace_cmd = app.add_subcommand("trace", "Run a program and print its trace");
  trace_cmd->add_option("input", o.input, "Program (.src or .trg)")->required();
  trace_cmd->add_option("--ctx", o.ctx, "Context to plug the program into");
  trace_cmd->add_option("--fuel", o.fuel, "Evaluation step budget");

  auto* equiv_cmd = app.add_subcommand("equiv", "Decide trace equivalence of two history expressions");
  equiv_cmd->add_option("h1", o.h1, "History expression or file")->required();
  equiv_cmd->add_option("h2", o.h2, "History expression or file")->required();
  equiv_cmd->add_option("--action", o.actions, "Declare an extra action; repeatable");

  auto* validate_cmd = app.add_subcommand("validate", "Check a program/context pair");
  validate_cmd->add_option("input", o.input, "Source program (.src)")->required();
  validate_cmd->add_option("--ctx", o.ctx, "Target context (.tctx)")->required();
  validate_cmd->add_option("--pass", o.passes, "Optimization pass applied after translation; repeatable");

  auto* fuzz_cmd = app.add_subcommand("fuzz", "Cross-check the analysis against the interpreter");
  fuzz_cmd->add_option("--n", o.n, "Number of generated cases")->required();
  fuzz_cmd->add_option("--seed", o.seed, "Generator seed");
  fuzz_cmd->add_option("--depth", o.depth, "Maximum generated depth")->check(CLI::Range(1, 8));

  for (auto* cmd : {compile_cmd, infer_cmd, trace_cmd, equiv_cmd, validate_cmd, fuzz_cmd})
    cmd->add_flag("--json", o.json, "Emit a single JSON document");
  for (auto* cmd : {compile_cmd, infer_cmd, trace_cmd, validate_cmd})
    cmd->add_option("--lang", o.lang, "Language of the program: source or target");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(std::move(reversed));
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return tool_error;
  }

  try {
    if (*compile_cmd) return do_compile(o, out);
    if (*infer_cmd) return do_infer(o, out);
    if (*trace_cmd) return do_trace(o, out);
    if (*equiv_cmd) return do_equiv(o, out);
    if (*validate_cmd) return do_validate(o, out);
    if (*fuzz_cmd) return do_fuzz(o, out);
  } catch (const std::exception& e) {
    if (o.json && *validate_cmd) out << error_json(e.what()).dump() << "\n";
    err << "error: " << e.what() << "\n";
    return tool_error;
  }
  return tool_error;
}

inline int run_cli(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run_cli(args, out, err);
}

} // namespace stv::cli
