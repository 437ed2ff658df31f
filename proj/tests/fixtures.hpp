#pragma once

#include <string>

#include "stv/cli.hpp"
#include "stv/stv.hpp"

namespace fixtures {

inline std::string path(const std::string& name) { return std::string(STV_FIXTURES) + "/" + name; }

inline stv::Program source(const std::string& name) { return stv::cli::load_program(path(name)); }
inline stv::Context context(const std::string& name) { return stv::cli::load_context(path(name)); }

inline stv::Program S() { return source("S.src"); }
inline stv::Program T() { return stv::cli::load_program(path("T.trg")); }
inline stv::Program S_prime() { return source("S_prime.src"); }
inline stv::Context evil() { return context("evil.tctx"); }
inline stv::Context friendly() { return context("friendly.tctx"); }

} // namespace fixtures
