#pragma once

#include "stv/compiler.hpp"
#include "stv/effects.hpp"
#include "stv/error.hpp"
#include "stv/history.hpp"
#include "stv/semantics.hpp"
#include "stv/syntax.hpp"
#include "stv/testgen.hpp"
#include "stv/validator.hpp"
