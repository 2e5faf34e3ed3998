#pragma once

#include "apxsym/problem.hpp"

#include <string>

namespace apxsym {

// Parses the .apx problem DSL (see docs/dsl.md). Throws ParseError with the
// line/column of the offending token, or Error for undeclared symbols.
ProblemSpec parse_problem(const std::string& text);

// Deterministic text whose reparse is structurally equal to the input.
std::string print_problem(const ProblemSpec& spec);

// Expression-level entry point for tests and report tooling: parses a single
// expression against an existing space and parameter list. With lenient set,
// undeclared applied identifiers become unknown functions and undeclared
// plain identifiers become parameters.
Expr parse_expression(const std::string& text, const JetSpace& space,
                      const std::vector<std::string>& params, bool lenient = true);

} // namespace apxsym
