#pragma once

#include "apxsym/expr.hpp"
#include "apxsym/jet.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace apxsym {

// Case constraint, parameter definitions and sampling guards attached to a
// generator set or solution candidate.
struct CaseSetup {
    std::vector<std::pair<Expr, Expr>> constraints; // lhs = rhs
    std::optional<std::string> eliminate;           // parameter solved from
                                                    // the first constraint
    std::vector<std::pair<std::string, Expr>> defines; // theta = sqrt(...), ...
    std::map<std::string, std::pair<Rational, Rational>> domains;
    std::vector<Expr> excludes;

    bool empty() const {
        return constraints.empty() && !eliminate && defines.empty() &&
               domains.empty() && excludes.empty();
    }
};

struct GeneratorSet {
    std::string name;
    CaseSetup setup;
    // component expressions by (order k, variable name); missing entries are 0
    std::map<std::pair<int, std::string>, Expr> xi;
    std::map<std::pair<int, std::string>, Expr> eta;
    std::vector<std::pair<std::string, std::optional<int>>> unknowns; // opaque funcs
};

struct Representation {
    std::string name;
    std::string generator; // name of the generator set it belongs to
    CaseSetup setup;
    std::vector<std::pair<int, Expr>> components; // u[k] = expr
    std::vector<std::pair<std::string, std::optional<int>>> unknowns;
};

struct SolutionCandidate {
    std::string name;
    CaseSetup setup;
    std::vector<std::pair<int, Expr>> components; // u[k] = expr, closed form
};

struct FigureSpec {
    std::string name;
    std::string solution;
    std::vector<std::pair<std::string, Rational>> values; // parameter settings
    Rational t_lo{0}, t_hi{3};
    int t_steps = 61;
    Rational x_lo{0}, x_hi{5};
    int x_steps = 101;
};

struct ProblemSpec {
    JetSpace space;
    std::vector<Expr> equations; // Expr = 0, over unexpanded variables
    std::vector<std::string> params;
    std::vector<GeneratorSet> generators;
    std::vector<Representation> representations;
    std::vector<SolutionCandidate> solutions;
    std::vector<FigureSpec> figures;

    int equation_order() const; // r, derived from the equations
    const GeneratorSet& generator_set(const std::string& name) const;
    const Representation& representation(const std::string& name) const;
    const SolutionCandidate& solution(const std::string& name) const;
    const FigureSpec& figure(const std::string& name) const;

    // Builds the jet-module Generator (dense order x component tables) from
    // a named fixture set.
    Generator build_generator(const GeneratorSet& set) const;

    // Bindings realizing the case setup: eliminated parameter and defines.
    Bindings setup_bindings(const CaseSetup& setup) const;

    bool structurally_equal(const ProblemSpec& other) const;
};

// Solves constraint lhs - rhs = 0 linearly for the named parameter.
Expr solve_linear(const Expr& lhs_minus_rhs, const Expr& target);

} // namespace apxsym
