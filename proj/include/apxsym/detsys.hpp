#pragma once

#include "apxsym/approx.hpp"
#include "apxsym/problem.hpp"

#include <string>
#include <vector>

namespace apxsym {

enum class SymmetryMode { Lie, QConditional };

const char* to_string(SymmetryMode m);

enum class RuleSource { Equation, Isc, IscConsequence };

struct RewriteRule {
    Expr lhs; // jet coordinate
    Expr rhs;
    RuleSource source = RuleSource::Equation;
    int eps_order = 0;
};

// The manifold M as a triangular rewrite system: once closed, no left-hand
// coordinate occurs in any right-hand side, so a single simultaneous
// substitution reaches the fixed point.
struct SubstitutionSet {
    SymmetryMode mode = SymmetryMode::Lie;
    std::vector<RewriteRule> rules;

    Expr apply(const Expr& e) const;
    Bindings bindings() const;
};

struct DeterminingEquation {
    int eps_order = 0;
    Expr monomial; // source monomial in the surviving jet coordinates
    Expr equation; // = 0
};

struct DeterminingSystem {
    std::vector<DeterminingEquation> equations;
};

// Xi^(r)(Delta) with dependent variables expanded and graded in eps up to p;
// not yet restricted to the manifold. One GradedExpr per equation.
std::vector<GradedExpr> invariance_condition(const ProblemSpec& spec, const Generator& g);

// Rules solving each graded equation component for its leading coordinate
// (the highest x-derivative of u[k]); in Q-conditional mode the invariant
// surface condition and its differential consequences up to total order r-1
// eliminate all t-derivatives first. The generator must be lifted and, in
// Q-conditional mode, gauged (leading xi component 1 at order 0, 0 above).
SubstitutionSet manifold_substitutions(const ProblemSpec& spec, const Generator& g,
                                       SymmetryMode mode);

// Restricts the graded condition, clears denominators, and collects one
// equation per (eps order, monomial) over the surviving jet coordinates plus
// the corrections u[k], k >= 1.
DeterminingSystem extract_determining(const std::vector<GradedExpr>& cond,
                                      const SubstitutionSet& subs);

// The graded invariant surface conditions Q_(k) of the lifted generator with
// the dependent variables expanded (one GradedExpr per dependent variable).
std::vector<GradedExpr> invariant_surface_condition(const ProblemSpec& spec,
                                                    const Generator& g);

bool is_collectable_jet(const Expr& e);

} // namespace apxsym
