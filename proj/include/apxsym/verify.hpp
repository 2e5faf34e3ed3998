#pragma once

#include "apxsym/detsys.hpp"
#include "apxsym/eval.hpp"
#include "apxsym/problem.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace apxsym {

struct VerifyOptions {
    int samples = 100;
    double tolerance = 1e-9;
    std::uint64_t seed = 0x5eed;
};

struct OrderVerdict {
    int eps_order = 0;
    ZeroVerdict verdict = ZeroVerdict::ProvedZero;
    std::optional<ZeroWitness> witness;
    double max_abs = 0.0;
    int samples_used = 0;
};

struct VerificationReport {
    std::string subject;
    std::string mode;
    std::vector<OrderVerdict> orders;
    bool passed = false;
    double tolerance = 1e-9;
    int samples = 0;
    std::uint64_t seed = 0;
    double elapsed_seconds = 0.0; // diagnostics only, never written to reports
};

// Builds the generic restricted invariance condition (cached per equation
// set and mode), substitutes the fixture's seed expressions for the generic
// infinitesimals, applies the case setup, and tests zero per epsilon order.
VerificationReport check_symmetry(const ProblemSpec& spec, const GeneratorSet& set,
                                  SymmetryMode mode, const VerifyOptions& opts = {});

// Checks that a representation satisfies the graded invariant surface
// conditions of its generator set with the reduced-system unknowns opaque.
// These are exact identities: every order must be proved zero.
VerificationReport check_isc(const ProblemSpec& spec, const Representation& rep,
                             const VerifyOptions& opts = {});

// Substitutes the closed-form candidate into the graded equation and tests
// each coefficient under the case constraint; additionally checks that the
// leading part solves the unperturbed (eps = 0) equation.
VerificationReport verify_solution(const ProblemSpec& spec, const SolutionCandidate& sol,
                                   const VerifyOptions& opts = {});

struct ConvergenceRow {
    double eps = 0.0;
    double max_residual = 0.0;
};

struct ConvergenceReport {
    std::string subject;
    std::vector<ConvergenceRow> rows;
    double fitted_order = 0.0; // log-ratio slope between consecutive rows
    double elapsed_seconds = 0.0;
};

// Evaluates the untruncated equation at u0 + eps*u1 on the figure's grid for
// each eps and reports the largest |residual|.
ConvergenceReport epsilon_convergence(const ProblemSpec& spec, const FigureSpec& fig,
                                      const std::vector<double>& eps_values);

// Full-solution surface u0 + eps*u1 with the figure's parameter values bound.
struct FigureSurface {
    Expr expr;          // symbolic, after case setup substitution
    EvalContext context; // parameter bindings (everything except t, x)
};

FigureSurface figure_surface(const ProblemSpec& spec, const FigureSpec& fig);

// One seeded single-occurrence parameter perturbation of a generator set.
struct Mutation {
    std::string set_name;
    std::string component; // e.g. "eta[1][u]"
    std::string param;
    int occurrence = 0;
    GeneratorSet mutated;
};

// Deterministic list of mutations that must break the symmetry: only
// parameter occurrences whose value is pinned by cross-component correlation
// or by the equation itself are eligible.
std::vector<Mutation> enumerate_mutations(const ProblemSpec& spec,
                                          const GeneratorSet& set, std::uint64_t seed,
                                          int count);

ZeroOptions zero_options_for(const CaseSetup& setup, const VerifyOptions& opts);

// Map from the generic seed atoms (xi<k><var>, eta<k><dep>) to a concrete
// generator's seed expressions; validates the gauge components.
Bindings generic_seed_bindings(const ProblemSpec& spec, const Generator& generic,
                               const Generator& concrete, int gauge_index);

} // namespace apxsym
