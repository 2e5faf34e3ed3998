#pragma once

#include "apxsym/expr.hpp"

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

namespace apxsym {

enum class FailurePolicy { Error, SkipSample };

// Bindings for every free atom of the expressions being evaluated. "pi" is
// bound automatically.
struct EvalContext {
    ExprMap<double> bindings;
    FailurePolicy policy = FailurePolicy::Error;

    void bind(const Expr& atom, double value) { bindings[atom] = value; }
};

struct EvalResult {
    double value = 0.0;
    double max_magnitude = 0.0; // largest |intermediate| seen
};

// IEEE double evaluation of a canonical expression. Throws EvalDomainError
// on kernel-domain violations (sqrt/log of a negative, hyp2f1 outside the
// covered region, near-zero denominators) and Error on unbound atoms.
EvalResult eval(const Expr& e, const EvalContext& ctx);

double eval_value(const Expr& e, const EvalContext& ctx);

// ---- grid emission ----

struct GridAxis {
    Expr var;      // independent-variable atom
    double lo = 0.0;
    double hi = 1.0;
    int steps = 2; // number of samples (>= 1), endpoints included
};

struct GridData {
    GridAxis row_axis; // varied slowest (t)
    GridAxis col_axis; // varied fastest (x)
    std::vector<std::string> column_names;
    std::vector<std::vector<double>> values; // [row*cols+col][expr]
};

GridData grid_eval(const std::vector<Expr>& exprs, const GridAxis& t_axis,
                   const GridAxis& x_axis, const EvalContext& base,
                   const std::vector<std::string>& names);

// Deterministic CSV: header "t,x,<name>..."; row-major over t then x; 17
// significant digits.
void grid_emit_csv(const GridData& g, std::ostream& os);

// Minimal heatmap of the first value column: one rectangle per sample on a
// linear color ramp. Presentation plumbing only.
void grid_emit_svg(const GridData& g, std::ostream& os);

std::string format_double(double v); // %.17g

// Bounded deterministic parallel map; thread count capped by APXSYM_THREADS.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

} // namespace apxsym
