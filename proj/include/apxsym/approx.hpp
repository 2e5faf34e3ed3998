#pragma once

#include "apxsym/expr.hpp"
#include "apxsym/jet.hpp"

#include <vector>

namespace apxsym {

// Coefficient list [e0, e1, ..., ep] with each entry free of the small
// parameter; reassembly recovers the source modulo O(eps^(p+1)).
struct GradedExpr {
    std::vector<Expr> coeffs;

    int order() const { return static_cast<int>(coeffs.size()) - 1; }
    const Expr& at(int k) const { return coeffs.at(static_cast<std::size_t>(k)); }
    Expr reassemble(const Expr& eps) const;
};

// Drops every monomial carrying an eps power above p.
Expr truncate_eps(const Expr& e, const Expr& eps, int p);

// Replaces each unexpanded dependent variable (and derivative) by its
// graded expansion sum_k eps^k u[k], truncated past eps^p.
Expr expand_dependent(const Expr& e, const JetSpace& space);

// Coefficient extraction by collection in eps. Throws StructureError when e
// carries an eps power above p (missed truncation upstream) or is not
// polynomial in eps.
GradedExpr grade(const Expr& e, const JetSpace& space);

// The recursion operator: linear, product-rule compliant, with
//   R[u[k]] = (k+1) u[k+1]
//   R[f_k(x, u[0])] = f_(k+1)(x, u[0]) + sum_i d f_k / d u[0]i * u[1]i.
// The family shift applies to unknown-function atoms carrying an order
// index; expressions without them get only the gradient terms.
Expr recursion_apply(const Expr& e, const JetSpace& space);

// R without the family shift; the explicit seed contribution is added
// separately by lift_generator.
Expr recursion_gradient(const Expr& e, const JetSpace& space);

// Populates the tilde components:
//   tilde_0 = seed_0,
//   tilde_(k+1) = seed_(k+1) + R_grad[tilde_k] / (k+1).
// At p = 1 this is exactly the first order approximate generator.
Generator lift_generator(Generator g, const JetSpace& space);

} // namespace apxsym
