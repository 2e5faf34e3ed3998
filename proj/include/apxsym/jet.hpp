#pragma once

#include "apxsym/expr.hpp"

#include <map>
#include <string>
#include <vector>

namespace apxsym {

// Bookkeeping for one problem's variables: independent variables, dependent
// variables with their epsilon grading up to order p.
struct JetSpace {
    std::vector<std::string> indep_names;
    std::vector<std::string> dep_names;
    std::string small_name = "eps";
    int order = 1; // p

    int n() const { return static_cast<int>(indep_names.size()); }
    int m() const { return static_cast<int>(dep_names.size()); }

    Expr indep_var(int i) const { return indep(indep_names[i], i); }
    Expr small() const { return parameter(small_name); }

    // u[k]_sigma; order = JetKey::kUnexpanded gives the bare dependent
    // variable used in problem statements.
    Expr jet_coord(int dep, int k, const std::vector<int>& sigma_counts = {}) const;
    Expr promote(const Expr& jet_atom, int i) const; // sigma += e_i
};

// D/Dx_i over the graded jet coordinates: the partial with respect to x_i
// plus chain-rule promotion of every jet coordinate present, at every
// epsilon order.
Expr total_derivative(const Expr& e, int i, const JetSpace& space);

// Seed infinitesimals xi_(k)i, eta_(k)alpha depending on (x, u_(0)) only;
// the epsilon corrections enter through the recursion-operator lift.
struct Generator {
    std::vector<std::vector<Expr>> xi;  // [k][i]
    std::vector<std::vector<Expr>> eta; // [k][alpha]
    // tilde components populated by lift_generator
    std::vector<std::vector<Expr>> xi_tilde;
    std::vector<std::vector<Expr>> eta_tilde;

    bool lifted() const { return !xi_tilde.empty(); }
};

// Generator with generic (unknown-function) seeds xi<k><var>(x, u_(0)),
// eta<k><dep>(x, u_(0)). In q-conditional gauge, the component of
// gauge_index is 1 at order 0 and 0 above.
Generator generic_generator(const JetSpace& space, int gauge_index = -1);

void validate_seeds(const Generator& g, const JetSpace& space);

struct ProlongedGenerator {
    // epsilon-polynomial combined components: xi_hat[i], eta_hat[alpha]
    std::vector<Expr> xi_hat;
    std::vector<Expr> eta_hat;
    // prolongation coefficient for (dep alpha, sigma); sigma as per-variable
    // counts, 1 <= |sigma| <= r
    std::map<std::pair<int, std::vector<int>>, Expr> coeffs;

    const Expr& coeff(int alpha, const std::vector<int>& sigma) const;
};

// Builds the prolongation coefficients up to total order r by the recursive
// rule coeff(sigma + e_i) = D_i coeff(sigma)
//   - sum_j D_i(xi_hat_j) * (sum_k eps^k u[k]_(sigma+e_j)),
// dropping O(eps^(p+1)) after every product. Requires a lifted generator.
ProlongedGenerator prolong(const Generator& g, int r, const JetSpace& space);

} // namespace apxsym
