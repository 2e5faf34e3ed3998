#include "apxsym/jet.hpp"

#include "apxsym/approx.hpp"
#include "apxsym/error.hpp"

#include <algorithm>

namespace apxsym {

Expr JetSpace::jet_coord(int dep, int k, const std::vector<int>& sigma_counts) const {
    JetKey key;
    key.dep = dep_names.at(dep);
    key.dep_index = dep;
    key.order = k;
    for (std::size_t i = 0; i < sigma_counts.size(); ++i)
        if (sigma_counts[i] > 0)
            key.sigma.push_back({static_cast<int>(i), indep_names.at(i), sigma_counts[i]});
    return jet(key);
}

Expr JetSpace::promote(const Expr& jet_atom, int i) const {
    JetKey key = jet_atom->jet;
    key.sigma.push_back({i, indep_names.at(i), 1});
    return jet(key);
}

Expr total_derivative(const Expr& e, int i, const JetSpace& space) {
    Expr xi_var = space.indep_var(i);
    return apply_derivation_rules(
        e,
        [](const Expr&) { return number(0); },
        [&](const Expr& v) { return equal(v, xi_var) ? number(1) : number(0); },
        [&](const Expr& j) { return space.promote(j, i); },
        nullptr);
}

Generator generic_generator(const JetSpace& space, int gauge_index) {
    Generator g;
    int p = space.order;
    std::vector<Expr> args;
    for (int i = 0; i < space.n(); ++i) args.push_back(space.indep_var(i));
    for (int a = 0; a < space.m(); ++a) args.push_back(space.jet_coord(a, 0));
    g.xi.resize(p + 1, std::vector<Expr>(space.n()));
    g.eta.resize(p + 1, std::vector<Expr>(space.m()));
    for (int k = 0; k <= p; ++k) {
        for (int i = 0; i < space.n(); ++i) {
            if (i == gauge_index)
                g.xi[k][i] = number(k == 0 ? 1 : 0);
            else if (gauge_index >= 0 && i < gauge_index)
                g.xi[k][i] = number(0);
            else
                g.xi[k][i] = unknown("xi" + space.indep_names[i], k, args);
        }
        for (int a = 0; a < space.m(); ++a)
            g.eta[k][a] = unknown("eta" + space.dep_names[a], k, args);
    }
    return g;
}

void validate_seeds(const Generator& g, const JetSpace& space) {
    Expr eps = space.small();
    auto check = [&](const Expr& seed) {
        if (contains(seed, eps))
            throw StructureError("generator seed contains the small parameter");
        for_each_node(seed, [&](const Expr& node) {
            if (node->kind == Kind::Jet) {
                if (node->jet.order == JetKey::kUnexpanded)
                    throw StructureError("generator seed uses an unexpanded dependent variable");
                if (node->jet.order >= 1)
                    throw StructureError(
                        "generator seed depends on a correction u[k], k >= 1");
                if (!node->jet.sigma.empty())
                    throw StructureError("generator seed depends on a derivative coordinate");
            }
        });
    };
    for (const auto& row : g.xi)
        for (const auto& s : row) check(s);
    for (const auto& row : g.eta)
        for (const auto& s : row) check(s);
}

const Expr& ProlongedGenerator::coeff(int alpha, const std::vector<int>& sigma) const {
    auto it = coeffs.find({alpha, sigma});
    if (it == coeffs.end()) throw Error("prolongation coefficient not computed");
    return it->second;
}

ProlongedGenerator prolong(const Generator& g, int r, const JetSpace& space) {
    if (!g.lifted()) throw Error("prolong: generator must be lifted first");
    if (r < 1) throw Error("prolong: order must be >= 1");
    const int p = space.order;
    Expr eps = space.small();

    ProlongedGenerator pg;
    auto combine = [&](const std::vector<std::vector<Expr>>& tilde, int slot) {
        std::vector<Expr> terms;
        for (int k = 0; k < static_cast<int>(tilde.size()); ++k)
            terms.push_back(mul({pow(eps, Rational(k)), tilde[k][slot]}));
        return add(std::move(terms));
    };
    for (int i = 0; i < space.n(); ++i) pg.xi_hat.push_back(combine(g.xi_tilde, i));
    for (int a = 0; a < space.m(); ++a) pg.eta_hat.push_back(combine(g.eta_tilde, a));

    // expanded derivative coordinate sum_k eps^k u[k]_(sigma)
    auto graded_jet = [&](int alpha, const std::vector<int>& sigma) {
        std::vector<Expr> terms;
        for (int k = 0; k <= p; ++k)
            terms.push_back(mul({pow(eps, Rational(k)), space.jet_coord(alpha, k, sigma)}));
        return add(std::move(terms));
    };

    std::vector<Expr> dxi; // D_i applied to each xi_hat, cached
    dxi.resize(static_cast<std::size_t>(space.n()) * space.n());
    for (int i = 0; i < space.n(); ++i)
        for (int j = 0; j < space.n(); ++j)
            dxi[i * space.n() + j] =
                truncate_eps(total_derivative(pg.xi_hat[j], i, space), eps, p);

    for (int alpha = 0; alpha < space.m(); ++alpha) {
        // breadth-first over multi-indices along the canonical path: extend
        // sigma by the variable with the highest index first so each sigma is
        // produced exactly once (append i <= first nonzero slot).
        std::map<std::vector<int>, Expr> level;
        std::vector<int> zero(space.n(), 0);
        Expr base = pg.eta_hat[alpha];
        level[zero] = base;
        for (int ord = 0; ord < r; ++ord) {
            std::map<std::vector<int>, Expr> next;
            for (const auto& [sigma, coeff] : level) {
                int lead = 0;
                while (lead < space.n() && sigma[lead] == 0) ++lead;
                for (int i = 0; i <= std::min(lead, space.n() - 1); ++i) {
                    std::vector<int> ns = sigma;
                    ns[i] += 1;
                    std::vector<Expr> terms;
                    terms.push_back(total_derivative(coeff, i, space));
                    for (int j = 0; j < space.n(); ++j) {
                        std::vector<int> sj = sigma;
                        sj[j] += 1;
                        terms.push_back(neg(mul({dxi[i * space.n() + j], graded_jet(alpha, sj)})));
                    }
                    Expr val = truncate_eps(add(std::move(terms)), eps, p);
                    next[ns] = val;
                    pg.coeffs[{alpha, ns}] = val;
                }
            }
            level = std::move(next);
        }
    }
    return pg;
}

} // namespace apxsym
