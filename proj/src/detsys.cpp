#include "apxsym/detsys.hpp"

#include "apxsym/error.hpp"

#include <algorithm>
#include <map>

namespace apxsym {

const char* to_string(SymmetryMode m) {
    return m == SymmetryMode::Lie ? "lie" : "q-conditional";
}

Bindings SubstitutionSet::bindings() const {
    Bindings map;
    for (const auto& r : rules) map[r.lhs] = r.rhs;
    return map;
}

Expr SubstitutionSet::apply(const Expr& e) const {
    Expr out = substitute(e, bindings());
    for (const auto& r : rules)
        if (contains(out, r.lhs))
            throw StructureError("substitution set is not closed on " + to_string(r.lhs));
    return out;
}

namespace {

// Solves eq = 0 linearly for the jet coordinate `target`.
Expr solve_for(const Expr& eq, const Expr& target) {
    Expr a = differentiate(eq, target);
    if (is_zero_number(a))
        throw StructureError("degenerate ansatz: cannot solve for " + to_string(target));
    if (contains(a, target))
        throw StructureError("degenerate ansatz: " + to_string(target) +
                             " enters nonlinearly");
    Expr b = substitute(eq, Bindings{{target, number(0)}});
    return neg(div(b, a));
}

// Highest x-derivative coordinate (largest count in the last independent
// variable) of dependent `dep` at epsilon order k present in e.
Expr leading_x_coordinate(const Expr& e, const JetSpace& space, int dep, int k) {
    Expr best;
    int best_count = -1;
    int last = space.n() - 1;
    for_each_node(e, [&](const Expr& node) {
        if (node->kind != Kind::Jet) return;
        const JetKey& j = node->jet;
        if (j.dep_index != dep || j.order != k) return;
        int cx = 0;
        bool pure_x = true;
        for (const auto& s : j.sigma) {
            if (s.var_index == last)
                cx = s.count;
            else if (s.count > 0)
                pure_x = false;
        }
        if (!pure_x) return;
        if (cx > best_count) {
            best_count = cx;
            best = node;
        }
    });
    if (best_count < 1)
        throw StructureError("no leading derivative coordinate found at order " +
                             std::to_string(k));
    return best;
}

void close_rules(std::vector<RewriteRule>& rules) {
    for (std::size_t round = 0; round <= rules.size() + 1; ++round) {
        Bindings map;
        for (const auto& r : rules) map[r.lhs] = r.rhs;
        bool dirty = false;
        for (auto& r : rules) {
            Expr nr = substitute(r.rhs, map);
            if (!equal(nr, r.rhs)) {
                r.rhs = nr;
                dirty = true;
            }
            if (contains(nr, r.lhs))
                throw StructureError("cyclic rule set at " + to_string(r.lhs));
        }
        if (!dirty) {
            for (const auto& a : rules)
                for (const auto& b : rules)
                    if (contains(a.rhs, b.lhs))
                        throw StructureError("cyclic rule set at " + to_string(b.lhs));
            return;
        }
    }
    throw StructureError("cyclic rule set (closure did not terminate)");
}

void require_gauge(const Generator& g, const JetSpace& space) {
    int gauge = -1;
    for (int i = 0; i < space.n() && gauge < 0; ++i)
        if (!is_zero_number(normalize(g.xi[0][i]))) gauge = i;
    if (gauge < 0) throw StructureError("gauge: all order-0 xi components vanish");
    if (!normalize(g.xi[0][gauge])->is_number(1))
        throw StructureError("gauge: leading xi component must be 1 at order 0");
    for (std::size_t k = 1; k < g.xi.size(); ++k)
        if (!is_zero_number(normalize(g.xi[k][gauge])))
            throw StructureError("gauge: leading xi component must vanish at order " +
                                 std::to_string(k));
    for (int j = 0; j < gauge; ++j)
        for (std::size_t k = 0; k < g.xi.size(); ++k)
            if (!is_zero_number(normalize(g.xi[k][j])))
                throw StructureError("gauge: xi components below the leading one must vanish");
}

} // namespace

std::vector<GradedExpr> invariance_condition(const ProblemSpec& spec, const Generator& g) {
    const JetSpace& space = spec.space;
    Expr eps = space.small();
    const int p = space.order;
    const int r = spec.equation_order();
    ProlongedGenerator pg = prolong(g, r, space);

    std::vector<GradedExpr> out;
    for (const auto& delta : spec.equations) {
        std::vector<Expr> terms;
        for (int i = 0; i < space.n(); ++i) {
            Expr d = differentiate(delta, space.indep_var(i));
            if (is_zero_number(d)) continue;
            terms.push_back(truncate_eps(
                mul({pg.xi_hat[i], expand_dependent(d, space)}), eps, p));
        }
        // partials with respect to each unexpanded jet coordinate present
        std::vector<Expr> jets;
        for_each_node(delta, [&](const Expr& node) {
            if (node->kind != Kind::Jet) return;
            if (node->jet.order != JetKey::kUnexpanded)
                throw StructureError("equation must use unexpanded dependent variables");
            for (const auto& j : jets)
                if (equal(j, node)) return;
            jets.push_back(node);
        });
        for (const auto& j : jets) {
            Expr d = differentiate(delta, j);
            if (is_zero_number(d)) continue;
            Expr coeff;
            if (j->jet.sigma.empty()) {
                coeff = pg.eta_hat[j->jet.dep_index];
            } else {
                std::vector<int> sigma(space.n(), 0);
                for (const auto& s : j->jet.sigma) sigma[s.var_index] = s.count;
                coeff = pg.coeff(j->jet.dep_index, sigma);
            }
            terms.push_back(truncate_eps(
                mul({coeff, expand_dependent(d, space)}), eps, p));
        }
        out.push_back(grade(add(std::move(terms)), space));
    }
    return out;
}

std::vector<GradedExpr> invariant_surface_condition(const ProblemSpec& spec,
                                                    const Generator& g) {
    const JetSpace& space = spec.space;
    Expr eps = space.small();
    const int p = space.order;
    if (!g.lifted()) throw Error("invariant_surface_condition: generator must be lifted");

    auto hat = [&](const std::vector<std::vector<Expr>>& tilde, int slot) {
        std::vector<Expr> terms;
        for (int k = 0; k <= p; ++k)
            terms.push_back(mul({pow(eps, Rational(k)), tilde[k][slot]}));
        return add(std::move(terms));
    };

    std::vector<GradedExpr> out;
    for (int a = 0; a < space.m(); ++a) {
        std::vector<Expr> terms;
        for (int i = 0; i < space.n(); ++i) {
            std::vector<Expr> du;
            for (int k = 0; k <= p; ++k) {
                std::vector<int> sigma(space.n(), 0);
                sigma[i] = 1;
                du.push_back(mul({pow(eps, Rational(k)), space.jet_coord(a, k, sigma)}));
            }
            terms.push_back(truncate_eps(mul({hat(g.xi_tilde, i), add(std::move(du))}),
                                         eps, p));
        }
        terms.push_back(neg(hat(g.eta_tilde, a)));
        out.push_back(grade(truncate_eps(add(std::move(terms)), eps, p), space));
    }
    return out;
}

SubstitutionSet manifold_substitutions(const ProblemSpec& spec, const Generator& g,
                                       SymmetryMode mode) {
    const JetSpace& space = spec.space;
    const int p = space.order;
    const int r = spec.equation_order();
    if (!g.lifted()) throw Error("manifold_substitutions: generator must be lifted");
    if (space.m() != 1)
        throw Error("manifold_substitutions: single dependent variable supported");

    SubstitutionSet subs;
    subs.mode = mode;

    auto reduce = [&](const Expr& e) {
        Bindings map;
        for (const auto& rule : subs.rules) map[rule.lhs] = rule.rhs;
        return substitute(e, map);
    };

    if (mode == SymmetryMode::QConditional) {
        require_gauge(g, space);
        std::vector<GradedExpr> q = invariant_surface_condition(spec, g);

        // Differential consequences ordered by total order, then by the
        // t-count of the target so each right side only needs earlier rules.
        struct Consequence {
            std::vector<int> s; // derivative multi-index applied to Q
            int t_count;
            int total;
        };
        std::vector<Consequence> consequences;
        std::vector<std::vector<int>> level{std::vector<int>(space.n(), 0)};
        consequences.push_back({level[0], 0, 0});
        for (int ord = 1; ord <= r - 1; ++ord) {
            std::vector<std::vector<int>> next;
            for (const auto& s : level) {
                int lead = 0;
                while (lead < space.n() && s[lead] == 0) ++lead;
                for (int i = 0; i <= std::min(lead, space.n() - 1); ++i) {
                    std::vector<int> ns = s;
                    ns[i] += 1;
                    next.push_back(ns);
                    consequences.push_back({ns, ns[0], ord});
                }
            }
            level = std::move(next);
        }
        std::stable_sort(consequences.begin(), consequences.end(),
                         [](const Consequence& a, const Consequence& b) {
                             if (a.total != b.total) return a.total < b.total;
                             return a.t_count < b.t_count;
                         });

        for (const auto& c : consequences) {
            // apply D^s to every grade of Q
            for (int k = 0; k <= p; ++k) {
                Expr e = q[0].at(k);
                for (int i = 0; i < space.n(); ++i)
                    for (int d = 0; d < c.s[i]; ++d) e = total_derivative(e, i, space);
                // target: the t-derivative coordinate u[k]_(s + e_t)
                std::vector<int> sigma = c.s;
                sigma[0] += 1;
                Expr target = space.jet_coord(0, k, sigma);
                Expr reduced = reduce(e);
                RewriteRule rule;
                rule.lhs = target;
                rule.rhs = reduce(solve_for(reduced, target));
                rule.source = c.total == 0 ? RuleSource::Isc : RuleSource::IscConsequence;
                rule.eps_order = k;
                subs.rules.push_back(std::move(rule));
            }
        }
    }

    // graded equation components, reduced by the rules built so far, each
    // solved for the highest x-derivative of u[k]
    for (const auto& delta : spec.equations) {
        GradedExpr graded = grade(expand_dependent(delta, space), space);
        for (int k = 0; k <= p; ++k) {
            Expr reduced = reduce(graded.at(k));
            if (is_zero_number(reduced)) continue;
            Expr target = leading_x_coordinate(reduced, space, 0, k);
            RewriteRule rule;
            rule.lhs = target;
            rule.rhs = reduce(solve_for(reduced, target));
            rule.source = RuleSource::Equation;
            rule.eps_order = k;
            subs.rules.push_back(std::move(rule));
        }
    }

    close_rules(subs.rules);
    return subs;
}

bool is_collectable_jet(const Expr& e) {
    if (e->kind != Kind::Jet) return false;
    if (e->jet.order == JetKey::kUnexpanded) return false;
    if (!e->jet.sigma.empty()) return true;
    return e->jet.order >= 1; // the corrections u[k] survive as unknowns
}

DeterminingSystem extract_determining(const std::vector<GradedExpr>& cond,
                                      const SubstitutionSet& subs) {
    DeterminingSystem sys;
    for (const auto& graded : cond) {
        for (int k = 0; k <= graded.order(); ++k) {
            Expr restricted = subs.apply(graded.at(k));
            Expr cleared = clear_denominators(restricted);
            std::map<Expr, std::vector<Expr>, ExprLess> buckets;
            for (const auto& term : sum_terms(cleared)) {
                if (is_zero_number(term)) continue;
                std::vector<Expr> mono, coeff;
                auto [c, rest] = split_coefficient(term);
                for (const auto& f : product_factors(rest)) {
                    if (f->kind == Kind::Number) {
                        coeff.push_back(f);
                        continue;
                    }
                    Expr base = f->kind == Kind::Power ? f->kids[0] : f;
                    if (is_collectable_jet(base)) {
                        if (f->kind == Kind::Power &&
                            (!is_integer(f->expo) || sign(f->expo) < 0))
                            throw StructureError(
                                "non-polynomial dependence on surviving coordinate " +
                                to_string(base));
                        mono.push_back(f);
                    } else {
                        bool tainted = false;
                        for_each_node(f, [&](const Expr& node) {
                            if (is_collectable_jet(node)) tainted = true;
                        });
                        if (tainted)
                            throw StructureError(
                                "non-polynomial dependence on surviving coordinate in " +
                                to_string(f));
                        coeff.push_back(f);
                    }
                }
                coeff.push_back(number(c));
                buckets[mul(std::move(mono))].push_back(mul(std::move(coeff)));
            }
            for (auto& [mono, parts] : buckets) {
                Expr eq = add(std::move(parts));
                if (is_zero_number(eq)) continue;
                sys.equations.push_back({k, mono, eq});
            }
        }
    }
    return sys;
}

} // namespace apxsym
