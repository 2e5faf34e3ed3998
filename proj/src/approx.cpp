#include "apxsym/approx.hpp"

#include "apxsym/error.hpp"

namespace apxsym {

Expr GradedExpr::reassemble(const Expr& eps) const {
    std::vector<Expr> terms;
    for (std::size_t k = 0; k < coeffs.size(); ++k)
        terms.push_back(mul({pow(eps, Rational(static_cast<long>(k))), coeffs[k]}));
    return add(std::move(terms));
}

namespace {

// (eps exponent, term without the eps factor); throws on fractional powers
// or eps hidden below a non-polynomial node.
std::pair<long, Expr> split_eps(const Expr& term, const Expr& eps) {
    Rational q = exponent_of(term, eps);
    if (!is_integer(q) || sign(q) < 0)
        throw StructureError("expression is not polynomial in " + eps->name);
    std::vector<Expr> rest;
    for (const auto& f : product_factors(term)) {
        if (equal(f, eps)) continue;
        if (f->kind == Kind::Power && equal(f->kids[0], eps)) continue;
        if (contains(f, eps))
            throw StructureError("expression is not polynomial in " + eps->name);
        rest.push_back(f);
    }
    return {q.get_num().get_si(), mul(std::move(rest))};
}

} // namespace

Expr truncate_eps(const Expr& e, const Expr& eps, int p) {
    if (!contains(e, eps)) return e;
    std::vector<Expr> kept;
    for (const auto& term : sum_terms(e)) {
        Rational q = exponent_of(term, eps);
        if (!is_integer(q) || sign(q) < 0)
            throw StructureError("truncate: not polynomial in " + eps->name);
        if (q <= p) kept.push_back(term);
    }
    return add(std::move(kept));
}

Expr expand_dependent(const Expr& e, const JetSpace& space) {
    Bindings map;
    Expr eps = space.small();
    const int p = space.order;
    for_each_node(e, [&](const Expr& node) {
        if (node->kind != Kind::Jet || node->jet.order != JetKey::kUnexpanded) return;
        if (map.count(node)) return;
        std::vector<int> sigma(space.n(), 0);
        for (const auto& s : node->jet.sigma) sigma.at(s.var_index) = s.count;
        std::vector<Expr> terms;
        for (int k = 0; k <= p; ++k)
            terms.push_back(mul({pow(eps, Rational(k)),
                                 space.jet_coord(node->jet.dep_index, k, sigma)}));
        map[node] = add(std::move(terms));
    });
    return truncate_eps(substitute(e, map), eps, p);
}

GradedExpr grade(const Expr& e, const JetSpace& space) {
    Expr eps = space.small();
    const int p = space.order;
    GradedExpr g;
    g.coeffs.assign(p + 1, number(0));
    std::vector<std::vector<Expr>> buckets(p + 1);
    for (const auto& term : sum_terms(e)) {
        if (is_zero_number(term)) continue;
        auto [k, rest] = split_eps(term, eps);
        if (k > p)
            throw StructureError("grade: eps power " + std::to_string(k) +
                                 " above order " + std::to_string(p));
        buckets[k].push_back(rest);
    }
    for (int k = 0; k <= p; ++k) g.coeffs[k] = add(std::move(buckets[k]));
    return g;
}

namespace {

Expr recursion_impl(const Expr& e, const JetSpace& space, bool family_shift) {
    (void)space;
    return apply_derivation_rules(
        e,
        [](const Expr&) { return number(0); },
        [](const Expr&) { return number(0); },
        [&](const Expr& j) {
            if (j->jet.order == JetKey::kUnexpanded)
                throw StructureError("recursion operator on an unexpanded variable");
            JetKey key = j->jet;
            key.order += 1;
            return mul({number(key.order), jet(key)});
        },
        family_shift ? std::function<Expr(const Expr&)>([&](const Expr& u) {
            if (!u->fam)
                throw StructureError("recursion operator needs a family order on " + u->name);
            return unknown(u->name, *u->fam + 1, u->kids, u->dmulti);
        })
                     : std::function<Expr(const Expr&)>(nullptr));
}

} // namespace

Expr recursion_apply(const Expr& e, const JetSpace& space) {
    return recursion_impl(e, space, true);
}

Expr recursion_gradient(const Expr& e, const JetSpace& space) {
    return recursion_impl(e, space, false);
}

Generator lift_generator(Generator g, const JetSpace& space) {
    validate_seeds(g, space);
    const int p = space.order;
    if (static_cast<int>(g.xi.size()) != p + 1 || static_cast<int>(g.eta.size()) != p + 1)
        throw StructureError("lift: seed components must cover orders 0..p");
    g.xi_tilde.assign(p + 1, {});
    g.eta_tilde.assign(p + 1, {});
    g.xi_tilde[0] = g.xi[0];
    g.eta_tilde[0] = g.eta[0];
    for (int k = 0; k < p; ++k) {
        Rational inv = make_rational(1, k + 1);
        auto step = [&](const std::vector<Expr>& tilde_k, const std::vector<Expr>& seed_next) {
            std::vector<Expr> out;
            out.reserve(tilde_k.size());
            for (std::size_t i = 0; i < tilde_k.size(); ++i)
                out.push_back(add({seed_next[i],
                                   mul({number(inv), recursion_gradient(tilde_k[i], space)})}));
            return out;
        };
        g.xi_tilde[k + 1] = step(g.xi_tilde[k], g.xi[k + 1]);
        g.eta_tilde[k + 1] = step(g.eta_tilde[k], g.eta[k + 1]);
    }
    return g;
}

} // namespace apxsym
