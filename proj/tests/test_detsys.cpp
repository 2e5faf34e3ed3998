#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "apxsym/detsys.hpp"
#include "apxsym/error.hpp"
#include "apxsym/parse.hpp"
#include "apxsym/verify.hpp"

#include <fstream>
#include <sstream>

using namespace apxsym;

namespace {

std::string fixture(const std::string& name) {
    std::string path = std::string(APXSYM_FIXTURES) + "/" + name;
    std::ifstream in(path);
    REQUIRE(in.good());
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

ProblemSpec telegraph() { return parse_problem(fixture("telegraph.apx")); }
ProblemSpec rdc() { return parse_problem(fixture("rdc.apx")); }

// seed-function partial: name<k>(t,x,u[0]) differentiated per slot counts
Expr seed_partial(const ProblemSpec& spec, const std::string& base, int k,
                  std::vector<int> dm) {
    std::vector<Expr> args{spec.space.indep_var(0), spec.space.indep_var(1),
                           spec.space.jet_coord(0, 0)};
    return unknown(base, k, args, std::move(dm));
}

// coefficient of a given monomial in the canonical sum
Expr coefficient_of(const Expr& e, const Expr& monomial) {
    std::vector<Expr> hits;
    for (const auto& term : sum_terms(e)) {
        auto [c, mono] = split_coefficient(term);
        // the display groups the plain corrections u[k] into coefficients,
        // so only derivative coordinates disqualify a quotient
        Expr quotient = normalize(div(mono, monomial));
        bool clean = true;
        for_each_node(quotient, [&](const Expr& n) {
            if (n->kind == Kind::Jet && n->jet.total_order() >= 1) clean = false;
            if (n->kind == Kind::Power && sign(n->expo) < 0 &&
                n->kids[0]->kind == Kind::Jet)
                clean = false;
        });
        if (clean) hits.push_back(mul({number(c), quotient}));
    }
    return add(std::move(hits));
}

bool proportional(const Expr& a, const Expr& b) {
    std::vector<Expr> ta = sum_terms(normalize(a));
    std::vector<Expr> tb = sum_terms(normalize(b));
    if (ta.size() != tb.size() || ta.empty()) return false;
    auto [ca, ma] = split_coefficient(ta.front());
    auto [cb, mb] = split_coefficient(tb.front());
    if (!equal(ma, mb)) return false;
    Rational ratio = ca / cb;
    return is_zero_number(normalize(sub(a, mul({number(ratio), b}))));
}

} // namespace

TEST_CASE("telegraph lie-mode manifold rules match the worked substitutions") {
    ProblemSpec spec = telegraph();
    Generator g = lift_generator(generic_generator(spec.space), spec.space);
    SubstitutionSet subs = manifold_substitutions(spec, g, SymmetryMode::Lie);
    REQUIRE(subs.rules.size() == 2);

    // u[0]_xx -> u[0]_t
    CHECK(equal(subs.rules[0].lhs, spec.space.jet_coord(0, 0, {0, 2})));
    CHECK(equal(subs.rules[0].rhs, spec.space.jet_coord(0, 0, {1, 0})));
    // u[1]_xx -> u[0]_tt + u[1]_t (the epsilon grading of the equation)
    CHECK(equal(subs.rules[1].lhs, spec.space.jet_coord(0, 1, {0, 2})));
    CHECK(equal(subs.rules[1].rhs, add({spec.space.jet_coord(0, 0, {2, 0}),
                                        spec.space.jet_coord(0, 1, {1, 0})})));
}

TEST_CASE("telegraph q-conditional manifold eliminates the t-derivatives") {
    ProblemSpec spec = telegraph();
    Generator g = lift_generator(generic_generator(spec.space, 0), spec.space);
    SubstitutionSet subs = manifold_substitutions(spec, g, SymmetryMode::QConditional);

    Bindings map = subs.bindings();
    // u[0]_t -> eta0 - xi0 u[0]_x
    Expr u0t = spec.space.jet_coord(0, 0, {1, 0});
    auto it = map.find(u0t);
    REQUIRE(it != map.end());
    Expr want = sub(seed_partial(spec, "etau", 0, {0, 0, 0}),
                    mul({seed_partial(spec, "xix", 0, {0, 0, 0}),
                         spec.space.jet_coord(0, 0, {0, 1})}));
    CHECK(equal(it->second, want));

    // rules exist for every t-derivative up to the equation order
    for (int k = 0; k <= 1; ++k) {
        CHECK(map.count(spec.space.jet_coord(0, k, {1, 0})) == 1);
        CHECK(map.count(spec.space.jet_coord(0, k, {1, 1})) == 1);
        CHECK(map.count(spec.space.jet_coord(0, k, {2, 0})) == 1);
        CHECK(map.count(spec.space.jet_coord(0, k, {0, 2})) == 1);
    }

    // fixed point: applying the closed rules leaves no left-hand side behind
    for (const auto& rule : subs.rules)
        for (const auto& other : subs.rules) CHECK(!contains(rule.rhs, other.lhs));
}

TEST_CASE("rdc q-conditional rules reach an order-independent fixed point") {
    ProblemSpec spec = rdc();
    Generator g = lift_generator(generic_generator(spec.space, 0), spec.space);
    SubstitutionSet subs = manifold_substitutions(spec, g, SymmetryMode::QConditional);

    // u[0]_xx is solved from the order-0 equation after the ISC elimination
    Bindings map = subs.bindings();
    REQUIRE(map.count(spec.space.jet_coord(0, 0, {0, 2})) == 1);
    REQUIRE(map.count(spec.space.jet_coord(0, 1, {0, 2})) == 1);

    // applying the whole set twice equals applying once
    Expr probe = mul({spec.space.jet_coord(0, 0, {2, 0}),
                      spec.space.jet_coord(0, 1, {0, 2})});
    Expr once = subs.apply(probe);
    CHECK(equal(subs.apply(once), once));

    // reversed construction order of the equation rules gives the same fixed
    // point on the probe (rule order is an implementation detail)
    SubstitutionSet reversed = subs;
    std::reverse(reversed.rules.begin(), reversed.rules.end());
    CHECK(equal(reversed.apply(probe), once));
}

TEST_CASE("telegraph invariance condition reproduces the displayed coefficients") {
    ProblemSpec spec = telegraph();
    Generator g = lift_generator(generic_generator(spec.space), spec.space);
    std::vector<GradedExpr> cond = invariance_condition(spec, g);
    REQUIRE(cond.size() == 1);
    SubstitutionSet subs = manifold_substitutions(spec, g, SymmetryMode::Lie);
    Expr e0 = subs.apply(cond[0].at(0));
    Expr e1 = subs.apply(cond[0].at(1));

    const JetSpace& s = spec.space;
    Expr u0x = s.jet_coord(0, 0, {0, 1});
    Expr u0t = s.jet_coord(0, 0, {1, 0});
    Expr u0tx = s.jet_coord(0, 0, {1, 1});
    Expr u0tt = s.jet_coord(0, 0, {2, 0});
    Expr u1x = s.jet_coord(0, 1, {0, 1});
    Expr u1t = s.jet_coord(0, 1, {1, 0});
    Expr u1tx = s.jet_coord(0, 1, {1, 1});
    Expr u1 = s.jet_coord(0, 1);

    auto tau = [&](std::vector<int> dm) { return seed_partial(spec, "xit", 0, dm); };
    auto tau1 = [&](std::vector<int> dm) { return seed_partial(spec, "xit", 1, dm); };
    auto xi = [&](std::vector<int> dm) { return seed_partial(spec, "xix", 0, dm); };
    auto xi1 = [&](std::vector<int> dm) { return seed_partial(spec, "xix", 1, dm); };
    auto eta = [&](std::vector<int> dm) { return seed_partial(spec, "etau", 0, dm); };
    auto eta1 = [&](std::vector<int> dm) { return seed_partial(spec, "etau", 1, dm); };

    // order 0: the full displayed expression
    Expr want0 = add({
        mul({number(2), tau({0, 0, 1}), u0tx, u0x}),
        mul({number(2), tau({0, 1, 0}), u0tx}),
        mul({xi({0, 0, 2}), pow(u0x, Rational(3))}),
        mul({tau({0, 0, 2}), u0t, pow(u0x, Rational(2))}),
        mul({sub(mul({number(2), xi({0, 1, 1})}), eta({0, 0, 2})),
             pow(u0x, Rational(2))}),
        mul({number(2), add({tau({0, 1, 1}), xi({0, 0, 1})}), u0t, u0x}),
        mul({add({tau({0, 2, 0}), neg(tau({1, 0, 0})), mul({number(2), xi({0, 1, 0})})}),
             u0t}),
        mul({add({xi({0, 2, 0}), neg(mul({number(2), eta({0, 1, 1})})),
                  neg(xi({1, 0, 0}))}),
             u0x}),
        neg(eta({0, 2, 0})),
        eta({1, 0, 0}),
    });
    CHECK(is_zero_number(normalize(sub(e0, want0))));

    // order 1 spot checks against cleanly printed display terms
    CHECK(equal(coefficient_of(e1, mul({u1tx, u0x})), mul({number(2), tau({0, 0, 1})})));
    CHECK(equal(coefficient_of(e1, u1tx), mul({number(2), tau({0, 1, 0})})));
    CHECK(equal(coefficient_of(e1, mul({u0tt, u0t})),
                neg(mul({number(2), tau({0, 0, 1})}))));
    CHECK(equal(coefficient_of(e1, mul({u0tt, u0x})), mul({number(2), xi({0, 0, 1})})));
    CHECK(equal(coefficient_of(e1, u0tt),
                mul({number(-2), sub(tau({1, 0, 0}), xi({0, 1, 0}))})));
    CHECK(equal(coefficient_of(e1, pow(u0t, Rational(3))), neg(tau({0, 0, 2}))));
    CHECK(equal(coefficient_of(e1, pow(u0x, Rational(3))),
                add({mul({xi({0, 0, 3}), u1}), xi1({0, 0, 2})})));
    CHECK(equal(coefficient_of(e1, u1t),
                add({tau({0, 2, 0}), neg(tau({1, 0, 0})), mul({number(2), xi({0, 1, 0})})})));
    CHECK(equal(coefficient_of(e1, u1x),
                add({xi({0, 2, 0}), neg(mul({number(2), eta({0, 1, 1})})),
                     neg(xi({1, 0, 0}))})));
    // the (u0_x)^3 coefficient of the second prolongation at order 0
    CHECK(equal(coefficient_of(e0, pow(u0x, Rational(3))), xi({0, 0, 2})));
}

TEST_CASE("translation and zero generators annihilate autonomous equations") {
    ProblemSpec spec = rdc();
    Generator trans;
    trans.xi = {{number(1), number(0)}, {number(0), number(0)}};
    trans.eta = {{number(0)}, {number(0)}};
    trans = lift_generator(trans, spec.space);
    for (const auto& graded : invariance_condition(spec, trans)) {
        CHECK(is_zero_number(graded.at(0)));
        CHECK(is_zero_number(graded.at(1)));
    }

    Generator zero;
    zero.xi = {{number(0), number(0)}, {number(0), number(0)}};
    zero.eta = {{number(0)}, {number(0)}};
    zero = lift_generator(zero, spec.space);
    for (const auto& graded : invariance_condition(spec, zero)) {
        CHECK(is_zero_number(graded.at(0)));
        CHECK(is_zero_number(graded.at(1)));
    }
}

TEST_CASE("telegraph determining system pins the time-translation structure") {
    ProblemSpec spec = telegraph();
    Generator g = lift_generator(generic_generator(spec.space), spec.space);
    auto cond = invariance_condition(spec, g);
    auto subs = manifold_substitutions(spec, g, SymmetryMode::Lie);
    DeterminingSystem sys = extract_determining(cond, subs);

    // coefficients of the two order-0 mixed-derivative monomials
    Expr u0x = spec.space.jet_coord(0, 0, {0, 1});
    Expr u0tx = spec.space.jet_coord(0, 0, {1, 1});
    bool tau_u = false, tau_x = false;
    for (const auto& eq : sys.equations) {
        if (eq.eps_order != 0) continue;
        if (equal(eq.monomial, mul({u0tx, u0x})))
            tau_u = proportional(eq.equation, seed_partial(spec, "xit", 0, {0, 0, 1}));
        if (equal(eq.monomial, u0tx))
            tau_x = proportional(eq.equation, seed_partial(spec, "xit", 0, {0, 1, 0}));
    }
    CHECK(tau_u);
    CHECK(tau_x);
}

TEST_CASE("paper infinitesimals reduce the system to the two source constraints") {
    ProblemSpec spec = telegraph();
    Generator generic = lift_generator(generic_generator(spec.space), spec.space);
    auto cond = invariance_condition(spec, generic);
    auto subs = manifold_substitutions(spec, generic, SymmetryMode::Lie);
    DeterminingSystem sys = extract_determining(cond, subs);
    REQUIRE(!sys.equations.empty());

    Generator concrete = spec.build_generator(spec.generator_set("paper-generic"));
    Bindings seeds = generic_seed_bindings(spec, generic, concrete, -1);

    Expr t = spec.space.indep_var(0);
    Expr x = spec.space.indep_var(1);
    Expr c1 = sub(unknown("f", 1, {t, x}, {1, 0}), unknown("f", 1, {t, x}, {0, 2}));
    Expr c2 = add({unknown("f", 1, {t, x}, {2, 0}), neg(unknown("f", 2, {t, x}, {0, 2})),
                   unknown("f", 2, {t, x}, {1, 0})});

    int zero_count = 0, c1_count = 0, c2_count = 0;
    for (const auto& eq : sys.equations) {
        Expr reduced = normalize(substitute(eq.equation, seeds));
        if (is_zero_number(reduced)) {
            ++zero_count;
        } else if (proportional(reduced, c1)) {
            ++c1_count;
        } else if (proportional(reduced, c2)) {
            ++c2_count;
        } else {
            CAPTURE(to_string(eq.monomial));
            CAPTURE(to_string(reduced));
            FAIL("unexpected nonzero reduction");
        }
    }
    CHECK(zero_count > 0);
    CHECK(c1_count > 0);
    CHECK(c2_count > 0);
}

TEST_CASE("gauge conformity is enforced in q-conditional mode") {
    ProblemSpec spec = rdc();
    Generator bad;
    bad.xi = {{number(2), number(0)}, {number(0), number(0)}};
    bad.eta = {{number(0)}, {number(0)}};
    bad = lift_generator(bad, spec.space);
    CHECK_THROWS_AS(manifold_substitutions(spec, bad, SymmetryMode::QConditional),
                    StructureError);
}

TEST_CASE("classical symmetries are conditional symmetries (mode nesting)") {
    ProblemSpec spec = rdc();
    GeneratorSet trans;
    trans.name = "translations";
    trans.xi[{0, "t"}] = number(1);
    trans.xi[{0, "x"}] = parameter("kappa1");
    VerifyOptions opts;
    opts.samples = 40;
    VerificationReport lie = check_symmetry(spec, trans, SymmetryMode::Lie, opts);
    CHECK(lie.passed);
    VerificationReport qc = check_symmetry(spec, trans, SymmetryMode::QConditional, opts);
    CHECK(qc.passed);
}
