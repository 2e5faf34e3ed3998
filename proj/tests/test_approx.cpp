#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "apxsym/approx.hpp"
#include "apxsym/error.hpp"
#include "apxsym/parse.hpp"

#include <random>

using namespace apxsym;

namespace {

JetSpace tx_space(int p = 1) {
    JetSpace s;
    s.indep_names = {"t", "x"};
    s.dep_names = {"u"};
    s.small_name = "eps";
    s.order = p;
    return s;
}

Expr u_raw(std::vector<int> sigma = {0, 0}) {
    JetKey k{"u", 0, JetKey::kUnexpanded, {}};
    if (sigma[0] > 0) k.sigma.push_back({0, "t", sigma[0]});
    if (sigma[1] > 0) k.sigma.push_back({1, "x", sigma[1]});
    return jet(k);
}

Expr random_seed_expr(const JetSpace& s, std::mt19937_64& rng, int depth) {
    std::uniform_int_distribution<int> pick(0, 7);
    int c = pick(rng);
    if (depth <= 0 || c < 3) {
        switch (c % 4) {
        case 0: return s.indep_var(1);
        case 1: return s.jet_coord(0, 0);
        case 2: return parameter("alpha");
        default: return unknown("F", static_cast<int>(rng() % 2),
                                {s.indep_var(0), s.indep_var(1), s.jet_coord(0, 0)});
        }
    }
    switch (c) {
    case 3:
    case 4:
        return add({random_seed_expr(s, rng, depth - 1), random_seed_expr(s, rng, depth - 1)});
    case 5:
        return mul({random_seed_expr(s, rng, depth - 1), random_seed_expr(s, rng, depth - 1)});
    default:
        return pow(random_seed_expr(s, rng, depth - 1), Rational(2));
    }
}

} // namespace

TEST_CASE("expand_dependent grades the dependent variable") {
    JetSpace s = tx_space();
    Expr eps = s.small();
    CHECK(equal(expand_dependent(u_raw(), s),
                add({s.jet_coord(0, 0), mul({eps, s.jet_coord(0, 1)})})));
    // eps * u_tt keeps only the order-0 coefficient
    CHECK(equal(expand_dependent(mul({eps, u_raw({2, 0})}), s),
                mul({eps, s.jet_coord(0, 0, {2, 0})})));
    // products expand as a ring homomorphism modulo eps^2
    Expr got = expand_dependent(mul({u_raw(), u_raw({0, 1})}), s);
    Expr want = add({mul({s.jet_coord(0, 0), s.jet_coord(0, 0, {0, 1})}),
                     mul({eps, s.jet_coord(0, 0), s.jet_coord(0, 1, {0, 1})}),
                     mul({eps, s.jet_coord(0, 1), s.jet_coord(0, 0, {0, 1})})});
    CHECK(equal(got, want));
}

TEST_CASE("expand_dependent is a ring homomorphism modulo eps^(p+1)") {
    JetSpace s = tx_space();
    Expr eps = s.small();
    std::mt19937_64 rng(3);
    for (int i = 0; i < 100; ++i) {
        Expr a = i % 2 ? u_raw() : u_raw({0, 1});
        Expr b = i % 3 ? u_raw({1, 0}) : add({u_raw(), parameter("alpha")});
        Expr lhs = expand_dependent(mul({a, b}), s);
        Expr rhs = truncate_eps(mul({expand_dependent(a, s), expand_dependent(b, s)}),
                                eps, s.order);
        CHECK(equal(lhs, rhs));
    }
}

TEST_CASE("grade splits coefficients and detects overflow") {
    JetSpace s = tx_space();
    Expr eps = s.small();
    Expr a = parameter("a");
    Expr b = parameter("b");
    GradedExpr g = grade(add({a, mul({eps, b})}), s);
    CHECK(equal(g.at(0), a));
    CHECK(equal(g.at(1), b));

    GradedExpr g2 = grade(truncate_eps(pow(add({number(1), eps}), Rational(2)), eps, 1), s);
    CHECK(equal(g2.at(0), number(1)));
    CHECK(equal(g2.at(1), number(2)));

    CHECK_THROWS_AS(grade(pow(add({number(1), eps}), Rational(2)), s), StructureError);
    CHECK_THROWS_AS(grade(exp_(eps), s), StructureError);
}

TEST_CASE("grade of the expanded equation recovers the unperturbed part") {
    ProblemSpec spec = parse_problem(
        "indep t x;\ndep u;\nsmall eps order 1;\nparam alpha beta gamma;\n"
        "equation eps*u_tt + u_t - (u*u_x)_x - alpha*u*u_x + beta*u*(1-gamma*u) = 0;\n");
    GradedExpr g = grade(expand_dependent(spec.equations[0], spec.space), spec.space);

    // the order-0 part is the parabolic equation in u[0]
    ProblemSpec rdc = parse_problem(
        "indep t x;\ndep u;\nsmall eps order 0;\nparam alpha beta gamma;\n"
        "equation u_t - (u*u_x)_x - alpha*u*u_x + beta*u*(1-gamma*u) = 0;\n");
    Expr parabolic = grade(expand_dependent(rdc.equations[0], rdc.space), rdc.space).at(0);
    CHECK(equal(g.at(0), parabolic));
}

TEST_CASE("grade and reassemble are inverse") {
    JetSpace s = tx_space();
    Expr eps = s.small();
    std::mt19937_64 rng(17);
    for (int i = 0; i < 50; ++i) {
        Expr e = truncate_eps(
            expand_dependent(mul({random_seed_expr(s, rng, 2), u_raw({0, 1})}), s), eps,
            s.order);
        GradedExpr g = grade(e, s);
        CHECK(equal(g.reassemble(eps), e));
    }
}

TEST_CASE("recursion operator on jets and seed functions") {
    JetSpace s = tx_space();
    CHECK(equal(recursion_apply(s.jet_coord(0, 0), s), s.jet_coord(0, 1)));
    CHECK(equal(recursion_apply(s.jet_coord(0, 1), s),
                mul({number(2), s.jet_coord(0, 2)})));

    // R[xi0(t,x,u0)] = xi1(t,x,u0) + d xi0/d u0 * u1
    std::vector<Expr> args{s.indep_var(0), s.indep_var(1), s.jet_coord(0, 0)};
    Expr xi0 = unknown("xix", 0, args);
    Expr got = recursion_apply(xi0, s);
    Expr want = add({unknown("xix", 1, args),
                     mul({unknown("xix", 0, args, {0, 0, 1}), s.jet_coord(0, 1)})});
    CHECK(equal(got, want));
}

TEST_CASE("recursion operator is linear and satisfies the product rule") {
    JetSpace s = tx_space();
    std::mt19937_64 rng(23);
    for (int i = 0; i < 200; ++i) {
        Expr f = random_seed_expr(s, rng, 2);
        Expr g = random_seed_expr(s, rng, 2);
        Expr prod = sub(recursion_apply(mul({f, g}), s),
                        add({mul({recursion_apply(f, s), g}),
                             mul({f, recursion_apply(g, s)})}));
        CHECK(is_zero_number(normalize(prod)));

        Expr a = number(3), b = number(Rational(-2) / 5);
        Expr lin = sub(recursion_apply(add({mul({a, f}), mul({b, g})}), s),
                       add({mul({a, recursion_apply(f, s)}),
                            mul({b, recursion_apply(g, s)})}));
        CHECK(is_zero_number(normalize(lin)));
    }
}

TEST_CASE("lift of trivial generators") {
    JetSpace s = tx_space();
    Generator zero;
    zero.xi = {{number(0), number(0)}, {number(0), number(0)}};
    zero.eta = {{number(0)}, {number(0)}};
    zero = lift_generator(zero, s);
    CHECK(is_zero_number(zero.xi_tilde[1][0]));
    CHECK(is_zero_number(zero.eta_tilde[1][0]));

    Generator trans;
    trans.xi = {{number(1), number(2)}, {number(0), number(0)}};
    trans.eta = {{number(0)}, {number(0)}};
    trans = lift_generator(trans, s);
    CHECK(equal(trans.xi_tilde[0][0], number(1)));
    CHECK(is_zero_number(trans.xi_tilde[1][0]));
    CHECK(is_zero_number(trans.xi_tilde[1][1]));
}

TEST_CASE("lift rejects seeds that already carry corrections") {
    JetSpace s = tx_space();
    Generator g;
    g.xi = {{number(1), number(0)}, {number(0), number(0)}};
    g.eta = {{s.jet_coord(0, 1)}, {number(0)}};
    CHECK_THROWS_AS(lift_generator(g, s), StructureError);

    Generator g2;
    g2.xi = {{number(1), s.small()}, {number(0), number(0)}};
    g2.eta = {{number(0)}, {number(0)}};
    CHECK_THROWS_AS(lift_generator(g2, s), StructureError);
}
