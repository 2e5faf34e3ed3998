#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "apxsym/error.hpp"
#include "apxsym/eval.hpp"
#include "apxsym/expr.hpp"

#include <cmath>
#include <random>

using namespace apxsym;

namespace {

Expr t_ = indep("t", 0);
Expr x_ = indep("x", 1);
Expr alpha_ = parameter("alpha");
Expr beta_ = parameter("beta");
Expr gamma_ = parameter("gamma");
Expr delta_ = parameter("delta");
Expr eps_ = parameter("eps");

Expr u0() { return jet({"u", 0, 0, {}}); }
Expr u1() { return jet({"u", 0, 1, {}}); }

// small random expression trees over a fixed atom pool
Expr random_expr(std::mt19937_64& rng, int depth) {
    std::uniform_int_distribution<int> pick(0, 9);
    int c = pick(rng);
    if (depth <= 0 || c < 4) {
        switch (c % 5) {
        case 0: return x_;
        case 1: return t_;
        case 2: return alpha_;
        case 3: return u0();
        default: return number(static_cast<long>(pick(rng)) - 4);
        }
    }
    switch (c) {
    case 4: return add({random_expr(rng, depth - 1), random_expr(rng, depth - 1)});
    case 5: return mul({random_expr(rng, depth - 1), random_expr(rng, depth - 1)});
    case 6: return pow(random_expr(rng, depth - 1), Rational(2));
    case 7: return sin_(random_expr(rng, depth - 1));
    case 8: return exp_(random_expr(rng, depth - 1));
    default: return sub(random_expr(rng, depth - 1), random_expr(rng, depth - 1));
    }
}

long double pochhammer(long double a, int k) {
    long double p = 1;
    for (int i = 0; i < k; ++i) p *= a + i;
    return p;
}

long double hyp2f1_dz_series(long double a, long double b, long double c, long double z) {
    long double sum = 0, fact = 1;
    for (int k = 1; k < 400; ++k) {
        fact *= k;
        long double term = pochhammer(a, k) * pochhammer(b, k) / pochhammer(c, k) *
                           std::pow(z, static_cast<long double>(k - 1)) * k / fact;
        sum += term;
        if (std::fabs(static_cast<double>(term)) <
                1e-22 * std::fabs(static_cast<double>(sum)) &&
            k > 8)
            break;
    }
    return sum;
}

long double erfi_series(long double x) {
    long double sum = 0, term = x;
    for (int k = 0; k < 500; ++k) {
        sum += term / (2 * k + 1);
        term *= x * x / (k + 1);
        if (std::fabs(static_cast<double>(term)) < 1e-24) break;
    }
    return sum * 2 / std::sqrt(static_cast<long double>(M_PI));
}

} // namespace

TEST_CASE("additive identity and distributivity reach canonical zero") {
    Expr y = parameter("y");
    CHECK(equal(add({x_, mul({number(0), y})}), x_));

    Expr lhs = mul({u0(), sub(number(1), mul({gamma_, u0()}))});
    Expr rhs = sub(u0(), mul({gamma_, pow(u0(), Rational(2))}));
    CHECK(is_zero_number(sub(lhs, rhs)));
}

TEST_CASE("exponent law merges exp factors") {
    Expr e = mul({exp_(mul({beta_, t_})),
                  exp_(sub(neg(mul({beta_, t_})), mul({div(alpha_, number(2)), x_})))});
    Expr want = exp_(neg(mul({div(alpha_, number(2)), x_})));
    CHECK(equal(e, want));
}

TEST_CASE("log/exp folds") {
    CHECK(equal(log_(exp_(mul({beta_, t_}))), mul({beta_, t_})));
    CHECK(equal(exp_(log_(alpha_)), alpha_));
    CHECK(equal(sin_(number(0)), number(0)));
    CHECK(equal(cos_(number(0)), number(1)));
}

TEST_CASE("normalize is idempotent and a congruence") {
    std::mt19937_64 rng(42);
    for (int i = 0; i < 300; ++i) {
        Expr a = random_expr(rng, 3);
        Expr b = random_expr(rng, 3);
        Expr n = normalize(add({a, b}));
        CHECK(equal(normalize(n), n));
        CHECK(equal(n, normalize(add({normalize(a), normalize(b)}))));
    }
}

TEST_CASE("differentiate: chain rule on sin") {
    Expr e = differentiate(sin_(mul({delta_, x_})), x_);
    CHECK(equal(e, mul({delta_, cos_(mul({delta_, x_}))})));
}

TEST_CASE("differentiate rejects non-atoms") {
    CHECK_THROWS_AS(differentiate(x_, add({x_, t_})), Error);
}

TEST_CASE("differentiate satisfies linearity and the product rule") {
    std::mt19937_64 rng(7);
    int checked = 0;
    for (int i = 0; i < 1000; ++i) {
        Expr f = random_expr(rng, 3);
        Expr g = random_expr(rng, 3);
        Expr lin = sub(differentiate(add({f, g}), x_),
                       add({differentiate(f, x_), differentiate(g, x_)}));
        CHECK(is_zero_number(normalize(lin)));
        Expr prod =
            sub(differentiate(mul({f, g}), x_),
                add({mul({differentiate(f, x_), g}), mul({f, differentiate(g, x_)})}));
        ZeroOptions z;
        z.samples = 3;
        z.seed = 1000 + i;
        ZeroResult r = is_zero(prod, z);
        CHECK((r.verdict == ZeroVerdict::ProvedZero ||
               r.verdict == ZeroVerdict::NumericallyZero));
        ++checked;
    }
    CHECK(checked == 1000);
}

TEST_CASE("hyp2f1 z-derivative matches term-by-term series differentiation") {
    Expr z = parameter("z");
    Expr b = parameter("b");
    Expr c = parameter("c");
    Expr f = hyp2f1_(number(Rational(1) / 2), b, c, z);
    Expr df = differentiate(f, z);
    EvalContext ctx;
    ctx.bind(z, 0.1);
    ctx.bind(b, 1.0);
    ctx.bind(c, 2.0);
    double got = eval_value(df, ctx);
    double want = static_cast<double>(hyp2f1_dz_series(0.5L, 1.0L, 2.0L, 0.1L));
    CHECK(std::fabs(got - want) < 1e-12 * (1 + std::fabs(want)));
}

TEST_CASE("erfi derivative matches a central finite difference of the series") {
    Expr arg = div(sqrt_(mul({alpha_, x_})), number(2));
    Expr df = differentiate(erfi_(arg), x_);
    EvalContext ctx;
    ctx.bind(alpha_, 1.3);
    ctx.bind(x_, 0.8);
    double got = eval_value(df, ctx);
    const long double h = 1e-6L;
    auto f = [&](long double xx) { return erfi_series(std::sqrt(1.3L * xx) / 2); };
    double want = static_cast<double>((f(0.8L + h) - f(0.8L - h)) / (2 * h));
    CHECK(std::fabs(got - want) < 1e-6 * (1 + std::fabs(want)));
}

TEST_CASE("substitute: binomial expansion of the correction") {
    Bindings b;
    JetKey unexp{"u", 0, JetKey::kUnexpanded, {}};
    b[jet(unexp)] = add({u0(), mul({eps_, u1()})});
    Expr got = substitute(pow(jet(unexp), Rational(2)), b);
    Expr want = add({pow(u0(), Rational(2)), mul({number(2), eps_, u0(), u1()}),
                     mul({pow(eps_, Rational(2)), pow(u1(), Rational(2))})});
    CHECK(equal(got, want));
}

TEST_CASE("substitute is simultaneous") {
    Bindings b;
    b[x_] = t_;
    b[t_] = x_;
    CHECK(equal(substitute(add({x_, t_}), b), add({x_, t_})));
}

TEST_CASE("substitute reproduces the similarity argument") {
    Expr w = parameter("w");
    Expr U = unknown("U", 0, {w});
    Bindings b;
    b[w] = add({mul({number(4), beta_, pow(add({alpha_, delta_}), Rational(-1)), t_}), x_});
    Expr got = substitute(U, b);
    Expr want = unknown(
        "U", 0,
        {add({mul({number(4), beta_, pow(add({alpha_, delta_}), Rational(-1)), t_}), x_})});
    CHECK(equal(got, want));
}

TEST_CASE("functional substitution differentiates the replacement") {
    Expr f = unknown("f", 1, {t_, x_});
    Bindings b;
    b[f] = exp_(add({t_, x_}));
    Expr df = unknown("f", 1, {t_, x_}, {0, 1});
    CHECK(equal(substitute(df, b), exp_(add({t_, x_}))));
    Expr dff = unknown("f", 1, {t_, x_}, {2, 0});
    CHECK(equal(substitute(dff, b), exp_(add({t_, x_}))));
}

TEST_CASE("substitute then differentiate commutes for constant bindings") {
    std::mt19937_64 rng(99);
    for (int i = 0; i < 200; ++i) {
        Expr f = random_expr(rng, 3);
        Bindings b;
        b[alpha_] = add({beta_, number(2)});
        Expr lhs = differentiate(substitute(f, b), x_);
        Expr rhs = substitute(differentiate(f, x_), b);
        CHECK(equal(lhs, rhs));
    }
}

TEST_CASE("is_zero verdicts") {
    CHECK(is_zero(number(0)).verdict == ZeroVerdict::ProvedZero);

    Expr th = parameter("th");
    Expr pyth =
        sub(add({pow(sin_(th), Rational(2)), pow(cos_(th), Rational(2))}), number(1));
    ZeroResult r = is_zero(pyth);
    CHECK(r.verdict == ZeroVerdict::NumericallyZero);

    ZeroResult rn = is_zero(eps_);
    CHECK(rn.verdict == ZeroVerdict::NumericallyNonzero);
    REQUIRE(rn.witness.has_value());
    CHECK(std::fabs(rn.witness->residual) > 1e-6);

    CHECK(is_zero(number(5)).verdict == ZeroVerdict::ProvedNonzero);
}

TEST_CASE("is_zero reports inconclusive sampling as an error") {
    // the argument is negative on the whole sampling domain
    Expr e = log_(neg(add({pow(x_, Rational(2)), number(1)})));
    ZeroOptions z;
    z.samples = 5;
    z.retry_factor = 4;
    CHECK_THROWS_AS(is_zero(e, z), EvalDomainError);
}

TEST_CASE("is_zero is complete over polynomials") {
    std::mt19937_64 rng(5);
    for (int i = 0; i < 200; ++i) {
        Expr a = random_expr(rng, 2);
        Expr b = random_expr(rng, 2);
        Expr c = random_expr(rng, 2);
        Expr p1 = mul({add({a, b}), c});
        Expr p2 = add({mul({a, c}), mul({b, c})});
        CHECK(is_zero(sub(p1, p2)).verdict == ZeroVerdict::ProvedZero);
    }
    Expr q = add({mul({alpha_, x_}), number(1)});
    CHECK(is_zero(q).verdict != ZeroVerdict::ProvedZero);
}

TEST_CASE("rational-function cancellation clears denominators") {
    Expr S = add({mul({parameter("k1"), exp_(mul({beta_, t_}))}), number(1)});
    Expr A = exp_(mul({beta_, t_}));
    Expr e = sub(mul({A, pow(S, Rational(-1))}), mul({A, S, pow(S, Rational(-2))}));
    CHECK(is_zero(e).verdict == ZeroVerdict::ProvedZero);

    Expr half1 = pow(add({mul({number(2), x_}), number(2)}), Rational(-1));
    Expr half2 = mul({number(Rational(1) / 2), pow(add({x_, number(1)}), Rational(-1))});
    CHECK(is_zero(sub(half1, half2)).verdict == ZeroVerdict::ProvedZero);
}

TEST_CASE("radical powers fold under positivity") {
    Expr S = add({exp_(mul({delta_, x_})), parameter("c2")});
    CHECK(equal(mul({sqrt_(S), sqrt_(S)}), S));
    CHECK(equal(pow(mul({number(4), pow(x_, Rational(2))}), Rational(1) / 2),
                mul({number(2), x_})));
    Expr th = sqrt_(div(add({pow(alpha_, Rational(2)), pow(delta_, Rational(2))}),
                        number(2)));
    CHECK(is_zero(sub(pow(th, Rational(2)),
                      div(add({pow(alpha_, Rational(2)), pow(delta_, Rational(2))}),
                          number(2))))
              .verdict == ZeroVerdict::ProvedZero);
}

TEST_CASE("printer emits deterministic canonical text") {
    Expr e = add({mul({number(Rational(3) / 2), alpha_, pow(x_, Rational(2))}),
                  neg(mul({beta_, jet({"u", 0, 1, {{1, "x", 2}}})}))});
    CHECK(to_string(e) == "-beta*u[1]_{xx} + 3/2*alpha*x^2");
    CHECK(to_string(pow(add({x_, number(1)}), Rational(-1))) == "(1 + x)^(-1)");
    CHECK(to_string(unknown("U", 0, {x_}, {2})) == "U0''(x)");
    CHECK(to_string(unknown("f", 1, {t_, x_}, {1, 2})) == "D[1,2,2](f1)(t,x)");
}
