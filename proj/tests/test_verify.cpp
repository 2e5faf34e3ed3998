#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "apxsym/parse.hpp"
#include "apxsym/verify.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

using namespace apxsym;

namespace {

std::string slurp(const std::string& name) {
    std::string path = std::string(APXSYM_FIXTURES) + "/" + name;
    std::ifstream in(path);
    REQUIRE(in.good());
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

const ProblemSpec& rdc() {
    static ProblemSpec spec = parse_problem(slurp("rdc.apx"));
    return spec;
}

VerifyOptions quick() {
    VerifyOptions o;
    o.samples = 25;
    return o;
}

} // namespace

TEST_CASE("case1-set1 is an approximate conditional symmetry at both orders") {
    VerificationReport rep =
        check_symmetry(rdc(), rdc().generator_set("case1-set1"), SymmetryMode::QConditional,
                       quick());
    REQUIRE(rep.orders.size() == 2);
    CHECK(rep.passed);
}

TEST_CASE("case2-set3 is an approximate conditional symmetry at both orders") {
    VerificationReport rep =
        check_symmetry(rdc(), rdc().generator_set("case2-set3"), SymmetryMode::QConditional,
                       quick());
    CHECK(rep.passed);
}

TEST_CASE("the shifted kappa2 variant fails with a witness at order 1") {
    VerificationReport rep = check_symmetry(
        rdc(), rdc().generator_set("case2-set3-mutated"), SymmetryMode::QConditional,
        quick());
    CHECK(!rep.passed);
    REQUIRE(rep.orders.size() == 2);
    CHECK(rep.orders[0].verdict == ZeroVerdict::ProvedZero);
    CHECK(rep.orders[1].verdict == ZeroVerdict::NumericallyNonzero);
    REQUIRE(rep.orders[1].witness.has_value());
    CHECK(std::fabs(rep.orders[1].witness->residual) >
          rep.tolerance * rep.orders[1].witness->scale);
}

TEST_CASE("representations satisfy the invariant surface conditions exactly") {
    for (const char* name : {"case1-rep1", "case1-rep4", "case2-rep3"}) {
        VerificationReport rep = check_isc(rdc(), rdc().representation(name), quick());
        CAPTURE(name);
        REQUIRE(rep.orders.size() == 2);
        CHECK(rep.orders[0].verdict == ZeroVerdict::ProvedZero);
        CHECK(rep.orders[1].verdict == ZeroVerdict::ProvedZero);
    }
}

TEST_CASE("a stationary profile is invariant under the time translation") {
    ProblemSpec spec = rdc();
    GeneratorSet set;
    set.name = "time-translation";
    set.xi[{0, "t"}] = number(1);
    spec.generators.push_back(set);
    Representation rep;
    rep.name = "stationary";
    rep.generator = "time-translation";
    rep.components = {{0, unknown("U", 0, {spec.space.indep_var(1)})},
                      {1, unknown("U", 1, {spec.space.indep_var(1)})}};
    VerificationReport r = check_isc(spec, rep, quick());
    CHECK(r.passed);
    for (const auto& v : r.orders) CHECK(v.verdict == ZeroVerdict::ProvedZero);
}

TEST_CASE("sol2c passes the graded residual checks symbolically") {
    VerificationReport rep = verify_solution(rdc(), rdc().solution("sol2c"), quick());
    CHECK(rep.passed);
    for (const auto& v : rep.orders) CHECK(v.verdict == ZeroVerdict::ProvedZero);
}

TEST_CASE("the constant-profile solution kills the reaction term at order 0") {
    VerificationReport rep = verify_solution(rdc(), rdc().solution("sol1e"), quick());
    CHECK(rep.passed);
}

TEST_CASE("sol1b needs the numeric route and passes it") {
    VerifyOptions o;
    o.samples = 20;
    VerificationReport rep = verify_solution(rdc(), rdc().solution("sol1b"), o);
    CHECK(rep.passed);
    bool numeric_somewhere = false;
    for (const auto& v : rep.orders)
        if (v.verdict == ZeroVerdict::NumericallyZero) numeric_somewhere = true;
    CHECK(numeric_somewhere);
}

TEST_CASE("convergence of sol2c shows second-order behavior") {
    ConvergenceReport rep =
        epsilon_convergence(rdc(), rdc().figure("fig2c"), {0.03, 0.015});
    REQUIRE(rep.rows.size() == 2);
    double ratio = rep.rows[0].max_residual / rep.rows[1].max_residual;
    CHECK(ratio >= 3.0);
    CHECK(ratio <= 5.3);

    ConvergenceReport zero = epsilon_convergence(rdc(), rdc().figure("fig2c"), {0.0});
    CHECK(zero.rows[0].max_residual < 1e-10);
}

TEST_CASE("seeded mutations break the symmetry check") {
    auto muts = enumerate_mutations(rdc(), rdc().generator_set("case1-set1"), 0x5eed, 2);
    REQUIRE(muts.size() == 2);
    for (const auto& m : muts) {
        VerificationReport rep =
            check_symmetry(rdc(), m.mutated, SymmetryMode::QConditional, quick());
        CAPTURE(m.component);
        CAPTURE(m.param);
        CHECK(!rep.passed);
        bool witnessed = false;
        for (const auto& v : rep.orders)
            if (v.witness) witnessed = true;
        CHECK(witnessed);
    }
}
