#include "apxsym/verify.hpp"

#include "apxsym/error.hpp"
#include "apxsym/eval.hpp"
#include "apxsym/parse.hpp"

#include <chrono>
#include <cmath>
#include <map>
#include <mutex>

namespace apxsym {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

ZeroOptions base_zero_options(const VerifyOptions& opts) {
    ZeroOptions z;
    z.samples = opts.samples;
    z.tolerance = opts.tolerance;
    z.seed = opts.seed;
    return z;
}

OrderVerdict run_order(const Expr& e, int k, const ZeroOptions& z) {
    OrderVerdict v;
    v.eps_order = k;
    ZeroResult r = is_zero(e, z);
    v.verdict = r.verdict;
    v.witness = r.witness;
    v.max_abs = r.max_abs;
    v.samples_used = r.samples_used;
    return v;
}

bool order_ok(const OrderVerdict& v) {
    return v.verdict == ZeroVerdict::ProvedZero ||
           v.verdict == ZeroVerdict::NumericallyZero;
}

// Restricted generic invariance condition, cached per (equations, mode, p):
// it is shared by every fixture set of the same problem.
struct RestrictedCondition {
    std::vector<Expr> orders;
    Generator generic;
    int gauge_index = -1;
};

const RestrictedCondition& restricted_condition(const ProblemSpec& spec,
                                                SymmetryMode mode) {
    static std::map<std::string, RestrictedCondition> cache;
    static std::mutex mutex;
    std::string key = to_string(mode);
    key += "|p=" + std::to_string(spec.space.order);
    for (const auto& eq : spec.equations) key += "|" + to_string(eq);

    std::lock_guard<std::mutex> lock(mutex);
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;

    RestrictedCondition rc;
    rc.gauge_index = mode == SymmetryMode::QConditional ? 0 : -1;
    rc.generic = lift_generator(generic_generator(spec.space, rc.gauge_index), spec.space);
    std::vector<GradedExpr> cond = invariance_condition(spec, rc.generic);
    SubstitutionSet subs = manifold_substitutions(spec, rc.generic, mode);
    for (const auto& graded : cond)
        for (int k = 0; k <= graded.order(); ++k)
            rc.orders.push_back(subs.apply(graded.at(k)));
    return cache.emplace(std::move(key), std::move(rc)).first->second;
}

} // namespace

Bindings generic_seed_bindings(const ProblemSpec& spec, const Generator& generic,
                               const Generator& concrete, int gauge_index) {
    const JetSpace& space = spec.space;
    Bindings map;
    for (int k = 0; k <= space.order; ++k) {
        for (int i = 0; i < space.n(); ++i) {
            const Expr& seed = generic.xi[k][i];
            if (seed->kind == Kind::Unknown) {
                map[seed] = concrete.xi[k][i];
            } else if (!equal(normalize(seed), normalize(concrete.xi[k][i]))) {
                throw StructureError("generator does not match the " +
                                     std::string(to_string(gauge_index >= 0
                                                               ? SymmetryMode::QConditional
                                                               : SymmetryMode::Lie)) +
                                     " gauge in xi[" + std::to_string(k) + "][" +
                                     space.indep_names[i] + "]");
            }
        }
        for (int a = 0; a < space.m(); ++a) map[generic.eta[k][a]] = concrete.eta[k][a];
    }
    return map;
}

ZeroOptions zero_options_for(const CaseSetup& setup, const VerifyOptions& opts) {
    ZeroOptions z = base_zero_options(opts);
    for (const auto& [name, range] : setup.domains)
        z.ranges[name] = {to_double(range.first), to_double(range.second)};
    z.excludes = setup.excludes;
    return z;
}

VerificationReport check_symmetry(const ProblemSpec& spec, const GeneratorSet& set,
                                  SymmetryMode mode, const VerifyOptions& opts) {
    auto t0 = Clock::now();
    VerificationReport rep;
    rep.subject = set.name;
    rep.mode = to_string(mode);
    rep.tolerance = opts.tolerance;
    rep.samples = opts.samples;
    rep.seed = opts.seed;

    const RestrictedCondition& rc = restricted_condition(spec, mode);
    Generator concrete = spec.build_generator(set);
    validate_seeds(concrete, spec.space);
    Bindings seeds = generic_seed_bindings(spec, rc.generic, concrete, rc.gauge_index);
    Bindings setup = spec.setup_bindings(set.setup);
    ZeroOptions z = zero_options_for(set.setup, opts);

    rep.passed = true;
    for (std::size_t k = 0; k < rc.orders.size(); ++k) {
        Expr e = substitute(rc.orders[k], seeds);
        if (!setup.empty()) e = substitute(e, setup);
        OrderVerdict v = run_order(e, static_cast<int>(k), z);
        rep.passed = rep.passed && order_ok(v);
        rep.orders.push_back(std::move(v));
    }
    rep.elapsed_seconds = seconds_since(t0);
    return rep;
}

VerificationReport check_isc(const ProblemSpec& spec, const Representation& rep_in,
                             const VerifyOptions& opts) {
    auto t0 = Clock::now();
    VerificationReport rep;
    rep.subject = rep_in.name;
    rep.mode = "isc";
    rep.tolerance = opts.tolerance;
    rep.samples = opts.samples;
    rep.seed = opts.seed;

    const GeneratorSet& gset = spec.generator_set(rep_in.generator);
    Generator g = lift_generator(spec.build_generator(gset), spec.space);
    std::vector<GradedExpr> q = invariant_surface_condition(spec, g);

    Bindings setup = spec.setup_bindings(gset.setup);
    for (const auto& [key, val] : spec.setup_bindings(rep_in.setup)) setup[key] = val;
    // similarity-variable defines must be expanded before jet derivation
    Bindings comps;
    for (const auto& [k, e] : rep_in.components)
        comps[spec.space.jet_coord(0, k)] = setup.empty() ? e : substitute(e, setup);

    ZeroOptions z = zero_options_for(gset.setup, opts);
    for (const auto& [name, range] : rep_in.setup.domains)
        z.ranges[name] = {to_double(range.first), to_double(range.second)};

    rep.passed = true;
    for (const auto& graded : q) {
        for (int k = 0; k <= graded.order(); ++k) {
            Expr e = substitute(graded.at(k), comps, /*derive_jets=*/true);
            if (!setup.empty()) e = substitute(e, setup);
            OrderVerdict v = run_order(e, k, z);
            rep.passed = rep.passed && order_ok(v);
            rep.orders.push_back(std::move(v));
        }
    }
    rep.elapsed_seconds = seconds_since(t0);
    return rep;
}

VerificationReport verify_solution(const ProblemSpec& spec, const SolutionCandidate& sol,
                                   const VerifyOptions& opts) {
    auto t0 = Clock::now();
    VerificationReport rep;
    rep.subject = sol.name;
    rep.mode = "solution";
    rep.tolerance = opts.tolerance;
    rep.samples = opts.samples;
    rep.seed = opts.seed;

    Bindings setup = spec.setup_bindings(sol.setup);
    Bindings comps;
    for (const auto& [k, e] : sol.components)
        comps[spec.space.jet_coord(0, k)] = setup.empty() ? e : substitute(e, setup);
    ZeroOptions z = zero_options_for(sol.setup, opts);

    rep.passed = true;
    for (const auto& delta : spec.equations) {
        GradedExpr graded = grade(expand_dependent(delta, spec.space), spec.space);
        for (int k = 0; k <= graded.order(); ++k) {
            Expr e = substitute(graded.at(k), comps, /*derive_jets=*/true);
            if (!setup.empty()) e = substitute(e, setup);
            OrderVerdict v = run_order(e, k, z);
            rep.passed = rep.passed && order_ok(v);
            rep.orders.push_back(std::move(v));
        }

        // the leading part must solve the unperturbed equation on its own
        JetSpace flat = spec.space;
        flat.order = 0;
        Expr unperturbed = grade(expand_dependent(delta, flat), flat).at(0);
        Expr e0 = substitute(unperturbed, comps, /*derive_jets=*/true);
        if (!setup.empty()) e0 = substitute(e0, setup);
        OrderVerdict v0 = run_order(e0, 0, z);
        v0.eps_order = -1; // marker: unperturbed residual
        rep.passed = rep.passed && order_ok(v0);
        rep.orders.push_back(std::move(v0));
    }
    rep.elapsed_seconds = seconds_since(t0);
    return rep;
}

FigureSurface figure_surface(const ProblemSpec& spec, const FigureSpec& fig) {
    const SolutionCandidate& sol = spec.solution(fig.solution);
    Expr eps = spec.space.small();
    std::vector<Expr> terms;
    for (const auto& [k, e] : sol.components)
        terms.push_back(mul({pow(eps, Rational(k)), e}));
    Expr u = add(std::move(terms));
    Bindings setup = spec.setup_bindings(sol.setup);
    if (!setup.empty()) u = substitute(u, setup);

    FigureSurface fs;
    fs.expr = u;
    for (const auto& [name, value] : fig.values)
        fs.context.bind(parameter(name), to_double(value));
    return fs;
}

ConvergenceReport epsilon_convergence(const ProblemSpec& spec, const FigureSpec& fig,
                                      const std::vector<double>& eps_values) {
    auto t0 = Clock::now();
    const SolutionCandidate& sol = spec.solution(fig.solution);
    ConvergenceReport report;
    report.subject = sol.name;

    Expr eps = spec.space.small();
    Bindings setup = spec.setup_bindings(sol.setup);
    // u = u0 + eps u1 substituted into the untruncated equation
    std::vector<Expr> terms;
    for (const auto& [k, e] : sol.components)
        terms.push_back(mul({pow(eps, Rational(k)),
                             setup.empty() ? e : substitute(e, setup)}));
    Expr u = add(std::move(terms));

    Bindings comps;
    for (int a = 0; a < spec.space.m(); ++a) {
        JetKey key;
        key.dep = spec.space.dep_names[a];
        key.dep_index = a;
        key.order = JetKey::kUnexpanded;
        comps[jet(key)] = u;
    }

    std::vector<Expr> residuals;
    for (const auto& delta : spec.equations) {
        Expr e = substitute(delta, comps, /*derive_jets=*/true);
        if (!setup.empty()) e = substitute(e, setup);
        residuals.push_back(e);
    }

    EvalContext base;
    for (const auto& [name, value] : fig.values)
        base.bind(parameter(name), to_double(value));

    GridAxis t_axis{spec.space.indep_var(0), to_double(fig.t_lo), to_double(fig.t_hi),
                    fig.t_steps};
    GridAxis x_axis{spec.space.indep_var(spec.space.n() - 1), to_double(fig.x_lo),
                    to_double(fig.x_hi), fig.x_steps};

    for (double ev : eps_values) {
        EvalContext ctx = base;
        ctx.bind(eps, ev);
        double worst = 0.0;
        for (const auto& res : residuals) {
            GridData g = grid_eval({res}, t_axis, x_axis, ctx, {"residual"});
            for (const auto& row : g.values)
                worst = std::max(worst, std::fabs(row[0]));
        }
        report.rows.push_back({ev, worst});
    }
    if (report.rows.size() >= 2) {
        const auto& a = report.rows[report.rows.size() - 2];
        const auto& b = report.rows.back();
        if (a.max_residual > 0 && b.max_residual > 0 && a.eps != b.eps)
            report.fitted_order =
                std::log(a.max_residual / b.max_residual) / std::log(a.eps / b.eps);
    }
    report.elapsed_seconds = seconds_since(t0);
    return report;
}

namespace {

int count_param_occurrences(const Expr& e, const std::string& name) {
    int n = 0;
    for_each_node(e, [&](const Expr& node) {
        if (node->kind == Kind::Param && node->name == name) ++n;
    });
    return n;
}

Expr replace_nth_param(const Expr& e, const std::string& name, int& countdown) {
    if (e->kind == Kind::Param && e->name == name) {
        if (countdown-- == 0) return add({e, number(1)});
        return e;
    }
    if (e->kids.empty()) return e;
    std::vector<Expr> kids;
    kids.reserve(e->kids.size());
    bool changed = false;
    for (const auto& k : e->kids) {
        Expr nk = replace_nth_param(k, name, countdown);
        changed = changed || nk.get() != k.get();
        kids.push_back(std::move(nk));
    }
    if (!changed) return e;
    switch (e->kind) {
    case Kind::Sum:
        return add(std::move(kids));
    case Kind::Product:
        return mul(std::move(kids));
    case Kind::Power:
        return pow(kids[0], e->expo);
    case Kind::Kernel:
        return kernel(e->fn, std::move(kids));
    case Kind::Unknown:
        return unknown(e->name, e->fam, std::move(kids), e->dmulti);
    default:
        return e;
    }
}

std::uint64_t mutmix(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

} // namespace

std::vector<Mutation> enumerate_mutations(const ProblemSpec& spec,
                                          const GeneratorSet& set, std::uint64_t seed,
                                          int count) {
    // parameters pinned by the equation itself
    std::vector<std::string> pinned;
    for (const auto& eq : spec.equations)
        for (const auto& atom : free_atoms(eq))
            if (atom->kind == Kind::Param && atom->name != spec.space.small_name)
                pinned.push_back(atom->name);

    struct Site {
        std::string component;
        const Expr* expr;
        std::string param;
        int occurrence;
    };
    std::vector<std::pair<std::string, const Expr*>> components;
    for (const auto& [key, e] : set.xi)
        components.emplace_back("xi[" + std::to_string(key.first) + "][" + key.second + "]",
                                &e);
    for (const auto& [key, e] : set.eta)
        components.emplace_back("eta[" + std::to_string(key.first) + "][" + key.second +
                                    "]",
                                &e);

    // occurrence totals across the whole set
    std::map<std::string, int> totals;
    for (const auto& [name, e] : components) {
        (void)name;
        for (const auto& atom : free_atoms(*e))
            if (atom->kind == Kind::Param)
                totals[atom->name] += count_param_occurrences(*e, atom->name);
    }

    std::vector<Site> sites;
    for (const auto& [cname, e] : components) {
        for (const auto& [param, total] : totals) {
            bool eligible = total >= 2 ||
                            std::find(pinned.begin(), pinned.end(), param) != pinned.end();
            if (!eligible) continue;
            int here = count_param_occurrences(*e, param);
            for (int i = 0; i < here; ++i) sites.push_back({cname, e, param, i});
        }
    }
    if (sites.empty()) return {};

    std::vector<Mutation> out;
    std::vector<std::size_t> order(sites.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    // seeded Fisher-Yates
    for (std::size_t i = order.size(); i > 1; --i) {
        std::size_t j = mutmix(seed + i) % i;
        std::swap(order[i - 1], order[j]);
    }
    for (std::size_t idx : order) {
        if (static_cast<int>(out.size()) >= count) break;
        const Site& s = sites[idx];
        Mutation m;
        m.set_name = set.name;
        m.component = s.component;
        m.param = s.param;
        m.occurrence = s.occurrence;
        m.mutated = set;
        m.mutated.name = set.name + "-mut-" + s.param + "-" + std::to_string(s.occurrence);
        auto rewrite = [&](std::map<std::pair<int, std::string>, Expr>& table,
                           const std::string& prefix) {
            for (auto& [key, e] : table) {
                std::string cname =
                    prefix + "[" + std::to_string(key.first) + "][" + key.second + "]";
                if (cname != s.component) continue;
                int countdown = s.occurrence;
                e = replace_nth_param(e, s.param, countdown);
            }
        };
        rewrite(m.mutated.xi, "xi");
        rewrite(m.mutated.eta, "eta");
        out.push_back(std::move(m));
    }
    return out;
}

} // namespace apxsym
