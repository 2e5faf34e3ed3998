#include "apxsym/error.hpp"
#include "apxsym/eval.hpp"
#include "apxsym/expr.hpp"

#include <algorithm>
#include <cmath>

namespace apxsym {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

double uniform01(std::uint64_t state) {
    return static_cast<double>(splitmix64(state) >> 11) * 0x1.0p-53;
}

// Two argument expressions are provably equal when their difference clears
// to the zero atom (cross-multiplied polynomial identity; no factorization).
bool provably_equal(const Expr& a, const Expr& b) {
    Expr d = normalize(sub(a, b));
    if (is_zero_number(d)) return true;
    return is_zero_number(clear_denominators(d));
}

// Kernel and unknown-function applications whose arguments are equal as
// rational functions but canonically distinct (the forms differ by a factor
// of the denominator that only factorization would cancel) are rewritten to
// a common representative, so they collect.
Expr unify_kernel_arguments(const Expr& e) {
    std::vector<Expr> args;
    for_each_node(e, [&](const Expr& node) {
        if (node->kind != Kind::Kernel && node->kind != Kind::Unknown) return;
        for (const auto& a : node->kids) {
            if (a->kind == Kind::Number || is_atom(a)) continue;
            bool known = false;
            for (const auto& seen : args)
                if (equal(seen, a)) { known = true; break; }
            if (!known) args.push_back(a);
        }
    });
    if (args.size() < 2 || args.size() > 64) return e;
    std::sort(args.begin(), args.end(),
              [](const Expr& a, const Expr& b) { return compare(a, b) < 0; });
    Bindings arg_map;
    std::vector<Expr> reps;
    for (const auto& a : args) {
        bool mapped = false;
        for (const auto& r : reps) {
            if (provably_equal(a, r)) {
                arg_map[a] = r;
                mapped = true;
                break;
            }
        }
        if (!mapped) reps.push_back(a);
    }
    if (arg_map.empty()) return e;
    return substitute(e, arg_map);
}

SampleRange default_range(const Expr& atom) {
    switch (atom->kind) {
    case Kind::Indep:
        if (atom->name == "t") return {0.05, 3.0};
        return {0.05, 5.0};
    case Kind::Param:
        return {0.25, 2.25};
    case Kind::Jet:
        // plain dependent values can sit in denominators; derivatives do not
        if (atom->jet.sigma.empty()) return {0.3, 1.9};
        return {-1.1, 1.1};
    case Kind::Unknown: {
        int total = 0;
        for (int d : atom->dmulti) total += d;
        if (total == 0) return {0.35, 1.75};
        return {-1.2, 1.2};
    }
    default:
        return {0.1, 1.0};
    }
}

std::string range_key(const Expr& atom) {
    switch (atom->kind) {
    case Kind::Param:
    case Kind::Indep:
        return atom->name;
    case Kind::Unknown:
        return atom->name + (atom->fam ? std::to_string(*atom->fam) : "");
    default:
        return to_string(atom);
    }
}

} // namespace

ZeroResult is_zero(const Expr& e, const ZeroOptions& opts) {
    Expr nf = normalize(e);
    if (is_zero_number(nf)) return {ZeroVerdict::ProvedZero, std::nullopt, 0.0, 0};
    if (nf->kind == Kind::Number) {
        ZeroWitness w;
        w.residual = to_double(nf->num);
        return {ZeroVerdict::ProvedNonzero, w, std::fabs(w.residual), 0};
    }
    Expr cleared = clear_denominators(nf);
    if (is_zero_number(cleared)) return {ZeroVerdict::ProvedZero, std::nullopt, 0.0, 0};
    if (cleared->kind == Kind::Number) {
        ZeroWitness w;
        w.residual = to_double(cleared->num);
        return {ZeroVerdict::ProvedNonzero, w, std::fabs(w.residual), 0};
    }
    Expr unified = unify_kernel_arguments(nf);
    if (!equal(unified, nf)) {
        if (is_zero_number(unified)) return {ZeroVerdict::ProvedZero, std::nullopt, 0.0, 0};
        if (is_zero_number(clear_denominators(unified)))
            return {ZeroVerdict::ProvedZero, std::nullopt, 0.0, 0};
    }

    // Numeric fallback: sample the free atoms of the *original* normal form
    // (the cleared form hides zeros of the whole expression only at poles).
    std::vector<Expr> atoms = free_atoms(nf);
    ZeroResult result;
    result.verdict = ZeroVerdict::NumericallyZero;

    int attempts_budget = opts.samples * opts.retry_factor;
    int produced = 0;
    std::uint64_t draw = 0;
    while (produced < opts.samples) {
        if (attempts_budget-- <= 0)
            throw EvalDomainError("is_zero: inconclusive (sampling domain exhausted)");
        EvalContext ctx;
        std::vector<std::pair<std::string, double>> sample;
        sample.reserve(atoms.size());
        for (std::size_t i = 0; i < atoms.size(); ++i) {
            const Expr& a = atoms[i];
            if (a->kind == Kind::Param && a->name == "pi") {
                ctx.bind(a, M_PI);
                continue;
            }
            SampleRange r = default_range(a);
            auto it = opts.ranges.find(range_key(a));
            if (it != opts.ranges.end()) r = it->second;
            double u = uniform01(splitmix64(opts.seed + 0x9e37 * draw) + i);
            double v = r.lo + (r.hi - r.lo) * u;
            ctx.bind(a, v);
            sample.emplace_back(range_key(a), v);
        }
        ++draw;
        try {
            bool excluded = false;
            for (const auto& guard : opts.excludes) {
                EvalResult g = eval(guard, ctx);
                if (std::fabs(g.value) < opts.exclude_guard * (1.0 + g.max_magnitude)) {
                    excluded = true;
                    break;
                }
            }
            if (excluded) continue;
            EvalResult r = eval(nf, ctx);
            ++produced;
            double scale = 1.0 + r.max_magnitude;
            if (std::fabs(r.value) > result.max_abs) result.max_abs = std::fabs(r.value);
            if (std::fabs(r.value) >= opts.tolerance * scale) {
                ZeroWitness w;
                w.bindings = std::move(sample);
                w.residual = r.value;
                w.scale = scale;
                result.verdict = ZeroVerdict::NumericallyNonzero;
                result.witness = std::move(w);
                result.samples_used = produced;
                return result;
            }
        } catch (const EvalDomainError&) {
            continue; // resample
        }
    }
    result.samples_used = produced;
    return result;
}

} // namespace apxsym
