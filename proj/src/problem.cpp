#include "apxsym/problem.hpp"

#include "apxsym/error.hpp"

#include <algorithm>

namespace apxsym {

int ProblemSpec::equation_order() const {
    int r = 0;
    for (const auto& eq : equations)
        for_each_node(eq, [&](const Expr& node) {
            if (node->kind == Kind::Jet) r = std::max(r, node->jet.total_order());
        });
    return r;
}

namespace {

template <typename T>
const T& find_named(const std::vector<T>& items, const std::string& name,
                    const char* what) {
    for (const auto& it : items)
        if (it.name == name) return it;
    throw Error(std::string("unknown ") + what + ": " + name);
}

} // namespace

const GeneratorSet& ProblemSpec::generator_set(const std::string& name) const {
    return find_named(generators, name, "generator set");
}
const Representation& ProblemSpec::representation(const std::string& name) const {
    return find_named(representations, name, "representation");
}
const SolutionCandidate& ProblemSpec::solution(const std::string& name) const {
    return find_named(solutions, name, "solution");
}
const FigureSpec& ProblemSpec::figure(const std::string& name) const {
    return find_named(figures, name, "figure");
}

Generator ProblemSpec::build_generator(const GeneratorSet& set) const {
    Generator g;
    const int p = space.order;
    g.xi.assign(p + 1, std::vector<Expr>(space.n(), number(0)));
    g.eta.assign(p + 1, std::vector<Expr>(space.m(), number(0)));
    for (const auto& [key, val] : set.xi) {
        auto [k, var] = key;
        auto it = std::find(space.indep_names.begin(), space.indep_names.end(), var);
        if (it == space.indep_names.end())
            throw Error("generator set " + set.name + ": unknown variable " + var);
        if (k < 0 || k > p)
            throw Error("generator set " + set.name + ": order out of range");
        g.xi[k][it - space.indep_names.begin()] = val;
    }
    for (const auto& [key, val] : set.eta) {
        auto [k, dep] = key;
        auto it = std::find(space.dep_names.begin(), space.dep_names.end(), dep);
        if (it == space.dep_names.end())
            throw Error("generator set " + set.name + ": unknown dependent " + dep);
        if (k < 0 || k > p)
            throw Error("generator set " + set.name + ": order out of range");
        g.eta[k][it - space.dep_names.begin()] = val;
    }
    return g;
}

Expr solve_linear(const Expr& eq, const Expr& target) {
    Expr a = differentiate(eq, target);
    if (is_zero_number(a))
        throw StructureError("constraint does not involve " + to_string(target));
    if (contains(a, target))
        throw StructureError("constraint is not linear in " + to_string(target));
    Expr b = substitute(eq, Bindings{{target, number(0)}});
    return neg(div(b, a));
}

Bindings ProblemSpec::setup_bindings(const CaseSetup& setup) const {
    Bindings map;
    if (setup.eliminate) {
        if (setup.constraints.empty())
            throw Error("eliminate without a constraint");
        Expr target = parameter(*setup.eliminate);
        Expr eq = sub(setup.constraints.front().first, setup.constraints.front().second);
        map[target] = solve_linear(eq, target);
    }
    for (const auto& [name, value] : setup.defines) {
        Expr key = parameter(name);
        if (map.count(key)) throw Error("conflicting definition for " + name);
        map[key] = value;
    }
    return map;
}

bool ProblemSpec::structurally_equal(const ProblemSpec& other) const {
    auto setup_eq = [](const CaseSetup& a, const CaseSetup& b) {
        if (a.constraints.size() != b.constraints.size()) return false;
        for (std::size_t i = 0; i < a.constraints.size(); ++i)
            if (!equal(a.constraints[i].first, b.constraints[i].first) ||
                !equal(a.constraints[i].second, b.constraints[i].second))
                return false;
        if (a.eliminate != b.eliminate) return false;
        if (a.defines.size() != b.defines.size()) return false;
        for (std::size_t i = 0; i < a.defines.size(); ++i)
            if (a.defines[i].first != b.defines[i].first ||
                !equal(a.defines[i].second, b.defines[i].second))
                return false;
        if (a.domains != b.domains) return false;
        if (a.excludes.size() != b.excludes.size()) return false;
        for (std::size_t i = 0; i < a.excludes.size(); ++i)
            if (!equal(a.excludes[i], b.excludes[i])) return false;
        return true;
    };

    if (space.indep_names != other.space.indep_names) return false;
    if (space.dep_names != other.space.dep_names) return false;
    if (space.small_name != other.space.small_name) return false;
    if (space.order != other.space.order) return false;
    if (params != other.params) return false;
    if (equations.size() != other.equations.size()) return false;
    for (std::size_t i = 0; i < equations.size(); ++i)
        if (!equal(equations[i], other.equations[i])) return false;
    if (generators.size() != other.generators.size()) return false;
    for (std::size_t i = 0; i < generators.size(); ++i) {
        const auto& a = generators[i];
        const auto& b = other.generators[i];
        if (a.name != b.name || !setup_eq(a.setup, b.setup)) return false;
        if (a.unknowns != b.unknowns) return false;
        auto table_eq = [](const auto& ta, const auto& tb) {
            if (ta.size() != tb.size()) return false;
            auto ia = ta.begin();
            auto ib = tb.begin();
            for (; ia != ta.end(); ++ia, ++ib)
                if (ia->first != ib->first || !equal(ia->second, ib->second)) return false;
            return true;
        };
        if (!table_eq(a.xi, b.xi) || !table_eq(a.eta, b.eta)) return false;
    }
    auto comps_eq = [](const std::vector<std::pair<int, Expr>>& a,
                       const std::vector<std::pair<int, Expr>>& b) {
        if (a.size() != b.size()) return false;
        for (std::size_t i = 0; i < a.size(); ++i)
            if (a[i].first != b[i].first || !equal(a[i].second, b[i].second)) return false;
        return true;
    };
    if (representations.size() != other.representations.size()) return false;
    for (std::size_t i = 0; i < representations.size(); ++i) {
        const auto& a = representations[i];
        const auto& b = other.representations[i];
        if (a.name != b.name || a.generator != b.generator) return false;
        if (!setup_eq(a.setup, b.setup) || !comps_eq(a.components, b.components))
            return false;
        if (a.unknowns != b.unknowns) return false;
    }
    if (solutions.size() != other.solutions.size()) return false;
    for (std::size_t i = 0; i < solutions.size(); ++i) {
        const auto& a = solutions[i];
        const auto& b = other.solutions[i];
        if (a.name != b.name || !setup_eq(a.setup, b.setup) ||
            !comps_eq(a.components, b.components))
            return false;
    }
    if (figures.size() != other.figures.size()) return false;
    for (std::size_t i = 0; i < figures.size(); ++i) {
        const auto& a = figures[i];
        const auto& b = other.figures[i];
        if (a.name != b.name || a.solution != b.solution || a.values != b.values)
            return false;
        if (a.t_lo != b.t_lo || a.t_hi != b.t_hi || a.t_steps != b.t_steps) return false;
        if (a.x_lo != b.x_lo || a.x_hi != b.x_hi || a.x_steps != b.x_steps) return false;
    }
    return true;
}

} // namespace apxsym
