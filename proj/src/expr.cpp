#include "apxsym/expr.hpp"

#include "apxsym/error.hpp"

#include <algorithm>
#include <cassert>
#include <map>
#include <sstream>

namespace apxsym {

namespace {

constexpr std::size_t kHashSeed = 0xcbf29ce484222325ull;

std::size_t mix(std::size_t h, std::size_t v) {
    return (h ^ (v + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2)));
}

std::size_t hash_string(const std::string& s) {
    return std::hash<std::string>{}(s);
}

int rank(Kind k) { return static_cast<int>(k); }

std::size_t node_hash(const ExprNode& n) {
    std::size_t h = kHashSeed;
    h = mix(h, static_cast<std::size_t>(n.kind) + 1);
    switch (n.kind) {
    case Kind::Number:
        h = mix(h, rational_hash(n.num));
        break;
    case Kind::Param:
    case Kind::Indep:
        h = mix(h, hash_string(n.name));
        break;
    case Kind::Jet:
        h = mix(h, hash_string(n.jet.dep));
        h = mix(h, static_cast<std::size_t>(n.jet.order + 2));
        for (const auto& s : n.jet.sigma) {
            h = mix(h, static_cast<std::size_t>(s.var_index + 1));
            h = mix(h, static_cast<std::size_t>(s.count));
        }
        break;
    case Kind::Unknown:
        h = mix(h, hash_string(n.name));
        h = mix(h, n.fam ? static_cast<std::size_t>(*n.fam + 2) : 0);
        for (int d : n.dmulti) h = mix(h, static_cast<std::size_t>(d + 1));
        break;
    case Kind::Power:
        h = mix(h, rational_hash(n.expo));
        break;
    case Kind::Kernel:
        h = mix(h, static_cast<std::size_t>(n.fn) + 11);
        break;
    case Kind::Product:
        h = mix(h, 0x50ull);
        break;
    case Kind::Sum:
        h = mix(h, 0x51ull);
        break;
    }
    for (const auto& k : n.kids) h = mix(h, k->hash);
    return h;
}

Expr finish(ExprNode&& n) {
    n.hash = node_hash(n);
    return std::make_shared<const ExprNode>(std::move(n));
}

const Expr& one_expr() {
    static const Expr e = [] {
        ExprNode n;
        n.kind = Kind::Number;
        n.num = Rational(1);
        return finish(std::move(n));
    }();
    return e;
}

const Expr& zero_expr() {
    static const Expr e = [] {
        ExprNode n;
        n.kind = Kind::Number;
        n.num = Rational(0);
        return finish(std::move(n));
    }();
    return e;
}

// Raw constructors: children must already be canonical and laid out per the
// node invariants (sorted factors, sorted terms, ...).
Expr raw_power(Expr base, Rational expo) {
    ExprNode n;
    n.kind = Kind::Power;
    n.expo = std::move(expo);
    n.kids = {std::move(base)};
    return finish(std::move(n));
}

Expr raw_product(const Rational& coeff, std::vector<Expr> factors) {
    if (coeff == 0) return zero_expr();
    if (factors.empty()) return number(coeff);
    if (coeff == 1 && factors.size() == 1) return factors.front();
    ExprNode n;
    n.kind = Kind::Product;
    if (coeff != 1) {
        n.kids.reserve(factors.size() + 1);
        n.kids.push_back(number(coeff));
    }
    for (auto& f : factors) n.kids.push_back(std::move(f));
    return finish(std::move(n));
}

Expr raw_sum(std::vector<Expr> terms) {
    if (terms.empty()) return zero_expr();
    if (terms.size() == 1) return terms.front();
    ExprNode n;
    n.kind = Kind::Sum;
    n.kids = std::move(terms);
    return finish(std::move(n));
}

int compare_vec(const std::vector<Expr>& a, const std::vector<Expr>& b) {
    std::size_t m = std::min(a.size(), b.size());
    for (std::size_t i = 0; i < m; ++i) {
        int c = compare(a[i], b[i]);
        if (c != 0) return c;
    }
    if (a.size() != b.size()) return a.size() < b.size() ? -1 : 1;
    return 0;
}

int compare_rat(const Rational& a, const Rational& b) {
    return cmp(a, b);
}

} // namespace

int JetKey::total_order() const {
    int n = 0;
    for (const auto& s : sigma) n += s.count;
    return n;
}

const char* kernel_name(KernelFn fn) {
    switch (fn) {
    case KernelFn::Exp: return "exp";
    case KernelFn::Log: return "log";
    case KernelFn::Sin: return "sin";
    case KernelFn::Cos: return "cos";
    case KernelFn::Erfi: return "erfi";
    case KernelFn::Hyp2F1: return "hyp2f1";
    }
    return "?";
}

int compare(const Expr& a, const Expr& b) {
    if (a.get() == b.get()) return 0;
    if (a->kind != b->kind) return rank(a->kind) < rank(b->kind) ? -1 : 1;
    switch (a->kind) {
    case Kind::Number:
        return compare_rat(a->num, b->num);
    case Kind::Param:
    case Kind::Indep:
        return a->name.compare(b->name);
    case Kind::Jet: {
        int c = a->jet.dep.compare(b->jet.dep);
        if (c != 0) return c;
        if (a->jet.order != b->jet.order) return a->jet.order < b->jet.order ? -1 : 1;
        int ta = a->jet.total_order(), tb = b->jet.total_order();
        if (ta != tb) return ta < tb ? -1 : 1;
        std::size_t m = std::min(a->jet.sigma.size(), b->jet.sigma.size());
        for (std::size_t i = 0; i < m; ++i) {
            const auto& sa = a->jet.sigma[i];
            const auto& sb = b->jet.sigma[i];
            if (sa.var_index != sb.var_index) return sa.var_index < sb.var_index ? -1 : 1;
            if (sa.count != sb.count) return sa.count < sb.count ? -1 : 1;
        }
        if (a->jet.sigma.size() != b->jet.sigma.size())
            return a->jet.sigma.size() < b->jet.sigma.size() ? -1 : 1;
        return 0;
    }
    case Kind::Unknown: {
        int c = a->name.compare(b->name);
        if (c != 0) return c;
        int fa = a->fam.value_or(-1), fb = b->fam.value_or(-1);
        if (fa != fb) return fa < fb ? -1 : 1;
        if (a->dmulti != b->dmulti) return a->dmulti < b->dmulti ? -1 : 1;
        return compare_vec(a->kids, b->kids);
    }
    case Kind::Power: {
        int c = compare(a->kids[0], b->kids[0]);
        if (c != 0) return c;
        return compare_rat(a->expo, b->expo);
    }
    case Kind::Kernel: {
        if (a->fn != b->fn) return static_cast<int>(a->fn) < static_cast<int>(b->fn) ? -1 : 1;
        return compare_vec(a->kids, b->kids);
    }
    case Kind::Product:
    case Kind::Sum:
        return compare_vec(a->kids, b->kids);
    }
    return 0;
}

bool equal(const Expr& a, const Expr& b) {
    if (a.get() == b.get()) return true;
    if (a->hash != b->hash) return false;
    return compare(a, b) == 0;
}

// ---- atom builders ----

Expr number(Rational q) {
    if (q == 0) return zero_expr();
    if (q == 1) return one_expr();
    ExprNode n;
    n.kind = Kind::Number;
    n.num = std::move(q);
    return finish(std::move(n));
}

Expr number(long v) { return number(Rational(v)); }

Expr parameter(const std::string& name) {
    ExprNode n;
    n.kind = Kind::Param;
    n.name = name;
    return finish(std::move(n));
}

Expr pi_const() { return parameter("pi"); }

Expr indep(const std::string& name, int index) {
    ExprNode n;
    n.kind = Kind::Indep;
    n.name = name;
    n.var_index = index;
    return finish(std::move(n));
}

Expr jet(JetKey key) {
    std::sort(key.sigma.begin(), key.sigma.end(),
              [](const DerivSlot& a, const DerivSlot& b) { return a.var_index < b.var_index; });
    std::vector<DerivSlot> merged;
    for (auto& s : key.sigma) {
        if (s.count == 0) continue;
        if (s.count < 0) throw StructureError("negative derivative count in jet coordinate");
        if (!merged.empty() && merged.back().var_index == s.var_index)
            merged.back().count += s.count;
        else
            merged.push_back(s);
    }
    key.sigma = std::move(merged);
    ExprNode n;
    n.kind = Kind::Jet;
    n.jet = std::move(key);
    return finish(std::move(n));
}

Expr unknown(const std::string& base, std::optional<int> fam,
             std::vector<Expr> args, std::vector<int> dmulti) {
    dmulti.resize(args.size(), 0);
    for (int d : dmulti)
        if (d < 0) throw StructureError("negative derivative multi-index");
    ExprNode n;
    n.kind = Kind::Unknown;
    n.name = base;
    n.fam = fam;
    n.kids = std::move(args);
    n.dmulti = std::move(dmulti);
    return finish(std::move(n));
}

// ---- product / sum machinery ----

namespace {

struct MulAcc {
    Rational coeff{1};
    std::map<Expr, Rational, ExprLess> pows;
    std::vector<Expr> exp_args;
    bool zero = false;
};

long trunc_toward_zero(const Rational& q) {
    mpz_class t;
    mpz_tdiv_q(t.get_mpz_t(), q.get_num_mpz_t(), q.get_den_mpz_t());
    if (!t.fits_slong_p()) throw StructureError("exponent too large");
    return t.get_si();
}

// Folds base^q for rational base: exact part into coeff, the irreducible
// radical remainder into numeric_pows.
void fold_numeric_power(Rational base, Rational q, Rational& coeff,
                        std::map<Rational, Rational>& numeric_pows, bool& zero) {
    if (q == 0) return;
    if (base == 0) {
        if (sign(q) < 0) throw StructureError("division by zero");
        zero = true;
        return;
    }
    if (base == 1) return;
    if (is_integer(q)) {
        coeff *= rational_pow_int(base, q.get_num().get_si());
        return;
    }
    long tr = trunc_toward_zero(q);
    Rational fr = q - Rational(tr);
    if (tr != 0) coeff *= rational_pow_int(base, tr);
    if (base < 0) {
        numeric_pows[base] += fr; // stays symbolic; real evaluation rejects it
        return;
    }
    if (base < 1) {
        base = Rational(1) / base;
        fr = -fr;
    }
    unsigned long d = fr.get_den().get_ui();
    long nexp = fr.get_num().get_si();
    if (auto r = rational_root(base, d)) {
        coeff *= rational_pow_int(*r, nexp);
        return;
    }
    numeric_pows[base] += fr;
}

// Positive rational content of a canonical sum (gcd of term coefficients).
Rational sum_content(const Expr& s) {
    Rational g(0);
    for (const auto& t : s->kids) {
        auto [c, mono] = split_coefficient(t);
        (void)mono;
        g = rational_gcd(g, c);
        if (g == 1) break;
    }
    if (g == 0) g = 1;
    return g;
}

// Factors common to every term of a canonical sum, with the minimal positive
// exponent. Extracting them keeps power bases primitive, so e.g.
// (a*b - 3*b*d)^(-1) and b^(-1)*(a - 3*d)^(-1) land on the same form.
std::vector<std::pair<Expr, Rational>> sum_monomial_content(const Expr& s) {
    std::vector<std::pair<Expr, Rational>> common;
    bool first = true;
    for (const auto& t : s->kids) {
        auto [c, mono] = split_coefficient(t);
        (void)c;
        if (first) {
            for (const auto& f : product_factors(mono)) {
                if (f->kind == Kind::Number) continue;
                if (f->kind == Kind::Power) {
                    if (sign(f->expo) > 0) common.emplace_back(f->kids[0], f->expo);
                } else {
                    common.emplace_back(f, Rational(1));
                }
            }
            first = false;
        } else {
            for (auto& [base, q] : common) {
                Rational here = exponent_of(t, base);
                if (here < q) q = here;
            }
        }
        if (common.empty()) break;
        common.erase(std::remove_if(common.begin(), common.end(),
                                    [](const auto& bq) { return sign(bq.second) <= 0; }),
                     common.end());
        if (common.empty()) break;
    }
    return common;
}

// Sign of the coefficient at the monomial-least term. Keyed on the
// coefficient-free monomial so negating the sum flips the result even though
// the terms re-sort.
int leading_sign(const Expr& s) {
    bool have = false;
    Expr best_mono;
    Rational best_coeff;
    for (const auto& t : s->kids) {
        auto [c, mono] = split_coefficient(t);
        if (!have || compare(mono, best_mono) < 0) {
            have = true;
            best_mono = mono;
            best_coeff = c;
        }
    }
    return sign(best_coeff) < 0 ? -1 : 1;
}

// Multiplies a canonical sum by a nonzero rational without going through
// mul() (which would re-extract the content and recurse).
Expr scale_sum(const Expr& s, const Rational& r) {
    if (r == 1) return s;
    std::vector<Expr> terms;
    terms.reserve(s->kids.size());
    for (const auto& t : s->kids) {
        auto [c, mono] = split_coefficient(t);
        if (mono->kind == Kind::Number)
            terms.push_back(number(c * r * mono->num));
        else
            terms.push_back(raw_product(c * r, product_factors(mono)));
    }
    std::sort(terms.begin(), terms.end(),
              [](const Expr& a, const Expr& b) { return compare(a, b) < 0; });
    return raw_sum(std::move(terms));
}

void acc_factor(MulAcc& acc, const Expr& e, const Rational& mult);

void acc_exp_arg(MulAcc& acc, const Expr& arg, const Rational& mult) {
    acc.exp_args.push_back(mult == 1 ? arg : mul({number(mult), arg}));
}

void acc_factor(MulAcc& acc, const Expr& e, const Rational& mult) {
    if (mult == 0) return;
    switch (e->kind) {
    case Kind::Number: {
        std::map<Rational, Rational> tmp;
        fold_numeric_power(e->num, mult, acc.coeff, tmp, acc.zero);
        for (auto& [b, q] : tmp) acc.pows[number(b)] += q;
        return;
    }
    case Kind::Product:
        for (const auto& k : e->kids) acc_factor(acc, k, mult);
        return;
    case Kind::Power:
        acc_factor(acc, e->kids[0], e->expo * mult);
        return;
    case Kind::Kernel:
        if (e->fn == KernelFn::Exp) {
            acc_exp_arg(acc, e->kids[0], mult);
            return;
        }
        acc.pows[e] += mult;
        return;
    default:
        acc.pows[e] += mult;
        return;
    }
}

Expr finalize(MulAcc& acc) {
    if (acc.zero) return zero_expr();

    if (!acc.exp_args.empty()) {
        Expr total = add(std::move(acc.exp_args));
        acc.exp_args.clear();
        Expr ek = kernel(KernelFn::Exp, {total});
        if (ek->kind == Kind::Kernel && ek->fn == KernelFn::Exp)
            acc.pows[ek] += 1;
        else
            acc_factor(acc, ek, Rational(1));
    }

    // Second pass: extract sum contents and fold numeric radicals so both
    // land on unique primitive bases, then merge.
    std::map<Expr, Rational, ExprLess> out_pows;
    std::map<Rational, Rational> numeric_pows;
    for (auto& [base, q] : acc.pows) {
        if (q == 0) continue;
        if (base->kind == Kind::Number) {
            fold_numeric_power(base->num, q, acc.coeff, numeric_pows, acc.zero);
        } else if (base->kind == Kind::Sum) {
            Rational c = sum_content(base);
            Expr prim = scale_sum(base, Rational(1) / c);
            fold_numeric_power(c, q, acc.coeff, numeric_pows, acc.zero);
            // extracting exp factors would need a re-merge and dividing by
            // common sum-power factors would re-expand the terms; both are
            // left in place
            auto common = sum_monomial_content(prim);
            common.erase(std::remove_if(common.begin(), common.end(),
                                        [](const auto& bq) {
                                            Kind k = bq.first->kind;
                                            return k == Kind::Sum ||
                                                   (k == Kind::Kernel &&
                                                    bq.first->fn == KernelFn::Exp);
                                        }),
                         common.end());
            if (!common.empty()) {
                std::vector<Expr> adj;
                for (const auto& [b, e] : common) adj.push_back(raw_power(b, -e));
                std::vector<Expr> reduced;
                for (const auto& t : sum_terms(prim)) {
                    std::vector<Expr> fac = adj;
                    fac.push_back(t);
                    reduced.push_back(mul(std::move(fac)));
                }
                prim = add(std::move(reduced));
                for (const auto& [b, e] : common) {
                    if (b->kind == Kind::Number)
                        fold_numeric_power(b->num, e * q, acc.coeff, numeric_pows,
                                           acc.zero);
                    else
                        out_pows[b] += e * q;
                }
            }
            out_pows[prim] += q;
        } else {
            out_pows[base] += q;
        }
    }
    if (acc.zero) return zero_expr();
    {
        std::map<Rational, Rational> again;
        for (auto& [b, q] : numeric_pows) {
            if (q == 0) continue;
            fold_numeric_power(b, q, acc.coeff, again, acc.zero);
        }
        if (acc.zero) return zero_expr();
        for (auto& [b, q] : again)
            if (q != 0) out_pows[number(b)] += q;
    }

    std::vector<Expr> factors;
    std::vector<Expr> to_expand;
    for (auto& [base, q] : out_pows) {
        if (q == 0) continue;
        if (base->kind == Kind::Sum) {
            Expr prim = base;
            Rational qq = q;
            if (is_integer(qq) && leading_sign(prim) < 0) {
                if (qq.get_num().get_si() % 2 != 0) acc.coeff = -acc.coeff;
                prim = scale_sum(prim, Rational(-1));
            }
            long tr = trunc_toward_zero(qq);
            Rational fr = qq - Rational(tr);
            if (tr > 0)
                for (long i = 0; i < tr; ++i) to_expand.push_back(prim);
            else if (tr < 0)
                factors.push_back(raw_power(prim, Rational(tr)));
            if (fr != 0) factors.push_back(raw_power(prim, fr));
        } else if (q == 1) {
            factors.push_back(base);
        } else {
            factors.push_back(raw_power(base, q));
        }
    }
    std::sort(factors.begin(), factors.end(),
              [](const Expr& a, const Expr& b) { return compare(a, b) < 0; });

    Expr head = raw_product(acc.coeff, std::move(factors));
    if (to_expand.empty()) return head;

    std::vector<Expr> terms{head};
    for (const auto& s : to_expand) {
        std::vector<Expr> next;
        next.reserve(terms.size() * s->kids.size());
        for (const auto& t : terms)
            for (const auto& st : s->kids) next.push_back(mul({t, st}));
        terms = std::move(next);
    }
    return add(std::move(terms));
}

} // namespace

Expr mul(std::vector<Expr> factors) {
    MulAcc acc;
    for (const auto& f : factors) {
        acc_factor(acc, f, Rational(1));
        if (acc.zero) return zero_expr();
    }
    return finalize(acc);
}

Expr pow(const Expr& base, const Rational& exponent) {
    if (exponent == 0) return one_expr();
    MulAcc acc;
    acc_factor(acc, base, exponent);
    return finalize(acc);
}

Expr add(std::vector<Expr> terms) {
    std::map<Expr, Rational, ExprLess> buckets;
    const Expr& unit = one_expr();
    std::function<void(const Expr&)> acc = [&](const Expr& e) {
        switch (e->kind) {
        case Kind::Sum:
            for (const auto& k : e->kids) acc(k);
            return;
        case Kind::Number:
            if (e->num != 0) buckets[unit] += e->num;
            return;
        default: {
            auto [c, mono] = split_coefficient(e);
            buckets[mono] += c;
            return;
        }
        }
    };
    for (const auto& t : terms) acc(t);

    std::vector<Expr> out;
    out.reserve(buckets.size());
    for (auto& [mono, c] : buckets) {
        if (c == 0) continue;
        if (mono->kind == Kind::Number) {
            out.push_back(number(c * mono->num));
        } else if (c == 1) {
            out.push_back(mono);
        } else {
            out.push_back(raw_product(c, product_factors(mono)));
        }
    }
    std::sort(out.begin(), out.end(),
              [](const Expr& a, const Expr& b) { return compare(a, b) < 0; });
    return raw_sum(std::move(out));
}

Expr kernel(KernelFn fn, std::vector<Expr> args) {
    switch (fn) {
    case KernelFn::Exp:
        if (args.size() != 1) throw StructureError("exp takes one argument");
        if (is_zero_number(args[0])) return one_expr();
        if (args[0]->kind == Kind::Kernel && args[0]->fn == KernelFn::Log)
            return args[0]->kids[0];
        break;
    case KernelFn::Log:
        if (args.size() != 1) throw StructureError("log takes one argument");
        if (args[0]->is_number(1)) return zero_expr();
        if (args[0]->kind == Kind::Kernel && args[0]->fn == KernelFn::Exp)
            return args[0]->kids[0];
        break;
    case KernelFn::Sin:
        if (args.size() != 1) throw StructureError("sin takes one argument");
        if (is_zero_number(args[0])) return zero_expr();
        break;
    case KernelFn::Cos:
        if (args.size() != 1) throw StructureError("cos takes one argument");
        if (is_zero_number(args[0])) return one_expr();
        break;
    case KernelFn::Erfi:
        if (args.size() != 1) throw StructureError("erfi takes one argument");
        if (is_zero_number(args[0])) return zero_expr();
        break;
    case KernelFn::Hyp2F1:
        if (args.size() != 4) throw StructureError("hyp2f1 takes four arguments");
        if (is_zero_number(args[3])) return one_expr();
        break;
    }
    ExprNode n;
    n.kind = Kind::Kernel;
    n.fn = fn;
    n.kids = std::move(args);
    return finish(std::move(n));
}

Expr sub(const Expr& a, const Expr& b) { return add({a, neg(b)}); }
Expr neg(const Expr& a) { return mul({number(-1), a}); }
Expr div(const Expr& a, const Expr& b) { return mul({a, pow(b, Rational(-1))}); }
Expr sqrt_(const Expr& a) { return pow(a, make_rational(1, 2)); }
Expr exp_(const Expr& a) { return kernel(KernelFn::Exp, {a}); }
Expr log_(const Expr& a) { return kernel(KernelFn::Log, {a}); }
Expr sin_(const Expr& a) { return kernel(KernelFn::Sin, {a}); }
Expr cos_(const Expr& a) { return kernel(KernelFn::Cos, {a}); }
Expr erfi_(const Expr& a) { return kernel(KernelFn::Erfi, {a}); }
Expr hyp2f1_(const Expr& a, const Expr& b, const Expr& c, const Expr& z) {
    return kernel(KernelFn::Hyp2F1, {a, b, c, z});
}

// ---- structure utilities ----

bool is_atom(const Expr& e) {
    return e->kind == Kind::Param || e->kind == Kind::Indep || e->kind == Kind::Jet;
}

bool is_zero_number(const Expr& e) { return e->kind == Kind::Number && e->num == 0; }

bool contains(const Expr& e, const Expr& sub) {
    if (equal(e, sub)) return true;
    for (const auto& k : e->kids)
        if (contains(k, sub)) return true;
    return false;
}

void for_each_node(const Expr& e, const std::function<void(const Expr&)>& fn) {
    fn(e);
    for (const auto& k : e->kids) for_each_node(k, fn);
}

std::vector<Expr> free_atoms(const Expr& e) {
    std::map<Expr, bool, ExprLess> seen;
    std::function<void(const Expr&)> walk = [&](const Expr& x) {
        switch (x->kind) {
        case Kind::Param:
        case Kind::Indep:
        case Kind::Jet:
        case Kind::Unknown:
            seen.emplace(x, true);
            if (x->kind != Kind::Unknown) return;
            break;
        default:
            break;
        }
        for (const auto& k : x->kids) walk(k);
    };
    walk(e);
    std::vector<Expr> out;
    out.reserve(seen.size());
    for (auto& [a, _] : seen) out.push_back(a);
    return out;
}

std::pair<Rational, Expr> split_coefficient(const Expr& term) {
    if (term->kind == Kind::Number) return {term->num, one_expr()};
    if (term->kind == Kind::Product && term->kids.front()->kind == Kind::Number) {
        std::vector<Expr> rest(term->kids.begin() + 1, term->kids.end());
        return {term->kids.front()->num, raw_product(Rational(1), std::move(rest))};
    }
    return {Rational(1), term};
}

std::vector<Expr> sum_terms(const Expr& e) {
    if (e->kind == Kind::Sum) return e->kids;
    return {e};
}

std::vector<Expr> product_factors(const Expr& e) {
    if (e->kind == Kind::Product) return e->kids;
    return {e};
}

Rational exponent_of(const Expr& term, const Expr& base) {
    for (const auto& f : product_factors(term)) {
        if (equal(f, base)) return Rational(1);
        if (f->kind == Kind::Power && equal(f->kids[0], base)) return f->expo;
    }
    return Rational(0);
}

// ---- normalize ----

Expr normalize(const Expr& e) {
    switch (e->kind) {
    case Kind::Number:
        return number(e->num);
    case Kind::Param:
        return parameter(e->name);
    case Kind::Indep:
        return indep(e->name, e->var_index);
    case Kind::Jet:
        return jet(e->jet);
    case Kind::Unknown: {
        std::vector<Expr> args;
        args.reserve(e->kids.size());
        for (const auto& k : e->kids) args.push_back(normalize(k));
        return unknown(e->name, e->fam, std::move(args), e->dmulti);
    }
    case Kind::Power:
        return pow(normalize(e->kids[0]), e->expo);
    case Kind::Kernel: {
        std::vector<Expr> args;
        args.reserve(e->kids.size());
        for (const auto& k : e->kids) args.push_back(normalize(k));
        return kernel(e->fn, std::move(args));
    }
    case Kind::Product: {
        std::vector<Expr> kids;
        kids.reserve(e->kids.size());
        for (const auto& k : e->kids) kids.push_back(normalize(k));
        return mul(std::move(kids));
    }
    case Kind::Sum: {
        std::vector<Expr> kids;
        kids.reserve(e->kids.size());
        for (const auto& k : e->kids) kids.push_back(normalize(k));
        return add(std::move(kids));
    }
    }
    return e;
}

// ---- derivations ----

namespace {

Expr kernel_slot_derivative(const Expr& k, std::size_t slot) {
    const auto& args = k->kids;
    switch (k->fn) {
    case KernelFn::Exp:
        return k;
    case KernelFn::Log:
        return pow(args[0], Rational(-1));
    case KernelFn::Sin:
        return cos_(args[0]);
    case KernelFn::Cos:
        return neg(sin_(args[0]));
    case KernelFn::Erfi:
        return mul({number(2), pow(pi_const(), make_rational(-1, 2)),
                    exp_(pow(args[0], Rational(2)))});
    case KernelFn::Hyp2F1:
        if (slot == 3) {
            Expr a = args[0], b = args[1], c = args[2], z = args[3];
            return mul({a, b, pow(c, Rational(-1)),
                        hyp2f1_(a + number(1), b + number(1), c + number(1), z)});
        }
        throw Error("derivative of hyp2f1 with respect to a parameter slot is not supported");
    }
    throw Error("unknown kernel");
}

struct DerivationRules {
    std::function<Expr(const Expr&)> on_param;
    std::function<Expr(const Expr&)> on_indep;
    std::function<Expr(const Expr&)> on_jet;
    std::function<Expr(const Expr&)> on_unknown_extra; // may be null
};

Expr apply_derivation(const Expr& e, const DerivationRules& rules,
                      std::unordered_map<const ExprNode*, Expr>& memo) {
    auto it = memo.find(e.get());
    if (it != memo.end()) return it->second;
    Expr r;
    switch (e->kind) {
    case Kind::Number:
        r = zero_expr();
        break;
    case Kind::Param:
        r = rules.on_param(e);
        break;
    case Kind::Indep:
        r = rules.on_indep(e);
        break;
    case Kind::Jet:
        r = rules.on_jet(e);
        break;
    case Kind::Unknown: {
        std::vector<Expr> terms;
        if (rules.on_unknown_extra) {
            Expr extra = rules.on_unknown_extra(e);
            if (!is_zero_number(extra)) terms.push_back(extra);
        }
        for (std::size_t s = 0; s < e->kids.size(); ++s) {
            Expr da = apply_derivation(e->kids[s], rules, memo);
            if (is_zero_number(da)) continue;
            std::vector<int> dm = e->dmulti;
            dm[s] += 1;
            terms.push_back(mul({unknown(e->name, e->fam, e->kids, std::move(dm)), da}));
        }
        r = add(std::move(terms));
        break;
    }
    case Kind::Kernel: {
        std::vector<Expr> terms;
        for (std::size_t s = 0; s < e->kids.size(); ++s) {
            Expr da = apply_derivation(e->kids[s], rules, memo);
            if (is_zero_number(da)) continue;
            terms.push_back(mul({kernel_slot_derivative(e, s), da}));
        }
        r = add(std::move(terms));
        break;
    }
    case Kind::Power: {
        Expr db = apply_derivation(e->kids[0], rules, memo);
        if (is_zero_number(db))
            r = zero_expr();
        else
            r = mul({number(e->expo), pow(e->kids[0], e->expo - 1), db});
        break;
    }
    case Kind::Product: {
        std::vector<Expr> terms;
        for (std::size_t i = 0; i < e->kids.size(); ++i) {
            Expr di = apply_derivation(e->kids[i], rules, memo);
            if (is_zero_number(di)) continue;
            std::vector<Expr> fac = e->kids;
            fac[i] = di;
            terms.push_back(mul(std::move(fac)));
        }
        r = add(std::move(terms));
        break;
    }
    case Kind::Sum: {
        std::vector<Expr> terms;
        terms.reserve(e->kids.size());
        for (const auto& k : e->kids) terms.push_back(apply_derivation(k, rules, memo));
        r = add(std::move(terms));
        break;
    }
    }
    memo.emplace(e.get(), r);
    return r;
}

} // namespace

Expr differentiate(const Expr& e, const Expr& v) {
    if (!is_atom(v))
        throw Error("differentiate: not an atom: " + to_string(v));
    DerivationRules rules;
    rules.on_param = [&](const Expr& p) { return equal(p, v) ? one_expr() : zero_expr(); };
    rules.on_indep = rules.on_param;
    rules.on_jet = rules.on_param;
    std::unordered_map<const ExprNode*, Expr> memo;
    return apply_derivation(e, rules, memo);
}

// Exposed for jet/approx (total derivatives and the recursion operator are
// derivations with different atom actions).
Expr apply_derivation_rules(const Expr& e,
                            const std::function<Expr(const Expr&)>& on_param,
                            const std::function<Expr(const Expr&)>& on_indep,
                            const std::function<Expr(const Expr&)>& on_jet,
                            const std::function<Expr(const Expr&)>& on_unknown_extra) {
    DerivationRules rules{on_param, on_indep, on_jet, on_unknown_extra};
    std::unordered_map<const ExprNode*, Expr> memo;
    return apply_derivation(e, rules, memo);
}

// ---- substitute ----

namespace {

struct FunctionalBinding {
    Expr key;         // unknown application with zero multi-index
    Expr replacement;
};

struct SubstCtx {
    const Bindings* bindings;
    bool derive_jets;
    std::map<std::pair<std::string, int>, FunctionalBinding> functional;
    ExprMap<Expr> derived_cache; // functional/jet derivative results
    std::unordered_map<const ExprNode*, Expr> memo;
};

Expr subst_rec(const Expr& e, SubstCtx& ctx);

Expr functional_value(const Expr& node, const FunctionalBinding& fb, SubstCtx& ctx,
                      const std::vector<Expr>& actual_args) {
    // Key: the differentiated application with the formal arguments.
    Expr probe = unknown(node->name, node->fam, fb.key->kids, node->dmulti);
    Expr value;
    auto it = ctx.derived_cache.find(probe);
    if (it != ctx.derived_cache.end()) {
        value = it->second;
    } else {
        value = fb.replacement;
        for (std::size_t s = 0; s < node->dmulti.size(); ++s) {
            const Expr& formal = fb.key->kids[s];
            if (node->dmulti[s] > 0 && !is_atom(formal))
                throw StructureError("functional substitution needs atomic formal arguments");
            for (int i = 0; i < node->dmulti[s]; ++i) value = differentiate(value, formal);
        }
        ctx.derived_cache.emplace(probe, value);
    }
    bool same = actual_args.size() == fb.key->kids.size();
    if (same)
        for (std::size_t s = 0; s < actual_args.size(); ++s)
            if (!equal(actual_args[s], fb.key->kids[s])) { same = false; break; }
    if (same) return value;
    Bindings argmap;
    for (std::size_t s = 0; s < actual_args.size(); ++s)
        argmap[fb.key->kids[s]] = actual_args[s];
    return substitute(value, argmap, false);
}

Expr subst_rec(const Expr& e, SubstCtx& ctx) {
    auto mit = ctx.memo.find(e.get());
    if (mit != ctx.memo.end()) return mit->second;

    Expr r;
    auto bit = ctx.bindings->find(e);
    if (bit != ctx.bindings->end()) {
        r = bit->second;
        ctx.memo.emplace(e.get(), r);
        return r;
    }

    switch (e->kind) {
    case Kind::Number:
    case Kind::Param:
    case Kind::Indep:
        r = e;
        break;
    case Kind::Jet: {
        if (ctx.derive_jets && !e->jet.sigma.empty()) {
            JetKey plain = e->jet;
            plain.sigma.clear();
            Expr probe = jet(plain);
            auto pit = ctx.bindings->find(probe);
            if (pit != ctx.bindings->end()) {
                auto dit = ctx.derived_cache.find(e);
                if (dit != ctx.derived_cache.end()) {
                    r = dit->second;
                } else {
                    Expr value = pit->second;
                    for (const auto& s : e->jet.sigma) {
                        Expr v = indep(s.var, s.var_index);
                        for (int i = 0; i < s.count; ++i) value = differentiate(value, v);
                    }
                    ctx.derived_cache.emplace(e, value);
                    r = value;
                }
                break;
            }
        }
        r = e;
        break;
    }
    case Kind::Unknown: {
        std::vector<Expr> args;
        args.reserve(e->kids.size());
        bool changed = false;
        for (const auto& k : e->kids) {
            args.push_back(subst_rec(k, ctx));
            if (args.back().get() != k.get()) changed = true;
        }
        auto fit = ctx.functional.find({e->name, e->fam.value_or(-1)});
        if (fit != ctx.functional.end()) {
            r = functional_value(e, fit->second, ctx, args);
            break;
        }
        r = changed ? unknown(e->name, e->fam, std::move(args), e->dmulti) : e;
        break;
    }
    case Kind::Power:
        r = pow(subst_rec(e->kids[0], ctx), e->expo);
        break;
    case Kind::Kernel: {
        std::vector<Expr> args;
        args.reserve(e->kids.size());
        for (const auto& k : e->kids) args.push_back(subst_rec(k, ctx));
        r = kernel(e->fn, std::move(args));
        break;
    }
    case Kind::Product: {
        std::vector<Expr> kids;
        kids.reserve(e->kids.size());
        for (const auto& k : e->kids) kids.push_back(subst_rec(k, ctx));
        r = mul(std::move(kids));
        break;
    }
    case Kind::Sum: {
        std::vector<Expr> kids;
        kids.reserve(e->kids.size());
        for (const auto& k : e->kids) kids.push_back(subst_rec(k, ctx));
        r = add(std::move(kids));
        break;
    }
    }
    ctx.memo.emplace(e.get(), r);
    return r;
}

} // namespace

Expr substitute(const Expr& e, const Bindings& bindings, bool derive_jets) {
    if (bindings.empty()) return e;
    SubstCtx ctx;
    ctx.bindings = &bindings;
    ctx.derive_jets = derive_jets;
    for (const auto& [k, v] : bindings) {
        if (k->kind != Kind::Unknown) continue;
        bool plain = true;
        for (int d : k->dmulti)
            if (d != 0) plain = false;
        if (!plain) continue;
        auto key = std::make_pair(k->name, k->fam.value_or(-1));
        if (ctx.functional.count(key))
            throw StructureError("conflicting functional bindings for " + k->name);
        ctx.functional[key] = FunctionalBinding{k, v};
    }
    return subst_rec(e, ctx);
}

// ---- clear_denominators ----

Expr clear_denominators(const Expr& e) {
    Expr cur = e;
    for (int iter = 0; iter < 4; ++iter) {
        std::vector<Expr> terms = sum_terms(cur);
        if (terms.size() == 1 && terms[0]->kind == Kind::Number) return cur;
        // candidate bases: appear with a negative or fractional exponent
        std::vector<Expr> bases;
        for (const auto& t : terms) {
            for (const auto& f : product_factors(t)) {
                if (f->kind != Kind::Power) continue;
                if (sign(f->expo) < 0 || !is_integer(f->expo)) {
                    bool known = false;
                    for (const auto& b : bases)
                        if (equal(b, f->kids[0])) { known = true; break; }
                    if (!known) bases.push_back(f->kids[0]);
                }
            }
        }
        if (bases.empty()) return cur;
        // Raw power nodes: they must merge with the terms' exponents inside
        // mul() rather than expand up front.
        std::vector<Expr> multipliers;
        for (const auto& b : bases) {
            Rational m = exponent_of(terms[0], b);
            for (const auto& t : terms) {
                Rational q = exponent_of(t, b);
                if (q < m) m = q;
            }
            if (m < 0 || !is_integer(m)) multipliers.push_back(raw_power(b, -m));
        }
        if (multipliers.empty()) return cur;
        std::vector<Expr> cleared;
        cleared.reserve(terms.size());
        for (const auto& t : terms) {
            std::vector<Expr> fac = multipliers;
            fac.push_back(t);
            cleared.push_back(mul(std::move(fac)));
        }
        Expr next = add(std::move(cleared));
        if (equal(next, cur)) return cur;
        cur = next;
        if (is_zero_number(cur)) return cur;
    }
    return cur;
}

// ---- printing ----

namespace {

bool single_char_sigma(const JetKey& k) {
    for (const auto& s : k.sigma)
        if (s.var.size() != 1) return false;
    return true;
}

void print_expr(std::ostringstream& os, const Expr& e, int parent_prec);

void print_jet(std::ostringstream& os, const JetKey& k) {
    os << k.dep;
    if (k.order >= 0) os << '[' << k.order << ']';
    if (k.sigma.empty()) return;
    if (single_char_sigma(k)) {
        if (k.total_order() == 1) {
            os << '_' << k.sigma[0].var;
        } else {
            os << "_{";
            for (const auto& s : k.sigma)
                for (int i = 0; i < s.count; ++i) os << s.var;
            os << '}';
        }
    } else {
        os << "_{";
        bool first = true;
        for (const auto& s : k.sigma)
            for (int i = 0; i < s.count; ++i) {
                if (!first) os << ',';
                os << s.var;
                first = false;
            }
        os << '}';
    }
}

void print_unknown(std::ostringstream& os, const Expr& e) {
    std::string label = e->name;
    if (e->fam) label += std::to_string(*e->fam);
    int total = 0;
    for (int d : e->dmulti) total += d;
    if (total == 0) {
        os << label;
    } else if (e->kids.size() == 1) {
        os << label;
        for (int i = 0; i < total; ++i) os << '\'';
    } else {
        os << "D[";
        bool first = true;
        for (std::size_t s = 0; s < e->dmulti.size(); ++s)
            for (int i = 0; i < e->dmulti[s]; ++i) {
                if (!first) os << ',';
                os << (s + 1);
                first = false;
            }
        os << "](" << label << ')';
    }
    os << '(';
    for (std::size_t i = 0; i < e->kids.size(); ++i) {
        if (i) os << ',';
        print_expr(os, e->kids[i], 0);
    }
    os << ')';
}

// precedence: 0 sum, 1 product, 2 power operand, 3 atom
void print_expr(std::ostringstream& os, const Expr& e, int parent_prec) {
    switch (e->kind) {
    case Kind::Number: {
        bool needs = (sign(e->num) < 0 || !is_integer(e->num)) && parent_prec >= 2;
        if (needs) os << '(';
        os << to_string(e->num);
        if (needs) os << ')';
        return;
    }
    case Kind::Param:
    case Kind::Indep:
        os << e->name;
        return;
    case Kind::Jet:
        print_jet(os, e->jet);
        return;
    case Kind::Unknown:
        print_unknown(os, e);
        return;
    case Kind::Kernel:
        os << kernel_name(e->fn) << '(';
        for (std::size_t i = 0; i < e->kids.size(); ++i) {
            if (i) os << ',';
            print_expr(os, e->kids[i], 0);
        }
        os << ')';
        return;
    case Kind::Power: {
        if (parent_prec > 2) os << '(';
        print_expr(os, e->kids[0], 3);
        os << '^';
        if (is_integer(e->expo) && sign(e->expo) > 0)
            os << to_string(e->expo);
        else
            os << '(' << to_string(e->expo) << ')';
        if (parent_prec > 2) os << ')';
        return;
    }
    case Kind::Product: {
        bool needs = parent_prec >= 2;
        if (needs) os << '(';
        auto [c, mono] = split_coefficient(e);
        bool lead = true;
        if (c == -1) {
            os << '-';
        } else if (c != 1) {
            os << to_string(c);
            lead = false;
        }
        for (const auto& f : product_factors(mono)) {
            if (!lead) os << '*';
            print_expr(os, f, 2);
            lead = false;
        }
        if (needs) os << ')';
        return;
    }
    case Kind::Sum: {
        bool needs = parent_prec >= 1;
        if (needs) os << '(';
        bool first = true;
        for (const auto& t : e->kids) {
            auto [c, mono] = split_coefficient(t);
            if (!first) os << (sign(c) < 0 ? " - " : " + ");
            Rational cp = (!first && sign(c) < 0) ? Rational(-c) : c;
            if (mono->kind == Kind::Number) {
                os << to_string(cp);
            } else if (cp == 1) {
                print_expr(os, mono, 1);
            } else if (cp == -1) {
                os << '-';
                print_expr(os, mono, 1);
            } else {
                os << to_string(cp);
                for (const auto& f : product_factors(mono)) {
                    os << '*';
                    print_expr(os, f, 2);
                }
            }
            first = false;
        }
        if (needs) os << ')';
        return;
    }
    }
}

} // namespace

std::string to_string(const Expr& e) {
    std::ostringstream os;
    print_expr(os, e, 0);
    return os.str();
}

const char* to_string(ZeroVerdict v) {
    switch (v) {
    case ZeroVerdict::ProvedZero: return "proved-zero";
    case ZeroVerdict::ProvedNonzero: return "proved-nonzero";
    case ZeroVerdict::NumericallyZero: return "numerically-zero";
    case ZeroVerdict::NumericallyNonzero: return "numerically-nonzero";
    }
    return "?";
}

} // namespace apxsym
