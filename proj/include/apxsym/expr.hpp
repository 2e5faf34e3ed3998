#pragma once

#include "apxsym/rational.hpp"

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace apxsym {

// Immutable expression kernel. Every Expr in the wild is canonical: the
// builders below normalize one level at construction, assuming canonical
// children, so whole trees stay in normal form bottom-up. Canonical form is
// the fully expanded polynomial over "atomic" factors: flattened sums and
// products with children sorted under a fixed total order, like terms
// collected, numeric content folded, exp factors merged per product, and
// rational powers of sums kept atomic after positive-content extraction.

enum class Kind : std::uint8_t {
    Number,   // exact rational constant
    Param,    // parameter symbol (alpha, kappa1, eps, pi, ...)
    Indep,    // independent variable (t, x)
    Jet,      // derivative coordinate of a dependent variable
    Unknown,  // unknown-function application, possibly differentiated
    Kernel,   // exp, log, sin, cos, erfi, hyp2f1 (sqrt folds to Power 1/2)
    Power,    // base ^ rational exponent
    Product,
    Sum,
};

enum class KernelFn : std::uint8_t { Exp, Log, Sin, Cos, Erfi, Hyp2F1 };

const char* kernel_name(KernelFn fn);

class ExprNode;
using Expr = std::shared_ptr<const ExprNode>;

// One entry of a derivative multi-index: how many times a jet coordinate has
// been differentiated with respect to the independent variable `var`.
struct DerivSlot {
    int var_index = 0;
    std::string var;
    int count = 0;
};

struct JetKey {
    static constexpr int kUnexpanded = -1;

    std::string dep;
    int dep_index = 0;
    int order = kUnexpanded;      // epsilon order; kUnexpanded = bare u
    std::vector<DerivSlot> sigma; // sorted by var_index, counts >= 1

    int total_order() const;
    bool is_plain() const { return sigma.empty(); }
};

class ExprNode {
  public:
    Kind kind = Kind::Number;

    Rational num;              // Number
    std::string name;          // Param, Indep, Unknown base name
    int var_index = -1;        // Indep
    JetKey jet;                // Jet
    std::optional<int> fam;    // Unknown family order (U0 -> ("U", 0))
    std::vector<int> dmulti;   // Unknown derivative multi-index per arg slot
    Rational expo;             // Power exponent
    KernelFn fn = KernelFn::Exp; // Kernel
    std::vector<Expr> kids;    // Sum/Product terms, Kernel/Unknown args,
                               // Power base at kids[0]
    std::size_t hash = 0;

    bool is_number(long v) const { return kind == Kind::Number && num == v; }
};

// ---- builders (canonicalizing) ----

Expr number(Rational q);
Expr number(long v);
Expr parameter(const std::string& name);
Expr indep(const std::string& name, int index);
Expr jet(JetKey key);
Expr unknown(const std::string& base, std::optional<int> fam,
             std::vector<Expr> args, std::vector<int> dmulti = {});
Expr add(std::vector<Expr> terms);
Expr mul(std::vector<Expr> factors);
Expr pow(const Expr& base, const Rational& exponent);
Expr kernel(KernelFn fn, std::vector<Expr> args);

Expr sub(const Expr& a, const Expr& b);
Expr neg(const Expr& a);
Expr div(const Expr& a, const Expr& b);
Expr sqrt_(const Expr& a);
Expr exp_(const Expr& a);
Expr log_(const Expr& a);
Expr sin_(const Expr& a);
Expr cos_(const Expr& a);
Expr erfi_(const Expr& a);
Expr hyp2f1_(const Expr& a, const Expr& b, const Expr& c, const Expr& z);
Expr pi_const(); // reserved parameter bound to pi numerically

inline Expr operator+(const Expr& a, const Expr& b) { return add({a, b}); }
inline Expr operator-(const Expr& a, const Expr& b) { return sub(a, b); }
inline Expr operator*(const Expr& a, const Expr& b) { return mul({a, b}); }
inline Expr operator/(const Expr& a, const Expr& b) { return div(a, b); }
inline Expr operator-(const Expr& a) { return neg(a); }

// ---- structure ----

// Total order: by kind rank, then payload (name, epsilon order, multi-index,
// children lexicographically). Induces the deterministic canonical layout.
int compare(const Expr& a, const Expr& b);
bool equal(const Expr& a, const Expr& b);

struct ExprHash {
    std::size_t operator()(const Expr& e) const { return e->hash; }
};
struct ExprEq {
    bool operator()(const Expr& a, const Expr& b) const { return equal(a, b); }
};
struct ExprLess {
    bool operator()(const Expr& a, const Expr& b) const { return compare(a, b) < 0; }
};

template <typename V>
using ExprMap = std::unordered_map<Expr, V, ExprHash, ExprEq>;
using Bindings = ExprMap<Expr>;

bool is_atom(const Expr& e); // Param, Indep or Jet
bool is_zero_number(const Expr& e);
bool contains(const Expr& e, const Expr& sub);
void for_each_node(const Expr& e, const std::function<void(const Expr&)>& fn);
std::vector<Expr> free_atoms(const Expr& e); // leaf atoms incl. unknown apps,
                                             // sorted under compare

// Splits a canonical term into rational coefficient and coefficient-free
// monomial (1 for pure numbers).
std::pair<Rational, Expr> split_coefficient(const Expr& term);
std::vector<Expr> sum_terms(const Expr& e);      // e itself if not a Sum
std::vector<Expr> product_factors(const Expr& e); // e itself if not a Product

// Exponent of `base` as a power factor of the canonical term, 0 if absent.
Rational exponent_of(const Expr& term, const Expr& base);

// ---- operations ----

// Re-canonicalizes an arbitrary tree (idempotent; a congruence).
Expr normalize(const Expr& e);

// Partial derivative with respect to an atom; every other atom is constant.
// Unknown-function applications follow the chain rule through their
// arguments. Throws on a non-atom v.
Expr differentiate(const Expr& e, const Expr& v);

// Generic derivation: linear, Leibniz on products, chain rule through kernel
// and unknown-function arguments; the atom actions select the operator
// (partial derivative, total derivative, recursion operator).
Expr apply_derivation_rules(const Expr& e,
                            const std::function<Expr(const Expr&)>& on_param,
                            const std::function<Expr(const Expr&)>& on_indep,
                            const std::function<Expr(const Expr&)>& on_jet,
                            const std::function<Expr(const Expr&)>& on_unknown_extra = nullptr);

// Simultaneous replacement of atoms and unknown-function applications,
// followed by normalization. An unknown-function binding whose key has a
// zero derivative multi-index acts functionally: derivatives of the key are
// replaced by derivatives of the bound expression. With derive_jets, a
// binding for a plain jet coordinate u[k] also rewrites its derivative
// coordinates u[k]_sigma as derivatives of the bound expression.
Expr substitute(const Expr& e, const Bindings& bindings, bool derive_jets = false);

// ---- zero testing ----

enum class ZeroVerdict {
    ProvedZero,
    ProvedNonzero,
    NumericallyZero,
    NumericallyNonzero,
};

const char* to_string(ZeroVerdict v);

struct SampleRange {
    double lo = 0.0;
    double hi = 1.0;
};

struct ZeroOptions {
    int samples = 25;
    double tolerance = 1e-9; // relative to 1 + max intermediate magnitude
    std::uint64_t seed = 0x5eed;
    int retry_factor = 8; // resampling budget per point on domain errors
    std::unordered_map<std::string, SampleRange> ranges; // by atom name
    std::vector<Expr> excludes; // samples with |expr| < guard are rejected
    double exclude_guard = 1e-4;
};

struct ZeroWitness {
    std::vector<std::pair<std::string, double>> bindings;
    double residual = 0.0;
    double scale = 1.0;
};

struct ZeroResult {
    ZeroVerdict verdict = ZeroVerdict::ProvedZero;
    std::optional<ZeroWitness> witness; // present for the nonzero verdicts
    double max_abs = 0.0;
    int samples_used = 0;
};

// proved-zero iff the normal form (after clearing denominators) is the 0
// atom; otherwise samples the free atoms at seeded random points. Throws
// EvalDomainError("inconclusive...") when the retry budget is exhausted.
ZeroResult is_zero(const Expr& e, const ZeroOptions& opts = {});

// Value-preserving helper used by the proved-zero path: multiplies a sum
// through by the negative/fractional power content of its terms.
Expr clear_denominators(const Expr& e);

// ---- printing ----

std::string to_string(const Expr& e);

} // namespace apxsym
