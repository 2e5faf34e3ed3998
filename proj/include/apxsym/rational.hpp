#pragma once

#include <gmpxx.h>

#include <cstdint>
#include <optional>
#include <string>

namespace apxsym {

// Exact rational scalar. mpq_class keeps values canonicalized (coprime,
// positive denominator) as long as they are built through arithmetic
// operators; raw constructions go through make_rational below.
using Rational = mpq_class;

inline Rational make_rational(long num, long den = 1) {
    Rational q(num, den);
    q.canonicalize();
    return q;
}

inline bool is_integer(const Rational& q) { return q.get_den() == 1; }

inline bool fits_long(const mpz_class& z) { return z.fits_slong_p(); }

inline int sign(const Rational& q) { return sgn(q); }

// q^e for integer e; |e| must fit in an unsigned long.
Rational rational_pow_int(const Rational& q, long e);

// Exact rational root: returns r with r^n == q (n >= 1), if one exists.
std::optional<Rational> rational_root(const Rational& q, unsigned long n);

// gcd of |a| and |b| as nonnegative rationals: gcd(num)/lcm(den).
Rational rational_gcd(const Rational& a, const Rational& b);

double to_double(const Rational& q);

std::string to_string(const Rational& q);

// Parses "123", "-7/4" or decimal literals like "0.03" exactly.
std::optional<Rational> rational_from_string(const std::string& text);

std::size_t rational_hash(const Rational& q);

} // namespace apxsym
