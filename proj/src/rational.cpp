#include "apxsym/rational.hpp"

#include "apxsym/error.hpp"

#include <cctype>
#include <cstdlib>

namespace apxsym {

Rational rational_pow_int(const Rational& q, long e) {
    if (e == 0) return Rational(1);
    if (q == 0) {
        if (e < 0) throw StructureError("0 raised to a negative power");
        return Rational(0);
    }
    unsigned long mag = static_cast<unsigned long>(e < 0 ? -e : e);
    mpz_class num, den;
    mpz_pow_ui(num.get_mpz_t(), q.get_num_mpz_t(), mag);
    mpz_pow_ui(den.get_mpz_t(), q.get_den_mpz_t(), mag);
    Rational r;
    if (e > 0)
        r = Rational(num, den);
    else
        r = Rational(den, num);
    r.canonicalize();
    return r;
}

std::optional<Rational> rational_root(const Rational& q, unsigned long n) {
    if (n == 1) return q;
    if (q < 0) return std::nullopt; // even roots of negatives are not real;
                                    // odd ones are not needed here
    mpz_class num_root, den_root;
    int num_exact = mpz_root(num_root.get_mpz_t(), q.get_num_mpz_t(), n);
    int den_exact = mpz_root(den_root.get_mpz_t(), q.get_den_mpz_t(), n);
    if (!num_exact || !den_exact) return std::nullopt;
    Rational r(num_root, den_root);
    r.canonicalize();
    return r;
}

Rational rational_gcd(const Rational& a, const Rational& b) {
    mpz_class g, l;
    mpz_gcd(g.get_mpz_t(), a.get_num_mpz_t(), b.get_num_mpz_t());
    mpz_lcm(l.get_mpz_t(), a.get_den_mpz_t(), b.get_den_mpz_t());
    Rational r(g, l);
    r.canonicalize();
    return r;
}

double to_double(const Rational& q) { return q.get_d(); }

std::string to_string(const Rational& q) {
    if (is_integer(q)) return q.get_num().get_str();
    return q.get_num().get_str() + "/" + q.get_den().get_str();
}

std::optional<Rational> rational_from_string(const std::string& text) {
    if (text.empty()) return std::nullopt;
    std::size_t dot = text.find('.');
    std::size_t slash = text.find('/');
    try {
        if (dot != std::string::npos) {
            if (slash != std::string::npos) return std::nullopt;
            std::string digits = text.substr(0, dot) + text.substr(dot + 1);
            std::size_t frac_len = text.size() - dot - 1;
            if (digits.empty() || digits == "-") return std::nullopt;
            for (std::size_t i = 0; i < digits.size(); ++i) {
                if (i == 0 && digits[i] == '-') continue;
                if (!std::isdigit(static_cast<unsigned char>(digits[i]))) return std::nullopt;
            }
            mpz_class num(digits, 10);
            mpz_class den;
            mpz_ui_pow_ui(den.get_mpz_t(), 10, frac_len);
            Rational q(num, den);
            q.canonicalize();
            return q;
        }
        Rational q(text, 10);
        q.canonicalize();
        return q;
    } catch (const std::invalid_argument&) {
        return std::nullopt;
    }
}

std::size_t rational_hash(const Rational& q) {
    auto mix = [](std::size_t h, std::size_t v) {
        return (h ^ v) * 0x100000001b3ull;
    };
    std::size_t h = 0xcbf29ce484222325ull;
    const mpz_srcptr num = q.get_num_mpz_t();
    const mpz_srcptr den = q.get_den_mpz_t();
    h = mix(h, static_cast<std::size_t>(mpz_sgn(num)) + 7);
    for (std::size_t i = 0; i < mpz_size(num); ++i)
        h = mix(h, static_cast<std::size_t>(mpz_getlimbn(num, i)));
    for (std::size_t i = 0; i < mpz_size(den); ++i)
        h = mix(h, static_cast<std::size_t>(mpz_getlimbn(den, i)));
    return h;
}

} // namespace apxsym
