#include "apxsym/special_functions.hpp"

#include "apxsym/error.hpp"

#include <cmath>
#include <string>

namespace apxsym {

namespace {

constexpr int kMaxTerms = 100000;
constexpr double kTermTol = 1e-16;

bool near_nonpositive_integer(double c) {
    return c <= 0.0 && std::fabs(c - std::round(c)) < 1e-12;
}

// Plain series sum, valid for |z| < 1; terms are Kahan-summed. The stopping
// rule certifies the tail only when the c-a-b decay has set in, hence the
// consecutive-small-terms requirement.
double hyp2f1_series(double a, double b, double c, double z) {
    double sum = 1.0, comp = 0.0;
    double term = 1.0;
    int small_streak = 0;
    for (int k = 0; k < kMaxTerms; ++k) {
        term *= (a + k) * (b + k) / ((c + k) * (k + 1)) * z;
        double y = term - comp;
        double t = sum + y;
        comp = (t - sum) - y;
        sum = t;
        if (std::fabs(term) <= kTermTol * std::fabs(sum)) {
            if (++small_streak >= 2) return sum;
        } else {
            small_streak = 0;
        }
        if (!std::isfinite(sum))
            throw EvalDomainError("hyp2f1 series overflow");
    }
    throw EvalDomainError("hyp2f1 series did not converge within " +
                          std::to_string(kMaxTerms) + " terms");
}

} // namespace

double hyp2f1(double a, double b, double c, double z) {
    if (near_nonpositive_integer(c))
        throw EvalDomainError("hyp2f1: c is a non-positive integer");
    if (z == 0.0) return 1.0;
    if (std::fabs(z) <= 0.5) return hyp2f1_series(a, b, c, z);
    if (z < -0.5) {
        double w = z / (z - 1.0); // in (1/2, 1)
        return std::pow(1.0 - z, -a) * hyp2f1_series(a, c - b, c, w);
    }
    throw EvalDomainError("hyp2f1: unsupported region z > 0.5 (z = " +
                          std::to_string(z) + ")");
}

double hyp2f1_pfaff_b(double a, double b, double c, double z) {
    if (near_nonpositive_integer(c))
        throw EvalDomainError("hyp2f1: c is a non-positive integer");
    if (z == 0.0) return 1.0;
    if (z >= 0.5)
        throw EvalDomainError("hyp2f1_pfaff_b: unsupported region");
    double w = z / (z - 1.0);
    return std::pow(1.0 - z, -b) * hyp2f1_series(c - a, b, c, w);
}

double erfi(double x) {
    if (std::fabs(x) > 12.0)
        throw EvalDomainError("erfi: |x| > 12 rejected (overflow region)");
    if (x == 0.0) return 0.0;
    const double x2 = x * x;
    // sum x^(2k+1) / (k! (2k+1))
    double term = x; // k = 0
    double sum = x, comp = 0.0;
    for (int k = 1; k < kMaxTerms; ++k) {
        term *= x2 / k;
        double contrib = term / (2 * k + 1);
        double y = contrib - comp;
        double t = sum + y;
        comp = (t - sum) - y;
        sum = t;
        if (std::fabs(contrib) <= kTermTol * std::fabs(sum))
            return sum * 2.0 / std::sqrt(M_PI);
    }
    throw EvalDomainError("erfi series did not converge");
}

} // namespace apxsym
