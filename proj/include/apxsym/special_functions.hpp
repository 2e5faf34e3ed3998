#pragma once

namespace apxsym {

// Gauss hypergeometric 2F1(a,b;c;z). Direct series for |z| <= 0.5, Pfaff
// transformation (1-z)^(-a) 2F1(a, c-b; c; z/(z-1)) for z < -0.5. The region
// 0.5 < z and beyond is rejected with EvalDomainError; the fixture arguments
// are all of the form -exp(delta x)/c2 < 0.
double hyp2f1(double a, double b, double c, double z);

// Same value through the other Pfaff branch, (1-z)^(-b) 2F1(c-a, b; c;
// z/(z-1)). Valid for z < 0; used as the independent second route in the
// dual-path consistency checks.
double hyp2f1_pfaff_b(double a, double b, double c, double z);

// Imaginary error function, (2/sqrt(pi)) * integral_0^x exp(t^2) dt, by
// Kahan-summed Maclaurin series. |x| <= 12.
double erfi(double x);

} // namespace apxsym
