#pragma once

#include <span>
#include <vector>

namespace mvtc {

/// Horner evaluation; coefficients in ascending powers.
double evaluate_polynomial(std::span<const double> coeffs, double x);

/// Real roots of a polynomial given in ascending powers, sorted ascending with
/// repeated roots collapsed. Leading coefficients below 1e-14 * max|coeff| are
/// dropped. Roots come from the companion-matrix eigenvalues, keeping those
/// with |imag| <= 1e-8 (1 + |re|), followed by one Newton polish.
/// Throws InputError on the zero polynomial.
std::vector<double> real_roots(std::span<const double> coeffs);

} // namespace mvtc
