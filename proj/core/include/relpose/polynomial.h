#pragma once

#include <span>
#include <vector>

namespace relpose {

// Coefficients are ordered by ascending power: c[0] + c[1] x + ... + c[n] x^n.
double evaluate_polynomial(std::span<const double> coeffs, double x);

// Real roots of the polynomial from the eigenvalues of its companion matrix.
// Leading coefficients that are negligible relative to the largest one are
// dropped first. Eigenvalues whose imaginary part is below imag_tolerance
// (scaled by max(1, |root|)) are accepted and polished with a few Newton steps.
std::vector<double> real_roots(std::span<const double> coeffs, double imag_tolerance = 1e-10);

}  // namespace relpose
