#include "relpose/polynomial.h"

#include <algorithm>
#include <cmath>

#include <Eigen/Eigenvalues>

namespace relpose {

double evaluate_polynomial(std::span<const double> coeffs, double x) {
  double value = 0.0;
  for (auto it = coeffs.rbegin(); it != coeffs.rend(); ++it) value = value * x + *it;
  return value;
}

namespace {

double evaluate_derivative(std::span<const double> coeffs, double x) {
  double value = 0.0;
  for (std::size_t k = coeffs.size() - 1; k >= 1; --k) value = value * x + k * coeffs[k];
  return value;
}

}  // namespace

std::vector<double> real_roots(std::span<const double> coeffs, double imag_tolerance) {
  double scale = 0.0;
  for (double c : coeffs) scale = std::max(scale, std::abs(c));
  if (scale == 0.0) return {};

  int degree = static_cast<int>(coeffs.size()) - 1;
  while (degree > 0 && std::abs(coeffs[degree]) <= 1e-14 * scale) --degree;
  if (degree <= 0) return {};

  const auto poly = coeffs.first(degree + 1);
  std::vector<double> roots;
  if (degree == 1) {
    roots.push_back(-poly[0] / poly[1]);
    return roots;
  }

  Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(degree, degree);
  for (int i = 0; i < degree; ++i) companion(0, i) = -poly[degree - 1 - i] / poly[degree];
  for (int i = 1; i < degree; ++i) companion(i, i - 1) = 1.0;

  Eigen::EigenSolver<Eigen::MatrixXd> solver(companion, false);
  const auto& eig = solver.eigenvalues();
  for (int i = 0; i < degree; ++i) {
    const double re = eig(i).real();
    if (std::abs(eig(i).imag()) > imag_tolerance * std::max(1.0, std::abs(re))) continue;
    double x = re;
    for (int iter = 0; iter < 3; ++iter) {
      const double d = evaluate_derivative(poly, x);
      if (d == 0.0) break;
      const double step = evaluate_polynomial(poly, x) / d;
      if (!std::isfinite(step)) break;
      x -= step;
    }
    // Keep the polished value only if it did not wander off.
    if (std::abs(evaluate_polynomial(poly, x)) > std::abs(evaluate_polynomial(poly, re))) x = re;
    roots.push_back(x);
  }
  std::sort(roots.begin(), roots.end());
  return roots;
}

}  // namespace relpose
