#include "mvtc/polynomial.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>

#include "mvtc/error.hpp"

namespace mvtc {

double evaluate_polynomial(std::span<const double> coeffs, double x)
{
  double acc = 0.0;
  for (auto it = coeffs.rbegin(); it != coeffs.rend(); ++it)
    acc = acc * x + *it;
  return acc;
}

namespace {

double derivative(std::span<const double> coeffs, double x)
{
  double acc = 0.0;
  for (std::size_t k = coeffs.size(); k-- > 1;)
    acc = acc * x + static_cast<double>(k) * coeffs[k];
  return acc;
}

} // namespace

std::vector<double> real_roots(std::span<const double> coeffs)
{
  double scale = 0.0;
  for (double c : coeffs)
    scale = std::max(scale, std::abs(c));
  if (scale == 0.0)
    throw InputError("real_roots: zero polynomial");

  std::size_t degree = coeffs.size() - 1;
  while (degree > 0 && std::abs(coeffs[degree]) <= 1e-14 * scale)
    --degree;
  if (degree == 0)
    return {};
  const auto poly = coeffs.first(degree + 1);

  const auto d = static_cast<Eigen::Index>(degree);
  Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(d, d);
  for (Eigen::Index j = 0; j < d; ++j)
    companion(0, j) = -poly[degree - 1 - static_cast<std::size_t>(j)] / poly[degree];
  for (Eigen::Index i = 1; i < d; ++i)
    companion(i, i - 1) = 1.0;

  Eigen::EigenSolver<Eigen::MatrixXd> es(companion, false);
  std::vector<double> roots;
  for (const auto &z : es.eigenvalues()) {
    if (std::abs(z.imag()) > 1e-8 * (1.0 + std::abs(z.real())))
      continue;
    double x = z.real();
    const double fx = evaluate_polynomial(poly, x);
    const double dfx = derivative(poly, x);
    if (dfx != 0.0) {
      const double polished = x - fx / dfx;
      if (std::abs(evaluate_polynomial(poly, polished)) <= std::abs(fx))
        x = polished;
    }
    roots.push_back(x);
  }
  std::sort(roots.begin(), roots.end());

  std::vector<double> unique;
  for (double r : roots) {
    if (!unique.empty() && std::abs(r - unique.back()) <= 1e-9 * (1.0 + std::abs(r)))
      continue;
    unique.push_back(r);
  }
  return unique;
}

} // namespace mvtc
