#pragma once

#include <random>

#include "mvtc/market_model.hpp"

namespace mvtc::test {

/// Seven-asset universe with mu_i = sigma_i and constant 25% correlation.
inline Universe seven_asset_universe()
{
  Vector mu(7);
  mu << 0.01, 0.02, 0.03, 0.04, 0.05, 0.075, 0.10;
  return Universe::create(mu, build_covariance(mu, 0.25));
}

/// Long-only Markowitz optimum of seven_asset_universe() at 2% volatility,
/// from an independent conic solver.
inline Vector table1_current_weights()
{
  Vector w(7);
  w << 0.26136329634024463, 0.2141311561030742, 0.16129843916614126, 0.12792795503685828,
      0.1056803443475041, 0.07342065651441898, 0.05617815249175854;
  return w;
}

/// c- = 2%, c+ = 1%, delta- = delta+ = 5%.
inline CostSpec table1_costs() { return CostSpec::uniform(7, 0.02, 0.01, 0.05, 0.05); }

inline Vector random_vector(std::mt19937_64 &rng, Index n, double lo, double hi)
{
  std::uniform_real_distribution<double> dist(lo, hi);
  Vector v(n);
  for (Index i = 0; i < n; ++i)
    v[i] = dist(rng);
  return v;
}

inline Matrix random_matrix(std::mt19937_64 &rng, Index r, Index c)
{
  std::normal_distribution<double> dist(0.0, 1.0);
  Matrix m(r, c);
  for (Index i = 0; i < r; ++i)
    for (Index j = 0; j < c; ++j)
      m(i, j) = dist(rng);
  return m;
}

inline double inf_norm(const Vector &v) { return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff(); }

} // namespace mvtc::test
