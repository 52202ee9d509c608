#pragma once

#include <cmath>
#include <cstddef>
#include <map>
#include <mutex>
#include <stdexcept>
#include <vector>

namespace lpcd {

//! Gauss-Legendre rule on [-1, 1].
struct QuadratureRule
{
  std::vector<double> nodes;
  std::vector<double> weights;
};

namespace detail {

//! Nodes via Newton iteration on the Legendre recurrence.
inline QuadratureRule
make_gauss_legendre(int n)
{
  QuadratureRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  const int m = (n + 1) / 2;
  for (int i = 0; i < m; ++i) {
    double z = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    double pp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0, p1 = 0.0;
      for (int j = 0; j < n; ++j) {
        double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * j + 1.0) * z * p1 - j * p2) / (j + 1.0);
      }
      pp = n * (z * p0 - p1) / (z * z - 1.0);
      double z1 = z;
      z = z1 - p0 / pp;
      if (std::abs(z - z1) < 1e-15) {
        break;
      }
    }
    rule.nodes[i] = -z;
    rule.nodes[n - 1 - i] = z;
    rule.weights[i] = 2.0 / ((1.0 - z * z) * pp * pp);
    rule.weights[n - 1 - i] = rule.weights[i];
  }
  return rule;
}

} // namespace detail

//! Cached rule; the fixed node count keeps every integral bit-reproducible.
inline const QuadratureRule&
gauss_legendre(int n)
{
  if (n < 1) {
    throw std::invalid_argument("gauss_legendre: need n >= 1");
  }
  static std::map<int, QuadratureRule> cache;
  static std::mutex mutex;
  std::lock_guard<std::mutex> lock(mutex);
  auto it = cache.find(n);
  if (it == cache.end()) {
    it = cache.emplace(n, detail::make_gauss_legendre(n)).first;
  }
  return it->second;
}

//! Integrate f over [a, b]; returns 0 on an empty interval.
template<typename F>
double
integrate(F&& f, double a, double b, int n = 50)
{
  if (!(a < b)) {
    return 0.0;
  }
  const QuadratureRule& rule = gauss_legendre(n);
  const double mid = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  double sum = 0.0;
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
    sum += rule.weights[i] * f(mid + half * rule.nodes[i]);
  }
  return half * sum;
}

} // namespace lpcd
