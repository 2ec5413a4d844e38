#include "kamlattice/quadrature.hpp"

#include <cmath>
#include <utility>

#include "kamlattice/errors.hpp"
#include "kamlattice/model.hpp"

namespace kamlattice {

namespace {

// Returns (P_n(x), P_n'(x)).
std::pair<double, double> legendre(int n, double x) {
  double p0 = 1.0;
  double p1 = x;
  for (int k = 2; k <= n; ++k) {
    const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
    p0 = p1;
    p1 = p2;
  }
  return {p1, n * (x * p1 - p0) / (x * x - 1.0)};
}

}  // namespace

QuadratureRule gauss_legendre(int n) {
  if (n < 2) throw DomainError("Gauss-Legendre order must be at least 2");
  QuadratureRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(kPi * (i + 0.75) / (n + 0.5));
    for (int it = 0; it < 100; ++it) {
      const auto [p, dp] = legendre(n, x);
      const double dx = p / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    const double dp = legendre(n, x).second;
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule.nodes[i] = -x;
    rule.nodes[n - 1 - i] = x;
    rule.weights[i] = w;
    rule.weights[n - 1 - i] = w;
  }
  if (n % 2 == 1) rule.nodes[n / 2] = 0.0;
  return rule;
}

double integrate(const QuadratureRule& rule, const std::function<double(double)>& f, double a,
                 double b) {
  const double half = 0.5 * (b - a);
  const double mid = 0.5 * (a + b);
  double sum = 0.0;
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
    sum += rule.weights[i] * f(mid + half * rule.nodes[i]);
  }
  return half * sum;
}

ChebyshevSeries::ChebyshevSeries(const std::function<double(double)>& f, double a, double b,
                                 int n)
    : a_(a), b_(b), c_(n, 0.0) {
  if (n < 2 || !(b > a)) throw DomainError("invalid Chebyshev interval");
  std::vector<double> fx(n);
  for (int k = 0; k < n; ++k) {
    const double t = std::cos(kPi * (k + 0.5) / n);
    fx[k] = f(0.5 * (a + b) + 0.5 * (b - a) * t);
  }
  for (int j = 0; j < n; ++j) {
    double s = 0.0;
    for (int k = 0; k < n; ++k) s += fx[k] * std::cos(kPi * j * (k + 0.5) / n);
    c_[j] = 2.0 * s / n;
  }
  c_[0] *= 0.5;
}

double ChebyshevSeries::operator()(double x) const {
  const double t = (2.0 * x - a_ - b_) / (b_ - a_);
  double b1 = 0.0;
  double b2 = 0.0;
  for (std::size_t j = c_.size() - 1; j >= 1; --j) {
    const double b0 = 2.0 * t * b1 - b2 + c_[j];
    b2 = b1;
    b1 = b0;
  }
  return t * b1 - b2 + c_[0];
}

}  // namespace kamlattice
