#pragma once

#include <functional>
#include <vector>

namespace kamlattice {

struct QuadratureRule {
  std::vector<double> nodes;    // on [-1, 1]
  std::vector<double> weights;
};

/// n-point Gauss-Legendre rule, nodes ascending.
QuadratureRule gauss_legendre(int n);

double integrate(const QuadratureRule& rule, const std::function<double(double)>& f, double a,
                 double b);

/// Chebyshev interpolant on [a, b] built from values at the n Chebyshev-Gauss points.
class ChebyshevSeries {
public:
  ChebyshevSeries() = default;
  ChebyshevSeries(const std::function<double(double)>& f, double a, double b, int n);

  double operator()(double x) const;
  double lower() const { return a_; }
  double upper() const { return b_; }
  const std::vector<double>& coefficients() const { return c_; }

private:
  double a_ = 0.0;
  double b_ = 1.0;
  std::vector<double> c_;
};

}  // namespace kamlattice
