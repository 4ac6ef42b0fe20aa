#ifndef DDTUNE_LINEAR_FILTER_HPP
#define DDTUNE_LINEAR_FILTER_HPP

#include <complex>
#include <cstddef>
#include <vector>

namespace ddtune {

// Discrete-time rational transfer function with state (direct form II
// transposed). Coefficients are stored in ascending powers of z^-1 and the
// denominator is normalized so den[0] == 1. num.size() <= den.size() is
// required (proper transfer function).
class LinearFilter {
 public:
  LinearFilter() = default;
  LinearFilter(std::vector<double> num, std::vector<double> den, double ts);

  double step(double x);
  std::vector<double> process(const std::vector<double>& x);
  void reset();

  const std::vector<double>& num() const { return num_; }
  const std::vector<double>& den() const { return den_; }
  double ts() const { return ts_; }

  // Frequency response at z = exp(j*omega*ts), omega in rad/s.
  std::complex<double> response(double omega) const;

 private:
  std::vector<double> num_;
  std::vector<double> den_;
  std::vector<double> state_;
  double ts_ = 0.0;
};

// Convolution of polynomial coefficient vectors.
std::vector<double> poly_mul(const std::vector<double>& a,
                             const std::vector<double>& b);

// Maps num(s)/den(s) (coefficients in ascending powers of s) to a discrete
// filter via the trapezoidal substitution s = (2/ts)*(1 - z^-1)/(1 + z^-1).
// Both polynomials are lifted with the denominator's degree so filters that
// share a continuous denominator share the discrete one too.
LinearFilter bilinear(const std::vector<double>& num_s,
                      const std::vector<double>& den_s, double ts);

// Roots of c[0] + c[1]*x + ... + c[n]*x^n via the companion matrix.
std::vector<std::complex<double>> poly_roots(const std::vector<double>& c);

struct StabilityReport {
  bool stable = true;
  std::complex<double> offending_root{0.0, 0.0};
};

// Checks that every pole lies strictly inside the unit circle. A pole with
// |z| >= 1 - tol is reported as offending.
StabilityReport check_discrete_stability(const LinearFilter& f,
                                         double tol = 1e-9);

}  // namespace ddtune

#endif
