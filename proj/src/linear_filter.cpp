#include "ddtune/linear_filter.hpp"

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace ddtune {

LinearFilter::LinearFilter(std::vector<double> num, std::vector<double> den,
                           double ts)
    : num_(std::move(num)), den_(std::move(den)), ts_(ts) {
  if (ts_ <= 0.0) throw std::invalid_argument("LinearFilter: ts must be > 0");
  if (den_.empty()) throw std::invalid_argument("LinearFilter: empty denominator");
  if (den_[0] == 0.0)
    throw std::invalid_argument("LinearFilter: den[0] must be nonzero");
  if (num_.size() > den_.size())
    throw std::invalid_argument("LinearFilter: improper transfer function");
  const double a0 = den_[0];
  for (double& d : den_) d /= a0;
  for (double& n : num_) n /= a0;
  num_.resize(den_.size(), 0.0);
  state_.assign(den_.size() > 1 ? den_.size() - 1 : 1, 0.0);
}

double LinearFilter::step(double x) {
  const std::size_t n = den_.size();
  if (n == 1) return num_[0] * x;
  const double y = num_[0] * x + state_[0];
  for (std::size_t i = 1; i < n; ++i) {
    const double carry = (i < n - 1) ? state_[i] : 0.0;
    state_[i - 1] = num_[i] * x + carry - den_[i] * y;
  }
  return y;
}

std::vector<double> LinearFilter::process(const std::vector<double>& x) {
  std::vector<double> y(x.size());
  for (std::size_t k = 0; k < x.size(); ++k) y[k] = step(x[k]);
  return y;
}

void LinearFilter::reset() { std::fill(state_.begin(), state_.end(), 0.0); }

std::complex<double> LinearFilter::response(double omega) const {
  const std::complex<double> q = std::exp(std::complex<double>(0.0, -omega * ts_));
  std::complex<double> nv{0.0, 0.0}, dv{0.0, 0.0}, p{1.0, 0.0};
  for (std::size_t i = 0; i < den_.size(); ++i) {
    nv += num_[i] * p;
    dv += den_[i] * p;
    p *= q;
  }
  return nv / dv;
}

std::vector<double> poly_mul(const std::vector<double>& a,
                             const std::vector<double>& b) {
  if (a.empty() || b.empty()) return {};
  std::vector<double> out(a.size() + b.size() - 1, 0.0);
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b.size(); ++j) out[i + j] += a[i] * b[j];
  return out;
}

LinearFilter bilinear(const std::vector<double>& num_s,
                      const std::vector<double>& den_s, double ts) {
  if (ts <= 0.0) throw std::invalid_argument("bilinear: ts must be > 0");
  if (den_s.empty()) throw std::invalid_argument("bilinear: empty denominator");
  if (num_s.size() > den_s.size())
    throw std::invalid_argument("bilinear: improper continuous-time function");
  const std::size_t order = den_s.size() - 1;
  const double k = 2.0 / ts;
  auto lift = [&](const std::vector<double>& c) {
    std::vector<double> acc(order + 1, 0.0);
    double ki = 1.0;
    for (std::size_t i = 0; i < c.size(); ++i) {
      std::vector<double> term{1.0};
      for (std::size_t j = 0; j < i; ++j) term = poly_mul(term, {1.0, -1.0});
      for (std::size_t j = 0; j < order - i; ++j)
        term = poly_mul(term, {1.0, 1.0});
      for (std::size_t j = 0; j <= order; ++j) acc[j] += c[i] * ki * term[j];
      ki *= k;
    }
    return acc;
  };
  std::vector<double> nd = lift(num_s);
  std::vector<double> dd = lift(den_s);
  if (dd[0] == 0.0)
    throw std::invalid_argument("bilinear: resulting filter has den[0] == 0");
  return LinearFilter(std::move(nd), std::move(dd), ts);
}

std::vector<std::complex<double>> poly_roots(const std::vector<double>& c) {
  std::vector<double> p = c;
  double mx = 0.0;
  for (double v : p) mx = std::max(mx, std::fabs(v));
  if (mx == 0.0) return {};
  while (p.size() > 1 && std::fabs(p.back()) < 1e-14 * mx) p.pop_back();
  const std::size_t n = p.size() - 1;
  if (n == 0) return {};
  Eigen::MatrixXd comp = Eigen::MatrixXd::Zero(n, n);
  for (std::size_t i = 0; i < n; ++i) comp(i, n - 1) = -p[i] / p[n];
  for (std::size_t i = 1; i < n; ++i) comp(i, i - 1) = 1.0;
  Eigen::EigenSolver<Eigen::MatrixXd> es(comp, false);
  std::vector<std::complex<double>> roots(n);
  for (std::size_t i = 0; i < n; ++i) roots[i] = es.eigenvalues()(i);
  return roots;
}

StabilityReport check_discrete_stability(const LinearFilter& f, double tol) {
  StabilityReport rep;
  double worst = 0.0;
  for (const auto& r : poly_roots(f.den())) {
    // den is in powers of z^-1, so poles are the reciprocals of its roots.
    const double mag = std::abs(r);
    if (mag == 0.0) continue;  // root at infinity -> pole at zero
    const std::complex<double> pole = 1.0 / r;
    if (std::abs(pole) >= 1.0 - tol && std::abs(pole) > worst) {
      worst = std::abs(pole);
      rep.stable = false;
      rep.offending_root = pole;
    }
  }
  return rep;
}

}  // namespace ddtune
