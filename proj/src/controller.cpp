#include "ddtune/controller.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace ddtune {

namespace {

bool finite(double v) { return std::isfinite(v); }

}  // namespace

ParamVector to_param_vector(const PidGains& g) {
  return {g.kp, g.kp / g.ti, g.kp * g.td};
}

PidGains to_gains(const ParamVector& rho) {
  PidGains g;
  g.kp = rho[0];
  g.ti = rho[0] / rho[1];
  g.td = rho[2] / rho[0];
  return g;
}

void validate_gains(const PidGains& g) {
  if (!finite(g.kp) || !finite(g.ti) || !finite(g.td))
    throw std::invalid_argument("PidGains: entries must be finite");
  if (g.kp <= 0.0) throw std::invalid_argument("PidGains: kp must be > 0");
  if (g.ti <= 0.0) throw std::invalid_argument("PidGains: ti must be > 0");
  if (g.td < 0.0) throw std::invalid_argument("PidGains: td must be >= 0");
}

void validate_rho(const ParamVector& rho) {
  for (double v : rho)
    if (!finite(v)) throw std::invalid_argument("ParamVector: entries must be finite");
  if (rho[0] <= 0.0 || rho[1] <= 0.0)
    throw std::invalid_argument("ParamVector: Kp and Ki must be > 0");
  if (rho[2] < 0.0)
    throw std::invalid_argument("ParamVector: Kd must be >= 0");
}

LinearFilter make_controller(const PidGains& g, double ts, double n_filt) {
  validate_gains(g);
  if (ts <= 0.0) throw std::invalid_argument("make_controller: ts must be > 0");
  if (n_filt <= 0.0)
    throw std::invalid_argument("make_controller: n_filt must be > 0");
  const double kp = g.kp;
  const double ki = g.kp / g.ti;
  const double kd = g.kp * g.td;
  const double tf = g.td / n_filt;
  if (tf == 0.0) {
    // PI controller: (kp*s + ki) / s
    return bilinear({ki, kp}, {0.0, 1.0}, ts);
  }
  // (ki + (kp + ki*tf)*s + (kp*tf + kd)*s^2) / (s + tf*s^2)
  return bilinear({ki, kp + ki * tf, kp * tf + kd}, {0.0, 1.0, tf}, ts);
}

std::array<LinearFilter, 3> gradient_filters(const ParamVector& rho, double ts,
                                             double n_filt) {
  validate_rho(rho);
  if (ts <= 0.0) throw std::invalid_argument("gradient_filters: ts must be > 0");
  if (n_filt <= 0.0)
    throw std::invalid_argument("gradient_filters: n_filt must be > 0");
  if (rho[2] <= 0.0)
    throw std::invalid_argument(
        "gradient_filters: Kd must be > 0 (the derivative-channel filter "
        "s^2/C(s) is improper otherwise)");
  const double kp = rho[0];
  const double ki = rho[1];
  const double kd = rho[2];
  const double tf = kd / (kp * n_filt);
  // Common denominator: C(s) * s * (1 + tf*s), the controller numerator.
  const std::vector<double> den{ki, kp + ki * tf, kp * tf + kd};
  std::array<LinearFilter, 3> out{
      bilinear({0.0, 1.0, tf}, den, ts),   // d/dKp: (s + tf*s^2) / D
      bilinear({1.0, tf}, den, ts),        // d/dKi: (1 + tf*s) / D
      bilinear({0.0, 0.0, 1.0}, den, ts),  // d/dKd: s^2 / D
  };
  const StabilityReport rep = check_discrete_stability(out[0]);
  if (!rep.stable) {
    std::ostringstream os;
    os << "gradient_filters: denominator root at z = " << rep.offending_root.real()
       << (rep.offending_root.imag() < 0 ? " - " : " + ")
       << std::fabs(rep.offending_root.imag())
       << "j is not strictly inside the unit circle";
    throw std::runtime_error(os.str());
  }
  return out;
}

std::vector<FrequencyPoint> frequency_response(const ParamVector& rho,
                                               const std::vector<double>& freqs,
                                               double ts) {
  validate_rho(rho);
  if (ts <= 0.0)
    throw std::invalid_argument("frequency_response: ts must be > 0");
  const double nyquist = M_PI / ts;
  std::vector<FrequencyPoint> out;
  out.reserve(freqs.size());
  for (double w : freqs) {
    if (!(w > 0.0) || w >= nyquist)
      throw std::invalid_argument(
          "frequency_response: frequencies must lie in (0, pi/ts)");
    const std::complex<double> jw(0.0, w);
    const std::complex<double> c = rho[0] + rho[1] / jw + rho[2] * jw;
    out.push_back({w, std::abs(c), std::arg(c)});
  }
  return out;
}

}  // namespace ddtune
