#ifndef DDTUNE_CONTROLLER_HPP
#define DDTUNE_CONTROLLER_HPP

#include <array>

#include "ddtune/linear_filter.hpp"

namespace ddtune {

// PID in time-constant form: C(s) = kp * (1 + 1/(ti*s) + td*s).
struct PidGains {
  double kp = 0.0;
  double ti = 0.0;
  double td = 0.0;
};

// Optimization parameterization rho = [kp, kp/ti, kp*td] = [Kp, Ki, Kd].
using ParamVector = std::array<double, 3>;

ParamVector to_param_vector(const PidGains& g);
PidGains to_gains(const ParamVector& rho);

void validate_gains(const PidGains& g);
void validate_rho(const ParamVector& rho);

// Discrete PID realization. The derivative term is realized as the filtered
// derivative td*s / (1 + s*td/n_filt) so the controller stays proper, and the
// whole controller is discretized with the trapezoidal rule. The denominator
// keeps an exact pole at z = 1 (integral action).
LinearFilter make_controller(const PidGains& g, double ts,
                             double n_filt = 100.0);

// The three filters (dC/drho_j)(s) / C(s) for the controller realized by
// make_controller with the same n_filt. They share one denominator, are all
// proper, and satisfy sum_j rho[j]*filter_j == 1 identically. With the
// derivative filter time constant -> 0 they reduce to
// [s, 1, s^2] / (Kd*s^2 + Kp*s + Ki).
// Requires rho[2] > 0: with Kd == 0 the third filter would be improper.
std::array<LinearFilter, 3> gradient_filters(const ParamVector& rho, double ts,
                                             double n_filt = 100.0);

struct FrequencyPoint {
  double omega = 0.0;      // rad/s
  double magnitude = 0.0;  // abs(C(j*omega))
  double phase = 0.0;      // rad
};

// Ideal continuous-time response C(j*omega) = Kp + Ki/(j*omega) + Kd*j*omega,
// for reporting. Frequencies must be positive and below Nyquist (pi/ts).
std::vector<FrequencyPoint> frequency_response(const ParamVector& rho,
                                               const std::vector<double>& freqs,
                                               double ts);

}  // namespace ddtune

#endif
