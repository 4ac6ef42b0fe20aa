#ifndef DDTUNE_PLANT_SIM_HPP
#define DDTUNE_PLANT_SIM_HPP

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "ddtune/linear_filter.hpp"

namespace ddtune {

using PlantModel = LinearFilter;

// Damped rigid-body axis 1/(mass*s^2 + damping*s), force in, position out,
// discretized with the trapezoidal rule. mass > 0, damping >= 0.
PlantModel make_reference_plant(double mass, double damping, double ts);

// Zero-mean white Gaussian measurement noise. Distinct (seed, stream) pairs
// give independent sequences; sigma == 0 yields exact zeros.
struct NoiseSpec {
  double sigma = 0.0;
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;
};

std::vector<double> make_noise_series(const NoiseSpec& spec, std::size_t n);

// d[k] = amplitude * sin(2*pi*freq_hz * k * ts); freq_hz below Nyquist.
std::vector<double> sinusoidal_disturbance(double amplitude, double freq_hz,
                                           double ts, std::size_t n);

// One closed-loop run. y is the measured (noisy) output, e = r - y exactly,
// udot is the backward difference of u with udot[0] = 0.
struct ExperimentRecord {
  double ts = 0.0;
  std::vector<double> r, y, u, e, udot;
  std::size_t size() const { return r.size(); }
};

std::vector<double> derivative_series(const std::vector<double>& u, double ts);

struct SimResult {
  ExperimentRecord record;
  bool diverged = false;
  std::size_t diverged_at = 0;
};

// Runs e[k] = r[k] - (y_plant[k] + n[k] + d[k]); u[k] = controller(e[k]);
// y_plant[k+1] = plant(u[k]). Both filters start from zero state. The run
// aborts once |y[k]| exceeds 1e6 * max|r| (for a zero reference the guard
// scale falls back to 1000 * sigma so noise-only runs are not flagged).
// disturbance may be empty (none) or match r in length.
SimResult simulate_closed_loop(const PlantModel& plant,
                               const LinearFilter& controller,
                               const std::vector<double>& r,
                               const NoiseSpec& noise,
                               const std::vector<double>& disturbance = {});

// Header t,r,y,u,e,udot; one row per sample; full round-trip precision.
void record_to_csv(const ExperimentRecord& rec, std::ostream& os);
void record_to_csv_file(const ExperimentRecord& rec, const std::string& path);

}  // namespace ddtune

#endif
