#include "ddtune/plant_sim.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <ostream>
#include <random>
#include <stdexcept>

#include "ddtune/util.hpp"

namespace ddtune {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

}  // namespace

PlantModel make_reference_plant(double mass, double damping, double ts) {
  if (mass <= 0.0)
    throw std::invalid_argument("make_reference_plant: mass must be > 0");
  if (damping < 0.0)
    throw std::invalid_argument("make_reference_plant: damping must be >= 0");
  if (ts <= 0.0)
    throw std::invalid_argument("make_reference_plant: ts must be > 0");
  return bilinear({1.0}, {0.0, damping, mass}, ts);
}

std::vector<double> make_noise_series(const NoiseSpec& spec, std::size_t n) {
  if (spec.sigma < 0.0)
    throw std::invalid_argument("NoiseSpec: sigma must be >= 0");
  std::vector<double> out(n, 0.0);
  if (spec.sigma == 0.0) return out;
  std::mt19937_64 rng(splitmix64(spec.seed ^ splitmix64(spec.stream)));
  std::normal_distribution<double> dist(0.0, spec.sigma);
  for (double& v : out) v = dist(rng);
  return out;
}

std::vector<double> sinusoidal_disturbance(double amplitude, double freq_hz,
                                           double ts, std::size_t n) {
  if (ts <= 0.0)
    throw std::invalid_argument("sinusoidal_disturbance: ts must be > 0");
  if (!(freq_hz >= 0.0) || freq_hz >= 0.5 / ts)
    throw std::invalid_argument(
        "sinusoidal_disturbance: frequency must lie in [0, Nyquist)");
  std::vector<double> out(n);
  const double w = 2.0 * M_PI * freq_hz * ts;
  for (std::size_t k = 0; k < n; ++k)
    out[k] = amplitude * std::sin(w * static_cast<double>(k));
  return out;
}

std::vector<double> derivative_series(const std::vector<double>& u, double ts) {
  if (ts <= 0.0)
    throw std::invalid_argument("derivative_series: ts must be > 0");
  std::vector<double> d(u.size(), 0.0);
  for (std::size_t k = 1; k < u.size(); ++k) d[k] = (u[k] - u[k - 1]) / ts;
  return d;
}

SimResult simulate_closed_loop(const PlantModel& plant,
                               const LinearFilter& controller,
                               const std::vector<double>& r,
                               const NoiseSpec& noise,
                               const std::vector<double>& disturbance) {
  if (r.empty())
    throw std::invalid_argument("simulate_closed_loop: empty reference");
  if (plant.ts() != controller.ts())
    throw std::invalid_argument(
        "simulate_closed_loop: plant and controller sample periods differ");
  if (!disturbance.empty() && disturbance.size() != r.size())
    throw std::invalid_argument(
        "simulate_closed_loop: disturbance length must match reference");

  const double ts = plant.ts();
  const std::size_t n = r.size();
  double r_peak = 0.0;
  for (double v : r) r_peak = std::max(r_peak, std::fabs(v));
  const double guard_scale = std::max(r_peak, 1000.0 * noise.sigma);
  const double guard = guard_scale > 0.0
                           ? 1e6 * guard_scale
                           : std::numeric_limits<double>::infinity();

  LinearFilter p = plant;
  LinearFilter c = controller;
  p.reset();
  c.reset();
  const std::vector<double> nseq = make_noise_series(noise, n);

  SimResult res;
  ExperimentRecord& rec = res.record;
  rec.ts = ts;
  rec.r.reserve(n);
  rec.y.reserve(n);
  rec.u.reserve(n);
  rec.e.reserve(n);

  double yp = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double d = disturbance.empty() ? 0.0 : disturbance[k];
    const double ymeas = yp + nseq[k] + d;
    const double err = r[k] - ymeas;
    const double u = c.step(err);
    rec.r.push_back(r[k]);
    rec.y.push_back(ymeas);
    rec.e.push_back(err);
    rec.u.push_back(u);
    if (std::fabs(ymeas) > guard || !std::isfinite(ymeas)) {
      res.diverged = true;
      res.diverged_at = k;
      break;
    }
    yp = p.step(u);
  }
  rec.udot = derivative_series(rec.u, ts);
  return res;
}

void record_to_csv(const ExperimentRecord& rec, std::ostream& os) {
  os << "t,r,y,u,e,udot\n";
  for (std::size_t k = 0; k < rec.size(); ++k) {
    os << format_double(static_cast<double>(k) * rec.ts) << ','
       << format_double(rec.r[k]) << ',' << format_double(rec.y[k]) << ','
       << format_double(rec.u[k]) << ',' << format_double(rec.e[k]) << ','
       << format_double(rec.udot[k]) << '\n';
  }
}

void record_to_csv_file(const ExperimentRecord& rec, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("record_to_csv_file: cannot open " + path);
  record_to_csv(rec, f);
}

}  // namespace ddtune
