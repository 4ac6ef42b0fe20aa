#include "ddtune/maglev.hpp"

#include <cmath>
#include <stdexcept>

namespace ddtune {
namespace maglev {

double Geometry::gamma() const { return M_PI / (2.0 * tau); }

double invertibility_margin(const Geometry& g) {
  const double gamma = g.gamma();
  return std::sqrt(2.0) * g.tau -
         (2.0 * g.alpha / gamma) * std::cos(gamma * g.tau / 2.0 + g.beta);
}

void validate_geometry(const Geometry& g) {
  if (!(g.alpha > 0.0) || !(g.tau > 0.0) || !(g.cf > 0.0))
    throw std::invalid_argument("Geometry: alpha, tau and cf must be > 0");
  if (g.n_turns < 1)
    throw std::invalid_argument("Geometry: n_turns must be >= 1");
  if (std::fabs(invertibility_margin(g)) < 1e-9 * std::sqrt(2.0) * g.tau)
    throw std::invalid_argument(
        "Geometry: force matrix is singular (cos(beta + pi/4) == "
        "sqrt(2)*pi/(4*alpha))");
}

ForceConstants force_constants(const Geometry& g, double x, double z) {
  if (z < 0.0)
    throw std::invalid_argument("force_constants: z must be >= 0");
  const double gamma = g.gamma();
  const double envelope = g.cf * std::exp(-gamma * z);
  const double lobe = -std::sqrt(2.0) * g.tau +
                      (2.0 * g.alpha / gamma) *
                          std::cos(gamma * g.tau / 2.0 + g.beta);
  ForceConstants k;
  k.kx = envelope * std::sin(gamma * x) * lobe;
  k.kz = envelope * std::cos(gamma * x) * lobe;
  return k;
}

Mat2 phi_matrix(const Geometry& g, double x, double z) {
  const ForceConstants a = force_constants(g, x, z);
  const ForceConstants b = force_constants(g, x + 3.0 * g.tau, z);
  return {{{a.kx, b.kx}, {a.kz, b.kz}}};
}

double det_direct(const Geometry& g, double x, double z) {
  const Mat2 m = phi_matrix(g, x, z);
  return m[0][0] * m[1][1] - m[0][1] * m[1][0];
}

double det_closed_form(const Geometry& g, double z) {
  const double envelope = g.cf * std::exp(-g.gamma() * z);
  const double margin = invertibility_margin(g);
  return envelope * envelope * margin * margin;
}

ForceVector forcer_force(const Geometry& g, double x, double z,
                         const PhaseCurrents& currents) {
  validate_geometry(g);
  const Mat2 m = phi_matrix(g, x, z);
  const double n = static_cast<double>(g.n_turns);
  return {n * (m[0][0] * currents[0] + m[0][1] * currents[1]),
          n * (m[1][0] * currents[0] + m[1][1] * currents[1])};
}

AllocationResult allocate_currents(const Geometry& g, double x, double z,
                                   const ForceVector& f, double limit) {
  validate_geometry(g);
  if (limit <= 0.0)
    throw std::invalid_argument("allocate_currents: limit must be > 0");
  const Mat2 m = phi_matrix(g, x, z);
  const double det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
  const double scale = g.cf * std::exp(-g.gamma() * z) * std::sqrt(2.0) * g.tau;
  if (std::fabs(det) < 1e-18 * scale * scale)
    throw std::domain_error(
        "allocate_currents: force matrix is numerically singular");
  const double n = static_cast<double>(g.n_turns);
  AllocationResult res;
  res.limit = limit;
  res.currents[0] = (m[1][1] * f.fx - m[0][1] * f.fz) / (det * n);
  res.currents[1] = (-m[1][0] * f.fx + m[0][0] * f.fz) / (det * n);
  res.within_limit = std::fabs(res.currents[0]) <= limit &&
                     std::fabs(res.currents[1]) <= limit;
  return res;
}

}  // namespace maglev
}  // namespace ddtune
