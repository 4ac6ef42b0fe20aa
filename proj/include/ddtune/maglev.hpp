#ifndef DDTUNE_MAGLEV_HPP
#define DDTUNE_MAGLEV_HPP

#include <array>

namespace ddtune {
namespace maglev {

// Planar-motor forcer geometry. gamma is derived from the pitch so
// gamma * tau == pi/2 exactly.
struct Geometry {
  double alpha = 1.144;
  double beta = 2.3924;
  double tau = 0.01;   // magnet pitch, m
  double cf = 1.0;     // force-constant scale
  int n_turns = 4;     // series turns per phase
  double gamma() const;
};

// Throws unless alpha > 0, tau > 0, cf > 0, n_turns >= 1 and the two-phase
// force matrix is invertible (margin nonzero).
void validate_geometry(const Geometry& g);

// sqrt(2)*tau - (2*alpha/gamma)*cos(gamma*tau/2 + beta). Zero iff the force
// matrix is singular, i.e. cos(beta + pi/4) == sqrt(2)*pi/(4*alpha).
double invertibility_margin(const Geometry& g);

struct ForceConstants {
  double kx = 0.0;
  double kz = 0.0;
};

// Per-unit-current force constants at stage position (x, z), z >= 0 above the
// magnet array. Both decay as exp(-gamma*z) and are periodic in x.
ForceConstants force_constants(const Geometry& g, double x, double z);

using Mat2 = std::array<std::array<double, 2>, 2>;

// Rows: x/z force per unit current; columns: the two phases, the second
// displaced by 3*tau.
Mat2 phi_matrix(const Geometry& g, double x, double z);

double det_direct(const Geometry& g, double x, double z);
double det_closed_form(const Geometry& g, double z);  // x-independent

struct ForceVector {
  double fx = 0.0;
  double fz = 0.0;
};

using PhaseCurrents = std::array<double, 2>;

// F = n_turns * Phi * I.
ForceVector forcer_force(const Geometry& g, double x, double z,
                         const PhaseCurrents& currents);

struct AllocationResult {
  PhaseCurrents currents{0.0, 0.0};
  bool within_limit = false;
  double limit = 0.0;
};

// I = Phi^-1 * F / n_turns. If either |I_j| exceeds the limit the result is
// returned unclamped with within_limit == false; nothing is saturated here.
AllocationResult allocate_currents(const Geometry& g, double x, double z,
                                   const ForceVector& f, double limit = 1.2);

}  // namespace maglev
}  // namespace ddtune

#endif
