#ifndef DDTUNE_TRAJECTORY_HPP
#define DDTUNE_TRAJECTORY_HPP

#include <array>
#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

namespace ddtune {

struct ProfileBounds {
  double displacement = 0.0;  // m, nonzero, sign sets direction
  double v_max = 0.0;         // m/s, > 0
  double a_max = 0.0;         // m/s^2, > 0
  double j_max = 0.0;         // m/s^3, > 0
  double s_max = 0.0;         // m/s^4, > 0
};

struct MotionProfile {
  double ts = 0.0;
  std::vector<double> pos, vel, acc, jerk, snap;
  // Rectangle lengths of the velocity pulse and the three smoothing windows,
  // in samples; their sum times ts is the motion span.
  std::array<std::size_t, 4> window_samples{};
  std::size_t size() const { return pos.size(); }
  double motion_span() const {
    return ts * static_cast<double>(window_samples[0] + window_samples[1] +
                                    window_samples[2] + window_samples[3]);
  }
};

// Fourth-order point-to-point profile built by convolving a rectangular
// velocity pulse with three moving-average windows, realized as a snap-level
// pulse pattern integrated four times with the trapezoidal rule. Window
// lengths are rounded up to whole samples and the pulse height is adjusted so
// the displacement is met exactly; rounding up only lowers the realized
// derivative peaks, so every bound holds. pos/vel/acc/jerk are exactly the
// successive trapezoidal integrals of snap.
MotionProfile plan_fourth_order(const ProfileBounds& bounds, double ts);

struct ProfileValidation {
  bool ok = false;
  double max_vel = 0.0, max_acc = 0.0, max_jerk = 0.0, max_snap = 0.0;
  std::size_t argmax_vel = 0, argmax_acc = 0, argmax_jerk = 0, argmax_snap = 0;
  double end_position_error = 0.0;   // |pos.back() - displacement|
  double start_vel = 0.0, end_vel = 0.0;
  double reintegration_rel_error = 0.0;  // pos rebuilt from snap, relative
  std::string failure;               // empty when ok
};

ProfileValidation validate_profile(const MotionProfile& profile,
                                   const ProfileBounds& bounds);

// Header t,pos,vel,acc,jerk,snap; full round-trip precision.
void profile_to_csv(const MotionProfile& profile, std::ostream& os);
void profile_to_csv_file(const MotionProfile& profile, const std::string& path);

}  // namespace ddtune

#endif
