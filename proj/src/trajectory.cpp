#include "ddtune/trajectory.hpp"

#include <cmath>
#include <fstream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "ddtune/util.hpp"

namespace ddtune {

namespace {

void validate_bounds(const ProfileBounds& b, double ts) {
  auto bad = [](double v) { return !std::isfinite(v); };
  if (bad(b.displacement) || bad(b.v_max) || bad(b.a_max) || bad(b.j_max) ||
      bad(b.s_max))
    throw std::invalid_argument("ProfileBounds: entries must be finite");
  if (b.displacement == 0.0)
    throw std::invalid_argument("ProfileBounds: displacement must be nonzero");
  if (b.v_max <= 0.0 || b.a_max <= 0.0 || b.j_max <= 0.0 || b.s_max <= 0.0)
    throw std::invalid_argument("ProfileBounds: derivative bounds must be > 0");
  if (ts <= 0.0) throw std::invalid_argument("plan_fourth_order: ts must be > 0");
}

std::vector<double> cumtrapz(const std::vector<double>& x, double ts) {
  std::vector<double> y(x.size(), 0.0);
  for (std::size_t k = 1; k < x.size(); ++k)
    y[k] = y[k - 1] + 0.5 * ts * (x[k] + x[k - 1]);
  return y;
}

std::size_t ceil_samples(double v) {
  if (v <= 1.0) return 1;
  if (v > 5e7)
    throw std::invalid_argument(
        "plan_fourth_order: bounds require an implausible window length; "
        "increase ts or relax the derivative bounds");
  return static_cast<std::size_t>(std::ceil(v - 1e-12));
}

}  // namespace

MotionProfile plan_fourth_order(const ProfileBounds& bounds, double ts) {
  validate_bounds(bounds, ts);
  const double d = std::fabs(bounds.displacement);
  const double sign = bounds.displacement < 0.0 ? -1.0 : 1.0;

  // Window lengths from the requested peak velocity; rounding up and the
  // ordering fixups only increase lengths, i.e. lower the realized peaks.
  const double h0 = bounds.v_max;
  std::size_t L1 = ceil_samples(h0 / (bounds.a_max * ts));
  std::size_t L2 = ceil_samples(h0 / (static_cast<double>(L1) * bounds.j_max * ts * ts));
  std::size_t L3 = ceil_samples(h0 / (static_cast<double>(L1) *
                                      static_cast<double>(L2) * bounds.s_max *
                                      ts * ts * ts));
  // Keep the smoothing cascade ordered with gaps so the +/- snap pulses and
  // the jerk ramps never overlap with equal sign.
  if (L2 < L3) L2 = L3;
  if (L1 < L2 + L3) L1 = L2 + L3;
  std::size_t L0 = ceil_samples(d / (bounds.v_max * ts));
  if (L0 < L1 + L2 + L3) L0 = L1 + L2 + L3;

  const double total = static_cast<double>(L0) + static_cast<double>(L1) +
                       static_cast<double>(L2) + static_cast<double>(L3);
  if (total > 2e8)
    throw std::invalid_argument(
        "plan_fourth_order: the discretized windows cannot realize this move "
        "within a sane sample budget; increase ts or relax the bounds");

  const double h = d / (static_cast<double>(L0) * ts);  // <= v_max
  const double amp = h / (static_cast<double>(L1) * static_cast<double>(L2) *
                          static_cast<double>(L3) * ts * ts * ts);

  // Snap pattern: eight rectangles of length L3 at offsets {0,L0}+{0,L1}+{0,L2}
  // with alternating signs. Four trailing samples let the trapezoidal chain
  // settle inside the arrays.
  const std::size_t n = L0 + L1 + L2 + L3 + 5;
  std::vector<double> snap(n, 0.0);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      for (int l = 0; l < 2; ++l) {
        const double s = ((i + j + l) % 2 == 0) ? amp : -amp;
        const std::size_t off = static_cast<std::size_t>(i) * L0 +
                                static_cast<std::size_t>(j) * L1 +
                                static_cast<std::size_t>(l) * L2;
        for (std::size_t k = off + 1; k <= off + L3; ++k) snap[k] += s;
      }

  MotionProfile p;
  p.ts = ts;
  p.window_samples = {L0, L1, L2, L3};
  p.snap = std::move(snap);
  p.jerk = cumtrapz(p.snap, ts);
  p.acc = cumtrapz(p.jerk, ts);
  p.vel = cumtrapz(p.acc, ts);
  p.pos = cumtrapz(p.vel, ts);
  if (sign < 0.0)
    for (auto* series : {&p.pos, &p.vel, &p.acc, &p.jerk, &p.snap})
      for (double& v : *series) v = -v;
  return p;
}

ProfileValidation validate_profile(const MotionProfile& profile,
                                   const ProfileBounds& bounds) {
  ProfileValidation v;
  std::ostringstream fail;
  const std::size_t n = profile.size();
  if (n == 0 || profile.vel.size() != n || profile.acc.size() != n ||
      profile.jerk.size() != n || profile.snap.size() != n) {
    v.failure = "series lengths are inconsistent";
    return v;
  }

  auto scan = [](const std::vector<double>& s, double& mx, std::size_t& arg) {
    mx = 0.0;
    arg = 0;
    for (std::size_t k = 0; k < s.size(); ++k)
      if (std::fabs(s[k]) > mx) {
        mx = std::fabs(s[k]);
        arg = k;
      }
  };
  scan(profile.vel, v.max_vel, v.argmax_vel);
  scan(profile.acc, v.max_acc, v.argmax_acc);
  scan(profile.jerk, v.max_jerk, v.argmax_jerk);
  scan(profile.snap, v.max_snap, v.argmax_snap);

  const double slack = 1.0 + 1e-9;
  auto check = [&](const char* name, double mx, std::size_t arg, double bound) {
    if (mx > bound * slack)
      fail << name << " bound exceeded at sample " << arg << " (" << mx
           << " > " << bound << "); ";
  };
  check("velocity", v.max_vel, v.argmax_vel, bounds.v_max);
  check("acceleration", v.max_acc, v.argmax_acc, bounds.a_max);
  check("jerk", v.max_jerk, v.argmax_jerk, bounds.j_max);
  check("snap", v.max_snap, v.argmax_snap, bounds.s_max);

  v.end_position_error = std::fabs(profile.pos.back() - bounds.displacement);
  if (v.end_position_error > std::fabs(bounds.v_max * profile.ts))
    fail << "final position misses displacement by " << v.end_position_error
         << "; ";

  v.start_vel = profile.vel.front();
  v.end_vel = profile.vel.back();
  if (std::fabs(v.start_vel) > 1e-12 * bounds.v_max ||
      std::fabs(v.end_vel) > 1e-12 * bounds.v_max)
    fail << "profile does not start and end at rest; ";

  // Rebuild position from snap through the same trapezoidal chain.
  std::vector<double> j(n, 0.0), a(n, 0.0), vel(n, 0.0), pos(n, 0.0);
  for (std::size_t k = 1; k < n; ++k) {
    j[k] = j[k - 1] + 0.5 * profile.ts * (profile.snap[k] + profile.snap[k - 1]);
    a[k] = a[k - 1] + 0.5 * profile.ts * (j[k] + j[k - 1]);
    vel[k] = vel[k - 1] + 0.5 * profile.ts * (a[k] + a[k - 1]);
    pos[k] = pos[k - 1] + 0.5 * profile.ts * (vel[k] + vel[k - 1]);
  }
  double worst = 0.0, scale = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    worst = std::max(worst, std::fabs(pos[k] - profile.pos[k]));
    scale = std::max(scale, std::fabs(profile.pos[k]));
  }
  v.reintegration_rel_error = scale > 0.0 ? worst / scale : worst;
  if (v.reintegration_rel_error > 1e-9)
    fail << "snap re-integration deviates from stored position ("
         << v.reintegration_rel_error << " relative); ";

  v.failure = fail.str();
  v.ok = v.failure.empty();
  return v;
}

void profile_to_csv(const MotionProfile& profile, std::ostream& os) {
  os << "t,pos,vel,acc,jerk,snap\n";
  for (std::size_t k = 0; k < profile.size(); ++k) {
    os << format_double(static_cast<double>(k) * profile.ts) << ','
       << format_double(profile.pos[k]) << ',' << format_double(profile.vel[k])
       << ',' << format_double(profile.acc[k]) << ','
       << format_double(profile.jerk[k]) << ','
       << format_double(profile.snap[k]) << '\n';
  }
}

void profile_to_csv_file(const MotionProfile& profile, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("profile_to_csv_file: cannot open " + path);
  profile_to_csv(profile, f);
}

}  // namespace ddtune
