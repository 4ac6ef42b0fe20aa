#include "doctest.h"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "ddtune/trajectory.hpp"

using namespace ddtune;

namespace {
const ProfileBounds kDefaultBounds{0.01, 0.05, 1.0, 100.0, 1e4};
const double kTs = 2e-4;

double peak_abs(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}
}  // namespace

TEST_CASE("bound validation rejects degenerate requests") {
  ProfileBounds b = kDefaultBounds;
  b.displacement = 0.0;
  CHECK_THROWS_AS(plan_fourth_order(b, kTs), std::invalid_argument);

  b = kDefaultBounds;
  b.v_max = -1.0;
  CHECK_THROWS_AS(plan_fourth_order(b, kTs), std::invalid_argument);

  b = kDefaultBounds;
  b.s_max = 0.0;
  CHECK_THROWS_AS(plan_fourth_order(b, kTs), std::invalid_argument);

  CHECK_THROWS_AS(plan_fourth_order(kDefaultBounds, 0.0),
                  std::invalid_argument);
  CHECK_THROWS_AS(plan_fourth_order(kDefaultBounds, std::nan("")),
                  std::invalid_argument);
}

TEST_CASE("default move produces the known window pattern") {
  auto p = plan_fourth_order(kDefaultBounds, kTs);
  // velocity-limited 10 mm move: 0.2 s velocity pulse smoothed by
  // 50 ms, 10 ms, 10 ms windows
  CHECK(p.window_samples[0] == 1000);
  CHECK(p.window_samples[1] == 250);
  CHECK(p.window_samples[2] == 50);
  CHECK(p.window_samples[3] == 50);
  CHECK(p.size() == 1355);
  CHECK(p.ts == kTs);
}

TEST_CASE("profile derivatives are exact trapezoidal integrals of snap") {
  auto p = plan_fourth_order(kDefaultBounds, kTs);
  auto integrate = [&](const std::vector<double>& d) {
    std::vector<double> out(d.size(), 0.0);
    for (std::size_t k = 1; k < d.size(); ++k)
      out[k] = out[k - 1] + 0.5 * kTs * (d[k] + d[k - 1]);
    return out;
  };
  CHECK(p.jerk == integrate(p.snap));
  CHECK(p.acc == integrate(p.jerk));
  CHECK(p.vel == integrate(p.acc));
  CHECK(p.pos == integrate(p.vel));
}

TEST_CASE("profile respects every kinematic bound") {
  auto p = plan_fourth_order(kDefaultBounds, kTs);
  CHECK(peak_abs(p.vel) <= kDefaultBounds.v_max * (1.0 + 1e-12));
  CHECK(peak_abs(p.acc) <= kDefaultBounds.a_max * (1.0 + 1e-12));
  CHECK(peak_abs(p.jerk) <= kDefaultBounds.j_max * (1.0 + 1e-12));
  CHECK(peak_abs(p.snap) <= kDefaultBounds.s_max * (1.0 + 1e-12));
}

TEST_CASE("profile lands exactly on the displacement and comes to rest") {
  auto p = plan_fourth_order(kDefaultBounds, kTs);
  CHECK(std::abs(p.pos.back() - kDefaultBounds.displacement) <
        kDefaultBounds.v_max * kTs);
  CHECK(std::abs(p.vel.front()) <= 1e-9 * peak_abs(p.vel));
  CHECK(std::abs(p.vel.back()) <= 1e-9 * peak_abs(p.vel));
}

TEST_CASE("velocity is symmetric about the motion midpoint") {
  auto p = plan_fourth_order(kDefaultBounds, kTs);
  // snap is antisymmetric about the midpoint of the active span, so vel is
  // symmetric: vel[k] == vel[S + 1 - k] with S the total window sum
  std::size_t S = p.window_samples[0] + p.window_samples[1] +
                  p.window_samples[2] + p.window_samples[3];
  REQUIRE(S + 1 < p.size() + 1);
  for (std::size_t k = 1; k <= S; ++k) {
    CHECK(p.vel[k] == doctest::Approx(p.vel[S + 1 - k]).epsilon(1e-12));
  }
}

TEST_CASE("negative displacement mirrors the positive profile") {
  ProfileBounds neg = kDefaultBounds;
  neg.displacement = -kDefaultBounds.displacement;
  auto p = plan_fourth_order(kDefaultBounds, kTs);
  auto n = plan_fourth_order(neg, kTs);
  REQUIRE(n.size() == p.size());
  for (std::size_t k = 0; k < p.size(); ++k) {
    CHECK(n.pos[k] == doctest::Approx(-p.pos[k]).epsilon(1e-15));
    CHECK(n.vel[k] == doctest::Approx(-p.vel[k]).epsilon(1e-15));
  }
}

TEST_CASE("tightening the velocity bound scales the windows predictably") {
  // halving displacement and doubling the derivative headroom halves the
  // motion span sample count
  ProfileBounds fast = kDefaultBounds;
  fast.v_max *= 2.0;
  fast.a_max *= 4.0;
  fast.j_max *= 8.0;
  fast.s_max *= 16.0;
  auto slow = plan_fourth_order(kDefaultBounds, kTs);
  auto quick = plan_fourth_order(fast, kTs);
  std::size_t slow_sum = slow.window_samples[0] + slow.window_samples[1] +
                         slow.window_samples[2] + slow.window_samples[3];
  std::size_t quick_sum = quick.window_samples[0] + quick.window_samples[1] +
                          quick.window_samples[2] + quick.window_samples[3];
  CHECK(quick_sum * 2 == slow_sum);
}

TEST_CASE("short moves that never reach v_max still satisfy all bounds") {
  ProfileBounds tiny = kDefaultBounds;
  tiny.displacement = 5e-5;
  auto p = plan_fourth_order(tiny, kTs);
  auto v = validate_profile(p, tiny);
  CHECK(v.ok);
  CHECK(v.failure.empty());
  CHECK(peak_abs(p.vel) < tiny.v_max);
}

TEST_CASE("validate_profile reports the peaks it measured") {
  auto p = plan_fourth_order(kDefaultBounds, kTs);
  auto v = validate_profile(p, kDefaultBounds);
  REQUIRE(v.ok);
  CHECK(v.max_vel == doctest::Approx(peak_abs(p.vel)));
  CHECK(v.max_acc == doctest::Approx(peak_abs(p.acc)));
  CHECK(v.max_jerk == doctest::Approx(peak_abs(p.jerk)));
  CHECK(v.max_snap == doctest::Approx(peak_abs(p.snap)));
  CHECK(std::abs(p.vel[v.argmax_vel]) == doctest::Approx(v.max_vel));
  CHECK(v.end_position_error < kDefaultBounds.v_max * kTs);
  CHECK(v.reintegration_rel_error <= 1e-9);
}

TEST_CASE("validate_profile flags a corrupted profile") {
  auto p = plan_fourth_order(kDefaultBounds, kTs);
  p.vel[p.size() / 2] = 10.0 * kDefaultBounds.v_max;
  auto v = validate_profile(p, kDefaultBounds);
  CHECK_FALSE(v.ok);
  CHECK_FALSE(v.failure.empty());
}

TEST_CASE("infeasible sample budgets are rejected as domain errors") {
  ProfileBounds huge = kDefaultBounds;
  huge.displacement = 1e7;  // needs ~2e9 samples of velocity pulse
  CHECK_THROWS_AS(plan_fourth_order(huge, kTs), std::invalid_argument);
}

TEST_CASE("csv export has the profile header and full length") {
  ProfileBounds small = kDefaultBounds;
  small.displacement = 1e-4;
  auto p = plan_fourth_order(small, kTs);
  std::ostringstream os;
  profile_to_csv(p, os);
  std::string text = os.str();
  CHECK(text.find("t,pos,vel,acc,jerk,snap") == 0);
  std::size_t lines = 0;
  for (char ch : text)
    if (ch == '\n') ++lines;
  CHECK(lines == p.size() + 1);
}
