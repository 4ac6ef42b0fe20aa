#ifndef DDTUNE_SCENARIO_HPP
#define DDTUNE_SCENARIO_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "ddtune/ift_engine.hpp"
#include "ddtune/trajectory.hpp"

namespace ddtune {

// A complete tuning scenario as read from a sectioned key=value file.
// Unknown sections or keys are rejected so typos cannot silently change runs.
struct ScenarioConfig {
  // [plant]
  double mass = 1.0;          // kg
  double damping = 0.5;       // N*s/m
  double output_scale = 1.0;  // measurement units per meter
  // [controller]
  PidGains gains{30.0, 0.002, 0.00012};
  double n_filt = 100.0;
  // [cost]
  CostWeights weights{1e7, 1.0};
  // [profile]
  ProfileBounds bounds{0.01, 0.05, 1.0, 100.0, 1e4};
  // [noise]
  double sigma = 0.0;
  std::uint64_t seed = 1;
  // [run]
  double ts = 2e-4;          // s
  double settle_time = 0.1;  // s of final-position hold appended to the move
  TuneOptions options;
  std::string output_dir = "out";
};

ScenarioConfig load_scenario(const std::string& path);
void validate_scenario(const ScenarioConfig& cfg);

MotionProfile scenario_profile(const ScenarioConfig& cfg);

// Builds the closed-loop setup: the reference is the planned position scaled
// into measurement units with a settle-time hold appended, and the plant is
// the damped rigid-body axis with the same output scaling.
LoopSetup make_loop_setup(const ScenarioConfig& cfg);

// iterations.log, per-experiment CSVs (iter<i>_exp<k>.csv) and summary.txt.
void write_tune_outputs(const std::vector<IterationReport>& reports,
                        const ScenarioConfig& cfg, const std::string& dir);

}  // namespace ddtune

#endif
