// ddtune: data-driven PID tuning toolkit for a simulated positioning axis.
//
// Exit codes: 0 success, 1 usage/config error, 2 verification or
// optimization failure, 3 domain infeasibility (e.g. current limit).

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <stdexcept>
#include <string>

#include "CLI11.hpp"
#include "ddtune/controller.hpp"
#include "ddtune/ift_engine.hpp"
#include "ddtune/maglev.hpp"
#include "ddtune/plant_sim.hpp"
#include "ddtune/scenario.hpp"
#include "ddtune/trajectory.hpp"
#include "ddtune/util.hpp"

namespace {

using namespace ddtune;

int cmd_tune(const std::string& config_path) {
  ScenarioConfig cfg = load_scenario(config_path);
  validate_scenario(cfg);
  LoopSetup setup = make_loop_setup(cfg);

  std::vector<IterationReport> reports;
  try {
    reports = optimize(setup, cfg.gains, cfg.options);
  } catch (const std::runtime_error& ex) {
    std::fprintf(stderr, "tune: %s\n", ex.what());
    return 2;
  }
  write_tune_outputs(reports, cfg, cfg.output_dir);

  std::printf("iter  %-14s %-12s %-12s %-12s accepted\n", "J", "Kp", "Ti",
              "Td");
  for (const IterationReport& r : reports) {
    PidGains g = to_gains(r.rho);
    std::printf("%4d  %-14.8g %-12.8g %-12.8g %-12.8g %d\n", r.index,
                r.cost.total, g.kp, g.ti, g.td, r.accepted ? 1 : 0);
  }
  const IterationReport& first = reports.front();
  const IterationReport& last = reports.back();
  PidGains g0 = to_gains(first.rho);
  PidGains g1 = to_gains(last.rho);
  std::printf("\n        %-12s %-12s %-12s %-14s %-14s %-14s\n", "Kp", "Ti",
              "Td", "J_track", "J_var", "J_total");
  std::printf("before  %-12.8g %-12.8g %-12.8g %-14.8g %-14.8g %-14.8g\n",
              g0.kp, g0.ti, g0.td, first.cost.tracking, first.cost.variation,
              first.cost.total);
  std::printf("after   %-12.8g %-12.8g %-12.8g %-14.8g %-14.8g %-14.8g\n",
              g1.kp, g1.ti, g1.td, last.cost.tracking, last.cost.variation,
              last.cost.total);
  std::printf("outputs written to %s\n", cfg.output_dir.c_str());

  if (!last.accepted) {
    std::fprintf(stderr,
                 "tune: optimization stopped early (no usable step at "
                 "iteration %d)\n",
                 last.index);
    return 2;
  }
  return 0;
}

int cmd_gradcheck(const std::string& config_path, double delta) {
  ScenarioConfig cfg = load_scenario(config_path);
  validate_scenario(cfg);
  if (cfg.sigma != 0.0) {
    std::fprintf(stderr,
                 "gradcheck: finite-difference comparison requires noise off "
                 "(sigma = 0); this config has sigma = %g\n",
                 cfg.sigma);
    return 1;
  }
  if (!(delta >= 1e-6 && delta <= 1e-2)) {
    std::fprintf(stderr, "gradcheck: delta must lie in [1e-6, 1e-2]\n");
    return 1;
  }
  LoopSetup setup = make_loop_setup(cfg);
  ParamVector rho = to_param_vector(cfg.gains);

  ExperimentTriple triple = run_experiment_triple(setup, rho, 0);
  if (!triple.ok) {
    std::fprintf(stderr,
                 "gradcheck: loop diverged at sample %zu of experiment %d\n",
                 triple.diverged_at, triple.diverged_experiment);
    return 2;
  }
  SignalGradients sg = estimate_signal_gradients(setup, rho, triple.rec2);
  GradientEstimate est = estimate_cost_gradient(sg, triple.rec3, setup.weights);
  Eigen::Vector3d fd = finite_difference_gradient(setup, rho, delta);

  bool ok = true;
  std::printf("component  %-18s %-18s rel_error\n", "data-driven",
              "finite-diff");
  const char* names[3] = {"dJ/dKp", "dJ/dKi", "dJ/dKd"};
  for (int j = 0; j < 3; ++j) {
    const double denom = std::fabs(fd(j)) > 0.0 ? std::fabs(fd(j)) : 1.0;
    const double rel = std::fabs(est.grad(j) - fd(j)) / denom;
    if (!(rel <= 0.02)) ok = false;
    std::printf("%-9s  %-18.10g %-18.10g %.3e\n", names[j], est.grad(j),
                fd(j), rel);
  }
  std::printf("gradcheck %s (delta = %g, tolerance 2%%)\n",
              ok ? "PASS" : "FAIL", delta);
  return ok ? 0 : 2;
}

int cmd_unbiased(const std::string& config_path, int trials) {
  ScenarioConfig cfg = load_scenario(config_path);
  validate_scenario(cfg);
  if (trials < 100) {
    std::fprintf(stderr, "unbiased: need at least 100 trials (got %d)\n",
                 trials);
    return 1;
  }
  LoopSetup setup = make_loop_setup(cfg);
  ParamVector rho = to_param_vector(cfg.gains);
  UnbiasednessResult r = unbiasedness_trial(setup, rho, trials);

  const char* names[3] = {"dJ/dKp", "dJ/dKi", "dJ/dKd"};
  std::printf("%d trials, sigma = %g\n", trials, cfg.sigma);
  std::printf("component  %-16s %-16s %-12s %-8s\n", "mean", "reference",
              "stderr", "z");
  bool ok = true;
  for (int j = 0; j < 3; ++j) {
    const UnbiasednessComponent& c = r.correct[j];
    if (!(c.zscore <= 4.0)) ok = false;
    std::printf("%-9s  %-16.8g %-16.8g %-12.4g %-8.2f\n", names[j], c.mean,
                c.reference, c.stderr_, c.zscore);
  }
  std::printf("biased variant (experiment I reused in the products):\n");
  for (int j = 0; j < 3; ++j) {
    const UnbiasednessComponent& c = r.biased[j];
    std::printf("%-9s  %-16.8g %-16.8g %-12.4g %-8.2f%s\n", names[j], c.mean,
                c.reference, c.stderr_, c.zscore,
                c.zscore > 4.0 ? "  <- bias detected" : "");
  }
  std::printf("unbiasedness %s (4-SE test on the experiment-III estimator)\n",
              ok ? "PASS" : "FAIL");
  return ok ? 0 : 2;
}

int cmd_maglev_force(double x, double z, double i1, double i2) {
  maglev::Geometry geom;
  maglev::ForceVector f = maglev::forcer_force(geom, x, z, {i1, i2});
  std::printf("fx %.17g\nfz %.17g\n", f.fx, f.fz);
  return 0;
}

int cmd_maglev_alloc(double fx, double fz, double x, double z) {
  maglev::Geometry geom;
  maglev::AllocationResult r =
      maglev::allocate_currents(geom, x, z, {fx, fz});
  std::printf("i1 %.17g\ni2 %.17g\n", r.currents[0], r.currents[1]);
  if (!r.within_limit) {
    std::fprintf(stderr,
                 "maglev alloc: requested force needs more than %g A at this "
                 "pose (currents printed unclamped)\n",
                 r.limit);
    return 3;
  }
  return 0;
}

int cmd_maglev_det(double z) {
  maglev::Geometry geom;
  const double closed = maglev::det_closed_form(geom, z);
  std::printf("closed_form %.17g\n", closed);
  double worst = 0.0;
  for (int i = 0; i < 8; ++i) {
    const double x = geom.tau * (0.25 * i - 0.875);
    const double direct = maglev::det_direct(geom, x, z);
    std::printf("direct x=%.6g %.17g\n", x, direct);
    const double dev = std::fabs(direct - closed) /
                       (std::fabs(closed) > 0.0 ? std::fabs(closed) : 1.0);
    if (dev > worst) worst = dev;
  }
  std::printf("max relative deviation %.3e\n", worst);
  return 0;
}

int cmd_profile(const std::string& config_path) {
  ScenarioConfig cfg = load_scenario(config_path);
  validate_scenario(cfg);
  MotionProfile profile = scenario_profile(cfg);
  ProfileValidation v = validate_profile(profile, cfg.bounds);

  std::filesystem::create_directories(cfg.output_dir);
  const std::string csv_path = cfg.output_dir + "/profile.csv";
  profile_to_csv_file(profile, csv_path);

  std::ostringstream report;
  report << "samples " << profile.size() << "\n"
         << "windows " << profile.window_samples[0] << " "
         << profile.window_samples[1] << " " << profile.window_samples[2]
         << " " << profile.window_samples[3] << "\n"
         << "max |vel| " << format_double(v.max_vel) << " (bound "
         << format_double(cfg.bounds.v_max) << ")\n"
         << "max |acc| " << format_double(v.max_acc) << " (bound "
         << format_double(cfg.bounds.a_max) << ")\n"
         << "max |jerk| " << format_double(v.max_jerk) << " (bound "
         << format_double(cfg.bounds.j_max) << ")\n"
         << "max |snap| " << format_double(v.max_snap) << " (bound "
         << format_double(cfg.bounds.s_max) << ")\n"
         << "final position error " << format_double(v.end_position_error)
         << "\n"
         << "re-integration relative error "
         << format_double(v.reintegration_rel_error) << "\n"
         << "result " << (v.ok ? "PASS" : ("FAIL: " + v.failure)) << "\n";
  std::ofstream rf(cfg.output_dir + "/profile_report.txt",
                   std::ios::binary | std::ios::trunc);
  rf << report.str();
  rf.close();
  std::fputs(report.str().c_str(), stdout);
  std::printf("profile written to %s\n", csv_path.c_str());
  return v.ok ? 0 : 2;
}

int guarded(const std::function<int()>& body) {
  try {
    return body();
  } catch (const std::domain_error& ex) {
    std::fprintf(stderr, "error: %s\n", ex.what());
    return 3;
  } catch (const std::invalid_argument& ex) {
    std::fprintf(stderr, "error: %s\n", ex.what());
    return 1;
  } catch (const std::exception& ex) {
    std::fprintf(stderr, "error: %s\n", ex.what());
    return 2;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Data-driven multi-objective PID tuning toolkit"};
  app.require_subcommand(1);

  std::string config_path;
  double delta = 1e-4;
  int trials = 500;
  double arg_x = 0.0, arg_z = 0.0, arg_i1 = 0.0, arg_i2 = 0.0;
  double arg_fx = 0.0, arg_fz = 0.0;

  CLI::App* tune = app.add_subcommand("tune", "Run the tuning loop");
  tune->add_option("config", config_path, "Scenario config file")->required();

  CLI::App* grad = app.add_subcommand(
      "gradcheck", "Compare the data-driven gradient with finite differences");
  grad->add_option("config", config_path, "Scenario config file")->required();
  grad->add_option("--delta", delta, "Relative perturbation in [1e-6, 1e-2]");

  CLI::App* unb = app.add_subcommand(
      "unbiased", "Monte-Carlo unbiasedness check of the gradient estimator");
  unb->add_option("config", config_path, "Scenario config file")->required();
  unb->add_option("--trials", trials, "Number of trials (>= 100)");

  CLI::App* mag = app.add_subcommand("maglev", "Forcer model utilities");
  mag->require_subcommand(1);
  CLI::App* mforce =
      mag->add_subcommand("force", "Force from phase currents at a pose");
  mforce->add_option("x", arg_x, "stage x, m")->required();
  mforce->add_option("z", arg_z, "air gap z, m")->required();
  mforce->add_option("i1", arg_i1, "phase 1 current, A")->required();
  mforce->add_option("i2", arg_i2, "phase 2 current, A")->required();
  CLI::App* malloc_ =
      mag->add_subcommand("alloc", "Currents realizing a force at a pose");
  malloc_->add_option("fx", arg_fx, "x force, N")->required();
  malloc_->add_option("fz", arg_fz, "z force, N")->required();
  malloc_->add_option("x", arg_x, "stage x, m")->required();
  malloc_->add_option("z", arg_z, "air gap z, m")->required();
  CLI::App* mdet = mag->add_subcommand(
      "det", "Force-matrix determinant, closed form vs direct");
  mdet->add_option("z", arg_z, "air gap z, m")->required();

  CLI::App* prof =
      app.add_subcommand("profile", "Plan and validate the motion profile");
  prof->add_option("config", config_path, "Scenario config file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  if (*tune) return guarded([&] { return cmd_tune(config_path); });
  if (*grad) return guarded([&] { return cmd_gradcheck(config_path, delta); });
  if (*unb) return guarded([&] { return cmd_unbiased(config_path, trials); });
  if (*mag) {
    if (*mforce)
      return guarded([&] { return cmd_maglev_force(arg_x, arg_z, arg_i1,
                                                   arg_i2); });
    if (*malloc_)
      return guarded([&] { return cmd_maglev_alloc(arg_fx, arg_fz, arg_x,
                                                   arg_z); });
    if (*mdet) return guarded([&] { return cmd_maglev_det(arg_z); });
  }
  if (*prof) return guarded([&] { return cmd_profile(config_path); });
  return 1;
}
