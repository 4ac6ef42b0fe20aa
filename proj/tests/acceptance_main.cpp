// Acceptance suite for the tuning toolkit. Each criterion prints exactly one
// [PASS]/[FAIL] line; the process exits nonzero if any criterion fails.

#include <sys/wait.h>

#include <Eigen/Dense>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "ddtune/controller.hpp"
#include "ddtune/ift_engine.hpp"
#include "ddtune/maglev.hpp"
#include "ddtune/plant_sim.hpp"
#include "ddtune/scenario.hpp"
#include "ddtune/trajectory.hpp"

using namespace ddtune;
namespace fs = std::filesystem;

namespace {

int g_failures = 0;

void report(int idx, const std::string& name, bool ok,
            const std::string& detail) {
  std::printf("[%s] criterion %d: %s (%s)\n", ok ? "PASS" : "FAIL", idx,
              name.c_str(), detail.c_str());
  std::fflush(stdout);
  if (!ok) ++g_failures;
}

std::string config_path(const char* name) {
  return std::string(DDTUNE_CONFIG_DIR) + "/" + name;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

// Hessians accumulated from every estimate the suite produces; criterion 4
// inspects all of them.
std::vector<Eigen::Matrix3d> g_hessians;

// ---------------------------------------------------------------------------

// 1. Data-driven gradient vs central finite differences, noise free.
void criterion_gradient() {
  const double kTol = 0.02;       // 2% relative per component
  const double kBudget = 30.0;    // seconds
  auto t0 = std::chrono::steady_clock::now();

  auto cfg = load_scenario(config_path("default.cfg"));
  auto setup = make_loop_setup(cfg);
  ParamVector rho = to_param_vector(cfg.gains);

  auto triple = run_experiment_triple(setup, rho, 0);
  if (!triple.ok) {
    report(1, "gradient fidelity", false, "experiment triple diverged");
    return;
  }
  auto sg = estimate_signal_gradients(setup, rho, triple.rec2);
  auto est = estimate_cost_gradient(sg, triple.rec3, setup.weights);
  g_hessians.push_back(est.hessian);

  Eigen::Vector3d fd = finite_difference_gradient(setup, rho, 1e-4);
  double worst = 0.0;
  for (int j = 0; j < 3; ++j) {
    double denom = std::fabs(fd(j)) > 0.0 ? std::fabs(fd(j)) : 1.0;
    worst = std::max(worst, std::fabs(est.grad(j) - fd(j)) / denom);
  }
  double elapsed = seconds_since(t0);
  bool ok = worst <= kTol && elapsed < kBudget;
  report(1, "gradient fidelity", ok,
         "worst rel err " + fmt(worst) + " vs 0.02, " + fmt(elapsed) + " s");
}

// 2. Monte-Carlo unbiasedness with sigma = 5% of the peak noise-free error;
// the Experiment-I-reuse variant must fail the same 4-SE test.
void criterion_unbiasedness() {
  const int kTrials = 500;
  const double kZTol = 4.0;
  const double kBudget = 300.0;  // seconds
  auto t0 = std::chrono::steady_clock::now();

  auto cfg = load_scenario(config_path("noisy.cfg"));
  auto setup = make_loop_setup(cfg);
  ParamVector rho = to_param_vector(cfg.gains);

  // compute the mandated noise level from the scenario itself
  LoopSetup clean = setup;
  clean.noise_sigma = 0.0;
  auto nf = run_experiment_triple(clean, rho, 0);
  if (!nf.ok) {
    report(2, "estimator unbiasedness", false, "noise-free run diverged");
    return;
  }
  double peak_e = 0.0;
  for (double e : nf.rec1.e) peak_e = std::max(peak_e, std::fabs(e));
  setup.noise_sigma = 0.05 * peak_e;

  auto res = unbiasedness_trial(setup, rho, kTrials);

  double worst_correct = 0.0, best_biased = 0.0;
  for (int j = 0; j < 3; ++j) {
    worst_correct = std::max(worst_correct, res.correct[j].zscore);
    best_biased = std::max(best_biased, res.biased[j].zscore);
  }
  double elapsed = seconds_since(t0);
  bool ok = worst_correct <= kZTol && best_biased > kZTol && elapsed < kBudget;
  report(2, "estimator unbiasedness", ok,
         "sigma " + fmt(setup.noise_sigma) + ", correct z <= " +
             fmt(worst_correct) + ", biased z " + fmt(best_biased) + ", " +
             fmt(elapsed) + " s");
}

// 3. Cost strictly decreases every accepted iteration and halves within 10.
void criterion_convergence() {
  const double kBudget = 120.0;  // seconds
  auto t0 = std::chrono::steady_clock::now();

  auto cfg = load_scenario(config_path("default.cfg"));
  auto setup = make_loop_setup(cfg);
  auto reports = optimize(setup, cfg.gains, cfg.options);

  bool decreasing = true;
  for (std::size_t i = 1; i < reports.size(); ++i) {
    if (!reports[i].accepted) continue;
    if (!(reports[i].cost.total < reports[i - 1].cost.total))
      decreasing = false;
  }
  double j0 = reports.front().cost.total;
  int halved_at = -1;
  for (const auto& rep : reports) {
    if (rep.cost.total <= 0.5 * j0 && rep.index <= 10) {
      halved_at = rep.index;
      break;
    }
  }
  for (const auto& rep : reports)
    if (rep.has_gradient) g_hessians.push_back(rep.estimate.hessian);

  // fold in a noisy run so criterion 4 sees noisy Hessians too
  auto noisy_cfg = load_scenario(config_path("noisy.cfg"));
  auto noisy_setup = make_loop_setup(noisy_cfg);
  auto noisy_reports = optimize(noisy_setup, noisy_cfg.gains, noisy_cfg.options);
  for (const auto& rep : noisy_reports)
    if (rep.has_gradient) g_hessians.push_back(rep.estimate.hessian);

  double jf = reports.back().cost.total;
  double elapsed = seconds_since(t0);
  bool ok = decreasing && halved_at >= 0 && elapsed < kBudget;
  report(3, "convergence shape", ok,
         "J " + fmt(j0) + " -> " + fmt(jf) + ", halved at iteration " +
             std::to_string(halved_at) + ", " + fmt(elapsed) + " s");
}

// 4. Every Hessian estimated anywhere in this suite is symmetric and PSD up
// to the stated eigenvalue slack.
void criterion_hessians() {
  const double kEigSlack = 1e-12;  // of the trace
  bool ok = !g_hessians.empty();
  double worst_asym = 0.0, worst_eig_ratio = 0.0;
  for (const auto& H : g_hessians) {
    double asym = (H - H.transpose()).cwiseAbs().maxCoeff();
    worst_asym = std::max(worst_asym, asym);
    if (asym != 0.0) ok = false;
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(H);
    double ratio = -eig.eigenvalues().minCoeff() / std::fabs(H.trace());
    worst_eig_ratio = std::max(worst_eig_ratio, ratio);
    if (!(eig.eigenvalues().minCoeff() >= -kEigSlack * std::fabs(H.trace())))
      ok = false;
  }
  report(4, "Gauss-Newton Hessian properties", ok,
         std::to_string(g_hessians.size()) + " Hessians, worst asymmetry " +
             fmt(worst_asym) + ", worst -eig/trace " + fmt(worst_eig_ratio));
}

// 5. sum_j rho_j * F_j == identity on random inputs for 100 random rho.
void criterion_reconstruction() {
  const double kRmsTol = 1e-6;
  const std::size_t kSkip = 100;  // transient samples excluded
  const double kTs = 2e-4;

  std::mt19937 rng(2026);
  // two decades around the bundled gains in every direction; wilder ratios
  // give derivative time constants of hours, which no 5 kHz loop would run
  std::uniform_real_distribution<double> log_unif(-2.0, 2.0);
  std::normal_distribution<double> noise(0.0, 1.0);
  const ParamVector center = {30.0, 15000.0, 0.0036};

  std::vector<double> x(2000);
  double worst = 0.0;
  bool ok = true;
  for (int trial = 0; trial < 100; ++trial) {
    ParamVector rho = {center[0] * std::pow(10.0, log_unif(rng)),
                       center[1] * std::pow(10.0, log_unif(rng)),
                       center[2] * std::pow(10.0, log_unif(rng))};
    for (auto& v : x) v = noise(rng);
    auto f = gradient_filters(rho, kTs);
    auto y0 = f[0].process(x);
    auto y1 = f[1].process(x);
    auto y2 = f[2].process(x);
    double acc = 0.0;
    for (std::size_t k = kSkip; k < x.size(); ++k) {
      double err = rho[0] * y0[k] + rho[1] * y1[k] + rho[2] * y2[k] - x[k];
      acc += err * err;
    }
    double rms = std::sqrt(acc / double(x.size() - kSkip));
    worst = std::max(worst, rms);
    if (!(rms < kRmsTol)) ok = false;
  }
  report(5, "gradient filter reconstruction", ok,
         "100 random rho, worst RMS " + fmt(worst) + " vs 1e-6");
}

// 6. Maglev determinant identity, x-independence, allocation round trip and
// invertibility of the bundled geometry.
void criterion_maglev() {
  const double kDetTol = 1e-10;
  const double kSpreadTol = 1e-10;
  const double kRoundTripTol = 1e-9;

  maglev::Geometry geom;
  bool ok = true;
  std::string why;

  try {
    maglev::validate_geometry(geom);
  } catch (const std::exception& e) {
    ok = false;
    why = "geometry rejected";
  }
  double margin = maglev::invertibility_margin(geom);
  if (!(std::fabs(margin) > 0.0)) {
    ok = false;
    why = "zero margin";
  }

  double worst_dev = 0.0, worst_spread = 0.0;
  for (int iz = 0; iz < 100; ++iz) {
    double z = 2e-4 + (5e-3 - 2e-4) * double(iz) / 99.0;
    double closed = maglev::det_closed_form(geom, z);
    double lo = 0.0, hi = 0.0;
    for (int ix = 0; ix < 10; ++ix) {
      double x = -geom.tau + 2.0 * geom.tau * double(ix) / 9.0;
      double direct = maglev::det_direct(geom, x, z);
      double dev = std::fabs(direct - closed) / std::fabs(closed);
      worst_dev = std::max(worst_dev, dev);
      if (ix == 0) {
        lo = hi = direct;
      } else {
        lo = std::min(lo, direct);
        hi = std::max(hi, direct);
      }
    }
    double spread = (hi - lo) / std::fabs(closed);
    worst_spread = std::max(worst_spread, spread);
  }
  if (worst_dev > kDetTol) {
    ok = false;
    why = "determinant mismatch";
  }
  if (worst_spread > kSpreadTol) {
    ok = false;
    why = "determinant varies with x";
  }

  double worst_rt = 0.0;
  std::mt19937 rng(99);
  std::uniform_real_distribution<double> fdist(-2.0, 2.0);
  std::uniform_real_distribution<double> xdist(-geom.tau, geom.tau);
  std::uniform_real_distribution<double> zdist(5e-4, 3e-3);
  for (int t = 0; t < 50; ++t) {
    double x = xdist(rng), z = zdist(rng);
    maglev::ForceVector want{fdist(rng), fdist(rng)};
    auto alloc = maglev::allocate_currents(geom, x, z, want);
    auto got = maglev::forcer_force(geom, x, z, alloc.currents);
    double scale = std::max(std::hypot(want.fx, want.fz), 1e-12);
    double err = std::hypot(got.fx - want.fx, got.fz - want.fz) / scale;
    worst_rt = std::max(worst_rt, err);
  }
  if (worst_rt > kRoundTripTol) {
    ok = false;
    why = "round trip error";
  }

  report(6, "maglev commutation model", ok,
         why.empty() ? ("det dev " + fmt(worst_dev) + ", x-spread " +
                        fmt(worst_spread) + ", round trip " + fmt(worst_rt) +
                        ", margin " + fmt(margin))
                     : why);
}

// 7. The bundled fourth-order profile honors its bounds and endpoints.
void criterion_trajectory() {
  auto cfg = load_scenario(config_path("default.cfg"));
  auto profile = scenario_profile(cfg);
  auto v = validate_profile(profile, cfg.bounds);

  // one-ulp representation slack on the pulse-height arithmetic
  const double kSlack = 1.0 + 1e-12;
  bool bounds_ok = v.max_vel <= cfg.bounds.v_max * kSlack &&
                   v.max_acc <= cfg.bounds.a_max * kSlack &&
                   v.max_jerk <= cfg.bounds.j_max * kSlack &&
                   v.max_snap <= cfg.bounds.s_max * kSlack;
  bool end_ok =
      v.end_position_error < cfg.bounds.v_max * cfg.ts;
  bool rest_ok = std::fabs(v.start_vel) <= 1e-9 * v.max_vel &&
                 std::fabs(v.end_vel) <= 1e-9 * v.max_vel;
  bool reint_ok = v.reintegration_rel_error <= 1e-9;
  bool ok = v.ok && bounds_ok && end_ok && rest_ok && reint_ok;

  report(7, "fourth-order trajectory", ok,
         "peaks v " + fmt(v.max_vel) + "/a " + fmt(v.max_acc) + "/j " +
             fmt(v.max_jerk) + "/s " + fmt(v.max_snap) + ", end err " +
             fmt(v.end_position_error) + ", reintegration " +
             fmt(v.reintegration_rel_error));
}

// 8. Two consecutive CLI tune runs on the same config produce byte-identical
// output trees (checked for both bundled scenarios).
bool run_tune_in(const fs::path& dir, const std::string& cfg) {
  fs::create_directories(dir);
  std::string cmd = "cd '" + dir.string() + "' && '" + DDTUNE_CLI_PATH +
                    "' tune '" + cfg + "' >stdout.txt 2>stderr.txt";
  int status = std::system(cmd.c_str());
  return status != -1 && WIFEXITED(status) && WEXITSTATUS(status) == 0;
}

bool trees_identical(const fs::path& a, const fs::path& b, std::string* why) {
  std::vector<std::string> names_a, names_b;
  for (const auto& e : fs::recursive_directory_iterator(a))
    if (e.is_regular_file())
      names_a.push_back(fs::relative(e.path(), a).string());
  for (const auto& e : fs::recursive_directory_iterator(b))
    if (e.is_regular_file())
      names_b.push_back(fs::relative(e.path(), b).string());
  std::sort(names_a.begin(), names_a.end());
  std::sort(names_b.begin(), names_b.end());
  if (names_a != names_b) {
    *why = "file lists differ";
    return false;
  }
  for (const auto& name : names_a) {
    std::ifstream fa(a / name, std::ios::binary);
    std::ifstream fb(b / name, std::ios::binary);
    std::stringstream sa, sb;
    sa << fa.rdbuf();
    sb << fb.rdbuf();
    if (sa.str() != sb.str()) {
      *why = name + " differs";
      return false;
    }
  }
  return true;
}

void criterion_determinism() {
  fs::path base = fs::temp_directory_path() / "ddtune_acceptance_determinism";
  fs::remove_all(base);

  bool ok = true;
  std::string detail;
  for (const char* name : {"default.cfg", "noisy.cfg"}) {
    fs::path run1 = base / name / "run1";
    fs::path run2 = base / name / "run2";
    if (!run_tune_in(run1, config_path(name)) ||
        !run_tune_in(run2, config_path(name))) {
      ok = false;
      detail = std::string(name) + ": tune run failed";
      break;
    }
    std::string why;
    // compare the output trees (out/ or out_noisy/), not the scratch stdout
    fs::path out1, out2;
    for (const auto& e : fs::directory_iterator(run1))
      if (e.is_directory()) out1 = e.path();
    for (const auto& e : fs::directory_iterator(run2))
      if (e.is_directory()) out2 = e.path();
    if (out1.empty() || out2.empty()) {
      ok = false;
      detail = std::string(name) + ": no output directory";
      break;
    }
    if (!trees_identical(out1, out2, &why)) {
      ok = false;
      detail = std::string(name) + ": " + why;
      break;
    }
    detail += std::string(name) + " reproducible; ";
  }
  report(8, "tune byte-determinism", ok, detail);
  fs::remove_all(base);
}

void guarded(int idx, const char* name, void (*fn)()) {
  try {
    fn();
  } catch (const std::exception& e) {
    report(idx, name, false, std::string("exception: ") + e.what());
  }
}

}  // namespace

int main() {
  std::printf("acceptance suite: data-driven PID tuning toolkit\n");
  guarded(1, "gradient fidelity", criterion_gradient);
  guarded(2, "estimator unbiasedness", criterion_unbiasedness);
  guarded(3, "convergence shape", criterion_convergence);
  guarded(4, "Gauss-Newton Hessian properties", criterion_hessians);
  guarded(5, "gradient filter reconstruction", criterion_reconstruction);
  guarded(6, "maglev commutation model", criterion_maglev);
  guarded(7, "fourth-order trajectory", criterion_trajectory);
  guarded(8, "tune byte-determinism", criterion_determinism);

  if (g_failures == 0) {
    std::printf("all 8 acceptance criteria passed\n");
    return 0;
  }
  std::printf("%d acceptance criteria FAILED\n", g_failures);
  return 1;
}
