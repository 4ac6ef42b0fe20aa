#include "ddtune/ift_engine.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "ddtune/util.hpp"

namespace ddtune {

namespace {

void validate_weights(const CostWeights& w) {
  if (!(w.w1 >= 0.0) || !(w.w2 >= 0.0))
    throw std::invalid_argument("CostWeights: weights must be >= 0");
  if (w.w1 == 0.0 && w.w2 == 0.0)
    throw std::invalid_argument("CostWeights: weights must not both be zero");
}

void validate_setup(const LoopSetup& s) {
  if (s.reference.empty())
    throw std::invalid_argument("LoopSetup: empty reference");
  if (s.ts <= 0.0) throw std::invalid_argument("LoopSetup: ts must be > 0");
  if (s.plant.ts() != s.ts)
    throw std::invalid_argument("LoopSetup: plant ts does not match");
  if (s.noise_sigma < 0.0)
    throw std::invalid_argument("LoopSetup: noise sigma must be >= 0");
  validate_weights(s.weights);
}

}  // namespace

CostBreakdown evaluate_cost(const ExperimentRecord& rec, const CostWeights& w) {
  validate_weights(w);
  CompensatedSum se, su;
  for (double v : rec.e) se.add(v * v);
  for (double v : rec.udot) su.add(v * v);
  CostBreakdown c;
  c.tracking = w.w1 * se.value();
  c.variation = w.w2 * su.value();
  c.total = c.tracking + c.variation;
  return c;
}

ExperimentTriple run_experiment_triple(const LoopSetup& setup,
                                       const ParamVector& rho,
                                       std::uint64_t block) {
  validate_setup(setup);
  validate_rho(rho);
  const LinearFilter controller =
      make_controller(to_gains(rho), setup.ts, setup.n_filt);
  auto run = [&](const std::vector<double>& ref, std::uint64_t stream) {
    return simulate_closed_loop(setup.plant, controller, ref,
                                {setup.noise_sigma, setup.noise_seed, stream});
  };

  ExperimentTriple t;
  const std::uint64_t base = 3 * block;
  SimResult s1 = run(setup.reference, base + 1);
  t.rec1 = std::move(s1.record);
  if (s1.diverged) {
    t.diverged_experiment = 1;
    t.diverged_at = s1.diverged_at;
    return t;
  }
  SimResult s2 = run(t.rec1.e, base + 2);
  t.rec2 = std::move(s2.record);
  if (s2.diverged) {
    t.diverged_experiment = 2;
    t.diverged_at = s2.diverged_at;
    return t;
  }
  SimResult s3 = run(setup.reference, base + 3);
  t.rec3 = std::move(s3.record);
  if (s3.diverged) {
    t.diverged_experiment = 3;
    t.diverged_at = s3.diverged_at;
    return t;
  }
  t.ok = true;
  return t;
}

SignalGradients estimate_signal_gradients(const LoopSetup& setup,
                                          const ParamVector& rho,
                                          const ExperimentRecord& rec2) {
  validate_rho(rho);
  if (rec2.size() == 0)
    throw std::invalid_argument("estimate_signal_gradients: empty record");
  std::array<LinearFilter, 3> filters =
      gradient_filters(rho, setup.ts, setup.n_filt);
  SignalGradients sg;
  for (int j = 0; j < 3; ++j) {
    filters[j].reset();
    sg.de[j] = filters[j].process(rec2.y);
    for (double& v : sg.de[j]) v = -v;
    filters[j].reset();
    sg.dudot[j] = filters[j].process(rec2.udot);
  }
  return sg;
}

GradientEstimate estimate_cost_gradient(const SignalGradients& sg,
                                        const ExperimentRecord& rec3,
                                        const CostWeights& w) {
  validate_weights(w);
  const std::size_t n = rec3.size();
  for (int j = 0; j < 3; ++j)
    if (sg.de[j].size() != n || sg.dudot[j].size() != n)
      throw std::invalid_argument(
          "estimate_cost_gradient: record and gradient lengths differ");
  GradientEstimate est;
  for (int j = 0; j < 3; ++j)
    est.grad(j) = 2.0 * w.w1 * compensated_dot(sg.de[j], rec3.e) +
                  2.0 * w.w2 * compensated_dot(sg.dudot[j], rec3.udot);
  for (int j = 0; j < 3; ++j)
    for (int l = j; l < 3; ++l) {
      const double h = 2.0 * w.w1 * compensated_dot(sg.de[j], sg.de[l]) +
                       2.0 * w.w2 * compensated_dot(sg.dudot[j], sg.dudot[l]);
      est.hessian(j, l) = h;
      est.hessian(l, j) = h;
    }
  return est;
}

ParamVector gauss_newton_step(const ParamVector& rho,
                              const GradientEstimate& est, double step_gamma,
                              double lambda_reg) {
  validate_rho(rho);
  if (!(step_gamma > 0.0))
    throw std::invalid_argument("gauss_newton_step: gamma must be > 0");
  const double trace = est.hessian.trace();
  const double lambda = lambda_reg >= 0.0 ? lambda_reg : 1e-8 * trace;
  Eigen::Matrix3d h = est.hessian + lambda * Eigen::Matrix3d::Identity();
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(h);
  const double emin = es.eigenvalues().minCoeff();
  const double emax = es.eigenvalues().maxCoeff();
  if (!(emin > 0.0) || emax / emin > 1e12) {
    std::ostringstream os;
    os << "gauss_newton_step: regularized Hessian is ill-conditioned (cond = "
       << (emin > 0.0 ? emax / emin : std::numeric_limits<double>::infinity())
       << "); increase lambda_reg";
    throw std::runtime_error(os.str());
  }
  const Eigen::Vector3d delta = h.ldlt().solve(est.grad);
  ParamVector out;
  for (int j = 0; j < 3; ++j) {
    out[j] = rho[j] - step_gamma * delta(j);
    const double floor = 1e-9 * rho[j];
    if (out[j] < floor) out[j] = floor;
  }
  return out;
}

NoiseFreeEval noise_free_cost(const LoopSetup& setup, const ParamVector& rho) {
  validate_setup(setup);
  validate_rho(rho);
  const LinearFilter controller =
      make_controller(to_gains(rho), setup.ts, setup.n_filt);
  SimResult s =
      simulate_closed_loop(setup.plant, controller, setup.reference, {});
  NoiseFreeEval ev;
  ev.stable = !s.diverged;
  if (ev.stable) ev.cost = evaluate_cost(s.record, setup.weights);
  return ev;
}

namespace {

// A candidate step is only usable if the next iteration can build stable
// gradient filters from it. Collapsing Kd toward zero pushes a filter pole
// onto the unit circle, so such steps get rejected like divergent ones.
bool gradient_filters_usable(const ParamVector& rho, double ts, int n_filt) {
  try {
    gradient_filters(rho, ts, n_filt);
  } catch (const std::exception&) {
    return false;
  }
  return true;
}

}  // namespace

std::vector<IterationReport> optimize(const LoopSetup& setup,
                                      const PidGains& initial,
                                      const TuneOptions& options) {
  validate_setup(setup);
  validate_gains(initial);
  if (options.max_iterations < 0)
    throw std::invalid_argument("optimize: max_iterations must be >= 0");
  if (options.gamma_schedule.empty())
    throw std::invalid_argument("optimize: empty gamma schedule");

  ParamVector rho = to_param_vector(initial);
  std::vector<IterationReport> reports;
  double prev_cost = 0.0;
  int low_improvement_streak = 0;

  for (int i = 0;; ++i) {
    IterationReport rep;
    rep.index = i;
    rep.rho = rho;

    const bool want_update = i < options.max_iterations;

    if (!want_update) {
      // Terminal evaluation: just Experiment I.
      const LinearFilter controller =
          make_controller(to_gains(rho), setup.ts, setup.n_filt);
      SimResult s1 = simulate_closed_loop(
          setup.plant, controller, setup.reference,
          {setup.noise_sigma, setup.noise_seed,
           3 * static_cast<std::uint64_t>(i) + 1});
      rep.records.rec1 = std::move(s1.record);
      if (s1.diverged) {
        rep.records.diverged_experiment = 1;
        rep.records.diverged_at = s1.diverged_at;
      } else {
        rep.records.ok = true;
      }
      rep.cost = evaluate_cost(rep.records.rec1, setup.weights);
      rep.accepted = !s1.diverged;
      reports.push_back(std::move(rep));
      break;
    }

    ExperimentTriple triple =
        run_experiment_triple(setup, rho, static_cast<std::uint64_t>(i));
    rep.cost = evaluate_cost(triple.rec1, setup.weights);
    if (!triple.ok) {
      if (i == 0) {
        std::ostringstream os;
        os << "optimize: initial controller destabilizes the loop (diverged "
              "at sample "
           << triple.diverged_at << " of experiment "
           << triple.diverged_experiment << ")";
        throw std::runtime_error(os.str());
      }
      rep.records = std::move(triple);
      rep.accepted = false;
      reports.push_back(std::move(rep));
      break;
    }

    if (i > 0) {
      const double improvement =
          prev_cost > 0.0 ? (prev_cost - rep.cost.total) / prev_cost : 0.0;
      low_improvement_streak =
          improvement < options.stop_tol ? low_improvement_streak + 1 : 0;
      if (low_improvement_streak >= 2) {
        // This evaluation doubles as the terminal one.
        rep.records = std::move(triple);
        rep.accepted = true;
        reports.push_back(std::move(rep));
        break;
      }
    }
    prev_cost = rep.cost.total;

    const SignalGradients sg =
        estimate_signal_gradients(setup, rho, triple.rec2);
    rep.estimate = estimate_cost_gradient(sg, triple.rec3, setup.weights);
    rep.has_gradient = true;

    const NoiseFreeEval base = noise_free_cost(setup, rho);
    double gamma =
        options.gamma_schedule[std::min<std::size_t>(
            static_cast<std::size_t>(i), options.gamma_schedule.size() - 1)];
    bool stepped = false;
    ParamVector next{};
    for (int attempt = 0; attempt < 5; ++attempt) {
      next = gauss_newton_step(rho, rep.estimate, gamma, options.lambda_reg);
      const NoiseFreeEval trial = noise_free_cost(setup, next);
      const bool blew_up =
          base.stable && trial.stable &&
          trial.cost.total > 10.0 * base.cost.total;
      if (trial.stable && !blew_up &&
          gradient_filters_usable(next, setup.ts, setup.n_filt)) {
        stepped = true;
        break;
      }
      gamma *= 0.5;
    }
    rep.step_gamma = stepped ? gamma : 0.0;
    rep.accepted = stepped;
    rep.records = std::move(triple);
    reports.push_back(std::move(rep));
    if (!stepped) break;  // guard exhausted: stop at the last stable rho
    rho = next;
  }
  return reports;
}

Eigen::Vector3d finite_difference_gradient(
    const std::function<double(const ParamVector&)>& cost,
    const ParamVector& rho, double delta) {
  validate_rho(rho);
  if (!(delta >= 1e-6 && delta <= 1e-2))
    throw std::invalid_argument(
        "finite_difference_gradient: delta must lie in [1e-6, 1e-2]");
  Eigen::Vector3d g;
  for (int j = 0; j < 3; ++j) {
    ParamVector hi = rho, lo = rho;
    hi[j] = rho[j] * (1.0 + delta);
    lo[j] = rho[j] * (1.0 - delta);
    const double jhi = cost(hi);
    const double jlo = cost(lo);
    g(j) = (jhi - jlo) / (2.0 * delta * rho[j]);
  }
  return g;
}

Eigen::Vector3d finite_difference_gradient(const LoopSetup& setup,
                                           const ParamVector& rho,
                                           double delta) {
  validate_setup(setup);
  if (setup.noise_sigma != 0.0)
    throw std::invalid_argument(
        "finite_difference_gradient: oracle comparison requires noise off");
  int component = -1;
  auto cost = [&](const ParamVector& p) {
    const NoiseFreeEval ev = noise_free_cost(setup, p);
    if (!ev.stable) {
      std::ostringstream os;
      os << "finite_difference_gradient: perturbed parameters destabilize "
            "the loop (component "
         << component << ")";
      throw std::runtime_error(os.str());
    }
    return ev.cost.total;
  };
  validate_rho(rho);
  if (!(delta >= 1e-6 && delta <= 1e-2))
    throw std::invalid_argument(
        "finite_difference_gradient: delta must lie in [1e-6, 1e-2]");
  Eigen::Vector3d g;
  for (int j = 0; j < 3; ++j) {
    component = j;
    ParamVector hi = rho, lo = rho;
    hi[j] = rho[j] * (1.0 + delta);
    lo[j] = rho[j] * (1.0 - delta);
    g(j) = (cost(hi) - cost(lo)) / (2.0 * delta * rho[j]);
  }
  return g;
}

UnbiasednessResult unbiasedness_trial(const LoopSetup& setup,
                                      const ParamVector& rho, int trials) {
  validate_setup(setup);
  validate_rho(rho);
  if (trials < 1)
    throw std::invalid_argument("unbiasedness_trial: trials must be >= 1");

  LoopSetup clean = setup;
  clean.noise_sigma = 0.0;
  const ExperimentTriple nf = run_experiment_triple(clean, rho, 0);
  if (!nf.ok)
    throw std::runtime_error(
        "unbiasedness_trial: noise-free reference run diverged");
  const SignalGradients sg_nf = estimate_signal_gradients(clean, rho, nf.rec2);
  const GradientEstimate ref =
      estimate_cost_gradient(sg_nf, nf.rec3, setup.weights);

  std::array<std::vector<double>, 3> correct_samples, biased_samples;
  for (auto& v : correct_samples) v.reserve(trials);
  for (auto& v : biased_samples) v.reserve(trials);

  for (int t = 0; t < trials; ++t) {
    const ExperimentTriple tr =
        run_experiment_triple(setup, rho, static_cast<std::uint64_t>(t));
    if (!tr.ok) {
      std::ostringstream os;
      os << "unbiasedness_trial: trial " << t << " diverged in experiment "
         << tr.diverged_experiment;
      throw std::runtime_error(os.str());
    }
    const SignalGradients sg = estimate_signal_gradients(setup, rho, tr.rec2);
    const GradientEstimate good =
        estimate_cost_gradient(sg, tr.rec3, setup.weights);
    const GradientEstimate bad =
        estimate_cost_gradient(sg, tr.rec1, setup.weights);
    for (int j = 0; j < 3; ++j) {
      correct_samples[j].push_back(good.grad(j));
      biased_samples[j].push_back(bad.grad(j));
    }
  }

  auto summarize = [&](const std::vector<double>& samples, double reference) {
    UnbiasednessComponent c;
    c.reference = reference;
    CompensatedSum sum;
    for (double v : samples) sum.add(v);
    c.mean = sum.value() / static_cast<double>(samples.size());
    CompensatedSum var;
    for (double v : samples) var.add((v - c.mean) * (v - c.mean));
    const double n = static_cast<double>(samples.size());
    const double sd = n > 1.0 ? std::sqrt(var.value() / (n - 1.0)) : 0.0;
    c.stderr_ = sd / std::sqrt(n);
    const double dev = std::fabs(c.mean - reference);
    c.zscore = dev == 0.0 ? 0.0
                          : (c.stderr_ > 0.0
                                 ? dev / c.stderr_
                                 : std::numeric_limits<double>::infinity());
    return c;
  };

  UnbiasednessResult res;
  res.trials = trials;
  for (int j = 0; j < 3; ++j) {
    res.correct[j] = summarize(correct_samples[j], ref.grad(j));
    res.biased[j] = summarize(biased_samples[j], ref.grad(j));
  }
  return res;
}

}  // namespace ddtune
