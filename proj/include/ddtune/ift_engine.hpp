#ifndef DDTUNE_IFT_ENGINE_HPP
#define DDTUNE_IFT_ENGINE_HPP

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <functional>
#include <vector>

#include "ddtune/controller.hpp"
#include "ddtune/plant_sim.hpp"

namespace ddtune {

struct CostWeights {
  double w1 = 1e7;  // tracking-error weight
  double w2 = 1.0;  // control-variation weight
};

struct CostBreakdown {
  double tracking = 0.0;   // w1 * sum e^2
  double variation = 0.0;  // w2 * sum udot^2
  double total = 0.0;      // tracking + variation
};

// Compensated accumulation: the result does not depend on how the samples
// would be partitioned across workers.
CostBreakdown evaluate_cost(const ExperimentRecord& rec, const CostWeights& w);

// Everything the closed-loop experiments need besides the controller
// parameters themselves.
struct LoopSetup {
  PlantModel plant;
  double ts = 0.0;
  double n_filt = 100.0;
  std::vector<double> reference;
  CostWeights weights;
  double noise_sigma = 0.0;
  std::uint64_t noise_seed = 0;
};

struct ExperimentTriple {
  ExperimentRecord rec1, rec2, rec3;
  bool ok = false;
  int diverged_experiment = 0;  // 1..3 when !ok
  std::size_t diverged_at = 0;
};

// Experiment I tracks the reference, Experiment II replays Experiment I's
// error as its reference, Experiment III repeats Experiment I with fresh
// noise. Noise streams are (seed, 3*block+1..3) so distinct blocks never
// share noise. All filters start from zero state in each experiment.
ExperimentTriple run_experiment_triple(const LoopSetup& setup,
                                       const ParamVector& rho,
                                       std::uint64_t block);

struct SignalGradients {
  std::array<std::vector<double>, 3> de;    // d e / d rho_j series
  std::array<std::vector<double>, 3> dudot; // d udot / d rho_j series
};

// de[j] = -(filter_j applied to rec2.y); dudot[j] = +(filter_j applied to
// rec2.udot), with filter_j from gradient_filters at rho.
SignalGradients estimate_signal_gradients(const LoopSetup& setup,
                                          const ParamVector& rho,
                                          const ExperimentRecord& rec2);

struct GradientEstimate {
  Eigen::Vector3d grad = Eigen::Vector3d::Zero();
  Eigen::Matrix3d hessian = Eigen::Matrix3d::Zero();
};

// grad = 2*w1*[de]^T e3 + 2*w2*[dudot]^T udot3;
// hessian = 2*w1*[de]^T[de] + 2*w2*[dudot]^T[dudot] (Gauss-Newton, PSD and
// exactly symmetric by construction).
GradientEstimate estimate_cost_gradient(const SignalGradients& sg,
                                        const ExperimentRecord& rec3,
                                        const CostWeights& w);

// rho+ = rho - gamma * (H + lambda*I)^-1 grad, then a componentwise floor at
// 1e-9 of the previous value keeps the parameters in their valid region.
// lambda_reg < 0 selects the default 1e-8 * trace(H). Throws if the
// regularized Hessian's condition number exceeds 1e12.
ParamVector gauss_newton_step(const ParamVector& rho,
                              const GradientEstimate& est, double step_gamma,
                              double lambda_reg = -1.0);

struct IterationReport {
  int index = 0;
  ParamVector rho{0.0, 0.0, 0.0};
  CostBreakdown cost;
  bool has_gradient = false;
  GradientEstimate estimate;
  double step_gamma = 0.0;  // 0 when no update was made
  bool accepted = false;
  ExperimentTriple records;
};

struct TuneOptions {
  std::vector<double> gamma_schedule{0.3, 0.5, 1.0};  // last value repeats
  int max_iterations = 20;
  double stop_tol = 1e-3;  // relative improvement threshold
  double lambda_reg = -1.0;
};

// Iterates experiment triples and Gauss-Newton updates until the relative
// improvement stays below stop_tol for two consecutive iterations or
// max_iterations updates were made. A backtracking guard halves the step (up
// to 4 retries) whenever a candidate destabilizes the noise-free loop or
// increases its cost more than tenfold; if all retries fail the run stops at
// the last stable parameters with accepted == false on the final report.
// Throws if the initial controller already destabilizes the loop.
std::vector<IterationReport> optimize(const LoopSetup& setup,
                                      const PidGains& initial,
                                      const TuneOptions& options);

struct NoiseFreeEval {
  bool stable = false;
  CostBreakdown cost;
};

// Experiment I with noise forced off; used by the guard and the oracles.
NoiseFreeEval noise_free_cost(const LoopSetup& setup, const ParamVector& rho);

// Central differences with relative perturbation delta in [1e-6, 1e-2] per
// component. The LoopSetup overload requires noise_sigma == 0 and throws,
// naming the component, if a perturbed point destabilizes the loop.
Eigen::Vector3d finite_difference_gradient(
    const std::function<double(const ParamVector&)>& cost,
    const ParamVector& rho, double delta);
Eigen::Vector3d finite_difference_gradient(const LoopSetup& setup,
                                           const ParamVector& rho,
                                           double delta);

struct UnbiasednessComponent {
  double mean = 0.0;
  double stderr_ = 0.0;
  double reference = 0.0;  // noise-free gradient component
  double zscore = 0.0;     // |mean - reference| / stderr_
};

struct UnbiasednessResult {
  int trials = 0;
  std::array<UnbiasednessComponent, 3> correct;  // Experiment III inner products
  std::array<UnbiasednessComponent, 3> biased;   // Experiment I reused instead
};

// Monte-Carlo check of estimator unbiasedness at fixed rho. Trial t draws
// noise block t; the biased variant reuses Experiment I's signals where
// Experiment III's belong, which correlates them with the Experiment II noise.
UnbiasednessResult unbiasedness_trial(const LoopSetup& setup,
                                      const ParamVector& rho, int trials);

}  // namespace ddtune

#endif
