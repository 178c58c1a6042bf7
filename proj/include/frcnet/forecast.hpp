#pragma once

#include <utility>
#include <vector>

#include "frcnet/field.hpp"

namespace frcnet {

struct ForecastConfig {
  double dt = 0.01;
  int n_steps = 10000;
  double newton_tol = 1e-10;  // residual infinity norm
  int max_newton_iters = 8;
  ForcingSpec forcing = ForcingSpec::free_response();
  double t0 = 0.0;

  void validate() const;
};

struct ForecastResult {
  Trajectory trajectory;
  std::vector<int> newton_iters;      // per accepted step
  std::vector<double> residuals;      // final residual norm per step
  bool converged = true;              // every step met newton_tol
  int failure_index = -1;             // step where integration broke off, -1 if none
};

/// Forcing-augmented gradient. Autonomous fields get u(t) injected into the
/// second component; V1-style fields receive (t / time_scale, u(t)) as inputs.
State augmented_rhs(const GradientField& field, const State& x, double t,
                    const ForcingSpec& forcing);

/// Staged explicit predictor: two half-step estimates, a full-step estimate,
/// and their weighted blend (classical fourth-order ladder).
State rk4_predict(const GradientField& field, const State& x_k, double t_k,
                  double dt, const ForcingSpec& forcing);

struct NewtonStep {
  State x;
  int iters = 0;
  double residual = 0.0;
  bool converged = false;
  bool singular = false;
};

/// One implicit trapezoid step solved by Newton-Raphson on the residual
/// R = x' - x_k - dt/2 (g(x_k) + g(x')), starting from the RK4 prediction.
/// The 2x2 linear solve is exact; |det| < 1e-14 flags a singular step.
NewtonStep trapezoid_newton_step(const GradientField& field, const State& x_k,
                                 double t_k, double dt, const ForcingSpec& forcing,
                                 double tol = 1e-10, int max_iters = 8);

/// Recursive forecast from ic. On a step failure the trajectory is truncated
/// at failure_index; non-convergence within the iteration cap keeps the last
/// iterate and clears the converged flag.
ForecastResult forecast(const GradientField& field, const State& ic,
                        const ForecastConfig& config);

/// Independent trajectories distributed over worker threads. Results are
/// bitwise identical to sequential forecast calls in any worker count.
std::vector<ForecastResult> forecast_batch(
    const GradientField& field,
    const std::vector<std::pair<State, ForecastConfig>>& conditions,
    int workers = 1);

/// Sidecar CSV `step,newton_iters,residual`.
void write_newton_sidecar_csv(const ForecastResult& result, const std::string& path);

}  // namespace frcnet
