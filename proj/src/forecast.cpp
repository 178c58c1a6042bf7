#include "frcnet/forecast.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <stdexcept>
#include <thread>

namespace frcnet {

void ForecastConfig::validate() const {
  if (!(dt > 0.0)) throw std::invalid_argument("ForecastConfig: dt must be > 0");
  if (n_steps < 1) throw std::invalid_argument("ForecastConfig: n_steps must be >= 1");
  if (!(newton_tol > 0.0))
    throw std::invalid_argument("ForecastConfig: newton_tol must be > 0");
  if (max_newton_iters < 1)
    throw std::invalid_argument("ForecastConfig: max_newton_iters must be >= 1");
}

State augmented_rhs(const GradientField& field, const State& x, double t,
                    const ForcingSpec& forcing) {
  const double u = forcing.accel(t);
  if (field.autonomous()) {
    State g = field.value(x, 0.0, 0.0);
    g(1) += u;
    return g;
  }
  return field.value(x, t / field.time_scale(), u);
}

State rk4_predict(const GradientField& field, const State& x_k, double t_k,
                  double dt, const ForcingSpec& forcing) {
  const State k1 = augmented_rhs(field, x_k, t_k, forcing);
  const State ya = x_k + 0.5 * dt * k1;
  const State k2 = augmented_rhs(field, ya, t_k + 0.5 * dt, forcing);
  const State yb = x_k + 0.5 * dt * k2;
  const State k3 = augmented_rhs(field, yb, t_k + 0.5 * dt, forcing);
  const State yc = x_k + dt * k3;
  const State k4 = augmented_rhs(field, yc, t_k + dt, forcing);
  return x_k + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

namespace {

Eigen::Matrix2d residual_jacobian(const GradientField& field, const State& x,
                                  double t, const ForcingSpec& forcing, double dt) {
  Eigen::Matrix2d j;
  if (field.autonomous()) {
    j = field.state_jacobian(x, 0.0, 0.0);
  } else {
    j = field.state_jacobian(x, t / field.time_scale(), forcing.accel(t));
  }
  return Eigen::Matrix2d::Identity() - 0.5 * dt * j;
}

}  // namespace

NewtonStep trapezoid_newton_step(const GradientField& field, const State& x_k,
                                 double t_k, double dt, const ForcingSpec& forcing,
                                 double tol, int max_iters) {
  const double t_next = t_k + dt;
  const State g_k = augmented_rhs(field, x_k, t_k, forcing);

  NewtonStep step;
  step.x = rk4_predict(field, x_k, t_k, dt, forcing);
  if (!step.x.allFinite()) {
    step.singular = true;
    return step;
  }

  State g_next = augmented_rhs(field, step.x, t_next, forcing);
  State r = step.x - x_k - 0.5 * dt * (g_k + g_next);
  step.residual = r.lpNorm<Eigen::Infinity>();

  while (step.residual > tol && step.iters < max_iters) {
    const Eigen::Matrix2d jr = residual_jacobian(field, step.x, t_next, forcing, dt);
    const double det = jr(0, 0) * jr(1, 1) - jr(0, 1) * jr(1, 0);
    if (std::abs(det) < 1e-14) {
      step.singular = true;
      return step;
    }
    // Exact 2x2 solve of jr * delta = r, then the subtractive update.
    const State delta((jr(1, 1) * r(0) - jr(0, 1) * r(1)) / det,
                      (jr(0, 0) * r(1) - jr(1, 0) * r(0)) / det);
    step.x -= delta;
    ++step.iters;
    if (!step.x.allFinite()) {
      step.singular = true;
      return step;
    }
    g_next = augmented_rhs(field, step.x, t_next, forcing);
    r = step.x - x_k - 0.5 * dt * (g_k + g_next);
    step.residual = r.lpNorm<Eigen::Infinity>();
  }
  step.converged = step.residual <= tol;
  return step;
}

ForecastResult forecast(const GradientField& field, const State& ic,
                        const ForecastConfig& config) {
  config.validate();
  ForecastResult result;
  result.trajectory.t0 = config.t0;
  result.trajectory.dt = config.dt;
  result.trajectory.data.resize(config.n_steps + 1, 4);
  result.newton_iters.reserve(config.n_steps);
  result.residuals.reserve(config.n_steps);

  State x = ic;
  Eigen::Index filled = 0;
  for (int k = 0; k <= config.n_steps; ++k) {
    const double t = config.t0 + k * config.dt;
    result.trajectory.data(k, 0) = t;
    result.trajectory.data(k, 1) = x(0);
    result.trajectory.data(k, 2) = x(1);
    result.trajectory.data(k, 3) = config.forcing.accel(t);
    filled = k + 1;
    if (k == config.n_steps) break;

    const NewtonStep step = trapezoid_newton_step(field, x, t, config.dt,
                                                  config.forcing, config.newton_tol,
                                                  config.max_newton_iters);
    if (step.singular || !step.x.allFinite()) {
      result.failure_index = k;
      result.converged = false;
      break;
    }
    result.newton_iters.push_back(step.iters);
    result.residuals.push_back(step.residual);
    if (!step.converged) result.converged = false;
    x = step.x;
  }
  result.trajectory.data.conservativeResize(filled, 4);
  return result;
}

std::vector<ForecastResult> forecast_batch(
    const GradientField& field,
    const std::vector<std::pair<State, ForecastConfig>>& conditions, int workers) {
  if (conditions.empty())
    throw std::invalid_argument("forecast_batch: empty condition list");
  std::vector<ForecastResult> results(conditions.size());
  const int n_workers =
      std::max(1, std::min<int>(workers, static_cast<int>(conditions.size())));
  if (n_workers == 1) {
    for (std::size_t i = 0; i < conditions.size(); ++i)
      results[i] = forecast(field, conditions[i].first, conditions[i].second);
    return results;
  }

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= conditions.size()) return;
      results[i] = forecast(field, conditions[i].first, conditions[i].second);
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(n_workers);
  for (int w = 0; w < n_workers; ++w) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  return results;
}

void write_newton_sidecar_csv(const ForecastResult& result, const std::string& path) {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw std::runtime_error("write_newton_sidecar_csv: cannot open " + path);
  std::fputs("step,newton_iters,residual\n", f);
  for (std::size_t k = 0; k < result.newton_iters.size(); ++k)
    std::fprintf(f, "%zu,%d,%.17g\n", k, result.newton_iters[k], result.residuals[k]);
  std::fclose(f);
}

}  // namespace frcnet
