#pragma once

#include <Eigen/Dense>
#include <string>

namespace frcnet {

/// Phase-space state [position, velocity].
using State = Eigen::Vector2d;

/// Damped harmonic oscillator parameters. For the nondimensional universal
/// form, omega_n = 1 and lengths are measured in units of the static
/// deflection length_scale = A / omega_n^2.
struct SystemParams {
  double xi = 0.2;           // damping ratio, > 0
  double omega_n = 1.0;      // natural frequency (rad/s), > 0
  double length_scale = 0.0; // optional normalization length L (m), 0 = unset

  void validate() const;
};

struct NondimensionalForm {
  double xi;
  double omega_n;
  double length_scale;
};

/// Reduce (m, c, k, A) to damping ratio, natural frequency and the static
/// deflection length. Throws std::invalid_argument for m <= 0, k <= 0 or c < 0.
NondimensionalForm nondimensionalize(double mass, double damping_coeff,
                                     double stiffness, double drive_accel);

enum class ForcingKind { harmonic_force, harmonic_base, sampled };

/// Driving acceleration description. harmonic_force: u(t) = A cos(w t).
/// harmonic_base: relative-coordinate form u(t) = Y w^2 cos(w t), where the
/// amplitude field holds the base displacement Y. sampled: uniformly sampled
/// series, linearly interpolated between samples.
struct ForcingSpec {
  ForcingKind kind = ForcingKind::harmonic_force;
  double amplitude = 0.0;
  double omega = 1.0;
  Eigen::VectorXd samples;
  double sample_t0 = 0.0;
  double sample_dt = 0.0;

  static ForcingSpec free_response() { return harmonic(0.0, 1.0); }
  static ForcingSpec harmonic(double amplitude, double omega);
  static ForcingSpec base(double displacement, double omega);
  static ForcingSpec sampled_series(Eigen::VectorXd u, double t0, double dt);

  double accel(double t) const;
  void validate() const;
};

/// Base-excitation driving acceleration per unit mass, Y w^2 cos(w t).
/// Contains no system parameters.
double base_forcing_accel(double displacement, double omega, double t);

/// Uniformly sampled time series with columns t, q, qdot, u. Column-major
/// storage keeps each channel contiguous for slicing and CSV emission.
struct Trajectory {
  double t0 = 0.0;
  double dt = 0.0;
  Eigen::Matrix<double, Eigen::Dynamic, 4> data;

  Eigen::Index size() const { return data.rows(); }
  auto t() const { return data.col(0); }
  auto q() const { return data.col(1); }
  auto qdot() const { return data.col(2); }
  auto u() const { return data.col(3); }
  State state(Eigen::Index k) const { return State(data(k, 1), data(k, 2)); }

  void validate() const;
};

/// State transition function of the governing equation:
/// returns (qdot, u(t) - 2 xi w_n qdot - w_n^2 q).
State rhs(const State& x, double t, const ForcingSpec& forcing,
          const SystemParams& params);

/// Exact solution (position, velocity) at time t for harmonic forcing from
/// initial condition ic at t = 0. Underdamped, critically damped and
/// overdamped homogeneous branches are all supported.
State analytic_response(const SystemParams& params, const ForcingSpec& forcing,
                        const State& ic, double t);

/// Steady-state response amplitude A / sqrt((w_n^2-w^2)^2 + (2 xi w_n w)^2).
double steady_state_amplitude(const SystemParams& params, double drive_accel,
                              double omega);

/// Steady-state phase lag phi = atan2(2 xi w_n w, w_n^2 - w^2), in [0, pi).
double steady_state_phase(const SystemParams& params, double omega);

/// Driving frequency maximizing the steady-state amplitude:
/// w_n sqrt(1 - 2 xi^2) for xi < 1/sqrt(2), else 0 (monotone response).
double amplitude_peak_freq(const SystemParams& params);

/// Damped natural frequency w_n sqrt(1 - xi^2) (underdamped only).
double damped_natural_freq(const SystemParams& params);

/// Classical fourth-order Runge-Kutta integration of the true dynamics.
/// Sampled forcing is interpolated linearly at half steps.
Trajectory reference_integrate(const SystemParams& params,
                               const ForcingSpec& forcing, const State& ic,
                               double dt, int n_steps, double t0 = 0.0);

/// z = x - y elementwise on the q and qdot channels; the u channel of the
/// input trajectory is carried through unchanged.
Trajectory to_relative(const Trajectory& absolute, const Trajectory& base_motion);
Trajectory from_relative(const Trajectory& relative, const Trajectory& base_motion);

/// CSV with header t,q,qdot,u, one row per sample, 17 significant digits.
void write_trajectory_csv(const Trajectory& traj, const std::string& path);
Trajectory read_trajectory_csv(const std::string& path);

}  // namespace frcnet
