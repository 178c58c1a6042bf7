#include "frcnet/oscillator.hpp"

#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace frcnet {

void SystemParams::validate() const {
  if (!(xi > 0.0)) throw std::invalid_argument("SystemParams: xi must be > 0");
  if (!(omega_n > 0.0))
    throw std::invalid_argument("SystemParams: omega_n must be > 0");
}

NondimensionalForm nondimensionalize(double mass, double damping_coeff,
                                     double stiffness, double drive_accel) {
  if (!(mass > 0.0)) throw std::invalid_argument("nondimensionalize: mass must be > 0");
  if (!(stiffness > 0.0))
    throw std::invalid_argument("nondimensionalize: stiffness must be > 0");
  if (damping_coeff < 0.0)
    throw std::invalid_argument("nondimensionalize: damping_coeff must be >= 0");
  NondimensionalForm f;
  f.omega_n = std::sqrt(stiffness / mass);
  f.xi = damping_coeff / (2.0 * std::sqrt(mass * stiffness));
  f.length_scale = drive_accel / (f.omega_n * f.omega_n);
  return f;
}

ForcingSpec ForcingSpec::harmonic(double amplitude, double omega) {
  ForcingSpec s;
  s.kind = ForcingKind::harmonic_force;
  s.amplitude = amplitude;
  s.omega = omega;
  return s;
}

ForcingSpec ForcingSpec::base(double displacement, double omega) {
  ForcingSpec s;
  s.kind = ForcingKind::harmonic_base;
  s.amplitude = displacement;
  s.omega = omega;
  return s;
}

ForcingSpec ForcingSpec::sampled_series(Eigen::VectorXd u, double t0, double dt) {
  ForcingSpec s;
  s.kind = ForcingKind::sampled;
  s.samples = std::move(u);
  s.sample_t0 = t0;
  s.sample_dt = dt;
  return s;
}

void ForcingSpec::validate() const {
  if (kind == ForcingKind::sampled) {
    if (samples.size() < 2)
      throw std::invalid_argument("ForcingSpec: sampled series needs >= 2 samples");
    if (!(sample_dt > 0.0))
      throw std::invalid_argument("ForcingSpec: sampled series step must be > 0");
  } else if (!(omega > 0.0)) {
    throw std::invalid_argument("ForcingSpec: omega must be > 0 for harmonic kinds");
  }
}

double base_forcing_accel(double displacement, double omega, double t) {
  return displacement * omega * omega * std::cos(omega * t);
}

double ForcingSpec::accel(double t) const {
  switch (kind) {
    case ForcingKind::harmonic_force:
      return amplitude * std::cos(omega * t);
    case ForcingKind::harmonic_base:
      return base_forcing_accel(amplitude, omega, t);
    case ForcingKind::sampled: {
      const double s = (t - sample_t0) / sample_dt;
      const auto n = samples.size();
      if (s <= 0.0) return samples(0);
      if (s >= static_cast<double>(n - 1)) return samples(n - 1);
      const auto k = static_cast<Eigen::Index>(s);
      const double w = s - static_cast<double>(k);
      return (1.0 - w) * samples(k) + w * samples(k + 1);
    }
  }
  return 0.0;
}

void Trajectory::validate() const {
  if (!(dt > 0.0)) throw std::invalid_argument("Trajectory: dt must be > 0");
  if (data.rows() < 2)
    throw std::invalid_argument("Trajectory: needs at least 2 samples");
}

State rhs(const State& x, double t, const ForcingSpec& forcing,
          const SystemParams& params) {
  const double u = forcing.accel(t);
  const double wn = params.omega_n;
  return State(x(1), u - 2.0 * params.xi * wn * x(1) - wn * wn * x(0));
}

namespace {

// Particular-solution coefficients x_p = B1 cos(w t) + B2 sin(w t).
struct SteadyCoeffs {
  double B1 = 0.0, B2 = 0.0, omega = 0.0;
  double pos(double t) const { return B1 * std::cos(omega * t) + B2 * std::sin(omega * t); }
  double vel(double t) const {
    return omega * (-B1 * std::sin(omega * t) + B2 * std::cos(omega * t));
  }
};

SteadyCoeffs steady_coeffs(const SystemParams& p, const ForcingSpec& f) {
  SteadyCoeffs c;
  c.omega = f.omega;
  double accel_amp = f.amplitude;
  if (f.kind == ForcingKind::harmonic_base) accel_amp *= f.omega * f.omega;
  const double wn2 = p.omega_n * p.omega_n;
  const double d1 = wn2 - f.omega * f.omega;
  const double d2 = 2.0 * p.xi * p.omega_n * f.omega;
  const double denom = d1 * d1 + d2 * d2;
  c.B1 = accel_amp * d1 / denom;
  c.B2 = accel_amp * d2 / denom;
  return c;
}

}  // namespace

State analytic_response(const SystemParams& params, const ForcingSpec& forcing,
                        const State& ic, double t) {
  params.validate();
  if (forcing.kind == ForcingKind::sampled)
    throw std::invalid_argument("analytic_response: no closed form for sampled forcing");
  forcing.validate();

  SteadyCoeffs sp{};
  if (forcing.amplitude != 0.0) sp = steady_coeffs(params, forcing);

  const double q0 = ic(0) - sp.pos(0.0);
  const double v0 = ic(1) - sp.vel(0.0);
  const double xi = params.xi;
  const double wn = params.omega_n;

  double hq, hv;
  if (xi < 1.0) {
    const double wd = wn * std::sqrt(1.0 - xi * xi);
    const double c1 = q0;
    const double c2 = (v0 + xi * wn * c1) / wd;
    const double e = std::exp(-xi * wn * t);
    const double cwd = std::cos(wd * t), swd = std::sin(wd * t);
    hq = e * (c1 * cwd + c2 * swd);
    hv = e * ((-xi * wn * c1 + c2 * wd) * cwd + (-xi * wn * c2 - c1 * wd) * swd);
  } else if (xi == 1.0) {
    const double c1 = q0;
    const double c2 = v0 + wn * c1;
    const double e = std::exp(-wn * t);
    hq = e * (c1 + c2 * t);
    hv = e * (c2 - wn * (c1 + c2 * t));
  } else {
    const double s = wn * std::sqrt(xi * xi - 1.0);
    const double l1 = -xi * wn + s, l2 = -xi * wn - s;
    const double c2 = (v0 - l1 * q0) / (l2 - l1);
    const double c1 = q0 - c2;
    hq = c1 * std::exp(l1 * t) + c2 * std::exp(l2 * t);
    hv = c1 * l1 * std::exp(l1 * t) + c2 * l2 * std::exp(l2 * t);
  }
  return State(hq + sp.pos(t), hv + sp.vel(t));
}

double steady_state_amplitude(const SystemParams& params, double drive_accel,
                              double omega) {
  const double wn2 = params.omega_n * params.omega_n;
  const double d1 = wn2 - omega * omega;
  const double d2 = 2.0 * params.xi * params.omega_n * omega;
  return std::abs(drive_accel) / std::sqrt(d1 * d1 + d2 * d2);
}

double steady_state_phase(const SystemParams& params, double omega) {
  const double wn2 = params.omega_n * params.omega_n;
  return std::atan2(2.0 * params.xi * params.omega_n * omega, wn2 - omega * omega);
}

double amplitude_peak_freq(const SystemParams& params) {
  const double x = 1.0 - 2.0 * params.xi * params.xi;
  return x > 0.0 ? params.omega_n * std::sqrt(x) : 0.0;
}

double damped_natural_freq(const SystemParams& params) {
  if (params.xi >= 1.0)
    throw std::invalid_argument("damped_natural_freq: requires xi < 1");
  return params.omega_n * std::sqrt(1.0 - params.xi * params.xi);
}

Trajectory reference_integrate(const SystemParams& params,
                               const ForcingSpec& forcing, const State& ic,
                               double dt, int n_steps, double t0) {
  params.validate();
  if (!(dt > 0.0)) throw std::invalid_argument("reference_integrate: dt must be > 0");
  if (n_steps < 1) throw std::invalid_argument("reference_integrate: n_steps must be >= 1");

  Trajectory traj;
  traj.t0 = t0;
  traj.dt = dt;
  traj.data.resize(n_steps + 1, 4);

  State x = ic;
  for (int k = 0; k <= n_steps; ++k) {
    const double t = t0 + k * dt;
    traj.data(k, 0) = t;
    traj.data(k, 1) = x(0);
    traj.data(k, 2) = x(1);
    traj.data(k, 3) = forcing.accel(t);
    if (k == n_steps) break;
    // Staged form: half-step predictors, full-step predictor, weighted blend.
    const State k1 = rhs(x, t, forcing, params);
    const State ya = x + 0.5 * dt * k1;
    const State k2 = rhs(ya, t + 0.5 * dt, forcing, params);
    const State yb = x + 0.5 * dt * k2;
    const State k3 = rhs(yb, t + 0.5 * dt, forcing, params);
    const State yc = x + dt * k3;
    const State k4 = rhs(yc, t + dt, forcing, params);
    x = x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  return traj;
}

namespace {

void require_aligned(const Trajectory& a, const Trajectory& b, const char* who) {
  if (a.size() != b.size() || a.dt != b.dt)
    throw std::invalid_argument(std::string(who) + ": trajectory shape mismatch");
}

}  // namespace

Trajectory to_relative(const Trajectory& absolute, const Trajectory& base_motion) {
  require_aligned(absolute, base_motion, "to_relative");
  Trajectory z = absolute;
  z.data.col(1) -= base_motion.data.col(1);
  z.data.col(2) -= base_motion.data.col(2);
  return z;
}

Trajectory from_relative(const Trajectory& relative, const Trajectory& base_motion) {
  require_aligned(relative, base_motion, "from_relative");
  Trajectory x = relative;
  x.data.col(1) += base_motion.data.col(1);
  x.data.col(2) += base_motion.data.col(2);
  return x;
}

void write_trajectory_csv(const Trajectory& traj, const std::string& path) {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw std::runtime_error("write_trajectory_csv: cannot open " + path);
  std::fputs("t,q,qdot,u\n", f);
  for (Eigen::Index k = 0; k < traj.size(); ++k)
    std::fprintf(f, "%.17g,%.17g,%.17g,%.17g\n", traj.data(k, 0), traj.data(k, 1),
                 traj.data(k, 2), traj.data(k, 3));
  std::fclose(f);
}

Trajectory read_trajectory_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("read_trajectory_csv: cannot open " + path);
  std::string line;
  if (!std::getline(in, line) || line.rfind("t,q,qdot,u", 0) != 0)
    throw std::runtime_error("read_trajectory_csv: bad header in " + path);

  std::vector<std::array<double, 4>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::array<double, 4> r{};
    std::istringstream ss(line);
    std::string cell;
    for (int i = 0; i < 4; ++i) {
      if (!std::getline(ss, cell, ','))
        throw std::runtime_error("read_trajectory_csv: short row in " + path);
      r[i] = std::stod(cell);
    }
    rows.push_back(r);
  }
  if (rows.size() < 2)
    throw std::runtime_error("read_trajectory_csv: needs at least 2 rows");

  Trajectory traj;
  traj.data.resize(static_cast<Eigen::Index>(rows.size()), 4);
  for (Eigen::Index k = 0; k < traj.data.rows(); ++k)
    for (int i = 0; i < 4; ++i) traj.data(k, i) = rows[static_cast<std::size_t>(k)][static_cast<std::size_t>(i)];
  traj.t0 = traj.data(0, 0);
  traj.dt = traj.data(1, 0) - traj.data(0, 0);
  return traj;
}

}  // namespace frcnet
