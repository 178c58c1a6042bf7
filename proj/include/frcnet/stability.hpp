#pragma once

#include <complex>
#include <optional>
#include <string>
#include <vector>

#include "frcnet/field.hpp"

namespace frcnet {

/// Closed-form eigenvalues of a 2x2 matrix, ordered with the nonnegative
/// imaginary part first.
std::pair<std::complex<double>, std::complex<double>> eigenvalues_2x2(
    const Eigen::Matrix2d& m);

enum class StabilityClass { stable, marginal, unstable };
std::string to_string(StabilityClass c);

struct EquilibriumReport {
  std::complex<double> lambda1, lambda2;
  StabilityClass verdict = StabilityClass::marginal;
  bool nonautonomous_caveat = false;  // V1 evaluated at frozen (t_norm, u) = (0, 0)
};

/// Linearization of the field at the origin equilibrium.
EquilibriumReport equilibrium_eigenvalues(const GradientField& field);

/// One per training epoch; assembled into the root-locus diagnostics.
struct EigenRecord {
  int epoch = 0;
  double re = 0.0;
  double im = 0.0;
};

struct ReferenceSystem {
  double xi;
  double omega_n;
};

void write_root_locus_csv(const std::vector<EigenRecord>& records,
                          const std::string& path,
                          std::optional<ReferenceSystem> reference = {});
void write_root_locus_svg(const std::vector<EigenRecord>& records,
                          const std::string& path,
                          std::optional<ReferenceSystem> reference = {});

struct NyquistReport {
  double nyquist_rate = 0.0;     // f_R = 2 f_target (Hz)
  double dt_max = 0.0;           // 1 / f_R
  double sampling_ratio = 0.0;   // R_s = 2 pi f_s / w_n with f_s = 1/dt
  double omega_critical = 0.0;   // w_n R_s / 2 (local ratio = 2 locus)
  bool dt_exceeds_limit = false;
};

/// Sampling limits for a target band top (rad/time) at step dt.
NyquistReport nyquist_limits(double omega_n, double target_band_hi, double dt);

/// Throws when dt violates the sampling limit for the band top; message
/// carries limit and offending value. Usable as a training-time guard.
void require_nyquist(double target_band_hi, double dt);

struct DivergenceReport {
  bool pass = false;
  double worst_trace = 0.0;
  State worst_point = State::Zero();
};

/// Jacobian trace over a phase-space grid; passes when the maximum trace
/// stays at or below tol (dissipative or neutral everywhere on the box).
DivergenceReport divergence_check(const GradientField& field, const State& box_lo,
                                  const State& box_hi, int grid_n = 20,
                                  double tol = 1e-3);

}  // namespace frcnet
