#pragma once

#include <string>

#include "frcnet/field.hpp"
#include "frcnet/oscillator.hpp"

namespace frcnet {

struct FrcConfig {
  double f_lo = 0.1;   // driving frequency range (rad/time)
  double f_hi = 10.0;
  int n_points = 500;  // endpoint-inclusive uniform grid
  double drive_amplitude = 1.0;
  State ic = State(0.2, 0.0);  // shared initial condition
  double horizon = 100.0;
  double tail_fraction = 0.3;
  double dt = 0.01;
  ForcingKind excitation = ForcingKind::harmonic_force;

  void validate() const;
  Eigen::VectorXd grid() const;
};

struct FrcCurve {
  Eigen::VectorXd freqs;
  Eigen::VectorXd amplitudes;  // NaN marks a failed frequency
  double peak_amplitude = 0.0;
  double peak_freq = 0.0;
};

/// Magnitude of the analytic signal. The spectrum is taken on the series
/// zero-padded to the next power of two, positive frequencies doubled and
/// negative ones zeroed. Endpoint samples carry wrap-around distortion and
/// are excluded from downstream statistics. Requires length >= 8.
Eigen::VectorXd hilbert_envelope(const Eigen::Ref<const Eigen::VectorXd>& signal);

/// Complex analytic signal (same construction as hilbert_envelope).
Eigen::VectorXcd analytic_signal(const Eigen::Ref<const Eigen::VectorXd>& signal);

struct SteadyAmplitude {
  double value = 0.0;
  bool warned = false;   // transient may not have decayed inside the window
  bool checked = false;  // decay check ran (system parameters were supplied)
};

/// Median of the Hilbert envelope over the final tail_fraction of the
/// trajectory, always excluding the first and last 5% of the envelope.
/// When params is given, warns unless exp(-xi w_n (1-tail) T) <= 0.01.
SteadyAmplitude steady_amplitude(const Trajectory& traj, double tail_fraction = 0.3,
                                 const SystemParams* params = nullptr);

/// Batched forced forecasts over the frequency grid; per-frequency failures
/// leave NaN amplitudes and the curve is still returned. For harmonic_base
/// excitation the forecast runs in relative coordinates and amplitudes are
/// divided by the base displacement (Z/Y).
FrcCurve compute_frc(const GradientField& field, const FrcConfig& config,
                     int workers = 1, const SystemParams* transient_check = nullptr);

struct BaseFrcResult {
  FrcCurve relative;  // Z/Y
  FrcCurve absolute;  // X/Y, reconstructed via from_relative
};

BaseFrcResult compute_base_frc(const GradientField& field, const FrcConfig& config,
                               int workers = 1,
                               const SystemParams* transient_check = nullptr);

/// Closed-form steady-state amplitude curves on the same grid.
FrcCurve analytic_frc(const SystemParams& params, const FrcConfig& config);
FrcCurve analytic_base_transmissibility(const SystemParams& params,
                                        const FrcConfig& config);

struct TimeErrorReport {
  double mse = 0.0;
  double mean_error_pct = 0.0;
  double amp_error_pct = 0.0;  // signed
  double phase_error_pct = 0.0;
  double freq_error_pct = 0.0;
};

/// Time-domain deviation metrics between aligned trajectories. Percentage
/// bases: mean error against the truth's steady amplitude, amplitude error
/// signed against the truth amplitude, phase as fraction of a full cycle from
/// the circular mean analytic-phase difference over the steady window, and
/// frequency from the mean instantaneous frequency over the same window.
TimeErrorReport time_metrics(const Trajectory& pred, const Trajectory& truth,
                             double tail_fraction = 0.3);

struct FrcErrorReport {
  double shape_error_pct = 0.0;      // mean |dA| / truth peak
  double peak_error_pct = 0.0;       // |dPeak| / truth peak
  double resonance_error_pct = 0.0;  // |dPeakFreq| / truth peak freq
  double peak_freq_estimate = 0.0;
};

FrcErrorReport frc_metrics(const FrcCurve& pred, const FrcCurve& truth);

/// CSV `freq,amplitude` plus footer `# peak_freq=...,peak_amp=...`.
void write_frc_csv(const FrcCurve& curve, const std::string& path);

/// Line plot of the curve with an optional oracle overlay.
void write_frc_svg(const FrcCurve& curve, const FrcCurve* oracle,
                   const std::string& path, const std::string& title);

std::string to_kv_text(const TimeErrorReport& r);
std::string to_kv_text(const FrcErrorReport& r);
std::string to_csv_row(const TimeErrorReport& r);  // with header line
std::string to_csv_row(const FrcErrorReport& r);

}  // namespace frcnet
