#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "frcnet/frc.hpp"
#include "frcnet/trainer.hpp"

namespace frcnet {

/// Training-sensitivity sweep families. Each grid point is a full
/// train-then-FRC run with seeds derived from (spec seed, point id).
enum class SweepKind {
  bandwidth,         // band width at fixed centers
  band_center,       // band center at fixed width
  drive_amplitude,   // training drive amplitude across the center grid
  trajectory_count,  // curriculum size at fixed training horizons
  frequency_ratio,   // natural frequency at fixed sampling ratio
};

std::string to_string(SweepKind k);
SweepKind sweep_kind_from_string(const std::string& s);

struct SweepSpec {
  SweepKind kind = SweepKind::band_center;
  std::vector<double> values;     // swept grid (meaning depends on kind)
  std::vector<double> secondary;  // centers / amplitudes / horizons, may be empty

  SystemParams params;       // reference system (frequency_ratio rescales it)
  Curriculum curriculum;     // template; band and size replaced per point
  TrainingConfig training;
  NetworkSpec network;
  FrcConfig frc;             // evaluation profile

  double band_width = 0.1;      // for band_center / drive_amplitude kinds
  double sampling_ratio = 10.0; // R_s for frequency_ratio
  double r_max = 7.0;           // top normalized frequency for frequency_ratio
  std::uint64_t seed = 1;

  static SweepSpec defaults(SweepKind k);
  void validate() const;
};

struct SweepPoint {
  int id = 0;
  double value = 0.0;
  double secondary = 0.0;
  FrcErrorReport report;
  double e_pct = 0.0;          // frequency_ratio aggregate: max profile error
  Eigen::VectorXd profile_r;   // frequency_ratio error profile
  Eigen::VectorXd profile_e;   // percent of true resonant amplitude
  bool failed = false;
  std::string error;
};

struct SweepResult {
  SweepKind kind = SweepKind::band_center;
  std::vector<SweepPoint> points;
};

/// Runs every grid point (training + FRC + metrics). Per-point failures are
/// recorded and the sweep continues. Scalar results are bit-reproducible for
/// a fixed spec at any worker count.
SweepResult run_sweep(const SweepSpec& spec, int workers = 1,
                      std::ostream* progress = nullptr);

/// `point_id,swept_value,secondary,shape_err,peak_err,res_err` or
/// `point_id,swept_value,secondary,e_pct` for frequency-ratio sweeps.
void write_sweep_csv(const SweepResult& result, const std::string& path);

/// Frequency-ratio error profiles, `point_id,r,e_pct`.
void write_sweep_profiles_csv(const SweepResult& result, const std::string& path);

void write_sweep_svg(const SweepResult& result, const std::string& path);

}  // namespace frcnet
