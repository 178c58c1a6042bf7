#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "frcnet/forecast.hpp"
#include "frcnet/frc.hpp"
#include "frcnet/sweeps.hpp"
#include "frcnet/trainer.hpp"

namespace frcnet {

struct ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Full run description mirroring every module configuration. Parsed from
/// flat `section.key = value` text; unknown keys are rejected.
struct RunConfig {
  SystemParams system;
  ForcingKind excitation = ForcingKind::harmonic_force;
  Curriculum curriculum;
  TrainingConfig training;
  NetworkSpec network = NetworkSpec::defaults(Variant::V3);
  FrcConfig frc;
  double forecast_omega = 3.77;  // driving frequency of the forecast command
  double forecast_horizon = 100.0;
  State forecast_ic = State(0.2, 0.0);
  double newton_tol = 1e-10;
  int max_newton_iters = 8;
  SweepKind sweep_kind = SweepKind::band_center;
  std::uint64_t seed = 1;

  void validate() const;
};

/// Built-in parameter sets: `ls1` (nondimensional, band 0.8-1.5),
/// `ls1-bru1` / `ls1-bru3` (alternate bands), `ls1a` / `ls1b` (dimensional
/// configurations), `ls1-base` (base-excited, 1000 epochs).
RunConfig preset(const std::string& name);
std::vector<std::string> preset_names();

/// Overlay `section.key = value` assignments from a file onto base.
/// Lines starting with '#' are comments. Unknown keys throw ValidationError.
RunConfig load_config_file(const std::string& path, RunConfig base);
void apply_config_line(RunConfig& cfg, const std::string& key, const std::string& value);

/// Canonical serialization (every key, sorted layout) used for hashing and
/// for writing resolved configs next to run outputs.
std::string serialize_config(const RunConfig& cfg);

/// FNV-1a over the canonical serialization, hex string.
std::string config_hash(const RunConfig& cfg);

struct PhaseTimes {
  double dataset = 0.0;
  double training = 0.0;
  double forecasting = 0.0;
  double frc = 0.0;
  double total() const { return dataset + training + forecasting + frc; }
};

/// Run log written next to every command's outputs: configuration hash, seed,
/// per-phase wall times with percentages, and the artifact list. Carries
/// timing, so it is the one output not covered by byte-identity reruns.
struct RunManifest {
  int format_version = 1;
  std::string command;
  std::string config_hash;
  std::uint64_t seed = 0;
  PhaseTimes seconds;
  std::vector<std::string> artifacts;
};

void write_manifest(const RunManifest& m, const std::string& path);
RunManifest read_manifest(const std::string& path);  // validates the schema

}  // namespace frcnet
