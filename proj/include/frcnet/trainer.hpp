#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "frcnet/network.hpp"
#include "frcnet/oscillator.hpp"
#include "frcnet/stability.hpp"

namespace frcnet {

/// Banded random-uniform training curriculum: each trajectory draws its
/// driving frequency uniformly from [band_lo, band_hi] and its initial
/// condition magnitude from one of n_trajectories consecutive cells
/// partitioning [ic_lo, ic_hi], split between position and velocity by a
/// random angle. System amplitude therefore increases across trajectories.
struct Curriculum {
  double band_lo = 0.8;
  double band_hi = 1.5;
  int n_trajectories = 10;
  double ic_lo = 0.001;
  double ic_hi = 1.0;
  double drive_amplitude = 1.0;  // acceleration A, or base displacement Y
  double horizon = 3.0;          // trained time length t_T
  double sample_fraction = 0.5;
  double dt = 0.01;
  ForcingKind excitation = ForcingKind::harmonic_force;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Reference trajectories under the curriculum; deterministic for a fixed
/// seed. Throws when dt violates the sampling limit for band_hi.
std::vector<Trajectory> generate_curriculum(const Curriculum& curriculum,
                                            const SystemParams& params);

struct TrainingSample {
  State x = State::Zero();
  double t_norm = 0.0;  // V1 trunk input
  double u = 0.0;       // V1 branch input
  Eigen::Vector2d target = Eigen::Vector2d::Zero();
};

/// Gradient targets at a seeded uniform subsample of the trajectory steps.
/// V2/V3 targets are the free-response gradient (forcing subtracted); V1
/// targets are the full gradient with (t_norm, u) carried as inputs. The
/// acceleration comes from the exact governing equations at the sampled state.
std::vector<TrainingSample> make_targets(const Trajectory& traj, Variant variant,
                                         const SystemParams& params, double horizon,
                                         double sample_fraction, std::uint64_t seed);

/// Finite-difference fallback for externally supplied trajectories: the
/// acceleration is the central difference of the velocity channel (second
/// order); forcing is read from the u channel.
std::vector<TrainingSample> make_targets_fd(const Trajectory& traj, Variant variant,
                                            double horizon, double sample_fraction,
                                            std::uint64_t seed);

std::vector<TrainingSample> make_curriculum_targets(
    const std::vector<Trajectory>& trajectories, Variant variant,
    const SystemParams& params, const Curriculum& curriculum);

/// Mean absolute elementwise deviation. Throws on an empty batch.
double l1_loss(const std::vector<Eigen::Vector2d>& pred,
               const std::vector<Eigen::Vector2d>& target);

struct TrainingConfig {
  int epochs = 100;
  int batch_size = 16;
  double lr_initial = 1e-3;
  double plateau_factor = 0.5;
  int plateau_patience = 10;
  double plateau_threshold = 0.15;  // relative improvement that resets patience
  double lr_min = 1e-6;
  double norm_margin = 32.0;  // feature scale = 1 / (margin * max|feature|)
  double weight_decay = 0.3;  // decoupled shrink, weights only
  bool rms_batch_norm = false;  // divide batch loss by target RMS amplitude
  int checkpoint_every = 0;     // 0 = off
  std::uint64_t seed = 0;

  void validate() const;
};

struct EpochRecord {
  int epoch = 0;
  double loss = 0.0;
  double lr = 0.0;
  double eig_re = 0.0;
  double eig_im = 0.0;
};

struct TrainResult {
  OperatorNetwork net;
  std::vector<EpochRecord> records;
  bool diverged = false;
};

using EpochCallback = std::function<void(const OperatorNetwork&, const EpochRecord&)>;

/// First-order adaptive-moment minimization of the L1 loss with
/// plateau-triggered learning-rate decay. Input normalization constants are
/// frozen from the sample statistics before the first step. Every epoch
/// record carries the equilibrium eigenvalues of the epoch-start network, so
/// record 0 holds the initialization eigenvalues.
/// Single-threaded and bit-deterministic for a fixed (seed, config, data).
TrainResult train(OperatorNetwork net, const std::vector<TrainingSample>& samples,
                  const TrainingConfig& config, const EpochCallback& on_epoch = {});

/// CSV `epoch,loss,lr,eig_re,eig_im`.
void write_epoch_csv(const std::vector<EpochRecord>& records, const std::string& path);

std::vector<EigenRecord> to_eigen_records(const std::vector<EpochRecord>& records);

}  // namespace frcnet
