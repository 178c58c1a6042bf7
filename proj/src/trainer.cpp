#include "frcnet/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "frcnet/rng.hpp"

namespace frcnet {

void Curriculum::validate() const {
  if (!(band_lo > 0.0) || !(band_hi > band_lo))
    throw std::invalid_argument("Curriculum: need 0 < band_lo < band_hi");
  if (n_trajectories < 1)
    throw std::invalid_argument("Curriculum: n_trajectories must be >= 1");
  if (!(ic_lo >= 0.0) || !(ic_hi > ic_lo))
    throw std::invalid_argument("Curriculum: invalid initial-condition range");
  if (!(sample_fraction > 0.0 && sample_fraction <= 1.0))
    throw std::invalid_argument("Curriculum: sample_fraction must be in (0, 1]");
  if (!(horizon > 0.0)) throw std::invalid_argument("Curriculum: horizon must be > 0");
  if (!(dt > 0.0)) throw std::invalid_argument("Curriculum: dt must be > 0");
}

std::vector<Trajectory> generate_curriculum(const Curriculum& curriculum,
                                            const SystemParams& params) {
  curriculum.validate();
  params.validate();
  require_nyquist(curriculum.band_hi, curriculum.dt);

  const int n_steps =
      std::max(1, static_cast<int>(std::llround(curriculum.horizon / curriculum.dt)));
  const double cell =
      (curriculum.ic_hi - curriculum.ic_lo) / curriculum.n_trajectories;

  std::vector<Trajectory> out;
  out.reserve(static_cast<std::size_t>(curriculum.n_trajectories));
  Rng root(curriculum.seed);
  for (int i = 0; i < curriculum.n_trajectories; ++i) {
    Rng rng = root.fork(static_cast<std::uint64_t>(i));
    const double omega = rng.uniform(curriculum.band_lo, curriculum.band_hi);
    const double mag = rng.uniform(curriculum.ic_lo + i * cell,
                                   curriculum.ic_lo + (i + 1) * cell);
    const double angle = rng.uniform(0.0, 2.0 * M_PI);
    const State ic(mag * std::cos(angle), mag * std::sin(angle));
    const ForcingSpec forcing =
        curriculum.excitation == ForcingKind::harmonic_base
            ? ForcingSpec::base(curriculum.drive_amplitude, omega)
            : ForcingSpec::harmonic(curriculum.drive_amplitude, omega);
    out.push_back(reference_integrate(params, forcing, ic, curriculum.dt, n_steps));
  }
  return out;
}

namespace {

std::vector<Eigen::Index> subsample_indices(Eigen::Index lo, Eigen::Index hi,
                                            double fraction, std::uint64_t seed) {
  const Eigen::Index n = hi - lo;
  const auto keep = std::max<Eigen::Index>(
      1, static_cast<Eigen::Index>(std::floor(fraction * static_cast<double>(n))));
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), lo);
  Rng rng(seed);
  for (Eigen::Index i = 0; i < keep; ++i) {
    const auto j = i + static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(n - i)));
    std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
  }
  idx.resize(static_cast<std::size_t>(keep));
  std::sort(idx.begin(), idx.end());
  return idx;
}

TrainingSample build_sample(const Trajectory& traj, Eigen::Index k, Variant variant,
                            double qddot_full, double horizon) {
  TrainingSample s;
  s.x = traj.state(k);
  s.u = traj.data(k, 3);
  s.t_norm = (traj.data(k, 0) - traj.t0) / horizon;
  if (variant == Variant::V1) {
    s.target = Eigen::Vector2d(s.x(1), qddot_full);
  } else {
    s.target = Eigen::Vector2d(s.x(1), qddot_full - s.u);
  }
  return s;
}

}  // namespace

std::vector<TrainingSample> make_targets(const Trajectory& traj, Variant variant,
                                         const SystemParams& params, double horizon,
                                         double sample_fraction, std::uint64_t seed) {
  traj.validate();
  params.validate();
  const auto idx = subsample_indices(0, traj.size(), sample_fraction, seed);
  std::vector<TrainingSample> out;
  out.reserve(idx.size());
  const double wn = params.omega_n;
  for (const Eigen::Index k : idx) {
    const double qddot = traj.data(k, 3) - 2.0 * params.xi * wn * traj.data(k, 2) -
                         wn * wn * traj.data(k, 1);
    out.push_back(build_sample(traj, k, variant, qddot, horizon));
  }
  return out;
}

std::vector<TrainingSample> make_targets_fd(const Trajectory& traj, Variant variant,
                                            double horizon, double sample_fraction,
                                            std::uint64_t seed) {
  traj.validate();
  if (traj.size() < 3)
    throw std::invalid_argument("make_targets_fd: needs at least 3 samples");
  const auto idx = subsample_indices(1, traj.size() - 1, sample_fraction, seed);
  std::vector<TrainingSample> out;
  out.reserve(idx.size());
  for (const Eigen::Index k : idx) {
    const double qddot = (traj.data(k + 1, 2) - traj.data(k - 1, 2)) / (2.0 * traj.dt);
    out.push_back(build_sample(traj, k, variant, qddot, horizon));
  }
  return out;
}

std::vector<TrainingSample> make_curriculum_targets(
    const std::vector<Trajectory>& trajectories, Variant variant,
    const SystemParams& params, const Curriculum& curriculum) {
  Rng root(curriculum.seed);
  std::vector<TrainingSample> all;
  for (std::size_t i = 0; i < trajectories.size(); ++i) {
    const auto part =
        make_targets(trajectories[i], variant, params, curriculum.horizon,
                     curriculum.sample_fraction, root.fork(1000 + i).next_u64());
    all.insert(all.end(), part.begin(), part.end());
  }
  return all;
}

double l1_loss(const std::vector<Eigen::Vector2d>& pred,
               const std::vector<Eigen::Vector2d>& target) {
  if (pred.empty() || pred.size() != target.size())
    throw std::invalid_argument("l1_loss: empty or mismatched batches");
  double acc = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i)
    acc += (pred[i] - target[i]).cwiseAbs().sum();
  return acc / (2.0 * static_cast<double>(pred.size()));
}

void TrainingConfig::validate() const {
  if (epochs < 0) throw std::invalid_argument("TrainingConfig: epochs must be >= 0");
  if (batch_size < 1) throw std::invalid_argument("TrainingConfig: batch_size must be >= 1");
  if (!(lr_initial > 0.0)) throw std::invalid_argument("TrainingConfig: lr_initial must be > 0");
  if (!(plateau_factor > 0.0 && plateau_factor < 1.0))
    throw std::invalid_argument("TrainingConfig: plateau_factor must be in (0, 1)");
  if (plateau_patience < 1)
    throw std::invalid_argument("TrainingConfig: plateau_patience must be >= 1");
  if (!(lr_min > 0.0)) throw std::invalid_argument("TrainingConfig: lr_min must be > 0");
  if (plateau_threshold < 0.0)
    throw std::invalid_argument("TrainingConfig: plateau_threshold must be >= 0");
  if (!(norm_margin > 0.0))
    throw std::invalid_argument("TrainingConfig: norm_margin must be > 0");
}

namespace {

struct AdamState {
  NetworkGrads m, v;
  long step = 0;
};

template <typename T>
void adam_tensor(T& theta, const T& grad, T& m, T& v, double lr, double bc1,
                 double bc2, double decay) {
  constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  m = beta1 * m + (1.0 - beta1) * grad;
  v = (beta2 * v.array() + (1.0 - beta2) * grad.array().square()).matrix();
  theta.array() -= lr * (m.array() / bc1) / ((v.array() / bc2).sqrt() + eps);
  if (decay > 0.0) theta *= (1.0 - lr * decay);
}

void adam_update(OperatorNetwork& net, const NetworkGrads& grads, AdamState& state,
                 double lr, double decay) {
  ++state.step;
  const double bc1 = 1.0 - std::pow(0.9, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(0.999, static_cast<double>(state.step));
  auto update_mlp = [&](Mlp& mlp, const MlpGrads& g, MlpGrads& m, MlpGrads& v) {
    for (std::size_t k = 0; k < mlp.layers.size(); ++k) {
      adam_tensor(mlp.layers[k].W, g.dW[k], m.dW[k], v.dW[k], lr, bc1, bc2, decay);
      adam_tensor(mlp.layers[k].b, g.db[k], m.db[k], v.db[k], lr, bc1, bc2, 0.0);
    }
  };
  update_mlp(net.branch, grads.branch, state.m.branch, state.v.branch);
  update_mlp(net.second, grads.second, state.m.second, state.v.second);
}

void freeze_normalization(OperatorNetwork& net,
                          const std::vector<TrainingSample>& samples,
                          double norm_margin) {
  const int nf = net.feature_count();
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(nf);
  Eigen::VectorXd peak = Eigen::VectorXd::Zero(nf);
  for (const auto& s : samples) {
    Eigen::Vector3d f(s.x(0), s.x(1), s.u);
    for (int i = 0; i < nf; ++i) {
      mean(i) += f(i);
      peak(i) = std::max(peak(i), std::abs(f(i)));
    }
  }
  const double n = static_cast<double>(samples.size());
  mean /= n;
  net.norm_shift = mean;
  net.norm_scale.resize(nf);
  // Margin-scaled max-abs normalization: activations stay in their
  // near-linear band well past the sampled range, which forced forecasts
  // extrapolate into around resonance.
  for (int i = 0; i < nf; ++i)
    net.norm_scale(i) = peak(i) > 1e-12 ? 1.0 / (norm_margin * peak(i)) : 1.0;
}

}  // namespace

TrainResult train(OperatorNetwork net, const std::vector<TrainingSample>& samples,
                  const TrainingConfig& config, const EpochCallback& on_epoch) {
  config.validate();
  if (samples.empty()) throw std::invalid_argument("train: no samples");

  TrainResult result{std::move(net), {}, false};
  if (config.epochs == 0) return result;

  freeze_normalization(result.net, samples, config.norm_margin);

  AdamState adam;
  adam.m = NetworkGrads::like(result.net);
  adam.v = NetworkGrads::like(result.net);
  NetworkGrads grads = NetworkGrads::like(result.net);
  NetworkCache cache;

  Rng rng(config.seed);
  std::vector<std::size_t> order(samples.size());
  std::iota(order.begin(), order.end(), 0);

  double lr = config.lr_initial;
  double best_loss = std::numeric_limits<double>::infinity();
  int plateau_count = 0;
  const std::size_t n = samples.size();

  result.records.reserve(static_cast<std::size_t>(config.epochs));
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    const EquilibriumReport eq = equilibrium_eigenvalues(result.net);

    // Seed-derived batch order.
    for (std::size_t i = 0; i + 1 < n; ++i) {
      const auto j = i + static_cast<std::size_t>(rng.below(n - i));
      std::swap(order[i], order[j]);
    }

    double epoch_abs = 0.0;
    for (std::size_t start = 0; start < n; start += config.batch_size) {
      const std::size_t stop = std::min(n, start + config.batch_size);
      const double bsize = static_cast<double>(stop - start);
      grads.set_zero();

      double grad_scale = 1.0;
      if (config.rms_batch_norm) {
        double acc = 0.0;
        for (std::size_t i = start; i < stop; ++i)
          acc += samples[order[i]].target.squaredNorm();
        grad_scale = 1.0 / std::max(std::sqrt(acc / (2.0 * bsize)), 1e-12);
      }

      for (std::size_t i = start; i < stop; ++i) {
        const auto& s = samples[order[i]];
        const Eigen::Vector2d pred =
            network_forward_cached(result.net, s.x, s.t_norm, s.u, cache);
        const Eigen::Vector2d err = pred - s.target;
        epoch_abs += err.cwiseAbs().sum();
        Eigen::Vector2d dG = err.cwiseSign() * (grad_scale / (2.0 * bsize));
        network_backward(result.net, cache, dG, grads);
      }
      adam_update(result.net, grads, adam, lr, config.weight_decay);
    }

    const double epoch_loss = epoch_abs / (2.0 * static_cast<double>(n));
    result.records.push_back(
        {epoch, epoch_loss, lr, eq.lambda1.real(), std::abs(eq.lambda1.imag())});
    if (on_epoch) on_epoch(result.net, result.records.back());

    if (!std::isfinite(epoch_loss)) {
      result.diverged = true;
      break;
    }

    // An epoch counts as improving only when it beats the best by the
    // relative threshold; noise-level gains do not reset patience.
    if (epoch_loss < best_loss * (1.0 - config.plateau_threshold)) {
      best_loss = epoch_loss;
      plateau_count = 0;
    } else if (++plateau_count >= config.plateau_patience) {
      lr = std::max(lr * config.plateau_factor, config.lr_min);
      plateau_count = 0;
    }
  }
  return result;
}

void write_epoch_csv(const std::vector<EpochRecord>& records, const std::string& path) {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw std::runtime_error("write_epoch_csv: cannot open " + path);
  std::fputs("epoch,loss,lr,eig_re,eig_im\n", f);
  for (const auto& r : records)
    std::fprintf(f, "%d,%.17g,%.17g,%.17g,%.17g\n", r.epoch, r.loss, r.lr, r.eig_re,
                 r.eig_im);
  std::fclose(f);
}

std::vector<EigenRecord> to_eigen_records(const std::vector<EpochRecord>& records) {
  std::vector<EigenRecord> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back({r.epoch, r.eig_re, r.eig_im});
  return out;
}

}  // namespace frcnet
