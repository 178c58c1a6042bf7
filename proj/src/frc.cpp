#include "frcnet/frc.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdio>
#include <sstream>
#include <stdexcept>
#include <vector>

#include <unsupported/Eigen/FFT>

#include "frcnet/forecast.hpp"
#include "frcnet/svg.hpp"

namespace frcnet {

void FrcConfig::validate() const {
  if (!(f_lo > 0.0)) throw std::invalid_argument("FrcConfig: f_lo must be > 0");
  if (!(f_hi > f_lo)) throw std::invalid_argument("FrcConfig: f_hi must exceed f_lo");
  if (n_points < 2) throw std::invalid_argument("FrcConfig: n_points must be >= 2");
  if (!(drive_amplitude > 0.0))
    throw std::invalid_argument("FrcConfig: drive_amplitude must be > 0");
  if (!(horizon > 0.0)) throw std::invalid_argument("FrcConfig: horizon must be > 0");
  if (!(tail_fraction > 0.0 && tail_fraction <= 1.0))
    throw std::invalid_argument("FrcConfig: tail_fraction must be in (0, 1]");
  if (!(dt > 0.0)) throw std::invalid_argument("FrcConfig: dt must be > 0");
  if (excitation == ForcingKind::sampled)
    throw std::invalid_argument("FrcConfig: excitation must be harmonic");
}

Eigen::VectorXd FrcConfig::grid() const {
  return Eigen::VectorXd::LinSpaced(n_points, f_lo, f_hi);
}

namespace {

Eigen::Index next_pow2(Eigen::Index n) {
  Eigen::Index m = 1;
  while (m < n) m <<= 1;
  return m;
}

}  // namespace

Eigen::VectorXcd analytic_signal(const Eigen::Ref<const Eigen::VectorXd>& signal) {
  const Eigen::Index n = signal.size();
  if (n < 8) throw std::invalid_argument("analytic_signal: needs at least 8 samples");
  const Eigen::Index m = next_pow2(n);

  std::vector<double> padded(static_cast<std::size_t>(m), 0.0);
  for (Eigen::Index i = 0; i < n; ++i) padded[static_cast<std::size_t>(i)] = signal(i);

  Eigen::FFT<double> fft;
  std::vector<std::complex<double>> spec;
  fft.fwd(spec, padded);

  // Analytic-signal spectrum: keep DC and Nyquist, double positive
  // frequencies, zero negative ones.
  for (Eigen::Index k = 1; k < m / 2; ++k) spec[static_cast<std::size_t>(k)] *= 2.0;
  for (Eigen::Index k = m / 2 + 1; k < m; ++k) spec[static_cast<std::size_t>(k)] = 0.0;

  std::vector<std::complex<double>> analytic;
  fft.inv(analytic, spec);

  Eigen::VectorXcd out(n);
  for (Eigen::Index i = 0; i < n; ++i) out(i) = analytic[static_cast<std::size_t>(i)];
  return out;
}

Eigen::VectorXd hilbert_envelope(const Eigen::Ref<const Eigen::VectorXd>& signal) {
  return analytic_signal(signal).cwiseAbs();
}

namespace {

struct Window {
  Eigen::Index lo, hi;  // [lo, hi)
};

Window steady_window(Eigen::Index n, double tail_fraction) {
  const auto lo_edge = static_cast<Eigen::Index>(std::ceil(0.05 * static_cast<double>(n)));
  const auto hi = static_cast<Eigen::Index>(std::floor(0.95 * static_cast<double>(n)));
  const auto tail = static_cast<Eigen::Index>(
      std::ceil((1.0 - tail_fraction) * static_cast<double>(n)));
  const Eigen::Index lo = std::max(lo_edge, tail);
  if (hi - lo < 4)
    throw std::invalid_argument("steady window too short; extend the horizon");
  return {lo, hi};
}

double median_of(std::vector<double> v) {
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  double m = v[mid];
  if (v.size() % 2 == 0) {
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid) - 1, v.end());
    m = 0.5 * (m + v[mid - 1]);
  }
  return m;
}

}  // namespace

SteadyAmplitude steady_amplitude(const Trajectory& traj, double tail_fraction,
                                 const SystemParams* params) {
  traj.validate();
  const Eigen::VectorXd env = hilbert_envelope(traj.q());
  const Window w = steady_window(env.size(), tail_fraction);

  SteadyAmplitude result;
  if (params) {
    result.checked = true;
    const double settle = (1.0 - tail_fraction) * traj.dt * static_cast<double>(traj.size() - 1);
    result.warned = std::exp(-params->xi * params->omega_n * settle) > 0.01;
  }
  std::vector<double> vals(static_cast<std::size_t>(w.hi - w.lo));
  for (Eigen::Index i = w.lo; i < w.hi; ++i) vals[static_cast<std::size_t>(i - w.lo)] = env(i);
  result.value = median_of(std::move(vals));
  return result;
}

namespace {

void finalize_peak(FrcCurve& curve) {
  curve.peak_amplitude = -1.0;
  curve.peak_freq = 0.0;
  for (Eigen::Index i = 0; i < curve.freqs.size(); ++i) {
    if (std::isfinite(curve.amplitudes(i)) && curve.amplitudes(i) > curve.peak_amplitude) {
      curve.peak_amplitude = curve.amplitudes(i);
      curve.peak_freq = curve.freqs(i);
    }
  }
  if (curve.peak_amplitude < 0.0) curve.peak_amplitude = std::nan("");
}

ForcingSpec frc_forcing(const FrcConfig& config, double omega) {
  return config.excitation == ForcingKind::harmonic_base
             ? ForcingSpec::base(config.drive_amplitude, omega)
             : ForcingSpec::harmonic(config.drive_amplitude, omega);
}

std::vector<ForecastResult> frc_forecasts(const GradientField& field,
                                          const FrcConfig& config, int workers) {
  config.validate();
  const Eigen::VectorXd freqs = config.grid();
  const int n_steps = static_cast<int>(std::llround(config.horizon / config.dt));

  std::vector<std::pair<State, ForecastConfig>> conditions;
  conditions.reserve(static_cast<std::size_t>(config.n_points));
  for (Eigen::Index i = 0; i < freqs.size(); ++i) {
    ForecastConfig fc;
    fc.dt = config.dt;
    fc.n_steps = n_steps;
    fc.forcing = frc_forcing(config, freqs(i));
    conditions.emplace_back(config.ic, fc);
  }
  return forecast_batch(field, conditions, workers);
}

double result_amplitude(const ForecastResult& r, const FrcConfig& config,
                        const SystemParams* transient_check) {
  if (r.failure_index >= 0 || !r.trajectory.q().allFinite()) return std::nan("");
  return steady_amplitude(r.trajectory, config.tail_fraction, transient_check).value;
}

}  // namespace

FrcCurve compute_frc(const GradientField& field, const FrcConfig& config, int workers,
                     const SystemParams* transient_check) {
  const auto results = frc_forecasts(field, config, workers);
  FrcCurve curve;
  curve.freqs = config.grid();
  curve.amplitudes.resize(curve.freqs.size());
  const double scale =
      config.excitation == ForcingKind::harmonic_base ? config.drive_amplitude : 1.0;
  for (std::size_t i = 0; i < results.size(); ++i)
    curve.amplitudes(static_cast<Eigen::Index>(i)) =
        result_amplitude(results[i], config, transient_check) / scale;
  finalize_peak(curve);
  return curve;
}

BaseFrcResult compute_base_frc(const GradientField& field, const FrcConfig& config,
                               int workers, const SystemParams* transient_check) {
  FrcConfig cfg = config;
  cfg.excitation = ForcingKind::harmonic_base;
  const auto results = frc_forecasts(field, cfg, workers);
  const Eigen::VectorXd freqs = cfg.grid();
  const double Y = cfg.drive_amplitude;

  BaseFrcResult out;
  out.relative.freqs = freqs;
  out.relative.amplitudes.resize(freqs.size());
  out.absolute.freqs = freqs;
  out.absolute.amplitudes.resize(freqs.size());

  for (Eigen::Index i = 0; i < freqs.size(); ++i) {
    const auto& r = results[static_cast<std::size_t>(i)];
    const double rel = result_amplitude(r, cfg, transient_check);
    out.relative.amplitudes(i) = rel / Y;
    if (!std::isfinite(rel)) {
      out.absolute.amplitudes(i) = std::nan("");
      continue;
    }
    // Reconstruct absolute motion x = z + y on the forecast grid.
    Trajectory base;
    base.t0 = r.trajectory.t0;
    base.dt = r.trajectory.dt;
    base.data.resize(r.trajectory.size(), 4);
    const double w = freqs(i);
    for (Eigen::Index k = 0; k < base.data.rows(); ++k) {
      const double t = r.trajectory.data(k, 0);
      base.data(k, 0) = t;
      base.data(k, 1) = Y * std::cos(w * t);
      base.data(k, 2) = -Y * w * std::sin(w * t);
      base.data(k, 3) = 0.0;
    }
    const Trajectory absolute = from_relative(r.trajectory, base);
    out.absolute.amplitudes(i) =
        steady_amplitude(absolute, cfg.tail_fraction, transient_check).value / Y;
  }
  finalize_peak(out.relative);
  finalize_peak(out.absolute);
  return out;
}

FrcCurve analytic_frc(const SystemParams& params, const FrcConfig& config) {
  config.validate();
  params.validate();
  FrcCurve curve;
  curve.freqs = config.grid();
  curve.amplitudes.resize(curve.freqs.size());
  for (Eigen::Index i = 0; i < curve.freqs.size(); ++i) {
    const double w = curve.freqs(i);
    double accel = config.drive_amplitude;
    double scale = 1.0;
    if (config.excitation == ForcingKind::harmonic_base) {
      accel *= w * w;
      scale = config.drive_amplitude;
    }
    curve.amplitudes(i) = steady_state_amplitude(params, accel, w) / scale;
  }
  finalize_peak(curve);
  return curve;
}

FrcCurve analytic_base_transmissibility(const SystemParams& params,
                                        const FrcConfig& config) {
  config.validate();
  params.validate();
  FrcCurve curve;
  curve.freqs = config.grid();
  curve.amplitudes.resize(curve.freqs.size());
  const double wn = params.omega_n;
  for (Eigen::Index i = 0; i < curve.freqs.size(); ++i) {
    const double w = curve.freqs(i);
    const double num = std::sqrt(wn * wn * wn * wn + std::pow(2.0 * params.xi * wn * w, 2));
    const double d1 = wn * wn - w * w;
    const double d2 = 2.0 * params.xi * wn * w;
    curve.amplitudes(i) = num / std::sqrt(d1 * d1 + d2 * d2);
  }
  finalize_peak(curve);
  return curve;
}

TimeErrorReport time_metrics(const Trajectory& pred, const Trajectory& truth,
                             double tail_fraction) {
  if (pred.size() != truth.size() ||
      std::abs(pred.dt - truth.dt) > 1e-12 * std::max(pred.dt, truth.dt))
    throw std::invalid_argument("time_metrics: trajectories are not aligned");

  TimeErrorReport r;
  const Eigen::VectorXd dq = pred.q() - truth.q();
  r.mse = dq.squaredNorm() / static_cast<double>(dq.size());

  const double amp_truth = steady_amplitude(truth, tail_fraction).value;
  const double amp_pred = steady_amplitude(pred, tail_fraction).value;
  r.mean_error_pct = 100.0 * std::abs(pred.q().mean() - truth.q().mean()) / amp_truth;
  r.amp_error_pct = 100.0 * (amp_pred - amp_truth) / amp_truth;

  const Eigen::VectorXcd zp = analytic_signal(pred.q());
  const Eigen::VectorXcd zt = analytic_signal(truth.q());
  const Window w = steady_window(zp.size(), tail_fraction);

  double ms = 0.0, mc = 0.0;
  for (Eigen::Index i = w.lo; i < w.hi; ++i) {
    const std::complex<double> d = zp(i) * std::conj(zt(i));
    const double phi = std::arg(d);
    ms += std::sin(phi);
    mc += std::cos(phi);
  }
  r.phase_error_pct = 100.0 * std::abs(std::atan2(ms, mc)) / (2.0 * M_PI);

  // Median instantaneous frequency: robust against spectral-edge ripple in
  // the analytic signal.
  auto inst_freq = [&](const Eigen::VectorXcd& z) {
    std::vector<double> f(static_cast<std::size_t>(w.hi - 1 - w.lo));
    for (Eigen::Index i = w.lo; i < w.hi - 1; ++i)
      f[static_cast<std::size_t>(i - w.lo)] = std::arg(z(i + 1) * std::conj(z(i))) / truth.dt;
    return median_of(std::move(f));
  };
  const double ft = inst_freq(zt);
  const double fp = inst_freq(zp);
  r.freq_error_pct = 100.0 * std::abs(fp - ft) / std::abs(ft);
  return r;
}

FrcErrorReport frc_metrics(const FrcCurve& pred, const FrcCurve& truth) {
  if (pred.freqs.size() != truth.freqs.size() || (pred.freqs - truth.freqs).cwiseAbs().maxCoeff() != 0.0)
    throw std::invalid_argument("frc_metrics: frequency grids differ");

  FrcErrorReport r;
  double acc = 0.0;
  for (Eigen::Index i = 0; i < pred.freqs.size(); ++i) {
    const double a = pred.amplitudes(i);
    // A missing prediction counts as a full-amplitude miss.
    acc += std::isfinite(a) ? std::abs(a - truth.amplitudes(i)) : std::abs(truth.amplitudes(i));
  }
  r.shape_error_pct = 100.0 * acc / static_cast<double>(pred.freqs.size()) / truth.peak_amplitude;
  r.peak_error_pct =
      100.0 * std::abs(pred.peak_amplitude - truth.peak_amplitude) / truth.peak_amplitude;
  r.resonance_error_pct = 100.0 * std::abs(pred.peak_freq - truth.peak_freq) / truth.peak_freq;
  r.peak_freq_estimate = pred.peak_freq;
  return r;
}

void write_frc_csv(const FrcCurve& curve, const std::string& path) {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw std::runtime_error("write_frc_csv: cannot open " + path);
  std::fputs("freq,amplitude\n", f);
  for (Eigen::Index i = 0; i < curve.freqs.size(); ++i)
    std::fprintf(f, "%.17g,%.17g\n", curve.freqs(i), curve.amplitudes(i));
  std::fprintf(f, "# peak_freq=%.17g,peak_amp=%.17g\n", curve.peak_freq, curve.peak_amplitude);
  std::fclose(f);
}

void write_frc_svg(const FrcCurve& curve, const FrcCurve* oracle, const std::string& path,
                   const std::string& title) {
  SvgPlot plot(title, "driving frequency", "steady-state amplitude");
  if (oracle) plot.add_series(oracle->freqs, oracle->amplitudes, "#888888", "oracle");
  plot.add_series(curve.freqs, curve.amplitudes, "#c0392b", "model");
  plot.add_marker(curve.peak_freq, curve.peak_amplitude, "#2255cc", "peak");
  plot.write(path);
}

namespace {

std::string kv_line(const char* key, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return std::string(key) + " = " + buf + "\n";
}

}  // namespace

std::string to_kv_text(const TimeErrorReport& r) {
  return kv_line("mse", r.mse) + kv_line("mean_error_pct", r.mean_error_pct) +
         kv_line("amp_error_pct", r.amp_error_pct) +
         kv_line("phase_error_pct", r.phase_error_pct) +
         kv_line("freq_error_pct", r.freq_error_pct);
}

std::string to_kv_text(const FrcErrorReport& r) {
  return kv_line("shape_error_pct", r.shape_error_pct) +
         kv_line("peak_error_pct", r.peak_error_pct) +
         kv_line("resonance_error_pct", r.resonance_error_pct) +
         kv_line("peak_freq_estimate", r.peak_freq_estimate);
}

std::string to_csv_row(const TimeErrorReport& r) {
  std::ostringstream os;
  os.precision(17);
  os << "mse,mean_error_pct,amp_error_pct,phase_error_pct,freq_error_pct\n"
     << r.mse << ',' << r.mean_error_pct << ',' << r.amp_error_pct << ','
     << r.phase_error_pct << ',' << r.freq_error_pct << '\n';
  return os.str();
}

std::string to_csv_row(const FrcErrorReport& r) {
  std::ostringstream os;
  os.precision(17);
  os << "shape_error_pct,peak_error_pct,resonance_error_pct,peak_freq_estimate\n"
     << r.shape_error_pct << ',' << r.peak_error_pct << ',' << r.resonance_error_pct << ','
     << r.peak_freq_estimate << '\n';
  return os.str();
}

}  // namespace frcnet
