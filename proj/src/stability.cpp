#include "frcnet/stability.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>

#include "frcnet/svg.hpp"

namespace frcnet {

std::pair<std::complex<double>, std::complex<double>> eigenvalues_2x2(
    const Eigen::Matrix2d& m) {
  const double tr = m(0, 0) + m(1, 1);
  const double det = m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0);
  const double disc = tr * tr - 4.0 * det;
  if (disc >= 0.0) {
    const double s = std::sqrt(disc);
    return {std::complex<double>(0.5 * (tr + s), 0.0),
            std::complex<double>(0.5 * (tr - s), 0.0)};
  }
  const double im = 0.5 * std::sqrt(-disc);
  return {std::complex<double>(0.5 * tr, im), std::complex<double>(0.5 * tr, -im)};
}

std::string to_string(StabilityClass c) {
  switch (c) {
    case StabilityClass::stable: return "stable";
    case StabilityClass::marginal: return "marginal";
    case StabilityClass::unstable: return "unstable";
  }
  return "?";
}

EquilibriumReport equilibrium_eigenvalues(const GradientField& field) {
  EquilibriumReport report;
  Eigen::Matrix2d j;
  if (field.autonomous()) {
    j = field.state_jacobian(State::Zero());
  } else {
    j = field.state_jacobian(State::Zero(), 0.0, 0.0);
    report.nonautonomous_caveat = true;
  }
  std::tie(report.lambda1, report.lambda2) = eigenvalues_2x2(j);
  const double re_max = std::max(report.lambda1.real(), report.lambda2.real());
  constexpr double eps = 1e-12;
  report.verdict = re_max > eps    ? StabilityClass::unstable
                   : re_max < -eps ? StabilityClass::stable
                                   : StabilityClass::marginal;
  return report;
}

namespace {

std::complex<double> reference_lambda(const ReferenceSystem& ref) {
  const double wd = ref.omega_n * std::sqrt(std::max(0.0, 1.0 - ref.xi * ref.xi));
  return {-ref.xi * ref.omega_n, wd};
}

}  // namespace

void write_root_locus_csv(const std::vector<EigenRecord>& records,
                          const std::string& path,
                          std::optional<ReferenceSystem> reference) {
  if (records.empty())
    throw std::invalid_argument("write_root_locus_csv: no records");
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw std::runtime_error("write_root_locus_csv: cannot open " + path);
  if (reference) {
    std::fputs("epoch,re,im,re_err_pct,im_err_pct\n", f);
    const auto target = reference_lambda(*reference);
    for (const auto& r : records)
      std::fprintf(f, "%d,%.17g,%.17g,%.17g,%.17g\n", r.epoch, r.re, r.im,
                   100.0 * std::abs(r.re - target.real()) / std::abs(target.real()),
                   100.0 * std::abs(std::abs(r.im) - target.imag()) / target.imag());
  } else {
    std::fputs("epoch,re,im\n", f);
    for (const auto& r : records)
      std::fprintf(f, "%d,%.17g,%.17g\n", r.epoch, r.re, r.im);
  }
  std::fclose(f);
}

void write_root_locus_svg(const std::vector<EigenRecord>& records,
                          const std::string& path,
                          std::optional<ReferenceSystem> reference) {
  if (records.empty())
    throw std::invalid_argument("write_root_locus_svg: no records");
  const auto n = static_cast<Eigen::Index>(records.size());
  Eigen::VectorXd re(n), im(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    re(i) = records[static_cast<std::size_t>(i)].re;
    im(i) = std::abs(records[static_cast<std::size_t>(i)].im);
  }
  SvgPlot plot("equilibrium eigenvalue path over training", "Re", "Im");
  if (reference) {
    // Constant damping-ratio ray lambda = w (-xi + i sqrt(1 - xi^2)).
    const double top = std::max(1.5 * reference->omega_n, im.maxCoeff());
    const int m = 50;
    Eigen::VectorXd rre(m), rim(m);
    const double wd = std::sqrt(std::max(0.0, 1.0 - reference->xi * reference->xi));
    for (int i = 0; i < m; ++i) {
      const double w = top * (i + 1) / m;
      rre(i) = -reference->xi * w;
      rim(i) = wd * w;
    }
    plot.add_series(rre, rim, "#333333", "constant damping ratio");
    const auto target = reference_lambda(*reference);
    plot.add_marker(target.real(), target.imag(), "#2a9d2a", "target");
  }
  plot.add_series(re, im, "#c0392b", "eigenvalue path");
  plot.add_marker(re(0), im(0), "#777777", "epoch 0");
  plot.add_marker(re(n - 1), im(n - 1), "#2255cc", "final epoch");
  plot.write(path);
}

NyquistReport nyquist_limits(double omega_n, double target_band_hi, double dt) {
  if (!(omega_n > 0.0) || !(target_band_hi > 0.0) || !(dt > 0.0))
    throw std::invalid_argument("nyquist_limits: inputs must be positive");
  NyquistReport r;
  const double f_target = target_band_hi / (2.0 * M_PI);
  r.nyquist_rate = 2.0 * f_target;
  r.dt_max = 1.0 / r.nyquist_rate;
  r.sampling_ratio = 2.0 * M_PI / (omega_n * dt);  // 2 pi f_s / w_n
  r.omega_critical = omega_n * r.sampling_ratio / 2.0;
  r.dt_exceeds_limit = dt > r.dt_max;
  return r;
}

void require_nyquist(double target_band_hi, double dt) {
  const NyquistReport r = nyquist_limits(1.0, target_band_hi, dt);
  if (r.dt_exceeds_limit) {
    char buf[160];
    std::snprintf(buf, sizeof(buf),
                  "time step %g exceeds the sampling limit %g for band top %g "
                  "(dt must satisfy dt <= pi / band_top to avoid aliasing)",
                  dt, r.dt_max, target_band_hi);
    throw std::invalid_argument(buf);
  }
}

DivergenceReport divergence_check(const GradientField& field, const State& box_lo,
                                  const State& box_hi, int grid_n, double tol) {
  if (grid_n < 2) throw std::invalid_argument("divergence_check: grid_n must be >= 2");
  DivergenceReport report;
  report.worst_trace = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < grid_n; ++i) {
    for (int j = 0; j < grid_n; ++j) {
      State x(box_lo(0) + (box_hi(0) - box_lo(0)) * i / (grid_n - 1),
              box_lo(1) + (box_hi(1) - box_lo(1)) * j / (grid_n - 1));
      const Eigen::Matrix2d jac = field.autonomous()
                                      ? field.state_jacobian(x)
                                      : field.state_jacobian(x, 0.0, 0.0);
      const double trace = jac(0, 0) + jac(1, 1);
      if (trace > report.worst_trace) {
        report.worst_trace = trace;
        report.worst_point = x;
      }
    }
  }
  report.pass = report.worst_trace <= tol;
  return report;
}

}  // namespace frcnet
