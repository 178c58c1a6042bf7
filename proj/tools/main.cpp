#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "frcnet/config.hpp"
#include "frcnet/forecast.hpp"
#include "frcnet/frc.hpp"
#include "frcnet/network.hpp"
#include "frcnet/stability.hpp"
#include "frcnet/sweeps.hpp"
#include "frcnet/trainer.hpp"

namespace fs = std::filesystem;
using namespace frcnet;

namespace {

struct DivergenceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct CliOptions {
  std::string preset_name = "ls1";
  std::string config_path;
  std::string out_dir;
  std::uint64_t seed = 0;
  bool seed_set = false;
  int workers = 1;
  bool verbose = false;
};

double elapsed(const std::chrono::steady_clock::time_point& t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

class PhaseTimer {
 public:
  explicit PhaseTimer(double& slot) : slot_(slot), t0_(std::chrono::steady_clock::now()) {}
  ~PhaseTimer() { slot_ += elapsed(t0_); }

 private:
  double& slot_;
  std::chrono::steady_clock::time_point t0_;
};

RunConfig resolve_config(const CliOptions& opt) {
  RunConfig cfg = preset(opt.preset_name);
  if (!opt.config_path.empty()) cfg = load_config_file(opt.config_path, cfg);
  if (opt.seed_set) cfg.seed = opt.seed;
  cfg.validate();
  return cfg;
}

fs::path resolve_out_dir(const CliOptions& opt) {
  if (!opt.out_dir.empty()) return opt.out_dir;
  if (const char* env = std::getenv("FRCNET_OUT")) return env;
  return "out";
}

ForcingSpec excitation_forcing(const RunConfig& cfg, double omega) {
  return cfg.excitation == ForcingKind::harmonic_base
             ? ForcingSpec::base(cfg.frc.drive_amplitude, omega)
             : ForcingSpec::harmonic(cfg.frc.drive_amplitude, omega);
}

void finish_manifest(RunManifest& manifest, const RunConfig& cfg, const fs::path& dir,
                     const std::string& command) {
  manifest.command = command;
  manifest.config_hash = config_hash(cfg);
  manifest.seed = cfg.seed;
  write_manifest(manifest, (dir / "manifest.json").string());
}

void write_resolved_config(const RunConfig& cfg, const fs::path& dir,
                           RunManifest& manifest) {
  std::ofstream out(dir / "config.txt");
  out << serialize_config(cfg);
  manifest.artifacts.push_back("config.txt");
}

Curriculum resolved_curriculum(const RunConfig& cfg) {
  Curriculum cur = cfg.curriculum;
  cur.excitation = cfg.excitation;
  cur.seed = cfg.seed;
  return cur;
}

std::vector<Trajectory> load_dataset(const fs::path& dir) {
  std::vector<Trajectory> trajectories;
  for (int i = 0;; ++i) {
    char name[32];
    std::snprintf(name, sizeof(name), "traj_%02d.csv", i);
    const fs::path p = dir / name;
    if (!fs::exists(p)) break;
    trajectories.push_back(read_trajectory_csv(p.string()));
  }
  if (trajectories.empty())
    throw ValidationError("no dataset found under " + dir.string() +
                          " (run the generate command first)");
  return trajectories;
}

int cmd_generate(const CliOptions& opt) {
  const RunConfig cfg = resolve_config(opt);
  const fs::path dir = resolve_out_dir(opt);
  fs::create_directories(dir);

  // Training data must also resolve the full target band, not just its own.
  require_nyquist(std::max(cfg.frc.f_hi, cfg.curriculum.band_hi), cfg.curriculum.dt);

  RunManifest manifest;
  {
    PhaseTimer timer(manifest.seconds.dataset);
    const Curriculum cur = resolved_curriculum(cfg);
    const auto trajectories = generate_curriculum(cur, cfg.system);
    for (std::size_t i = 0; i < trajectories.size(); ++i) {
      char name[32];
      std::snprintf(name, sizeof(name), "traj_%02zu.csv", i);
      write_trajectory_csv(trajectories[i], (dir / name).string());
      manifest.artifacts.push_back(name);
    }
  }
  write_resolved_config(cfg, dir, manifest);
  finish_manifest(manifest, cfg, dir, "generate");
  std::cout << "wrote " << manifest.artifacts.size() - 1 << " trajectory files to "
            << dir.string() << "\n";
  return 0;
}

int cmd_train(const CliOptions& opt) {
  const RunConfig cfg = resolve_config(opt);
  const fs::path dir = resolve_out_dir(opt);
  fs::create_directories(dir);

  RunManifest manifest;
  std::vector<Trajectory> trajectories;
  {
    PhaseTimer timer(manifest.seconds.dataset);
    trajectories = load_dataset(dir);
  }

  TrainResult trained;
  {
    PhaseTimer timer(manifest.seconds.training);
    const Curriculum cur = resolved_curriculum(cfg);
    const auto samples =
        make_curriculum_targets(trajectories, cfg.network.variant, cfg.system, cur);
    OperatorNetwork net = init_network(cfg.network, cfg.seed);
    net.horizon_scale = cur.horizon;
    TrainingConfig tc = cfg.training;
    tc.seed = cfg.seed + 1;

    EpochCallback checkpoint = {};
    if (tc.checkpoint_every > 0) {
      checkpoint = [&](const OperatorNetwork& n, const EpochRecord& r) {
        if ((r.epoch + 1) % tc.checkpoint_every == 0) {
          char name[48];
          std::snprintf(name, sizeof(name), "model.ep%04d.net", r.epoch + 1);
          save_network(n, (dir / name).string());
        }
      };
    }
    trained = train(std::move(net), samples, tc, checkpoint);
  }

  write_epoch_csv(trained.records, (dir / "epochs.csv").string());
  manifest.artifacts.push_back("epochs.csv");
  const ReferenceSystem ref{cfg.system.xi, cfg.system.omega_n};
  write_root_locus_csv(to_eigen_records(trained.records),
                       (dir / "root_locus.csv").string(), ref);
  write_root_locus_svg(to_eigen_records(trained.records),
                       (dir / "root_locus.svg").string(), ref);
  manifest.artifacts.push_back("root_locus.csv");
  manifest.artifacts.push_back("root_locus.svg");

  if (trained.diverged) {
    finish_manifest(manifest, cfg, dir, "train");
    throw DivergenceError("training diverged; last records flushed to epochs.csv");
  }

  save_network(trained.net, (dir / "model.net").string());
  manifest.artifacts.push_back("model.net");
  write_resolved_config(cfg, dir, manifest);
  finish_manifest(manifest, cfg, dir, "train");
  std::cout << "trained " << trained.records.size() << " epochs, final loss "
            << trained.records.back().loss << ", model written to "
            << (dir / "model.net").string() << "\n";
  return 0;
}

int cmd_forecast(const CliOptions& opt) {
  const RunConfig cfg = resolve_config(opt);
  const fs::path dir = resolve_out_dir(opt);
  fs::create_directories(dir);

  RunManifest manifest;
  const OperatorNetwork net = load_network((dir / "model.net").string());

  ForecastResult result;
  {
    PhaseTimer timer(manifest.seconds.forecasting);
    ForecastConfig fc;
    fc.dt = cfg.frc.dt;
    fc.n_steps = static_cast<int>(std::llround(cfg.forecast_horizon / fc.dt));
    fc.newton_tol = cfg.newton_tol;
    fc.max_newton_iters = cfg.max_newton_iters;
    fc.forcing = excitation_forcing(cfg, cfg.forecast_omega);
    result = forecast(net, cfg.forecast_ic, fc);
  }

  write_trajectory_csv(result.trajectory, (dir / "forecast.csv").string());
  manifest.artifacts.push_back("forecast.csv");
  if (opt.verbose) {
    write_newton_sidecar_csv(result, (dir / "forecast_newton.csv").string());
    manifest.artifacts.push_back("forecast_newton.csv");
  }

  if (result.failure_index >= 0)
    std::cout << "forecast truncated at step " << result.failure_index << "\n";

  // Metrics against the exact solution of the configured system.
  if (result.failure_index < 0) {
    const ForcingSpec forcing = excitation_forcing(cfg, cfg.forecast_omega);
    Trajectory truth = result.trajectory;
    for (Eigen::Index k = 0; k < truth.size(); ++k) {
      const State x = analytic_response(cfg.system, forcing, cfg.forecast_ic,
                                        truth.data(k, 0));
      truth.data(k, 1) = x(0);
      truth.data(k, 2) = x(1);
    }
    const TimeErrorReport report = time_metrics(result.trajectory, truth);
    std::ofstream out(dir / "forecast_metrics.txt");
    out << to_kv_text(report);
    manifest.artifacts.push_back("forecast_metrics.txt");
    std::cout << to_kv_text(report);
  }

  write_resolved_config(cfg, dir, manifest);
  finish_manifest(manifest, cfg, dir, "forecast");
  return 0;
}

int cmd_frc(const CliOptions& opt, bool oracle_stub) {
  const RunConfig cfg = resolve_config(opt);
  const fs::path dir = resolve_out_dir(opt);
  fs::create_directories(dir);

  RunManifest manifest;
  FrcConfig frc_cfg = cfg.frc;
  frc_cfg.excitation = cfg.excitation;

  std::unique_ptr<GradientField> stub;
  const GradientField* field = nullptr;
  OperatorNetwork net;
  if (oracle_stub) {
    stub = std::make_unique<FreeOscillatorField>(cfg.system);
    field = stub.get();
  } else {
    net = load_network((dir / "model.net").string());
    field = &net;
  }

  FrcCurve curve, truth;
  {
    PhaseTimer timer(manifest.seconds.frc);
    truth = analytic_frc(cfg.system, frc_cfg);
    if (cfg.excitation == ForcingKind::harmonic_base) {
      const BaseFrcResult base = compute_base_frc(*field, frc_cfg, opt.workers, &cfg.system);
      curve = base.relative;
      write_frc_csv(base.absolute, (dir / "frc_absolute.csv").string());
      const FrcCurve abs_truth = analytic_base_transmissibility(cfg.system, frc_cfg);
      write_frc_svg(base.absolute, &abs_truth, (dir / "frc_absolute.svg").string(),
                    "absolute transmissibility |X/Y|");
      manifest.artifacts.push_back("frc_absolute.csv");
      manifest.artifacts.push_back("frc_absolute.svg");
    } else {
      curve = compute_frc(*field, frc_cfg, opt.workers, &cfg.system);
    }
  }

  write_frc_csv(curve, (dir / "frc.csv").string());
  manifest.artifacts.push_back("frc.csv");
  write_frc_csv(truth, (dir / "frc_oracle.csv").string());
  manifest.artifacts.push_back("frc_oracle.csv");
  write_frc_svg(curve, &truth, (dir / "frc.svg").string(), "frequency response curve");
  manifest.artifacts.push_back("frc.svg");

  const FrcErrorReport report = frc_metrics(curve, truth);
  {
    std::ofstream out(dir / "frc_report.txt");
    out << to_kv_text(report);
  }
  manifest.artifacts.push_back("frc_report.txt");

  write_resolved_config(cfg, dir, manifest);
  finish_manifest(manifest, cfg, dir, "frc");
  std::cout << to_kv_text(report);
  std::cout << "headline_accuracy = " << 100.0 - report.shape_error_pct << "\n";
  return 0;
}

int cmd_stability(const CliOptions& opt) {
  const RunConfig cfg = resolve_config(opt);
  const fs::path dir = resolve_out_dir(opt);
  fs::create_directories(dir);

  RunManifest manifest;
  const OperatorNetwork net = load_network((dir / "model.net").string());

  const EquilibriumReport eq = equilibrium_eigenvalues(net);
  const DivergenceReport div = divergence_check(net, State(-1.0, -1.0), State(1.0, 1.0));
  const NyquistReport nyq = nyquist_limits(cfg.system.omega_n, cfg.frc.f_hi, cfg.frc.dt);

  std::ostringstream report;
  report.precision(10);
  report << "verdict = " << to_string(eq.verdict) << "\n"
         << "lambda1 = " << eq.lambda1.real() << (eq.lambda1.imag() < 0 ? " - " : " + ")
         << std::abs(eq.lambda1.imag()) << "j\n"
         << "lambda2 = " << eq.lambda2.real() << (eq.lambda2.imag() < 0 ? " - " : " + ")
         << std::abs(eq.lambda2.imag()) << "j\n"
         << "nonautonomous_caveat = " << (eq.nonautonomous_caveat ? 1 : 0) << "\n"
         << "divergence_pass = " << (div.pass ? 1 : 0) << "\n"
         << "divergence_worst_trace = " << div.worst_trace << "\n"
         << "nyquist_rate = " << nyq.nyquist_rate << "\n"
         << "dt_max = " << nyq.dt_max << "\n"
         << "sampling_ratio = " << nyq.sampling_ratio << "\n"
         << "omega_critical = " << nyq.omega_critical << "\n"
         << "dt_exceeds_limit = " << (nyq.dt_exceeds_limit ? 1 : 0) << "\n";
  {
    std::ofstream out(dir / "stability.txt");
    out << report.str();
  }
  manifest.artifacts.push_back("stability.txt");
  std::cout << report.str();

  write_resolved_config(cfg, dir, manifest);
  finish_manifest(manifest, cfg, dir, "stability");
  return 0;
}

int cmd_sweep(const CliOptions& opt, const std::string& values_csv,
              const std::string& secondary_csv) {
  const RunConfig cfg = resolve_config(opt);
  const fs::path dir = resolve_out_dir(opt);
  fs::create_directories(dir);

  SweepSpec spec = SweepSpec::defaults(cfg.sweep_kind);
  spec.params = cfg.system;
  spec.network = cfg.network;
  spec.training = cfg.training;
  spec.seed = cfg.seed;
  auto parse_list = [](const std::string& csv) {
    std::vector<double> v;
    std::stringstream ss(csv);
    std::string cell;
    while (std::getline(ss, cell, ','))
      if (!cell.empty()) v.push_back(std::stod(cell));
    return v;
  };
  if (!values_csv.empty()) spec.values = parse_list(values_csv);
  if (!secondary_csv.empty()) spec.secondary = parse_list(secondary_csv);
  if (spec.values.empty()) throw ValidationError("sweep: empty sweep grid");

  RunManifest manifest;
  SweepResult result;
  {
    PhaseTimer timer(manifest.seconds.frc);
    result = run_sweep(spec, opt.workers, opt.verbose ? &std::cerr : nullptr);
  }

  write_sweep_csv(result, (dir / "sweep.csv").string());
  manifest.artifacts.push_back("sweep.csv");
  write_sweep_svg(result, (dir / "sweep.svg").string());
  manifest.artifacts.push_back("sweep.svg");
  if (result.kind == SweepKind::frequency_ratio) {
    write_sweep_profiles_csv(result, (dir / "sweep_profiles.csv").string());
    manifest.artifacts.push_back("sweep_profiles.csv");
  }

  write_resolved_config(cfg, dir, manifest);
  finish_manifest(manifest, cfg, dir, "sweep");

  std::size_t failed = 0;
  for (const auto& p : result.points) failed += p.failed ? 1 : 0;
  std::cout << "sweep finished: " << result.points.size() - failed << "/"
            << result.points.size() << " points succeeded\n";
  if (failed == result.points.size())
    throw DivergenceError("every sweep point failed");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"learned-operator frequency response toolkit"};
  app.require_subcommand(1);

  CliOptions opt;
  std::string sweep_values, sweep_secondary;
  bool oracle_stub = false;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--preset", opt.preset_name, "built-in parameter set")
        ->check(CLI::IsMember(preset_names()));
    sub->add_option("--config", opt.config_path, "config overlay file");
    sub->add_option("--seed", opt.seed, "global seed")->each([&](const std::string&) {
      opt.seed_set = true;
    });
    sub->add_option("--out", opt.out_dir, "output directory (default $FRCNET_OUT or ./out)");
    sub->add_option("--workers", opt.workers, "worker threads")->check(CLI::PositiveNumber);
    sub->add_flag("--verbose", opt.verbose, "extra diagnostics");
  };

  CLI::App* generate = app.add_subcommand("generate", "synthesize curriculum trajectories");
  add_common(generate);
  CLI::App* train_cmd = app.add_subcommand("train", "fit the operator to a dataset");
  add_common(train_cmd);
  CLI::App* forecast_cmd = app.add_subcommand("forecast", "integrate the trained operator");
  add_common(forecast_cmd);
  CLI::App* frc_cmd = app.add_subcommand("frc", "frequency response curve extraction");
  add_common(frc_cmd);
  frc_cmd->add_flag("--oracle-stub", oracle_stub,
                    "run the pipeline on the exact field instead of a model");
  CLI::App* stability_cmd = app.add_subcommand("stability", "model stability diagnostics");
  add_common(stability_cmd);
  CLI::App* sweep_cmd = app.add_subcommand("sweep", "training-sensitivity sweeps");
  add_common(sweep_cmd);
  sweep_cmd->add_option("--values", sweep_values, "swept grid override (comma list)");
  sweep_cmd->add_option("--secondary", sweep_secondary, "secondary grid override");

  CLI11_PARSE(app, argc, argv);

  try {
    if (generate->parsed()) return cmd_generate(opt);
    if (train_cmd->parsed()) return cmd_train(opt);
    if (forecast_cmd->parsed()) return cmd_forecast(opt);
    if (frc_cmd->parsed()) return cmd_frc(opt, oracle_stub);
    if (stability_cmd->parsed()) return cmd_stability(opt);
    if (sweep_cmd->parsed()) return cmd_sweep(opt, sweep_values, sweep_secondary);
  } catch (const ValidationError& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return 2;
  } catch (const DivergenceError& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return 3;
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return 1;
  }
  return 1;
}
