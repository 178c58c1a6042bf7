#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "frcnet/config.hpp"

using namespace frcnet;

TEST_CASE("presets resolve and validate") {
  for (const auto& name : preset_names()) {
    const RunConfig cfg = preset(name);
    CHECK_NOTHROW(cfg.validate());
  }
  CHECK_THROWS_AS(preset("nope"), ValidationError);

  const RunConfig ls1 = preset("ls1");
  CHECK(ls1.system.omega_n == 1.0);
  CHECK(ls1.curriculum.band_lo == 0.8);
  CHECK(ls1.curriculum.band_hi == 1.5);
  CHECK(ls1.frc.n_points == 500);
  CHECK(ls1.training.epochs == 100);

  const RunConfig bru1 = preset("ls1-bru1");
  CHECK(bru1.curriculum.band_lo == 0.1);
  CHECK(bru1.curriculum.band_hi == 0.8);

  const RunConfig a = preset("ls1a");
  CHECK(a.system.omega_n == doctest::Approx(11.30));
  CHECK(a.curriculum.dt == doctest::Approx(0.0088));
  const RunConfig bcfg = preset("ls1b");
  CHECK(bcfg.curriculum.dt == doctest::Approx(0.0125));

  const RunConfig base = preset("ls1-base");
  CHECK(base.excitation == ForcingKind::harmonic_base);
  CHECK(base.training.epochs == 1000);
}

TEST_CASE("config overlay accepts known keys and rejects unknown ones") {
  RunConfig cfg = preset("ls1");
  apply_config_line(cfg, "system.xi", "0.5");
  CHECK(cfg.system.xi == 0.5);
  apply_config_line(cfg, "training.epochs", "7");
  CHECK(cfg.training.epochs == 7);
  apply_config_line(cfg, "network.variant", "V1");
  CHECK(cfg.network.variant == Variant::V1);
  CHECK(cfg.network.branch_widths.size() == 4);  // variant defaults follow
  apply_config_line(cfg, "network.branch_widths", "8,8");
  CHECK(cfg.network.branch_widths == std::vector<int>{8, 8});
  apply_config_line(cfg, "excitation", "base");
  CHECK(cfg.excitation == ForcingKind::harmonic_base);

  CHECK_THROWS_AS(apply_config_line(cfg, "nope.key", "1"), ValidationError);
  CHECK_THROWS_AS(apply_config_line(cfg, "system.xi", "abc"), ValidationError);
  CHECK_THROWS_AS(apply_config_line(cfg, "excitation", "sideways"), ValidationError);
}

TEST_CASE("config files round trip through the canonical serialization") {
  RunConfig cfg = preset("ls1");
  cfg.seed = 77;
  cfg.curriculum.band_hi = 1.25;
  const std::string text = serialize_config(cfg);

  const auto path = std::filesystem::temp_directory_path() / "frcnet_cfg_test.txt";
  {
    std::ofstream out(path);
    out << "# comment line\n\n" << text;
  }
  const RunConfig back = load_config_file(path.string(), preset("ls1"));
  CHECK(serialize_config(back) == text);
  std::filesystem::remove(path);

  const auto missing = std::filesystem::temp_directory_path() / "frcnet_none.txt";
  CHECK_THROWS_AS(load_config_file(missing.string(), preset("ls1")), ValidationError);
}

TEST_CASE("config hash changes iff the configuration changes") {
  RunConfig a = preset("ls1");
  RunConfig b = preset("ls1");
  CHECK(config_hash(a) == config_hash(b));
  b.seed = a.seed + 1;
  CHECK(config_hash(a) != config_hash(b));
  b = a;
  b.frc.n_points = 501;
  CHECK(config_hash(a) != config_hash(b));
  CHECK(config_hash(a).size() == 16);
}

TEST_CASE("manifest round trip validates its schema") {
  RunManifest m;
  m.command = "train";
  m.config_hash = "0123456789abcdef";
  m.seed = 42;
  m.seconds.dataset = 0.5;
  m.seconds.training = 12.0;
  m.seconds.forecasting = 1.0;
  m.seconds.frc = 6.5;
  m.artifacts = {"model.net", "epochs.csv"};

  const auto path = std::filesystem::temp_directory_path() / "frcnet_manifest.json";
  write_manifest(m, path.string());
  const RunManifest back = read_manifest(path.string());
  CHECK(back.command == "train");
  CHECK(back.seed == 42);
  CHECK(back.seconds.training == doctest::Approx(12.0));
  CHECK(back.artifacts.size() == 2);

  // Percentages must sum to 100 within 0.1 for a nonzero total.
  std::ifstream in(path);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  CHECK(text.find("phase_percent") != std::string::npos);

  // A mangled manifest is rejected with the missing key named.
  {
    std::ofstream out(path);
    out << "{\"format_version\": 1, \"command\": \"x\"}";
  }
  try {
    read_manifest(path.string());
    FAIL("expected schema error");
  } catch (const ValidationError& ex) {
    CHECK(std::string(ex.what()).find("config_hash") != std::string::npos);
  }
  std::filesystem::remove(path);
}

TEST_CASE("sweep spec defaults match the study grids") {
  const SweepSpec bw = SweepSpec::defaults(SweepKind::bandwidth);
  CHECK(bw.values.size() == 10);
  CHECK(bw.values.front() == doctest::Approx(0.1));
  CHECK(bw.values.back() == doctest::Approx(2.0));
  CHECK(bw.secondary == std::vector<double>{1.0, 2.0, 5.0});

  const SweepSpec bc = SweepSpec::defaults(SweepKind::band_center);
  CHECK(bc.values.size() == 10);
  CHECK(bc.values.front() == doctest::Approx(1.1));
  CHECK(bc.values.back() == doctest::Approx(10.0));

  const SweepSpec amp = SweepSpec::defaults(SweepKind::drive_amplitude);
  CHECK(amp.secondary == std::vector<double>{1.0, 5.0, 10.0});

  const SweepSpec cnt = SweepSpec::defaults(SweepKind::trajectory_count);
  CHECK(cnt.values.size() == 15);
  CHECK(cnt.secondary == std::vector<double>{3.0, 10.0, 100.0});

  const SweepSpec fr = SweepSpec::defaults(SweepKind::frequency_ratio);
  CHECK(fr.values.front() == doctest::Approx(10.0));
  CHECK(fr.values.back() == doctest::Approx(50.0));
  CHECK(fr.sampling_ratio == 10.0);

  SweepSpec bad = bc;
  bad.values.clear();
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}
