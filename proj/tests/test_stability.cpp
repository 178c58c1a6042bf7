#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "frcnet/network.hpp"
#include "frcnet/rng.hpp"
#include "frcnet/stability.hpp"

using namespace frcnet;

namespace {
const SystemParams kLs1{0.2, 1.0, 1.0};
}

TEST_CASE("closed-form eigenvalues satisfy the characteristic polynomial") {
  Rng rng(13);
  for (int trial = 0; trial < 500; ++trial) {
    Eigen::Matrix2d m;
    m << rng.uniform(-3, 3), rng.uniform(-3, 3), rng.uniform(-3, 3), rng.uniform(-3, 3);
    const auto [l1, l2] = eigenvalues_2x2(m);
    const double tr = m(0, 0) + m(1, 1);
    const double det = m.determinant();
    for (const auto& l : {l1, l2})
      CHECK(std::abs(l * l - tr * l + det) <= 1e-12);
  }
}

TEST_CASE("oscillator companion eigenvalues") {
  SUBCASE("underdamped") {
    const FreeOscillatorField stub(kLs1);
    const EquilibriumReport r = equilibrium_eigenvalues(stub);
    CHECK(r.lambda1.real() == doctest::Approx(-0.2).epsilon(1e-12));
    CHECK(r.lambda1.imag() == doctest::Approx(0.9797958971).epsilon(1e-9));
    CHECK(r.lambda2.imag() == doctest::Approx(-0.9797958971).epsilon(1e-9));
    CHECK(r.verdict == StabilityClass::stable);
    CHECK_FALSE(r.nonautonomous_caveat);
  }
  SUBCASE("critically damped gives a double real root") {
    const FreeOscillatorField stub(SystemParams{1.0, 1.0, 0.0});
    const EquilibriumReport r = equilibrium_eigenvalues(stub);
    CHECK(r.lambda1.imag() == 0.0);
    CHECK(r.lambda1.real() == doctest::Approx(-1.0).epsilon(1e-12));
    CHECK(r.lambda2.real() == doctest::Approx(-1.0).epsilon(1e-12));
  }
  SUBCASE("zero network is marginal") {
    const OperatorNetwork net = zero_network(NetworkSpec::defaults(Variant::V3));
    const EquilibriumReport r = equilibrium_eigenvalues(net);
    CHECK(r.verdict == StabilityClass::marginal);
  }
}

TEST_CASE("nyquist limits reproduce the sampling algebra") {
  SUBCASE("band top 10 at the step matching a sampling ratio of 62.83") {
    const NyquistReport r = nyquist_limits(1.0, 10.0, 0.1);
    CHECK(r.nyquist_rate == doctest::Approx(10.0 / M_PI).epsilon(1e-12));  // 3.183
    CHECK(r.nyquist_rate == doctest::Approx(3.18).epsilon(1e-3));
    CHECK(r.dt_max == doctest::Approx(0.314).epsilon(1e-3));
    CHECK(r.sampling_ratio == doctest::Approx(62.83).epsilon(1e-3));
    CHECK(r.omega_critical == doctest::Approx(31.4).epsilon(1e-3));
    CHECK_FALSE(r.dt_exceeds_limit);
  }
  SUBCASE("algebraic identities hold exactly") {
    Rng rng(4);
    for (int i = 0; i < 100; ++i) {
      const double wn = rng.uniform(0.1, 50);
      const double top = rng.uniform(0.5, 80);
      const double dt = rng.uniform(1e-4, 0.5);
      const NyquistReport r = nyquist_limits(wn, top, dt);
      CHECK(r.dt_max * r.nyquist_rate == doctest::Approx(1.0).epsilon(1e-15));
      CHECK(r.omega_critical / wn == doctest::Approx(r.sampling_ratio / 2.0).epsilon(1e-15));
    }
  }
  SUBCASE("a sampling ratio of 10 puts the critical point at r = 5") {
    const double wn = 10.0;
    const double dt = 2.0 * M_PI / (10.0 * wn);
    const NyquistReport r = nyquist_limits(wn, 7.0 * wn, dt);
    CHECK(r.sampling_ratio == doctest::Approx(10.0).epsilon(1e-12));
    CHECK(r.omega_critical / wn == doctest::Approx(5.0).epsilon(1e-12));
  }
  SUBCASE("oversized steps are flagged and guarded") {
    const NyquistReport r = nyquist_limits(1.0, 10.0, 0.4);
    CHECK(r.dt_exceeds_limit);
    CHECK_THROWS_AS(require_nyquist(10.0, 0.4), std::invalid_argument);
    CHECK_NOTHROW(require_nyquist(10.0, 0.3));
  }
}

TEST_CASE("divergence check on reference fields") {
  SUBCASE("exact field trace is -2 xi everywhere") {
    const FreeOscillatorField stub(kLs1);
    const DivergenceReport r = divergence_check(stub, State(-1, -1), State(1, 1));
    CHECK(r.pass);
    CHECK(r.worst_trace == doctest::Approx(-0.4).epsilon(1e-12));
  }
  SUBCASE("zero network passes marginally") {
    const OperatorNetwork net = zero_network(NetworkSpec::defaults(Variant::V3));
    const DivergenceReport r = divergence_check(net, State(-1, -1), State(1, 1));
    CHECK(r.pass);
    CHECK(r.worst_trace == 0.0);
  }
  SUBCASE("an expanding field fails") {
    class Expanding final : public GradientField {
     public:
      State value(const State& x, double, double) const override { return x; }
      Eigen::Matrix2d state_jacobian(const State&, double, double) const override {
        return Eigen::Matrix2d::Identity();
      }
    } field;
    CHECK_FALSE(divergence_check(field, State(-1, -1), State(1, 1)).pass);
  }
}

TEST_CASE("root locus artifacts") {
  std::vector<EigenRecord> records;
  for (int e = 0; e < 20; ++e)
    records.push_back({e, -0.2 * e / 19.0, 0.98 * e / 19.0});

  const auto dir = std::filesystem::temp_directory_path();
  const auto csv = dir / "frcnet_locus.csv";
  const auto svg = dir / "frcnet_locus.svg";

  SUBCASE("single record still writes") {
    write_root_locus_csv({records[3]}, csv.string());
    std::ifstream in(csv);
    std::string header, row, extra;
    std::getline(in, header);
    std::getline(in, row);
    CHECK(header == "epoch,re,im");
    CHECK_FALSE(std::getline(in, extra));
  }
  SUBCASE("reference errors are emitted per epoch") {
    write_root_locus_csv(records, csv.string(), ReferenceSystem{0.2, 1.0});
    std::ifstream in(csv);
    std::string header;
    std::getline(in, header);
    CHECK(header == "epoch,re,im,re_err_pct,im_err_pct");
    int rows = 0;
    std::string line;
    while (std::getline(in, line)) ++rows;
    CHECK(rows == 20);
  }
  SUBCASE("svg output") {
    write_root_locus_svg(records, svg.string(), ReferenceSystem{0.2, 1.0});
    CHECK(std::filesystem::file_size(svg) > 500);
    std::filesystem::remove(svg);
  }
  SUBCASE("empty records throw") {
    CHECK_THROWS_AS(write_root_locus_csv({}, csv.string()), std::invalid_argument);
  }
  std::filesystem::remove(csv);
}

TEST_CASE("stability verdict is consistent with the divergence trace") {
  // Any field passing the divergence check on a box containing the origin has
  // eigenvalue real-part sum (= trace) within tolerance at the origin.
  Rng rng(77);
  for (int trial = 0; trial < 10; ++trial) {
    OperatorNetwork net =
        init_network(NetworkSpec::defaults(Variant::V3), 500 + trial);
    const DivergenceReport div = divergence_check(net, State(-1, -1), State(1, 1));
    const EquilibriumReport eq = equilibrium_eigenvalues(net);
    if (div.pass)
      CHECK(eq.lambda1.real() + eq.lambda2.real() <= 1e-3 + 1e-12);
  }
}
