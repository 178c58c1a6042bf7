#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "frcnet/forecast.hpp"
#include "frcnet/network.hpp"
#include "frcnet/rng.hpp"

using namespace frcnet;

namespace {

const SystemParams kLs1{0.2, 1.0, 1.0};

OperatorNetwork zero_v3() { return zero_network(NetworkSpec::defaults(Variant::V3)); }

// Closed-form trapezoid update for the linear system xdot = A x + b(t).
State linear_trapezoid_step(const Eigen::Matrix2d& A, const State& x, double t,
                            double dt, const ForcingSpec& forcing) {
  const Eigen::Matrix2d I = Eigen::Matrix2d::Identity();
  const State b_k(0.0, forcing.accel(t));
  const State b_next(0.0, forcing.accel(t + dt));
  const Eigen::Matrix2d lhs = I - 0.5 * dt * A;
  const State rhs_vec = (I + 0.5 * dt * A) * x + 0.5 * dt * (b_k + b_next);
  return lhs.inverse() * rhs_vec;
}

// Field that turns non-finite past a radius, for failure-path tests.
class BlowupField final : public GradientField {
 public:
  State value(const State& x, double, double) const override {
    if (x.norm() > 0.5) return State(std::nan(""), std::nan(""));
    return State(x(1), 4.0 * x(0));  // unstable linear field
  }
  Eigen::Matrix2d state_jacobian(const State&, double, double) const override {
    Eigen::Matrix2d j;
    j << 0, 1, 4.0, 0;
    return j;
  }
};

}  // namespace

TEST_CASE("augmented rhs injects forcing into the velocity channel") {
  const OperatorNetwork net = zero_v3();
  const State g = augmented_rhs(net, State(0.3, 0.4), 0.0, ForcingSpec::harmonic(1.0, 1.0));
  CHECK(g(0) == 0.0);
  CHECK(g(1) == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("the exact-field stub reproduces the oscillator rhs") {
  const FreeOscillatorField stub(kLs1);
  Rng rng(3);
  for (int i = 0; i < 50; ++i) {
    const State x(rng.uniform(-2, 2), rng.uniform(-2, 2));
    const double t = rng.uniform(0, 10);
    const ForcingSpec f = ForcingSpec::harmonic(1.0, 2.2);
    const State a = augmented_rhs(stub, x, t, f);
    const State b = rhs(x, t, f, kLs1);
    CHECK(a(0) == b(0));
    CHECK(a(1) == doctest::Approx(b(1)).epsilon(1e-15));
  }
}

TEST_CASE("predictor leaves a fixed point alone") {
  const OperatorNetwork net = zero_v3();
  const State out =
      rk4_predict(net, State(0.7, -0.1), 0.0, 0.01, ForcingSpec::free_response());
  CHECK(out(0) == 0.7);
  CHECK(out(1) == -0.1);
}

TEST_CASE("predictor matches the reference integrator step for step") {
  const FreeOscillatorField stub(kLs1);
  const ForcingSpec f = ForcingSpec::harmonic(1.0, 3.77);
  const Trajectory ref = reference_integrate(kLs1, f, State(0.2, 0.0), 0.01, 50);
  State x(0.2, 0.0);
  for (int k = 0; k < 50; ++k) {
    x = rk4_predict(stub, x, k * 0.01, 0.01, f);
    CHECK(std::abs(x(0) - ref.data(k + 1, 1)) <= 1e-14);
    CHECK(std::abs(x(1) - ref.data(k + 1, 2)) <= 1e-14);
  }
}

TEST_CASE("predictor single-step error scales as dt^5") {
  const FreeOscillatorField stub(kLs1);
  const ForcingSpec f = ForcingSpec::harmonic(1.0, 1.1);
  const State ic(0.4, 0.2);
  auto one_step_err = [&](double dt) {
    const State pred = rk4_predict(stub, ic, 0.0, dt, f);
    const State exact = analytic_response(kLs1, f, ic, dt);
    return (pred - exact).norm();
  };
  const double r1 = one_step_err(0.2) / one_step_err(0.1);
  const double r2 = one_step_err(0.1) / one_step_err(0.05);
  CHECK(r1 > 20.0);
  CHECK(r1 < 45.0);
  CHECK(r2 > 20.0);
  CHECK(r2 < 45.0);
}

TEST_CASE("newton step accepts an exact fixed point immediately") {
  const OperatorNetwork net = zero_v3();
  const NewtonStep step = trapezoid_newton_step(net, State(0.4, -0.2), 0.0, 0.01,
                                                ForcingSpec::free_response());
  CHECK(step.iters == 0);
  CHECK(step.converged);
  CHECK(step.x(0) == 0.4);
  CHECK(step.residual == 0.0);
}

TEST_CASE("newton step solves the linear trapezoid stencil exactly") {
  const FreeOscillatorField stub(kLs1);
  Eigen::Matrix2d A;
  A << 0, 1, -1, -0.4;
  const ForcingSpec f = ForcingSpec::harmonic(1.0, 2.3);
  State x(0.2, 0.0);
  for (int k = 0; k < 200; ++k) {
    const double t = 0.01 * k;
    const State oracle = linear_trapezoid_step(A, x, t, 0.01, f);
    const NewtonStep step = trapezoid_newton_step(stub, x, t, 0.01, f, 1e-12, 8);
    CHECK(step.converged);
    CHECK(std::abs(step.x(0) - oracle(0)) <= 1e-12);
    CHECK(std::abs(step.x(1) - oracle(1)) <= 1e-12);
    x = step.x;
  }
}

TEST_CASE("forecast with the exact field converges at second order") {
  const FreeOscillatorField stub(kLs1);
  const ForcingSpec f = ForcingSpec::harmonic(1.0, 1.7);
  const State ic(0.3, 0.0);
  auto global_err = [&](double dt) {
    ForecastConfig cfg;
    cfg.dt = dt;
    cfg.n_steps = static_cast<int>(std::llround(20.0 / dt));
    cfg.forcing = f;
    const ForecastResult r = forecast(stub, ic, cfg);
    REQUIRE(r.converged);
    double e = 0.0;
    for (Eigen::Index k = 0; k < r.trajectory.size(); ++k)
      e = std::max(e, std::abs(analytic_response(kLs1, f, ic, r.trajectory.data(k, 0))(0) -
                               r.trajectory.data(k, 1)));
    return e;
  };
  // One decade of halving: 0.08 -> 0.01.
  const double e8 = global_err(0.08);
  const double e4 = global_err(0.04);
  const double e2 = global_err(0.02);
  const double e1 = global_err(0.01);
  for (double ratio : {e8 / e4, e4 / e2, e2 / e1}) {
    CHECK(ratio > 3.2);
    CHECK(ratio < 4.8);
  }
}

TEST_CASE("forecast residuals respect the tolerance") {
  const FreeOscillatorField stub(kLs1);
  ForecastConfig cfg;
  cfg.n_steps = 500;
  cfg.forcing = ForcingSpec::harmonic(1.0, 3.77);
  const ForecastResult r = forecast(stub, State(0.2, 0.0), cfg);
  CHECK(r.converged);
  REQUIRE(r.residuals.size() == 500);
  for (double res : r.residuals) CHECK(res <= cfg.newton_tol);
  for (int iters : r.newton_iters) CHECK(iters <= cfg.max_newton_iters);
}

TEST_CASE("zero field and zero forcing stay at the origin") {
  const OperatorNetwork net = zero_v3();
  ForecastConfig cfg;
  cfg.n_steps = 100;
  const ForecastResult r = forecast(net, State(0, 0), cfg);
  CHECK(r.trajectory.q().cwiseAbs().maxCoeff() == 0.0);
  CHECK(r.converged);
}

TEST_CASE("a failing step truncates the trajectory with its index") {
  const BlowupField field;
  ForecastConfig cfg;
  cfg.n_steps = 2000;
  const ForecastResult r = forecast(field, State(0.05, 0.0), cfg);
  CHECK(r.failure_index >= 0);
  CHECK_FALSE(r.converged);
  CHECK(r.trajectory.size() == r.failure_index + 1);
  CHECK(r.trajectory.q().allFinite());
}

TEST_CASE("batched forecasts are bitwise identical to sequential calls") {
  const FreeOscillatorField stub(kLs1);
  std::vector<std::pair<State, ForecastConfig>> conditions;
  Rng rng(21);
  for (int i = 0; i < 6; ++i) {
    ForecastConfig cfg;
    cfg.n_steps = 400;
    cfg.forcing = ForcingSpec::harmonic(1.0, rng.uniform(0.3, 4.0));
    conditions.emplace_back(State(rng.uniform(-0.5, 0.5), 0.0), cfg);
  }
  const auto seq = forecast_batch(stub, conditions, 1);
  const auto par = forecast_batch(stub, conditions, 2);
  REQUIRE(seq.size() == par.size());
  for (std::size_t i = 0; i < seq.size(); ++i) {
    CHECK((seq[i].trajectory.data.array() == par[i].trajectory.data.array()).all());
    const ForecastResult solo = forecast(stub, conditions[i].first, conditions[i].second);
    CHECK((solo.trajectory.data.array() == seq[i].trajectory.data.array()).all());
  }

  // Permuting conditions permutes results identically.
  auto rev = conditions;
  std::reverse(rev.begin(), rev.end());
  const auto rev_res = forecast_batch(stub, rev, 2);
  for (std::size_t i = 0; i < seq.size(); ++i)
    CHECK((rev_res[rev_res.size() - 1 - i].trajectory.data.array() ==
           seq[i].trajectory.data.array()).all());
}

TEST_CASE("config validation") {
  ForecastConfig cfg;
  cfg.dt = 0.0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg.dt = 0.01;
  cfg.n_steps = 0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  CHECK_THROWS_AS(forecast_batch(FreeOscillatorField(kLs1), {}, 1), std::invalid_argument);
}
