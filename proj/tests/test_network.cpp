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

OperatorNetwork random_net(Variant v, std::uint64_t seed) {
  NetworkSpec spec = NetworkSpec::defaults(v);
  spec.branch_widths = v == Variant::V1 ? std::vector<int>{16, 16, 16, 16}
                                        : std::vector<int>{16, 16, 16};
  spec.trunk_widths = {16, 16};
  spec.latent_dim = 8;
  OperatorNetwork net = init_network(spec, seed);
  // Undo the output-layer shrink so jacobian entries are O(1).
  if (!net.branch.layers.empty()) net.branch.layers.back().W *= 100.0;
  if (!net.second.layers.empty()) net.second.layers.back().W *= 100.0;
  return net;
}

Eigen::Matrix2d fd_jacobian(const OperatorNetwork& net, const State& x, double t_norm,
                            double u) {
  const double h = 1e-6;
  Eigen::Matrix2d j;
  for (int c = 0; c < 2; ++c) {
    State xp = x, xm = x;
    xp(c) += h;
    xm(c) -= h;
    const State d = (net.value(xp, t_norm, u) - net.value(xm, t_norm, u)) / (2.0 * h);
    j(0, c) = d(0);
    j(1, c) = d(1);
  }
  return j;
}

}  // namespace

TEST_CASE("initialization is deterministic") {
  for (Variant v : {Variant::V1, Variant::V2, Variant::V3}) {
    const OperatorNetwork a = init_network(NetworkSpec::defaults(v), 99);
    const OperatorNetwork b = init_network(NetworkSpec::defaults(v), 99);
    REQUIRE(a.branch.layers.size() == b.branch.layers.size());
    for (std::size_t k = 0; k < a.branch.layers.size(); ++k) {
      CHECK((a.branch.layers[k].W.array() == b.branch.layers[k].W.array()).all());
      CHECK((a.branch.layers[k].b.array() == b.branch.layers[k].b.array()).all());
    }
    const State x(0.3, -0.7);
    CHECK((a.value(x, 0.1, 0.5).array() == b.value(x, 0.1, 0.5).array()).all());

    const OperatorNetwork c = init_network(NetworkSpec::defaults(v), 100);
    CHECK((a.branch.layers[0].W.array() != c.branch.layers[0].W.array()).any());
  }
}

TEST_CASE("zero network maps everything to zero") {
  for (Variant v : {Variant::V1, Variant::V2, Variant::V3}) {
    const OperatorNetwork net = zero_network(NetworkSpec::defaults(v));
    CHECK(net.value(State(0.4, -1.2), 0.3, 0.9).norm() == 0.0);
    CHECK(net.state_jacobian(State(0.4, -1.2), 0.3, 0.9).norm() == 0.0);
  }
}

TEST_CASE("fresh networks start near the neutral point") {
  for (Variant v : {Variant::V1, Variant::V2, Variant::V3}) {
    for (std::uint64_t seed : {1ull, 7ull, 123ull}) {
      const OperatorNetwork net = init_network(NetworkSpec::defaults(v), seed);
      const EquilibriumReport eq = equilibrium_eigenvalues(net);
      CHECK(std::abs(eq.lambda1) < 0.1);
      CHECK(std::abs(eq.lambda2) < 0.1);
      if (v == Variant::V1) CHECK(eq.nonautonomous_caveat);
    }
  }
}

TEST_CASE("a single linear layer has itself as the jacobian") {
  NetworkSpec spec;
  spec.variant = Variant::V2;
  spec.branch_widths = {};
  OperatorNetwork net = zero_network(spec);
  REQUIRE(net.branch.layers.size() == 1);
  net.branch.layers[0].W << 0.0, 1.0, -1.0, -0.4;
  const Eigen::Matrix2d j = net.state_jacobian(State(0.7, 0.2), 0, 0);
  CHECK((j - net.branch.layers[0].W).cwiseAbs().maxCoeff() == 0.0);
  // And with feature normalization the columns are scaled by it.
  net.norm_scale << 2.0, 0.5;
  const Eigen::Matrix2d js = net.state_jacobian(State(0.7, 0.2), 0, 0);
  CHECK(js(1, 0) == doctest::Approx(-2.0).epsilon(1e-15));
  CHECK(js(1, 1) == doctest::Approx(-0.2).epsilon(1e-15));
}

TEST_CASE("analytic jacobian agrees with central differences") {
  Rng rng(5);
  double worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const auto variant = static_cast<Variant>(trial % 3);
    OperatorNetwork net = random_net(variant, 1000 + trial);
    net.norm_shift.setRandom();
    net.norm_scale.setConstant(1.0);
    net.norm_scale(0) = 1.3;
    net.norm_scale(1) = 0.7;
    const State x(rng.uniform(-1.5, 1.5), rng.uniform(-1.5, 1.5));
    const double t_norm = rng.uniform(0.0, 1.0);
    const double u = rng.uniform(-1.0, 1.0);
    const Eigen::Matrix2d ja = net.state_jacobian(x, t_norm, u);
    const Eigen::Matrix2d jf = fd_jacobian(net, x, t_norm, u);
    for (int r = 0; r < 2; ++r)
      for (int c = 0; c < 2; ++c) {
        const double denom = std::max({std::abs(ja(r, c)), std::abs(jf(r, c)), 1e-3});
        worst = std::max(worst, std::abs(ja(r, c) - jf(r, c)) / denom);
      }
  }
  CHECK(worst <= 1e-6);
}

TEST_CASE("jacobian is continuous under tiny input perturbations") {
  OperatorNetwork net = random_net(Variant::V3, 2024);
  const State x(0.4, -0.9);
  const Eigen::Matrix2d j0 = net.state_jacobian(x, 0, 0);
  const Eigen::Matrix2d j1 = net.state_jacobian(x + State(1e-8, -1e-8), 0, 0);
  CHECK((j0 - j1).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("latent combine is bilinear") {
  Rng rng(17);
  Eigen::VectorXd planes(8), weights(4);
  for (int i = 0; i < 8; ++i) planes(i) = rng.uniform(-1, 1);
  for (int i = 0; i < 4; ++i) weights(i) = rng.uniform(-1, 1);
  const Eigen::Vector2d base = combine_latents(planes, weights);
  const Eigen::Vector2d scaled = combine_latents(planes, (3.0 * weights).eval());
  CHECK(scaled(0) == doctest::Approx(3.0 * base(0)).epsilon(1e-15));
  CHECK(scaled(1) == doctest::Approx(3.0 * base(1)).epsilon(1e-15));
  const Eigen::Vector2d scaled2 = combine_latents((0.5 * planes).eval(), weights);
  CHECK(scaled2(0) == doctest::Approx(0.5 * base(0)).epsilon(1e-15));

  CHECK_THROWS_AS(combine_latents(planes.head(6), weights), std::invalid_argument);
}

TEST_CASE("scaling the amplitude branch output scales the field exactly") {
  OperatorNetwork net = random_net(Variant::V3, 77);
  const State x(0.2, 0.6);
  const State before = net.value(x, 0, 0);
  net.branch.layers.back().W *= 2.0;
  net.branch.layers.back().b *= 2.0;
  const State after = net.value(x, 0, 0);
  CHECK(after(0) == doctest::Approx(2.0 * before(0)).epsilon(1e-14));
  CHECK(after(1) == doctest::Approx(2.0 * before(1)).epsilon(1e-14));
}

TEST_CASE("V1 requires its extras") {
  const OperatorNetwork net = init_network(NetworkSpec::defaults(Variant::V1), 3);
  CHECK_THROWS_AS(net.value(State(0, 0)), std::invalid_argument);
  CHECK_FALSE(net.autonomous());
  const OperatorNetwork v3 = init_network(NetworkSpec::defaults(Variant::V3), 3);
  CHECK_NOTHROW(v3.value(State(0, 0)));
}

TEST_CASE("cached forward equals fast forward") {
  for (Variant v : {Variant::V1, Variant::V2, Variant::V3}) {
    OperatorNetwork net = random_net(v, 31);
    NetworkCache cache;
    Rng rng(9);
    for (int i = 0; i < 20; ++i) {
      const State x(rng.uniform(-1, 1), rng.uniform(-1, 1));
      const double tn = rng.uniform(0, 1), u = rng.uniform(-1, 1);
      const Eigen::Vector2d a = net.value(x, tn, u);
      const Eigen::Vector2d b = network_forward_cached(net, x, tn, u, cache);
      CHECK((a.array() == b.array()).all());
    }
  }
}

TEST_CASE("parameter gradients match finite differences") {
  // The backprop path feeds the trainer; check dL/dW on a scalar probe loss
  // L = w . G(x) for a handful of parameters in each variant.
  Rng rng(55);
  for (Variant v : {Variant::V1, Variant::V2, Variant::V3}) {
    OperatorNetwork net = random_net(v, 400 + static_cast<int>(v));
    const State x(0.37, -0.85);
    const double tn = 0.4, u = 0.7;
    const Eigen::Vector2d w(0.8, -1.3);

    NetworkCache cache;
    NetworkGrads grads = NetworkGrads::like(net);
    network_forward_cached(net, x, tn, u, cache);
    network_backward(net, cache, w, grads);

    auto probe = [&](Mlp& mlp, MlpGrads& g, std::size_t layer) {
      auto& W = mlp.layers[layer].W;
      const Eigen::Index r = W.rows() / 2, c = W.cols() / 2;
      const double h = 1e-6;
      const double orig = W(r, c);
      W(r, c) = orig + h;
      const double lp = w.dot(net.value(x, tn, u));
      W(r, c) = orig - h;
      const double lm = w.dot(net.value(x, tn, u));
      W(r, c) = orig;
      const double fd = (lp - lm) / (2.0 * h);
      CHECK(g.dW[layer](r, c) == doctest::Approx(fd).epsilon(1e-5));
    };
    probe(net.branch, grads.branch, 0);
    probe(net.branch, grads.branch, net.branch.layers.size() - 1);
    if (!net.second.layers.empty()) {
      probe(net.second, grads.second, 0);
      probe(net.second, grads.second, net.second.layers.size() - 1);
    }
  }
}

TEST_CASE("save and load reproduce the network bit-exactly") {
  const auto dir = std::filesystem::temp_directory_path();
  for (Variant v : {Variant::V1, Variant::V2, Variant::V3}) {
    OperatorNetwork net = init_network(NetworkSpec::defaults(v), 2718);
    net.norm_shift.setConstant(0.125);
    net.norm_scale.setConstant(0.5);
    net.horizon_scale = 3.0;
    const auto path = dir / ("frcnet_model_" + to_string(v) + ".net");
    save_network(net, path.string());
    const OperatorNetwork back = load_network(path.string());
    Rng rng(1);
    for (int i = 0; i < 100; ++i) {
      const State x(rng.uniform(-2, 2), rng.uniform(-2, 2));
      const double tn = rng.uniform(0, 1), u = rng.uniform(-2, 2);
      const State a = net.value(x, tn, u);
      const State b = back.value(x, tn, u);
      CHECK(a(0) == b(0));
      CHECK(a(1) == b(1));
    }
    std::filesystem::remove(path);
  }
}

TEST_CASE("malformed model files are rejected with context") {
  const auto dir = std::filesystem::temp_directory_path();
  const auto path = dir / "frcnet_model_bad.net";
  const OperatorNetwork net = init_network(NetworkSpec::defaults(Variant::V3), 5);
  save_network(net, path.string());

  SUBCASE("truncated file") {
    std::ifstream in(path);
    std::string content((std::istreambuf_iterator<char>(in)),
                        std::istreambuf_iterator<char>());
    std::ofstream out(path);
    out << content.substr(0, content.size() / 2);
    out.close();
    CHECK_THROWS_AS(load_network(path.string()), std::runtime_error);
  }
  SUBCASE("version mismatch is named") {
    std::ofstream out(path);
    out << "frcnet-model 9\nvariant V3\n";
    out.close();
    try {
      load_network(path.string());
      FAIL("expected an error");
    } catch (const std::runtime_error& ex) {
      CHECK(std::string(ex.what()).find("version") != std::string::npos);
    }
  }
  std::filesystem::remove(path);
}

TEST_CASE("architecture defaults follow the declared layer plans") {
  const OperatorNetwork v1 = zero_network(NetworkSpec::defaults(Variant::V1));
  CHECK(v1.branch.input_dim() == 3);
  CHECK(v1.branch.output_dim() == 64);  // 2p with p = 32
  CHECK(v1.second.input_dim() == 1);
  CHECK(v1.second.output_dim() == 32);
  // 1:4 activation ratio in the branch: only hidden layer 4 is activated.
  int activated = 0;
  for (const auto& l : v1.branch.layers) activated += l.activated ? 1 : 0;
  CHECK(activated == 1);
  CHECK(v1.branch.layers[3].activated);

  const OperatorNetwork v3 = zero_network(NetworkSpec::defaults(Variant::V3));
  CHECK(v3.branch.output_dim() == 32);
  CHECK(v3.second.output_dim() == 64);
  // Amplitude stack is linear; the phase stack activates its third hidden layer.
  for (const auto& l : v3.branch.layers) CHECK_FALSE(l.activated);
  CHECK(v3.second.layers[2].activated);
  CHECK_FALSE(v3.second.layers[0].activated);
  CHECK_FALSE(v3.second.layers.back().activated);

  NetworkSpec bad;
  bad.branch_widths = {64, 0, 64};
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}
