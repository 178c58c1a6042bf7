#include "frcnet/network.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "frcnet/rng.hpp"

namespace frcnet {

std::string to_string(Variant v) {
  switch (v) {
    case Variant::V1: return "V1";
    case Variant::V2: return "V2";
    case Variant::V3: return "V3";
  }
  return "?";
}

Variant variant_from_string(const std::string& s) {
  if (s == "V1") return Variant::V1;
  if (s == "V2") return Variant::V2;
  if (s == "V3") return Variant::V3;
  throw std::invalid_argument("unknown architecture variant '" + s + "'");
}

int Mlp::max_width() const {
  int w = input_dim();
  for (const auto& l : layers) w = std::max(w, static_cast<int>(l.W.rows()));
  return w;
}

namespace {

struct Scratch {
  Eigen::VectorXd a, b;    // ping-pong activations
  Eigen::MatrixXd Ja, Jb;  // ping-pong jacobians
  Eigen::VectorXd features, trunk_in;
  Eigen::VectorXd out1, out2;
  Eigen::MatrixXd J1, J2;
};

Scratch& tls() {
  static thread_local Scratch s;
  return s;
}

void ensure(Eigen::VectorXd& v, Eigen::Index n) {
  if (v.size() < n) v.resize(n);
}

void ensure(Eigen::MatrixXd& m, Eigen::Index r, Eigen::Index c) {
  if (m.rows() < r || m.cols() < c)
    m.resize(std::max(r, m.rows()), std::max(c, m.cols()));
}

}  // namespace

void Mlp::eval(const Eigen::Ref<const Eigen::VectorXd>& x, Eigen::VectorXd& out) const {
  auto& s = tls();
  const int mw = max_width();
  ensure(s.a, mw);
  ensure(s.b, mw);

  Eigen::Index n = x.size();
  s.a.head(n) = x;
  bool in_a = true;
  for (const auto& l : layers) {
    const Eigen::Index no = l.W.rows();
    auto src = in_a ? s.a.head(n) : s.b.head(n);
    auto dst = in_a ? s.b.head(no) : s.a.head(no);
    dst.noalias() = l.W * src;
    dst += l.b;
    if (l.activated) dst = dst.array().tanh();
    n = no;
    in_a = !in_a;
  }
  out.resize(n);
  out = in_a ? s.a.head(n) : s.b.head(n);
}

void Mlp::eval_jac(const Eigen::Ref<const Eigen::VectorXd>& x,
                   const Eigen::Ref<const Eigen::MatrixXd>& seed,
                   Eigen::VectorXd& out, Eigen::MatrixXd& jac) const {
  auto& s = tls();
  const int mw = max_width();
  const Eigen::Index nc = seed.cols();
  ensure(s.a, mw);
  ensure(s.b, mw);
  ensure(s.Ja, mw, nc);
  ensure(s.Jb, mw, nc);

  Eigen::Index n = x.size();
  s.a.head(n) = x;
  s.Ja.topLeftCorner(n, nc) = seed;
  bool in_a = true;
  for (const auto& l : layers) {
    const Eigen::Index no = l.W.rows();
    auto src = in_a ? s.a.head(n) : s.b.head(n);
    auto dst = in_a ? s.b.head(no) : s.a.head(no);
    auto jsrc = in_a ? s.Ja.topLeftCorner(n, nc) : s.Jb.topLeftCorner(n, nc);
    auto jdst = in_a ? s.Jb.topLeftCorner(no, nc) : s.Ja.topLeftCorner(no, nc);
    dst.noalias() = l.W * src;
    dst += l.b;
    jdst.noalias() = l.W * jsrc;
    if (l.activated) {
      dst = dst.array().tanh();
      jdst.array().colwise() *= (1.0 - dst.array().square());
    }
    n = no;
    in_a = !in_a;
  }
  out.resize(n);
  out = in_a ? s.a.head(n) : s.b.head(n);
  jac.resize(n, nc);
  jac = in_a ? s.Ja.topLeftCorner(n, nc) : s.Jb.topLeftCorner(n, nc);
}

Eigen::Vector2d combine_latents(const Eigen::Ref<const Eigen::VectorXd>& plane_latent,
                                const Eigen::Ref<const Eigen::VectorXd>& weight_latent) {
  const Eigen::Index p = weight_latent.size();
  if (plane_latent.size() != 2 * p)
    throw std::invalid_argument("combine_latents: plane latent must have twice the weight latent size");
  Eigen::Map<const Eigen::Matrix<double, 2, Eigen::Dynamic>> planes(plane_latent.data(), 2, p);
  return planes * weight_latent;
}

NetworkSpec NetworkSpec::defaults(Variant v) {
  NetworkSpec s;
  s.variant = v;
  if (v == Variant::V1) {
    s.branch_widths = {64, 64, 64, 64};
    s.branch_activation_every = 4;
    s.trunk_widths = {64, 64};
    s.trunk_activation_every = 2;
  } else if (v == Variant::V2) {
    s.branch_widths = {64, 64, 64};
    s.branch_activation_every = 1;
  } else {
    // V3: linear amplitude stack, one activation stage in the phase stack.
    // Products of a linear radial scale with bounded plane rows keep the
    // learned field near-linear along growing forced orbits.
    s.branch_widths = {64, 64, 64};
    s.branch_activation_every = 4;
    s.phase_activation_every = 3;
  }
  s.latent_dim = 32;
  return s;
}

void NetworkSpec::validate() const {
  if (latent_dim < 1) throw std::invalid_argument("NetworkSpec: latent_dim must be >= 1");
  for (int w : branch_widths)
    if (w < 1) throw std::invalid_argument("NetworkSpec: zero branch width");
  if (variant == Variant::V1) {
    for (int w : trunk_widths)
      if (w < 1) throw std::invalid_argument("NetworkSpec: zero trunk width");
  }
  if (branch_activation_every < 1 || trunk_activation_every < 1 ||
      phase_activation_every < 0)
    throw std::invalid_argument("NetworkSpec: activation interval must be >= 1");
}

void OperatorNetwork::validate() const {
  if (norm_shift.size() != feature_count() || norm_scale.size() != feature_count())
    throw std::invalid_argument("OperatorNetwork: normalization size mismatch");
  const Mlp* mlps[2] = {&branch, &second};
  for (const Mlp* m : mlps) {
    int prev = -1;
    for (const auto& l : m->layers) {
      if (l.W.rows() != l.b.size())
        throw std::invalid_argument("OperatorNetwork: bias/weight row mismatch");
      if (prev >= 0 && l.W.cols() != prev)
        throw std::invalid_argument("OperatorNetwork: layer dimensions do not chain");
      if (!l.W.allFinite() || !l.b.allFinite())
        throw std::invalid_argument("OperatorNetwork: non-finite parameters");
      prev = static_cast<int>(l.W.rows());
    }
  }
}

std::size_t OperatorNetwork::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : branch.layers) n += static_cast<std::size_t>(l.W.size() + l.b.size());
  for (const auto& l : second.layers) n += static_cast<std::size_t>(l.W.size() + l.b.size());
  return n;
}

State OperatorNetwork::value(const State& x, double t_norm, double u_in) const {
  auto& s = tls();
  const int nf = feature_count();
  ensure(s.features, nf);
  s.features(0) = (x(0) - norm_shift(0)) * norm_scale(0);
  s.features(1) = (x(1) - norm_shift(1)) * norm_scale(1);
  if (nf == 3) s.features(2) = (u_in - norm_shift(2)) * norm_scale(2);

  branch.eval(s.features.head(nf), s.out1);
  switch (variant) {
    case Variant::V2:
      return State(s.out1(0), s.out1(1));
    case Variant::V1: {
      ensure(s.trunk_in, 1);
      s.trunk_in(0) = t_norm;
      second.eval(s.trunk_in.head(1), s.out2);
      return combine_latents(s.out1, s.out2);
    }
    case Variant::V3:
      second.eval(s.features.head(2), s.out2);
      return combine_latents(s.out2, s.out1);
  }
  return State::Zero();
}

Eigen::Matrix2d OperatorNetwork::state_jacobian(const State& x, double t_norm,
                                                double u_in) const {
  auto& s = tls();
  const int nf = feature_count();
  ensure(s.features, nf);
  s.features(0) = (x(0) - norm_shift(0)) * norm_scale(0);
  s.features(1) = (x(1) - norm_shift(1)) * norm_scale(1);
  if (nf == 3) s.features(2) = (u_in - norm_shift(2)) * norm_scale(2);

  Eigen::MatrixXd seed = Eigen::MatrixXd::Zero(nf, 2);
  seed(0, 0) = norm_scale(0);
  seed(1, 1) = norm_scale(1);

  branch.eval_jac(s.features.head(nf), seed, s.out1, s.J1);
  Eigen::Matrix2d jac;
  switch (variant) {
    case Variant::V2:
      jac = s.J1;
      return jac;
    case Variant::V1: {
      ensure(s.trunk_in, 1);
      s.trunk_in(0) = t_norm;
      second.eval(s.trunk_in.head(1), s.out2);
      const Eigen::Index p = s.out2.size();
      for (int j = 0; j < 2; ++j) {
        Eigen::Map<const Eigen::Matrix<double, 2, Eigen::Dynamic>> dP(s.J1.col(j).data(), 2, p);
        jac.col(j) = dP * s.out2;
      }
      return jac;
    }
    case Variant::V3: {
      second.eval_jac(s.features.head(2), seed.topRows(2), s.out2, s.J2);
      const Eigen::Index p = s.out1.size();
      Eigen::Map<const Eigen::Matrix<double, 2, Eigen::Dynamic>> P(s.out2.data(), 2, p);
      for (int j = 0; j < 2; ++j) {
        Eigen::Map<const Eigen::Matrix<double, 2, Eigen::Dynamic>> dP(s.J2.col(j).data(), 2, p);
        jac.col(j) = dP * s.out1 + P * s.J1.col(j);
      }
      return jac;
    }
  }
  return Eigen::Matrix2d::Zero();
}

namespace {

Mlp build_mlp(int input, const std::vector<int>& widths, int output,
              int activation_every) {
  Mlp m;
  int in = input;
  int hidden_index = 0;
  for (int w : widths) {
    Layer l;
    l.W = Eigen::MatrixXd::Zero(w, in);
    l.b = Eigen::VectorXd::Zero(w);
    ++hidden_index;
    l.activated = (hidden_index % activation_every) == 0;
    m.layers.push_back(std::move(l));
    in = w;
  }
  Layer out;
  out.W = Eigen::MatrixXd::Zero(output, in);
  out.b = Eigen::VectorXd::Zero(output);
  out.activated = false;
  m.layers.push_back(std::move(out));
  return m;
}

void fill_uniform_fan_in(Mlp& m, Rng& rng, double output_shrink) {
  for (std::size_t k = 0; k < m.layers.size(); ++k) {
    auto& l = m.layers[k];
    const double s = 1.0 / std::sqrt(static_cast<double>(l.W.cols()));
    const double scale = (k + 1 == m.layers.size()) ? s * output_shrink : s;
    for (Eigen::Index r = 0; r < l.W.rows(); ++r)
      for (Eigen::Index c = 0; c < l.W.cols(); ++c)
        l.W(r, c) = scale * (2.0 * rng.uniform() - 1.0);
  }
}

OperatorNetwork build_network(const NetworkSpec& spec) {
  spec.validate();
  OperatorNetwork net;
  net.variant = spec.variant;
  net.latent_dim = spec.latent_dim;
  const int p = spec.latent_dim;
  switch (spec.variant) {
    case Variant::V1:
      net.branch = build_mlp(3, spec.branch_widths, 2 * p, spec.branch_activation_every);
      net.second = build_mlp(1, spec.trunk_widths, p, spec.trunk_activation_every);
      break;
    case Variant::V2:
      net.branch = build_mlp(2, spec.branch_widths, 2, spec.branch_activation_every);
      break;
    case Variant::V3: {
      const int phase_every = spec.phase_activation_every > 0
                                  ? spec.phase_activation_every
                                  : spec.branch_activation_every;
      net.branch = build_mlp(2, spec.branch_widths, p, spec.branch_activation_every);
      net.second = build_mlp(2, spec.branch_widths, 2 * p, phase_every);
      break;
    }
  }
  net.norm_shift = Eigen::VectorXd::Zero(net.feature_count());
  net.norm_scale = Eigen::VectorXd::Ones(net.feature_count());
  return net;
}

}  // namespace

OperatorNetwork init_network(const NetworkSpec& spec, std::uint64_t seed) {
  OperatorNetwork net = build_network(spec);
  Rng rng(seed);
  fill_uniform_fan_in(net.branch, rng, 0.01);
  if (!net.second.layers.empty()) fill_uniform_fan_in(net.second, rng, 0.01);
  return net;
}

OperatorNetwork zero_network(const NetworkSpec& spec) { return build_network(spec); }

// --- serialization -----------------------------------------------------------

namespace {

constexpr int kFormatVersion = 1;

void write_mlp(std::FILE* f, const char* name, const Mlp& m) {
  std::fprintf(f, "mlp %s %zu\n", name, m.layers.size());
  for (const auto& l : m.layers) {
    std::fprintf(f, "layer %ld %ld %d\n", static_cast<long>(l.W.rows()),
                 static_cast<long>(l.W.cols()), l.activated ? 1 : 0);
    std::fputs("W", f);
    for (Eigen::Index r = 0; r < l.W.rows(); ++r)
      for (Eigen::Index c = 0; c < l.W.cols(); ++c)
        std::fprintf(f, " %.17g", l.W(r, c));
    std::fputs("\nb", f);
    for (Eigen::Index r = 0; r < l.b.size(); ++r)
      std::fprintf(f, " %.17g", l.b(r));
    std::fputs("\n", f);
  }
}

[[noreturn]] void parse_fail(const std::string& what) {
  throw std::runtime_error("model parse error: " + what);
}

std::string next_token(std::istream& in, const std::string& field) {
  std::string tok;
  if (!(in >> tok)) parse_fail("unexpected end of file at " + field);
  return tok;
}

double next_double(std::istream& in, const std::string& field) {
  double v;
  if (!(in >> v)) parse_fail("expected number at " + field);
  return v;
}

long next_long(std::istream& in, const std::string& field) {
  long v;
  if (!(in >> v)) parse_fail("expected integer at " + field);
  return v;
}

void expect(std::istream& in, const char* literal) {
  const std::string tok = next_token(in, literal);
  if (tok != literal) parse_fail("expected '" + std::string(literal) + "', got '" + tok + "'");
}

Mlp read_mlp(std::istream& in, const char* name) {
  expect(in, "mlp");
  const std::string got = next_token(in, "mlp name");
  if (got != name) parse_fail("expected mlp '" + std::string(name) + "', got '" + got + "'");
  const long n_layers = next_long(in, "mlp layer count");
  Mlp m;
  for (long k = 0; k < n_layers; ++k) {
    const std::string where = std::string(name) + " layer " + std::to_string(k);
    expect(in, "layer");
    const long rows = next_long(in, where + " rows");
    const long cols = next_long(in, where + " cols");
    const long act = next_long(in, where + " activation flag");
    if (rows < 1 || cols < 1) parse_fail(where + " has invalid dimensions");
    Layer l;
    l.W.resize(rows, cols);
    l.b.resize(rows);
    l.activated = act != 0;
    expect(in, "W");
    for (long r = 0; r < rows; ++r)
      for (long c = 0; c < cols; ++c) l.W(r, c) = next_double(in, where + " weights");
    expect(in, "b");
    for (long r = 0; r < rows; ++r) l.b(r) = next_double(in, where + " bias");
    m.layers.push_back(std::move(l));
  }
  return m;
}

}  // namespace

void save_network(const OperatorNetwork& net, const std::string& path) {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw std::runtime_error("save_network: cannot open " + path);
  std::fprintf(f, "frcnet-model %d\n", kFormatVersion);
  std::fprintf(f, "variant %s\n", to_string(net.variant).c_str());
  std::fprintf(f, "latent_dim %d\n", net.latent_dim);
  std::fprintf(f, "horizon_scale %.17g\n", net.horizon_scale);
  std::fprintf(f, "features %d\n", net.feature_count());
  std::fputs("norm_shift", f);
  for (Eigen::Index i = 0; i < net.norm_shift.size(); ++i)
    std::fprintf(f, " %.17g", net.norm_shift(i));
  std::fputs("\nnorm_scale", f);
  for (Eigen::Index i = 0; i < net.norm_scale.size(); ++i)
    std::fprintf(f, " %.17g", net.norm_scale(i));
  std::fputs("\n", f);
  write_mlp(f, "branch", net.branch);
  if (!net.second.layers.empty()) write_mlp(f, "second", net.second);
  std::fputs("end\n", f);
  std::fclose(f);
}

OperatorNetwork load_network(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_network: cannot open " + path);

  expect(in, "frcnet-model");
  const long version = next_long(in, "format version");
  if (version != kFormatVersion)
    throw std::runtime_error("load_network: incompatible model format version " +
                             std::to_string(version) + " (expected " +
                             std::to_string(kFormatVersion) + ")");

  OperatorNetwork net;
  expect(in, "variant");
  net.variant = variant_from_string(next_token(in, "variant"));
  expect(in, "latent_dim");
  net.latent_dim = static_cast<int>(next_long(in, "latent_dim"));
  expect(in, "horizon_scale");
  net.horizon_scale = next_double(in, "horizon_scale");
  expect(in, "features");
  const long nf = next_long(in, "features");
  if (nf != net.feature_count())
    parse_fail("feature count " + std::to_string(nf) + " inconsistent with variant " +
               to_string(net.variant));
  net.norm_shift.resize(nf);
  net.norm_scale.resize(nf);
  expect(in, "norm_shift");
  for (long i = 0; i < nf; ++i) net.norm_shift(i) = next_double(in, "norm_shift");
  expect(in, "norm_scale");
  for (long i = 0; i < nf; ++i) net.norm_scale(i) = next_double(in, "norm_scale");

  net.branch = read_mlp(in, "branch");
  if (net.variant != Variant::V2) net.second = read_mlp(in, "second");
  expect(in, "end");
  net.validate();
  return net;
}

// --- training support --------------------------------------------------------

MlpGrads MlpGrads::like(const Mlp& m) {
  MlpGrads g;
  for (const auto& l : m.layers) {
    g.dW.emplace_back(Eigen::MatrixXd::Zero(l.W.rows(), l.W.cols()));
    g.db.emplace_back(Eigen::VectorXd::Zero(l.b.size()));
  }
  return g;
}

void MlpGrads::set_zero() {
  for (auto& w : dW) w.setZero();
  for (auto& b : db) b.setZero();
}

void mlp_forward_cached(const Mlp& m, const Eigen::VectorXd& x, MlpCache& cache) {
  cache.ys.resize(m.layers.size() + 1);
  cache.ys[0] = x;
  for (std::size_t k = 0; k < m.layers.size(); ++k) {
    const auto& l = m.layers[k];
    auto& y = cache.ys[k + 1];
    y.noalias() = l.W * cache.ys[k];
    y += l.b;
    if (l.activated) y = y.array().tanh();
  }
}

void mlp_backward(const Mlp& m, const MlpCache& cache, Eigen::VectorXd dout,
                  MlpGrads& grads, Eigen::VectorXd* dinput) {
  for (std::size_t kk = m.layers.size(); kk > 0; --kk) {
    const std::size_t k = kk - 1;
    const auto& l = m.layers[k];
    if (l.activated)
      dout.array() *= (1.0 - cache.ys[k + 1].array().square());
    grads.dW[k].noalias() += dout * cache.ys[k].transpose();
    grads.db[k] += dout;
    if (k > 0 || dinput) dout = l.W.transpose() * dout;
  }
  if (dinput) *dinput = std::move(dout);
}

NetworkGrads NetworkGrads::like(const OperatorNetwork& net) {
  NetworkGrads g;
  g.branch = MlpGrads::like(net.branch);
  g.second = MlpGrads::like(net.second);
  return g;
}

void NetworkGrads::set_zero() {
  branch.set_zero();
  second.set_zero();
}

Eigen::Vector2d network_forward_cached(const OperatorNetwork& net, const State& x,
                                       double t_norm, double u_in,
                                       NetworkCache& cache) {
  const int nf = net.feature_count();
  cache.features.resize(nf);
  cache.features(0) = (x(0) - net.norm_shift(0)) * net.norm_scale(0);
  cache.features(1) = (x(1) - net.norm_shift(1)) * net.norm_scale(1);
  if (nf == 3) cache.features(2) = (u_in - net.norm_shift(2)) * net.norm_scale(2);

  mlp_forward_cached(net.branch, cache.features, cache.branch);
  switch (net.variant) {
    case Variant::V2:
      return cache.branch.ys.back().head<2>();
    case Variant::V1:
      cache.trunk_in.resize(1);
      cache.trunk_in(0) = t_norm;
      mlp_forward_cached(net.second, cache.trunk_in, cache.second);
      return combine_latents(cache.branch.ys.back(), cache.second.ys.back());
    case Variant::V3:
      mlp_forward_cached(net.second, cache.features, cache.second);
      return combine_latents(cache.second.ys.back(), cache.branch.ys.back());
  }
  return Eigen::Vector2d::Zero();
}

void network_backward(const OperatorNetwork& net, const NetworkCache& cache,
                      const Eigen::Vector2d& dG, NetworkGrads& grads) {
  switch (net.variant) {
    case Variant::V2:
      mlp_backward(net.branch, cache.branch, dG, grads.branch);
      return;
    case Variant::V1: {
      const auto& planes = cache.branch.ys.back();   // 2p
      const auto& weights = cache.second.ys.back();  // p
      const Eigen::Index p = weights.size();
      Eigen::VectorXd dplanes(2 * p), dweights(p);
      Eigen::Map<const Eigen::Matrix<double, 2, Eigen::Dynamic>> P(planes.data(), 2, p);
      for (Eigen::Index l = 0; l < p; ++l) {
        dplanes(2 * l) = dG(0) * weights(l);
        dplanes(2 * l + 1) = dG(1) * weights(l);
        dweights(l) = P.col(l).dot(dG);
      }
      mlp_backward(net.branch, cache.branch, std::move(dplanes), grads.branch);
      mlp_backward(net.second, cache.second, std::move(dweights), grads.second);
      return;
    }
    case Variant::V3: {
      const auto& planes = cache.second.ys.back();   // 2p
      const auto& weights = cache.branch.ys.back();  // p
      const Eigen::Index p = weights.size();
      Eigen::VectorXd dplanes(2 * p), dweights(p);
      Eigen::Map<const Eigen::Matrix<double, 2, Eigen::Dynamic>> P(planes.data(), 2, p);
      for (Eigen::Index l = 0; l < p; ++l) {
        dplanes(2 * l) = dG(0) * weights(l);
        dplanes(2 * l + 1) = dG(1) * weights(l);
        dweights(l) = P.col(l).dot(dG);
      }
      mlp_backward(net.second, cache.second, std::move(dplanes), grads.second);
      mlp_backward(net.branch, cache.branch, std::move(dweights), grads.branch);
      return;
    }
  }
}

}  // namespace frcnet
