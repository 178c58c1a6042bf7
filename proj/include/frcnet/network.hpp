#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "frcnet/field.hpp"

namespace frcnet {

/// Architecture variants of the learnable gradient operator.
/// V1: branch over (q, qdot, u) combined with a trunk over normalized time.
/// V2: single feedforward map over (q, qdot).
/// V3: amplitude branch a(x) in R^p and phase branch with p plane rows;
///     output is the latent reduction sum_l a_l * phi_l.
enum class Variant { V1, V2, V3 };

std::string to_string(Variant v);
Variant variant_from_string(const std::string& s);

struct Layer {
  Eigen::MatrixXd W;  // out x in
  Eigen::VectorXd b;
  bool activated = false;  // tanh after the affine map
};

/// Plain feedforward block. Evaluation and the exact input Jacobian run on
/// thread-local scratch, so concurrent read-only use is safe and
/// allocation-free after warmup.
struct Mlp {
  std::vector<Layer> layers;

  int input_dim() const { return layers.empty() ? 0 : static_cast<int>(layers.front().W.cols()); }
  int output_dim() const { return layers.empty() ? 0 : static_cast<int>(layers.back().W.rows()); }
  int max_width() const;

  void eval(const Eigen::Ref<const Eigen::VectorXd>& x, Eigen::VectorXd& out) const;

  /// Forward value plus J = d(out)/d(vars), where seed = d(x)/d(vars).
  void eval_jac(const Eigen::Ref<const Eigen::VectorXd>& x,
                const Eigen::Ref<const Eigen::MatrixXd>& seed,
                Eigen::VectorXd& out, Eigen::MatrixXd& jac) const;
};

/// Latent reduction shared by V1 and V3: pairs of plane_latent form columns
/// of a 2 x p matrix multiplied by weight_latent. Bilinear in both arguments.
Eigen::Vector2d combine_latents(const Eigen::Ref<const Eigen::VectorXd>& plane_latent,
                                const Eigen::Ref<const Eigen::VectorXd>& weight_latent);

struct NetworkSpec {
  Variant variant = Variant::V3;
  int latent_dim = 32;
  std::vector<int> branch_widths = {64, 64, 64};
  std::vector<int> trunk_widths = {64, 64};
  int branch_activation_every = 1;  // tanh after every k-th hidden layer
  int trunk_activation_every = 2;
  int phase_activation_every = 0;  // V3 phase branch; 0 follows the branch value

  static NetworkSpec defaults(Variant v);
  void validate() const;
};

/// Learnable operator: parameter containers plus forward evaluation and the
/// exact state Jacobian. Inputs are normalized per feature with constants
/// frozen from the training set (identity until the trainer sets them).
struct OperatorNetwork final : public GradientField {
  Variant variant = Variant::V3;
  int latent_dim = 32;
  Mlp branch;  // V1 branch (3 -> 2p) / V2 map (2 -> 2) / V3 amplitude (2 -> p)
  Mlp second;  // V1 trunk (1 -> p) / V3 phase (2 -> 2p); empty for V2
  Eigen::VectorXd norm_shift;  // size = feature_count()
  Eigen::VectorXd norm_scale;
  double horizon_scale = 1.0;  // trunk-time divisor (V1)

  bool autonomous() const override { return variant != Variant::V1; }
  double time_scale() const override { return horizon_scale; }
  State value(const State& x, double t_norm, double u_in) const override;
  Eigen::Matrix2d state_jacobian(const State& x, double t_norm,
                                 double u_in) const override;
  using GradientField::value;
  using GradientField::state_jacobian;

  int feature_count() const { return variant == Variant::V1 ? 3 : 2; }
  std::size_t parameter_count() const;
  void validate() const;
};

/// Deterministic scaled uniform fan-in initialization; output-layer weights
/// are shrunk by 0.01 so a fresh network's equilibrium eigenvalues sit near
/// the neutral point.
OperatorNetwork init_network(const NetworkSpec& spec, std::uint64_t seed);

/// All-zero parameters; forward is identically zero. Test constructor.
OperatorNetwork zero_network(const NetworkSpec& spec);

/// Self-describing text format, full-precision decimal weights.
/// load(save(net)) reproduces forward outputs bit-exactly.
void save_network(const OperatorNetwork& net, const std::string& path);
OperatorNetwork load_network(const std::string& path);

// --- training support -------------------------------------------------------

struct MlpGrads {
  std::vector<Eigen::MatrixXd> dW;
  std::vector<Eigen::VectorXd> db;

  static MlpGrads like(const Mlp& m);
  void set_zero();
};

struct MlpCache {
  std::vector<Eigen::VectorXd> ys;  // ys[0] = input, ys[k] = layer-k output
};

void mlp_forward_cached(const Mlp& m, const Eigen::VectorXd& x, MlpCache& cache);
void mlp_backward(const Mlp& m, const MlpCache& cache, Eigen::VectorXd dout,
                  MlpGrads& grads, Eigen::VectorXd* dinput = nullptr);

struct NetworkGrads {
  MlpGrads branch;
  MlpGrads second;

  static NetworkGrads like(const OperatorNetwork& net);
  void set_zero();
};

struct NetworkCache {
  MlpCache branch;
  MlpCache second;
  Eigen::VectorXd features;  // normalized branch input
  Eigen::VectorXd trunk_in;  // V1 trunk input
};

/// Forward pass retaining activations for backprop. Inputs are raw (the
/// network applies its own feature normalization).
Eigen::Vector2d network_forward_cached(const OperatorNetwork& net, const State& x,
                                       double t_norm, double u_in,
                                       NetworkCache& cache);

/// Accumulate parameter gradients for upstream gradient dG at the cached point.
void network_backward(const OperatorNetwork& net, const NetworkCache& cache,
                      const Eigen::Vector2d& dG, NetworkGrads& grads);

}  // namespace frcnet
