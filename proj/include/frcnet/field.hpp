#pragma once

#include "frcnet/oscillator.hpp"

namespace frcnet {

/// State-gradient field consumed by the forecast engine and the stability
/// diagnostics. Autonomous fields ignore (t_norm, u_in); the engine injects
/// external forcing into the second component itself. Non-autonomous fields
/// (the V1 architecture) receive normalized time and the driving acceleration
/// as inputs. Implementations must be pure and safe for concurrent calls.
class GradientField {
 public:
  virtual ~GradientField() = default;

  virtual bool autonomous() const { return true; }

  /// Divisor turning absolute time into the trunk-time input (V1 only).
  virtual double time_scale() const { return 1.0; }

  virtual State value(const State& x, double t_norm, double u_in) const = 0;
  virtual Eigen::Matrix2d state_jacobian(const State& x, double t_norm,
                                         double u_in) const = 0;

  /// Autonomous convenience forms. Throw for non-autonomous fields.
  State value(const State& x) const;
  Eigen::Matrix2d state_jacobian(const State& x) const;
};

/// Exact free-response field of the damped oscillator,
/// f(x) = (x2, -2 xi w_n x2 - w_n^2 x1). Oracle stub for engine and
/// diagnostics tests.
class FreeOscillatorField final : public GradientField {
 public:
  explicit FreeOscillatorField(SystemParams params) : params_(params) {
    params_.validate();
  }

  State value(const State& x, double, double) const override {
    return rhs(x, 0.0, ForcingSpec::free_response(), params_);
  }

  Eigen::Matrix2d state_jacobian(const State&, double, double) const override {
    Eigen::Matrix2d j;
    const double wn = params_.omega_n;
    j << 0.0, 1.0, -wn * wn, -2.0 * params_.xi * wn;
    return j;
  }

  using GradientField::state_jacobian;
  using GradientField::value;

  const SystemParams& params() const { return params_; }

 private:
  SystemParams params_;
};

}  // namespace frcnet
