#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "qrh/specialfn.hpp"

namespace qrh {

class KeyValueConfig;

/// Parameter vector nu = (alpha, lambda, a, b, c, z0) of the quadratic rough
/// Heston model, V = a (Z - b)^2 + c, plus eta which is pinned to 1: the family
/// (Z, eta, a, b, z0) has an exact scaling redundancy, so eta = 1 is the
/// identifiability normalization.
struct ModelParams {
  double alpha = 0.51;
  double lambda = 1.2;
  double a = 0.384;
  double b = 0.095;
  double c = 0.0025;
  double z0 = 0.1;
  double eta = 1.0;

  /// The fitted parameter set reported for the SPX/VIX joint calibration of
  /// 19 May 2017.
  static ModelParams reference() { return ModelParams{}; }

  /// Throws InvalidParams naming the first violated invariant:
  /// 1/2 < alpha <= 1, lambda > 0, a >= 0, b >= 0, c > 0, eta = 1.
  void validate() const;

  /// Hurst exponent H = alpha - 1/2 of the variance process.
  double hurst() const { return alpha - 0.5; }

  KernelSpec kernel() const { return KernelSpec{alpha, lambda}; }

  friend bool operator==(const ModelParams&, const ModelParams&) = default;
};

/// Reads alpha, lambda, a, b, c, z0 (all required) from a flat key-value
/// config. An `eta` key is accepted only with value 1. Throws ConfigError on
/// missing or malformed keys and InvalidParams on invariant violations.
ModelParams params_from_config(const KeyValueConfig& config);

/// Serializes as `key = value` lines (alpha, lambda, a, b, c, z0).
std::string params_to_config(const ModelParams& params);

/// V = a (z - b)^2 + c.
double instantaneous_variance(double z, const ModelParams& params);

/// theta0(t) = z0 t^(-alpha) / (lambda Gamma(1 - alpha)); the parametric curve
/// under which Z starts from z0. Throws DomainError for t <= 0 and for
/// alpha = 1 (pole of Gamma(1 - alpha)).
double theta0_parametric(const ModelParams& params, double t);

/// The theta function driving Z, either the closed-form parametric curve or
/// values on a grid.
///
/// Grid curves interpolate linearly between grid points, are flat to the left
/// of the first point and decay as a power law (t / t_last)^(-exponent) beyond
/// the last one. Evaluation beyond the grid with extrapolation disabled throws.
class ForwardCurve {
 public:
  static ForwardCurve parametric(const ModelParams& params);
  static ForwardCurve constant(double value);

  ForwardCurve(std::vector<double> grid, std::vector<double> values, double tail_exponent,
               bool extrapolate = true);

  double operator()(double t) const;

  bool is_parametric() const { return parametric_; }
  bool extrapolates() const { return extrapolate_; }
  /// Largest t at which the curve is defined (infinite when it extrapolates).
  double domain_end() const;
  /// The value of Z at time 0 implied by the curve: z0 for the parametric
  /// family, 0 otherwise.
  double initial_z() const { return parametric_ ? z0_ : 0.0; }

  /// int_0^t K(t - s) theta(shift + s) ds, exact for the parametric family
  /// (z0 I_{t/(t+shift)}(alpha, 1-alpha), an incomplete Beta value) and exact
  /// for the piecewise-linear interpolant otherwise.
  double kernel_convolution(const KernelSpec& kernel, double t, double shift = 0.0) const;

  std::span<const double> grid() const { return grid_; }
  std::span<const double> values() const { return values_; }
  double tail_exponent() const { return tail_exponent_; }

 private:
  ForwardCurve() = default;

  bool parametric_ = false;
  double z0_ = 0.0;
  double alpha_ = 0.0;
  double lambda_ = 0.0;

  std::vector<double> grid_;
  std::vector<double> values_;
  double tail_exponent_ = 0.0;
  bool extrapolate_ = true;
};

/// Conditional curve theta_{t0} given the history of Z on a uniform grid
/// [0, t0] (z_history[i] = Z at i * dt, t0 = (size - 1) * dt), evaluated at
/// offsets u in out_grid (all > 0).
///
/// The restarted process obeys
///   Z_{t0+t} = Z_{t0} + int_0^t K(t-s) (theta_{t0}(s) - Z_{t0+s}) ds + int_0^t K(t-s) eta sqrt(V) dW,
/// with
///   theta_{t0}(u) = theta0(t0 + u) - Z_{t0} (t0 + u)^(-alpha) / (lambda Gamma(1-alpha))
///                   + alpha / (lambda Gamma(1-alpha)) int_0^{t0} (t0 - v + u)^(-1-alpha) (Z_v - Z_{t0}) dv.
/// The history integral is computed cell by cell with the kernel integrated
/// exactly against the piecewise-linear history. The returned curve carries
/// tail exponent alpha. At alpha = 1 the history terms vanish.
///
/// Throws DomainError for an empty history, non-positive dt or any u <= 0.
ForwardCurve forward_theta(std::span<const double> z_history, double dt, const ForwardCurve& theta0,
                           const ModelParams& params, std::span<const double> out_grid);

/// The convolved conditional curve (K * theta_{t0})(t) at fixed offsets, as a
/// linear map of the Z history. Built once per (restart step, offsets) and
/// applied to every path; this is what the simulator consumes when restarting.
class RestartForcing {
 public:
  RestartForcing(const ModelParams& params, const ForwardCurve& theta0, double dt,
                 std::size_t restart_step, std::span<const double> offsets);

  /// out[i] = (K * theta_{t0})(offsets[i]) for the given history
  /// (restart_step + 1 values).
  void apply(std::span<const double> z_history, std::span<double> out) const;

  std::size_t restart_step() const { return restart_step_; }
  std::size_t size() const { return base_.size(); }

 private:
  std::size_t restart_step_;
  std::vector<double> base_;     // path-independent part
  std::vector<double> weights_;  // size() x (restart_step + 1), row major
};

}  // namespace qrh
