#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "qrh/model.hpp"
#include "qrh/rng.hpp"

namespace qrh {

/// Discretization scheme tag. Only the first-order Volterra-Euler scheme with
/// exact per-cell kernel masses is implemented; the tag is where a hybrid
/// scheme would plug in.
/// volterra_euler: left-point Euler with exact kernel masses b_m in every
/// cell. hybrid: the same, except that the stochastic integral over the
/// newest cell, int K(t_k - s) dW_s, is drawn exactly, jointly Gaussian with
/// the Brownian increment. The cell then carries its full variance
/// lambda^2 dt^(2 alpha - 1) / ((2 alpha - 1) Gamma(alpha)^2) rather than
/// b_1^2 / dt, which matters as alpha approaches 1/2. It uses a second normal
/// per step and coincides with volterra_euler at alpha = 1.
enum class Scheme { volterra_euler, hybrid };

struct SimConfig {
  int steps_per_year = 500;
  std::size_t n_paths = 100000;
  double horizon = 30.0 / 365.0;  // years
  std::uint64_t seed = 1;
  Scheme scheme = Scheme::volterra_euler;
  double spot = 1.0;
  /// Explicit step count; 0 derives it from steps_per_year.
  std::size_t fixed_steps = 0;

  // Test hooks. eta_override replaces eta in the noise term of Z;
  // frozen_variance replaces V everywhere by a constant.
  std::optional<double> eta_override;
  std::optional<double> frozen_variance;

  /// Number of uniform steps covering the horizon: fixed_steps, or
  /// max(1, round(horizon * steps_per_year)).
  std::size_t steps() const;
  double dt() const { return horizon / static_cast<double>(steps()); }
  /// Throws ConfigError on invalid values.
  void validate() const;
};

/// Smallest step count n in [round(horizon * steps_per_year), 4x that] for
/// which every time in `times` is a multiple of horizon / n (to relative
/// accuracy 1e-9); 0 if there is none.
std::size_t aligned_steps(std::span<const double> times, double horizon, int steps_per_year);

/// Kernel masses b_m = int_{(m-1)dt}^{m dt} K(s) ds, m = 1..n.
std::vector<double> volterra_weights(const KernelSpec& kernel, double dt, std::size_t n);

/// Simulated paths of (log S, Z, V) on a uniform grid. Immutable; Brownian
/// increments are not stored but regenerated on demand from the
/// counter-based streams.
class PathEnsemble {
 public:
  std::size_t n_paths() const { return n_paths_; }
  std::size_t n_steps() const { return grid_.size() - 1; }
  std::span<const double> grid() const { return grid_; }
  double dt() const { return dt_; }
  double start_time() const { return grid_.front(); }
  double horizon() const { return grid_.back(); }

  std::span<const double> log_spot(std::size_t path) const { return row(log_spot_, path); }
  std::span<const double> z(std::size_t path) const { return row(z_, path); }
  std::span<const double> v(std::size_t path) const { return row(v_, path); }

  /// Brownian increments dW_k (k = 0..n_steps-1) driving `path`.
  std::vector<double> increments(std::size_t path) const;
  StreamId stream(std::size_t path) const;

  const ModelParams& params() const { return params_; }
  const ForwardCurve& theta0() const { return *theta0_; }
  const SimConfig& config() const { return config_; }

  /// Index k with grid[k] == t (relative tolerance 1e-9); nullopt when off-grid.
  std::optional<std::size_t> step_of(double t) const;

 private:
  friend PathEnsemble simulate(const ModelParams&, const ForwardCurve&, const SimConfig&);
  friend class Restarter;
  PathEnsemble() = default;

  std::span<const double> row(const std::vector<double>& data, std::size_t path) const {
    const std::size_t width = grid_.size();
    return std::span<const double>(data).subspan(path * width, width);
  }

  std::size_t n_paths_ = 0;
  std::vector<double> grid_;
  double dt_ = 0.0;
  std::vector<double> log_spot_;
  std::vector<double> z_;
  std::vector<double> v_;
  ModelParams params_;
  std::shared_ptr<const ForwardCurve> theta0_;
  SimConfig config_;
  StreamId stream_base_;
};

/// Simulates n_paths paths of
///   Z_k = G_k + sum_{j<k} b_{k-j} ( -Z_j + eta sqrt(V_j) dW_j / dt ),
///   V_k = a (Z_k - b)^2 + c,
///   log S_{k+1} = log S_k - V_k dt / 2 + sqrt(V_k) dW_k,
/// with G_k = (K * theta0)(t_k) computed exactly (z0 for the parametric
/// curve) and a single Brownian motion driving both S and Z. Path p draws from
/// stream (seed, outer tag, p), so the result is bit-identical for any worker
/// count.
///
/// Throws ConfigError if the horizon exceeds theta0's domain.
PathEnsemble simulate(const ModelParams& params, const ForwardCurve& theta0, const SimConfig& config);

/// Restarts paths of an outer ensemble at one of its grid steps t0 and
/// simulates inner paths over [t0, t0 + inner.horizon] from (S_{t0}, Z_{t0})
/// and the conditional curve theta_{t0} (via its convolution with K, see
/// RestartForcing). Inner path q of outer path p uses stream
/// (inner.seed, restart tag of the step, q, p).
class Restarter {
 public:
  Restarter(const PathEnsemble& outer, std::size_t restart_step, const ModelParams& params,
            const SimConfig& inner);

  /// Full inner ensemble for one outer path.
  PathEnsemble run(std::size_t outer_path) const;

  /// Trapezoidal int V ds over the inner horizon, one value per inner path.
  void integrated_variance(std::size_t outer_path, std::span<double> out) const;

  std::size_t inner_paths() const { return inner_.n_paths; }
  std::size_t inner_steps() const { return weights_.size(); }
  double inner_dt() const { return inner_dt_; }
  double restart_time() const { return outer_.grid()[restart_step_]; }

 private:
  struct Scratch;
  void run_inner(std::size_t outer_path, std::size_t inner_path, std::span<const double> forcing, Scratch& scratch,
                 std::span<double> z, std::span<double> v, std::span<double> log_s) const;

  const PathEnsemble& outer_;
  std::size_t restart_step_;
  ModelParams params_;
  SimConfig inner_;
  double inner_dt_;
  std::vector<double> weights_;
  RestartForcing forcing_;
  double cell_sd_ = 0.0;
};

/// Convenience wrapper: restart the terminal state of `outer` for one path.
PathEnsemble restart(const PathEnsemble& outer, std::size_t path_index, const ModelParams& params,
                     const SimConfig& inner);

/// Variogram estimate of the Hurst exponent of sqrt(V): regression of
/// log E[(sqrt(V_{t+d}) - sqrt(V_t))^2] on log d over lags of 1, 2, 4, 8, 16
/// steps, averaged over paths; returns half the slope.
/// Throws DomainError with fewer than 100 steps or a constant V.
double estimate_roughness(const PathEnsemble& ensemble);

/// Writes `path,t,S,Z,V` rows for the first `max_paths` paths, preceded by
/// `header_comment` (emitted as a `# ` line when non-empty).
void write_paths_csv(std::ostream& out, const PathEnsemble& ensemble, std::size_t max_paths,
                     const std::string& header_comment);

}  // namespace qrh
