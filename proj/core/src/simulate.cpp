#include "qrh/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "qrh/errors.hpp"
#include "qrh/kvconfig.hpp"
#include "qrh/parallel.hpp"

namespace qrh {
namespace {

// Dot product of a[0..n) and b[0..n) with four independent accumulators; the
// summation order is fixed, so results are reproducible bit for bit.
inline double dot(const double* a, const double* b, std::size_t n) {
  double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    s0 += a[i] * b[i];
    s1 += a[i + 1] * b[i + 1];
    s2 += a[i + 2] * b[i + 2];
    s3 += a[i + 3] * b[i + 3];
  }
  for (; i < n; ++i) s0 += a[i] * b[i];
  return (s0 + s1) + (s2 + s3);
}

// One path of the Volterra-Euler recursion. `reversed` is scratch of size N
// holding the cell forcings F_j at index N-1-j so that the convolution is a
// contiguous dot product.
struct Stepper {
  std::span<const double> weights;  // b_1..b_N
  double dt;
  double eta;
  const ModelParams* params;
  std::optional<double> frozen_variance;
  double cell_sd = 0.0;  // hybrid only: sd of the newest-cell integral orthogonal to dW

  // Normals consumed per path: dW for each step, plus the orthogonal part of
  // the newest-cell integral for the hybrid scheme.
  std::size_t normals_needed() const { return cell_sd > 0.0 ? 2 * weights.size() : weights.size(); }

  void run(double anchor, std::span<const double> forcing, std::span<const double> normals, double log_s0,
           std::span<double> z, std::span<double> v, std::span<double> log_s, std::span<double> reversed) const {
    const std::size_t n = weights.size();
    const double sqrt_dt = std::sqrt(dt);
    log_s[0] = log_s0;
    for (std::size_t k = 0; k <= n; ++k) {
      double zk = anchor + forcing[k];
      if (k > 0) {
        zk += dot(weights.data(), reversed.data() + (n - k), k);
        if (cell_sd > 0.0) zk += eta * std::sqrt(v[k - 1]) * cell_sd * normals[n + k - 1];
      }
      z[k] = zk;
      const double vk = frozen_variance ? *frozen_variance : instantaneous_variance(zk, *params);
      v[k] = vk;
      if (k < n) {
        const double sv = std::sqrt(vk);
        const double xi = normals[k];
        reversed[n - 1 - k] = -zk + eta * sv * xi / sqrt_dt;
        log_s[k + 1] = log_s[k] - 0.5 * vk * dt + sv * sqrt_dt * xi;
      }
    }
  }
};

}  // namespace

std::size_t SimConfig::steps() const {
  if (fixed_steps > 0) return fixed_steps;
  const double raw = std::round(horizon * static_cast<double>(steps_per_year));
  return raw < 1.0 ? 1 : static_cast<std::size_t>(raw);
}

void SimConfig::validate() const {
  if (!(horizon > 0.0) || !std::isfinite(horizon)) throw ConfigError("simulate", "horizon must be > 0");
  if (steps_per_year < 1 && fixed_steps == 0) throw ConfigError("simulate", "steps_per_year must be >= 1");
  if (n_paths < 1) throw ConfigError("simulate", "n_paths must be >= 1");
  if (!(spot > 0.0)) throw ConfigError("simulate", "spot must be > 0");
  if (n_paths > 0xffffffffull) throw ConfigError("simulate", "n_paths exceeds the 32-bit stream index");
  if (frozen_variance && !(*frozen_variance >= 0.0))
    throw ConfigError("simulate", "frozen_variance must be >= 0");
}

std::size_t aligned_steps(std::span<const double> times, double horizon, int steps_per_year) {
  if (!(horizon > 0.0) || steps_per_year < 1) throw DomainError("simulate", "aligned_steps: invalid horizon or step rate");
  const auto base = static_cast<std::size_t>(std::max(1.0, std::round(horizon * steps_per_year)));
  for (std::size_t n = base; n <= 4 * base; ++n) {
    const bool ok = std::all_of(times.begin(), times.end(), [&](double t) {
      const double x = t / horizon * static_cast<double>(n);
      return std::fabs(x - std::round(x)) <= 1e-9 * std::max(1.0, std::fabs(x));
    });
    if (ok) return n;
  }
  return 0;
}

namespace {

// Standard deviation of int_0^dt K(dt - s) dW_s after removing its projection
// (b_1 / dt) dW on the Brownian increment over the same cell.
double newest_cell_sd(const SimConfig& config, const KernelSpec& kernel, double dt) {
  if (config.scheme != Scheme::hybrid || kernel.alpha == 1.0) return 0.0;
  const double a = kernel.alpha;
  const double g = std::tgamma(a);
  const double full = kernel.lambda * kernel.lambda * std::pow(dt, 2.0 * a - 1.0) / ((2.0 * a - 1.0) * g * g);
  const double b1 = kernel.lambda * std::pow(dt, a) / std::tgamma(a + 1.0);
  return std::sqrt(std::max(0.0, full - b1 * b1 / dt));
}

}  // namespace

std::vector<double> volterra_weights(const KernelSpec& kernel, double dt, std::size_t n) {
  std::vector<double> w(n);
  const double scale = kernel.lambda * std::pow(dt, kernel.alpha) / std::tgamma(kernel.alpha + 1.0);
  for (std::size_t m = 1; m <= n; ++m) {
    const double md = static_cast<double>(m);
    w[m - 1] = scale * (std::pow(md, kernel.alpha) - std::pow(md - 1.0, kernel.alpha));
  }
  return w;
}

// ---------------------------------------------------------------------------
// PathEnsemble

std::vector<double> PathEnsemble::increments(std::size_t path) const {
  std::vector<double> dw(n_steps());
  fill_normals(stream(path), dw);
  const double sqrt_dt = std::sqrt(dt_);
  for (double& x : dw) x *= sqrt_dt;
  return dw;
}

StreamId PathEnsemble::stream(std::size_t path) const {
  StreamId id = stream_base_;
  id.major = static_cast<std::uint32_t>(path);
  return id;
}

std::optional<std::size_t> PathEnsemble::step_of(double t) const {
  const double tol = 1e-9 * std::max(1.0, std::fabs(t));
  for (std::size_t k = 0; k < grid_.size(); ++k)
    if (std::fabs(grid_[k] - t) <= tol) return k;
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// simulate

PathEnsemble simulate(const ModelParams& params, const ForwardCurve& theta0, const SimConfig& config) {
  params.validate();
  config.validate();
  const std::size_t n = config.steps();
  const double dt = config.horizon / static_cast<double>(n);
  if (theta0.domain_end() < config.horizon * (1.0 - 1e-12))
    throw ConfigError("simulate", "horizon exceeds theta0's domain and extrapolation is disabled");

  PathEnsemble ens;
  ens.n_paths_ = config.n_paths;
  ens.dt_ = dt;
  ens.grid_.resize(n + 1);
  for (std::size_t k = 0; k <= n; ++k) ens.grid_[k] = static_cast<double>(k) * dt;
  ens.grid_[n] = config.horizon;
  ens.params_ = params;
  ens.theta0_ = std::make_shared<const ForwardCurve>(theta0);
  ens.config_ = config;
  ens.stream_base_ = StreamId{config.seed, kOuterStreamTag, 0, 0};

  const std::size_t width = n + 1;
  ens.log_spot_.assign(config.n_paths * width, 0.0);
  ens.z_.assign(config.n_paths * width, 0.0);
  ens.v_.assign(config.n_paths * width, 0.0);

  const KernelSpec kernel = params.kernel();
  std::vector<double> forcing(width);
  forcing[0] = theta0.initial_z();
  for (std::size_t k = 1; k <= n; ++k) forcing[k] = theta0.kernel_convolution(kernel, ens.grid_[k]);

  const std::vector<double> weights = volterra_weights(kernel, dt, n);
  const Stepper stepper{weights, dt, config.eta_override.value_or(params.eta), &params, config.frozen_variance,
                        newest_cell_sd(config, kernel, dt)};
  const double log_s0 = std::log(config.spot);

  parallel_for(config.n_paths, [&](std::size_t begin, std::size_t end) {
    std::vector<double> normals(stepper.normals_needed()), reversed(n);
    for (std::size_t p = begin; p < end; ++p) {
      fill_normals(ens.stream(p), normals);
      const std::size_t off = p * width;
      stepper.run(0.0, forcing, normals, log_s0, std::span(ens.z_).subspan(off, width),
                  std::span(ens.v_).subspan(off, width), std::span(ens.log_spot_).subspan(off, width), reversed);
    }
  });
  return ens;
}

// ---------------------------------------------------------------------------
// Restarts

namespace {

std::vector<double> inner_offsets(const SimConfig& inner) {
  const std::size_t n = inner.steps();
  const double dt = inner.horizon / static_cast<double>(n);
  std::vector<double> t(n + 1);
  for (std::size_t i = 0; i <= n; ++i) t[i] = static_cast<double>(i) * dt;
  t[n] = inner.horizon;
  return t;
}

}  // namespace

struct Restarter::Scratch {
  std::vector<double> normals, reversed, z, v, log_s;
  Scratch(std::size_t n, std::size_t n_normals) : normals(n_normals), reversed(n), z(n + 1), v(n + 1), log_s(n + 1) {}
};

Restarter::Restarter(const PathEnsemble& outer, std::size_t restart_step, const ModelParams& params,
                     const SimConfig& inner)
    : outer_(outer),
      restart_step_(restart_step),
      params_(params),
      inner_(inner),
      inner_dt_(inner.horizon / static_cast<double>(inner.steps())),
      weights_(volterra_weights(params.kernel(), inner_dt_, inner.steps())),
      forcing_(params, outer.theta0(), outer.dt(), restart_step, inner_offsets(inner)) {
  inner.validate();
  if (restart_step > outer.n_steps()) throw DomainError("simulate", "restart step beyond the outer grid");
  if (outer.start_time() != 0.0) throw DomainError("simulate", "restarts require an ensemble starting at t = 0");
  if (outer.theta0().domain_end() < restart_time() + inner.horizon)
    throw ConfigError("simulate", "restart horizon exceeds theta0's domain and extrapolation is disabled");
  cell_sd_ = newest_cell_sd(inner, params.kernel(), inner_dt_);
}

void Restarter::run_inner(std::size_t outer_path, std::size_t inner_path, std::span<const double> forcing,
                          Scratch& s, std::span<double> z, std::span<double> v, std::span<double> log_s) const {
  const Stepper stepper{weights_, inner_dt_, inner_.eta_override.value_or(params_.eta), &params_,
                        inner_.frozen_variance, cell_sd_};
  const StreamId id{inner_.seed, restart_stream_tag(static_cast<std::uint32_t>(restart_step_)),
                    static_cast<std::uint32_t>(inner_path), static_cast<std::uint32_t>(outer_path)};
  fill_normals(id, s.normals);
  const double anchor = outer_.z(outer_path)[restart_step_];
  const double log_s0 = outer_.log_spot(outer_path)[restart_step_];
  stepper.run(anchor, forcing, s.normals, log_s0, z, v, log_s, s.reversed);
}

PathEnsemble Restarter::run(std::size_t outer_path) const {
  if (outer_path >= outer_.n_paths()) throw DomainError("simulate", "restart: path index out of range");
  const std::size_t n = inner_steps();
  const std::size_t width = n + 1;

  PathEnsemble ens;
  ens.n_paths_ = inner_.n_paths;
  ens.dt_ = inner_dt_;
  const double t0 = restart_time();
  const std::vector<double> offsets = inner_offsets(inner_);
  ens.grid_.resize(width);
  for (std::size_t i = 0; i < width; ++i) ens.grid_[i] = t0 + offsets[i];
  ens.params_ = params_;
  ens.theta0_ = outer_.theta0_;
  ens.config_ = inner_;
  ens.stream_base_ = StreamId{inner_.seed, restart_stream_tag(static_cast<std::uint32_t>(restart_step_)), 0,
                              static_cast<std::uint32_t>(outer_path)};
  ens.log_spot_.assign(inner_.n_paths * width, 0.0);
  ens.z_.assign(inner_.n_paths * width, 0.0);
  ens.v_.assign(inner_.n_paths * width, 0.0);

  std::vector<double> forcing(width);
  forcing_.apply(outer_.z(outer_path), forcing);
  parallel_for(inner_.n_paths, [&](std::size_t begin, std::size_t end) {
    Scratch s(n, cell_sd_ > 0.0 ? 2 * n : n);
    for (std::size_t q = begin; q < end; ++q) {
      const std::size_t off = q * width;
      run_inner(outer_path, q, forcing, s, std::span(ens.z_).subspan(off, width),
                std::span(ens.v_).subspan(off, width), std::span(ens.log_spot_).subspan(off, width));
    }
  });
  return ens;
}

void Restarter::integrated_variance(std::size_t outer_path, std::span<double> out) const {
  if (outer_path >= outer_.n_paths()) throw DomainError("simulate", "restart: path index out of range");
  if (out.size() != inner_.n_paths) throw DomainError("simulate", "integrated_variance: output size mismatch");
  const std::size_t n = inner_steps();
  std::vector<double> forcing(n + 1);
  forcing_.apply(outer_.z(outer_path), forcing);
  Scratch s(n, cell_sd_ > 0.0 ? 2 * n : n);
  for (std::size_t q = 0; q < inner_.n_paths; ++q) {
    run_inner(outer_path, q, forcing, s, s.z, s.v, s.log_s);
    double sum = 0.5 * (s.v.front() + s.v.back());
    for (std::size_t i = 1; i < n; ++i) sum += s.v[i];
    out[q] = sum * inner_dt_;
  }
}

PathEnsemble restart(const PathEnsemble& outer, std::size_t path_index, const ModelParams& params,
                     const SimConfig& inner) {
  return Restarter(outer, outer.n_steps(), params, inner).run(path_index);
}

// ---------------------------------------------------------------------------
// Roughness

double estimate_roughness(const PathEnsemble& ensemble) {
  const std::size_t n = ensemble.n_steps();
  if (n < 100) throw DomainError("simulate", "estimate_roughness: needs at least 100 steps");
  constexpr std::size_t kLags[] = {1, 2, 4, 8, 16};
  std::vector<double> log_lag, log_moment;
  for (std::size_t lag : kLags) {
    std::vector<double> per_path(ensemble.n_paths());
    for (std::size_t p = 0; p < ensemble.n_paths(); ++p) {
      const auto v = ensemble.v(p);
      double acc = 0.0;
      for (std::size_t k = 0; k + lag <= n; ++k) {
        const double d = std::sqrt(v[k + lag]) - std::sqrt(v[k]);
        acc += d * d;
      }
      per_path[p] = acc / static_cast<double>(n + 1 - lag);
    }
    double moment = 0.0;
    for (double x : per_path) moment += x;
    moment /= static_cast<double>(per_path.size());
    if (!(moment > 0.0))
      throw DomainError("simulate", "estimate_roughness: degenerate input (V is constant)");
    log_lag.push_back(std::log(static_cast<double>(lag) * ensemble.dt()));
    log_moment.push_back(std::log(moment));
  }
  const double m = static_cast<double>(log_lag.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < log_lag.size(); ++i) {
    mx += log_lag[i];
    my += log_moment[i];
  }
  mx /= m;
  my /= m;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < log_lag.size(); ++i) {
    sxy += (log_lag[i] - mx) * (log_moment[i] - my);
    sxx += (log_lag[i] - mx) * (log_lag[i] - mx);
  }
  return 0.5 * sxy / sxx;
}

void write_paths_csv(std::ostream& out, const PathEnsemble& ensemble, std::size_t max_paths,
                     const std::string& header_comment) {
  if (!header_comment.empty()) out << "# " << header_comment << '\n';
  out << "path,t,S,Z,V\n";
  const std::size_t paths = std::min(max_paths, ensemble.n_paths());
  const auto grid = ensemble.grid();
  for (std::size_t p = 0; p < paths; ++p) {
    const auto ls = ensemble.log_spot(p);
    const auto z = ensemble.z(p);
    const auto v = ensemble.v(p);
    for (std::size_t k = 0; k < grid.size(); ++k)
      out << p << ',' << format_double(grid[k]) << ',' << format_double(std::exp(ls[k])) << ','
          << format_double(z[k]) << ',' << format_double(v[k]) << '\n';
  }
}

}  // namespace qrh
