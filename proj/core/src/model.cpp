#include "qrh/model.hpp"

#include <algorithm>
#include <limits>
#include <cmath>
#include <numbers>
#include <sstream>

#include <boost/math/special_functions/beta.hpp>

#include "qrh/errors.hpp"
#include "qrh/kvconfig.hpp"

namespace qrh {
namespace {

void check_finite(double v, const char* name) {
  if (!std::isfinite(v)) throw InvalidParams(name, std::string(name) + ": must be finite");
}

// Mass of the resolvent-of-the-first-kind tail: (K * L(shift + .))(t) with
// L(s) = s^(-alpha) / (lambda Gamma(1-alpha)), equal to I_{t/(t+shift)}(alpha, 1-alpha).
double shifted_unit_convolution(double alpha, double t, double shift) {
  if (t <= 0.0) return 0.0;
  if (shift <= 0.0) return 1.0;
  return boost::math::ibeta(alpha, 1.0 - alpha, t / (t + shift));
}

}  // namespace

void ModelParams::validate() const {
  check_finite(alpha, "alpha");
  check_finite(lambda, "lambda");
  check_finite(a, "a");
  check_finite(b, "b");
  check_finite(c, "c");
  check_finite(z0, "z0");
  if (!(alpha > 0.5 && alpha <= 1.0)) throw InvalidParams("alpha", "alpha: must satisfy 1/2 < alpha <= 1");
  if (!(lambda > 0.0)) throw InvalidParams("lambda", "lambda: must be > 0");
  if (!(a >= 0.0)) throw InvalidParams("a", "a: must be >= 0");
  if (!(b >= 0.0)) throw InvalidParams("b", "b: must be >= 0");
  if (!(c > 0.0)) throw InvalidParams("c", "c: must be > 0");
  if (eta != 1.0) throw InvalidParams("eta", "eta: fixed to 1 by normalization");
}

ModelParams params_from_config(const KeyValueConfig& config) {
  ModelParams p;
  p.alpha = config.get_double("alpha");
  p.lambda = config.get_double("lambda");
  p.a = config.get_double("a");
  p.b = config.get_double("b");
  p.c = config.get_double("c");
  p.z0 = config.get_double("z0");
  if (config.contains("eta") && config.get_double("eta") != 1.0)
    throw InvalidParams("eta", "eta: fixed to 1 by normalization; remove the key or set it to 1");
  p.validate();
  return p;
}

std::string params_to_config(const ModelParams& p) {
  std::ostringstream out;
  out << "alpha = " << format_double(p.alpha) << '\n'
      << "lambda = " << format_double(p.lambda) << '\n'
      << "a = " << format_double(p.a) << '\n'
      << "b = " << format_double(p.b) << '\n'
      << "c = " << format_double(p.c) << '\n'
      << "z0 = " << format_double(p.z0) << '\n';
  return out.str();
}

double instantaneous_variance(double z, const ModelParams& params) {
  const double d = z - params.b;
  return params.a * d * d + params.c;
}

double theta0_parametric(const ModelParams& params, double t) {
  if (!(t > 0.0)) throw DomainError("model", "theta0_parametric: requires t > 0");
  if (!(params.alpha < 1.0))
    throw DomainError("model", "theta0_parametric: unsupported at alpha = 1 (pole of Gamma(1 - alpha))");
  return params.z0 * std::pow(t, -params.alpha) / (params.lambda * std::tgamma(1.0 - params.alpha));
}

// ---------------------------------------------------------------------------
// ForwardCurve

ForwardCurve ForwardCurve::parametric(const ModelParams& params) {
  params.validate();
  if (!(params.alpha < 1.0))
    throw DomainError("model", "parametric theta0 is unsupported at alpha = 1");
  ForwardCurve curve;
  curve.parametric_ = true;
  curve.z0_ = params.z0;
  curve.alpha_ = params.alpha;
  curve.lambda_ = params.lambda;
  curve.tail_exponent_ = params.alpha;
  return curve;
}

ForwardCurve ForwardCurve::constant(double value) { return ForwardCurve({0.0}, {value}, 0.0, true); }

ForwardCurve::ForwardCurve(std::vector<double> grid, std::vector<double> values, double tail_exponent,
                           bool extrapolate)
    : grid_(std::move(grid)), values_(std::move(values)), tail_exponent_(tail_exponent), extrapolate_(extrapolate) {
  if (grid_.empty() || grid_.size() != values_.size())
    throw DomainError("model", "ForwardCurve: grid and values must have equal non-zero length");
  if (grid_.front() < 0.0) throw DomainError("model", "ForwardCurve: grid must be nonnegative");
  for (std::size_t i = 1; i < grid_.size(); ++i)
    if (!(grid_[i] > grid_[i - 1])) throw DomainError("model", "ForwardCurve: grid must be strictly increasing");
}

double ForwardCurve::domain_end() const {
  if (parametric_ || extrapolate_) return std::numeric_limits<double>::infinity();
  return grid_.back();
}

double ForwardCurve::operator()(double t) const {
  if (parametric_) {
    if (!(t > 0.0)) throw DomainError("model", "parametric theta0 requires t > 0");
    return z0_ * std::pow(t, -alpha_) / (lambda_ * std::tgamma(1.0 - alpha_));
  }
  if (t <= grid_.front()) return values_.front();
  if (t >= grid_.back()) {
    if (t == grid_.back()) return values_.back();
    if (!extrapolate_) throw ConfigError("model", "ForwardCurve evaluated beyond its grid with extrapolation disabled");
    if (tail_exponent_ == 0.0 || grid_.back() == 0.0) return values_.back();
    return values_.back() * std::pow(t / grid_.back(), -tail_exponent_);
  }
  const auto it = std::upper_bound(grid_.begin(), grid_.end(), t);
  const std::size_t j = static_cast<std::size_t>(it - grid_.begin());
  const double w = (t - grid_[j - 1]) / (grid_[j] - grid_[j - 1]);
  return values_[j - 1] + w * (values_[j] - values_[j - 1]);
}

double ForwardCurve::kernel_convolution(const KernelSpec& kernel, double t, double shift) const {
  if (t <= 0.0) return 0.0;
  if (parametric_) return z0_ * shifted_unit_convolution(alpha_, t, shift);
  if (!extrapolate_ && shift + t > grid_.back() * (1.0 + 1e-12))
    throw ConfigError("model", "horizon exceeds the theta0 grid and extrapolation is disabled");

  // Breakpoints in absolute time tau = shift + s over [shift, shift + t].
  const double lo = shift;
  const double hi = shift + t;
  std::vector<double> taus{lo};
  for (double g : grid_)
    if (g > lo && g < hi) taus.push_back(g);
  if (hi > grid_.back() && tail_exponent_ != 0.0) {
    // geometric pieces over the power-law tail
    double tau = std::max(lo, grid_.back());
    if (tau <= 0.0) tau = std::min(hi, 1e-8);
    if (tau > lo && tau < hi && taus.back() != tau) taus.push_back(tau);
    while (tau * 1.02 < hi) {
      tau *= 1.02;
      if (tau > taus.back()) taus.push_back(tau);
    }
  }
  taus.push_back(hi);

  const double alpha = kernel.alpha;
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < taus.size(); ++i) {
    const double sa = taus[i] - shift;
    const double sb = taus[i + 1] - shift;
    if (!(sb > sa)) continue;
    const double theta_a = (*this)(taus[i]);
    const double theta_b = (*this)(taus[i + 1]);
    const double ya = t - sa;
    const double yb = std::max(0.0, t - sb);
    const double m0 = (std::pow(ya, alpha) - std::pow(yb, alpha)) / alpha;
    const double m1 = t * m0 - (std::pow(ya, alpha + 1.0) - std::pow(yb, alpha + 1.0)) / (alpha + 1.0);
    const double slope = (theta_b - theta_a) / (sb - sa);
    total += theta_a * m0 + slope * (m1 - sa * m0);
  }
  return kernel.lambda / std::tgamma(alpha) * total;
}

// ---------------------------------------------------------------------------
// Conditional curve

ForwardCurve forward_theta(std::span<const double> z_history, double dt, const ForwardCurve& theta0,
                           const ModelParams& params, std::span<const double> out_grid) {
  params.validate();
  if (z_history.empty()) throw DomainError("model", "forward_theta: empty history");
  if (!(dt > 0.0)) throw DomainError("model", "forward_theta: dt must be positive");
  for (double u : out_grid)
    if (!(u > 0.0))
      throw DomainError("model", "forward_theta: offsets must be > 0 (the history kernel is singular at u = 0)");

  const double alpha = params.alpha;
  const std::size_t k0 = z_history.size() - 1;
  const double t0 = static_cast<double>(k0) * dt;
  const double z_t0 = z_history[k0];

  std::vector<double> values(out_grid.size());
  for (std::size_t n = 0; n < out_grid.size(); ++n) {
    const double u = out_grid[n];
    double theta = theta0(t0 + u);
    if (alpha < 1.0) {
      const double coef = 1.0 / (params.lambda * std::tgamma(1.0 - alpha));
      theta -= z_t0 * coef * std::pow(t0 + u, -alpha);
      double history = 0.0;
      for (std::size_t i = 0; i < k0; ++i) {
        // cell between v_i and v_{i+1}; x = t0 - v runs over [xa, xb]
        const double xa = static_cast<double>(k0 - i - 1) * dt;
        const double xb = static_cast<double>(k0 - i) * dt;
        const double ya = z_history[i + 1] - z_t0;
        const double yb = z_history[i] - z_t0;
        const double pa = std::pow(xa + u, -alpha);
        const double pb = std::pow(xb + u, -alpha);
        const double m0 = (pa - pb) / alpha;
        const double mx = ((xb + u) * pb - (xa + u) * pa) / (1.0 - alpha) - u * m0;
        history += ya * m0 + (yb - ya) / dt * (mx - xa * m0);
      }
      theta += alpha * coef * history;
    }
    values[n] = theta;
  }
  std::vector<double> grid(out_grid.begin(), out_grid.end());
  return ForwardCurve(std::move(grid), std::move(values), alpha, true);
}

RestartForcing::RestartForcing(const ModelParams& params, const ForwardCurve& theta0, double dt,
                               std::size_t restart_step, std::span<const double> offsets)
    : restart_step_(restart_step), base_(offsets.size(), 0.0), weights_(offsets.size() * (restart_step + 1), 0.0) {
  params.validate();
  if (!(dt > 0.0)) throw DomainError("model", "RestartForcing: dt must be positive");
  const double alpha = params.alpha;
  const KernelSpec kernel = params.kernel();
  const std::size_t k0 = restart_step;
  const std::size_t width = k0 + 1;
  const double t0 = static_cast<double>(k0) * dt;
  const double spectral = std::sin(std::numbers::pi * alpha) / std::numbers::pi;

  for (std::size_t n = 0; n < offsets.size(); ++n) {
    const double t = offsets[n];
    if (t < 0.0) throw DomainError("model", "RestartForcing: offsets must be nonnegative");
    if (t == 0.0) continue;
    base_[n] = theta0.kernel_convolution(kernel, t, t0);
    if (!(alpha < 1.0)) continue;

    double* row = weights_.data() + n * width;
    row[k0] -= shifted_unit_convolution(alpha, t, t0);

    // (K * h)(t) with h the history term; per cell the weight
    // (sin(pi a)/pi) t^a x^(-a) / (x + t) is integrated exactly against the
    // linear interpolant of Y = Z - Z_{t0}.
    const double ta = std::pow(t, alpha);
    double ib_prev = 0.0;  // I_{w}(1-a, a) at x = 0
    double xp_prev = 0.0;  // x^(1-a) at x = 0
    for (std::size_t c = 0; c < k0; ++c) {
      // cell c covers x in [c dt, (c+1) dt], i.e. history nodes i = k0-c-1 (far end) and k0-c (near end)
      const double xa = static_cast<double>(c) * dt;
      const double xb = static_cast<double>(c + 1) * dt;
      const double ib = boost::math::ibeta(1.0 - alpha, alpha, xb / (xb + t));
      const double xp = std::pow(xb, 1.0 - alpha);
      const double p0 = ib - ib_prev;
      const double px = spectral * ta * (xp - xp_prev) / (1.0 - alpha) - t * p0;
      const double slope_part = (px - xa * p0) / dt;
      const std::size_t near_node = k0 - c;     // Y at x = xa
      const std::size_t far_node = k0 - c - 1;  // Y at x = xb
      row[near_node] += p0 - slope_part;
      row[far_node] += slope_part;
      row[k0] -= p0;
      ib_prev = ib;
      xp_prev = xp;
    }
  }
}

void RestartForcing::apply(std::span<const double> z_history, std::span<double> out) const {
  const std::size_t width = restart_step_ + 1;
  if (z_history.size() < width || out.size() != base_.size())
    throw DomainError("model", "RestartForcing::apply: size mismatch");
  for (std::size_t n = 0; n < base_.size(); ++n) {
    const double* row = weights_.data() + n * width;
    double acc = base_[n];
    for (std::size_t i = 0; i < width; ++i) acc += row[i] * z_history[i];
    out[n] = acc;
  }
}

}  // namespace qrh
