#include "qrh/specialfn.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include <complex>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/beta.hpp>

#include "qrh/errors.hpp"

namespace qrh {
namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kMaxArgument = 50.0;

struct SeriesResult {
  double value = 0.0;
  double abs_sum = 0.0;  // sum of |terms|, a bound on the rounding amplification
  bool converged = false;
};

// Power series sum z^n / Gamma(alpha n + beta) in extended precision.
SeriesResult ml_series(double alpha, double beta, double z) {
  SeriesResult r;
  const long double za = std::fabs(static_cast<long double>(z));
  const long double log_z = std::log(za);
  long double sum = 0.0L;
  long double abs_sum = 0.0L;
  long double prev = 0.0L;
  for (int n = 0; n < 100000; ++n) {
    const long double arg = static_cast<long double>(alpha) * n + beta;
    const long double magnitude =
        n == 0 ? 1.0L / std::tgamma(arg) : std::exp(n * log_z - std::lgamma(arg));
    const long double term = (z < 0.0 && (n % 2 == 1)) ? -magnitude : magnitude;
    sum += term;
    abs_sum += magnitude;
    if (!std::isfinite(static_cast<double>(abs_sum))) return r;
    const bool decreasing = n > 0 && magnitude < prev;
    if (decreasing && magnitude <= 1e-20L * std::max(std::fabs(sum), 1e-300L)) {
      r.converged = true;
      break;
    }
    prev = magnitude;
  }
  r.value = static_cast<double>(sum);
  r.abs_sum = static_cast<double>(abs_sum);
  return r;
}

// Trapezoidal rule in u = log r for the spectral representation of
// E_{alpha,1}(-x) (weight_power = 0) or int r K_alpha(r) e^{-rs} dr
// (weight_power = 1), with s = x^(1/alpha), 0 < alpha < 1, x > 0.
double spectral_integral(double alpha, double x, int weight_power) {
  const double s = std::pow(x, 1.0 / alpha);
  const double sin_a = std::sin(kPi * alpha);
  const double cos_a = std::cos(kPi * alpha);
  const double strip = kPi * (1.0 - alpha) / alpha;  // distance to nearest pole
  const double h = std::min(0.25, strip / 6.0);
  constexpr double kLogTiny = 41.5;  // exp(-41.5) ~ 1e-18

  const double lo = -kLogTiny / (alpha + weight_power);
  const double hi_decay = weight_power == 0 ? kLogTiny / alpha : 1e300;
  const double hi = std::min(hi_decay, std::log(45.0 / s));
  if (!(hi > lo)) return 0.0;

  const auto integrand = [&](double u) {
    const double rho = std::exp(alpha * u);
    const double core = sin_a / kPi * rho / (rho * rho + 2.0 * rho * cos_a + 1.0);
    const double r = std::exp(u);
    return core * (weight_power == 1 ? r : 1.0) * std::exp(-s * r);
  };

  const auto steps = static_cast<std::size_t>(std::ceil((hi - lo) / h));
  const double step = (hi - lo) / static_cast<double>(steps);
  double sum = 0.5 * (integrand(lo) + integrand(hi));
  for (std::size_t i = 1; i < steps; ++i) sum += integrand(lo + step * static_cast<double>(i));
  return sum * step;
}

// E_{alpha,beta}(z) for real z < 0 and 0 < alpha < 1 by the contour
// representation of Gorenflo, Loutchko and Luchko with the circle radius
// fixed at 1: a ray integral over [1, inf) plus an arc integral over
// |phi| <= pi alpha. Valid for every beta > 0 since arg z = pi > pi alpha.
double contour_integral(double alpha, double beta, double z) {
  using boost::math::quadrature::gauss_kronrod;
  const double p = (1.0 - beta) / alpha;
  const double s1 = std::sin(kPi * (1.0 - beta));
  const double s2 = std::sin(kPi * (1.0 - beta + alpha));
  const double c = std::cos(kPi * alpha);
  const auto ray = [&](double chi) {
    const double e = std::pow(chi, 1.0 / alpha);
    if (e > 745.0) return 0.0;
    return std::pow(chi, p) * std::exp(-e) * (chi * s1 - z * s2) / (chi * chi - 2.0 * chi * z * c + z * z);
  };
  const auto arc = [&](double phi) {
    const double omega = std::sin(phi / alpha) + phi * (1.0 + p);
    const std::complex<double> num(std::cos(omega), std::sin(omega));
    const std::complex<double> den = std::polar(1.0, phi) - z;
    return std::exp(std::cos(phi / alpha)) * (num / den).real();
  };
  double err = 0.0;
  const double upper = std::pow(745.0, alpha);
  const double ray_part = gauss_kronrod<double, 61>::integrate(ray, 1.0, upper, 15, 1e-14, &err);
  const double arc_part = gauss_kronrod<double, 61>::integrate(arc, -kPi * alpha, kPi * alpha, 15, 1e-14, &err);
  return ray_part / (alpha * kPi) + arc_part / (2.0 * alpha * kPi);
}

bool near(double a, double b) { return std::fabs(a - b) <= 1e-15 * std::max(1.0, std::fabs(b)); }

// E_{alpha,beta}(z) without the public |z| cap.
double ml_eval(double alpha, double beta, double z) {
  if (z == 0.0) return 1.0 / std::tgamma(beta);
  if (alpha == 1.0 && beta == 1.0 && z < 0.0 && z < -16.0) return std::exp(z);

  const SeriesResult series = ml_series(alpha, beta, z);
  if (series.converged) {
    const double magnitude = std::max(1.0, std::fabs(series.value));
    const bool well_conditioned = z > 0.0 || series.abs_sum * 1e-18 <= 1e-11 * magnitude;
    if (well_conditioned) {
      if (!std::isfinite(series.value) || std::fabs(series.value) > 1e300)
        throw RangeError("specialfn", "mittag_leffler: result overflows");
      return series.value;
    }
  } else if (z > 0.0) {
    throw RangeError("specialfn", "mittag_leffler: result overflows for z = " + std::to_string(z));
  }

  if (z < 0.0 && alpha < 1.0) {
    const double x = -z;
    if (near(beta, 1.0)) return spectral_integral(alpha, x, 0);
    if (near(beta, alpha)) return std::pow(x, 1.0 / alpha - 1.0) * spectral_integral(alpha, x, 1);
    return contour_integral(alpha, beta, z);
  }
  if (z < 0.0 && alpha == 1.0 && beta == 1.0) return std::exp(z);
  throw RangeError("specialfn", "mittag_leffler: cannot reach 1e-10 accuracy at alpha=" +
                                    std::to_string(alpha) + ", beta=" + std::to_string(beta) +
                                    ", z=" + std::to_string(z));
}

void require_positive_time(double t, const char* op) {
  if (!(t > 0.0) || !std::isfinite(t))
    throw DomainError("specialfn", std::string(op) + ": requires t > 0");
}

}  // namespace

void KernelSpec::validate() const {
  if (!(alpha > 0.5 && alpha <= 1.0))
    throw DomainError("specialfn", "kernel alpha must satisfy 1/2 < alpha <= 1");
  if (!(lambda > 0.0) || !std::isfinite(lambda))
    throw DomainError("specialfn", "kernel lambda must be positive");
}

double gamma_fn(double x) { return std::tgamma(x); }

double mittag_leffler(double alpha, double beta, double z) {
  if (!(alpha > 0.0) || !std::isfinite(alpha))
    throw DomainError("specialfn", "mittag_leffler: alpha must be positive");
  if (!(beta > 0.0) || !std::isfinite(beta))
    throw DomainError("specialfn", "mittag_leffler: beta must be positive");
  if (!std::isfinite(z)) throw DomainError("specialfn", "mittag_leffler: z must be finite");
  if (std::fabs(z) > kMaxArgument)
    throw RangeError("specialfn", "mittag_leffler: |z| exceeds the supported range 50");
  return ml_eval(alpha, beta, z);
}

double fractional_kernel(const KernelSpec& spec, double t) {
  spec.validate();
  require_positive_time(t, "fractional_kernel");
  return spec.lambda * std::pow(t, spec.alpha - 1.0) / std::tgamma(spec.alpha);
}

double fractional_kernel_mass(const KernelSpec& spec, double t0, double t1) {
  return spec.lambda * (std::pow(t1, spec.alpha) - std::pow(t0, spec.alpha)) /
         std::tgamma(spec.alpha + 1.0);
}

double ml_density(const KernelSpec& spec, double t) {
  spec.validate();
  require_positive_time(t, "ml_density");
  if (spec.alpha == 1.0) return spec.lambda * std::exp(-spec.lambda * t);
  const double x = spec.lambda * std::pow(t, spec.alpha);
  return spec.lambda * std::pow(t, spec.alpha - 1.0) * ml_eval(spec.alpha, spec.alpha, -x);
}

double ml_cdf(const KernelSpec& spec, double t) {
  spec.validate();
  if (!(t >= 0.0) || !std::isfinite(t)) throw DomainError("specialfn", "ml_cdf: requires t >= 0");
  if (t == 0.0) return 0.0;
  if (spec.alpha == 1.0) return -std::expm1(-spec.lambda * t);
  const double x = spec.lambda * std::pow(t, spec.alpha);
  return 1.0 - ml_eval(spec.alpha, 1.0, -x);
}

double ml_density_small_t(const KernelSpec& spec, double t) {
  return spec.lambda * std::pow(t, spec.alpha - 1.0) / std::tgamma(spec.alpha);
}

double ml_density_large_t(const KernelSpec& spec, double t) {
  if (!(spec.alpha < 1.0)) throw DomainError("specialfn", "large-t asymptote requires alpha < 1");
  return spec.alpha * std::pow(t, -spec.alpha - 1.0) / (spec.lambda * std::tgamma(1.0 - spec.alpha));
}

double resolvent_residual(const KernelSpec& spec, std::span<const double> grid) {
  spec.validate();
  if (grid.empty()) throw DomainError("specialfn", "resolvent_residual: empty grid");
  if (!(grid.front() > 0.0)) throw DomainError("specialfn", "resolvent_residual: grid must start above 0");
  for (std::size_t i = 1; i < grid.size(); ++i)
    if (!(grid[i] > grid[i - 1]))
      throw DomainError("specialfn", "resolvent_residual: grid must be strictly increasing");

  const double alpha = spec.alpha;
  const double lambda = spec.lambda;
  const double gamma_a = std::tgamma(alpha);

  // Nodes 0, grid[0], grid[1], ... and the bounded factor
  // psi(s) = lambda^2 E_{alpha,alpha}(-lambda s^alpha) / Gamma(alpha),
  // so that K(t-s) f(s) = (t-s)^(alpha-1) s^(alpha-1) psi(s). psi is smooth
  // in u = s^alpha but not in s, so on each cell it is interpolated by a
  // quadratic in u through the end points and the u-midpoint.
  std::vector<double> nodes(grid.size() + 1, 0.0);
  std::copy(grid.begin(), grid.end(), nodes.begin() + 1);
  const auto psi_of_u = [&](double uu) {
    const double e = alpha == 1.0 ? std::exp(-lambda * uu) : ml_eval(alpha, alpha, -lambda * uu);
    return lambda * lambda * e / gamma_a;
  };
  const std::size_t n = nodes.size();
  std::vector<double> u(n), psi(n), psi_mid(n - 1);
  for (std::size_t i = 0; i < n; ++i) {
    u[i] = std::pow(nodes[i], alpha);
    psi[i] = psi_of_u(u[i]);
  }
  for (std::size_t i = 0; i + 1 < n; ++i) psi_mid[i] = psi_of_u(0.5 * (u[i] + u[i + 1]));

  // Moments int_a^b (t-s)^(alpha-1) s^(alpha-1) u(s)^m ds, m = 0, 1, 2. On
  // the cells touching s = 0 or s = t they are incomplete Beta functions with
  // first parameter (m + 1) alpha. Elsewhere the integrand is smooth and an
  // 8-point Gauss-Legendre rule is used.
  const std::array<double, 3> beta_m{boost::math::beta(alpha, alpha), boost::math::beta(2.0 * alpha, alpha),
                                     boost::math::beta(3.0 * alpha, alpha)};
  using rule = boost::math::quadrature::gauss<double, 8>;
  constexpr std::size_t q = 8;
  std::array<double, q> xi{}, wi{};
  for (std::size_t i = 0; i < q; ++i) {
    const std::size_t half = i / 2;
    const double sign = (i % 2 == 0) ? 1.0 : -1.0;
    xi[i] = sign * rule::abscissa()[half];
    wi[i] = rule::weights()[half];
  }
  // Per-cell nodes s, weights times s^(alpha-1), and u(s) at each node.
  std::vector<double> node_s((n - 1) * q), node_w((n - 1) * q), node_u((n - 1) * q);
  for (std::size_t j = 0; j + 1 < n; ++j) {
    const double mid = 0.5 * (nodes[j] + nodes[j + 1]);
    const double half = 0.5 * (nodes[j + 1] - nodes[j]);
    for (std::size_t i = 0; i < q; ++i) {
      const double s = mid + half * xi[i];
      node_s[j * q + i] = s;
      node_w[j * q + i] = half * wi[i] * std::pow(s, alpha - 1.0);
      node_u[j * q + i] = std::pow(s, alpha);
    }
  }
  const auto exact_moments = [&](double t, std::size_t j) {
    std::array<double, 3> out{};
    const double xa = std::min(1.0, nodes[j] / t);
    const double xb = std::min(1.0, nodes[j + 1] / t);
    for (int m = 0; m < 3; ++m) {
      const double scale = std::pow(t, (m + 2.0) * alpha - 1.0) * beta_m[m];
      out[m] = scale * (boost::math::ibeta((m + 1.0) * alpha, alpha, xb) -
                        boost::math::ibeta((m + 1.0) * alpha, alpha, xa));
    }
    return out;
  };
  double worst = 0.0;
  for (std::size_t k = 1; k < n; ++k) {
    const double t = nodes[k];
    double integral = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      double m0 = 0.0, m1 = 0.0, m2 = 0.0;
      if (j == 0 || j + 1 == k) {
        const std::array<double, 3> m = exact_moments(t, j);
        m0 = m[0];
        m1 = m[1];
        m2 = m[2];
      } else {
        for (std::size_t i = 0; i < q; ++i) {
          const double w = node_w[j * q + i] * std::pow(t - node_s[j * q + i], alpha - 1.0);
          const double uu = node_u[j * q + i];
          m0 += w;
          m1 += w * uu;
          m2 += w * uu * uu;
        }
      }
      const double ua = u[j], ub = u[j + 1], um = 0.5 * (ua + ub);
      const double c1 = (psi[j + 1] - psi[j]) / (ub - ua);
      const double c2 = (psi_mid[j] - psi[j] - c1 * (um - ua)) / ((um - ua) * (um - ub));
      integral += psi[j] * m0 + c1 * (m1 - ua * m0) + c2 * (m2 - (ua + ub) * m1 + ua * ub * m0);
    }
    const double kernel = lambda * std::pow(t, alpha - 1.0) / gamma_a;
    const double density = ml_density(spec, t);
    worst = std::max(worst, std::fabs(density + integral - kernel));
  }
  return worst;
}

}  // namespace qrh
