#pragma once

#include <span>

namespace qrh {

/// Exponent and scale of the fractional kernel K(t) = lambda t^(alpha-1) / Gamma(alpha).
/// alpha = 1 is admitted as the classical (exponential) limit.
struct KernelSpec {
  double alpha = 0.51;
  double lambda = 1.2;

  /// Throws DomainError unless 1/2 < alpha <= 1 and lambda > 0.
  void validate() const;
};

/// Gamma function. Thin wrapper over std::tgamma; the accuracy contract
/// (Gamma(1/2) = sqrt(pi), Gamma(x+1) = x Gamma(x) to 1e-12) is checked in tests.
double gamma_fn(double x);

/// Two-parameter Mittag-Leffler function E_{alpha,beta}(z) on the real line,
/// |z| <= 50.
///
/// Evaluated by its power series in extended precision wherever the series is
/// well conditioned. For negative arguments where cancellation would destroy
/// the series (|z| large, alpha < 1) and beta in {1, alpha}, the completely
/// monotone spectral representation
///   E_alpha(-x) = int_0^inf exp(-r x^(1/alpha)) K_alpha(r) dr,
///   K_alpha(r) = sin(alpha pi) r^(alpha-1) / (pi (r^(2 alpha) + 2 r^alpha cos(alpha pi) + 1)),
/// is integrated with the trapezoidal rule in log r, which converges
/// geometrically because the integrand is analytic in a strip.
///
/// Throws DomainError for alpha <= 0 or beta <= 0, RangeError if |z| > 50 or
/// the value cannot be produced to absolute accuracy 1e-10 (relative for
/// |E| > 1), e.g. overflow for large positive z.
double mittag_leffler(double alpha, double beta, double z);

/// K(t) = lambda t^(alpha-1) / Gamma(alpha). Throws DomainError for t <= 0.
double fractional_kernel(const KernelSpec& spec, double t);

/// Exact kernel mass int_{t0}^{t1} K(s) ds = lambda (t1^alpha - t0^alpha) / Gamma(alpha+1).
double fractional_kernel_mass(const KernelSpec& spec, double t0, double t1);

/// Mittag-Leffler density f(t) = lambda t^(alpha-1) E_{alpha,alpha}(-lambda t^alpha),
/// the resolvent of K: f + K * f = K. Throws DomainError for t <= 0.
double ml_density(const KernelSpec& spec, double t);

/// int_0^t f(s) ds = 1 - E_{alpha,1}(-lambda t^alpha). Throws DomainError for t < 0.
double ml_cdf(const KernelSpec& spec, double t);

/// Small-t asymptote lambda t^(alpha-1) / Gamma(alpha) of the density.
double ml_density_small_t(const KernelSpec& spec, double t);

/// Large-t asymptote alpha t^(-alpha-1) / (lambda Gamma(1-alpha)) of the density (alpha < 1).
double ml_density_large_t(const KernelSpec& spec, double t);

/// Maximum over grid points t of |f(t) + int_0^t K(t-s) f(s) ds - K(t)|.
///
/// For each t the integral runs over the cells of `grid` below t (plus the
/// first cell [0, grid[0]]). The weight (t-s)^(alpha-1) s^(alpha-1) is
/// integrated exactly per cell (incomplete Beta functions) against a linear
/// interpolant of the bounded factor E_{alpha,alpha}(-lambda s^alpha), so both
/// endpoint singularities carry their exact mass.
///
/// Throws DomainError for an empty grid, a first point <= 0, or a grid that is
/// not strictly increasing.
double resolvent_residual(const KernelSpec& spec, std::span<const double> grid);

}  // namespace qrh
