#pragma once

// Reference implementations used only by tests. They are written
// independently of the library (different algorithms or libraries) so that
// agreement is evidence of correctness.

#include <boost/math/distributions/normal.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <boost/multiprecision/cpp_bin_float.hpp>
#include <cmath>
#include <cstddef>
#include <random>
#include <span>
#include <vector>

namespace oracle {

inline double normal_cdf(double x) {
  static const boost::math::normal_distribution<double> n;
  return boost::math::cdf(n, x);
}

inline double black_call(double f, double k, double t, double vol) {
  const double sd = vol * std::sqrt(t);
  const double d1 = std::log(f / k) / sd + 0.5 * sd;
  return f * normal_cdf(d1) - k * normal_cdf(d1 - sd);
}

/// Mittag-Leffler series summed in 100-digit arithmetic. Reliable for
/// moderate |z| (cancellation costs about |z|^(1/alpha) / ln 10 digits).
inline double mittag_leffler_mp(double alpha, double beta, double z) {
  using mp = boost::multiprecision::cpp_bin_float_100;
  const mp zz = z;
  mp sum = 0;
  mp power = 1;
  for (int n = 0; n < 5000; ++n) {
    const mp term = power / boost::multiprecision::tgamma(mp(alpha) * n + mp(beta));
    sum += term;
    if (n > 10 && boost::multiprecision::abs(term) < mp("1e-40") * (1 + boost::multiprecision::abs(sum))) break;
    power *= zz;
  }
  return static_cast<double>(sum);
}

/// Large-x asymptotic series E_alpha(-x) ~ sum_{k>=1} (-1)^(k+1) x^(-k) / Gamma(1 - alpha k).
inline double mittag_leffler_neg_asymptotic(double alpha, double x, int terms) {
  double s = 0.0;
  for (int k = 1; k <= terms; ++k) {
    const double arg = 1.0 - alpha * k;
    if (arg <= 0.0 && arg == std::floor(arg)) continue;  // 1/Gamma vanishes at poles
    s += ((k % 2) ? 1.0 : -1.0) * std::pow(x, -k) / boost::math::tgamma(arg);
  }
  return s;
}

/// Plain left-point Euler for the Markovian SDE
///   dZ = lambda (theta - Z) dt + lambda eta sqrt(V) dW,  V = a (Z - b)^2 + c,
/// returning terminal Z samples. Uses its own generator.
inline std::vector<double> markov_euler_terminal_z(double lambda, double theta, double a, double b, double c, double z0, double eta,
                                                   double horizon, std::size_t steps, std::size_t paths,
                                                   std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> normal;
  const double dt = horizon / static_cast<double>(steps);
  const double sdt = std::sqrt(dt);
  std::vector<double> out(paths);
  for (std::size_t p = 0; p < paths; ++p) {
    double z = z0;
    for (std::size_t k = 0; k < steps; ++k) {
      const double v = a * (z - b) * (z - b) + c;
      z += lambda * (theta - z) * dt + lambda * eta * std::sqrt(v) * sdt * normal(gen);
    }
    out[p] = z;
  }
  return out;
}

struct Moments {
  double mean;
  double mean_se;
  double var;
  double var_se;
};

/// Sample mean and variance with standard errors (the variance one from the
/// fourth central moment).
inline Moments moments(std::span<const double> x) {
  const double n = static_cast<double>(x.size());
  double m = 0.0;
  for (double v : x) m += v;
  m /= n;
  double m2 = 0.0, m4 = 0.0;
  for (double v : x) {
    const double d = (v - m) * (v - m);
    m2 += d;
    m4 += d * d;
  }
  m2 /= n;
  m4 /= n;
  return Moments{m, std::sqrt(m2 / n), m2 * n / (n - 1.0), std::sqrt(std::max(0.0, m4 - m2 * m2) / n)};
}

}  // namespace oracle

namespace oracle {

/// Deterministic solution of Z(t) = g - int_0^t K(t-s) Z(s) ds on a uniform
/// grid by product integration with Z piecewise linear (implicit in the newest
/// node). Independent of the library's left-point scheme.
inline std::vector<double> volterra_linear_solve(double alpha, double lambda, double g, double horizon,
                                                 std::size_t n) {
  const double h = horizon / static_cast<double>(n);
  const double c = lambda / boost::math::tgamma(alpha) * std::pow(h, alpha) / (alpha * (alpha + 1.0));
  // weights of the classical fractional trapezoid rule
  auto a_w = [&](std::size_t j, std::size_t k) {
    const double kk = static_cast<double>(k);
    if (j == 0) return c * (std::pow(kk - 1.0, alpha + 1.0) - (kk - 1.0 - alpha) * std::pow(kk, alpha));
    if (j == k) return c;
    const double d = static_cast<double>(k - j);
    return c * (std::pow(d + 1.0, alpha + 1.0) - 2.0 * std::pow(d, alpha + 1.0) + std::pow(d - 1.0, alpha + 1.0));
  };
  std::vector<double> z(n + 1);
  z[0] = g;
  for (std::size_t k = 1; k <= n; ++k) {
    double s = 0.0;
    for (std::size_t j = 0; j < k; ++j) s += a_w(j, k) * z[j];
    z[k] = (g - s) / (1.0 + a_w(k, k));
  }
  return z;
}

}  // namespace oracle
