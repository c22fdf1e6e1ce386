#include "qrh/impliedvol.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "qrh/errors.hpp"

namespace qrh {
namespace {

void check_inputs(double forward, double strike, double expiry) {
  if (!(forward > 0.0)) throw DomainError("impliedvol", "forward must be > 0");
  if (!(strike > 0.0)) throw DomainError("impliedvol", "strike must be > 0");
  if (!(expiry > 0.0)) throw DomainError("impliedvol", "expiry must be > 0");
}

double intrinsic(double forward, double strike, OptionKind kind) {
  return kind == OptionKind::call ? std::max(forward - strike, 0.0) : std::max(strike - forward, 0.0);
}

double upper_bound(double forward, double strike, OptionKind kind) {
  return kind == OptionKind::call ? forward : strike;
}

}  // namespace

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double black_price(double forward, double strike, double expiry, double vol, OptionKind kind) {
  check_inputs(forward, strike, expiry);
  if (!(vol >= 0.0)) throw DomainError("impliedvol", "vol must be >= 0");
  const double sd = vol * std::sqrt(expiry);
  if (sd == 0.0) return intrinsic(forward, strike, kind);
  const double lm = std::log(forward / strike);
  const double d1 = lm / sd + 0.5 * sd;
  const double d2 = d1 - sd;
  if (kind == OptionKind::call) return forward * normal_cdf(d1) - strike * normal_cdf(d2);
  return strike * normal_cdf(-d2) - forward * normal_cdf(-d1);
}

double black_vega(double forward, double strike, double expiry, double vol) {
  check_inputs(forward, strike, expiry);
  const double sd = vol * std::sqrt(expiry);
  if (!(sd > 0.0)) return 0.0;
  const double d1 = std::log(forward / strike) / sd + 0.5 * sd;
  return forward * std::sqrt(expiry) * std::exp(-0.5 * d1 * d1) / std::sqrt(2.0 * std::numbers::pi);
}

double implied_vol(double price, double forward, double strike, double expiry, OptionKind kind) {
  check_inputs(forward, strike, expiry);
  const double lower = intrinsic(forward, strike, kind);
  const double upper = upper_bound(forward, strike, kind);
  if (!std::isfinite(price)) throw DomainError("impliedvol", "price is not finite");
  if (!(price > lower))
    throw DomainError("impliedvol", "price " + std::to_string(price) + " is not above the intrinsic lower bound " +
                                        std::to_string(lower));
  if (!(price < upper))
    throw DomainError("impliedvol", "price " + std::to_string(price) + " is not below the upper bound " +
                                        std::to_string(upper) + (kind == OptionKind::call ? " (forward)" : " (strike)"));

  // Out-of-the-money prices are better conditioned: use parity to move there.
  OptionKind solve_kind = kind;
  double target = price;
  const bool call_is_otm = strike >= forward;
  if (kind == OptionKind::call && !call_is_otm) {
    solve_kind = OptionKind::put;
    target = price - (forward - strike);
  } else if (kind == OptionKind::put && call_is_otm) {
    solve_kind = OptionKind::call;
    target = price + (forward - strike);
  }
  if (!(target > 0.0)) throw DomainError("impliedvol", "price indistinguishable from intrinsic value");
  const double log_target = std::log(target);

  double lo = 0.0;
  double hi = 1.0;
  while (black_price(forward, strike, expiry, hi, solve_kind) < target) {
    lo = hi;
    hi *= 2.0;
    if (hi > 1e6) throw DomainError("impliedvol", "implied vol exceeds 1e6");
  }
  double vol = 0.5 * (lo + hi);
  for (int iter = 0; iter < 200; ++iter) {
    const double p = black_price(forward, strike, expiry, vol, solve_kind);
    if (p > 0.0 && std::fabs(p - target) <= 1e-13 * target) return vol;
    if (p < target) lo = vol; else hi = vol;
    if (hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * hi) return vol;
    // Newton on log price: d log C / d sigma = vega / C.
    const double vega = black_vega(forward, strike, expiry, vol);
    double next = 0.5 * (lo + hi);
    if (p > 0.0 && vega > 0.0) {
      const double step = (std::log(p) - log_target) * p / vega;
      const double candidate = vol - step;
      if (candidate > lo && candidate < hi) next = candidate;
    }
    vol = next;
  }
  return vol;
}

double implied_vol_clamped(double price, double forward, double strike, double expiry, OptionKind kind) {
  check_inputs(forward, strike, expiry);
  if (!(price > intrinsic(forward, strike, kind))) return 0.0;
  if (!(price < upper_bound(forward, strike, kind))) return std::numeric_limits<double>::infinity();
  return implied_vol(price, forward, strike, expiry, kind);
}

VolEstimate implied_vol_band(double price, double std_error, double forward, double strike, double expiry,
                             OptionKind kind) {
  VolEstimate e;
  e.vol = implied_vol(price, forward, strike, expiry, kind);
  e.lo = implied_vol_clamped(price - std_error, forward, strike, expiry, kind);
  e.hi = implied_vol_clamped(price + std_error, forward, strike, expiry, kind);
  return e;
}

}  // namespace qrh
