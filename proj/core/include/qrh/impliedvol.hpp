#pragma once

namespace qrh {

enum class OptionKind { call, put };

/// Standard normal distribution function, via erfc so the far left tail keeps
/// full relative accuracy.
double normal_cdf(double x);

/// Undiscounted Black price on the forward. At vol = 0 (or expiry with zero
/// total variance) the intrinsic value max(+-(F - K), 0).
/// Throws DomainError for non-positive forward, strike or expiry, or vol < 0.
double black_price(double forward, double strike, double expiry, double vol, OptionKind kind);

/// Black vega dC/dsigma.
double black_vega(double forward, double strike, double expiry, double vol);

/// Volatility reproducing `price`. The solve runs on log price with Newton
/// steps safeguarded by a bisection bracket, and stops once the relative price
/// error is below 1e-13 (or the bracket collapses).
///
/// Throws DomainError when the price is not strictly inside
/// (intrinsic, upper bound), naming the violated bound; the upper bound is F
/// for calls and K for puts.
double implied_vol(double price, double forward, double strike, double expiry, OptionKind kind);

/// Like implied_vol, but returns 0 for prices at or below intrinsic and
/// +infinity at or above the upper bound instead of throwing. Used to invert
/// the edges of a confidence band.
double implied_vol_clamped(double price, double forward, double strike, double expiry, OptionKind kind);

struct VolQuote {
  double forward = 0.0;
  double strike = 0.0;
  double expiry = 0.0;
  double vol = 0.0;
  double log_moneyness = 0.0;  // ln(strike / forward)
};

/// Implied vol of a Monte Carlo price together with the band obtained by
/// inverting price - se and price + se (asymmetric in the wings).
struct VolEstimate {
  double vol = 0.0;
  double lo = 0.0;
  double hi = 0.0;
};

VolEstimate implied_vol_band(double price, double std_error, double forward, double strike, double expiry,
                             OptionKind kind);

}  // namespace qrh
