#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "qrh/impliedvol.hpp"
#include "qrh/simulate.hpp"

namespace qrh {

/// Monte Carlo price with its standard error. SPX prices are in units of the
/// spot, VIX quantities in volatility points.
struct PriceEstimate {
  double value = 0.0;
  double std_error = 0.0;
  std::size_t n_outer = 0;
  std::size_t n_inner = 0;
};

/// VIX^2 = scale^2 / delta * E[int_t^{t+delta} V ds | F_t].
struct VixConvention {
  double delta = 30.0 / 365.0;
  double scale = 100.0;
  void validate() const;
};

/// SPX option estimators. `plain` is the payoff average; `control_variate`
/// regresses the payoff on S_T (whose mean is the spot) with the coefficient
/// estimated from the same sample.
enum class SpxEstimator { plain, control_variate };

/// VIX^2 from a restarted inner ensemble spanning exactly one VIX window: the
/// inner average of the trapezoidal integral of V, times scale^2 / delta.
/// Throws DomainError if the ensemble does not span delta.
double vix_squared_at(const PathEnsemble& inner, const VixConvention& convention);

/// Zero-rate SPX vanilla on the ensemble, strike in spot units. With the
/// plain estimator C - P equals mean(S_T) - K up to rounding; with the
/// control variate it equals S_0 - K.
/// Throws DomainError if the expiry is not on the grid or strike <= 0.
PriceEstimate price_spx_option(const PathEnsemble& ensemble, double strike, double expiry, OptionKind kind,
                               SpxEstimator estimator = SpxEstimator::plain);

/// Terminal spot samples S_T at an on-grid expiry.
std::vector<double> terminal_spots(const PathEnsemble& ensemble, double expiry);

/// Nested VIX estimates at one expiry, one entry per outer path. `vix` uses
/// all inner paths; `vix_half_a` and `vix_half_b` use the first and second
/// half of them, which exposes the inner-sampling (Jensen) bias.
struct VixSamples {
  double expiry = 0.0;
  std::size_t n_inner = 0;
  VixConvention convention;
  std::vector<double> vix;
  std::vector<double> vix_half_a;
  std::vector<double> vix_half_b;
};

/// Runs the nested simulation: every outer path is restarted at `expiry` and
/// `inner.n_paths` inner paths integrate V over one VIX window (the inner
/// horizon is set to convention.delta; the step count follows
/// inner.steps_per_year unless inner.fixed_steps is set).
/// Throws DomainError if the expiry is off the outer grid.
VixSamples vix_samples(const PathEnsemble& outer, double expiry, const SimConfig& inner,
                       const VixConvention& convention = {});

/// Outer average of the per-path VIX estimates. Biased low by the concavity
/// of the square root; see vix_future_bias.
PriceEstimate vix_future(const VixSamples& samples);
PriceEstimate vix_future(const PathEnsemble& outer, double expiry, const SimConfig& inner,
                         const VixConvention& convention = {});

/// Two-level estimate of the inner-sampling bias of vix_future: the estimate
/// with all inner paths minus the average of the two half-sample estimates.
/// Since the bias scales like 1/n_inner this approximates the (negative of
/// the) remaining bias; `corrected` = full + (full - halves).
struct VixBias {
  double full = 0.0;
  double halves = 0.0;
  double bias = 0.0;       // halves - full, an estimate of E[full] - VIX future
  double corrected = 0.0;  // full - bias
};
VixBias vix_future_bias(const VixSamples& samples);

/// Outer average of max(+-(VIX - K), 0) with the per-path VIX estimate.
PriceEstimate price_vix_option(const VixSamples& samples, double strike, OptionKind kind);
PriceEstimate price_vix_option(const PathEnsemble& outer, double strike, double expiry, OptionKind kind,
                               const SimConfig& inner, const VixConvention& convention = {});

/// One point of a model smile. Quotes are out of the money: puts for
/// log-moneyness k < 0, calls for k >= 0. `valid` is false when the price
/// cannot be inverted (zero or at the bounds), in which case the vols are NaN.
struct SmilePoint {
  double log_moneyness = 0.0;
  double strike = 0.0;
  OptionKind kind = OptionKind::call;
  PriceEstimate price;
  VolEstimate vol;
  bool valid = false;
};

inline OptionKind otm_kind(double log_moneyness) {
  return log_moneyness < 0.0 ? OptionKind::put : OptionKind::call;
}

/// SPX smile on the forward S_0 at an on-grid expiry.
std::vector<SmilePoint> spx_smile(const PathEnsemble& ensemble, double expiry, std::span<const double> log_moneyness,
                                  SpxEstimator estimator = SpxEstimator::control_variate);

/// VIX smile; the forward is the VIX future estimated from the same samples,
/// so VIX option parity holds exactly on the sample.
std::vector<SmilePoint> vix_smile(const VixSamples& samples, std::span<const double> log_moneyness);

struct PriceRow {
  std::string instrument;
  double expiry = 0.0;
  double strike_or_log_moneyness = 0.0;
  double price = 0.0;
  double std_error = 0.0;
};

/// CSV `instrument,expiry,strike_or_logmoneyness,price,std_error`.
void write_price_table(std::ostream& out, std::span<const PriceRow> rows, const std::string& header_comment);

}  // namespace qrh
