#include "qrh/pricing.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include "qrh/errors.hpp"
#include "qrh/kvconfig.hpp"
#include "qrh/parallel.hpp"
#include "qrh/stats.hpp"

namespace qrh {
namespace {

std::size_t expiry_step(const PathEnsemble& ensemble, double expiry) {
  const auto step = ensemble.step_of(expiry);
  if (!step) throw DomainError("pricing", "expiry " + format_double(expiry) + " is not on the simulation grid");
  return *step;
}

PriceEstimate from_moments(const SampleMoments& m, std::size_t n_inner) {
  return PriceEstimate{m.mean, m.std_error, m.count, n_inner};
}

double payoff(double underlying, double strike, OptionKind kind) {
  return kind == OptionKind::call ? std::max(underlying - strike, 0.0) : std::max(strike - underlying, 0.0);
}

}  // namespace

void VixConvention::validate() const {
  if (!(delta > 0.0)) throw ConfigError("pricing", "VIX window delta must be > 0");
  if (!(scale > 0.0)) throw ConfigError("pricing", "VIX scale must be > 0");
}

double vix_squared_at(const PathEnsemble& inner, const VixConvention& convention) {
  convention.validate();
  const double span = inner.horizon() - inner.start_time();
  if (std::fabs(span - convention.delta) > 1e-9 * std::max(1.0, convention.delta))
    throw DomainError("pricing", "inner ensemble spans " + format_double(span) + " years, expected the VIX window " +
                                     format_double(convention.delta));
  std::vector<double> integrals(inner.n_paths());
  const std::size_t n = inner.n_steps();
  for (std::size_t q = 0; q < inner.n_paths(); ++q) {
    const auto v = inner.v(q);
    double sum = 0.5 * (v.front() + v.back());
    for (std::size_t i = 1; i < n; ++i) sum += v[i];
    integrals[q] = sum * inner.dt();
  }
  const double mean = pairwise_sum(integrals) / static_cast<double>(integrals.size());
  return convention.scale * convention.scale * mean / convention.delta;
}

std::vector<double> terminal_spots(const PathEnsemble& ensemble, double expiry) {
  const std::size_t k = expiry_step(ensemble, expiry);
  std::vector<double> s(ensemble.n_paths());
  for (std::size_t p = 0; p < s.size(); ++p) s[p] = std::exp(ensemble.log_spot(p)[k]);
  return s;
}

PriceEstimate price_spx_option(const PathEnsemble& ensemble, double strike, double expiry, OptionKind kind,
                               SpxEstimator estimator) {
  if (!(strike > 0.0)) throw DomainError("pricing", "strike must be > 0");
  const std::vector<double> s = terminal_spots(ensemble, expiry);
  std::vector<double> y(s.size());
  for (std::size_t p = 0; p < s.size(); ++p) y[p] = payoff(s[p], strike, kind);
  if (estimator == SpxEstimator::plain) return from_moments(sample_moments(y), 0);

  const SampleMoments ms = sample_moments(s);
  const SampleMoments my = sample_moments(y);
  std::vector<double> cross(s.size());
  for (std::size_t p = 0; p < s.size(); ++p) cross[p] = (s[p] - ms.mean) * (y[p] - my.mean);
  const double n = static_cast<double>(s.size());
  const double cov = s.size() > 1 ? pairwise_sum(cross) / (n - 1.0) : 0.0;
  const double beta = ms.variance > 0.0 ? cov / ms.variance : 0.0;
  const double spot = ensemble.config().spot;
  std::vector<double> adjusted(s.size());
  for (std::size_t p = 0; p < s.size(); ++p) adjusted[p] = y[p] - beta * (s[p] - spot);
  const SampleMoments ma = sample_moments(adjusted);
  return PriceEstimate{my.mean - beta * (ms.mean - spot), ma.std_error, ma.count, 0};
}

VixSamples vix_samples(const PathEnsemble& outer, double expiry, const SimConfig& inner,
                       const VixConvention& convention) {
  convention.validate();
  const std::size_t k = expiry_step(outer, expiry);
  SimConfig cfg = inner;
  cfg.horizon = convention.delta;
  cfg.validate();
  if (cfg.n_paths < 2) throw ConfigError("pricing", "nested VIX estimation needs at least 2 inner paths");
  const Restarter restarter(outer, k, outer.params(), cfg);

  VixSamples out;
  out.expiry = outer.grid()[k];
  out.n_inner = cfg.n_paths;
  out.convention = convention;
  const std::size_t n_outer = outer.n_paths();
  out.vix.resize(n_outer);
  out.vix_half_a.resize(n_outer);
  out.vix_half_b.resize(n_outer);
  const double factor = convention.scale * convention.scale / convention.delta;
  const std::size_t half = cfg.n_paths / 2;

  parallel_for(n_outer, [&](std::size_t begin, std::size_t end) {
    std::vector<double> iv(cfg.n_paths);
    for (std::size_t p = begin; p < end; ++p) {
      restarter.integrated_variance(p, iv);
      const std::span<const double> all(iv);
      const double sa = pairwise_sum(all.first(half));
      const double sb = pairwise_sum(all.subspan(half));
      out.vix[p] = std::sqrt(factor * pairwise_sum(all) / static_cast<double>(iv.size()));
      out.vix_half_a[p] = std::sqrt(factor * sa / static_cast<double>(half));
      out.vix_half_b[p] = std::sqrt(factor * sb / static_cast<double>(iv.size() - half));
    }
  });
  return out;
}

PriceEstimate vix_future(const VixSamples& samples) {
  return from_moments(sample_moments(samples.vix), samples.n_inner);
}

PriceEstimate vix_future(const PathEnsemble& outer, double expiry, const SimConfig& inner,
                         const VixConvention& convention) {
  return vix_future(vix_samples(outer, expiry, inner, convention));
}

VixBias vix_future_bias(const VixSamples& samples) {
  VixBias b;
  b.full = pairwise_sum(samples.vix) / static_cast<double>(samples.vix.size());
  const double ha = pairwise_sum(samples.vix_half_a) / static_cast<double>(samples.vix_half_a.size());
  const double hb = pairwise_sum(samples.vix_half_b) / static_cast<double>(samples.vix_half_b.size());
  b.halves = 0.5 * (ha + hb);
  b.bias = b.halves - b.full;
  b.corrected = b.full - b.bias;
  return b;
}

PriceEstimate price_vix_option(const VixSamples& samples, double strike, OptionKind kind) {
  if (!(strike > 0.0)) throw DomainError("pricing", "strike must be > 0");
  std::vector<double> y(samples.vix.size());
  for (std::size_t p = 0; p < y.size(); ++p) y[p] = payoff(samples.vix[p], strike, kind);
  return from_moments(sample_moments(y), samples.n_inner);
}

PriceEstimate price_vix_option(const PathEnsemble& outer, double strike, double expiry, OptionKind kind,
                               const SimConfig& inner, const VixConvention& convention) {
  return price_vix_option(vix_samples(outer, expiry, inner, convention), strike, kind);
}

namespace {

SmilePoint invert(double k, double forward, double expiry, OptionKind kind, const PriceEstimate& price) {
  SmilePoint pt;
  pt.log_moneyness = k;
  pt.strike = forward * std::exp(k);
  pt.kind = kind;
  pt.price = price;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  pt.vol = VolEstimate{nan, nan, nan};
  try {
    pt.vol = implied_vol_band(price.value, price.std_error, forward, pt.strike, expiry, kind);
    pt.valid = true;
  } catch (const DomainError&) {
    pt.valid = false;
  }
  return pt;
}

}  // namespace

std::vector<SmilePoint> spx_smile(const PathEnsemble& ensemble, double expiry, std::span<const double> log_moneyness,
                                  SpxEstimator estimator) {
  if (!(expiry > 0.0)) throw DomainError("pricing", "smile expiry must be > 0");
  const double forward = ensemble.config().spot;
  std::vector<SmilePoint> out;
  out.reserve(log_moneyness.size());
  for (double k : log_moneyness) {
    const OptionKind kind = otm_kind(k);
    const double strike = forward * std::exp(k);
    out.push_back(invert(k, forward, expiry, kind, price_spx_option(ensemble, strike, expiry, kind, estimator)));
  }
  return out;
}

std::vector<SmilePoint> vix_smile(const VixSamples& samples, std::span<const double> log_moneyness) {
  if (!(samples.expiry > 0.0)) throw DomainError("pricing", "smile expiry must be > 0");
  const double forward = vix_future(samples).value;
  std::vector<SmilePoint> out;
  out.reserve(log_moneyness.size());
  for (double k : log_moneyness) {
    const OptionKind kind = otm_kind(k);
    const double strike = forward * std::exp(k);
    out.push_back(invert(k, forward, samples.expiry, kind, price_vix_option(samples, strike, kind)));
  }
  return out;
}

void write_price_table(std::ostream& out, std::span<const PriceRow> rows, const std::string& header_comment) {
  if (!header_comment.empty()) out << "# " << header_comment << '\n';
  out << "instrument,expiry,strike_or_logmoneyness,price,std_error\n";
  for (const PriceRow& r : rows)
    out << r.instrument << ',' << format_double(r.expiry) << ',' << format_double(r.strike_or_log_moneyness) << ','
        << format_double(r.price) << ',' << format_double(r.std_error) << '\n';
}

}  // namespace qrh
