#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace qrh {

enum class InstrumentClass { spx, vix };

std::string to_string(InstrumentClass cls);

/// One implied-vol quote. Log-moneyness is ln(K / F) with F the spot for SPX
/// and the VIX future of the same expiry for VIX. A quote whose vols are all
/// zero marks an instrument with no optionality (a degenerate VIX smile); it
/// carries no information and is skipped by the objective.
struct Quote {
  InstrumentClass cls = InstrumentClass::spx;
  double expiry = 0.0;
  double log_moneyness = 0.0;
  double bid = 0.0;
  double ask = 0.0;
  double mid = 0.0;

  bool degenerate() const { return bid == 0.0 && ask == 0.0 && mid == 0.0; }
};

struct SmileSet {
  std::vector<Quote> quotes;
  std::string label;

  std::size_t count(InstrumentClass cls) const;
  /// Sorted distinct expiries of a class.
  std::vector<double> expiries(InstrumentClass cls) const;

  /// Throws ConfigError unless expiries are > 0, vols are finite and
  /// bid <= mid <= ask, and (when `joint`) both classes are present.
  void validate(bool joint = false) const;
};

/// CSV `class,expiry_years,log_moneyness,bid_vol,ask_vol,mid_vol`, class being
/// SPX or VIX. Leading `#` lines are comments.
SmileSet read_smile_set(std::istream& in, const std::string& source = "<stream>");
SmileSet read_smile_set(const std::filesystem::path& path);
void write_smile_set(std::ostream& out, const SmileSet& set, const std::string& header_comment);

}  // namespace qrh
