#include "qrh/smileset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <ostream>

#include "qrh/csv.hpp"
#include "qrh/errors.hpp"
#include "qrh/kvconfig.hpp"

namespace qrh {

std::string to_string(InstrumentClass cls) { return cls == InstrumentClass::spx ? "SPX" : "VIX"; }

std::size_t SmileSet::count(InstrumentClass cls) const {
  return static_cast<std::size_t>(
      std::count_if(quotes.begin(), quotes.end(), [cls](const Quote& q) { return q.cls == cls; }));
}

std::vector<double> SmileSet::expiries(InstrumentClass cls) const {
  std::vector<double> out;
  for (const Quote& q : quotes)
    if (q.cls == cls) out.push_back(q.expiry);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

void SmileSet::validate(bool joint) const {
  for (std::size_t i = 0; i < quotes.size(); ++i) {
    const Quote& q = quotes[i];
    const std::string where = "quote " + std::to_string(i) + ": ";
    if (!(q.expiry > 0.0) || !std::isfinite(q.expiry)) throw ConfigError("calibrate", where + "expiry must be > 0");
    if (!std::isfinite(q.log_moneyness)) throw ConfigError("calibrate", where + "log-moneyness is not finite");
    if (!std::isfinite(q.bid) || !std::isfinite(q.ask) || !std::isfinite(q.mid))
      throw ConfigError("calibrate", where + "vols must be finite");
    if (!(q.bid <= q.mid && q.mid <= q.ask)) throw ConfigError("calibrate", where + "requires bid <= mid <= ask");
    if (q.bid < 0.0) throw ConfigError("calibrate", where + "vols must be >= 0");
  }
  if (joint && (count(InstrumentClass::spx) == 0 || count(InstrumentClass::vix) == 0))
    throw ConfigError("calibrate", "joint calibration needs both SPX and VIX quotes");
}

SmileSet read_smile_set(std::istream& in, const std::string& source) {
  const CsvTable table = read_csv(in, source);
  const std::size_t c_cls = table.column("class");
  const std::size_t c_t = table.column("expiry_years");
  const std::size_t c_k = table.column("log_moneyness");
  const std::size_t c_bid = table.column("bid_vol");
  const std::size_t c_ask = table.column("ask_vol");
  const std::size_t c_mid = table.column("mid_vol");
  SmileSet set;
  set.label = source;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    const std::string where = source + ":" + std::to_string(table.line_numbers[r]);
    Quote q;
    if (row[c_cls] == "SPX" || row[c_cls] == "spx") {
      q.cls = InstrumentClass::spx;
    } else if (row[c_cls] == "VIX" || row[c_cls] == "vix") {
      q.cls = InstrumentClass::vix;
    } else {
      throw ConfigError("calibrate", where + ": unknown instrument class '" + row[c_cls] + "'");
    }
    q.expiry = parse_double(row[c_t], where + " expiry_years");
    q.log_moneyness = parse_double(row[c_k], where + " log_moneyness");
    q.bid = parse_double(row[c_bid], where + " bid_vol");
    q.ask = parse_double(row[c_ask], where + " ask_vol");
    q.mid = parse_double(row[c_mid], where + " mid_vol");
    set.quotes.push_back(q);
  }
  set.validate();
  return set;
}

SmileSet read_smile_set(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("calibrate", "cannot open smile file " + path.string());
  return read_smile_set(in, path.string());
}

void write_smile_set(std::ostream& out, const SmileSet& set, const std::string& header_comment) {
  if (!header_comment.empty()) out << "# " << header_comment << '\n';
  out << "class,expiry_years,log_moneyness,bid_vol,ask_vol,mid_vol\n";
  for (const Quote& q : set.quotes)
    out << to_string(q.cls) << ',' << format_double(q.expiry) << ',' << format_double(q.log_moneyness) << ','
        << format_double(q.bid) << ',' << format_double(q.ask) << ',' << format_double(q.mid) << '\n';
}

}  // namespace qrh
