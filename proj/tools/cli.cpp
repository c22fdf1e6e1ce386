#include "cli.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"
#include "qrh/calibrate.hpp"
#include "qrh/csv.hpp"
#include "qrh/errors.hpp"
#include "qrh/kvconfig.hpp"
#include "qrh/model.hpp"
#include "qrh/pricing.hpp"
#include "qrh/simulate.hpp"

namespace qrh::cli {
namespace {

namespace fs = std::filesystem;

struct Options {
  std::string params_file;
  std::string config_file;
  std::string data_file;
  std::string out_dir = ".";
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> outer_paths;
  std::optional<std::size_t> inner_paths;
  std::optional<int> steps_per_year;
  std::string expiries;
  std::string log_moneyness;
  std::string vix_expiries;
  std::string vix_log_moneyness;
  std::optional<double> horizon;
  std::size_t max_paths = 10;
  std::size_t vix_every = 0;
  std::string instrument = "spx";
  int grid_points = 5;
  int grid_rounds = 2;
  double grid_relative = 0.1;
  bool cartesian = false;
  bool refine = false;
  int max_evaluations = 150;
  double half_spread = 0.005;
};

// Sampling sizes after merging command defaults, config files and flags.
struct Sampling {
  std::size_t outer_paths = 0;
  std::size_t inner_paths = 0;
  int steps_per_year = 500;
  std::uint64_t seed = 1;
};

struct Defaults {
  std::size_t outer_paths;
  std::size_t inner_paths;
};

// "0.25" and "0.25y" are years, "14d" days and "2w" weeks (365-day year).
double parse_time(std::string text) {
  if (text.empty()) throw ConfigError("cli", "empty time value");
  double unit = 1.0;
  switch (text.back()) {
    case 'd': unit = 1.0 / 365.0; text.pop_back(); break;
    case 'w': unit = 7.0 / 365.0; text.pop_back(); break;
    case 'y': text.pop_back(); break;
    default: break;
  }
  return parse_double(text, "time value") * unit;
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    item.erase(0, item.find_first_not_of(" \t"));
    item.erase(item.find_last_not_of(" \t") + 1);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::vector<double> parse_times(const std::string& text) {
  std::vector<double> out;
  for (const auto& item : split_list(text)) out.push_back(parse_time(item));
  return out;
}

// Comma list of numbers, or an inclusive range `start:stop:step`.
std::vector<double> parse_grid(const std::string& text) {
  if (text.find(':') != std::string::npos) {
    std::vector<std::string> parts;
    std::stringstream in(text);
    std::string item;
    while (std::getline(in, item, ':')) parts.push_back(item);
    if (parts.size() != 3) throw ConfigError("cli", "range must be start:stop:step, got '" + text + "'");
    const double start = parse_double(parts[0], "range start");
    const double stop = parse_double(parts[1], "range stop");
    const double step = parse_double(parts[2], "range step");
    if (!(step > 0.0) || stop < start) throw ConfigError("cli", "invalid range '" + text + "'");
    std::vector<double> out;
    const auto n = static_cast<std::size_t>(std::floor((stop - start) / step + 1e-9));
    for (std::size_t i = 0; i <= n; ++i) {
      // Round away representation noise such as 0.30000000000000004.
      out.push_back(std::round((start + static_cast<double>(i) * step) * 1e12) / 1e12);
    }
    return out;
  }
  std::vector<double> out;
  for (const auto& item : split_list(text)) out.push_back(parse_double(item, "list value"));
  return out;
}

class Context {
 public:
  Context(std::string command, const Options& opt, Defaults defaults) : command_(std::move(command)), opt_(opt) {
    KeyValueConfig merged;
    if (!opt.params_file.empty()) {
      const auto file = KeyValueConfig::read_file(opt.params_file);
      params_ = params_from_config(file);
      for (const auto& [k, v] : file.entries()) merged.set(k, v);
    }
    if (!opt.config_file.empty()) {
      for (const auto& [k, v] : KeyValueConfig::read_file(opt.config_file).entries()) merged.set(k, v);
    }
    params_.validate();
    sampling_.outer_paths = static_cast<std::size_t>(
        merged.get_int("mc.outer_paths", static_cast<std::int64_t>(defaults.outer_paths)));
    sampling_.inner_paths = static_cast<std::size_t>(
        merged.get_int("mc.inner_paths", static_cast<std::int64_t>(defaults.inner_paths)));
    sampling_.steps_per_year = static_cast<int>(merged.get_int("mc.steps_per_year", 500));
    sampling_.seed = static_cast<std::uint64_t>(merged.get_int("mc.seed", 1));
    if (opt.outer_paths) sampling_.outer_paths = *opt.outer_paths;
    if (opt.inner_paths) sampling_.inner_paths = *opt.inner_paths;
    if (opt.steps_per_year) sampling_.steps_per_year = *opt.steps_per_year;
    if (opt.seed) sampling_.seed = *opt.seed;
    if (sampling_.outer_paths < 1) throw ConfigError("cli", "outer paths must be >= 1");
    if (sampling_.inner_paths < 2) throw ConfigError("cli", "inner paths must be >= 2");
    if (sampling_.steps_per_year < 1) throw ConfigError("cli", "steps per year must be >= 1");

    std::error_code ec;
    fs::create_directories(opt.out_dir, ec);
    if (!fs::is_directory(opt.out_dir)) throw ConfigError("cli", "output directory " + opt.out_dir + " is not usable");
  }

  const ModelParams& params() const { return params_; }
  const Sampling& sampling() const { return sampling_; }
  const Options& options() const { return opt_; }

  McConfig mc() const {
    McConfig mc;
    mc.outer_paths = sampling_.outer_paths;
    mc.inner_paths = sampling_.inner_paths;
    mc.steps_per_year = sampling_.steps_per_year;
    mc.seed = sampling_.seed;
    return mc;
  }

  SimConfig outer(double horizon, std::size_t fixed_steps = 0) const {
    SimConfig cfg;
    cfg.n_paths = sampling_.outer_paths;
    cfg.steps_per_year = sampling_.steps_per_year;
    cfg.horizon = horizon;
    cfg.fixed_steps = fixed_steps;
    cfg.seed = sampling_.seed;
    return cfg;
  }

  SimConfig inner() const {
    SimConfig cfg;
    cfg.n_paths = sampling_.inner_paths;
    cfg.steps_per_year = sampling_.steps_per_year;
    cfg.horizon = VixConvention{}.delta;
    cfg.seed = sampling_.seed;
    return cfg;
  }

  // Outer ensemble whose grid contains every time in `times`.
  PathEnsemble simulate_covering(std::vector<double> times) const {
    if (times.empty()) throw ConfigError("cli", "no expiries given");
    for (double t : times)
      if (!(t >= 0.0)) throw ConfigError("cli", "expiries must be >= 0");
    const double horizon = *std::max_element(times.begin(), times.end());
    if (!(horizon > 0.0)) {
      return simulate(params_, ForwardCurve::parametric(params_), outer(1.0 / sampling_.steps_per_year, 1));
    }
    const std::size_t steps = aligned_steps(times, horizon, sampling_.steps_per_year);
    if (steps == 0)
      throw ConfigError("cli", "expiries cannot share one simulation grid; adjust --steps-per-year or the expiries");
    return simulate(params_, ForwardCurve::parametric(params_), outer(horizon, steps));
  }

  std::string header(const std::string& extra = {}) const {
    std::ostringstream h;
    h << "qrh " << command_ << " alpha=" << format_double(params_.alpha) << " lambda=" << format_double(params_.lambda)
      << " a=" << format_double(params_.a) << " b=" << format_double(params_.b) << " c=" << format_double(params_.c)
      << " z0=" << format_double(params_.z0) << " seed=" << sampling_.seed
      << " outer_paths=" << sampling_.outer_paths << " inner_paths=" << sampling_.inner_paths
      << " steps_per_year=" << sampling_.steps_per_year;
    if (!extra.empty()) h << ' ' << extra;
    return h.str();
  }

  std::ofstream open(const std::string& name) const {
    const fs::path path = fs::path(opt_.out_dir) / name;
    std::ofstream out(path);
    if (!out) throw ConfigError("cli", "cannot write " + path.string());
    return out;
  }

  void wrote(std::ostream& out, const std::string& name) const {
    out << (fs::path(opt_.out_dir) / name).string() << '\n';
  }

 private:
  std::string command_;
  Options opt_;
  ModelParams params_;
  Sampling sampling_;
};

std::string expiry_tag(double t) { return "T" + format_double(t); }

// ---------------------------------------------------------------------------

void cmd_simulate(const Context& ctx, std::ostream& log) {
  const double horizon = ctx.options().horizon.value_or(1.0);
  const PathEnsemble ens = simulate(ctx.params(), ForwardCurve::parametric(ctx.params()), ctx.outer(horizon));
  const std::size_t shown = std::min(ctx.options().max_paths, ens.n_paths());
  {
    auto out = ctx.open("paths.csv");
    write_paths_csv(out, ens, shown, ctx.header("horizon=" + format_double(horizon)));
    ctx.wrote(log, "paths.csv");
  }
  const std::size_t every = ctx.options().vix_every;
  if (every == 0) return;
  auto out = ctx.open("vix_paths.csv");
  out << "# " << ctx.header("horizon=" + format_double(horizon) + " vix_every=" + std::to_string(every)) << '\n';
  out << "path,t,S,VIX\n";
  const VixConvention conv;
  std::vector<std::vector<double>> vix(shown);
  std::vector<std::size_t> steps;
  for (std::size_t k = 0; k <= ens.n_steps(); k += every) steps.push_back(k);
  for (auto& row : vix) row.resize(steps.size());
  std::vector<double> iv(ctx.sampling().inner_paths);
  for (std::size_t j = 0; j < steps.size(); ++j) {
    const Restarter restarter(ens, steps[j], ctx.params(), ctx.inner());
    for (std::size_t p = 0; p < shown; ++p) {
      restarter.integrated_variance(p, iv);
      double sum = 0.0;
      for (double x : iv) sum += x;
      vix[p][j] = conv.scale * std::sqrt(sum / static_cast<double>(iv.size()) / conv.delta);
    }
  }
  for (std::size_t p = 0; p < shown; ++p)
    for (std::size_t j = 0; j < steps.size(); ++j)
      out << p << ',' << format_double(ens.grid()[steps[j]]) << ',' << format_double(std::exp(ens.log_spot(p)[steps[j]]))
          << ',' << format_double(vix[p][j]) << '\n';
  ctx.wrote(log, "vix_paths.csv");
}

void cmd_price(const Context& ctx, std::ostream& log) {
  const std::string inst = ctx.options().instrument;
  if (inst != "spx" && inst != "vix" && inst != "all") throw ConfigError("cli", "--instrument must be spx, vix or all");
  const auto expiries = parse_times(ctx.options().expiries.empty() ? "30d" : ctx.options().expiries);
  const auto ks = parse_grid(ctx.options().log_moneyness.empty() ? "-0.2:0.2:0.1" : ctx.options().log_moneyness);
  const PathEnsemble ens = ctx.simulate_covering(expiries);
  std::vector<PriceRow> rows;
  for (double t : expiries) {
    if (inst != "vix" && t > 0.0) {
      for (double k : ks) {
        const double strike = std::exp(k);
        const auto c = price_spx_option(ens, strike, t, OptionKind::call);
        const auto p = price_spx_option(ens, strike, t, OptionKind::put);
        rows.push_back({"SPX_CALL", t, k, c.value, c.std_error});
        rows.push_back({"SPX_PUT", t, k, p.value, p.std_error});
      }
    }
    if (inst != "spx") {
      const VixSamples s = vix_samples(ens, t, ctx.inner());
      const PriceEstimate f = vix_future(s);
      rows.push_back({"VIX_FUTURE", t, 0.0, f.value, f.std_error});
      for (double k : ks) {
        const double strike = f.value * std::exp(k);
        const auto c = price_vix_option(s, strike, OptionKind::call);
        const auto p = price_vix_option(s, strike, OptionKind::put);
        rows.push_back({"VIX_CALL", t, k, c.value, c.std_error});
        rows.push_back({"VIX_PUT", t, k, p.value, p.std_error});
      }
    }
  }
  auto out = ctx.open("prices.csv");
  write_price_table(out, rows, ctx.header("instrument=" + inst));
  ctx.wrote(log, "prices.csv");
}

void write_smile_csv(std::ostream& out, const std::vector<SmilePoint>& pts, const std::string& header) {
  out << "# " << header << '\n';
  out << "log_moneyness,model_vol,vol_se_lo,vol_se_hi\n";
  for (const SmilePoint& p : pts)
    out << format_double(p.log_moneyness) << ',' << format_double(p.vol.vol) << ',' << format_double(p.vol.lo) << ','
        << format_double(p.vol.hi) << '\n';
}

void cmd_smile(const Context& ctx, std::ostream& log) {
  const auto spx_t = parse_times(ctx.options().expiries.empty() ? "14d,21d,28d,35d" : ctx.options().expiries);
  const auto spx_k = parse_grid(ctx.options().log_moneyness.empty() ? "-0.2:0.05:0.025" : ctx.options().log_moneyness);
  const auto vix_t = parse_times(ctx.options().vix_expiries);
  const auto vix_k =
      parse_grid(ctx.options().vix_log_moneyness.empty() ? "-0.2:0.6:0.1" : ctx.options().vix_log_moneyness);
  std::vector<double> all = spx_t;
  all.insert(all.end(), vix_t.begin(), vix_t.end());
  for (double t : all)
    if (!(t > 0.0)) throw ConfigError("cli", "smile expiries must be > 0");
  const PathEnsemble ens = ctx.simulate_covering(all);
  for (double t : spx_t) {
    const std::string name = "smile_spx_" + expiry_tag(t) + ".csv";
    auto out = ctx.open(name);
    write_smile_csv(out, spx_smile(ens, t, spx_k), ctx.header("class=SPX expiry=" + format_double(t) + " forward=" +
                                                               format_double(ens.config().spot)));
    ctx.wrote(log, name);
  }
  for (double t : vix_t) {
    const VixSamples s = vix_samples(ens, t, ctx.inner());
    const std::string name = "smile_vix_" + expiry_tag(t) + ".csv";
    auto out = ctx.open(name);
    write_smile_csv(out, vix_smile(s, vix_k),
                    ctx.header("class=VIX expiry=" + format_double(t) + " forward=" + format_double(vix_future(s).value)));
    ctx.wrote(log, name);
  }
}

void cmd_vix_futures(const Context& ctx, std::ostream& log) {
  const auto expiries = parse_times(ctx.options().expiries.empty() ? "0,7d,14d,30d,60d" : ctx.options().expiries);
  const PathEnsemble ens = ctx.simulate_covering(expiries);
  auto out = ctx.open("vix_futures.csv");
  out << "# " << ctx.header() << '\n';
  out << "expiry,vix_future,std_error,bias_estimate,bias_corrected\n";
  for (double t : expiries) {
    const VixSamples s = vix_samples(ens, t, ctx.inner());
    const PriceEstimate f = vix_future(s);
    const VixBias b = vix_future_bias(s);
    out << format_double(t) << ',' << format_double(f.value) << ',' << format_double(f.std_error) << ','
        << format_double(b.bias) << ',' << format_double(b.corrected) << '\n';
  }
  ctx.wrote(log, "vix_futures.csv");
}

void cmd_synth(const Context& ctx, std::ostream& log) {
  SmileLayout layout;
  layout.spx_expiries = parse_times(ctx.options().expiries.empty() ? "14d,21d,28d,35d" : ctx.options().expiries);
  layout.spx_log_moneyness =
      parse_grid(ctx.options().log_moneyness.empty() ? "-0.15:0.05:0.025" : ctx.options().log_moneyness);
  layout.vix_expiries = parse_times(ctx.options().vix_expiries.empty() ? "28d" : ctx.options().vix_expiries);
  layout.vix_log_moneyness =
      parse_grid(ctx.options().vix_log_moneyness.empty() ? "-0.1:0.5:0.1" : ctx.options().vix_log_moneyness);
  const SmileSet set = synth_smiles(ctx.params(), layout, ctx.mc(), ctx.options().half_spread);
  auto out = ctx.open("smiles.csv");
  write_smile_set(out, set, ctx.header("half_spread=" + format_double(ctx.options().half_spread)));
  ctx.wrote(log, "smiles.csv");
}

void cmd_calibrate(const Context& ctx, std::ostream& log) {
  if (ctx.options().data_file.empty()) throw ConfigError("cli", "calibrate requires --data");
  const SmileSet data = read_smile_set(fs::path(ctx.options().data_file));
  data.validate(true);
  GridSpec grid = GridSpec::around(ctx.params(), ctx.options().grid_relative, ctx.options().grid_points);
  grid.rounds = ctx.options().grid_rounds;
  grid.mode = ctx.options().cartesian ? GridMode::cartesian : GridMode::coordinate;
  const McConfig mc = ctx.mc();
  CalibrationResult result = grid_search(ctx.params(), data, grid, mc);
  if (ctx.options().refine) {
    RefineOptions ro;
    ro.max_evaluations = ctx.options().max_evaluations;
    const std::vector<TraceEntry> grid_trace = result.trace;
    result = refine(result, data, mc, ro);
    result.trace.insert(result.trace.begin(), grid_trace.begin(), grid_trace.end());
  }
  const std::string header = ctx.header("data=" + ctx.options().data_file);
  {
    auto out = ctx.open("calibration_report.txt");
    write_calibration_report(out, result, header);
    ctx.wrote(log, "calibration_report.txt");
  }
  {
    auto out = ctx.open("residuals.csv");
    write_residuals_csv(out, result.detail, header);
    ctx.wrote(log, "residuals.csv");
  }
  auto out = ctx.open("trace.csv");
  write_trace_csv(out, result, header);
  ctx.wrote(log, "trace.csv");
}

std::string quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c == '\n' ? ' ' : c;
  }
  return out + "\"";
}

int fail(std::ostream& err, int status, const std::string& module, const std::string& kind, const std::string& message,
         const std::string& extra = {}) {
  err << "error: status=" << status << " module=" << module << " kind=" << kind;
  if (!extra.empty()) err << ' ' << extra;
  err << " message=" << quote(message) << '\n';
  return status;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Quadratic rough Heston engine: simulation, SPX/VIX pricing, smiles and calibration", "qrh"};
  app.require_subcommand(1, 1);
  Options opt;

  struct Entry {
    std::string name;
    std::string help;
    Defaults defaults;
    void (*fn)(const Context&, std::ostream&);
  };
  const std::vector<Entry> commands = {
      {"simulate", "Simulate (S, Z, V) paths; optionally the VIX along them", {10, 300}, cmd_simulate},
      {"price", "Price SPX and/or VIX options and VIX futures", {10000, 500}, cmd_price},
      {"smile", "Model implied-vol smiles per expiry", {10000, 500}, cmd_smile},
      {"vix-futures", "VIX futures term structure by nested simulation", {10000, 500}, cmd_vix_futures},
      {"calibrate", "Fit (alpha, lambda, a, b, c, z0) to a smile file", {30000, 300}, cmd_calibrate},
      {"synth", "Generate synthetic model smiles", {30000, 300}, cmd_synth},
  };

  for (const Entry& e : commands) {
    CLI::App* sub = app.add_subcommand(e.name, e.help);
    sub->add_option("--params", opt.params_file, "Model parameter file (key = value); defaults to the reference set");
    sub->add_option("--config", opt.config_file, "Run config file with mc.* keys");
    sub->add_option("--out", opt.out_dir, "Output directory");
    sub->add_option("--seed", opt.seed, "Random seed");
    sub->add_option("--outer-paths", opt.outer_paths, "Outer Monte Carlo paths");
    sub->add_option("--inner-paths", opt.inner_paths, "Inner paths per outer path (VIX)");
    sub->add_option("--steps-per-year", opt.steps_per_year, "Time steps per year");
    sub->add_option("--expiries", opt.expiries, "Comma list of expiries (years, or with d/w suffix)");
    sub->add_option("--log-moneyness", opt.log_moneyness, "Comma list or start:stop:step");
    if (e.name == "simulate") {
      sub->add_option("--horizon", opt.horizon, "Simulation horizon in years");
      sub->add_option("--max-paths", opt.max_paths, "Number of paths written");
      sub->add_option("--vix-every", opt.vix_every, "Also compute the VIX every n steps (0 = off)");
    }
    if (e.name == "price") sub->add_option("--instrument", opt.instrument, "spx, vix or all");
    if (e.name == "smile" || e.name == "synth") {
      sub->add_option("--vix-expiries", opt.vix_expiries, "VIX option expiries");
      sub->add_option("--vix-log-moneyness", opt.vix_log_moneyness, "VIX log-moneyness grid");
    }
    if (e.name == "synth") sub->add_option("--half-spread", opt.half_spread, "Synthetic bid/ask half spread (vol)");
    if (e.name == "calibrate") {
      sub->add_option("--data", opt.data_file, "Smile CSV")->required();
      sub->add_option("--grid-points", opt.grid_points, "Grid points per axis");
      sub->add_option("--grid-rounds", opt.grid_rounds, "Coordinate-search rounds");
      sub->add_option("--grid-relative", opt.grid_relative, "Half-width relative to the initial guess");
      sub->add_flag("--cartesian", opt.cartesian, "Full Cartesian grid instead of coordinate search");
      sub->add_flag("--refine", opt.refine, "Nelder-Mead polish after the grid");
      sub->add_option("--max-evaluations", opt.max_evaluations, "Evaluation budget of the polish");
    }
  }

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      app.exit(e, out, err);
      return kOk;
    }
    return fail(err, kConfigError, "cli", "config", e.what());
  }

  try {
    for (const Entry& e : commands) {
      if (app.got_subcommand(e.name)) {
        const Context ctx(e.name, opt, e.defaults);
        e.fn(ctx, out);
      }
    }
  } catch (const InvalidParams& e) {
    return fail(err, kConfigError, e.module(), "config", e.what(), "invariant=" + e.invariant());
  } catch (const ConfigError& e) {
    return fail(err, kConfigError, e.module(), "config", e.what());
  } catch (const Error& e) {
    return fail(err, kNumericalError, e.module(), "numerical", e.what());
  } catch (const std::exception& e) {
    return fail(err, kNumericalError, "unknown", "numerical", e.what());
  }
  return kOk;
}

}  // namespace qrh::cli
