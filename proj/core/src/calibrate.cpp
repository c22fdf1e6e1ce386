#include "qrh/calibrate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <ostream>

#include "qrh/errors.hpp"
#include "qrh/kvconfig.hpp"

namespace qrh {

void McConfig::validate() const {
  if (outer_paths < 2) throw ConfigError("calibrate", "mc.outer_paths must be >= 2");
  if (inner_paths < 2) throw ConfigError("calibrate", "mc.inner_paths must be >= 2");
  if (steps_per_year < 1) throw ConfigError("calibrate", "mc.steps_per_year must be >= 1");
  convention.validate();
}

// ---------------------------------------------------------------------------
// Model smiles

namespace {

SimConfig outer_config(const McConfig& mc, double horizon, std::size_t steps) {
  SimConfig cfg;
  cfg.n_paths = mc.outer_paths;
  cfg.steps_per_year = mc.steps_per_year;
  cfg.horizon = horizon;
  cfg.fixed_steps = steps;
  cfg.seed = mc.seed;
  return cfg;
}

SimConfig inner_config(const McConfig& mc) {
  SimConfig cfg;
  cfg.n_paths = mc.inner_paths;
  cfg.steps_per_year = mc.steps_per_year;
  cfg.horizon = mc.convention.delta;
  cfg.seed = mc.seed;
  return cfg;
}

}  // namespace

std::vector<SmilePoint> model_smile(const ModelParams& params, const SmileSet& data, const McConfig& mc) {
  params.validate();
  mc.validate();
  data.validate();
  std::vector<SmilePoint> out(data.quotes.size());
  if (data.quotes.empty()) return out;

  std::vector<double> all;
  for (const Quote& q : data.quotes) all.push_back(q.expiry);
  std::sort(all.begin(), all.end());
  all.erase(std::unique(all.begin(), all.end()), all.end());

  const ForwardCurve theta0 = ForwardCurve::parametric(params);
  const double horizon = all.back();
  const std::size_t steps = aligned_steps(all, horizon, mc.steps_per_year);

  std::vector<PathEnsemble> per_expiry;
  std::optional<PathEnsemble> shared;
  if (steps > 0) {
    shared.emplace(simulate(params, theta0, outer_config(mc, horizon, steps)));
  } else {
    for (double t : all) per_expiry.push_back(simulate(params, theta0, outer_config(mc, t, 0)));
  }
  auto ensemble_for = [&](double t) -> const PathEnsemble& {
    if (shared) return *shared;
    const auto it = std::lower_bound(all.begin(), all.end(), t);
    return per_expiry[static_cast<std::size_t>(it - all.begin())];
  };

  for (const InstrumentClass cls : {InstrumentClass::spx, InstrumentClass::vix}) {
    for (double t : data.expiries(cls)) {
      std::vector<std::size_t> idx;
      std::vector<double> ks;
      for (std::size_t i = 0; i < data.quotes.size(); ++i) {
        if (data.quotes[i].cls == cls && data.quotes[i].expiry == t) {
          idx.push_back(i);
          ks.push_back(data.quotes[i].log_moneyness);
        }
      }
      const PathEnsemble& ens = ensemble_for(t);
      std::vector<SmilePoint> pts;
      if (cls == InstrumentClass::spx) {
        pts = spx_smile(ens, t, ks, SpxEstimator::control_variate);
      } else {
        pts = vix_smile(vix_samples(ens, t, inner_config(mc), mc.convention), ks);
      }
      for (std::size_t j = 0; j < idx.size(); ++j) out[idx[j]] = pts[j];
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Objective

bool ObjectiveValue::valid() const {
  const std::size_t informative = n_included + n_excluded;
  return static_cast<double>(n_excluded) <= 0.05 * static_cast<double>(informative);
}

ObjectiveValue evaluate_objective(const ModelParams& params, const SmileSet& data, const McConfig& mc) {
  const std::vector<SmilePoint> model = model_smile(params, data, mc);
  ObjectiveValue f;
  double sums[2] = {0.0, 0.0};
  std::size_t counts[2] = {0, 0};
  f.residuals.resize(data.quotes.size());
  for (std::size_t i = 0; i < data.quotes.size(); ++i) {
    const Quote& q = data.quotes[i];
    QuoteResidual& r = f.residuals[i];
    r.quote = q;
    r.model_vol = model[i].valid ? model[i].vol.vol : std::numeric_limits<double>::quiet_NaN();
    r.residual = r.model_vol - q.mid;
    if (q.degenerate()) {
      ++f.n_degenerate;
      continue;
    }
    if (!model[i].valid) {
      ++f.n_excluded;
      continue;
    }
    r.included = true;
    ++f.n_included;
    const std::size_t c = q.cls == InstrumentClass::spx ? 0 : 1;
    sums[c] += r.residual * r.residual;
    ++counts[c];
  }
  f.spx_term = counts[0] ? sums[0] / static_cast<double>(counts[0]) : 0.0;
  f.vix_term = counts[1] ? sums[1] / static_cast<double>(counts[1]) : 0.0;
  f.value = f.spx_term + f.vix_term;
  return f;
}

double objective(const ModelParams& params, const SmileSet& data, const McConfig& mc) {
  return evaluate_objective(params, data, mc).value;
}

// ---------------------------------------------------------------------------
// Parameter vector helpers

std::string param_name(std::size_t index) {
  static const char* names[kParamCount] = {"alpha", "lambda", "a", "b", "c", "z0"};
  if (index >= kParamCount) throw DomainError("calibrate", "parameter index out of range");
  return names[index];
}

double get_param(const ModelParams& p, std::size_t index) {
  switch (index) {
    case 0: return p.alpha;
    case 1: return p.lambda;
    case 2: return p.a;
    case 3: return p.b;
    case 4: return p.c;
    case 5: return p.z0;
    default: throw DomainError("calibrate", "parameter index out of range");
  }
}

void set_param(ModelParams& p, std::size_t index, double value) {
  switch (index) {
    case 0: p.alpha = value; break;
    case 1: p.lambda = value; break;
    case 2: p.a = value; break;
    case 3: p.b = value; break;
    case 4: p.c = value; break;
    case 5: p.z0 = value; break;
    default: throw DomainError("calibrate", "parameter index out of range");
  }
}

bool ParamBounds::contains(const ModelParams& p) const {
  for (std::size_t i = 0; i < kParamCount; ++i) {
    const double v = get_param(p, i);
    if (!(v >= lower[i] && v <= upper[i])) return false;
  }
  return true;
}

ModelParams ParamBounds::clamp(ModelParams p) const {
  for (std::size_t i = 0; i < kParamCount; ++i) set_param(p, i, std::clamp(get_param(p, i), lower[i], upper[i]));
  return p;
}

GridSpec GridSpec::around(const ModelParams& nu0, double relative, int points) {
  GridSpec spec;
  for (std::size_t i = 0; i < kParamCount; ++i) {
    const double v = std::fabs(get_param(nu0, i));
    spec.axes[i] = GridAxis{v > 0.0 ? relative * v : relative, points};
  }
  return spec;
}

// ---------------------------------------------------------------------------
// Search

namespace {

// Memoised objective with an evaluation trace in first-evaluation order.
class Evaluator {
 public:
  Evaluator(const SmileSet& data, const McConfig& mc) : data_(data), mc_(mc) {}

  std::size_t operator()(const ModelParams& p) {
    for (std::size_t i = 0; i < trace_.size(); ++i)
      if (trace_[i].params == p) return i;
    ObjectiveValue v = evaluate_objective(p, data_, mc_);
    trace_.push_back(TraceEntry{p, v.value, v.valid()});
    details_.push_back(std::move(v));
    return trace_.size() - 1;
  }

  // Valid points rank before invalid ones, then by objective.
  bool better(std::size_t i, std::size_t j) const {
    if (trace_[i].valid != trace_[j].valid) return trace_[i].valid;
    return trace_[i].objective < trace_[j].objective;
  }

  double score(std::size_t i) const {
    return trace_[i].valid ? trace_[i].objective : std::numeric_limits<double>::infinity();
  }

  std::size_t best() const {
    std::size_t b = 0;
    for (std::size_t i = 1; i < trace_.size(); ++i)
      if (better(i, b)) b = i;
    return b;
  }

  const std::vector<TraceEntry>& trace() const { return trace_; }
  ObjectiveValue& detail(std::size_t i) { return details_[i]; }

 private:
  const SmileSet& data_;
  const McConfig& mc_;
  std::vector<TraceEntry> trace_;
  std::vector<ObjectiveValue> details_;
};

void check_feasible(const ModelParams& p, const ParamBounds& bounds, const std::string& what) {
  try {
    p.validate();
  } catch (const InvalidParams& e) {
    throw ConfigError("calibrate", what + " violates model invariant '" + e.invariant() + "'");
  }
  if (!bounds.contains(p)) throw ConfigError("calibrate", what + " lies outside the calibration bounds");
}

std::vector<double> axis_values(double centre, const GridAxis& axis) {
  if (axis.points <= 1 || axis.half_width == 0.0) return {centre};
  std::vector<double> v(static_cast<std::size_t>(axis.points));
  for (int j = 0; j < axis.points; ++j)
    v[static_cast<std::size_t>(j)] = centre + axis.half_width * (2.0 * j / (axis.points - 1) - 1.0);
  return v;
}

CalibrationResult finish(Evaluator& eval, const McConfig& mc, std::vector<double> accepted, std::string stage) {
  const std::size_t b = eval.best();
  CalibrationResult r;
  r.params = eval.trace()[b].params;
  r.objective = eval.trace()[b].objective;
  r.detail = std::move(eval.detail(b));
  r.trace = eval.trace();
  r.accepted = std::move(accepted);
  r.mc = mc;
  r.stage = std::move(stage);
  return r;
}

}  // namespace

CalibrationResult grid_search(const ModelParams& nu0, const SmileSet& data, const GridSpec& spec, const McConfig& mc) {
  mc.validate();
  data.validate();
  check_feasible(nu0, spec.bounds, "initial guess");
  for (const GridAxis& a : spec.axes)
    if (a.points < 1 || !(a.half_width >= 0.0)) throw ConfigError("calibrate", "grid axes need >= 1 point and a half-width >= 0");

  // Every point of the first round is known up front and must be admissible.
  std::array<std::vector<double>, kParamCount> first;
  for (std::size_t i = 0; i < kParamCount; ++i) {
    first[i] = axis_values(get_param(nu0, i), spec.axes[i]);
    for (double v : first[i]) {
      ModelParams p = nu0;
      set_param(p, i, v);
      check_feasible(p, spec.bounds, "grid point " + param_name(i) + " = " + format_double(v));
    }
  }

  Evaluator eval(data, mc);
  std::vector<double> accepted;
  std::size_t centre = eval(nu0);
  accepted.push_back(eval.trace()[centre].objective);

  if (spec.mode == GridMode::cartesian) {
    std::array<std::size_t, kParamCount> digit{};
    while (true) {
      ModelParams p = nu0;
      for (std::size_t i = 0; i < kParamCount; ++i) set_param(p, i, first[i][digit[i]]);
      const std::size_t k = eval(p);
      if (eval.better(k, centre)) {
        centre = k;
        accepted.push_back(eval.trace()[k].objective);
      }
      std::size_t i = 0;
      for (; i < kParamCount; ++i) {
        if (++digit[i] < first[i].size()) break;
        digit[i] = 0;
      }
      if (i == kParamCount) break;
    }
    return finish(eval, mc, std::move(accepted), "grid");
  }

  std::array<GridAxis, kParamCount> axes = spec.axes;
  for (int round = 0; round < spec.rounds; ++round) {
    for (std::size_t i = 0; i < kParamCount; ++i) {
      const ModelParams base = eval.trace()[centre].params;
      for (double v : axis_values(get_param(base, i), axes[i])) {
        ModelParams p = base;
        set_param(p, i, v);
        if (round > 0) p = spec.bounds.clamp(p);
        const std::size_t k = eval(p);
        if (eval.better(k, centre)) {
          centre = k;
          accepted.push_back(eval.trace()[k].objective);
        }
      }
    }
    for (GridAxis& a : axes) a.half_width *= spec.shrink;
  }
  return finish(eval, mc, std::move(accepted), "grid");
}

CalibrationResult refine(const CalibrationResult& start, const SmileSet& data, const McConfig& mc,
                         const RefineOptions& options) {
  mc.validate();
  check_feasible(start.params, options.bounds, "refine start");
  const ParamBounds& bounds = options.bounds;

  std::array<double, kParamCount> scale{};
  for (std::size_t i = 0; i < kParamCount; ++i) {
    const double v = std::fabs(get_param(start.params, i));
    scale[i] = v > 0.0 ? v : 1.0;
  }
  using Point = std::array<double, kParamCount>;
  auto to_params = [&](const Point& x) {
    ModelParams p = start.params;
    for (std::size_t i = 0; i < kParamCount; ++i) {
      double v = x[i] * scale[i];
      if (v < bounds.lower[i]) v = bounds.lower[i] + (bounds.lower[i] - v);
      if (v > bounds.upper[i]) v = bounds.upper[i] - (v - bounds.upper[i]);
      set_param(p, i, std::clamp(v, bounds.lower[i], bounds.upper[i]));
    }
    return p;
  };
  auto to_point = [&](const ModelParams& p) {
    Point x{};
    for (std::size_t i = 0; i < kParamCount; ++i) x[i] = get_param(p, i) / scale[i];
    return x;
  };

  Evaluator eval(data, mc);
  std::vector<double> accepted;
  auto f = [&](const Point& x) { return eval.score(eval(to_params(x))); };

  constexpr std::size_t n = kParamCount;
  std::vector<Point> simplex(n + 1);
  std::vector<double> fv(n + 1);
  simplex[0] = to_point(start.params);
  fv[0] = f(simplex[0]);
  for (std::size_t i = 0; i < n; ++i) {
    simplex[i + 1] = simplex[0];
    simplex[i + 1][i] += options.initial_step;
    // Step inwards when the outward vertex would leave the box.
    if (simplex[i + 1][i] * scale[i] > bounds.upper[i]) simplex[i + 1][i] = simplex[0][i] - options.initial_step;
    fv[i + 1] = f(simplex[i + 1]);
  }

  std::vector<std::size_t> order(n + 1);
  auto sort_simplex = [&] {
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return fv[i] < fv[j]; });
    std::vector<Point> s(n + 1);
    std::vector<double> v(n + 1);
    for (std::size_t i = 0; i <= n; ++i) {
      s[i] = simplex[order[i]];
      v[i] = fv[order[i]];
    }
    simplex.swap(s);
    fv.swap(v);
  };
  sort_simplex();
  accepted.push_back(fv[0]);

  auto combine = [](const Point& a, const Point& b, double t) {
    Point r{};
    for (std::size_t i = 0; i < kParamCount; ++i) r[i] = a[i] + t * (b[i] - a[i]);
    return r;
  };

  while (static_cast<int>(eval.trace().size()) < options.max_evaluations) {
    if (std::isfinite(fv[n]) && fv[n] - fv[0] <= options.tolerance) break;
    double diameter = 0.0;
    for (std::size_t v = 1; v <= n; ++v)
      for (std::size_t i = 0; i < n; ++i) diameter = std::max(diameter, std::fabs(simplex[v][i] - simplex[0][i]));
    if (diameter < 1e-7) break;

    Point centroid{};
    for (std::size_t v = 0; v < n; ++v)
      for (std::size_t i = 0; i < n; ++i) centroid[i] += simplex[v][i] / static_cast<double>(n);

    const Point xr = combine(centroid, simplex[n], -1.0);
    const double fr = f(xr);
    if (fr < fv[0]) {
      const Point xe = combine(centroid, simplex[n], -2.0);
      const double fe = f(xe);
      if (fe < fr) {
        simplex[n] = xe;
        fv[n] = fe;
      } else {
        simplex[n] = xr;
        fv[n] = fr;
      }
    } else if (fr < fv[n - 1]) {
      simplex[n] = xr;
      fv[n] = fr;
    } else {
      const bool outside = fr < fv[n];
      const Point xc = outside ? combine(centroid, simplex[n], -0.5) : combine(centroid, simplex[n], 0.5);
      const double fc = f(xc);
      if (fc < std::min(fr, fv[n])) {
        simplex[n] = xc;
        fv[n] = fc;
      } else {
        for (std::size_t v = 1; v <= n; ++v) {
          simplex[v] = combine(simplex[0], simplex[v], 0.5);
          fv[v] = f(simplex[v]);
        }
      }
    }
    sort_simplex();
    if (fv[0] < accepted.back()) accepted.push_back(fv[0]);
  }

  // The start point is the first evaluation, so the result never ranks below it.
  return finish(eval, mc, std::move(accepted), "refine");
}

// ---------------------------------------------------------------------------
// Synthetic smiles

SmileSet synth_smiles(const ModelParams& params, const SmileLayout& layout, const McConfig& mc, double half_spread) {
  SmileSet skeleton;
  for (double t : layout.spx_expiries)
    for (double k : layout.spx_log_moneyness) skeleton.quotes.push_back(Quote{InstrumentClass::spx, t, k, 0, 0, 0});
  for (double t : layout.vix_expiries)
    for (double k : layout.vix_log_moneyness) skeleton.quotes.push_back(Quote{InstrumentClass::vix, t, k, 0, 0, 0});
  skeleton.validate();

  const std::vector<SmilePoint> model = model_smile(params, skeleton, mc);
  SmileSet out;
  out.label = "synthetic";
  for (std::size_t i = 0; i < skeleton.quotes.size(); ++i) {
    Quote q = skeleton.quotes[i];
    if (!model[i].valid) {
      if (q.cls == InstrumentClass::spx)
        throw RangeError("calibrate", "synthetic SPX quote at expiry " + format_double(q.expiry) +
                                          ", log-moneyness " + format_double(q.log_moneyness) +
                                          " has no invertible model price");
      out.quotes.push_back(q);  // degenerate: all vols zero
      continue;
    }
    q.mid = model[i].vol.vol;
    q.bid = std::max(0.0, q.mid - half_spread);
    q.ask = q.mid + half_spread;
    out.quotes.push_back(q);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Reports

void write_calibration_report(std::ostream& out, const CalibrationResult& r, const std::string& header_comment) {
  if (!header_comment.empty()) out << "# " << header_comment << '\n';
  out << params_to_config(r.params);
  out << "objective = " << format_double(r.objective) << '\n';
  out << "spx_term = " << format_double(r.detail.spx_term) << '\n';
  out << "vix_term = " << format_double(r.detail.vix_term) << '\n';
  out << "quotes_included = " << r.detail.n_included << '\n';
  out << "quotes_excluded = " << r.detail.n_excluded << '\n';
  out << "quotes_degenerate = " << r.detail.n_degenerate << '\n';
  out << "valid = " << (r.valid() ? "true" : "false") << '\n';
  out << "stage = " << r.stage << '\n';
  out << "evaluations = " << r.trace.size() << '\n';
  if (!r.trace.empty()) {
    for (std::size_t i = 0; i < kParamCount; ++i)
      out << "nu0." << param_name(i) << " = " << format_double(get_param(r.trace.front().params, i)) << '\n';
    out << "nu0.objective = " << format_double(r.trace.front().objective) << '\n';
  }
  out << "mc.outer_paths = " << r.mc.outer_paths << '\n';
  out << "mc.inner_paths = " << r.mc.inner_paths << '\n';
  out << "mc.steps_per_year = " << r.mc.steps_per_year << '\n';
  out << "mc.seed = " << r.mc.seed << '\n';
  out << "mc.vix_window = " << format_double(r.mc.convention.delta) << '\n';
}

void write_residuals_csv(std::ostream& out, const ObjectiveValue& value, const std::string& header_comment) {
  if (!header_comment.empty()) out << "# " << header_comment << '\n';
  out << "class,expiry_years,log_moneyness,mid_vol,model_vol,residual,included\n";
  for (const QuoteResidual& r : value.residuals)
    out << to_string(r.quote.cls) << ',' << format_double(r.quote.expiry) << ','
        << format_double(r.quote.log_moneyness) << ',' << format_double(r.quote.mid) << ','
        << format_double(r.model_vol) << ',' << format_double(r.residual) << ',' << (r.included ? 1 : 0) << '\n';
}

void write_trace_csv(std::ostream& out, const CalibrationResult& result, const std::string& header_comment) {
  if (!header_comment.empty()) out << "# " << header_comment << '\n';
  out << "index,alpha,lambda,a,b,c,z0,objective,valid\n";
  for (std::size_t k = 0; k < result.trace.size(); ++k) {
    const TraceEntry& e = result.trace[k];
    out << k;
    for (std::size_t i = 0; i < kParamCount; ++i) out << ',' << format_double(get_param(e.params, i));
    out << ',' << format_double(e.objective) << ',' << (e.valid ? 1 : 0) << '\n';
  }
}

}  // namespace qrh
