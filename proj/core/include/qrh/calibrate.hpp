#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "qrh/model.hpp"
#include "qrh/pricing.hpp"
#include "qrh/smileset.hpp"

namespace qrh {

/// Sampling configuration of one objective evaluation. The seed is shared by
/// every evaluation of a calibration (common random numbers), which makes the
/// objective a deterministic function of the parameters.
struct McConfig {
  std::size_t outer_paths = 30000;
  std::size_t inner_paths = 300;
  int steps_per_year = 500;
  std::uint64_t seed = 1;
  VixConvention convention;

  void validate() const;
};

/// Model implied vol for every quote of `data`.
///
/// One outer ensemble is simulated on a grid containing every expiry when the
/// step count can be adjusted (by at most a factor 4) to make them all grid
/// points; otherwise each expiry gets its own ensemble. SPX vols use the
/// control-variate estimator on the forward S_0; VIX vols use the nested VIX
/// samples with the model VIX future as forward. Quotes are out of the money
/// (puts below the forward). Points whose price cannot be inverted are
/// returned with valid = false.
std::vector<SmilePoint> model_smile(const ModelParams& params, const SmileSet& data, const McConfig& mc);

struct QuoteResidual {
  Quote quote;
  double model_vol = 0.0;
  double residual = 0.0;  // model_vol - mid
  bool included = false;
};

struct ObjectiveValue {
  double value = 0.0;  // spx_term + vix_term
  double spx_term = 0.0;
  double vix_term = 0.0;
  std::size_t n_included = 0;
  std::size_t n_excluded = 0;  // model price not invertible
  std::size_t n_degenerate = 0;
  std::vector<QuoteResidual> residuals;

  /// More than 5% of the informative quotes excluded.
  bool valid() const;
};

/// F = mean over SPX quotes of (mid - model)^2 + mean over VIX quotes of the
/// same, each mean taken over the quotes that could be inverted; an empty
/// class contributes 0. Degenerate quotes are skipped.
ObjectiveValue evaluate_objective(const ModelParams& params, const SmileSet& data, const McConfig& mc);
double objective(const ModelParams& params, const SmileSet& data, const McConfig& mc);

enum class Param : std::size_t { alpha, lambda, a, b, c, z0 };
inline constexpr std::size_t kParamCount = 6;
std::string param_name(std::size_t index);
double get_param(const ModelParams& params, std::size_t index);
void set_param(ModelParams& params, std::size_t index, double value);

/// Search box of the calibration. alpha stays inside (1/2, 1) where the
/// parametric theta0 exists.
struct ParamBounds {
  std::array<double, kParamCount> lower{0.501, 1e-4, 0.0, 0.0, 1e-6, -10.0};
  std::array<double, kParamCount> upper{0.999, 100.0, 100.0, 10.0, 10.0, 10.0};

  bool contains(const ModelParams& params) const;
  ModelParams clamp(ModelParams params) const;
};

struct GridAxis {
  double half_width = 0.0;
  int points = 1;
};

enum class GridMode { coordinate, cartesian };

/// Grid centred on nu0. In coordinate mode each round sweeps the axes in
/// order, moving the centre to the best point of each sweep, and the
/// half-widths shrink by `shrink` between rounds. Cartesian mode evaluates the
/// full product grid once.
struct GridSpec {
  std::array<GridAxis, kParamCount> axes{};
  int rounds = 2;
  double shrink = 0.5;
  GridMode mode = GridMode::coordinate;
  ParamBounds bounds;

  /// Half-widths equal to `relative` times |nu0_i| (or `relative` itself when
  /// nu0_i is 0), `points` points per axis.
  static GridSpec around(const ModelParams& nu0, double relative = 0.1, int points = 5);
};

struct TraceEntry {
  ModelParams params;
  double objective = 0.0;
  bool valid = true;
};

struct CalibrationResult {
  ModelParams params;
  double objective = 0.0;
  ObjectiveValue detail;
  std::vector<TraceEntry> trace;        // every distinct evaluation, trace[0] is the start
  std::vector<double> accepted;         // best objective after each accepted step
  McConfig mc;
  std::string stage;                    // "grid" or "refine"

  bool valid() const { return detail.valid(); }
};

/// Grid minimisation of the objective around nu0. Returns the best point of
/// the trace (points flagged invalid rank after valid ones), so the result
/// objective is never above F(nu0) unless nu0 itself is invalid.
/// Throws ConfigError if nu0 or any first-round grid point lies outside the
/// bounds or violates the model invariants.
CalibrationResult grid_search(const ModelParams& nu0, const SmileSet& data, const GridSpec& spec, const McConfig& mc);

struct RefineOptions {
  int max_evaluations = 150;
  double initial_step = 0.05;  // relative simplex size
  double tolerance = 1e-10;    // stop when the simplex objective spread falls below this
  ParamBounds bounds;
};

/// Nelder-Mead polish from start.params under the same random numbers; points
/// leaving the bounds are reflected back into them. The returned objective is
/// never above start.objective.
CalibrationResult refine(const CalibrationResult& start, const SmileSet& data, const McConfig& mc,
                         const RefineOptions& options = {});

/// Expiries and log-moneyness grid per class for synthetic smiles.
struct SmileLayout {
  std::vector<double> spx_expiries;
  std::vector<double> spx_log_moneyness;
  std::vector<double> vix_expiries;
  std::vector<double> vix_log_moneyness;
};

/// Synthetic quotes priced by the model: mid is the model vol and bid/ask are
/// mid -+ `half_spread`. VIX quotes whose price cannot be inverted (no
/// optionality, e.g. a = 0) are emitted as degenerate zero quotes; an SPX
/// quote that cannot be inverted throws RangeError.
SmileSet synth_smiles(const ModelParams& params, const SmileLayout& layout, const McConfig& mc,
                      double half_spread = 0.005);

/// Key-value report (fitted parameters, objective terms, counts, sampling sizes).
void write_calibration_report(std::ostream& out, const CalibrationResult& result, const std::string& header_comment);
/// CSV `class,expiry_years,log_moneyness,mid_vol,model_vol,residual,included`.
void write_residuals_csv(std::ostream& out, const ObjectiveValue& value, const std::string& header_comment);
/// CSV of the evaluation trace: index, the six parameters, objective, valid.
void write_trace_csv(std::ostream& out, const CalibrationResult& result, const std::string& header_comment);

}  // namespace qrh
