#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "erp/allocate.hpp"
#include "erp/evaluate.hpp"
#include "erp/garch.hpp"
#include "erp/hurst.hpp"
#include "erp/marketdata.hpp"
#include "erp/predictors.hpp"
#include "erp/regime.hpp"
#include "pipeline/config.hpp"

namespace erp::pipeline {

/// Failure inside one pipeline stage; stage() names it ("macro", "hurst", ...).
class StageError : public std::runtime_error {
 public:
  StageError(std::string stage, const std::string& what)
      : std::runtime_error("[" + stage + "] " + what), stage_(std::move(stage)) {}
  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

enum class Stage { kIngest, kGarch, kHurst, kRegime, kPredictors, kInsample, kOos, kAllocate, kReport };

/// Parses a stage or subcommand name; "all" maps to kReport.
std::optional<Stage> parse_stage(const std::string& name);
const char* stage_name(Stage s);

struct SummaryRow {
  int table = 1;
  std::string variable;
  std::size_t n = 0;
  double mean = 0.0;
  double sd = 0.0;
  double min = 0.0;
  double max = 0.0;
  double ac1 = 0.0;
};

/// Evaluation timeline: consecutive months where every predictor and the
/// premium are defined.
struct Timeline {
  std::vector<YearMonth> months;
  std::vector<double> premium;  ///< percent
  std::vector<double> rf;       ///< monthly risk-free rate, fraction
  Matrix x;                     ///< months x 28
  std::vector<std::string> names;
  std::size_t size() const { return months.size(); }
};

struct AllocationRow {
  std::string model;
  double cost_bps = 0.0;
  double mean_turnover = 0.0;
  std::vector<std::pair<std::string, std::optional<double>>> gains;
};

struct RobustnessRow {
  std::string procedure;
  std::string model;
  std::string mask;
  std::size_t months = 0;
  std::optional<double> r2_os;
  std::optional<ClarkWest> cw;
  std::optional<double> msfe_model;
  std::optional<double> msfe_ha;
  std::optional<double> cer_gain;
};

struct AllocationOverrides {
  std::optional<double> kappa;
  std::optional<double> cost_bps;
  std::vector<std::string> masks;  ///< empty: all
};

/// Runs stages on demand (each at most once) and writes their outputs into
/// cfg.output_dir. Results stay accessible in memory.
class Pipeline {
 public:
  explicit Pipeline(PipelineConfig cfg, AllocationOverrides overrides = {});

  /// Runs `target` and everything it depends on, then writes manifest.json.
  void run(Stage target);

  const PipelineConfig& config() const { return cfg_; }

  // Stage accessors; each computes on first use.
  const DailySeries& daily();
  const MacroPanel& macro();
  const RecessionCalendar& recessions();
  const PremiumSeries& premium();
  const GarchParams& garch();
  const HurstSeries& hurst();
  const BullishSeries& bullish();
  const Shocks& shocks();
  const PredictorPanel& predictors();
  const Timeline& timeline();
  const std::vector<InSampleRow>& insample();
  const std::vector<ForecastSet>& forecasts();
  const std::vector<OosRow>& oos();
  const std::vector<AllocationRow>& allocation();
  const std::vector<HoldingCell>& holding();
  const std::vector<RobustnessRow>& robustness();
  const std::vector<SummaryRow>& summary();

  /// Output files written so far, relative to the output directory.
  const std::vector<std::string>& written() const { return written_; }

 private:
  struct Cache;
  void write_file(const std::string& name, const std::string& contents);
  std::vector<NamedMask> oos_masks_for(const std::vector<YearMonth>& months) const;
  PortfolioTrack track_for(const ForecastSet& fs, bool use_ha, double cost_bps);
  void write_manifest();

  PipelineConfig cfg_;
  AllocationOverrides overrides_;
  std::vector<std::string> written_;
  std::shared_ptr<Cache> cache_;
};

}  // namespace erp::pipeline
