#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "erp/allocate.hpp"
#include "erp/hurst.hpp"
#include "erp/marketdata.hpp"
#include "erp/predictors.hpp"
#include "erp/regime.hpp"

namespace erp::pipeline {

/// Fully resolved pipeline settings.
struct PipelineConfig {
  std::filesystem::path daily;
  std::filesystem::path macro;
  std::filesystem::path recessions;

  FdmaaConfig hurst;
  unsigned threads = 1;

  double h_threshold = 0.5;
  ShockConfig shocks;
  int insample_before = 3;
  int insample_after = 3;
  int oos_horizon = 3;

  PremiumConstruction premium = PremiumConstruction::kTotalReturn;
  MaConvention ma_convention = MaConvention::kStandard;

  YearMonth oos_start{1966, 1};
  int min_window = 60;
  int k_max = 3;

  AllocationConfig allocation;  // cost_bps is the "with costs" level
  double holding_cost_bps = 50.0;

  int bootstrap_replications = 2000;
  std::uint64_t seed = 20240101;

  YearMonth subsample_split{1994, 1};
  double trim = 0.05;
  double trim_quantile = 0.05;
  std::vector<double> h_conditions{0.5, 0.6};

  std::filesystem::path output_dir = "erp-out";

  /// Canonical "key = value" lines, sorted by key. Input paths appear as
  /// given; output.dir is left out of canonical_text().
  std::map<std::string, std::string> canonical;
  std::string canonical_text() const;
};

/// Raw key/value pairs with their source positions.
struct RawEntry {
  std::string value;
  std::string origin;  ///< "file:line:col", "env:NAME" or "flag"
};
using RawConfig = std::map<std::string, RawEntry>;

/// Parses the flat key/value format: `[section]` headers, `key = value`
/// lines, dotted keys, `#` comments. Throws ConfigError with file:line:col.
RawConfig parse_config_text(const std::string& text, const std::string& source);
RawConfig parse_config_file(const std::filesystem::path& path);

/// Environment variable consulted for a key: ERP_ + upper-case key with '.'
/// replaced by '_' (hurst.n_min -> ERP_HURST_N_MIN).
std::string env_name(const std::string& key);

/// All keys the schema accepts.
const std::vector<std::string>& known_keys();

/// Applies environment overrides, then `flags`, validates against the
/// schema and resolves paths relative to `base_dir`.
PipelineConfig resolve_config(RawConfig raw, const std::map<std::string, std::string>& flags,
                              const std::filesystem::path& base_dir, bool use_environment = true);

/// parse_config_file + resolve_config with the file's directory as base.
PipelineConfig load_config(const std::filesystem::path& path, const std::map<std::string, std::string>& flags = {},
                           bool use_environment = true);

}  // namespace erp::pipeline
