#include <cstdlib>
#include <string>

#include <gtest/gtest.h>

#include "erp/error.hpp"
#include "pipeline/config.hpp"

using namespace erp;
using namespace erp::pipeline;

namespace {

const char* kMinimal =
    "[data]\n"
    "daily = d.csv\n"
    "macro = m.csv\n"
    "recessions = r.csv\n";

std::string error_of(const std::string& text) {
  try {
    parse_config_text(text, "cfg.ini");
  } catch (const ConfigError& e) {
    return e.what();
  }
  return {};
}

std::string resolve_error(const std::string& text, const std::map<std::string, std::string>& flags = {}) {
  try {
    resolve_config(parse_config_text(text, "cfg.ini"), flags, "/base", false);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST(ConfigParse, SectionsAndDottedKeys) {
  const auto raw = parse_config_text(
      "# comment\n[hurst]\nwindow = 250  # trailing\n\n[output]\ndir = \"out dir\"\n",
      "cfg.ini");
  EXPECT_EQ(raw.at("hurst.window").value, "250");
  EXPECT_EQ(raw.at("hurst.window").origin, "cfg.ini:3:10");
  EXPECT_EQ(raw.at("output.dir").value, "out dir");
}

TEST(ConfigParse, TopLevelDottedKeys) {
  const auto raw = parse_config_text("regime.h_threshold = 0.6\n", "cfg.ini");
  EXPECT_EQ(raw.at("regime.h_threshold").value, "0.6");
  EXPECT_NE(error_of("[hurst]\nregime.h_threshold = 0.6\n").find("hurst.regime.h_threshold"), std::string::npos);
}

TEST(ConfigParse, ErrorsCarryPositions) {
  EXPECT_NE(error_of("[hurst]\nwindow 250\n").find("cfg.ini:2:1"), std::string::npos);
  EXPECT_NE(error_of("[hurst\n").find("cfg.ini:1:1"), std::string::npos);
  const auto unknown = error_of("\n[hurst]\n  windw = 3\n");
  EXPECT_NE(unknown.find("cfg.ini:3:3"), std::string::npos) << unknown;
  EXPECT_NE(unknown.find("hurst.windw"), std::string::npos);
  const auto dup = error_of("[oos]\nstart = 1966-01\nstart = 1970-01\n");
  EXPECT_NE(dup.find("cfg.ini:3:1"), std::string::npos);
  EXPECT_NE(dup.find("cfg.ini:2:9"), std::string::npos);
}

TEST(ConfigResolve, DefaultsAndRelativePaths) {
  const auto cfg = resolve_config(parse_config_text(kMinimal, "cfg.ini"), {}, "/base", false);
  EXPECT_EQ(cfg.daily, std::filesystem::path("/base/d.csv"));
  EXPECT_EQ(cfg.hurst.window, 215);
  EXPECT_EQ(cfg.hurst.n_min, 5);
  EXPECT_EQ(cfg.hurst.n_max, 43);
  EXPECT_EQ(cfg.hurst.phi, 30);
  EXPECT_EQ(cfg.oos_start, (YearMonth{1966, 1}));
  EXPECT_EQ(cfg.allocation.kappa, 5.0);
  EXPECT_EQ(cfg.allocation.w_max, 1.5);
  EXPECT_EQ(cfg.allocation.variance_window, 60);
  EXPECT_EQ(cfg.bootstrap_replications, 2000);
  EXPECT_EQ(cfg.shocks.threshold, 1.0);
  EXPECT_EQ(cfg.h_conditions, (std::vector<double>{0.5, 0.6}));
}

TEST(ConfigResolve, MissingRequiredKey) {
  EXPECT_NE(resolve_error("[data]\ndaily = d.csv\nmacro = m.csv\n").find("data.recessions"), std::string::npos);
}

TEST(ConfigResolve, BadValuesNamePosition) {
  const auto e = resolve_error(std::string(kMinimal) + "[hurst]\nwindow = abc\n");
  EXPECT_NE(e.find("cfg.ini:6:10"), std::string::npos) << e;
  EXPECT_NE(e.find("hurst.window"), std::string::npos);
  EXPECT_FALSE(resolve_error(std::string(kMinimal) + "[hurst]\nn_max = 400\n").empty());
  EXPECT_FALSE(resolve_error(std::string(kMinimal) + "[oos]\nstart = 1966-13\n").empty());
  EXPECT_FALSE(resolve_error(std::string(kMinimal) + "[hurst]\nsegment_rule = n+1\n").empty());
  EXPECT_FALSE(resolve_error(std::string(kMinimal) + "[allocate]\nkappa = -1\n").empty());
}

TEST(ConfigResolve, FlagsOverrideFile) {
  const auto cfg = resolve_config(parse_config_text(std::string(kMinimal) + "[hurst]\nwindow = 250\n", "cfg.ini"),
                                  {{"hurst.window", "300"}, {"data.daily", "rel.csv"}}, "/base", false);
  EXPECT_EQ(cfg.hurst.window, 300);
  EXPECT_EQ(cfg.daily, std::filesystem::path("rel.csv"));
  EXPECT_NE(resolve_error(kMinimal, {{"nope.key", "1"}}).find("nope.key"), std::string::npos);
}

TEST(ConfigResolve, EnvironmentSitsBetweenFileAndFlags) {
  EXPECT_EQ(env_name("hurst.n_min"), "ERP_HURST_N_MIN");
  ::setenv("ERP_HURST_N_MIN", "7", 1);
  ::setenv("ERP_HURST_PHI", "20", 1);
  const auto raw = parse_config_text(std::string(kMinimal) + "[hurst]\nn_min = 6\nphi = 25\n", "cfg.ini");
  const auto cfg = resolve_config(raw, {{"hurst.phi", "10"}}, "/base", true);
  ::unsetenv("ERP_HURST_N_MIN");
  ::unsetenv("ERP_HURST_PHI");
  EXPECT_EQ(cfg.hurst.n_min, 7);
  EXPECT_EQ(cfg.hurst.phi, 10);
  const auto ignored = resolve_config(raw, {}, "/base", false);
  EXPECT_EQ(ignored.hurst.n_min, 6);
}

TEST(ConfigResolve, EnvironmentErrorsNameTheVariable) {
  ::setenv("ERP_OOS_K_MAX", "three", 1);
  std::string what;
  try {
    resolve_config(parse_config_text(kMinimal, "cfg.ini"), {}, "/base", true);
  } catch (const ConfigError& e) {
    what = e.what();
  }
  ::unsetenv("ERP_OOS_K_MAX");
  EXPECT_NE(what.find("env:ERP_OOS_K_MAX"), std::string::npos) << what;
}

TEST(ConfigResolve, CanonicalTextIgnoresOutputDir) {
  const auto raw = parse_config_text(kMinimal, "cfg.ini");
  const auto a = resolve_config(raw, {{"output.dir", "x"}}, "/base", false);
  const auto b = resolve_config(raw, {{"output.dir", "y"}}, "/base", false);
  EXPECT_EQ(a.canonical_text(), b.canonical_text());
  const auto c = resolve_config(raw, {{"bootstrap.seed", "5"}}, "/base", false);
  EXPECT_NE(a.canonical_text(), c.canonical_text());
  const auto d = resolve_config(raw, {{"allocate.kappa", "5.0"}}, "/base", false);
  EXPECT_EQ(a.canonical_text(), d.canonical_text());
}

TEST(ConfigResolve, EveryKnownKeyHasADefaultOrIsRequired) {
  const auto cfg = resolve_config(parse_config_text(kMinimal, "cfg.ini"), {}, "/base", false);
  for (const auto& k : known_keys()) EXPECT_TRUE(cfg.canonical.count(k)) << k;
}
