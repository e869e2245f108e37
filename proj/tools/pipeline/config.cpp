#include "pipeline/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "erp/error.hpp"

namespace erp::pipeline {

namespace {

std::string shortest(double v) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

enum class Kind { kInt, kUnsigned, kDouble, kPath, kMonth, kBool, kChoice, kDoubleList };

struct KeySpec {
  const char* key;
  Kind kind;
  const char* fallback;  // nullptr: required
  std::vector<std::string> choices = {};
};

const std::vector<KeySpec>& schema() {
  static const std::vector<KeySpec> s = {
      {"data.daily", Kind::kPath, nullptr},
      {"data.macro", Kind::kPath, nullptr},
      {"data.recessions", Kind::kPath, nullptr},
      {"hurst.window", Kind::kInt, "215"},
      {"hurst.n_min", Kind::kInt, "5"},
      {"hurst.n_max", Kind::kInt, "43"},
      {"hurst.phi", Kind::kInt, "30"},
      {"hurst.segment_rule", Kind::kChoice, "n-1", {"n-1", "n"}},
      {"hurst.threads", Kind::kUnsigned, "1"},
      {"regime.h_threshold", Kind::kDouble, "0.5"},
      {"regime.shock_rule", Kind::kChoice, "fixed", {"fixed", "quantile"}},
      {"regime.threshold", Kind::kDouble, "1"},
      {"regime.quantile", Kind::kDouble, "0.025"},
      {"regime.before", Kind::kInt, "3"},
      {"regime.after", Kind::kInt, "3"},
      {"regime.horizon", Kind::kInt, "3"},
      {"premium.construction", Kind::kChoice, "total", {"total", "price"}},
      {"predictors.ma_convention", Kind::kChoice, "standard", {"standard", "literal"}},
      {"oos.start", Kind::kMonth, "1966-01"},
      {"oos.min_window", Kind::kInt, "60"},
      {"oos.k_max", Kind::kInt, "3"},
      {"allocate.kappa", Kind::kDouble, "5"},
      {"allocate.w_min", Kind::kDouble, "0"},
      {"allocate.w_max", Kind::kDouble, "1.5"},
      {"allocate.variance_window", Kind::kInt, "60"},
      {"allocate.cost_bps", Kind::kDouble, "50"},
      {"allocate.holding_cost_bps", Kind::kDouble, "50"},
      {"allocate.simple_returns", Kind::kBool, "false"},
      {"allocate.cer_variance", Kind::kChoice, "sample", {"sample", "population"}},
      {"bootstrap.replications", Kind::kInt, "2000"},
      {"bootstrap.seed", Kind::kUnsigned, "20240101"},
      {"robustness.subsample_split", Kind::kMonth, "1994-01"},
      {"robustness.trim", Kind::kDouble, "0.05"},
      {"robustness.trim_quantile", Kind::kDouble, "0.05"},
      {"robustness.h_thresholds", Kind::kDoubleList, "0.5, 0.6"},
      {"output.dir", Kind::kPath, "erp-out"},
  };
  return s;
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

bool valid_key_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.' || c == '-';
}

[[noreturn]] void bad_value(const std::string& key, const RawEntry& e, const std::string& why) {
  throw ConfigError(e.origin + ": " + key + ": " + why + " (got '" + e.value + "')");
}

long long as_integer(const std::string& key, const RawEntry& e) {
  long long v = 0;
  const auto* first = e.value.data();
  const auto* last = first + e.value.size();
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last) bad_value(key, e, "expected an integer");
  return v;
}

double as_double(const std::string& key, const RawEntry& e) {
  double v = 0.0;
  const auto* first = e.value.data();
  const auto* last = first + e.value.size();
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last || !std::isfinite(v)) bad_value(key, e, "expected a finite number");
  return v;
}

}  // namespace

std::string PipelineConfig::canonical_text() const {
  std::string out;
  for (const auto& [k, v] : canonical)
    if (k != "output.dir") out += k + " = " + v + "\n";
  return out;
}

RawConfig parse_config_text(const std::string& text, const std::string& source) {
  RawConfig raw;
  std::istringstream in(text);
  std::string line;
  std::string section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    // Strip comments outside quotes.
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
      if (line[i] == '"') quoted = !quoted;
      if (line[i] == '#' && !quoted) {
        line.resize(i);
        break;
      }
    }
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    const auto where = [&](std::size_t col) {
      return source + ":" + std::to_string(lineno) + ":" + std::to_string(col + 1);
    };
    if (line[first] == '[') {
      const auto close = line.find(']', first);
      if (close == std::string::npos) throw ConfigError(where(first) + ": unterminated section header");
      if (!trim(line.substr(close + 1)).empty()) throw ConfigError(where(close + 1) + ": text after section header");
      section = trim(line.substr(first + 1, close - first - 1));
      if (section.empty() || !std::all_of(section.begin(), section.end(), valid_key_char))
        throw ConfigError(where(first + 1) + ": invalid section name");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(where(first) + ": expected 'key = value'");
    std::string key = trim(line.substr(0, eq));
    if (key.empty() || !std::all_of(key.begin(), key.end(), valid_key_char))
      throw ConfigError(where(first) + ": invalid key '" + key + "'");
    if (!section.empty()) key = section + "." + key;
    std::string value = trim(line.substr(eq + 1));
    const auto vcol = line.find_first_not_of(" \t", eq + 1);
    const std::size_t value_col = vcol == std::string::npos ? eq + 1 : vcol;
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') value = value.substr(1, value.size() - 2);
    const auto& keys = known_keys();
    if (std::find(keys.begin(), keys.end(), key) == keys.end())
      throw ConfigError(where(first) + ": unknown key '" + key + "'");
    if (raw.count(key)) throw ConfigError(where(first) + ": duplicate key '" + key + "' (first set at " + raw[key].origin + ")");
    raw[key] = RawEntry{value, where(value_col)};
  }
  return raw;
}

RawConfig parse_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str(), path.string());
}

std::string env_name(const std::string& key) {
  std::string out = "ERP_";
  for (char c : key) out += c == '.' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return out;
}

const std::vector<std::string>& known_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> k;
    for (const auto& s : schema()) k.emplace_back(s.key);
    return k;
  }();
  return keys;
}

PipelineConfig resolve_config(RawConfig raw, const std::map<std::string, std::string>& flags,
                              const std::filesystem::path& base_dir, bool use_environment) {
  const auto& keys = known_keys();
  if (use_environment) {
    for (const auto& k : keys) {
      const std::string name = env_name(k);
      if (const char* v = std::getenv(name.c_str())) raw[k] = RawEntry{trim(v), "env:" + name};
    }
  }
  for (const auto& [k, v] : flags) {
    if (std::find(keys.begin(), keys.end(), k) == keys.end()) throw ConfigError("flag: unknown key '" + k + "'");
    raw[k] = RawEntry{v, "flag"};
  }

  PipelineConfig cfg;
  std::map<std::string, RawEntry> entries;
  for (const auto& spec : schema()) {
    auto it = raw.find(spec.key);
    if (it == raw.end()) {
      if (!spec.fallback) throw ConfigError(std::string("missing required key '") + spec.key + "'");
      entries[spec.key] = RawEntry{spec.fallback, "default"};
    } else {
      entries[spec.key] = it->second;
    }
    const auto& e = entries[spec.key];
    std::string canon = e.value;
    switch (spec.kind) {
      case Kind::kInt:
        canon = std::to_string(as_integer(spec.key, e));
        break;
      case Kind::kUnsigned: {
        const auto v = as_integer(spec.key, e);
        if (v < 0) bad_value(spec.key, e, "expected a non-negative integer");
        canon = std::to_string(v);
        break;
      }
      case Kind::kDouble: {
        canon = shortest(as_double(spec.key, e));
        break;
      }
      case Kind::kMonth:
        try {
          canon = YearMonth::parse(e.value).str();
        } catch (const Error&) {
          bad_value(spec.key, e, "expected YYYY-MM");
        }
        break;
      case Kind::kBool:
        if (e.value == "true" || e.value == "1" || e.value == "yes") canon = "true";
        else if (e.value == "false" || e.value == "0" || e.value == "no") canon = "false";
        else bad_value(spec.key, e, "expected true or false");
        break;
      case Kind::kChoice:
        if (std::find(spec.choices.begin(), spec.choices.end(), e.value) == spec.choices.end()) {
          std::string allowed;
          for (const auto& c : spec.choices) allowed += (allowed.empty() ? "" : "|") + c;
          bad_value(spec.key, e, "expected one of " + allowed);
        }
        break;
      case Kind::kDoubleList: {
        std::string list;
        std::stringstream ss(e.value);
        std::string item;
        while (std::getline(ss, item, ',')) {
          RawEntry one{trim(item), e.origin};
          list += (list.empty() ? "" : ",") + shortest(as_double(spec.key, one));
        }
        if (list.empty()) bad_value(spec.key, e, "expected a comma-separated list of numbers");
        canon = list;
        break;
      }
      case Kind::kPath:
        if (e.value.empty()) bad_value(spec.key, e, "expected a path");
        break;
    }
    cfg.canonical[spec.key] = canon;
  }

  const auto& c = cfg.canonical;
  auto i = [&](const char* k) { return static_cast<int>(std::stoll(c.at(k))); };
  auto d = [&](const char* k) { return std::stod(c.at(k)); };
  // Paths from the file are relative to the file; env and flag paths to the cwd.
  auto p = [&](const char* k) {
    std::filesystem::path path(c.at(k));
    const auto& origin = entries.at(k).origin;
    const bool from_file = origin != "flag" && origin.rfind("env:", 0) != 0;
    return path.is_absolute() || !from_file ? path : base_dir / path;
  };

  cfg.daily = p("data.daily");
  cfg.macro = p("data.macro");
  cfg.recessions = p("data.recessions");
  cfg.hurst.window = i("hurst.window");
  cfg.hurst.n_min = i("hurst.n_min");
  cfg.hurst.n_max = i("hurst.n_max");
  cfg.hurst.phi = i("hurst.phi");
  cfg.hurst.segment_rule = c.at("hurst.segment_rule") == "n" ? SegmentCountRule::kN : SegmentCountRule::kNMinusOne;
  cfg.threads = static_cast<unsigned>(std::stoull(c.at("hurst.threads")));
  cfg.h_threshold = d("regime.h_threshold");
  cfg.shocks.rule = c.at("regime.shock_rule") == "quantile" ? ShockRule::kQuantile : ShockRule::kFixed;
  cfg.shocks.threshold = d("regime.threshold");
  cfg.shocks.quantile = d("regime.quantile");
  cfg.insample_before = i("regime.before");
  cfg.insample_after = i("regime.after");
  cfg.oos_horizon = i("regime.horizon");
  cfg.premium = c.at("premium.construction") == "price" ? PremiumConstruction::kPriceReturn
                                                        : PremiumConstruction::kTotalReturn;
  cfg.ma_convention = c.at("predictors.ma_convention") == "literal" ? MaConvention::kLiteral : MaConvention::kStandard;
  cfg.oos_start = YearMonth::parse(c.at("oos.start"));
  cfg.min_window = i("oos.min_window");
  cfg.k_max = i("oos.k_max");
  cfg.allocation.kappa = d("allocate.kappa");
  cfg.allocation.w_min = d("allocate.w_min");
  cfg.allocation.w_max = d("allocate.w_max");
  cfg.allocation.variance_window = i("allocate.variance_window");
  cfg.allocation.cost_bps = d("allocate.cost_bps");
  cfg.allocation.simple_returns = c.at("allocate.simple_returns") == "true";
  cfg.allocation.cer_variance =
      c.at("allocate.cer_variance") == "population" ? CerVariance::kPopulation : CerVariance::kSample;
  cfg.holding_cost_bps = d("allocate.holding_cost_bps");
  cfg.bootstrap_replications = i("bootstrap.replications");
  cfg.seed = std::stoull(c.at("bootstrap.seed"));
  cfg.subsample_split = YearMonth::parse(c.at("robustness.subsample_split"));
  cfg.trim = d("robustness.trim");
  cfg.trim_quantile = d("robustness.trim_quantile");
  cfg.h_conditions.clear();
  {
    std::stringstream ss(c.at("robustness.h_thresholds"));
    std::string item;
    while (std::getline(ss, item, ',')) cfg.h_conditions.push_back(std::stod(item));
  }
  cfg.output_dir = p("output.dir");

  auto fail = [&](const char* key, const std::string& why) {
    throw ConfigError(entries.at(key).origin + ": " + key + ": " + why);
  };
  try {
    cfg.hurst.validate();
  } catch (const Error& e) {
    fail("hurst.window", e.what());
  }
  try {
    cfg.allocation.validate();
  } catch (const Error& e) {
    fail("allocate.kappa", e.what());
  }
  if (cfg.min_window < 2) fail("oos.min_window", "must be >= 2");
  if (cfg.k_max < 1) fail("oos.k_max", "must be >= 1");
  if (cfg.bootstrap_replications < 100) fail("bootstrap.replications", "must be >= 100");
  if (cfg.insample_before < 0 || cfg.insample_after < 0) fail("regime.before", "window offsets must be >= 0");
  if (cfg.oos_horizon < 1) fail("regime.horizon", "must be >= 1");
  if (!(cfg.shocks.threshold > 0.0)) fail("regime.threshold", "must be > 0");
  if (!(cfg.shocks.quantile > 0.0 && cfg.shocks.quantile < 0.5)) fail("regime.quantile", "must lie in (0, 0.5)");
  if (!(cfg.trim > 0.0 && cfg.trim < 0.5)) fail("robustness.trim", "must lie in (0, 0.5)");
  if (!(cfg.trim_quantile > 0.0 && cfg.trim_quantile < 0.5)) fail("robustness.trim_quantile", "must lie in (0, 0.5)");
  return cfg;
}

PipelineConfig load_config(const std::filesystem::path& path, const std::map<std::string, std::string>& flags,
                           bool use_environment) {
  return resolve_config(parse_config_file(path), flags, path.parent_path(), use_environment);
}

}  // namespace erp::pipeline
