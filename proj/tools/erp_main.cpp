#include <iostream>
#include <map>
#include <string>

#include <CLI11.hpp>

#include "erp/error.hpp"
#include "pipeline/config.hpp"
#include "pipeline/pipeline.hpp"

namespace {

constexpr int kStageFailure = 1;
constexpr int kConfigFailure = 2;

}  // namespace

int main(int argc, char** argv) {
  using namespace erp::pipeline;

  CLI::App app{"Hurst-based regime detection and equity premium predictability pipeline"};
  app.require_subcommand(0, 1);
  app.fallthrough();

  std::string config_path;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  std::string stage_filter;
  std::vector<std::string> sets;
  app.add_option("-c,--config", config_path, "Pipeline configuration file")->required()->check(CLI::ExistingFile);
  app.add_option("-o,--out", out_dir, "Output directory (overrides output.dir)");
  app.add_option("--seed", seed, "Master seed (overrides bootstrap.seed)");
  app.add_option("--stage", stage_filter, "Run only up to this stage");
  app.add_option("--set", sets, "Override any config key: key=value")->take_all();

  std::optional<double> kappa;
  std::optional<double> cost_bps;
  std::vector<std::string> masks;

  const std::vector<std::pair<std::string, std::string>> commands = {
      {"ingest", "Load and validate inputs; write the monthly premium"},
      {"garch", "Fit GARCH(1,1) to daily log returns and print the parameters"},
      {"hurst", "Local Hurst exponent of the filtered returns"},
      {"regime", "Bullish ratio, Bullish Index and shocks"},
      {"predictors", "Macroeconomic and technical predictor panel"},
      {"insample", "In-sample predictive regressions"},
      {"oos", "Recursive out-of-sample forecasts"},
      {"allocate", "Mean-variance allocation backtests"},
      {"report", "Everything, plus summary statistics, robustness and figure data"},
      {"all", "Same as report"},
  };
  std::map<std::string, CLI::App*> subs;
  for (const auto& [name, help] : commands) subs[name] = app.add_subcommand(name, help);
  subs["allocate"]->add_option("--kappa", kappa, "Risk-aversion coefficient");
  subs["allocate"]->add_option("--cost-bps", cost_bps, "Proportional cost per unit turnover, basis points");
  subs["allocate"]->add_option("--mask", masks, "Masks to report (all,exp,rec,peak,stable_plus,trough,stable_minus)")
      ->delimiter(',');

  CLI11_PARSE(app, argc, argv);

  std::string command = "all";
  for (const auto& [name, sub] : subs)
    if (sub->parsed()) command = name;
  if (!stage_filter.empty()) command = stage_filter;
  const auto stage = parse_stage(command);
  if (!stage) {
    std::cerr << "erp: unknown stage '" << command << "'\n";
    return kConfigFailure;
  }

  std::map<std::string, std::string> flags;
  for (const auto& s : sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) {
      std::cerr << "erp: --set expects key=value, got '" << s << "'\n";
      return kConfigFailure;
    }
    flags[s.substr(0, eq)] = s.substr(eq + 1);
  }
  if (!out_dir.empty()) flags["output.dir"] = out_dir;
  if (seed) flags["bootstrap.seed"] = std::to_string(*seed);

  PipelineConfig cfg;
  try {
    cfg = load_config(config_path, flags);
  } catch (const erp::Error& e) {
    std::cerr << "erp: [config] " << e.what() << "\n";
    return kConfigFailure;
  }

  try {
    Pipeline pipeline(cfg, AllocationOverrides{kappa, cost_bps, masks});
    pipeline.run(*stage);
    if (*stage == Stage::kGarch) {
      const auto& g = pipeline.garch();
      std::cout.precision(10);
      std::cout << "{\"mu\": " << g.mu << ", \"omega\": " << g.omega << ", \"alpha\": " << g.alpha
                << ", \"beta\": " << g.beta << ", \"loglik\": " << g.loglik << "}\n";
    } else {
      for (const auto& f : pipeline.written()) std::cout << (cfg.output_dir / f).string() << "\n";
    }
  } catch (const StageError& e) {
    std::cerr << "erp: " << e.what() << "\n";
    return kStageFailure;
  } catch (const std::exception& e) {
    std::cerr << "erp: [internal] " << e.what() << "\n";
    return kStageFailure;
  }
  return 0;
}
