// leadlag: volatility clustering, lead-lag causal discovery, and backtesting
// over daily OHLC data. See README.md for the pipeline description.

#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "leadlag/config.hpp"
#include "leadlag/errors.hpp"
#include "leadlag/pipeline.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitData = 2;
constexpr int kExitInternal = 3;

struct GlobalOptions {
  std::string config_path;
  std::string out_dir = "out";
  std::string format = "json";
  std::optional<std::uint64_t> seed;
  std::vector<std::string> overrides;  // key=value
};

leadlag::PipelineConfig assemble_config(const GlobalOptions& opts) {
  leadlag::PipelineConfig config;
  if (!opts.config_path.empty()) config = leadlag::load_config(opts.config_path);
  for (const auto& kv : opts.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) {
      throw leadlag::ValidationError("--set expects key=value, got '" + kv + "'");
    }
    config.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (opts.seed) config.seed = *opts.seed;  // flag wins over file
  config.validate();
  return config;
}

void report_written(const std::vector<std::filesystem::path>& files) {
  for (const auto& f : files) std::cout << "wrote " << f.string() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"lead-lag trading research pipeline"};
  app.set_version_flag("--version", "leadlag 0.1.0");
  app.require_subcommand(1);

  GlobalOptions opts;
  app.add_option("--config", opts.config_path, "key = value config file")
      ->check(CLI::ExistingFile);
  app.add_option("--seed", opts.seed, "global RNG seed (overrides the config file)");
  app.add_option("--out", opts.out_dir, "artifact directory (default: out)");
  app.add_option("--format", opts.format, "artifact format: json (default) or csv for extra exports")
      ->check(CLI::IsMember({"json", "csv"}));
  app.add_option("--set", opts.overrides, "override any config field, e.g. --set vol_window=30")
      ->take_all();

  // Stage subcommands run one pipeline step against --out; `pipeline` runs
  // all of them and writes report.json; `synth` writes a synthetic universe.
  for (leadlag::Stage stage : leadlag::kPipelineStages) {
    app.add_subcommand(leadlag::to_string(stage),
                       "run the " + leadlag::to_string(stage) + " stage");
  }
  app.add_subcommand("pipeline", "run every stage and write report.json");
  app.add_subcommand("synth", "generate a synthetic OHLC universe as CSV files");

  CLI11_PARSE(app, argc, argv);

  try {
    const leadlag::PipelineConfig config = assemble_config(opts);
    const std::filesystem::path out_dir = opts.out_dir;
    const std::string sub = app.get_subcommands().front()->get_name();

    if (sub == "pipeline") {
      const auto report = leadlag::run_pipeline(config, out_dir);
      if (opts.format == "csv") leadlag::export_csv_artifacts(config, out_dir);
      std::cout << "wrote " << report.string() << "\n";
    } else if (sub == "synth") {
      report_written(leadlag::run_synth(config, out_dir));
    } else {
      const auto files = leadlag::run_stage(leadlag::stage_from_string(sub), config, out_dir);
      if (opts.format == "csv") leadlag::export_csv_artifacts(config, out_dir);
      report_written(files);
    }
    return kExitOk;
  } catch (const leadlag::ValidationError& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const leadlag::DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kExitInternal;
  }
}
