#pragma once

#include <array>
#include <filesystem>
#include <string>
#include <vector>

#include "leadlag/config.hpp"

namespace leadlag {

enum class Stage { Ingest, Volatility, Cluster, Causal, Lags, Backtest };

constexpr std::array<Stage, 6> kPipelineStages = {Stage::Ingest,  Stage::Volatility,
                                                  Stage::Cluster, Stage::Causal,
                                                  Stage::Lags,    Stage::Backtest};

std::string to_string(Stage stage);
Stage stage_from_string(const std::string& name);

/// The per-stage RNG stream index (fixed ids; appending a stage never
/// perturbs earlier stages' randomness).
std::uint64_t stage_seed(const PipelineConfig& config, Stage stage);

/// Runs one stage against the artifact directory. Prerequisite artifacts
/// must already exist there; a missing one raises ValidationError naming the
/// stage that produces it. Returns the artifact files written.
std::vector<std::filesystem::path> run_stage(Stage stage, const PipelineConfig& config,
                                             const std::filesystem::path& out_dir);

/// Runs every stage in order and writes the aggregate report.json; returns
/// its path. Determinism: identical config + input files + seed yield a
/// byte-identical report.
std::filesystem::path run_pipeline(const PipelineConfig& config,
                                   const std::filesystem::path& out_dir);

/// Writes one CSV per synthetic ticker into out_dir (plus a spec echo);
/// returns the files written.
std::vector<std::filesystem::path> run_synth(const PipelineConfig& config,
                                             const std::filesystem::path& out_dir);

/// Extra CSV exports (volatility profiles, lag-accuracy curves) next to the
/// JSON artifacts; used by `--format csv`.
void export_csv_artifacts(const PipelineConfig& config, const std::filesystem::path& out_dir);

}  // namespace leadlag
