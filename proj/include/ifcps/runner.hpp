#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ifcps/config.hpp"
#include "ifcps/influence.hpp"

namespace ifcps {

inline constexpr const char* kVersion = "0.1.0";

// Executes the configured protocol. Writes datasets, checkpoints, influence
// CSVs, the protocol result CSV, and manifest.json under cfg.out_dir.
// Reproducible byte-for-byte per (config, seeds) except the manifest's
// wall-time field.
void run(const RunConfig& cfg);

// Converts a completed run directory into plain-text columnar files under
// <run_dir>/plot/ for any plotting tool. Throws DatasetError listing missing
// inputs.
void emit_plot_data(const std::string& run_dir);

// demo_id,poisoned,score_standard,score_safety,score_trajectory,
// score_propagated,score_combined
void write_influence_csv(const std::string& path, const InfluenceReport& report,
                         const std::vector<std::uint8_t>& labels);

// Config snapshot plus per-variant normalization ranges.
void write_influence_sidecar(const std::string& path, const InfluenceReport& report);

} // namespace ifcps
