#pragma once

#include "leafwise/config.hpp"

#include <nlohmann/json.hpp>

#include <string>

namespace leafwise::pipeline {

// Stages in execution order. A failing or erroring stage marks the rest skipped.
//   audit, general_position, lattice, civilize, torus, diffeo, support
nlohmann::json run_pipeline(const RunConfig& cfg);

// Single-stage reports for the subcommands.
nlohmann::json run_genpos(const RunConfig& cfg, const std::string& mesh_out = {});
nlohmann::json run_torus(const RunConfig& cfg, const std::vector<int>& grids = {});

// Civilization with checkpoints: init runs the search, writes the mesh and
// civilizes skeleta 0..skeleton; resume continues a checkpoint up to
// `skeleton` (the next one when negative) and writes the new state to
// `out_path` (in place when empty).
nlohmann::json civilize_init(const RunConfig& cfg, const std::string& checkpoint, const std::string& mesh,
                             int skeleton = 0);
nlohmann::json civilize_resume(const std::string& checkpoint, const std::string& out_path = {}, int skeleton = -1,
                               double deviation_tol = 1e-9);

bool passed(const nlohmann::json& report);

void write_report(const std::string& path, const nlohmann::json& report);
nlohmann::json read_report(const std::string& path);

}  // namespace leafwise::pipeline
