#pragma once

#include <nlohmann/json.hpp>

#include <string>
#include <vector>

namespace leafwise::pipeline {

// Writes margin_vs_refinement.csv, defect_vs_grid.csv and margin_histogram.csv
// into `dir` from any report with a `stages` array. Missing stages give
// header-only files. Returns the written paths.
std::vector<std::string> emit_plot_data(const nlohmann::json& report, const std::string& dir);

}  // namespace leafwise::pipeline
