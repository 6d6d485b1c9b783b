#include "leafwise/plots.hpp"

#include "leafwise/error.hpp"

#include <filesystem>
#include <fstream>

namespace leafwise::pipeline {

namespace {

const nlohmann::json* stage(const nlohmann::json& report, const std::string& name) {
  if (!report.is_object() || !report.contains("stages")) return nullptr;
  for (const auto& s : report["stages"]) {
    if (s.value("name", "") == name && s.contains("metrics")) return &s["metrics"];
  }
  return nullptr;
}

std::string cell(const nlohmann::json& v) { return v.is_string() ? v.get<std::string>() : v.dump(); }

std::ofstream open_csv(const std::filesystem::path& path, const char* header) {
  std::ofstream out(path);
  require(out.good(), ErrorKind::Io, "cannot write " + path.string());
  out << header << '\n';
  return out;
}

}  // namespace

std::vector<std::string> emit_plot_data(const nlohmann::json& report, const std::string& dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  require(!ec, ErrorKind::Io, "cannot create " + dir + ": " + ec.message());
  const fs::path base(dir);
  std::vector<std::string> written;

  {
    const auto path = base / "margin_vs_refinement.csv";
    auto out = open_csv(path, "l,attempt,seed,min_margin,ok");
    if (const auto* m = stage(report, "general_position"); m && m->contains("history")) {
      for (const auto& h : (*m)["history"]) {
        out << cell(h["l"]) << ',' << cell(h["attempt"]) << ',' << cell(h["seed"]) << ',' << cell(h["min_margin"])
            << ',' << (h["ok"].get<bool>() ? 1 : 0) << '\n';
      }
    }
    require(out.good(), ErrorKind::Io, "failed writing " + path.string());
    written.push_back(path.string());
  }
  {
    const auto path = base / "defect_vs_grid.csv";
    auto out = open_csv(path, "grid,defect_max,margin_min");
    if (const auto* m = stage(report, "torus"); m && m->contains("sweep")) {
      for (const auto& row : (*m)["sweep"]) {
        out << cell(row["grid"]) << ',' << cell(row["defect_max"]) << ',' << cell(row["margin_min"]) << '\n';
      }
    }
    require(out.good(), ErrorKind::Io, "failed writing " + path.string());
    written.push_back(path.string());
  }
  {
    const auto path = base / "margin_histogram.csv";
    auto out = open_csv(path, "log10_lo,log10_hi,count");
    if (const auto* m = stage(report, "general_position"); m && m->contains("margin_histogram")) {
      for (const auto& row : (*m)["margin_histogram"]) {
        out << cell(row["log10_lo"]) << ',' << cell(row["log10_hi"]) << ',' << cell(row["count"]) << '\n';
      }
    }
    require(out.good(), ErrorKind::Io, "failed writing " + path.string());
    written.push_back(path.string());
  }
  return written;
}

}  // namespace leafwise::pipeline
