#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "lmcf/diagnostics.hpp"
#include "lmcf/flow.hpp"
#include "lmcf/toml.hpp"

namespace lmcf {

inline constexpr int kScenarioSchema = 1;

struct ProfileEntry {
  std::string kind;
  std::string name;
  bool evolve = true;
  std::map<std::string, double> params;

  bool operator==(const ProfileEntry&) const = default;
};

struct DiagnosticEntry {
  std::string check;
  std::map<std::string, toml::Value> params;

  bool operator==(const DiagnosticEntry&) const = default;
};

struct OutputSpec {
  std::string dir;
  bool snapshots = true;
  bool svg = true;

  bool operator==(const OutputSpec&) const = default;
};

struct Scenario {
  int schema = kScenarioSchema;
  std::string id;
  std::string description;
  std::vector<ProfileEntry> profiles;
  bool has_flow = false;
  FlowConfig flow;
  double start_time = 0.0;
  double sample_stride = 0.05;
  std::vector<DiagnosticEntry> diagnostics;
  OutputSpec output;

  bool operator==(const Scenario& other) const;
};

Scenario parse_scenario(const std::filesystem::path& path);
Scenario parse_scenario_text(const std::string& text);
/// Canonical TOML text: every key spelled out, defaults included.
std::string canonical_toml(const Scenario& scenario);

/// A constructed profile component with the metadata the renderer and the
/// diagnostics need.
struct BuiltProfile {
  std::string name;
  bool evolve = true;
  PlanarCurve curve;
  bool pinned = false;
  std::optional<double> asymptote_angle;
  std::vector<double> guide_angles;
  std::optional<ClampLine> tail_clamp;
  nlohmann::json report;
  bool report_ok = true;
};

std::vector<BuiltProfile> build_profile(const ProfileEntry& entry);

struct ExitReport {
  std::string id;
  bool ok = false;
  std::filesystem::path directory;
  nlohmann::json verdicts = nlohmann::json::array();
  std::optional<std::string> error;

  nlohmann::json to_json() const;
};

/// Runs a scenario and writes <root>/<id>/{snapshots/, series/, reports/,
/// events.jsonl, render/}.
ExitReport run_scenario(const Scenario& scenario, const std::filesystem::path& root);

struct SvgStyle {
  int width = 800;
  int height = 800;
  double margin = 0.05;
  std::vector<double> guide_angles;
  bool highlight_loops = true;
  bool origin_marker = true;
};

std::string emit_svg(const Snapshot& snapshot, const SvgStyle& style = {});

void write_snapshot_csv(const std::filesystem::path& path, const Snapshot& snapshot);
Snapshot read_snapshot_csv(const std::filesystem::path& path, double time = 0.0);
/// Reads a run directory written by run_scenario.
Trajectory load_trajectory(const std::filesystem::path& run_dir);

/// Runs one diagnostic entry on a trajectory.
Report run_diagnostic(const DiagnosticEntry& entry, const Trajectory& trajectory,
                      const std::map<std::string, PlanarCurve>& references, double target_spacing);

}  // namespace lmcf
