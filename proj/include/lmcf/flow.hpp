#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "lmcf/curve.hpp"
#include "lmcf/geometry.hpp"
#include "lmcf/timeseries.hpp"

namespace lmcf {

struct FlowConfig {
  double target_spacing = 0.05;
  double cfl_factor = 0.25;
  double max_time = 1.0;
  double truncation_radius = 30.0;
  /// Zero selects the default (3 * target_spacing)^2.
  double surgery_area_threshold = 0.0;
  double surgery_diameter_factor = 10.0;
  /// Largest tolerated |kappa| * min_spacing.
  double curvature_blowup_threshold = 1.5;
  int resample_period = 5;

  void validate() const;
  double area_threshold() const;
  bool operator==(const FlowConfig&) const = default;
};

/// Straight line used to clamp a far end of an open curve.
struct ClampLine {
  Point point;
  Point direction;  // unit

  Point project(Point p) const { return point + dot(p - point, direction) * direction; }
};

struct FlowComponent {
  PlanarCurve curve;
  bool pinned_origin = false;
  std::optional<ClampLine> head_clamp;
  std::optional<ClampLine> tail_clamp;
};

/// Pinned at the origin; the far end is clamped to the line through the
/// last node with the asymptote direction.
FlowComponent make_component(const EquivariantProfile& profile);
/// Closed curves move freely; both ends of an open curve are clamped to
/// the lines through their end segments.
FlowComponent make_component(const PlanarCurve& curve);

enum class EventKind { kLoopCollapse, kSurgery, kBlowup, kAnomaly };
const char* to_string(EventKind kind);
std::optional<EventKind> event_kind_from_string(const std::string& name);

struct Event {
  double t = 0.0;
  EventKind kind = EventKind::kAnomaly;
  nlohmann::json payload = nlohmann::json::object();
};

nlohmann::json event_to_json(const Event& event);
Event event_from_json(const nlohmann::json& doc);
std::string event_log_jsonl(const std::vector<Event>& events);

struct StepStats {
  double dt = 0.0;
  double max_speed = 0.0;
  double max_curvature = 0.0;
  std::size_t steps = 0;
};

struct FlowState {
  double time = 0.0;
  std::vector<FlowComponent> components;
  StepStats stats;
  std::vector<Event> events;
  bool terminated = false;
};

/// A step failure carrying the last good state.
class FlowError : public Error {
 public:
  FlowError(const Error& cause, FlowState snapshot)
      : Error(cause.code(), cause.what()), snapshot_(std::move(snapshot)) {}
  const FlowState& snapshot() const { return snapshot_; }

 private:
  FlowState snapshot_;
};

/// Normal velocity k - x_perp/|x|^2 at every node. With `pinned_origin`
/// node 0 is the origin and gets the series limit k/2.
std::vector<Point> velocity_field(const PlanarCurve& curve, bool pinned_origin);
inline std::vector<Point> velocity_field(const EquivariantProfile& profile) {
  return velocity_field(profile.curve(), true);
}

/// One explicit midpoint step with dt = cfl * min_spacing^2, optionally
/// shortened to `dt_limit`.
FlowState step(const FlowState& state, const FlowConfig& config,
               std::optional<double> dt_limit = std::nullopt);

struct Detection {
  EventKind kind = EventKind::kLoopCollapse;
  std::size_t component = 0;
  std::optional<LoopDescriptor> loop;
  double curvature_ratio = 0.0;
  bool anomalous = false;
};

std::optional<Detection> detect_singularity(const FlowState& state, const FlowConfig& config);

/// Cuts the loop out of the given component, reconnects at the crossing
/// and mollifies the junction.
FlowState surgery(const FlowState& state, std::size_t component, const LoopDescriptor& loop,
                  const FlowConfig& config);

struct Snapshot {
  double time = 0.0;
  std::vector<PlanarCurve> curves;
  std::vector<bool> pinned;
};

struct Trajectory {
  std::vector<Snapshot> samples;
  std::vector<Event> events;
  double stride = 0.0;
};

Snapshot snapshot_of(const FlowState& state);

struct ScalarProbe {
  std::string name;
  std::function<double(const FlowState&)> fn;
};

struct RunHooks {
  double stride = 0.0;  // zero disables sampling
  std::vector<ScalarProbe> probes;
  std::function<void(const FlowState&)> on_sample;
  bool record_trajectory = false;
};

struct RunResult {
  FlowState state;
  std::map<std::string, TimeSeries> series;
  Trajectory trajectory;
};

RunResult run(FlowState state, const FlowConfig& config, const RunHooks& hooks = {});

}  // namespace lmcf
