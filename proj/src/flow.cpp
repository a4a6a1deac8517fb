#include "lmcf/flow.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace lmcf {

namespace {

constexpr double kMinDt = 1e-14;
constexpr double kOriginExclusion = 1e-8;

nlohmann::json point_json(Point p) { return nlohmann::json::array({p.real(), p.imag()}); }

// Velocity used for motion: constrained nodes do not move.
std::vector<Point> motion_velocity(const FlowComponent& comp) {
  auto v = velocity_field(comp.curve, comp.pinned_origin);
  if (comp.curve.closed()) return v;
  if (comp.pinned_origin || comp.head_clamp) v.front() = Point(0.0, 0.0);
  if (comp.tail_clamp) v.back() = Point(0.0, 0.0);
  return v;
}

void apply_constraints(const FlowComponent& comp, std::vector<Point>& nodes) {
  if (comp.curve.closed()) return;
  const std::size_t n = nodes.size();
  if (comp.pinned_origin) nodes[0] = Point(0.0, 0.0);
  if (comp.head_clamp) {
    nodes[0] = comp.head_clamp->project(nodes[0]);
    nodes[1] = comp.head_clamp->project(nodes[1]);
  }
  if (comp.tail_clamp) {
    nodes[n - 1] = comp.tail_clamp->project(nodes[n - 1]);
    nodes[n - 2] = comp.tail_clamp->project(nodes[n - 2]);
  }
}

void check_finite(const std::vector<Point>& nodes, double time) {
  for (const Point& p : nodes) {
    if (!std::isfinite(p.real()) || !std::isfinite(p.imag())) {
      std::ostringstream msg;
      msg << "non-finite node position at t=" << time;
      throw Error(ErrorCode::kNumericalBlowup, msg.str());
    }
  }
}

std::vector<Point> advance(const FlowComponent& base, const std::vector<Point>& velocity, double dt) {
  std::vector<Point> nodes(base.curve.nodes().begin(), base.curve.nodes().end());
  for (std::size_t i = 0; i < nodes.size(); ++i) nodes[i] += dt * velocity[i];
  apply_constraints(base, nodes);
  return nodes;
}

ClampLine line_through(Point p, Point direction) { return ClampLine{p, direction / std::abs(direction)}; }

nlohmann::json loop_json(const LoopDescriptor& loop) {
  return {{"crossing", point_json(loop.crossing)},
          {"area", loop.area},
          {"diameter", loop.diameter},
          {"exterior_angle", loop.exterior_angle},
          {"winds_origin", loop.winds_origin},
          {"whole_curve", loop.whole_curve},
          {"distance_to_origin", std::abs(loop.crossing)},
          {"loop_node_count", loop.loop_nodes.size()}};
}

}  // namespace

void FlowConfig::validate() const {
  auto fail = [](const std::string& what) { throw Error(ErrorCode::kConfig, what); };
  if (!(target_spacing > 0.0)) fail("target_spacing must be positive");
  if (!(cfl_factor > 0.0) || cfl_factor > 0.5) fail("cfl_factor must lie in (0, 0.5]");
  if (!(max_time > 0.0)) fail("max_time must be positive");
  if (!(truncation_radius > 0.0)) fail("truncation_radius must be positive");
  if (surgery_area_threshold < 0.0) fail("surgery_area_threshold must be positive");
  if (!(surgery_diameter_factor > 0.0)) fail("surgery_diameter_factor must be positive");
  if (!(curvature_blowup_threshold > 0.0)) fail("curvature_blowup_threshold must be positive");
  if (resample_period < 1) fail("resample_period must be at least 1");
}

double FlowConfig::area_threshold() const {
  return surgery_area_threshold > 0.0 ? surgery_area_threshold
                                      : (3.0 * target_spacing) * (3.0 * target_spacing);
}

FlowComponent make_component(const EquivariantProfile& profile) {
  FlowComponent comp;
  comp.curve = profile.curve();
  comp.pinned_origin = true;
  const Point last = comp.curve[comp.curve.size() - 1];
  comp.tail_clamp = line_through(last, std::polar(1.0, profile.asymptote_angle()));
  return comp;
}

FlowComponent make_component(const PlanarCurve& curve) {
  FlowComponent comp;
  comp.curve = curve;
  if (!curve.closed()) {
    const std::size_t n = curve.size();
    comp.head_clamp = line_through(curve[0], curve[1] - curve[0]);
    comp.tail_clamp = line_through(curve[n - 1], curve[n - 1] - curve[n - 2]);
  }
  return comp;
}

const char* to_string(EventKind kind) {
  switch (kind) {
    case EventKind::kLoopCollapse: return "loop_collapse";
    case EventKind::kSurgery: return "surgery";
    case EventKind::kBlowup: return "blowup";
    case EventKind::kAnomaly: return "anomaly";
  }
  return "anomaly";
}

std::optional<EventKind> event_kind_from_string(const std::string& name) {
  for (EventKind k : {EventKind::kLoopCollapse, EventKind::kSurgery, EventKind::kBlowup, EventKind::kAnomaly}) {
    if (name == to_string(k)) return k;
  }
  return std::nullopt;
}

Event event_from_json(const nlohmann::json& doc) {
  Event e;
  try {
    e.t = doc.at("t").get<double>();
    const auto kind = event_kind_from_string(doc.at("kind").get<std::string>());
    if (!kind) throw Error(ErrorCode::kIo, "unknown event kind " + doc.at("kind").dump());
    e.kind = *kind;
    e.payload = doc.value("payload", nlohmann::json::object());
  } catch (const nlohmann::json::exception& ex) {
    throw Error(ErrorCode::kIo, std::string("malformed event: ") + ex.what());
  }
  return e;
}

nlohmann::json event_to_json(const Event& event) {
  return {{"t", event.t}, {"kind", to_string(event.kind)}, {"payload", event.payload}};
}

std::string event_log_jsonl(const std::vector<Event>& events) {
  std::string out;
  for (const Event& e : events) {
    out += event_to_json(e).dump();
    out += '\n';
  }
  return out;
}

std::vector<Point> velocity_field(const PlanarCurve& curve, bool pinned_origin) {
  const auto fr = frames(curve, pinned_origin ? OriginStencil::kOddGhost : OriginStencil::kOneSided);
  std::vector<Point> v(curve.size());
  for (std::size_t i = 0; i < curve.size(); ++i) {
    const Point z = curve[i];
    if (i == 0 && pinned_origin) {
      v[i] = 0.5 * fr[i].curvature_vector();
      continue;
    }
    const double r2 = std::norm(z);
    if (r2 <= kOriginExclusion * kOriginExclusion) {
      std::ostringstream msg;
      msg << "node " << i << " is within " << kOriginExclusion << " of the origin";
      throw Error(ErrorCode::kSingularForcing, msg.str());
    }
    const double normal_speed = fr[i].curvature - dot(z, fr[i].normal) / r2;
    v[i] = normal_speed * fr[i].normal;
  }
  return v;
}

FlowState step(const FlowState& state, const FlowConfig& config, std::optional<double> dt_limit) {
  double h_min = std::numeric_limits<double>::infinity();
  for (const auto& comp : state.components) h_min = std::min(h_min, comp.curve.min_spacing());
  double dt = config.cfl_factor * h_min * h_min;
  if (dt_limit && *dt_limit < dt) dt = *dt_limit;
  if (!(dt >= kMinDt)) {
    std::ostringstream msg;
    msg << "time step " << dt << " underflows at t=" << state.time;
    throw Error(ErrorCode::kStall, msg.str());
  }

  FlowState next;
  next.time = state.time + dt;
  next.events = state.events;
  next.stats = state.stats;
  next.stats.dt = dt;
  next.stats.steps += 1;
  next.stats.max_speed = 0.0;
  next.stats.max_curvature = 0.0;
  const bool resample_now = next.stats.steps % static_cast<std::size_t>(config.resample_period) == 0;

  for (const auto& comp : state.components) {
    const auto v1 = motion_velocity(comp);
    auto mid_nodes = advance(comp, v1, 0.5 * dt);
    check_finite(mid_nodes, state.time);
    FlowComponent mid = comp;
    mid.curve = PlanarCurve(std::move(mid_nodes), comp.curve.closed());
    const auto v2 = motion_velocity(mid);
    auto new_nodes = advance(comp, v2, dt);
    check_finite(new_nodes, next.time);

    FlowComponent out = comp;
    out.curve = PlanarCurve(std::move(new_nodes), comp.curve.closed());
    if (resample_now) out.curve = resample(out.curve, config.target_spacing);
    for (const Point& vi : v2) next.stats.max_speed = std::max(next.stats.max_speed, std::abs(vi));
    for (const auto& f : frames(out.curve)) {
      next.stats.max_curvature = std::max(next.stats.max_curvature, std::abs(f.curvature));
    }
    next.components.push_back(std::move(out));
  }
  return next;
}

std::optional<Detection> detect_singularity(const FlowState& state, const FlowConfig& config) {
  std::optional<Detection> best;
  const double area_limit = config.area_threshold();
  const double diameter_limit = config.surgery_diameter_factor * config.target_spacing;
  for (std::size_t c = 0; c < state.components.size(); ++c) {
    const auto& comp = state.components[c];
    for (auto& loop : extract_loops(comp.curve)) {
      if (std::abs(loop.area) >= area_limit || loop.diameter >= diameter_limit) continue;
      if (best && std::abs(best->loop->area) <= std::abs(loop.area)) continue;
      Detection d;
      d.kind = EventKind::kLoopCollapse;
      d.component = c;
      d.anomalous = comp.pinned_origin && std::abs(loop.crossing) < diameter_limit;
      d.loop = std::move(loop);
      best = std::move(d);
    }
  }
  if (best) return best;

  for (std::size_t c = 0; c < state.components.size(); ++c) {
    const auto& comp = state.components[c];
    double kmax = 0.0;
    for (const auto& f : frames(comp.curve)) kmax = std::max(kmax, std::abs(f.curvature));
    const double ratio = kmax * comp.curve.min_spacing();
    if (ratio > config.curvature_blowup_threshold) {
      Detection d;
      d.kind = EventKind::kBlowup;
      d.component = c;
      d.curvature_ratio = ratio;
      return d;
    }
  }
  return std::nullopt;
}

FlowState surgery(const FlowState& state, std::size_t component, const LoopDescriptor& loop,
                  const FlowConfig& config) {
  if (component >= state.components.size()) {
    throw Error(ErrorCode::kUnsupportedSurgery, "surgery on a missing component");
  }
  if (loop.winds_origin != 0) {
    throw Error(ErrorCode::kUnsupportedSurgery, "loop winds around the origin; surgery refused");
  }
  if (loop.whole_curve) {
    throw Error(ErrorCode::kUnsupportedSurgery, "loop is a whole closed component, nothing to reconnect");
  }
  const FlowComponent& comp = state.components[component];
  const PlanarCurve& curve = comp.curve;
  const std::size_t n = curve.size();
  const std::size_t i = loop.first_segment;
  const std::size_t j = loop.second_segment;
  const bool inner = loop.loop_nodes.size() == j - i + 1;
  const double tiny = 0.2 * config.target_spacing;

  std::vector<Point> nodes;
  std::size_t junction = 0;
  if (inner) {
    for (std::size_t k = 0; k <= i; ++k) nodes.push_back(curve[k]);
    const bool keep_first = i == 0 || std::abs(nodes.back() - loop.crossing) > tiny;
    if (!keep_first) nodes.pop_back();
    junction = nodes.size();
    nodes.push_back(loop.crossing);
    for (std::size_t k = j + 1; k < n; ++k) {
      if (k == j + 1 && k + 1 < n && std::abs(curve[k] - loop.crossing) <= tiny) continue;
      nodes.push_back(curve[k % n]);
    }
  } else {
    // Closed curve whose shorter part is the wrap-around: keep i+1..j.
    nodes.push_back(loop.crossing);
    for (std::size_t k = i + 1; k <= j; ++k) nodes.push_back(curve[k]);
  }

  // One pass of (1,2,1)/4 averaging over five nodes centred on the junction.
  const std::size_t m = nodes.size();
  const std::vector<Point> before = nodes;
  const bool closed = curve.closed();
  for (std::ptrdiff_t off = -2; off <= 2; ++off) {
    const auto idx = static_cast<std::ptrdiff_t>(junction) + off;
    if (!closed && (idx <= 0 || idx >= static_cast<std::ptrdiff_t>(m) - 1)) continue;
    const std::size_t k = static_cast<std::size_t>((idx % static_cast<std::ptrdiff_t>(m) + m) % m);
    const Point prev = before[(k + m - 1) % m];
    const Point next = before[(k + 1) % m];
    nodes[k] = 0.25 * (prev + 2.0 * before[k] + next);
  }

  FlowState out = state;
  FlowComponent& target = out.components[component];
  const std::size_t crossings_before = self_intersections(curve).size();
  target.curve = resample(PlanarCurve(std::move(nodes), closed), config.target_spacing);
  const std::size_t crossings_after = self_intersections(target.curve).size();

  Event ev;
  ev.t = state.time;
  ev.kind = EventKind::kSurgery;
  ev.payload = {{"component", component},
                {"removed_nodes", n > target.curve.size() ? n - target.curve.size() : 0},
                {"rotation_index_before", rotation_index(curve)},
                {"rotation_index_after", rotation_index(target.curve)},
                {"crossings_before", crossings_before},
                {"crossings_after", crossings_after},
                {"loop", loop_json(loop)}};
  out.events.push_back(std::move(ev));
  return out;
}

Snapshot snapshot_of(const FlowState& state) {
  Snapshot s;
  s.time = state.time;
  for (const auto& comp : state.components) {
    s.curves.push_back(comp.curve);
    s.pinned.push_back(comp.pinned_origin);
  }
  return s;
}

RunResult run(FlowState state, const FlowConfig& config, const RunHooks& hooks) {
  config.validate();
  RunResult result;
  result.trajectory.stride = hooks.stride;
  const double t0 = state.time;
  std::size_t sample_index = 0;

  auto sample = [&](const FlowState& s) {
    for (const auto& probe : hooks.probes) {
      auto& series = result.series[probe.name];
      series.name = probe.name;
      series.push(s.time, probe.fn(s));
    }
    if (hooks.on_sample) hooks.on_sample(s);
    if (hooks.record_trajectory) result.trajectory.samples.push_back(snapshot_of(s));
  };
  const bool sampling = hooks.stride > 0.0;
  if (sampling) sample(state);
  auto next_sample_time = [&] { return t0 + hooks.stride * static_cast<double>(sample_index + 1); };

  constexpr double kTimeEps = 1e-12;
  while (!state.terminated && state.time < config.max_time - kTimeEps) {
    double limit = config.max_time - state.time;
    if (sampling) limit = std::min(limit, next_sample_time() - state.time);
    if (sampling && limit <= kTimeEps) {
      ++sample_index;
      sample(state);
      continue;
    }
    FlowState previous = state;
    try {
      state = step(state, config, limit);
      if (auto det = detect_singularity(state, config)) {
        Event ev;
        ev.t = state.time;
        ev.kind = det->kind;
        if (det->kind == EventKind::kLoopCollapse) {
          ev.payload = loop_json(*det->loop);
          ev.payload["component"] = det->component;
          state.events.push_back(ev);
          if (det->anomalous) {
            Event anomaly;
            anomaly.t = state.time;
            anomaly.kind = EventKind::kAnomaly;
            anomaly.payload = {{"reason", "collapse_near_origin"},
                               {"component", det->component},
                               {"distance_to_origin", std::abs(det->loop->crossing)}};
            state.events.push_back(std::move(anomaly));
          }
          if (det->loop->whole_curve) {
            // A closed component shrinking to a point: extinction.
            state.components.erase(state.components.begin() +
                                   static_cast<std::ptrdiff_t>(det->component));
            if (state.components.empty()) state.terminated = true;
          } else {
            state = surgery(state, det->component, *det->loop, config);
          }
        } else {
          ev.payload = {{"component", det->component}, {"curvature_ratio", det->curvature_ratio}};
          state.events.push_back(ev);
          state.terminated = true;
        }
      }
    } catch (const Error& e) {
      throw FlowError(e, std::move(previous));
    }
    if (sampling && state.time >= next_sample_time() - kTimeEps) {
      ++sample_index;
      if (!state.terminated) sample(state);
    }
  }
  result.trajectory.events = state.events;
  result.state = std::move(state);
  return result;
}

}  // namespace lmcf
