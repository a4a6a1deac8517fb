#include "lmcf/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

namespace lmcf {

namespace {

constexpr double kPi = std::numbers::pi;

// Orbit of z relative to y: <X, y> = A cos a + B sin a.
struct OrbitTerms {
  double a;
  double b;
  double r2;  // |z|^2
};

OrbitTerms orbit_terms(Point z, const R4& y) {
  const Point w1(y[0], y[1]);
  const Point w2(y[2], y[3]);
  return {dot(z, w1), dot(z, w2), std::norm(z)};
}

double norm2(const R4& y) { return y[0] * y[0] + y[1] * y[1] + y[2] * y[2] + y[3] * y[3]; }

// Squared distance from y to the nearest point of the orbit of z.
double orbit_distance2(const OrbitTerms& o, double y2) {
  return std::max(0.0, o.r2 + y2 - 2.0 * std::hypot(o.a, o.b));
}

// Orbit integral of exp(-|X - y|^2 / 4l), periodic trapezoid rule.
double orbit_integral(Point z, const R4& y, double y2, double l, int min_nodes, int refine) {
  const OrbitTerms o = orbit_terms(z, y);
  const double m = std::hypot(o.a, o.b) / (2.0 * l);
  const double base = std::exp(-orbit_distance2(o, y2) / (4.0 * l));
  if (base == 0.0) return 0.0;
  const int needed = static_cast<int>(std::ceil(m + 10.0 * std::sqrt(m) + 16.0));
  const int n = std::max(min_nodes, needed) * refine;
  const double phase = std::atan2(o.b, o.a);
  double sum = 0.0;
  for (int k = 0; k < n; ++k) {
    const double alpha = 2.0 * kPi * k / n;
    sum += std::exp(m * (std::cos(alpha - phase) - 1.0));
  }
  return base * sum * (2.0 * kPi / n);
}

struct DensityPass {
  double value = 0.0;
  double end_weight = 0.0;
};

DensityPass density_pass(const PlanarCurve& curve, const DensityQuery& q, int alpha_nodes, double sub_spacing) {
  const double l = q.scale;
  const double y2 = norm2(q.center);
  const double root_l = std::sqrt(l);
  double d_near = std::numeric_limits<double>::infinity();
  std::vector<double> dist(curve.size());
  for (std::size_t i = 0; i < curve.size(); ++i) {
    dist[i] = std::sqrt(orbit_distance2(orbit_terms(curve[i], q.center), y2));
    d_near = std::min(d_near, dist[i]);
  }
  const double cutoff = d_near + q.truncation * root_l;

  DensityPass out;
  double total = 0.0;
  for (std::size_t k = 0; k < curve.segment_count(); ++k) {
    const Point a = curve.segment_start(k);
    const Point b = curve.segment_end(k);
    const double len = std::abs(b - a);
    const std::size_t ia = k;
    const std::size_t ib = (k + 1) % curve.size();
    if (std::min(dist[ia], dist[ib]) - len > cutoff) continue;
    const auto pieces = static_cast<std::size_t>(std::max(1.0, std::ceil(len / sub_spacing)));
    const double ds = len / static_cast<double>(pieces);
    for (std::size_t p = 0; p <= pieces; ++p) {
      const Point z = a + (b - a) * (static_cast<double>(p) / static_cast<double>(pieces));
      const double w = (p == 0 || p == pieces) ? 0.5 : 1.0;
      total += w * ds * std::abs(z) * orbit_integral(z, q.center, y2, l, alpha_nodes, 1);
    }
  }
  out.value = total / (4.0 * kPi * l);
  if (!curve.closed()) {
    // Mass that would sit beyond the far end of the polyline.
    const std::size_t last = curve.size() - 1;
    for (std::size_t e : {std::size_t{0}, last}) {
      if (std::abs(curve[e]) == 0.0) continue;
      out.end_weight = std::max(out.end_weight, std::exp(-dist[e] * dist[e] / (4.0 * l)));
    }
  }
  return out;
}

double finite_or_zero(double v) { return std::isfinite(v) ? v : 0.0; }

}  // namespace

R4 orbit_point(Point z, double alpha) {
  const double c = std::cos(alpha);
  const double s = std::sin(alpha);
  return {z.real() * c, z.imag() * c, z.real() * s, z.imag() * s};
}

void DensityQuery::validate() const {
  if (!(scale > 0.0)) throw Error(ErrorCode::kConfig, "density scale l must be positive");
  if (alpha_nodes < 64) throw Error(ErrorCode::kConfig, "density needs at least 64 orbit nodes");
  if (!(truncation >= 8.0)) throw Error(ErrorCode::kConfig, "density truncation must be at least 8 sqrt(l)");
  if (!(s_resolution > 0.0)) throw Error(ErrorCode::kConfig, "density s_resolution must be positive");
}

DensityResult gaussian_density(const PlanarCurve& curve, const DensityQuery& query) {
  query.validate();
  const double h = std::sqrt(query.scale) / query.s_resolution;
  const DensityPass fine = density_pass(curve, query, query.alpha_nodes, h);
  const DensityPass coarse = density_pass(curve, query, query.alpha_nodes / 2, 2.0 * h);
  DensityResult r;
  r.value = fine.value;
  r.error_estimate = std::abs(fine.value - coarse.value);
  r.tail_warning = fine.end_weight > 1e-8;
  return r;
}

DensityResult gaussian_density(std::span<const PlanarCurve> curves, const DensityQuery& query) {
  DensityResult total;
  for (const PlanarCurve& c : curves) {
    const DensityResult r = gaussian_density(c, query);
    total.value += r.value;
    total.error_estimate += r.error_estimate;
    total.tail_warning = total.tail_warning || r.tail_warning;
  }
  return total;
}

const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::kPass: return "PASS";
    case Verdict::kFail: return "FAIL";
    case Verdict::kNotApplicable: return "NOT_APPLICABLE";
    case Verdict::kUnreliable: return "UNRELIABLE";
  }
  return "FAIL";
}

nlohmann::json Report::to_json() const {
  nlohmann::json doc = {{"check", check}, {"params", params}, {"verdict", to_string(verdict)}, {"details", details}};
  if (series) doc["series"] = series_to_json(*series);
  return doc;
}

Report density_monotonicity_check(const Trajectory& trajectory, const R4& y, double T, double slack,
                                  const DensityQuery& controls) {
  Report report;
  report.check = "density_monotonicity";
  report.params = {{"y", y}, {"T", T}, {"slack", slack}};
  TimeSeries series;
  series.name = "density";
  bool tail = false;
  for (const Snapshot& s : trajectory.samples) {
    if (!(s.time < T)) continue;
    DensityQuery q = controls;
    q.center = y;
    q.scale = T - s.time;
    const DensityResult r = gaussian_density(std::span<const PlanarCurve>(s.curves), q);
    tail = tail || r.tail_warning;
    series.push(s.time, r.value);
  }
  double worst = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 1; k < series.samples.size(); ++k) {
    worst = std::max(worst, series.samples[k].second - series.samples[k - 1].second);
  }
  report.details = {{"samples", series.size()}, {"max_increase", finite_or_zero(worst)}, {"tail_warning", tail}};
  if (series.size() < 10) {
    report.verdict = Verdict::kNotApplicable;
    report.details["reason"] = "fewer than 10 samples before T";
  } else {
    report.verdict = worst <= slack ? Verdict::kPass : Verdict::kFail;
  }
  report.series = std::move(series);
  return report;
}

double expander_closeness(const PlanarCurve& curve, double t, bool pinned_origin) {
  if (!(t > 0.0 && t < 4.0)) throw Error(ErrorCode::kConfig, "expander closeness needs 0 < t < 4");
  const auto fr = frames(curve, pinned_origin ? OriginStencil::kOddGhost : OriginStencil::kOneSided);
  const double l = 4.0 - t;
  std::vector<double> f(curve.size());
  for (std::size_t i = 0; i < curve.size(); ++i) {
    const Point z = curve[i];
    const double r2 = std::norm(z);
    if (r2 == 0.0) {
      f[i] = 0.0;
      continue;
    }
    const double xn = dot(z, fr[i].normal);
    const double misfit = xn - 2.0 * t * (fr[i].curvature - xn / r2);
    f[i] = std::sqrt(r2) * misfit * misfit * std::exp(-r2 / (4.0 * l)) / (4.0 * kPi * l);
  }
  double total = 0.0;
  for (std::size_t k = 0; k < curve.segment_count(); ++k) {
    const std::size_t a = k;
    const std::size_t b = (k + 1) % curve.size();
    total += 0.5 * (f[a] + f[b]) * std::abs(curve[b] - curve[a]);
  }
  return 2.0 * kPi * total;
}

double beta_theta_invariant(const PlanarCurve& curve, double t, double radius, OriginStencil origin) {
  const auto beta = liouville_primitive(curve);
  const auto theta = lagrangian_angle(curve, origin);
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (std::size_t i = 0; i < curve.size(); ++i) {
    if (std::abs(curve[i]) > radius) continue;
    const double v = beta[i] + 2.0 * t * theta[i];
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  return hi >= lo ? hi - lo : 0.0;
}

namespace {

// Parameter along the curve (node index plus fraction) where |z| crosses r.
std::optional<double> circle_crossing(const PlanarCurve& c, double r, bool first) {
  const std::size_t segs = c.segment_count();
  for (std::size_t n = 0; n < segs; ++n) {
    const std::size_t k = first ? n : segs - 1 - n;
    const double ra = std::abs(c.segment_start(k));
    const double rb = std::abs(c.segment_end(k));
    if ((ra - r) * (rb - r) > 0.0 || ra == rb) continue;
    return static_cast<double>(k) + (r - ra) / (rb - ra);
  }
  return std::nullopt;
}

double interpolate(const std::vector<double>& v, double param) {
  const auto k = static_cast<std::size_t>(std::floor(param));
  if (k + 1 >= v.size()) return v.back();
  const double f = param - static_cast<double>(k);
  return (1.0 - f) * v[k] + f * v[k + 1];
}

}  // namespace

Report angle_jump_tracker(const Trajectory& trajectory, const AngleJumpOptions& options) {
  Report report;
  report.check = "angle_jump";
  report.params = {{"r_a", options.r_a}, {"r_b", options.r_b}, {"component", options.component}};
  if (!(options.r_a < options.r_b)) throw Error(ErrorCode::kConfig, "angle jump tracker needs r_a < r_b");
  TimeSeries series;
  series.name = "f";
  nlohmann::json gaps = nlohmann::json::array();
  for (const Snapshot& s : trajectory.samples) {
    if (options.component >= s.curves.size()) {
      gaps.push_back({{"t", s.time}, {"reason", "component missing"}});
      continue;
    }
    const PlanarCurve& c = s.curves[options.component];
    const bool pinned = options.component < s.pinned.size() && s.pinned[options.component];
    const auto pa = circle_crossing(c, options.r_a, true);
    const auto pb = circle_crossing(c, options.r_b, false);
    if (!pa || !pb || *pb < *pa) {
      gaps.push_back({{"t", s.time}, {"reason", "anchor circle not crossed"}});
      continue;
    }
    const auto theta = lagrangian_angle(c, pinned ? OriginStencil::kOddGhost : OriginStencil::kOneSided);
    series.push(s.time, interpolate(theta, *pb) - interpolate(theta, *pa));
  }

  nlohmann::json jumps = nlohmann::json::array();
  nlohmann::json lipschitz = nlohmann::json::array();
  bool jumps_ok = true;
  double lip = 0.0;
  std::size_t window_start = 0;
  auto close_window = [&](std::size_t end) {
    if (end > window_start) {
      lipschitz.push_back({{"t_from", series.samples[window_start].first},
                           {"t_to", series.samples[end].first},
                           {"constant", lip}});
    }
    lip = 0.0;
  };
  for (std::size_t k = 1; k < series.samples.size(); ++k) {
    const auto& [t0, f0] = series.samples[k - 1];
    const auto& [t1, f1] = series.samples[k];
    const double df = f1 - f0;
    if (std::abs(df) > kPi) {
      const double turns = std::round(df / (2.0 * kPi));
      const double off = std::abs(df - 2.0 * kPi * turns);
      const bool ok = turns != 0.0 && off <= options.jump_tolerance;
      jumps_ok = jumps_ok && ok;
      jumps.push_back({{"t_before", t0}, {"t_after", t1}, {"magnitude", df}, {"multiple_of_2pi", turns},
                       {"deviation", off}, {"ok", ok}});
      close_window(k - 1);
      window_start = k;
    } else {
      lip = std::max(lip, std::abs(df) / (t1 - t0));
    }
  }
  if (!series.samples.empty()) close_window(series.samples.size() - 1);
  bool lip_finite = true;
  for (const auto& w : lipschitz) lip_finite = lip_finite && std::isfinite(w["constant"].get<double>());

  report.details = {{"jumps", jumps}, {"lipschitz", lipschitz}, {"gaps", gaps}, {"samples", series.size()},
                    {"anchors", "first crossing of |z| = r_a, last crossing of |z| = r_b"}};
  if (series.size() < 2) {
    report.verdict = Verdict::kNotApplicable;
  } else {
    report.verdict = jumps_ok && lip_finite && gaps.empty() ? Verdict::kPass : Verdict::kFail;
  }
  report.series = std::move(series);
  return report;
}

namespace {

struct LoopSample {
  double t;
  bool present = false;
  LoopDescriptor loop;
};

// Smallest origin-avoiding or whole-curve loop of a component.
std::vector<LoopSample> loop_samples(const Trajectory& trajectory, std::size_t component) {
  std::vector<LoopSample> out;
  for (const Snapshot& s : trajectory.samples) {
    LoopSample ls;
    ls.t = s.time;
    if (component < s.curves.size()) {
      auto loops = extract_loops(s.curves[component]);
      if (!loops.empty()) {
        auto best = std::min_element(loops.begin(), loops.end(), [](const auto& a, const auto& b) {
          return std::abs(a.area) < std::abs(b.area);
        });
        ls.present = true;
        ls.loop = *best;
      }
    }
    out.push_back(std::move(ls));
  }
  return out;
}

}  // namespace

Report loop_area_law_check(const Trajectory& trajectory, const LoopAreaOptions& options) {
  Report report;
  report.check = "loop_area_law";
  report.params = {{"component", options.component}, {"tolerance", options.tolerance},
                   {"guard_diameter", options.guard_diameter}};
  const auto samples = loop_samples(trajectory, options.component);
  TimeSeries residual;
  residual.name = "loop_area_residual";
  TimeSeries area;
  area.name = "loop_area";
  double worst = 0.0;
  std::size_t resolved = 0;
  std::size_t last_seen = 0;
  for (std::size_t k = 0; k < samples.size(); ++k) {
    if (samples[k].present) {
      area.push(samples[k].t, std::abs(samples[k].loop.area));
      last_seen = k;
    }
  }
  for (std::size_t k = 1; k + 1 < samples.size(); ++k) {
    const auto& prev = samples[k - 1];
    const auto& cur = samples[k];
    const auto& next = samples[k + 1];
    if (!prev.present || !cur.present || !next.present) continue;
    if (next.loop.diameter < options.guard_diameter || cur.loop.diameter < options.guard_diameter) continue;
    const double rate = (std::abs(next.loop.area) - std::abs(prev.loop.area)) / (next.t - prev.t);
    const double predicted = cur.loop.exterior_angle - 2.0 * kPi - 2.0 * kPi * std::abs(cur.loop.winds_origin);
    const double rel = std::abs(rate - predicted) / std::abs(predicted);
    residual.push(cur.t, rate - predicted);
    worst = std::max(worst, rel);
    ++resolved;
  }
  report.details = {{"resolved_samples", resolved},
                    {"max_relative_residual", worst},
                    {"last_sighting", samples.empty() ? 0.0 : samples[last_seen].t},
                    {"area_series", series_to_json(area)}};
  if (resolved < options.min_samples) {
    report.verdict = Verdict::kNotApplicable;
    report.details["reason"] = "loop resolved at fewer than the required samples";
  } else {
    report.verdict = worst < options.tolerance ? Verdict::kPass : Verdict::kFail;
  }
  report.series = std::move(residual);
  return report;
}

namespace {

Report count_report(std::string check, const std::vector<std::pair<double, std::size_t>>& total,
                    const std::vector<std::pair<double, std::size_t>>& off_origin, bool unreliable) {
  Report report;
  report.check = std::move(check);
  TimeSeries series;
  series.name = "intersections";
  TimeSeries off;
  off.name = "off_origin_intersections";
  bool monotone = true;
  for (std::size_t k = 0; k < total.size(); ++k) {
    series.push(total[k].first, static_cast<double>(total[k].second));
    off.push(off_origin[k].first, static_cast<double>(off_origin[k].second));
    if (k > 0 && total[k].second > total[k - 1].second) monotone = false;
  }
  report.details = {{"initial", total.empty() ? 0 : total.front().second},
                    {"final", total.empty() ? 0 : total.back().second},
                    {"max_off_origin", 0},
                    {"off_origin_series", series_to_json(off)}};
  std::size_t max_off = 0;
  for (const auto& [t, n] : off_origin) max_off = std::max(max_off, n);
  report.details["max_off_origin"] = max_off;
  if (total.empty()) {
    report.verdict = Verdict::kNotApplicable;
  } else if (unreliable) {
    report.verdict = Verdict::kUnreliable;
  } else {
    report.verdict = monotone ? Verdict::kPass : Verdict::kFail;
  }
  report.series = std::move(series);
  return report;
}

}  // namespace

Report intersection_count_series(const Trajectory& trajectory, const PlanarCurve& reference,
                                 std::size_t component) {
  std::vector<std::pair<double, std::size_t>> total;
  std::vector<std::pair<double, std::size_t>> off;
  bool unreliable = false;
  for (const Snapshot& s : trajectory.samples) {
    if (component >= s.curves.size()) continue;
    const auto hits = mutual_intersections(s.curves[component], reference);
    for (const auto& h : hits) unreliable = unreliable || h.unreliable;
    const std::size_t shared = curves_share_origin(s.curves[component], reference) ? 1 : 0;
    total.emplace_back(s.time, hits.size() + shared);
    off.emplace_back(s.time, hits.size());
  }
  Report r = count_report("intersection_count", total, off, unreliable);
  r.params = {{"component", component}, {"reference", "fixed"}};
  return r;
}

Report intersection_count_series(const Trajectory& trajectory, std::size_t first, std::size_t second) {
  std::vector<std::pair<double, std::size_t>> total;
  std::vector<std::pair<double, std::size_t>> off;
  bool unreliable = false;
  for (const Snapshot& s : trajectory.samples) {
    if (first >= s.curves.size() || second >= s.curves.size()) continue;
    const auto hits = mutual_intersections(s.curves[first], s.curves[second]);
    for (const auto& h : hits) unreliable = unreliable || h.unreliable;
    const std::size_t shared = curves_share_origin(s.curves[first], s.curves[second]) ? 1 : 0;
    total.emplace_back(s.time, hits.size() + shared);
    off.emplace_back(s.time, hits.size());
  }
  Report r = count_report("intersection_count", total, off, unreliable);
  r.params = {{"first", first}, {"second", second}, {"reference", "co-evolved"}};
  return r;
}

Report singular_time_bound_check(const Trajectory& trajectory, std::size_t component) {
  Report report;
  report.check = "singular_time_bound";
  report.params = {{"component", component}, {"stride", trajectory.stride}};
  const auto samples = loop_samples(trajectory, component);
  if (samples.empty() || !samples.front().present || samples.front().loop.winds_origin != 0) {
    report.verdict = Verdict::kNotApplicable;
    report.details = {{"reason", "no origin-avoiding loop at the first sample"}};
    return report;
  }
  const double t_start = samples.front().t;
  const double a_start = std::abs(samples.front().loop.area);
  const double bound = t_start + a_start / kPi;
  std::optional<double> collapse;
  for (const Event& e : trajectory.events) {
    if (e.kind == EventKind::kLoopCollapse && e.payload.value("component", std::size_t{0}) == component) {
      collapse = e.t;
      break;
    }
  }
  const double t_end = trajectory.samples.back().time;
  report.details = {{"t_start", t_start}, {"area_start", a_start}, {"bound", bound},
                    {"bound_with_stride", bound + trajectory.stride}};
  if (collapse) {
    report.details["t_collapse"] = *collapse;
    report.details["margin"] = bound + trajectory.stride - *collapse;
    report.verdict = *collapse <= bound + trajectory.stride ? Verdict::kPass : Verdict::kFail;
  } else if (t_end > bound + trajectory.stride) {
    report.details["t_collapse"] = nullptr;
    report.details["reason"] = "no collapse observed although the bound has passed";
    report.verdict = Verdict::kFail;
  } else {
    report.details["t_collapse"] = nullptr;
    report.details["reason"] = "run ended before the bound";
    report.verdict = Verdict::kNotApplicable;
  }
  return report;
}

}  // namespace lmcf
