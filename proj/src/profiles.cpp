#include "lmcf/profiles.hpp"

#include <limits>
#include <numbers>
#include <sstream>

#include "lmcf/geometry.hpp"

namespace lmcf {

namespace {

constexpr double kPi = std::numbers::pi;

double smoothstep(double x) {
  x = std::clamp(x, 0.0, 1.0);
  return x * x * x * (x * (6.0 * x - 15.0) + 10.0);
}

struct NodeGeometry {
  Point tangent;
  double curvature;
};

// Fourth order tangent and curvature in the node index. Valid for any
// smooth parametrisation, so node spacing need not be uniform as long as
// it varies smoothly.
NodeGeometry five_point_geometry(std::span<const Point> z, std::size_t i) {
  const Point d1 = (-z[i + 2] + 8.0 * z[i + 1] - 8.0 * z[i - 1] + z[i - 2]) / 12.0;
  const Point d2 = (-z[i + 2] + 16.0 * z[i + 1] - 30.0 * z[i] + 16.0 * z[i - 1] - z[i - 2]) / 12.0;
  const double speed = std::abs(d1);
  return {d1 / speed, cross(d1, d2) / (speed * speed * speed)};
}

template <class F>
ResidualStats residual_over_interior(const PlanarCurve& curve, F residual) {
  ResidualStats stats;
  const auto z = curve.nodes();
  if (z.size() < 5) return stats;
  double sum = 0.0;
  for (std::size_t i = 2; i + 2 < z.size(); ++i) {
    const double r = residual(z[i], five_point_geometry(z, i));
    stats.max = std::max(stats.max, std::abs(r));
    sum += r * r;
    ++stats.count;
  }
  stats.l2 = std::sqrt(sum / static_cast<double>(stats.count));
  return stats;
}

// Concatenates pieces that share their joint points.
std::vector<Point> join(const std::vector<std::vector<Point>>& pieces) {
  std::vector<Point> out;
  for (const auto& p : pieces) {
    auto begin = p.begin();
    if (!out.empty()) ++begin;
    out.insert(out.end(), begin, p.end());
  }
  return out;
}

std::vector<Point> straight(Point a, Point b, double spacing) {
  const auto n = static_cast<std::size_t>(std::max(1.0, std::round(std::abs(b - a) / spacing)));
  std::vector<Point> pts;
  for (std::size_t k = 0; k <= n; ++k) {
    const double f = static_cast<double>(k) / static_cast<double>(n);
    pts.push_back(k == n ? b : a + f * (b - a));
  }
  return pts;
}

std::vector<Point> resampled_piece(std::vector<Point> dense, double spacing) {
  const PlanarCurve c = resample(PlanarCurve(std::move(dense), false), spacing);
  return std::vector<Point>(c.nodes().begin(), c.nodes().end());
}

// Lifted line t + i*height*b(t) in the upper half plane, b a plateau
// cutoff, pushed through the wedge map zeta -> zeta^power.
struct WedgeArc {
  double height;
  double plateau;
  double ramp;
  double power;

  double half_width() const { return plateau + ramp; }
  Point chart(double t) const {
    const double b = 1.0 - smoothstep((std::abs(t) - plateau) / ramp);
    return Point(t, height * b);
  }
  Point operator()(double t) const {
    const Point zeta = chart(t);
    return std::polar(std::pow(std::abs(zeta), power), power * std::atan2(zeta.imag(), zeta.real()));
  }
  // Extremes of |zeta| over the support of the cutoff.
  std::pair<double, double> modulus_range() const {
    double lo = std::numeric_limits<double>::infinity();
    double hi = 0.0;
    const int n = 4000;
    for (int k = 0; k <= n; ++k) {
      const double t = -half_width() + 2.0 * half_width() * k / n;
      const double m = std::abs(chart(t));
      lo = std::min(lo, m);
      hi = std::max(hi, m);
    }
    return {lo, hi};
  }
  std::vector<Point> dense(double scale, Point rotation, int n = 8000) const {
    std::vector<Point> pts;
    for (int k = 0; k <= n; ++k) {
      const double t = -half_width() + 2.0 * half_width() * k / n;
      pts.push_back(scale * rotation * (*this)(t));
    }
    return pts;
  }
};

double plane_angle(double ray_angle) {
  const double a = std::remainder(ray_angle, kPi);
  return a < 0.0 ? a + kPi : a;
}

double distance_to_ray(Point p, double angle) {
  const Point d = std::polar(1.0, angle);
  const double along = dot(p, d);
  return along <= 0.0 ? std::abs(p) : std::abs(cross(d, p));
}

}  // namespace

bool ValidationReport::ok() const {
  return std::all_of(checks.begin(), checks.end(), [](const ValidationCheck& c) { return c.pass; });
}

void ValidationReport::add(std::string name, bool pass, double measured, double limit) {
  checks.push_back({std::move(name), pass, measured, limit});
}

nlohmann::json ValidationReport::to_json() const {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& c : checks) {
    arr.push_back({{"name", c.name}, {"pass", c.pass}, {"measured", c.measured}, {"limit", c.limit}});
  }
  return {{"constructor", constructor}, {"ok", ok()}, {"checks", arr}};
}

EquivariantProfile ray(double angle, double length, double spacing) {
  if (!(spacing > 0.0) || !(length > 3.0 * spacing)) {
    throw Error(ErrorCode::kDegenerateCurve, "ray needs length > 3 * spacing");
  }
  const Point dir = std::polar(1.0, angle);
  const auto n = static_cast<std::size_t>(std::round(length / spacing));
  std::vector<Point> pts;
  pts.reserve(n + 1);
  for (std::size_t k = 0; k <= n; ++k) pts.push_back(dir * (length * static_cast<double>(k) / static_cast<double>(n)));
  pts[0] = Point(0.0, 0.0);
  return EquivariantProfile(PlanarCurve(std::move(pts), false), angle);
}

WhitneyResult whitney_curve(const WhitneySpec& spec) {
  if (!(spec.theta2 > kPi / 2) || !(spec.theta3 > spec.theta2) || !(spec.theta3 < kPi)) {
    std::ostringstream msg;
    msg << "ray angles must satisfy pi/2 < theta2 < theta3 < pi (got " << spec.theta2 << ", "
        << spec.theta3 << ")";
    throw Error(ErrorCode::kConfig, msg.str());
  }
  if (!(spec.outer_scale > 0.0) || !(spec.epsilon > 0.0) || !(spec.epsilon < spec.outer_scale)) {
    throw Error(ErrorCode::kConfig, "whitney curve needs 0 < epsilon < outer_scale");
  }
  if (!(spec.arc_height > 0.0) || !(spec.arc_plateau >= 0.0) || !(spec.arc_ramp > 0.0) ||
      !(spec.extent > 3.0) || !(spec.spacing > 0.0)) {
    throw Error(ErrorCode::kConfig, "whitney arc parameters must be positive and extent > 3");
  }

  // Built at unit outer scale with inner scale e, then dilated.
  const double e = spec.epsilon / spec.outer_scale;
  const double h = spec.spacing / spec.outer_scale;
  const Point dir2 = std::polar(1.0, spec.theta2);
  const Point dir3 = std::polar(1.0, spec.theta3);

  const WedgeArc corner{spec.arc_height, spec.arc_plateau, spec.arc_ramp, spec.theta2 / kPi};
  const auto [corner_lo, corner_hi] = corner.modulus_range();
  const double eta1 = 0.8 * e / std::pow(corner_hi, corner.power);
  const double corner_end = eta1 * std::pow(corner.half_width(), corner.power);

  const WedgeArc uturn{spec.arc_height, spec.arc_plateau, spec.arc_ramp, (spec.theta3 - spec.theta2) / kPi};
  const auto [uturn_lo, uturn_hi] = uturn.modulus_range();
  // After inversion the bump occupies radii [r_in, r_in * (hi/lo)^power].
  const double r_in = 1.1;
  const double r_out = r_in * std::pow(uturn_hi / uturn_lo, uturn.power);
  if (!(r_out < 2.9)) {
    std::ostringstream msg;
    msg << "turning arc reaches radius " << r_out << ", outside the annulus A(1,3)";
    throw Error(ErrorCode::kInfeasible, msg.str());
  }
  const double k_inv = r_in * std::pow(uturn_hi, uturn.power);
  std::vector<Point> uturn_pts;
  for (const Point& z : uturn.dense(1.0, dir2)) uturn_pts.push_back(k_inv / std::conj(z));
  const Point uturn_start = r_in * dir3;
  const Point uturn_end = r_in * dir2;
  uturn_pts.front() = uturn_start;
  uturn_pts.back() = uturn_end;

  auto corner_pts = corner.dense(eta1, Point(1.0, 0.0));
  corner_pts.front() = corner_end * dir2;
  corner_pts.back() = Point(corner_end, 0.0);

  std::vector<std::vector<Point>> pieces;
  pieces.push_back(straight(Point(0.0, 0.0), uturn_start, h));
  pieces.push_back(resampled_piece(uturn_pts, h));
  pieces.push_back(straight(uturn_end, corner_end * dir2, h));
  const std::size_t arc_offset = join(pieces).size() - 1;
  // The inner arc is tiny; sample it at a proportionally finer spacing.
  const double arc_h = std::min(h, corner_end / 20.0);
  pieces.push_back(resampled_piece(corner_pts, arc_h));
  const std::size_t arc_last = join(pieces).size() - 1;
  pieces.push_back(straight(Point(corner_end, 0.0), Point(spec.extent, 0.0), h));

  std::vector<Point> nodes = join(pieces);
  for (Point& p : nodes) p *= spec.outer_scale;
  nodes[0] = Point(0.0, 0.0);
  WhitneyResult result;
  result.profile = EquivariantProfile(PlanarCurve(std::move(nodes), false), 0.0);
  result.arc_first = arc_offset;
  result.arc_last = arc_last;

  const PlanarCurve& c = result.profile.curve();
  const double big_r = spec.outer_scale;
  ValidationReport& report = result.report;
  report.constructor = "whitney";

  double outer_dev = 0.0;
  double middle_dev = 0.0;
  double min_imag = 0.0;
  for (const Point& p : c.nodes()) {
    const double r = std::abs(p);
    if (r > 3.0 * big_r) outer_dev = std::max(outer_dev, distance_to_ray(p, 0.0));
    if (r > spec.epsilon && r < big_r) {
      const double d = std::min({distance_to_ray(p, 0.0), distance_to_ray(p, spec.theta2),
                                 distance_to_ray(p, spec.theta3)});
      middle_dev = std::max(middle_dev, d);
    }
    min_imag = std::min(min_imag, p.imag());
  }
  report.add("outer_annulus_on_positive_axis", outer_dev <= 1e-9 * big_r, outer_dev, 1e-9 * big_r);
  report.add("middle_annulus_on_three_rays", middle_dev <= 1e-9 * big_r, middle_dev, 1e-9 * big_r);
  report.add("upper_half_plane", min_imag >= -1e-12 * big_r, min_imag, -1e-12 * big_r);
  report.add("embedded", self_intersections(c).empty(), static_cast<double>(self_intersections(c).size()), 0.0);

  const auto theta = lagrangian_angle(c, OriginStencil::kOddGhost);
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (std::size_t i = arc_offset; i <= arc_last; ++i) {
    lo = std::min(lo, theta[i]);
    hi = std::max(hi, theta[i]);
  }
  const double osc = hi - lo;
  report.add("arc_angle_oscillation", osc < kPi / 2, osc, kPi / 2);
  if (!(osc < kPi / 2)) {
    std::ostringstream msg;
    msg << "connecting arc has Lagrangian angle oscillation " << osc << " >= pi/2";
    throw Error(ErrorCode::kInfeasible, msg.str());
  }
  return result;
}

SigmaResult sigma_curve(const SigmaSpec& spec) {
  if (!(spec.loop_area > 0.0)) throw Error(ErrorCode::kConfig, "loop_area must be positive");
  if (!(spec.cone_param > 0.0) || !(spec.cone_param < 0.25)) {
    throw Error(ErrorCode::kConfig, "cone_param must lie in (0, 0.25)");
  }
  if (!(spec.spacing > 0.0) || !(spec.truncation_radius > 0.0)) {
    throw Error(ErrorCode::kConfig, "spacing and truncation_radius must be positive");
  }

  // Unit-scale template: straight start, clockwise loop, then a bend onto
  // the direction pi. The tangent angle is a C^2 function of arclength.
  constexpr double kStart = 2.3;
  constexpr double kLead = 2.0;
  constexpr double kLoopLength = 4.0;
  constexpr double kGap = 0.5;
  constexpr double kBendLength = 1.5;
  const double loop_turn = -(2.0 * kPi - kPi / 2);
  const double after_loop = kStart + loop_turn;
  const double bend_turn = -kPi - after_loop;
  auto heading = [&](double s) {
    double phi = kStart + loop_turn * smoothstep((s - kLead) / kLoopLength);
    phi += bend_turn * smoothstep((s - kLead - kLoopLength - kGap) / kBendLength);
    return phi;
  };
  const double total = kLead + kLoopLength + kGap + kBendLength;
  const double fine = 0.002;
  const auto unit = integrate_heading(Point(0.0, 0.0), total, fine, heading);
  const auto unit_loops = extract_loops(PlanarCurve(unit, false));
  if (unit_loops.size() != 1) throw Error(ErrorCode::kInfeasible, "sigma template does not have a single loop");
  const double scale = std::sqrt(spec.loop_area / std::abs(unit_loops[0].area));

  std::vector<Point> dense;
  for (const Point& p : unit) dense.push_back(scale * p);
  const Point end = dense.back();
  const double tail_x = -std::sqrt(std::max(0.0, spec.truncation_radius * spec.truncation_radius - end.imag() * end.imag()));
  double max_base = 0.0;
  for (const Point& p : dense) max_base = std::max(max_base, std::abs(p));
  if (!(max_base < 0.5 * spec.truncation_radius) || !(tail_x < end.real())) {
    std::ostringstream msg;
    msg << "loop area " << spec.loop_area << " needs radius " << max_base
        << ", too large for truncation radius " << spec.truncation_radius;
    throw Error(ErrorCode::kInfeasible, msg.str());
  }
  const auto tail = straight(end, Point(tail_x, end.imag()), fine * scale);
  dense.insert(dense.end(), tail.begin() + 1, tail.end());
  PlanarCurve curve = resample(PlanarCurve(std::move(dense), false), spec.spacing);

  SigmaResult result;
  result.profile = EquivariantProfile(curve, kPi, spec.cone_param);
  ValidationReport& report = result.report;
  report.constructor = "sigma";
  const auto crossings = self_intersections(curve);
  report.add("single_self_intersection", crossings.size() == 1, static_cast<double>(crossings.size()), 1.0);
  const auto loops = extract_loops(curve, crossings);
  const double area = loops.empty() ? 0.0 : std::abs(loops[0].area);
  const double area_err = std::abs(area - spec.loop_area) / spec.loop_area;
  report.add("loop_area_relative_error", area_err < 0.02, area_err, 0.02);
  report.add("loop_winds_origin", !loops.empty() && loops[0].winds_origin == 0,
             loops.empty() ? 0.0 : loops[0].winds_origin, 0.0);

  const double a = spec.cone_param;
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (std::size_t i = 1; i < curve.size(); ++i) {
    const double ang = std::arg(curve[i]);
    const double lifted = ang < 0.0 ? ang + 2.0 * kPi : ang;
    lo = std::min(lo, lifted);
    hi = std::max(hi, lifted);
  }
  const bool in_cone = lo > kPi / 2 + 2 * a && hi < kPi + a;
  report.add("cone_lower", lo > kPi / 2 + 2 * a, lo, kPi / 2 + 2 * a);
  report.add("cone_upper", hi < kPi + a, hi, kPi + a);
  double slope = 0.0;
  for (std::size_t i = 1; i < curve.size(); ++i) {
    if (std::abs(curve[i]) < 0.5 * spec.truncation_radius) continue;
    const Point d = curve[i] - curve[i - 1];
    slope = std::max(slope, std::abs(d.imag() / d.real()));
  }
  report.add("far_field_slope", slope < 1e-2, slope, 1e-2);
  if (!in_cone) {
    std::ostringstream msg;
    msg << "sigma leaves the cone: node angles in [" << lo << ", " << hi << "]";
    throw Error(ErrorCode::kInfeasible, msg.str());
  }
  return result;
}

LawlorResult lawlor_profile(double offset, double direction, double extent, double spacing) {
  LawlorResult result;
  const double psi = 0.5 * direction;
  if (offset == 0.0) {
    result.singular = true;
    result.components.push_back(ray(psi, extent, spacing).curve());
    result.components.push_back(ray(psi + kPi / 2, extent, spacing).curve());
    result.asymptote_angles = {psi, psi + kPi / 2};
    return result;
  }
  result.components.push_back(inverse_branch(LineParams{offset, direction}, 1, extent, spacing));
  result.asymptote_angles = offset > 0.0 ? std::array<double, 2>{psi, psi + kPi / 2}
                                         : std::array<double, 2>{psi - kPi / 2, psi};
  return result;
}

double stationarity_residual(const PlanarCurve& curve) {
  return residual_over_interior(curve, [](Point z, const NodeGeometry& g) {
           return g.curvature - dot(z, Point(0.0, 1.0) * g.tangent) / std::norm(z);
         }).max;
}

ResidualStats expander_residual(const PlanarCurve& curve) {
  return residual_over_interior(curve, [](Point z, const NodeGeometry& g) {
    const double r2 = std::norm(z);
    if (r2 == 0.0) return 0.0;
    return g.curvature - dot(z, Point(0.0, 1.0) * g.tangent) * (0.5 + 1.0 / r2);
  });
}

namespace {

struct ShotState {
  Point z;
  double phi;
};

double expander_rhs(const ShotState& st) {
  const double r2 = std::norm(st.z);
  const Point normal = std::polar(1.0, st.phi + kPi / 2);
  return dot(st.z, normal) * (0.5 + 1.0 / r2);
}

ShotState rk4(const ShotState& st, double ds) {
  auto deriv = [](const ShotState& s) { return std::pair<Point, double>(std::polar(1.0, s.phi), expander_rhs(s)); };
  auto shift = [](const ShotState& s, std::pair<Point, double> d, double f) {
    return ShotState{s.z + f * d.first, s.phi + f * d.second};
  };
  const auto k1 = deriv(st);
  const auto k2 = deriv(shift(st, k1, 0.5 * ds));
  const auto k3 = deriv(shift(st, k2, 0.5 * ds));
  const auto k4 = deriv(shift(st, k3, ds));
  return ShotState{st.z + ds / 6.0 * (k1.first + 2.0 * k2.first + 2.0 * k3.first + k4.first),
                   st.phi + ds / 6.0 * (k1.second + 2.0 * k2.second + 2.0 * k3.second + k4.second)};
}

// Half branch from the bisector point out to |z| = extent.
std::vector<ShotState> shoot(double r0, double bisector, double extent, double ds) {
  std::vector<ShotState> path{{std::polar(r0, bisector), bisector - kPi / 2}};
  const std::size_t cap = static_cast<std::size_t>(20.0 * extent / ds) + 16;
  while (std::abs(path.back().z) < extent && path.size() < cap) path.push_back(rk4(path.back(), ds));
  return path;
}

}  // namespace

ExpanderResult expander_profile(const ExpanderSpec& spec) {
  const double theta2 = spec.opening_angle;
  if (!(theta2 > kPi / 2) || !(theta2 <= kPi)) {
    throw Error(ErrorCode::kConfig, "opening_angle must lie in (pi/2, pi]");
  }
  if (!(spec.spacing > 0.0) || !(spec.ode_step > 0.0) || !(spec.extent > 0.0)) {
    throw Error(ErrorCode::kConfig, "expander spacing, ode_step and extent must be positive");
  }
  ExpanderResult result;
  if (theta2 == kPi) {
    // The cone is the line through the origin; it is its own expander.
    const auto n = static_cast<std::size_t>(std::round(2.0 * spec.extent / spec.spacing));
    std::vector<Point> pts;
    for (std::size_t k = 0; k <= n; ++k) {
      pts.emplace_back(spec.extent - 2.0 * spec.extent * static_cast<double>(k) / static_cast<double>(n), 0.0);
    }
    result.curve = PlanarCurve(std::move(pts), false);
    result.asymptote_angles = {0.0, kPi};
    result.report = {{"r0", 0.0}, {"ode_residual", 0.0}, {"asymptote_angles", {0.0, kPi}}, {"degenerate", true}};
    return result;
  }

  // The branch lies in the wedge between the rays theta2 and pi; together
  // with its reflection through the origin it is asymptotic to the planes
  // at angles 0 and theta2.
  const double bisector = 0.5 * (theta2 + kPi);
  auto miss = [&](double r0) {
    return std::arg(shoot(r0, bisector, spec.extent, spec.ode_step).back().z) - theta2;
  };
  double lo = spec.r0_low;
  double hi = spec.r0_high;
  const double f_lo = miss(lo);
  const double f_hi = miss(hi);
  if (!(f_lo < 0.0 && f_hi > 0.0)) {
    std::ostringstream msg;
    msg << "no sign change of the outgoing angle on [" << lo << ", " << hi << "]: " << f_lo << ", " << f_hi;
    throw Error(ErrorCode::kShootingBracket, msg.str());
  }
  int steps = 0;
  for (; steps < 200 && hi - lo > spec.tolerance * hi; ++steps) {
    const double mid = 0.5 * (lo + hi);
    (miss(mid) < 0.0 ? lo : hi) = mid;
  }
  result.r0 = 0.5 * (lo + hi);
  const auto path = shoot(result.r0, bisector, spec.extent, spec.ode_step);

  // Residual of the integrated tangent angle against the equation, with a
  // fourth order difference of the stored angles.
  double ode_res = 0.0;
  for (std::size_t i = 2; i + 2 < path.size(); ++i) {
    const double dphi = (-path[i + 2].phi + 8 * path[i + 1].phi - 8 * path[i - 1].phi + path[i - 2].phi) /
                        (12.0 * spec.ode_step);
    ode_res = std::max(ode_res, std::abs(dphi - expander_rhs(path[i])));
  }
  result.ode_residual = ode_res;

  const auto stride = static_cast<std::size_t>(std::max(1.0, std::round(spec.spacing / spec.ode_step)));
  std::vector<Point> half;
  for (std::size_t i = 0; i < path.size(); i += stride) half.push_back(path[i].z);
  const Point mirror = std::polar(1.0, 2.0 * bisector);
  std::vector<Point> nodes;
  for (auto it = half.rbegin(); it != half.rend(); ++it) nodes.push_back(mirror * std::conj(*it));
  nodes.insert(nodes.end(), half.begin() + 1, half.end());
  result.curve = PlanarCurve(std::move(nodes), false);

  const auto& c = result.curve;
  double sym = 0.0;
  for (std::size_t i = 0; i < c.size(); ++i) {
    sym = std::max(sym, std::abs(mirror * std::conj(c[i]) - c[c.size() - 1 - i]));
  }
  result.symmetry_error = sym;
  result.asymptote_angles = {std::arg(c[c.size() - 1]), std::arg(c[0])};
  const auto stats = expander_residual(c);
  result.report = {{"r0", result.r0},
                   {"ode_residual", ode_res},
                   {"curve_residual_max", stats.max},
                   {"curve_residual_l2", stats.l2},
                   {"asymptote_angles", {result.asymptote_angles[0], result.asymptote_angles[1]}},
                   {"symmetry_error", sym},
                   {"plane_angles", {plane_angle(result.asymptote_angles[0]), plane_angle(result.asymptote_angles[1])}},
                   {"bisection_steps", steps}};
  return result;
}

}  // namespace lmcf
