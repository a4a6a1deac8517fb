#include "lmcf/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <tuple>
#include <utility>

namespace lmcf {

namespace {

constexpr double kPi = std::numbers::pi;

Point normalized(Point v) {
  const double n = std::abs(v);
  return n > 0.0 ? v / n : Point(0.0, 0.0);
}

// Signed curvature of the circle through a, b, c (positive for a left turn).
double circumcircle_curvature(Point a, Point b, Point c) {
  const Point u = b - a;
  const Point v = c - b;
  const Point w = c - a;
  const double denom = std::abs(u) * std::abs(v) * std::abs(w);
  if (denom == 0.0) return 0.0;
  return 2.0 * cross(u, v) / denom;
}

// Derivative with respect to arclength at node i from a nonuniform
// three-point stencil (second order).
Point arclength_derivative(Point zm, Point z0, Point zp, double hm, double hp) {
  return (hm * hm * (zp - z0) + hp * hp * (z0 - zm)) / (hm * hp * (hm + hp));
}

Point one_sided_derivative(Point z0, Point z1, Point z2, double h0, double h1) {
  // Second-order forward difference on a nonuniform grid.
  const double a = -(2.0 * h0 + h1) / (h0 * (h0 + h1));
  const double b = (h0 + h1) / (h0 * h1);
  const double c = -h0 / (h1 * (h0 + h1));
  return a * z0 + b * z1 + c * z2;
}

std::size_t cyclic_gap(std::size_t i, std::size_t j, std::size_t m, bool closed) {
  const std::size_t d = j > i ? j - i : i - j;
  return closed ? std::min(d, m - d) : d;
}

struct SegmentHit {
  bool hit = false;
  double t = 0.0;
  double u = 0.0;
  double angle = 0.0;
};

SegmentHit intersect_segments(Point p0, Point p1, Point q0, Point q1) {
  SegmentHit out;
  const Point r = p1 - p0;
  const Point s = q1 - q0;
  const double den = cross(r, s);
  const double scale = std::abs(r) * std::abs(s);
  if (scale == 0.0 || std::abs(den) <= 1e-15 * scale) return out;
  const Point qp = q0 - p0;
  const double t = cross(qp, s) / den;
  const double u = cross(qp, r) / den;
  if (t < 0.0 || t >= 1.0 || u < 0.0 || u >= 1.0) return out;
  out.hit = true;
  out.t = t;
  out.u = u;
  out.angle = std::asin(std::min(1.0, std::abs(den) / scale));
  return out;
}

struct Box {
  double x0, y0, x1, y1;
};

Box segment_box(Point a, Point b) {
  return {std::min(a.real(), b.real()), std::min(a.imag(), b.imag()),
          std::max(a.real(), b.real()), std::max(a.imag(), b.imag())};
}

// Uniform grid over segment bounding boxes; returns candidate pairs (i, j)
// with i from set A and j from set B (or i < j when both sets coincide).
std::vector<std::pair<std::size_t, std::size_t>> candidate_pairs(
    const std::vector<std::pair<Point, Point>>& a, const std::vector<std::pair<Point, Point>>* b) {
  const bool same = (b == nullptr);
  const auto& bs = same ? a : *b;
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  if (a.empty() || bs.empty()) return pairs;

  Box all = segment_box(a[0].first, a[0].second);
  double max_len = 0.0;
  auto extend = [&](const std::vector<std::pair<Point, Point>>& segs) {
    for (const auto& [p, q] : segs) {
      const Box bx = segment_box(p, q);
      all.x0 = std::min(all.x0, bx.x0);
      all.y0 = std::min(all.y0, bx.y0);
      all.x1 = std::max(all.x1, bx.x1);
      all.y1 = std::max(all.y1, bx.y1);
      max_len = std::max(max_len, std::abs(q - p));
    }
  };
  extend(a);
  if (!same) extend(bs);

  const std::size_t total = a.size() + (same ? 0 : bs.size());
  if (total < 48) {
    for (std::size_t i = 0; i < a.size(); ++i) {
      for (std::size_t j = same ? i + 1 : 0; j < bs.size(); ++j) pairs.emplace_back(i, j);
    }
    return pairs;
  }

  const double width = std::max(all.x1 - all.x0, 1e-300);
  const double height = std::max(all.y1 - all.y0, 1e-300);
  double cell = std::max(2.0 * max_len, 1e-300);
  auto cells_for = [&](double c) {
    return std::pair<std::size_t, std::size_t>(
        static_cast<std::size_t>(std::floor(width / c)) + 1,
        static_cast<std::size_t>(std::floor(height / c)) + 1);
  };
  auto [nx, ny] = cells_for(cell);
  while (nx * ny > 8 * total) {
    cell *= 2.0;
    std::tie(nx, ny) = cells_for(cell);
  }

  // Bucket entries: (cell, tag, index), tag 0 for A and 1 for B.
  struct Entry {
    std::size_t cell;
    int tag;
    std::size_t index;
  };
  std::vector<Entry> entries;
  auto insert = [&](const std::vector<std::pair<Point, Point>>& segs, int tag) {
    for (std::size_t k = 0; k < segs.size(); ++k) {
      const Box bx = segment_box(segs[k].first, segs[k].second);
      const auto cx0 = static_cast<std::size_t>((bx.x0 - all.x0) / cell);
      const auto cx1 = std::min(nx - 1, static_cast<std::size_t>((bx.x1 - all.x0) / cell));
      const auto cy0 = static_cast<std::size_t>((bx.y0 - all.y0) / cell);
      const auto cy1 = std::min(ny - 1, static_cast<std::size_t>((bx.y1 - all.y0) / cell));
      for (std::size_t cx = cx0; cx <= cx1; ++cx) {
        for (std::size_t cy = cy0; cy <= cy1; ++cy) entries.push_back({cy * nx + cx, tag, k});
      }
    }
  };
  insert(a, 0);
  if (!same) insert(bs, 1);
  std::sort(entries.begin(), entries.end(), [](const Entry& l, const Entry& r) {
    return std::tie(l.cell, l.tag, l.index) < std::tie(r.cell, r.tag, r.index);
  });

  for (std::size_t lo = 0; lo < entries.size();) {
    std::size_t hi = lo;
    while (hi < entries.size() && entries[hi].cell == entries[lo].cell) ++hi;
    if (same) {
      for (std::size_t p = lo; p < hi; ++p) {
        for (std::size_t q = p + 1; q < hi; ++q) {
          pairs.emplace_back(entries[p].index, entries[q].index);
        }
      }
    } else {
      std::size_t mid = lo;
      while (mid < hi && entries[mid].tag == 0) ++mid;
      for (std::size_t p = lo; p < mid; ++p) {
        for (std::size_t q = mid; q < hi; ++q) pairs.emplace_back(entries[p].index, entries[q].index);
      }
    }
    lo = hi;
  }
  std::sort(pairs.begin(), pairs.end());
  pairs.erase(std::unique(pairs.begin(), pairs.end()), pairs.end());
  return pairs;
}

std::vector<std::pair<Point, Point>> segments_of(const PlanarCurve& c) {
  std::vector<std::pair<Point, Point>> out;
  out.reserve(c.segment_count());
  for (std::size_t i = 0; i < c.segment_count(); ++i) out.emplace_back(c.segment_start(i), c.segment_end(i));
  return out;
}

double polygon_diameter(std::span<const Point> pts) {
  double d = 0.0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    for (std::size_t j = i + 1; j < pts.size(); ++j) d = std::max(d, std::abs(pts[i] - pts[j]));
  }
  return d;
}

double polyline_length(std::span<const Point> pts, bool closed) {
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) total += std::abs(pts[i + 1] - pts[i]);
  if (closed && pts.size() > 1) total += std::abs(pts.front() - pts.back());
  return total;
}

}  // namespace

double wrap_angle(double a) {
  a = std::remainder(a, 2.0 * kPi);
  if (a <= -kPi) a += 2.0 * kPi;
  return a;
}

double turning_angle(Point from, Point to) { return std::atan2(cross(from, to), dot(from, to)); }

double point_segment_distance(Point p, Point a, Point b) {
  const Point d = b - a;
  const double len2 = std::norm(d);
  if (len2 == 0.0) return std::abs(p - a);
  const double t = std::clamp(dot(p - a, d) / len2, 0.0, 1.0);
  return std::abs(p - (a + t * d));
}

PlanarCurve resample(const PlanarCurve& curve, double target_spacing) {
  if (!(target_spacing > 0.0)) {
    throw Error(ErrorCode::kDegenerateCurve, "target spacing must be positive");
  }
  const std::size_t n = curve.size();
  const bool closed = curve.closed();
  const std::size_t segs = curve.segment_count();
  std::vector<double> seg_len(segs);
  std::vector<double> cum(segs + 1, 0.0);
  for (std::size_t i = 0; i < segs; ++i) {
    seg_len[i] = std::abs(curve.segment_end(i) - curve.segment_start(i));
    cum[i + 1] = cum[i] + seg_len[i];
  }
  const double total = cum[segs];
  if (total < 3.0 * target_spacing) {
    std::ostringstream msg;
    msg << "curve length " << total << " is shorter than 3 x spacing " << target_spacing;
    throw Error(ErrorCode::kDegenerateCurve, msg.str());
  }

  auto node = [&](std::ptrdiff_t i) -> Point {
    if (closed) return curve[static_cast<std::size_t>((i % static_cast<std::ptrdiff_t>(n) + n) % n)];
    return curve[static_cast<std::size_t>(i)];
  };
  auto len = [&](std::ptrdiff_t i) -> double {
    if (closed) return seg_len[static_cast<std::size_t>((i % static_cast<std::ptrdiff_t>(segs) + segs) % segs)];
    return seg_len[static_cast<std::size_t>(i)];
  };

  std::vector<Point> deriv(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto k = static_cast<std::ptrdiff_t>(i);
    if (closed || (i > 0 && i + 1 < n)) {
      deriv[i] = arclength_derivative(node(k - 1), node(k), node(k + 1), len(k - 1), len(k));
    } else if (i == 0) {
      deriv[i] = one_sided_derivative(curve[0], curve[1], curve[2], seg_len[0], seg_len[1]);
    } else {
      deriv[i] = -one_sided_derivative(curve[n - 1], curve[n - 2], curve[n - 3], seg_len[segs - 1],
                                       seg_len[segs - 2]);
    }
  }

  const auto pieces = static_cast<std::size_t>(
      std::max(closed ? 3.0 : 2.0, std::round(total / target_spacing)));
  const double step = total / static_cast<double>(pieces);
  const std::size_t count = closed ? pieces : pieces + 1;
  std::vector<Point> out;
  out.reserve(count);
  std::size_t seg = 0;
  for (std::size_t k = 0; k < count; ++k) {
    if (k == 0) {
      out.push_back(curve[0]);
      continue;
    }
    if (!closed && k + 1 == count) {
      out.push_back(curve[n - 1]);
      continue;
    }
    const double s = step * static_cast<double>(k);
    while (seg + 1 < segs && cum[seg + 1] <= s) ++seg;
    const double h = seg_len[seg];
    const double u = (s - cum[seg]) / h;
    const Point p0 = curve.segment_start(seg);
    const Point p1 = curve.segment_end(seg);
    const Point m0 = deriv[seg] * h;
    const Point m1 = deriv[(seg + 1) % n] * h;
    const double u2 = u * u;
    const double u3 = u2 * u;
    out.push_back((2 * u3 - 3 * u2 + 1) * p0 + (u3 - 2 * u2 + u) * m0 + (-2 * u3 + 3 * u2) * p1 +
                  (u3 - u2) * m1);
  }
  return PlanarCurve(std::move(out), closed);
}

std::vector<Frame> frames(const PlanarCurve& curve, OriginStencil origin) {
  const std::size_t n = curve.size();
  std::vector<Frame> out(n);
  const bool closed = curve.closed();
  for (std::size_t i = 0; i < n; ++i) {
    Point tangent;
    double kappa = 0.0;
    if (closed || (i > 0 && i + 1 < n)) {
      const Point prev = curve[(i + n - 1) % n];
      const Point next = curve[(i + 1) % n];
      tangent = normalized(next - prev);
      kappa = circumcircle_curvature(prev, curve[i], next);
    } else if (i == 0) {
      if (origin == OriginStencil::kOddGhost) {
        // Central difference through the ghost node -z1.
        tangent = normalized(curve[1] - (-curve[1]));
      } else {
        tangent = normalized(curve[1] - curve[0]);
      }
      kappa = circumcircle_curvature(curve[0], curve[1], curve[2]);
    } else {
      tangent = normalized(curve[n - 1] - curve[n - 2]);
      kappa = circumcircle_curvature(curve[n - 3], curve[n - 2], curve[n - 1]);
    }
    out[i] = Frame{tangent, Point(-tangent.imag(), tangent.real()), kappa};
  }
  return out;
}

std::vector<double> lagrangian_angle(const PlanarCurve& curve, OriginStencil origin) {
  const std::size_t n = curve.size();
  const auto fr = frames(curve, origin);
  const double tiny = 1e-12 * curve.bbox_diameter();
  std::vector<double> raw(n);
  std::size_t anchor = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const Point z = curve[i];
    if (std::abs(z) <= tiny) {
      if (i != 0 || curve.closed()) {
        std::ostringstream msg;
        msg << "curve passes through the origin at node " << i;
        throw Error(ErrorCode::kSingularAngle, msg.str());
      }
      raw[i] = std::arg(fr[i].tangent * fr[i].tangent);
      anchor = 1;
    } else {
      raw[i] = std::arg(z * fr[i].tangent);
    }
  }
  std::vector<double> theta(n);
  theta[anchor] = wrap_angle(raw[anchor]);
  for (std::size_t i = anchor + 1; i < n; ++i) theta[i] = theta[i - 1] + wrap_angle(raw[i] - raw[i - 1]);
  for (std::size_t i = anchor; i-- > 0;) theta[i] = theta[i + 1] + wrap_angle(raw[i] - raw[i + 1]);
  return theta;
}

std::vector<double> liouville_primitive(const PlanarCurve& curve) {
  std::vector<double> beta(curve.size(), 0.0);
  for (std::size_t i = 1; i < curve.size(); ++i) {
    // Exact for a straight segment: Im(conj(z) dz) is constant along it.
    beta[i] = beta[i - 1] + cross(curve[i - 1], curve[i]);
  }
  return beta;
}

double beta_growth_constant(const PlanarCurve& curve, const std::vector<double>& beta) {
  double c = 0.0;
  for (std::size_t i = 0; i < curve.size(); ++i) c = std::max(c, std::abs(beta[i]) / (std::norm(curve[i]) + 1.0));
  return c;
}

std::vector<Crossing> self_intersections(const PlanarCurve& curve) {
  const auto segs = segments_of(curve);
  const std::size_t m = segs.size();
  std::vector<Crossing> out;
  for (const auto& [i, j] : candidate_pairs(segs, nullptr)) {
    const std::size_t lo = std::min(i, j);
    const std::size_t hi = std::max(i, j);
    if (cyclic_gap(lo, hi, m, curve.closed()) < 2) continue;
    const SegmentHit hit = intersect_segments(segs[lo].first, segs[lo].second, segs[hi].first, segs[hi].second);
    if (!hit.hit) continue;
    const Point q = segs[lo].first + hit.t * (segs[lo].second - segs[lo].first);
    out.push_back({q, lo, hi, hit.t, hit.u, hit.angle, hit.angle < kTangentialCrossingAngle});
  }
  std::sort(out.begin(), out.end(), [](const Crossing& a, const Crossing& b) {
    return std::tie(a.first_segment, a.second_segment) < std::tie(b.first_segment, b.second_segment);
  });
  return out;
}

bool curves_share_origin(const PlanarCurve& a, const PlanarCurve& b) {
  return !a.closed() && !b.closed() && a[0] == Point(0.0, 0.0) && b[0] == Point(0.0, 0.0);
}

std::vector<Crossing> mutual_intersections(const PlanarCurve& a, const PlanarCurve& b) {
  const auto sa = segments_of(a);
  const auto sb = segments_of(b);
  const bool shared = curves_share_origin(a, b);
  std::vector<Crossing> out;
  for (const auto& [i, j] : candidate_pairs(sa, &sb)) {
    if (shared && i == 0 && j == 0) continue;  // the two segments leaving the common origin
    const SegmentHit hit = intersect_segments(sa[i].first, sa[i].second, sb[j].first, sb[j].second);
    if (!hit.hit) continue;
    const Point q = sa[i].first + hit.t * (sa[i].second - sa[i].first);
    if (shared && std::abs(q) <= 1e-12 * (a.bbox_diameter() + b.bbox_diameter())) continue;
    out.push_back({q, i, j, hit.t, hit.u, hit.angle, hit.angle < kTangentialCrossingAngle});
  }
  std::sort(out.begin(), out.end(), [](const Crossing& l, const Crossing& r) {
    return std::tie(l.first_segment, l.second_segment) < std::tie(r.first_segment, r.second_segment);
  });
  return out;
}

double signed_area(std::span<const Point> polygon) {
  double twice = 0.0;
  for (std::size_t i = 0; i < polygon.size(); ++i) {
    twice += cross(polygon[i], polygon[(i + 1) % polygon.size()]);
  }
  return 0.5 * twice;
}

int winding_number(std::span<const Point> polygon, Point about) {
  double total = 0.0;
  for (std::size_t i = 0; i < polygon.size(); ++i) {
    const Point a = polygon[i] - about;
    const Point b = polygon[(i + 1) % polygon.size()] - about;
    total += std::arg(b / a);
  }
  return static_cast<int>(std::lround(total / (2.0 * kPi)));
}

std::vector<LoopDescriptor> extract_loops(const PlanarCurve& curve, const std::vector<Crossing>& crossings) {
  std::vector<LoopDescriptor> loops;
  const std::size_t n = curve.size();
  if (crossings.empty()) {
    if (curve.closed()) {
      LoopDescriptor d;
      d.whole_curve = true;
      d.crossing = curve[0];
      d.loop_nodes.assign(curve.nodes().begin(), curve.nodes().end());
      d.area = signed_area(d.loop_nodes);
      d.exterior_angle = 0.0;
      d.winds_origin = winding_number(d.loop_nodes, Point(0.0, 0.0));
      d.diameter = polygon_diameter(d.loop_nodes);
      d.length = curve.length();
      loops.push_back(std::move(d));
    }
    return loops;
  }

  for (const Crossing& c : crossings) {
    const std::size_t i = c.first_segment;
    const std::size_t j = c.second_segment;
    const Point dir_i = curve.segment_end(i) - curve.segment_start(i);
    const Point dir_j = curve.segment_end(j) - curve.segment_start(j);

    // Inner part: nodes i+1..j. For closed curves the complementary part
    // j+1..i (wrapping) is also a loop; keep the shorter one.
    std::vector<Point> inner{c.point};
    for (std::size_t k = i + 1; k <= j; ++k) inner.push_back(curve[k]);
    double exterior_raw = turning_angle(dir_j, dir_i);
    bool use_inner = true;
    std::vector<Point> outer;
    if (curve.closed()) {
      outer.push_back(c.point);
      for (std::size_t k = j + 1; k < n; ++k) outer.push_back(curve[k]);
      for (std::size_t k = 0; k <= i; ++k) outer.push_back(curve[k]);
      use_inner = polyline_length(inner, true) <= polyline_length(outer, true);
    }

    LoopDescriptor d;
    d.crossing = c.point;
    d.first_segment = i;
    d.second_segment = j;
    d.loop_nodes = use_inner ? std::move(inner) : std::move(outer);
    if (!use_inner) exterior_raw = turning_angle(dir_i, dir_j);
    d.area = signed_area(d.loop_nodes);
    d.exterior_angle = d.area >= 0.0 ? exterior_raw : -exterior_raw;
    d.winds_origin = winding_number(d.loop_nodes, Point(0.0, 0.0));
    d.diameter = polygon_diameter(d.loop_nodes);
    d.length = polyline_length(d.loop_nodes, true);
    for (const Crossing& other : crossings) {
      if (&other == &c) continue;
      auto inside = [&](std::size_t s) { return use_inner ? (s > i && s < j) : (s > j || s < i); };
      if (inside(other.first_segment) || inside(other.second_segment)) d.nested = true;
    }
    loops.push_back(std::move(d));
  }
  return loops;
}

double rotation_index(const PlanarCurve& curve) {
  const std::size_t segs = curve.segment_count();
  double total = 0.0;
  const std::size_t turns = curve.closed() ? segs : segs - 1;
  for (std::size_t k = 0; k < turns; ++k) {
    const std::size_t next = (k + 1) % segs;
    total += turning_angle(curve.segment_end(k) - curve.segment_start(k),
                           curve.segment_end(next) - curve.segment_start(next));
  }
  return total / (2.0 * kPi);
}

double h_length(const PlanarCurve& curve) {
  double total = 0.0;
  for (std::size_t i = 0; i < curve.segment_count(); ++i) {
    const Point a = curve.segment_start(i);
    const Point b = curve.segment_end(i);
    total += 0.5 * (std::abs(a) + std::abs(b)) * std::abs(b - a);
  }
  return total;
}

PlanarCurve squaring_transform(const PlanarCurve& curve) {
  std::vector<Point> out;
  out.reserve(curve.size());
  for (const Point& z : curve.nodes()) out.push_back(0.5 * z * z);
  return PlanarCurve(std::move(out), curve.closed());
}

PlanarCurve inverse_branch(const LineParams& line, int branch, double extent, double spacing) {
  if (line.offset == 0.0) {
    throw Error(ErrorCode::kBranch,
                "line passes through the origin: the preimage is a pair of rays, not a smooth branch");
  }
  if (branch != 1 && branch != -1) throw Error(ErrorCode::kBranch, "branch must be +1 or -1");
  if (!(spacing > 0.0) || !(extent > 0.0)) throw Error(ErrorCode::kBranch, "extent and spacing must be positive");

  const double c = line.offset;
  const Point rot = static_cast<double>(branch) * std::polar(1.0, 0.5 * line.direction);
  auto point_at = [&](double t) { return rot * std::sqrt(2.0 * Point(t, c)); };
  // dt/ds = |z(t)| because |dw| = |z| |dz| and |dw/dt| = 1.
  auto rate = [&](double t) { return std::sqrt(2.0) * std::pow(t * t + c * c, 0.25); };

  if (std::abs(point_at(0.0)) >= extent) {
    throw Error(ErrorCode::kBranch, "extent does not reach the neck of the branch");
  }
  constexpr int kSubsteps = 16;
  auto march = [&](double sign) {
    std::vector<Point> pts;
    double t = 0.0;
    const double ds = sign * spacing / kSubsteps;
    while (true) {
      for (int k = 0; k < kSubsteps; ++k) {
        const double k1 = rate(t);
        const double k2 = rate(t + 0.5 * ds * k1);
        const double k3 = rate(t + 0.5 * ds * k2);
        const double k4 = rate(t + ds * k3);
        t += ds * (k1 + 2 * k2 + 2 * k3 + k4) / 6.0;
      }
      const Point z = point_at(t);
      if (std::abs(z) > extent) break;
      pts.push_back(z);
    }
    return pts;
  };
  std::vector<Point> backward = march(-1.0);
  std::vector<Point> forward = march(1.0);
  std::vector<Point> nodes(backward.rbegin(), backward.rend());
  nodes.push_back(point_at(0.0));
  nodes.insert(nodes.end(), forward.begin(), forward.end());
  return PlanarCurve(std::move(nodes), false);
}

double hausdorff_distance(const PlanarCurve& a, const PlanarCurve& b) {
  auto one_sided = [](const PlanarCurve& from, const PlanarCurve& to) {
    double worst = 0.0;
    for (const Point& p : from.nodes()) {
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t k = 0; k < to.segment_count(); ++k) {
        best = std::min(best, point_segment_distance(p, to.segment_start(k), to.segment_end(k)));
      }
      worst = std::max(worst, best);
    }
    return worst;
  };
  return std::max(one_sided(a, b), one_sided(b, a));
}

}  // namespace lmcf
