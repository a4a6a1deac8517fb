#pragma once

#include <cstddef>
#include <vector>

#include "lmcf/curve.hpp"

namespace lmcf {

struct Frame {
  Point tangent;
  Point normal;      // tangent rotated by +pi/2
  double curvature;  // signed, positive when turning left

  Point curvature_vector() const { return curvature * normal; }
};

/// How node 0 of an open curve is treated by stencils.
enum class OriginStencil {
  kOneSided,  // plain open end
  kOddGhost,  // profile pinned at the origin, ghost nodes -z1, -z2
};

/// Redistributes nodes to (close to) uniform arclength spacing using cubic
/// Hermite interpolation in arclength. Endpoints of open curves and node 0
/// of closed curves keep their exact positions.
PlanarCurve resample(const PlanarCurve& curve, double target_spacing);

std::vector<Frame> frames(const PlanarCurve& curve,
                          OriginStencil origin = OriginStencil::kOneSided);

/// Continuous lift of arg(z * z'). Node 0 may sit at the origin, in which
/// case its value is the limit 2 arg(z'(0)). The lift is anchored so the
/// first off-origin node lies in (-pi, pi].
std::vector<double> lagrangian_angle(const PlanarCurve& curve,
                                     OriginStencil origin = OriginStencil::kOneSided);

/// Primitive of Im(conj(z) z') ds starting from 0 at node 0.
std::vector<double> liouville_primitive(const PlanarCurve& curve);

/// Smallest C with |beta| <= C (|z|^2 + 1) at every node.
double beta_growth_constant(const PlanarCurve& curve, const std::vector<double>& beta);

struct Crossing {
  Point point;
  std::size_t first_segment;   // lower index
  std::size_t second_segment;  // higher index
  double first_param;          // position along first segment in [0,1)
  double second_param;
  double angle;                // acute angle between the segments
  bool unreliable;             // nearly tangential
};

inline constexpr double kTangentialCrossingAngle = 1e-3;

std::vector<Crossing> self_intersections(const PlanarCurve& curve);

/// Proper crossings between two different curves. Contacts exactly at a
/// shared endpoint are excluded; see `curves_share_origin`.
std::vector<Crossing> mutual_intersections(const PlanarCurve& a, const PlanarCurve& b);

bool curves_share_origin(const PlanarCurve& a, const PlanarCurve& b);

struct LoopDescriptor {
  Point crossing;
  std::size_t first_segment = 0;
  std::size_t second_segment = 0;
  bool whole_curve = false;  // closed curve without a crossing
  /// Loop polygon: the crossing point followed by the enclosed nodes.
  std::vector<Point> loop_nodes;
  double area = 0.0;            // signed shoelace area
  double exterior_angle = 0.0;  // in [-pi, pi], positive when convex at the crossing
  int winds_origin = 0;
  double diameter = 0.0;
  double length = 0.0;
  bool nested = false;  // the loop contains further crossings
};

std::vector<LoopDescriptor> extract_loops(const PlanarCurve& curve,
                                          const std::vector<Crossing>& crossings);
inline std::vector<LoopDescriptor> extract_loops(const PlanarCurve& curve) {
  return extract_loops(curve, self_intersections(curve));
}

/// Total turning of the tangent divided by 2 pi.
double rotation_index(const PlanarCurve& curve);

/// Trapezoid value of the weighted length integral |z| ds.
double h_length(const PlanarCurve& curve);

double signed_area(std::span<const Point> polygon);
int winding_number(std::span<const Point> polygon, Point about);

/// Pointwise image under z -> z^2 / 2.
PlanarCurve squaring_transform(const PlanarCurve& curve);

struct LineParams {
  double offset = 1.0;     // signed distance of the line from 0 in the w-plane
  double direction = 0.0;  // angle of the line direction in the w-plane
};

/// Samples sqrt(2 w) along w(t) = i*offset*e^{i dir} + t e^{i dir}, taking the
/// branch that is continuous along the line (branch = +1 or -1). Nodes are
/// placed at arclength multiples of `spacing` measured from the point closest
/// to the origin, out to |z| <= extent. A line through 0 throws kBranch.
PlanarCurve inverse_branch(const LineParams& line, int branch, double extent, double spacing);

// Small helpers shared by the other modules.
double wrap_angle(double a);  // into (-pi, pi]
double turning_angle(Point from, Point to);
double point_segment_distance(Point p, Point a, Point b);
double hausdorff_distance(const PlanarCurve& a, const PlanarCurve& b);

}  // namespace lmcf
