#include "lmcf/curve.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace lmcf {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidCurve: return "invalid_curve";
    case ErrorCode::kDegenerateCurve: return "degenerate_curve";
    case ErrorCode::kSingularAngle: return "singular_angle";
    case ErrorCode::kSingularForcing: return "singular_forcing";
    case ErrorCode::kStall: return "stall";
    case ErrorCode::kNumericalBlowup: return "numerical_blowup";
    case ErrorCode::kUnsupportedSurgery: return "unsupported_surgery";
    case ErrorCode::kInfeasible: return "constructor_infeasible";
    case ErrorCode::kShootingBracket: return "shooting_bracket";
    case ErrorCode::kBranch: return "branch";
    case ErrorCode::kConfig: return "config";
    case ErrorCode::kIo: return "io";
  }
  return "unknown";
}

PlanarCurve::PlanarCurve(std::vector<Point> nodes, bool closed)
    : nodes_(std::move(nodes)), closed_(closed) {
  if (nodes_.size() < 3) {
    throw Error(ErrorCode::kInvalidCurve, "curve needs at least 3 nodes");
  }
  for (const Point& p : nodes_) {
    if (!std::isfinite(p.real()) || !std::isfinite(p.imag())) {
      throw Error(ErrorCode::kNumericalBlowup, "curve has a non-finite node");
    }
  }
  const double tol = 1e-12 * std::max(bbox_diameter(), std::numeric_limits<double>::min());
  for (std::size_t i = 0; i < segment_count(); ++i) {
    if (std::abs(segment_end(i) - segment_start(i)) <= tol) {
      std::ostringstream msg;
      msg << "consecutive nodes " << i << " and " << (i + 1) % nodes_.size() << " coincide";
      throw Error(ErrorCode::kInvalidCurve, msg.str());
    }
  }
}

double PlanarCurve::length() const {
  double total = 0.0;
  for (std::size_t i = 0; i < segment_count(); ++i) total += std::abs(segment_end(i) - segment_start(i));
  return total;
}

double PlanarCurve::min_spacing() const {
  double h = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < segment_count(); ++i) h = std::min(h, std::abs(segment_end(i) - segment_start(i)));
  return h;
}

double PlanarCurve::max_spacing() const {
  double h = 0.0;
  for (std::size_t i = 0; i < segment_count(); ++i) h = std::max(h, std::abs(segment_end(i) - segment_start(i)));
  return h;
}

double PlanarCurve::bbox_diameter() const {
  if (nodes_.empty()) return 0.0;
  double x0 = nodes_[0].real(), x1 = x0, y0 = nodes_[0].imag(), y1 = y0;
  for (const Point& p : nodes_) {
    x0 = std::min(x0, p.real());
    x1 = std::max(x1, p.real());
    y0 = std::min(y0, p.imag());
    y1 = std::max(y1, p.imag());
  }
  return std::hypot(x1 - x0, y1 - y0);
}

PlanarCurve PlanarCurve::reversed() const {
  std::vector<Point> out(nodes_.rbegin(), nodes_.rend());
  if (closed_) std::rotate(out.rbegin(), out.rbegin() + 1, out.rend());  // keep node 0 first
  return PlanarCurve(std::move(out), closed_);
}

PlanarCurve PlanarCurve::scaled(double factor) const {
  std::vector<Point> out(nodes_);
  for (Point& p : out) p *= factor;
  return PlanarCurve(std::move(out), closed_);
}

EquivariantProfile::EquivariantProfile(PlanarCurve curve, double asymptote_angle,
                                       std::optional<double> cone_param)
    : curve_(std::move(curve)), asymptote_angle_(asymptote_angle), cone_param_(cone_param) {
  if (curve_.closed()) {
    throw Error(ErrorCode::kInvalidCurve, "a profile is an open half-curve");
  }
  if (curve_[0] != Point(0.0, 0.0)) {
    throw Error(ErrorCode::kInvalidCurve, "profile node 0 must be the origin");
  }
  const double tol = 1e-12 * curve_.bbox_diameter();
  for (std::size_t i = 1; i < curve_.size(); ++i) {
    if (std::abs(curve_[i]) <= tol) {
      throw Error(ErrorCode::kInvalidCurve, "profile returns to the origin");
    }
  }
}

double EquivariantProfile::origin_tangent_mismatch() const {
  // Fourth-order central difference with ghosts -z1, -z2 reduces to 16 z1 - 2 z2.
  const Point z1 = curve_[1];
  const Point z2 = curve_[2];
  const Point ghost = 16.0 * z1 - 2.0 * z2;
  return std::abs(std::arg(ghost / z1));
}

}  // namespace lmcf
