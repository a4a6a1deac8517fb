#pragma once

#include <complex>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "lmcf/error.hpp"

namespace lmcf {

using Point = std::complex<double>;

inline double dot(Point a, Point b) { return a.real() * b.real() + a.imag() * b.imag(); }
inline double cross(Point a, Point b) { return a.real() * b.imag() - a.imag() * b.real(); }

/// Ordered polyline in the complex plane. Closed curves store each node
/// once; the closing segment back to node 0 is implicit.
class PlanarCurve {
 public:
  PlanarCurve() = default;
  PlanarCurve(std::vector<Point> nodes, bool closed);

  std::span<const Point> nodes() const { return nodes_; }
  const Point& operator[](std::size_t i) const { return nodes_[i]; }
  std::size_t size() const { return nodes_.size(); }
  bool closed() const { return closed_; }
  bool empty() const { return nodes_.empty(); }

  std::size_t segment_count() const {
    return closed_ ? nodes_.size() : nodes_.size() - 1;
  }
  Point segment_start(std::size_t i) const { return nodes_[i]; }
  Point segment_end(std::size_t i) const { return nodes_[(i + 1) % nodes_.size()]; }

  double length() const;
  double min_spacing() const;
  double max_spacing() const;
  /// Diagonal of the axis-aligned bounding box.
  double bbox_diameter() const;

  PlanarCurve reversed() const;
  PlanarCurve scaled(double factor) const;

 private:
  std::vector<Point> nodes_;
  bool closed_ = false;
};

/// Half-curve starting exactly at the origin. It stands for the surface
/// {(z cos a, z sin a)} in C^2, which lies in the zero set of x1*y2 - x2*y1
/// for every choice of z.
class EquivariantProfile {
 public:
  EquivariantProfile() = default;
  EquivariantProfile(PlanarCurve curve, double asymptote_angle,
                     std::optional<double> cone_param = std::nullopt);

  const PlanarCurve& curve() const { return curve_; }
  double asymptote_angle() const { return asymptote_angle_; }
  std::optional<double> cone_param() const { return cone_param_; }

  /// Tangent at the origin from the odd ghost nodes -z1, -z2 versus the
  /// one-sided chord; returns the angle between the two directions.
  double origin_tangent_mismatch() const;

 private:
  PlanarCurve curve_;
  double asymptote_angle_ = 0.0;
  std::optional<double> cone_param_;
};

}  // namespace lmcf
