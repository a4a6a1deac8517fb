#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <string>
#include <vector>

#include <json.hpp>

#include "lmcf/curve.hpp"

namespace lmcf {

struct ValidationCheck {
  std::string name;
  bool pass = false;
  double measured = 0.0;
  double limit = 0.0;
};

struct ValidationReport {
  std::string constructor;
  std::vector<ValidationCheck> checks;

  bool ok() const;
  void add(std::string name, bool pass, double measured, double limit);
  nlohmann::json to_json() const;
};

EquivariantProfile ray(double angle, double length, double spacing);

struct WhitneySpec {
  double epsilon = 0.05;
  double outer_scale = 1.0;
  double theta2 = 0.6 * 3.14159265358979323846;
  double theta3 = 0.8 * 3.14159265358979323846;
  /// Height of the lifted line in the wedge chart and the half width of
  /// its plateau; the cutoff ramps to zero over a further `arc_ramp`.
  double arc_height = 0.5;
  double arc_plateau = 1.0;
  double arc_ramp = 4.0;
  double extent = 4.0;  // in units of outer_scale
  double spacing = 0.005;
};

struct WhitneyResult {
  EquivariantProfile profile;
  ValidationReport report;
  /// Node range [first, last] of the connecting arc near the origin.
  std::size_t arc_first = 0;
  std::size_t arc_last = 0;
};

WhitneyResult whitney_curve(const WhitneySpec& spec);

struct SigmaSpec {
  double loop_area = 3.14159265358979323846;
  double cone_param = 0.05;
  double truncation_radius = 30.0;
  double spacing = 0.05;
};

struct SigmaResult {
  EquivariantProfile profile;
  ValidationReport report;
};

SigmaResult sigma_curve(const SigmaSpec& spec);

struct LawlorResult {
  std::vector<PlanarCurve> components;
  bool singular = false;
  std::array<double, 2> asymptote_angles{};
};

/// Preimage of the line {i*offset*e^{i dir} + t e^{i dir}} under z -> z^2/2,
/// the branch lying in the wedge between the angles dir/2 and dir/2 + pi/2
/// (for positive offset). A zero offset gives the two rays of the cone.
LawlorResult lawlor_profile(double offset, double direction, double extent, double spacing);

/// max |kappa - <x,nu>/|x|^2| over the interior nodes.
double stationarity_residual(const PlanarCurve& curve);

struct ExpanderSpec {
  double opening_angle = 0.6 * 3.14159265358979323846;
  double r0_low = 1e-3;
  double r0_high = 10.0;
  double extent = 30.0;
  double ode_step = 1e-3;
  double tolerance = 1e-12;
  double spacing = 0.02;
};

struct ResidualStats {
  double max = 0.0;
  double l2 = 0.0;
  std::size_t count = 0;
};

struct ExpanderResult {
  PlanarCurve curve;
  double r0 = 0.0;
  double ode_residual = 0.0;
  std::array<double, 2> asymptote_angles{};
  double symmetry_error = 0.0;
  nlohmann::json report;
};

ExpanderResult expander_profile(const ExpanderSpec& spec);

/// Residual of kappa = <x,nu>(1/2 + 1/|x|^2) with nu the left normal,
/// using fourth order differences in the node index. The two nodes at
/// each open end are skipped.
ResidualStats expander_residual(const PlanarCurve& curve);

/// Curve from integrating a tangent angle: z(0) = start, z' = e^{i phi(s)}
/// for s in [0, length], sampled every `spacing`.
template <class Phi>
std::vector<Point> integrate_heading(Point start, double length, double spacing, Phi phi,
                                     int substeps = 8) {
  std::vector<Point> pts{start};
  const auto n = static_cast<std::size_t>(std::max(1.0, std::round(length / spacing)));
  const double h = length / static_cast<double>(n);
  const double dh = h / substeps;
  Point z = start;
  double s = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    for (int j = 0; j < substeps; ++j) {
      // Simpson rule for the integral of e^{i phi} over one substep.
      const Point a = std::polar(1.0, phi(s));
      const Point m = std::polar(1.0, phi(s + 0.5 * dh));
      const Point b = std::polar(1.0, phi(s + dh));
      z += dh * (a + 4.0 * m + b) / 6.0;
      s += dh;
    }
    pts.push_back(z);
  }
  return pts;
}

}  // namespace lmcf
