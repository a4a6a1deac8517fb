#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "lmcf/curve.hpp"
#include "lmcf/flow.hpp"
#include "lmcf/geometry.hpp"
#include "lmcf/timeseries.hpp"

namespace lmcf {

/// Point of R^4 in the ordering (x1, y1, x2, y2); the profile point z at
/// orbit angle a sits at (Re z cos a, Im z cos a, Re z sin a, Im z sin a).
using R4 = std::array<double, 4>;

R4 orbit_point(Point z, double alpha);
/// Embeds a planar point at orbit angle 0.
inline R4 lift(Point z) { return orbit_point(z, 0.0); }

struct DensityQuery {
  R4 center{};
  double scale = 1.0;     // l
  int alpha_nodes = 128;  // lower bound, raised when the kernel is sharply peaked
  double truncation = 8.0;  // in units of sqrt(l), beyond the nearest orbit
  double s_resolution = 32.0;  // sub-samples per sqrt(l) along the curve

  void validate() const;
};

struct DensityResult {
  double value = 0.0;
  double error_estimate = 0.0;
  bool tail_warning = false;
};

/// (4 pi l)^{-1} integral over the curve of |z| times the orbit integral of
/// exp(-|X - y|^2 / 4l).
DensityResult gaussian_density(const PlanarCurve& curve, const DensityQuery& query);
DensityResult gaussian_density(std::span<const PlanarCurve> curves, const DensityQuery& query);
inline DensityResult gaussian_density(const EquivariantProfile& profile, const DensityQuery& query) {
  return gaussian_density(profile.curve(), query);
}

enum class Verdict { kPass, kFail, kNotApplicable, kUnreliable };
const char* to_string(Verdict v);

struct Report {
  std::string check;
  nlohmann::json params = nlohmann::json::object();
  std::optional<TimeSeries> series;
  Verdict verdict = Verdict::kNotApplicable;
  nlohmann::json details = nlohmann::json::object();

  bool acceptable() const { return verdict == Verdict::kPass || verdict == Verdict::kNotApplicable; }
  nlohmann::json to_json() const;
};

Report density_monotonicity_check(const Trajectory& trajectory, const R4& y, double T,
                                  double slack = 1e-3, const DensityQuery& controls = {});

/// Surface integral of |x_perp - 2tH|^2 Phi(0, 4 - t) with H the full flow
/// velocity.
double expander_closeness(const PlanarCurve& curve, double t, bool pinned_origin = false);

/// max - min of beta + 2 t theta over nodes with |z| <= radius.
double beta_theta_invariant(const PlanarCurve& curve, double t, double radius,
                            OriginStencil origin = OriginStencil::kOneSided);

struct AngleJumpOptions {
  double r_a = 0.5;
  double r_b = 10.0;
  std::size_t component = 0;
  double jump_tolerance = 0.1;
};

/// f(t) = theta(b_t) - theta(a_t), with a_t the first crossing of |z| = r_a
/// and b_t the last crossing of |z| = r_b along the curve.
Report angle_jump_tracker(const Trajectory& trajectory, const AngleJumpOptions& options = {});

struct LoopAreaOptions {
  std::size_t component = 0;
  double tolerance = 0.05;
  /// Samples whose loop diameter is below guard_diameter are not resolved.
  double guard_diameter = 0.0;
  std::size_t min_samples = 10;
};

Report loop_area_law_check(const Trajectory& trajectory, const LoopAreaOptions& options = {});

/// Crossings of a trajectory component with a fixed reference curve, the
/// shared origin counted once.
Report intersection_count_series(const Trajectory& trajectory, const PlanarCurve& reference,
                                 std::size_t component = 0);
/// Crossings between two co-evolved components.
Report intersection_count_series(const Trajectory& trajectory, std::size_t first, std::size_t second);

Report singular_time_bound_check(const Trajectory& trajectory, std::size_t component = 0);

}  // namespace lmcf
