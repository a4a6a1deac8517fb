#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "lmcf/geometry.hpp"
#include "lmcf/profiles.hpp"

using namespace lmcf;
constexpr double kPi = std::numbers::pi;

TEST_CASE("ray nodes lie on the ray") {
  const EquivariantProfile p = ray(2.0, 4.0, 0.1);
  CHECK(p.curve()[0] == Point(0, 0));
  CHECK(p.asymptote_angle() == 2.0);
  for (const Point& z : p.curve().nodes()) CHECK(std::abs(cross(std::polar(1.0, 2.0), z)) < 1e-12);
  CHECK(p.curve().length() == doctest::Approx(4.0));
  CHECK_THROWS_AS(ray(0.0, 0.1, 0.1), Error);
}

TEST_CASE("integrate_heading with constant heading is a straight segment") {
  const auto pts = integrate_heading(Point(1, 1), 2.0, 0.1, [](double) { return 0.5; });
  REQUIRE(pts.size() == 21);
  CHECK(std::abs(pts.back() - (Point(1, 1) + std::polar(2.0, 0.5))) < 1e-12);
}

TEST_CASE("integrate_heading on a circle") {
  const auto pts = integrate_heading(Point(1, 0), kPi, 0.01, [](double s) { return kPi / 2 + s; });
  CHECK(std::abs(pts.back() - Point(-1, 0)) < 1e-10);
}

TEST_CASE("Lawlor neck with horizontal line direction is the hyperbola xy = c") {
  const double c = 0.8;
  const auto res = lawlor_profile(c, 0.0, 8.0, 0.02);
  REQUIRE(res.components.size() == 1);
  CHECK_FALSE(res.singular);
  for (const Point& z : res.components[0].nodes()) CHECK(z.real() * z.imag() == doctest::Approx(c).epsilon(1e-10));
  CHECK(res.asymptote_angles[0] == doctest::Approx(0.0));
  CHECK(res.asymptote_angles[1] == doctest::Approx(kPi / 2));
}

TEST_CASE("Lawlor neck is special Lagrangian and stationary") {
  const double dir = 2.0;
  const auto res = lawlor_profile(0.5, dir, 10.0, 0.01);
  const PlanarCurve& c = res.components[0];
  const auto th = lagrangian_angle(c);
  const auto [lo, hi] = std::minmax_element(th.begin(), th.end());
  CHECK(*hi - *lo < 1e-4);
  CHECK(std::abs(wrap_angle(th[th.size() / 2] - dir)) < 1e-4);
  CHECK(stationarity_residual(c) < 1e-3 / c.bbox_diameter());
  CHECK(res.asymptote_angles[1] - res.asymptote_angles[0] == doctest::Approx(kPi / 2));
}

TEST_CASE("Lawlor necks commute with scaling") {
  const double d = 0.3;
  const auto big = lawlor_profile(1.0, 0.7, 10.0, 0.05);
  const auto small = lawlor_profile(d * d, 0.7, d * 10.0, d * 0.05);
  REQUIRE(big.components[0].size() == small.components[0].size());
  for (std::size_t i = 0; i < big.components[0].size(); ++i) {
    CHECK(std::abs(small.components[0][i] - d * big.components[0][i]) < 1e-9);
  }
}

TEST_CASE("zero offset gives the singular cone") {
  const auto res = lawlor_profile(0.0, 1.0, 5.0, 0.1);
  CHECK(res.singular);
  REQUIRE(res.components.size() == 2);
  for (const auto& c : res.components) CHECK(c[0] == Point(0, 0));
  CHECK(res.asymptote_angles[0] == doctest::Approx(0.5));
  CHECK(res.asymptote_angles[1] == doctest::Approx(0.5 + kPi / 2));
}

TEST_CASE("self-expander by shooting") {
  ExpanderSpec spec;
  spec.spacing = 0.05;
  const ExpanderResult res = expander_profile(spec);
  CHECK(res.ode_residual < 1e-6);
  CHECK(res.symmetry_error < 1e-9);
  CHECK(res.r0 > 0.0);
  CHECK(expander_residual(res.curve).max < 1e-4);
  // Rays at theta2 and pi; as planes: 0.6 pi and 0.
  CHECK(res.asymptote_angles[0] == doctest::Approx(0.6 * kPi).epsilon(1e-3));
  CHECK(res.asymptote_angles[1] == doctest::Approx(kPi).epsilon(1e-3));
  CHECK(self_intersections(res.curve).empty());
  // The curve stays off the origin at distance r0.
  double closest = 1e9;
  for (const Point& z : res.curve.nodes()) closest = std::min(closest, std::abs(z));
  CHECK(closest == doctest::Approx(res.r0).epsilon(1e-2));
}

TEST_CASE("expander residual is zero on a straight line through the origin only in the limit") {
  ExpanderSpec spec;
  spec.opening_angle = kPi;
  spec.spacing = 0.05;
  const ExpanderResult line = expander_profile(spec);
  CHECK(expander_residual(line.curve).max < 1e-9);
  spec.opening_angle = 0.4 * kPi;
  CHECK_THROWS_AS(expander_profile(spec), Error);
}

TEST_CASE("sigma curve validation") {
  const SigmaResult res = sigma_curve(SigmaSpec{});
  CHECK(res.report.ok());
  const PlanarCurve& c = res.profile.curve();
  const auto xs = self_intersections(c);
  REQUIRE(xs.size() == 1);
  const auto loops = extract_loops(c, xs);
  REQUIRE(loops.size() == 1);
  CHECK(std::abs(loops[0].area) == doctest::Approx(kPi).epsilon(2e-2));
  CHECK(loops[0].winds_origin == 0);
  const double a = 0.05;
  for (std::size_t i = 1; i < c.size(); ++i) {
    const double ang = std::arg(c[i]);
    CHECK(ang > kPi / 2 + 2 * a);
    CHECK(ang < kPi + a);
  }
  SigmaSpec bad;
  bad.cone_param = 0.3;
  CHECK_THROWS_AS(sigma_curve(bad), Error);
}

TEST_CASE("Whitney curve validation") {
  const WhitneyResult res = whitney_curve(WhitneySpec{});
  CHECK(res.report.ok());
  const PlanarCurve& c = res.profile.curve();
  CHECK(self_intersections(c).empty());
  for (const Point& z : c.nodes()) CHECK(z.imag() >= -1e-12);
  CHECK(res.arc_first < res.arc_last);
  const auto th = lagrangian_angle(c);
  const auto [lo, hi] = std::minmax_element(th.begin() + long(res.arc_first), th.begin() + long(res.arc_last) + 1);
  CHECK(*hi - *lo < kPi / 2);
  WhitneySpec bad;
  bad.theta2 = 0.3 * kPi;
  CHECK_THROWS_AS(whitney_curve(bad), Error);
  const nlohmann::json doc = res.report.to_json();
  CHECK(doc.at("ok").get<bool>());
}
