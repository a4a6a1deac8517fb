#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "lmcf/curve_io.hpp"
#include "lmcf/geometry.hpp"
#include "lmcf/profiles.hpp"

using namespace lmcf;
constexpr double kPi = std::numbers::pi;

namespace {

PlanarCurve circle(double r, Point c, std::size_t n) {
  std::vector<Point> pts;
  for (std::size_t k = 0; k < n; ++k) pts.push_back(c + std::polar(r, 2 * kPi * double(k) / double(n)));
  return PlanarCurve(std::move(pts), true);
}

PlanarCurve segment_line(Point a, Point b, std::size_t n) {
  std::vector<Point> pts;
  for (std::size_t k = 0; k <= n; ++k) pts.push_back(a + (b - a) * (double(k) / double(n)));
  return PlanarCurve(std::move(pts), false);
}

// Lemniscate-like figure eight with a single crossing at the origin shifted to (5, 0).
PlanarCurve figure_eight(std::size_t n) {
  std::vector<Point> pts;
  for (std::size_t k = 0; k < n; ++k) {
    const double t = 2 * kPi * (double(k) + 0.5) / double(n);
    pts.emplace_back(5.0 + std::sin(t), std::sin(t) * std::cos(t));
  }
  return PlanarCurve(std::move(pts), true);
}

}  // namespace

TEST_CASE("curve construction rejects bad input") {
  CHECK_THROWS_AS(PlanarCurve({Point(0, 0), Point(1, 0)}, false), Error);
  CHECK_THROWS_AS(PlanarCurve({Point(0, 0), Point(1, 0), Point(NAN, 0)}, false), Error);
  const PlanarCurve closed = circle(1, 0, 16);
  CHECK_THROWS_AS(EquivariantProfile(closed, 0.0), Error);
  CHECK_THROWS_AS(EquivariantProfile(segment_line(Point(1, 0), Point(2, 0), 4), 0.0), Error);
}

TEST_CASE("polygon length and area of a regular polygon") {
  const std::size_t n = 64;
  const PlanarCurve c = circle(2.0, Point(1, -1), n);
  CHECK(c.length() == doctest::Approx(2.0 * n * 2.0 * std::sin(kPi / n)).epsilon(1e-12));
  const double area = 0.5 * n * 4.0 * std::sin(2 * kPi / n);
  CHECK(signed_area(c.nodes()) == doctest::Approx(area).epsilon(1e-12));
  CHECK(signed_area(c.reversed().nodes()) == doctest::Approx(-area).epsilon(1e-12));
  CHECK(winding_number(c.nodes(), Point(1, -1)) == 1);
  CHECK(winding_number(c.nodes(), Point(5, 5)) == 0);
  CHECK(rotation_index(c) == doctest::Approx(1.0));
  CHECK(rotation_index(c.reversed()) == doctest::Approx(-1.0));
}

TEST_CASE("curvature of a circle") {
  const PlanarCurve c = circle(0.5, Point(3, 0), 400);
  for (const Frame& f : frames(c)) {
    CHECK(f.curvature == doctest::Approx(2.0).epsilon(1e-4));
    CHECK(std::abs(f.tangent) == doctest::Approx(1.0));
  }
}

TEST_CASE("resample keeps endpoints and equalises spacing") {
  std::vector<Point> pts;
  for (int k = 0; k <= 40; ++k) {
    const double s = std::pow(k / 40.0, 2.0) * 3.0;
    pts.emplace_back(s, std::sin(s));
  }
  const PlanarCurve raw(std::move(pts), false);
  const PlanarCurve r = resample(raw, 0.02);
  CHECK(r[0] == raw[0]);
  CHECK(r[r.size() - 1] == raw[raw.size() - 1]);
  CHECK(r.max_spacing() / r.min_spacing() < 1.05);
  CHECK(r.length() == doctest::Approx(raw.length()).epsilon(1e-3));
  CHECK(hausdorff_distance(r, raw) < 5e-3);
}

TEST_CASE("lagrangian angle and Liouville primitive on a ray") {
  const double a = 0.7;
  const EquivariantProfile p = ray(a, 5.0, 0.1);
  for (double th : lagrangian_angle(p.curve())) CHECK(th == doctest::Approx(2 * a).epsilon(1e-12));
  for (double b : liouville_primitive(p.curve())) CHECK(std::abs(b) < 1e-12);
}

TEST_CASE("Liouville primitive grows linearly on an origin-centred circle") {
  const std::size_t n = 2000;
  const double r = 1.5;
  std::vector<Point> pts;
  for (std::size_t k = 0; k <= n / 2; ++k) pts.push_back(std::polar(r, 2 * kPi * double(k) / double(n)));
  const PlanarCurve arc(std::move(pts), false);
  const auto beta = liouville_primitive(arc);
  // beta' = Im(conj(z) z') = r for unit speed, so beta = r * s up to the chord error.
  CHECK(beta.back() == doctest::Approx(r * arc.length()).epsilon(1e-5));
}

TEST_CASE("Lagrangian angle of a curve through the origin is anchored") {
  const PlanarCurve line = segment_line(Point(0, 0), std::polar(3.0, 2.5), 30);
  const auto th = lagrangian_angle(line);
  CHECK(th[0] == doctest::Approx(wrap_angle(5.0)));
  CHECK(th.back() == doctest::Approx(wrap_angle(5.0)));
}

TEST_CASE("self intersections and loops of a figure eight") {
  const PlanarCurve c = figure_eight(400);
  const auto xs = self_intersections(c);
  REQUIRE(xs.size() == 1);
  CHECK(std::abs(xs[0].point - Point(5, 0)) < 1e-6);
  CHECK_FALSE(xs[0].unreliable);
  const auto loops = extract_loops(c, xs);
  REQUIRE(!loops.empty());
  for (const auto& loop : loops) {
    CHECK(loop.winds_origin == 0);
    CHECK(std::abs(loop.area) == doctest::Approx(2.0 / 3.0).epsilon(1e-2));
  }
  CHECK(rotation_index(c) == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(self_intersections(circle(1, 0, 50)).empty());
}

TEST_CASE("mutual intersections and shared origin") {
  const PlanarCurve a = segment_line(Point(0, 0), Point(4, 0), 40);
  const PlanarCurve b = segment_line(Point(0, 0), Point(0, 4), 40);
  CHECK(mutual_intersections(a, b).empty());
  CHECK(curves_share_origin(a, b));
  const PlanarCurve c = segment_line(Point(1, -1), Point(1, 1), 7);
  const auto x = mutual_intersections(a, c);
  REQUIRE(x.size() == 1);
  CHECK(x[0].angle == doctest::Approx(kPi / 2));
}

TEST_CASE("weighted length of a unit segment from the origin") {
  CHECK(h_length(segment_line(Point(0, 0), Point(0, 1), 100)) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("inverse squaring branch maps onto the line") {
  const LineParams line{0.7, 0.4};
  const PlanarCurve z = inverse_branch(line, 1, 6.0, 0.02);
  const PlanarCurve w = squaring_transform(z);
  const Point dir = std::polar(1.0, line.direction);
  for (const Point& p : w.nodes()) CHECK(cross(dir, p) == doctest::Approx(line.offset).epsilon(1e-10));
  CHECK_THROWS_AS(inverse_branch(LineParams{0.0, 0.0}, 1, 5.0, 0.1), Error);
}

TEST_CASE("angle helpers") {
  CHECK(wrap_angle(3 * kPi) == doctest::Approx(kPi));
  CHECK(wrap_angle(-kPi) == doctest::Approx(kPi));
  CHECK(turning_angle(Point(1, 0), Point(0, 1)) == doctest::Approx(kPi / 2));
  CHECK(point_segment_distance(Point(0, 2), Point(-1, 0), Point(1, 0)) == doctest::Approx(2.0));
  CHECK(point_segment_distance(Point(3, 0), Point(-1, 0), Point(1, 0)) == doctest::Approx(2.0));
}

TEST_CASE("curve CSV round trip is exact") {
  const PlanarCurve c = circle(1.0 / 3.0, Point(0.1, 0.2), 37);
  std::stringstream ss;
  write_curve_csv(ss, c);
  const PlanarCurve back = read_curve_csv(ss);
  REQUIRE(back.size() == c.size());
  CHECK(back.closed());
  for (std::size_t i = 0; i < c.size(); ++i) CHECK(back[i] == c[i]);
  CHECK(std::stod(format_double(0.1)) == 0.1);
  CHECK(format_double(0.1) == "0.1");
}
