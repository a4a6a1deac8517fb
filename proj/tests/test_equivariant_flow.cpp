#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "lmcf/flow.hpp"
#include "lmcf/profiles.hpp"

using namespace lmcf;
constexpr double kPi = std::numbers::pi;

namespace {

PlanarCurve circle(double r, Point c, std::size_t n) {
  std::vector<Point> pts;
  for (std::size_t k = 0; k < n; ++k) pts.push_back(c + std::polar(r, 2 * kPi * double(k) / double(n)));
  return PlanarCurve(std::move(pts), true);
}

FlowState single(FlowComponent comp, double t0 = 0.0) {
  FlowState s;
  s.time = t0;
  s.components.push_back(std::move(comp));
  return s;
}

double first_collapse(const FlowState& s) {
  for (const Event& e : s.events) {
    if (e.kind == EventKind::kLoopCollapse) return e.t;
  }
  return -1.0;
}

}  // namespace

TEST_CASE("config validation") {
  FlowConfig c;
  CHECK_NOTHROW(c.validate());
  c.cfl_factor = 0.9;
  CHECK_THROWS_AS(c.validate(), Error);
  c = FlowConfig{};
  c.target_spacing = 0.0;
  CHECK_THROWS_AS(c.validate(), Error);
  c = FlowConfig{};
  c.resample_period = 0;
  CHECK_THROWS_AS(c.validate(), Error);
}

TEST_CASE("velocity vanishes on a ray") {
  const EquivariantProfile p = ray(1.1, 10.0, 0.05);
  for (const Point& v : velocity_field(p)) CHECK(std::abs(v) < 1e-12);
}

TEST_CASE("velocity on circles") {
  // Origin centred: curvature 1/r and the forcing 1/r both point inwards.
  const double r = 0.8;
  for (const Point& v : velocity_field(circle(r, 0, 512), false)) CHECK(std::abs(v) == doctest::Approx(2 / r).epsilon(1e-4));
  // Far from the origin the forcing is negligible against the curvature.
  const auto far = velocity_field(circle(1.0, Point(1e4, 0), 512), false);
  for (const Point& v : far) CHECK(std::abs(v) == doctest::Approx(1.0).epsilon(1e-3));
}

TEST_CASE("origin-centred circle collapses at r^2/4") {
  FlowConfig cfg;
  cfg.target_spacing = 2 * kPi / 256;
  cfg.max_time = 0.3;
  RunHooks hooks;
  hooks.stride = 0.01;
  hooks.probes.push_back({"area", [](const FlowState& s) {
                            return s.components.empty() ? 0.0 : signed_area(s.components[0].curve.nodes());
                          }});
  const RunResult res = run(single(make_component(circle(1.0, 0, 256))), cfg, hooks);
  CHECK(first_collapse(res.state) == doctest::Approx(0.25).epsilon(5e-3));
  CHECK(res.state.components.empty());
  CHECK(res.state.terminated);
  // A(t) = pi (1 - 4t)
  for (const auto& [t, a] : res.series.at("area").samples) {
    if (t < 0.2) CHECK(a == doctest::Approx(kPi * (1 - 4 * t)).epsilon(2e-2));
  }
}

TEST_CASE("off-origin circle collapses at r^2/2") {
  FlowConfig cfg;
  cfg.target_spacing = 2 * kPi * 0.5 / 200;
  cfg.max_time = 0.2;
  const RunResult res = run(single(make_component(circle(0.5, Point(4, 0), 200))), cfg);
  CHECK(first_collapse(res.state) == doctest::Approx(0.125).epsilon(2e-2));
}

TEST_CASE("ray and Lawlor neck are stationary") {
  FlowConfig cfg;
  cfg.max_time = 0.2;
  {
    const EquivariantProfile p = ray(0.3, 10.0, 0.05);
    cfg.target_spacing = 0.05;
    const RunResult res = run(single(make_component(p)), cfg);
    CHECK(hausdorff_distance(res.state.components[0].curve, p.curve()) < 1e-10);
  }
  {
    const auto neck = lawlor_profile(1.0, 0.0, 6.0, 0.04);
    FlowComponent comp = make_component(neck.components[0]);
    cfg.target_spacing = 0.04;
    const RunResult res = run(single(comp), cfg);
    const PlanarCurve& c = neck.components[0];
    CHECK(hausdorff_distance(res.state.components[0].curve, c) < 1e-4 * c.bbox_diameter());
    CHECK(res.state.events.empty());
  }
}

TEST_CASE("step respects the time limit and is deterministic") {
  FlowConfig cfg;
  cfg.target_spacing = 2 * kPi * 2 / 128;
  const FlowState s0 = single(make_component(circle(2.0, Point(0.3, 0), 128)));
  const FlowState a = step(s0, cfg, 1e-5);
  const FlowState b = step(s0, cfg, 1e-5);
  CHECK(a.time == doctest::Approx(1e-5));
  REQUIRE(a.components[0].curve.size() == b.components[0].curve.size());
  for (std::size_t i = 0; i < a.components[0].curve.size(); ++i) CHECK(a.components[0].curve[i] == b.components[0].curve[i]);
}

TEST_CASE("sigma loop collapses away from the origin and surgery removes it") {
  const SigmaResult sigma = sigma_curve(SigmaSpec{});
  REQUIRE(sigma.report.ok());
  FlowConfig cfg;
  cfg.target_spacing = 0.05;
  cfg.max_time = 2.0;
  RunHooks hooks;
  hooks.stride = 0.05;
  const RunResult res = run(single(make_component(sigma.profile), 1.0), cfg, hooks);
  std::size_t collapses = 0;
  std::size_t surgeries = 0;
  for (const Event& e : res.state.events) {
    if (e.kind == EventKind::kLoopCollapse) {
      ++collapses;
      CHECK(e.t < 2.0 + 0.05);
      CHECK(e.payload.at("distance_to_origin").get<double>() > 1.0);
    }
    if (e.kind == EventKind::kSurgery) {
      ++surgeries;
      CHECK(e.payload.at("crossings_after").get<int>() == 0);
      const double d = e.payload.at("rotation_index_after").get<double>() - e.payload.at("rotation_index_before").get<double>();
      CHECK(std::abs(d) == doctest::Approx(1.0).epsilon(1e-6));
    }
    CHECK(e.kind != EventKind::kAnomaly);
    CHECK(e.kind != EventKind::kBlowup);
  }
  CHECK(collapses == 1);
  CHECK(surgeries == 1);
  CHECK(self_intersections(res.state.components[0].curve).empty());
  CHECK(res.state.time == doctest::Approx(2.0));
  CHECK(res.state.components[0].curve[0] == Point(0, 0));
}

TEST_CASE("surgery refuses loops around the origin") {
  FlowConfig cfg;
  const FlowState s = single(make_component(circle(1.0, 0, 64)));
  LoopDescriptor loop;
  loop.whole_curve = true;
  loop.winds_origin = 1;
  CHECK_THROWS_AS(surgery(s, 0, loop, cfg), Error);
}

TEST_CASE("event JSON round trip") {
  Event e;
  e.t = 1.25;
  e.kind = EventKind::kSurgery;
  e.payload = {{"component", 0}, {"crossings_after", 0}};
  const Event back = event_from_json(event_to_json(e));
  CHECK(back.t == e.t);
  CHECK(back.kind == e.kind);
  CHECK(back.payload == e.payload);
  CHECK(event_kind_from_string("loop_collapse") == EventKind::kLoopCollapse);
  CHECK_FALSE(event_kind_from_string("nope").has_value());
  CHECK(event_log_jsonl({e, e}).find('\n') != std::string::npos);
}
