#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "lmcf/curve_io.hpp"
#include "lmcf/profiles.hpp"
#include "lmcf/scenario.hpp"

using namespace lmcf;
namespace fs = std::filesystem;

namespace {

std::string error_of(const std::string& text) {
  try {
    parse_scenario_text(text);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kConfig);
    return e.what();
  }
  return "";
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("lmcf_test_" + name);
  fs::remove_all(dir);
  return dir;
}

const char* kMinimal = R"(schema = 1
id = "mini"

[[profile]]
kind = "ray"
)";

}  // namespace

TEST_CASE("TOML subset") {
  const auto doc = toml::parse_string(R"(a = 1.5  # comment
s = "x # y"
b = true
arr = [1, 2, 3_000]
[t]
k = -2e-3
[[list]]
v = 1
[[list]]
v = 2
)");
  CHECK(doc.root.values.at("a").number == 1.5);
  CHECK(doc.root.values.at("s").string == "x # y");
  CHECK(doc.root.values.at("b").boolean);
  CHECK(doc.root.values.at("arr").array == std::vector<double>{1, 2, 3000});
  CHECK(doc.tables.at("t").values.at("k").number == -2e-3);
  CHECK(doc.arrays.at("list").size() == 2);
  CHECK(doc.arrays.at("list")[1].values.at("v").line == 10);
  CHECK_THROWS_AS(toml::parse_string("a = 1\na = 2\n"), Error);
  CHECK_THROWS_AS(toml::parse_string("[t]\n[t]\n"), Error);
  CHECK_THROWS_AS(toml::parse_string("a = \"open\n"), Error);
  CHECK_THROWS_AS(toml::parse_string("a = 1x\n"), Error);
}

TEST_CASE("minimal config gets defaults") {
  const Scenario s = parse_scenario_text(kMinimal);
  CHECK(s.id == "mini");
  REQUIRE(s.profiles.size() == 1);
  CHECK(s.profiles[0].name == "ray_0");
  CHECK(s.profiles[0].evolve);
  CHECK(s.profiles[0].params.at("length") == 30.0);
  CHECK(s.profiles[0].params.at("spacing") == 0.05);
  CHECK_FALSE(s.has_flow);
  CHECK(s.output.snapshots);
}

TEST_CASE("validation errors name key, type and line") {
  CHECK(error_of(std::string(kMinimal) + "[flow]\ncfl_factor = 0.9\n").find("cfl_factor") != std::string::npos);
  const std::string typo = error_of(std::string(kMinimal) + "angel = 1\n");
  CHECK(typo.find("line 6") != std::string::npos);
  CHECK(typo.find("angel") != std::string::npos);
  const std::string type = error_of(std::string(kMinimal) + "angle = \"wide\"\n");
  CHECK(type.find("expects a number") != std::string::npos);
  CHECK(type.find("line 6") != std::string::npos);
  CHECK(!error_of("schema = 2\nid = \"x\"\n[[profile]]\nkind = \"ray\"\n").empty());
  CHECK(!error_of("schema = 1\nid = \"x\"\n").empty());
  CHECK(!error_of("schema = 1\nid = \"x\"\n[[profile]]\nkind = \"spiral\"\n").empty());
  CHECK(!error_of(std::string(kMinimal) + "[[diagnostics]]\ncheck = \"collapse_time\"\n").empty());
  CHECK(!error_of(std::string(kMinimal) + "[[diagnostics]]\ncheck = \"intersection_count\"\nreference = \"ghost\"\n").empty());
  CHECK(!error_of(std::string(kMinimal) + "[flow]\nstart_time = 2\nmax_time = 1\n").empty());
  CHECK(!error_of(std::string(kMinimal) + "[extra]\n").empty());
  CHECK(!error_of(std::string(kMinimal) + "spacing = -1\n").empty());
}

TEST_CASE("canonical form round trip") {
  for (const auto& entry : fs::directory_iterator(LMCF_SCENARIO_DIR)) {
    CAPTURE(entry.path());
    const Scenario s = parse_scenario(entry.path());
    const std::string canon = canonical_toml(s);
    const Scenario back = parse_scenario_text(canon);
    CHECK(back == s);
    CHECK(canonical_toml(back) == canon);
  }
}

TEST_CASE("profile builders") {
  ProfileEntry e = parse_scenario_text(kMinimal).profiles[0];
  auto built = build_profile(e);
  REQUIRE(built.size() == 1);
  CHECK(built[0].pinned);
  CHECK(built[0].report_ok);

  const Scenario bent = parse_scenario_text(
      "schema = 1\nid = \"b\"\n[[profile]]\nkind = \"bent_ray\"\nangle = 0.2\nturn = 0.5\nlength = 10\n");
  built = build_profile(bent.profiles[0]);
  CHECK(built[0].curve[0] == Point(0, 0));
  CHECK(*built[0].asymptote_angle == doctest::Approx(0.7));
  const Point tail = built[0].curve[built[0].curve.size() - 1] - built[0].curve[built[0].curve.size() - 2];
  CHECK(std::arg(tail) == doctest::Approx(0.7).epsilon(1e-6));

  const Scenario cone = parse_scenario_text("schema = 1\nid = \"c\"\n[[profile]]\nkind = \"lawlor\"\nname = \"L\"\noffset = 0\n");
  built = build_profile(cone.profiles[0]);
  REQUIRE(built.size() == 2);
  CHECK(built[0].name == "L");
  CHECK(built[1].name == "L_1");
}

TEST_CASE("SVG output") {
  const Snapshot ray_snap{0.5, {ray(0.3, 5.0, 0.1).curve()}, {true}};
  SvgStyle style;
  style.guide_angles = {0.3};
  const std::string svg = emit_svg(ray_snap, style);
  CHECK(svg == emit_svg(ray_snap, style));
  auto count = [&](const std::string& s, const std::string& what) {
    std::size_t n = 0;
    for (auto p = s.find(what); p != std::string::npos; p = s.find(what, p + 1)) ++n;
    return n;
  };
  CHECK(count(svg, "class=\"curve\"") == 1);
  CHECK(count(svg, "class=\"origin\"") == 1);
  CHECK(count(svg, "class=\"guide\"") == 1);
  CHECK(count(svg, "class=\"loop\"") == 0);
  CHECK(svg.rfind("</svg>\n") == svg.size() - 7);

  const Snapshot sigma_snap{1.0, {sigma_curve(SigmaSpec{}).profile.curve()}, {true}};
  CHECK(count(emit_svg(sigma_snap), "class=\"loop\"") == 1);
  CHECK_THROWS_AS(emit_svg(Snapshot{}), Error);
}

TEST_CASE("snapshot CSV round trip") {
  const fs::path dir = scratch("snap");
  fs::create_directories(dir);
  const Snapshot s{0.3, {ray(0.3, 2.0, 0.1).curve(), ray(2.0, 2.0, 0.1).curve()}, {true, false}};
  write_snapshot_csv(dir / "s.csv", s);
  const Snapshot back = read_snapshot_csv(dir / "s.csv");
  CHECK(back.time == 0.3);
  REQUIRE(back.curves.size() == 2);
  CHECK(back.pinned == s.pinned);
  for (std::size_t c = 0; c < 2; ++c) {
    REQUIRE(back.curves[c].size() == s.curves[c].size());
    for (std::size_t i = 0; i < s.curves[c].size(); ++i) CHECK(back.curves[c][i] == s.curves[c][i]);
  }
  fs::remove_all(dir);
}

TEST_CASE("run_scenario writes the artifact layout and is deterministic") {
  const std::string text = R"(schema = 1
id = "offset_circle"
[[profile]]
kind = "circle"
radius = 0.5
center_x = 3
nodes = 128
[flow]
max_time = 0.2
sample_stride = 0.01
[[diagnostics]]
check = "collapse_time"
expected = 0.125
tolerance = 0.02
[[diagnostics]]
check = "loop_area_law"
)";
  const Scenario s = parse_scenario_text(text);
  const fs::path a = scratch("run_a");
  const fs::path b = scratch("run_b");
  const ExitReport ra = run_scenario(s, a);
  const ExitReport rb = run_scenario(s, b);
  CHECK(ra.ok);
  CHECK_FALSE(ra.error.has_value());
  REQUIRE(ra.verdicts.size() == 2);
  const fs::path run = a / "offset_circle";
  for (const char* sub : {"snapshots", "series", "reports", "render", "profiles"}) CHECK(fs::is_directory(run / sub));
  CHECK(fs::exists(run / "events.jsonl"));
  CHECK(fs::exists(run / "report.json"));
  CHECK(fs::exists(run / "snapshots" / "index.csv"));
  std::size_t files = 0;
  for (const auto& entry : fs::recursive_directory_iterator(run)) {
    if (!entry.is_regular_file()) continue;
    ++files;
    const fs::path rel = fs::relative(entry.path(), run);
    CHECK_MESSAGE(slurp(entry.path()) == slurp(b / "offset_circle" / rel), rel.string());
  }
  CHECK(files > 20);

  const Trajectory traj = load_trajectory(run);
  CHECK(traj.samples.size() > 10);
  CHECK(traj.stride == 0.01);
  REQUIRE(!traj.events.empty());
  CHECK(traj.events[0].kind == EventKind::kLoopCollapse);
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST_CASE("failed constructors leave an error report") {
  const Scenario s = parse_scenario_text(
      "schema = 1\nid = \"bad\"\n[[profile]]\nkind = \"whitney\"\nepsilon = 2\n[flow]\nmax_time = 0.1\n");
  const fs::path root = scratch("bad");
  const ExitReport r = run_scenario(s, root);
  CHECK_FALSE(r.ok);
  REQUIRE(r.error.has_value());
  CHECK(fs::exists(root / "bad" / "error.json"));
  CHECK(fs::exists(root / "bad" / "report.json"));
  fs::remove_all(root);
}

TEST_CASE("diagnostic runner reports failing verdicts") {
  const Scenario s = parse_scenario_text(std::string(kMinimal) +
                                         "[[diagnostics]]\ncheck = \"event_count\"\nkind = \"surgery\"\nexpected = 1\n");
  Trajectory traj;
  traj.samples.push_back(Snapshot{0.0, {ray(0.0, 2.0, 0.1).curve()}, {true}});
  const Report r = run_diagnostic(s.diagnostics[0], traj, {}, 0.1);
  CHECK(r.verdict == Verdict::kFail);
  CHECK(r.details.at("count").get<int>() == 0);
}
