// Runs every acceptance criterion and prints one PASS/FAIL line for each.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numbers>
#include <sstream>

#include "lmcf/diagnostics.hpp"
#include "lmcf/profiles.hpp"
#include "lmcf/scenario.hpp"

using namespace lmcf;
namespace fs = std::filesystem;
constexpr double kPi = std::numbers::pi;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3g", v);
  return buf;
}

nlohmann::json read_json(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw Error(ErrorCode::kIo, "missing " + p.string());
  return nlohmann::json::parse(in);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Reports of a run directory by check name, in file order.
std::vector<nlohmann::json> reports_named(const fs::path& run, const std::string& check) {
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(run / "reports")) files.push_back(e.path());
  std::sort(files.begin(), files.end());
  std::vector<nlohmann::json> out;
  for (const auto& f : files) {
    if (f.filename() == "constructors.json") continue;
    auto doc = read_json(f);
    if (doc.at("check") == check) out.push_back(std::move(doc));
  }
  return out;
}

struct Runs {
  fs::path root;
  fs::path sigma;
  fs::path sigma_again;
  fs::path circle;
  fs::path offset;
  fs::path expander;
};

Runs run_bundled(const fs::path& root) {
  Runs r;
  r.root = root;
  auto go = [&](const std::string& file, const fs::path& out) {
    const ExitReport rep = run_scenario(parse_scenario(fs::path(LMCF_SCENARIO_DIR) / file), out);
    if (rep.error) std::cerr << file << ": " << *rep.error << "\n";
    return rep.directory;
  };
  r.sigma = go("figure4_sigma.toml", root / "a");
  r.sigma_again = go("figure4_sigma.toml", root / "b");
  r.circle = go("circle_collapse.toml", root / "a");
  r.offset = go("circle_offset.toml", root / "a");
  r.expander = go("figure2_expander.toml", root / "a");
  return r;
}

Outcome stationary() {
  std::ostringstream d;
  bool ok = true;
  FlowConfig cfg;
  cfg.max_time = 1.0;
  {
    const double spacing = 0.05;
    const EquivariantProfile p = ray(0.8, 511 * spacing, spacing);
    cfg.target_spacing = spacing;
    FlowState s;
    s.components.push_back(make_component(p));
    const auto t0 = std::chrono::steady_clock::now();
    const RunResult res = run(s, cfg);
    const double secs = seconds_since(t0);
    const double drift = hausdorff_distance(res.state.components[0].curve, p.curve()) / p.curve().bbox_diameter();
    ok = ok && p.curve().size() == 512 && drift < 1e-4 && secs < 5.0 && res.state.events.empty();
    d << "ray n=" << p.curve().size() << " drift/diam=" << num(drift) << " " << num(secs) << "s; ";
  }
  {
    // The sampler is symmetric about the neck (odd node counts), so resample to 512.
    const PlanarCurve raw = lawlor_profile(1.0, 0.0, 10.0, 0.02).components[0];
    const double spacing = raw.length() / 511.0;
    const PlanarCurve neck = resample(raw, spacing);
    cfg.target_spacing = spacing;
    FlowState s;
    s.components.push_back(make_component(neck));
    const auto t0 = std::chrono::steady_clock::now();
    const RunResult res = run(s, cfg);
    const double secs = seconds_since(t0);
    const double drift = hausdorff_distance(res.state.components[0].curve, neck) / neck.bbox_diameter();
    ok = ok && neck.size() == 512 && drift < 1e-4 && secs < 5.0 && res.state.events.empty();
    d << "lawlor n=" << neck.size() << " drift/diam=" << num(drift) << " " << num(secs) << "s";
  }
  return {ok, d.str()};
}

Outcome circle_benchmark() {
  std::vector<Point> pts;
  for (int k = 0; k < 256; ++k) pts.push_back(std::polar(1.0, 2 * kPi * k / 256.0));
  const PlanarCurve c(std::move(pts), true);
  FlowConfig cfg;
  cfg.target_spacing = c.length() / 256.0;
  cfg.max_time = 0.3;
  FlowState s;
  s.components.push_back(make_component(c));
  const auto t0 = std::chrono::steady_clock::now();
  const RunResult res = run(s, cfg);
  const double secs = seconds_since(t0);
  double tc = -1;
  for (const Event& e : res.state.events) {
    if (e.kind == EventKind::kLoopCollapse) {
      tc = e.t;
      break;
    }
  }
  const double rel = std::abs(tc - 0.25) / 0.25;
  return {rel <= 5e-3 && secs < 5.0, "T=" + num(tc) + " rel.err=" + num(rel) + " " + num(secs) + "s"};
}

Outcome expander(const Runs& runs) {
  ExpanderSpec spec;
  const ExpanderResult ex = expander_profile(spec);
  const double diam = ex.curve.bbox_diameter();
  const double osc = beta_theta_invariant(ex.curve, 1.0, 0.8 * spec.extent);
  const auto sim = reports_named(runs.expander, "self_similarity");
  bool tracks = false;
  std::string track_detail = "self_similarity report missing";
  if (sim.size() == 1) {
    tracks = sim[0].at("verdict") == "PASS";
    const auto& det = sim[0].at("details");
    track_detail = "sqrt(t) misfit=" + num(det.at("max_distance")) + " (limit " + num(det.at("limit")) + ")";
  }
  const bool ok = ex.ode_residual < 1e-6 && tracks && osc < 1e-3 * diam * diam;
  return {ok, "ODE residual=" + num(ex.ode_residual) + "; " + track_detail + "; beta+2t*theta osc=" + num(osc) +
                  " (limit " + num(1e-3 * diam * diam) + ")"};
}

double plane_distance(const R4& y, double a) {
  const double c = std::cos(a), s = std::sin(a);
  const double p1 = y[0] * c + y[1] * s;
  const double p2 = y[2] * c + y[3] * s;
  const double n2 = y[0] * y[0] + y[1] * y[1] + y[2] * y[2] + y[3] * y[3];
  return std::sqrt(std::max(0.0, n2 - p1 * p1 - p2 * p2));
}

Outcome density() {
  const auto t0 = std::chrono::steady_clock::now();
  const double th2 = 0.6 * kPi;
  const PlanarCurve plane = ray(0.0, 80.0, 0.05).curve();
  double worst_plane = 0.0;
  for (double s : {0.0, 0.7, 2.5}) {
    for (double l : {0.05, 0.5, 4.0}) {
      DensityQuery q;
      q.center = orbit_point(Point(s, 0.0), 0.9);
      q.scale = l;
      worst_plane = std::max(worst_plane, std::abs(gaussian_density(plane, q).value - 1.0));
    }
  }
  const std::vector<PlanarCurve> pair{plane, ray(th2, 80.0, 0.05).curve()};
  double worst_pair = 0.0;
  for (int i = 0; i < 5; ++i) {
    for (int j = 0; j < 5; ++j) {
      const double r = 0.25 * i;
      const R4 y{r * std::cos(1.0), r * std::sin(1.0), 0.3 * r, -0.2 * r};
      const double l = 0.1 * std::pow(2.5, j);
      DensityQuery q;
      q.center = y;
      q.scale = l;
      const double d1 = plane_distance(y, 0.0);
      const double d2 = plane_distance(y, th2);
      const double expected = std::exp(-d1 * d1 / (4 * l)) + std::exp(-d2 * d2 / (4 * l));
      worst_pair = std::max(worst_pair, std::abs(gaussian_density(pair, q).value - expected));
    }
  }
  const double secs = seconds_since(t0);
  return {worst_plane <= 1e-4 && worst_pair <= 1e-3 && secs < 10.0,
          "plane err=" + num(worst_plane) + "; two-plane 5x5 max err=" + num(worst_pair) + "; " + num(secs) + "s"};
}

Outcome monotonicity(const Runs& runs) {
  bool ok = true;
  std::string d;
  for (const auto& [label, dir] : {std::pair{"circle", runs.circle}, std::pair{"sigma", runs.sigma}}) {
    const auto reps = reports_named(dir, "density_monotonicity");
    const bool pass = reps.size() == 1 && reps[0].at("verdict") == "PASS";
    ok = ok && pass;
    d += std::string(label) + " " + (reps.empty() ? "missing" : reps[0].at("verdict").get<std::string>());
    if (!reps.empty() && reps[0].at("details").contains("max_increase")) {
      d += " (max increase " + num(reps[0].at("details").at("max_increase")) + ")";
    }
    d += "; ";
  }
  return {ok, d};
}

Outcome area_law(const Runs& runs) {
  bool ok = true;
  std::string d;
  const std::vector<std::tuple<std::string, fs::path, double>> cases{
      {"sigma", runs.sigma, 0.05}, {"off-origin circle", runs.offset, 0.02}, {"origin circle", runs.circle, 0.02}};
  for (const auto& [label, dir, tol] : cases) {
    const auto reps = reports_named(dir, "loop_area_law");
    bool pass = reps.size() == 1 && reps[0].at("verdict") == "PASS" &&
                reps[0].at("params").at("tolerance").get<double>() <= tol;
    ok = ok && pass;
    d += label + ": ";
    if (!reps.empty()) {
      const auto& det = reps[0].at("details");
      if (det.contains("max_relative_residual")) d += "max rel.residual=" + num(det.at("max_relative_residual"));
      if (det.contains("predicted_rate")) d += " rate=" + num(det.at("predicted_rate"));
    }
    d += pass ? " ok; " : " FAILED; ";
  }
  return {ok, d};
}

Outcome time_bound(const Runs& runs) {
  const auto reps = reports_named(runs.sigma, "singular_time_bound");
  if (reps.size() != 1) return {false, "report missing"};
  const auto& det = reps[0].at("details");
  std::string d = det.dump();
  return {reps[0].at("verdict") == "PASS", d};
}

Outcome angle_jump(const Runs& runs) {
  const auto reps = reports_named(runs.sigma, "angle_jump");
  if (reps.size() != 1) return {false, "report missing"};
  const auto& det = reps[0].at("details");
  const auto& jumps = det.at("jumps");
  const auto& lip = det.at("lipschitz");
  bool ok = reps[0].at("verdict") == "PASS" && jumps.size() == 1 && lip.size() == 2;
  std::string d;
  if (jumps.size() == 1) {
    const double mag = jumps[0].at("magnitude").get<double>();
    ok = ok && std::abs(std::abs(mag) - 2 * kPi) <= 0.1;
    d += "jump=" + num(mag) + " at t~" + num(jumps[0].at("t_after").get<double>());
  }
  for (const auto& w : lip) {
    const double c = w.at("constant").get<double>();
    ok = ok && std::isfinite(c);
    d += "; Lipschitz C=" + num(c);
  }
  return {ok, d};
}

Outcome sturm(const Runs& runs) {
  bool ok = true;
  std::string d;
  const auto reps = reports_named(runs.sigma, "intersection_count");
  ok = reps.size() == 3;
  for (const auto& r : reps) {
    const bool pass = r.at("verdict") == "PASS" && r.at("details").at("initial").get<int>() == 1;
    ok = ok && pass;
    d += r.at("params").at("reference").get<std::string>() + ": " + r.at("details").at("initial").dump() + "->" +
         r.at("details").at("final").dump() + "; ";
  }
  // Two bent rays meeting only at the origin, evolved together.
  const std::string text = R"(schema = 1
id = "avoidance"
[[profile]]
kind = "bent_ray"
name = "a"
angle = 0.3
turn = 0.5
spacing = 0.05
length = 20
[[profile]]
kind = "bent_ray"
name = "b"
angle = 1.6
turn = -0.4
spacing = 0.05
length = 20
[flow]
max_time = 1
sample_stride = 0.05
[[diagnostics]]
check = "intersection_count"
component = 0
second = 1
expect_max_off_origin = 0
)";
  const ExitReport rep = run_scenario(parse_scenario_text(text), runs.root / "a");
  const auto pair = reports_named(rep.directory, "intersection_count");
  const bool pair_ok = rep.ok && pair.size() == 1 && pair[0].at("verdict") == "PASS" &&
                       pair[0].at("details").at("max_off_origin").get<int>() == 0;
  ok = ok && pair_ok;
  d += "co-evolved pair max off-origin=" + (pair.empty() ? std::string("?") : pair[0].at("details").at("max_off_origin").dump());
  return {ok, d};
}

Outcome surgery_topology(const Runs& runs) {
  const Trajectory traj = load_trajectory(runs.sigma);
  const nlohmann::json scenario = read_json(runs.sigma / "report.json");
  int surgeries = 0;
  int others_after = 0;
  bool ok = true;
  std::string d;
  double t_surgery = -1;
  for (const Event& e : traj.events) {
    if (e.kind == EventKind::kSurgery) {
      ++surgeries;
      t_surgery = e.t;
      const double before = e.payload.at("rotation_index_before").get<double>();
      const double after = e.payload.at("rotation_index_after").get<double>();
      const int crossings = e.payload.at("crossings_after").get<int>();
      ok = ok && crossings == 0 && std::abs(std::abs(after - before) - 1.0) < 1e-6;
      d += "crossings after=" + std::to_string(crossings) + " rotation index " + num(before) + "->" + num(after);
    } else if (t_surgery >= 0 && e.t > t_surgery) {
      ++others_after;
    }
  }
  const Snapshot& last = traj.samples.back();
  const bool embedded_end = self_intersections(last.curves.at(0)).empty();
  const bool reached = std::abs(last.time - 3.0) < 1e-9;
  ok = ok && surgeries == 1 && others_after == 0 && embedded_end && reached;
  d += "; later events=" + std::to_string(others_after) + "; final t=" + num(last.time) +
       (embedded_end ? " embedded" : " NOT embedded");
  return {ok, d};
}

Outcome determinism(const Runs& runs) {
  std::size_t compared = 0;
  std::size_t differing = 0;
  for (const auto& e : fs::recursive_directory_iterator(runs.sigma)) {
    if (!e.is_regular_file()) continue;
    const auto ext = e.path().extension();
    if (ext != ".csv" && ext != ".jsonl") continue;
    ++compared;
    const fs::path other = runs.sigma_again / fs::relative(e.path(), runs.sigma);
    if (!fs::exists(other) || slurp(e.path()) != slurp(other)) ++differing;
  }
  return {compared > 100 && differing == 0,
          std::to_string(compared) + " CSV/JSONL files compared, " + std::to_string(differing) + " differ"};
}

}  // namespace

int main(int argc, char** argv) {
  const fs::path root = argc > 1 ? fs::path(argv[1]) : fs::temp_directory_path() / "lmcf_acceptance";
  fs::remove_all(root);
  const auto t0 = std::chrono::steady_clock::now();
  Runs runs;
  try {
    runs = run_bundled(root);
  } catch (const std::exception& e) {
    std::cout << "FAIL  setup: " << e.what() << "\n";
    return 1;
  }
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"1 stationary ray and Lawlor neck", stationary},
      {"2 circle collapse at t = 1/4", circle_benchmark},
      {"3 self-expander", [&] { return expander(runs); }},
      {"4 density formulas", density},
      {"5 Huisken monotonicity", [&] { return monotonicity(runs); }},
      {"6 loop-area law", [&] { return area_law(runs); }},
      {"7 singular-time bound", [&] { return time_bound(runs); }},
      {"8 angle jump", [&] { return angle_jump(runs); }},
      {"9 intersection counts", [&] { return sturm(runs); }},
      {"10 surgery topology", [&] { return surgery_topology(runs); }},
      {"11 determinism", [&] { return determinism(runs); }},
  };
  int failures = 0;
  for (const auto& [name, fn] : criteria) {
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failures;
    std::cout << (o.pass ? "PASS" : "FAIL") << "  criterion " << name << "  [" << o.detail << "]\n";
  }
  std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << " in "
            << num(seconds_since(t0)) << "s\n";
  return failures == 0 ? 0 : 1;
}
