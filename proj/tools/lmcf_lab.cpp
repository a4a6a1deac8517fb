#include <CLI11.hpp>
#include <json.hpp>

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>

#include "lmcf/curve_io.hpp"
#include "lmcf/diagnostics.hpp"
#include "lmcf/scenario.hpp"

namespace fs = std::filesystem;
using namespace lmcf;

namespace {

fs::path output_root(const std::string& flag, const fs::path& fallback) {
  if (!flag.empty()) return flag;
  if (const char* env = std::getenv("LMCF_LAB_OUT"); env && *env) return env;
  if (!fallback.empty()) return fallback;
  return "lmcf_out";
}

// key=value pairs become TOML lines so that the scenario validator checks them.
std::string toml_lines(const std::vector<std::string>& pairs) {
  std::string out;
  for (const auto& p : pairs) {
    if (p.find('=') == std::string::npos) throw Error(ErrorCode::kConfig, "expected key=value, got '" + p + "'");
    out += p + "\n";
  }
  return out;
}

void write_json(const fs::path& path, const nlohmann::json& doc) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out << doc.dump(2) << "\n";
}

int simulate(const std::vector<std::string>& configs, const std::string& out_flag, int workers) {
  struct Job {
    fs::path config;
    Scenario scenario;
    fs::path root;
  };
  std::vector<Job> jobs;
  int status = 0;
  for (const auto& c : configs) {
    try {
      Job job{c, parse_scenario(c), {}};
      fs::path fallback;
      if (!job.scenario.output.dir.empty()) {
        fallback = fs::path(job.scenario.output.dir);
        if (fallback.is_relative()) fallback = fs::path(c).parent_path() / fallback;
      }
      job.root = output_root(out_flag, fallback);
      jobs.push_back(std::move(job));
    } catch (const Error& e) {
      std::cerr << "error: " << e.what() << "\n";
      status = 2;
    }
  }
  if (status != 0) return status;
  std::set<std::string> ids;
  for (const auto& j : jobs) {
    if (!ids.insert((j.root / j.scenario.id).lexically_normal().string()).second) {
      std::cerr << "error: scenario id '" << j.scenario.id << "' appears twice in one run\n";
      return 2;
    }
  }

  std::vector<ExitReport> reports(jobs.size());
  std::atomic<std::size_t> next{0};
  std::mutex print;
  auto worker = [&] {
    for (std::size_t k = next++; k < jobs.size(); k = next++) {
      reports[k] = run_scenario(jobs[k].scenario, jobs[k].root);
      std::lock_guard lock(print);
      std::cerr << (reports[k].ok ? "ok    " : "FAILED") << "  " << jobs[k].scenario.id << "  ->  "
                << reports[k].directory.string() << "\n";
    }
  };
  const auto width = static_cast<std::size_t>(std::max(1, workers));
  std::vector<std::thread> pool;
  for (std::size_t w = 1; w < std::min(width, jobs.size()); ++w) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  nlohmann::json summary = nlohmann::json::array();
  for (const auto& r : reports) {
    summary.push_back(r.to_json());
    if (!r.ok) status = 1;
  }
  std::cout << summary.dump(2) << "\n";
  return status;
}

int profile(const std::string& kind, const std::string& name, const std::vector<std::string>& params,
            const std::string& out_flag) {
  std::string text = "schema = 1\nid = \"profile\"\n[[profile]]\nkind = \"" + kind + "\"\n";
  if (!name.empty()) text += "name = \"" + name + "\"\n";
  text += toml_lines(params);
  const Scenario s = parse_scenario_text(text);
  const fs::path dir = output_root(out_flag, {}) / "profiles";
  fs::create_directories(dir);
  bool ok = true;
  nlohmann::json summary = nlohmann::json::array();
  for (const auto& b : build_profile(s.profiles.front())) {
    write_curve_csv(dir / (b.name + ".csv"), b.curve);
    nlohmann::json doc = {{"name", b.name}, {"kind", kind}, {"params", s.profiles.front().params},
                          {"nodes", b.curve.size()}, {"ok", b.report_ok}, {"report", b.report}};
    write_json(dir / (b.name + ".json"), doc);
    summary.push_back({{"name", b.name}, {"ok", b.report_ok}, {"csv", (dir / (b.name + ".csv")).string()}});
    ok = ok && b.report_ok;
  }
  std::cout << summary.dump(2) << "\n";
  return ok ? 0 : 1;
}

int density(const std::string& curve_path, const std::vector<double>& y, double l, int alpha_nodes,
            double truncation) {
  if (y.size() != 4) throw Error(ErrorCode::kConfig, "--y needs 4 coordinates");
  const PlanarCurve curve = read_curve_csv(fs::path(curve_path));
  DensityQuery q;
  q.center = {y[0], y[1], y[2], y[3]};
  q.scale = l;
  q.alpha_nodes = alpha_nodes;
  q.truncation = truncation;
  const DensityResult r = gaussian_density(curve, q);
  std::cout << nlohmann::json{{"density", r.value},
                              {"error_estimate", r.error_estimate},
                              {"tail_warning", r.tail_warning},
                              {"y", y},
                              {"l", l}}
                   .dump(2)
            << "\n";
  return 0;
}

int diagnose(const fs::path& run_dir, const std::string& check, const std::vector<std::string>& params,
             double spacing) {
  std::map<std::string, PlanarCurve> refs;
  std::string text = "schema = 1\nid = \"diagnose\"\n";
  if (fs::is_directory(run_dir / "profiles")) {
    for (const auto& entry : fs::directory_iterator(run_dir / "profiles")) {
      if (entry.path().extension() != ".csv") continue;
      refs.emplace(entry.path().stem().string(), read_curve_csv(entry.path()));
    }
  }
  // Stub entries so that references to the run's profiles validate.
  if (refs.empty()) text += "[[profile]]\nkind = \"ray\"\n";
  for (const auto& [name, curve] : refs) text += "[[profile]]\nkind = \"ray\"\nname = \"" + name + "\"\n";
  text += "[[diagnostics]]\ncheck = \"" + check + "\"\n" + toml_lines(params);
  const Scenario s = parse_scenario_text(text);
  const Trajectory traj = load_trajectory(run_dir);
  if (spacing <= 0.0) {
    const PlanarCurve& c = traj.samples.front().curves.front();
    spacing = c.length() / static_cast<double>(c.segment_count());
  }
  const Report r = run_diagnostic(s.diagnostics.front(), traj, refs, spacing);
  std::cout << r.to_json().dump(2) << "\n";
  return r.acceptable() ? 0 : 1;
}

int render(const fs::path& snapshot, const std::string& output, const std::vector<double>& guides) {
  SvgStyle style;
  style.guide_angles = guides;
  const std::string svg = emit_svg(read_snapshot_csv(snapshot), style);
  if (output.empty()) {
    std::cout << svg;
  } else {
    std::ofstream out(output, std::ios::binary);
    if (!out) throw Error(ErrorCode::kIo, "cannot write " + output);
    out << svg;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Equivariant Lagrangian mean curvature flow lab"};
  app.require_subcommand(1);
  std::string out;
  int workers = 1;
  bool deterministic = true;
  app.add_option("--out", out, "Output root (overrides LMCF_LAB_OUT)");
  app.add_option("--workers", workers, "Scenarios run in parallel")->check(CLI::Range(1, 256));
  app.add_flag("--seedless-deterministic,!--no-seedless-deterministic", deterministic,
               "Deterministic execution (the only supported mode)");

  auto* sim = app.add_subcommand("simulate", "Run scenario files");
  std::vector<std::string> configs;
  sim->add_option("config", configs, "Scenario TOML files")->required()->check(CLI::ExistingFile);

  auto* prof = app.add_subcommand("profile", "Construct a profile and write CSV plus validation JSON");
  std::string kind;
  std::string name;
  std::vector<std::string> params;
  prof->add_option("kind", kind, "ray, bent_ray, circle, sigma, whitney, lawlor, expander")->required();
  prof->add_option("--name", name, "Output stem");
  prof->add_option("--param,-p", params, "Constructor parameter key=value");

  auto* dens = app.add_subcommand("density", "Gaussian density of a curve");
  std::string curve_path;
  std::vector<double> y{0, 0, 0, 0};
  double l = 1.0;
  int alpha_nodes = 128;
  double truncation = 8.0;
  dens->add_option("curve", curve_path, "Curve CSV")->required()->check(CLI::ExistingFile);
  dens->add_option("--y", y, "Centre in R^4 as x1,y1,x2,y2")->delimiter(',')->expected(4);
  dens->add_option("--l", l, "Scale")->required();
  dens->add_option("--alpha-nodes", alpha_nodes, "Orbit quadrature nodes");
  dens->add_option("--truncation", truncation, "Truncation radius in units of sqrt(l)");

  auto* diag = app.add_subcommand("diagnose", "Run one check on a simulated run directory");
  std::string run_dir;
  std::string check;
  std::vector<std::string> check_params;
  double spacing = 0.0;
  diag->add_option("trajectory-dir", run_dir, "Run directory")->required()->check(CLI::ExistingDirectory);
  diag->add_option("--check", check, "Check name")->required();
  diag->add_option("--param,-p", check_params, "Check parameter key=value");
  diag->add_option("--spacing", spacing, "Node spacing used for guards (default: measured)");

  auto* rend = app.add_subcommand("render", "Render a snapshot or curve CSV to SVG");
  std::string snapshot;
  std::string svg_out;
  std::vector<double> guides;
  rend->add_option("snapshot", snapshot, "Snapshot or curve CSV")->required()->check(CLI::ExistingFile);
  rend->add_option("--output,-o", svg_out, "SVG path (default stdout)");
  rend->add_option("--guide", guides, "Asymptote guide angle")->delimiter(',');

  CLI11_PARSE(app, argc, argv);
  if (!deterministic) {
    std::cerr << "error: only deterministic execution is supported\n";
    return 2;
  }
  try {
    if (*sim) return simulate(configs, out, workers);
    if (*prof) return profile(kind, name, params, out);
    if (*dens) return density(curve_path, y, l, alpha_nodes, truncation);
    if (*diag) return diagnose(run_dir, check, check_params, spacing);
    if (*rend) return render(snapshot, svg_out, guides);
  } catch (const Error& e) {
    std::cerr << "error [" << to_string(e.code()) << "]: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
