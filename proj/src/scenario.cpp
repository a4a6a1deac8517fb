#include "lmcf/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

#include "lmcf/curve_io.hpp"
#include "lmcf/profiles.hpp"

namespace lmcf {

namespace fs = std::filesystem;
using toml::Value;

namespace {

constexpr double kPi = std::numbers::pi;

[[noreturn]] void config_error(int line, const std::string& what) {
  std::ostringstream msg;
  if (line > 0) msg << "line " << line << ": ";
  msg << what;
  throw Error(ErrorCode::kConfig, msg.str());
}

using KeyDefaults = std::vector<std::pair<std::string, double>>;

const std::map<std::string, KeyDefaults>& profile_keys() {
  static const std::map<std::string, KeyDefaults> keys = {
      {"ray", {{"angle", 0.0}, {"length", 30.0}, {"spacing", 0.05}}},
      {"bent_ray",
       {{"angle", 0.0}, {"turn", 0.0}, {"turn_start", 1.0}, {"turn_length", 2.0}, {"length", 30.0}, {"spacing", 0.05}}},
      {"circle", {{"radius", 1.0}, {"center_x", 0.0}, {"center_y", 0.0}, {"nodes", 256.0}}},
      {"sigma", {{"loop_area", kPi}, {"cone_param", 0.05}, {"truncation_radius", 30.0}, {"spacing", 0.05}}},
      {"whitney",
       {{"epsilon", 0.05},
        {"outer_scale", 1.0},
        {"theta2", 0.6 * kPi},
        {"theta3", 0.8 * kPi},
        {"extent", 4.0},
        {"spacing", 0.005}}},
      {"lawlor", {{"offset", 1.0}, {"direction", 0.0}, {"extent", 10.0}, {"spacing", 0.04}}},
      {"expander", {{"opening_angle", 0.6 * kPi}, {"extent", 30.0}, {"spacing", 0.02}, {"ode_step", 1e-3}}},
  };
  return keys;
}

struct DiagKey {
  std::string key;
  Value::Type type;
  std::optional<Value> fallback;  // nullopt: optional without default
  bool required = false;
};

Value number(double v) {
  Value out;
  out.type = Value::Type::kNumber;
  out.number = v;
  return out;
}

Value array4(std::vector<double> v) {
  Value out;
  out.type = Value::Type::kArray;
  out.array = std::move(v);
  return out;
}

const std::map<std::string, std::vector<DiagKey>>& diagnostic_keys() {
  using T = Value::Type;
  static const std::map<std::string, std::vector<DiagKey>> keys = {
      {"density_monotonicity",
       {{"y", T::kArray, array4({0, 0, 0, 0})}, {"T", T::kNumber, std::nullopt, true}, {"slack", T::kNumber, number(1e-3)}}},
      {"angle_jump",
       {{"r_a", T::kNumber, number(0.5)},
        {"r_b", T::kNumber, number(10.0)},
        {"component", T::kNumber, number(0)},
        {"tolerance", T::kNumber, number(0.1)}}},
      {"loop_area_law",
       {{"component", T::kNumber, number(0)},
        {"tolerance", T::kNumber, number(0.05)},
        {"guard_diameter", T::kNumber, number(0.0)},
        {"min_samples", T::kNumber, number(10)}}},
      {"intersection_count",
       {{"component", T::kNumber, number(0)},
        {"reference", T::kString, std::nullopt},
        {"second", T::kNumber, std::nullopt},
        {"expect_initial", T::kNumber, std::nullopt},
        {"expect_max_off_origin", T::kNumber, std::nullopt}}},
      {"singular_time_bound", {{"component", T::kNumber, number(0)}}},
      {"self_similarity",
       {{"component", T::kNumber, number(0)}, {"radius", T::kNumber, number(10.0)}, {"tolerance", T::kNumber, number(1e-3)}}},
      {"collapse_time", {{"expected", T::kNumber, std::nullopt, true}, {"tolerance", T::kNumber, number(0.005)}}},
      {"event_count", {{"kind", T::kString, std::nullopt, true}, {"expected", T::kNumber, std::nullopt, true}}},
      {"validation", {}},
  };
  return keys;
}

const Value* find(const std::map<std::string, Value>& m, const std::string& key) {
  const auto it = m.find(key);
  return it == m.end() ? nullptr : &it->second;
}

void reject_unknown(const toml::Table& table, const std::set<std::string>& allowed, const std::string& where) {
  for (const auto& [key, value] : table.values) {
    if (!allowed.count(key)) config_error(value.line, "unknown key '" + key + "' in " + where);
  }
}

const Value& expect(const toml::Table& table, const std::string& key, Value::Type type, const std::string& where) {
  const Value* v = find(table.values, key);
  if (!v) config_error(table.line, "missing key '" + key + "' in " + where);
  if (v->type != type) {
    Value probe;
    probe.type = type;
    config_error(v->line, "key '" + key + "' in " + where + " expects a " + probe.type_name() + ", got " + v->type_name());
  }
  return *v;
}

double number_or(const toml::Table& table, const std::string& key, double fallback, const std::string& where) {
  if (!find(table.values, key)) return fallback;
  return expect(table, key, Value::Type::kNumber, where).number;
}

ProfileEntry parse_profile(const toml::Table& t, std::size_t index) {
  const std::string where = "[[profile]] #" + std::to_string(index + 1);
  ProfileEntry e;
  e.kind = expect(t, "kind", Value::Type::kString, where).string;
  const auto it = profile_keys().find(e.kind);
  if (it == profile_keys().end()) config_error(find(t.values, "kind")->line, "unknown profile kind '" + e.kind + "'");
  std::set<std::string> allowed{"kind", "name", "evolve"};
  for (const auto& [key, fallback] : it->second) {
    allowed.insert(key);
    e.params[key] = number_or(t, key, fallback, where);
  }
  reject_unknown(t, allowed, where);
  e.name = find(t.values, "name") ? expect(t, "name", Value::Type::kString, where).string
                                  : e.kind + "_" + std::to_string(index);
  e.evolve = find(t.values, "evolve") ? expect(t, "evolve", Value::Type::kBool, where).boolean : true;

  auto positive = [&](const char* key) {
    const auto p = e.params.find(key);
    if (p != e.params.end() && !(p->second > 0.0)) {
      const Value* v = find(t.values, key);
      config_error(v ? v->line : t.line, std::string("key '") + key + "' in " + where + " must be positive");
    }
  };
  for (const char* key : {"length", "spacing", "radius", "nodes", "loop_area", "cone_param", "truncation_radius",
                          "epsilon", "outer_scale", "extent", "turn_length", "ode_step"}) {
    positive(key);
  }
  return e;
}

DiagnosticEntry parse_diagnostic(const toml::Table& t, std::size_t index) {
  const std::string where = "[[diagnostics]] #" + std::to_string(index + 1);
  DiagnosticEntry d;
  d.check = expect(t, "check", Value::Type::kString, where).string;
  const auto it = diagnostic_keys().find(d.check);
  if (it == diagnostic_keys().end()) config_error(find(t.values, "check")->line, "unknown check '" + d.check + "'");
  std::set<std::string> allowed{"check"};
  for (const DiagKey& k : it->second) {
    allowed.insert(k.key);
    if (find(t.values, k.key)) {
      d.params[k.key] = expect(t, k.key, k.type, where);
      d.params[k.key].line = 0;
    } else if (k.required) {
      config_error(t.line, "missing key '" + k.key + "' in " + where);
    } else if (k.fallback) {
      d.params[k.key] = *k.fallback;
    }
  }
  reject_unknown(t, allowed, where);
  if (const Value* y = find(d.params, "y"); y && y->array.size() != 4) {
    config_error(t.line, "key 'y' in " + where + " needs 4 coordinates");
  }
  return d;
}

Scenario parse_document(const toml::Document& doc) {
  Scenario s;
  const std::string top = "top level";
  reject_unknown(doc.root, {"schema", "id", "description"}, top);
  for (const auto& [name, table] : doc.tables) {
    if (name != "flow" && name != "output") config_error(table.line, "unknown table [" + name + "]");
  }
  for (const auto& [name, tables] : doc.arrays) {
    if (name != "profile" && name != "diagnostics") config_error(tables.front().line, "unknown table [[" + name + "]]");
  }
  const double schema = expect(doc.root, "schema", Value::Type::kNumber, top).number;
  if (schema != kScenarioSchema) {
    config_error(find(doc.root.values, "schema")->line, "unsupported schema " + format_double(schema));
  }
  s.id = expect(doc.root, "id", Value::Type::kString, top).string;
  if (s.id.empty() || s.id.find_first_of("/\\ ") != std::string::npos) {
    config_error(find(doc.root.values, "id")->line, "id must be a non-empty name without spaces or slashes");
  }
  if (find(doc.root.values, "description")) s.description = expect(doc.root, "description", Value::Type::kString, top).string;

  if (auto it = doc.arrays.find("profile"); it != doc.arrays.end()) {
    for (std::size_t k = 0; k < it->second.size(); ++k) s.profiles.push_back(parse_profile(it->second[k], k));
  }
  if (s.profiles.empty()) config_error(0, "a scenario needs at least one [[profile]]");
  std::set<std::string> names;
  for (const auto& p : s.profiles) {
    if (!names.insert(p.name).second) config_error(0, "duplicate profile name '" + p.name + "'");
  }

  if (auto it = doc.tables.find("flow"); it != doc.tables.end()) {
    const toml::Table& t = it->second;
    const std::string where = "[flow]";
    reject_unknown(t, {"start_time", "max_time", "target_spacing", "cfl_factor", "truncation_radius",
                       "surgery_area_threshold", "surgery_diameter_factor", "curvature_blowup_threshold",
                       "resample_period", "sample_stride"},
                   where);
    s.has_flow = true;
    FlowConfig& f = s.flow;
    s.start_time = number_or(t, "start_time", 0.0, where);
    f.max_time = number_or(t, "max_time", s.start_time + 1.0, where);
    f.target_spacing = number_or(t, "target_spacing", 0.0, where);
    f.cfl_factor = number_or(t, "cfl_factor", f.cfl_factor, where);
    f.truncation_radius = number_or(t, "truncation_radius", f.truncation_radius, where);
    f.surgery_area_threshold = number_or(t, "surgery_area_threshold", f.surgery_area_threshold, where);
    f.surgery_diameter_factor = number_or(t, "surgery_diameter_factor", f.surgery_diameter_factor, where);
    f.curvature_blowup_threshold = number_or(t, "curvature_blowup_threshold", f.curvature_blowup_threshold, where);
    const double period = number_or(t, "resample_period", f.resample_period, where);
    if (period != std::floor(period)) config_error(find(t.values, "resample_period")->line, "resample_period must be an integer");
    f.resample_period = static_cast<int>(period);
    s.sample_stride = number_or(t, "sample_stride", s.sample_stride, where);

    FlowConfig probe = f;
    if (probe.target_spacing == 0.0) probe.target_spacing = 1.0;
    try {
      probe.validate();
    } catch (const Error& e) {
      config_error(t.line, std::string("[flow]: ") + e.what());
    }
    if (f.target_spacing < 0.0) config_error(t.line, "[flow]: target_spacing must be positive (0 selects automatic)");
    if (!(f.max_time > s.start_time)) config_error(t.line, "[flow]: max_time must exceed start_time");
    if (!(s.sample_stride > 0.0)) config_error(t.line, "[flow]: sample_stride must be positive");
  }

  if (auto it = doc.arrays.find("diagnostics"); it != doc.arrays.end()) {
    for (std::size_t k = 0; k < it->second.size(); ++k) s.diagnostics.push_back(parse_diagnostic(it->second[k], k));
  }
  for (const auto& d : s.diagnostics) {
    if (const Value* ref = find(d.params, "reference"); ref && !names.count(ref->string)) {
      config_error(0, "check '" + d.check + "' references unknown profile '" + ref->string + "'");
    }
  }

  if (auto it = doc.tables.find("output"); it != doc.tables.end()) {
    const toml::Table& t = it->second;
    reject_unknown(t, {"dir", "snapshots", "svg"}, "[output]");
    if (find(t.values, "dir")) s.output.dir = expect(t, "dir", Value::Type::kString, "[output]").string;
    if (find(t.values, "snapshots")) s.output.snapshots = expect(t, "snapshots", Value::Type::kBool, "[output]").boolean;
    if (find(t.values, "svg")) s.output.svg = expect(t, "svg", Value::Type::kBool, "[output]").boolean;
  }
  return s;
}

std::string quoted(const std::string& s) {
  Value v;
  v.type = Value::Type::kString;
  v.string = s;
  return toml::format_value(v);
}

}  // namespace

bool Scenario::operator==(const Scenario& o) const {
  return schema == o.schema && id == o.id && description == o.description && profiles == o.profiles &&
         has_flow == o.has_flow && flow == o.flow && start_time == o.start_time &&
         sample_stride == o.sample_stride && diagnostics == o.diagnostics && output == o.output;
}

Scenario parse_scenario_text(const std::string& text) { return parse_document(toml::parse_string(text)); }

Scenario parse_scenario(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open scenario " + path.string());
  try {
    return parse_document(toml::parse(in));
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.what());
  }
}

std::string canonical_toml(const Scenario& s) {
  std::ostringstream out;
  out << "schema = " << s.schema << "\n";
  out << "id = " << quoted(s.id) << "\n";
  if (!s.description.empty()) out << "description = " << quoted(s.description) << "\n";
  for (const auto& p : s.profiles) {
    out << "\n[[profile]]\nkind = " << quoted(p.kind) << "\nname = " << quoted(p.name)
        << "\nevolve = " << (p.evolve ? "true" : "false") << "\n";
    for (const auto& [k, v] : p.params) out << k << " = " << format_double(v) << "\n";
  }
  if (s.has_flow) {
    const FlowConfig& f = s.flow;
    out << "\n[flow]\n"
        << "start_time = " << format_double(s.start_time) << "\n"
        << "max_time = " << format_double(f.max_time) << "\n"
        << "target_spacing = " << format_double(f.target_spacing) << "\n"
        << "cfl_factor = " << format_double(f.cfl_factor) << "\n"
        << "truncation_radius = " << format_double(f.truncation_radius) << "\n"
        << "surgery_area_threshold = " << format_double(f.surgery_area_threshold) << "\n"
        << "surgery_diameter_factor = " << format_double(f.surgery_diameter_factor) << "\n"
        << "curvature_blowup_threshold = " << format_double(f.curvature_blowup_threshold) << "\n"
        << "resample_period = " << f.resample_period << "\n"
        << "sample_stride = " << format_double(s.sample_stride) << "\n";
  }
  for (const auto& d : s.diagnostics) {
    out << "\n[[diagnostics]]\ncheck = " << quoted(d.check) << "\n";
    for (const auto& [k, v] : d.params) out << k << " = " << toml::format_value(v) << "\n";
  }
  out << "\n[output]\n";
  if (!s.output.dir.empty()) out << "dir = " << quoted(s.output.dir) << "\n";
  out << "snapshots = " << (s.output.snapshots ? "true" : "false") << "\n";
  out << "svg = " << (s.output.svg ? "true" : "false") << "\n";
  return out.str();
}

std::vector<BuiltProfile> build_profile(const ProfileEntry& e) {
  const auto& p = e.params;
  auto get = [&](const char* key) { return p.at(key); };
  std::vector<BuiltProfile> out;
  BuiltProfile b;
  b.name = e.name;
  b.evolve = e.evolve;
  auto from_profile = [&](const EquivariantProfile& prof) {
    b.curve = prof.curve();
    b.pinned = true;
    b.asymptote_angle = prof.asymptote_angle();
    b.guide_angles.push_back(prof.asymptote_angle());
  };

  if (e.kind == "ray") {
    from_profile(ray(get("angle"), get("length"), get("spacing")));
    b.report = {{"constructor", "ray"}, {"ok", true}};
  } else if (e.kind == "bent_ray") {
    const double a = get("angle");
    const double turn = get("turn");
    const double s0 = get("turn_start");
    const double len = get("turn_length");
    const double total = get("length");
    if (!(s0 + len < total)) throw Error(ErrorCode::kConfig, "bent_ray: the turn must end before the far end");
    auto heading = [&](double s) {
      const double x = std::clamp((s - s0) / len, 0.0, 1.0);
      return a + turn * x * x * x * (x * (6.0 * x - 15.0) + 10.0);
    };
    auto pts = integrate_heading(Point(0.0, 0.0), total, get("spacing"), heading);
    pts[0] = Point(0.0, 0.0);
    from_profile(EquivariantProfile(PlanarCurve(std::move(pts), false), a + turn));
    b.report = {{"constructor", "bent_ray"}, {"ok", true}};
  } else if (e.kind == "circle") {
    const auto n = static_cast<std::size_t>(get("nodes"));
    const Point c(get("center_x"), get("center_y"));
    std::vector<Point> pts;
    for (std::size_t k = 0; k < n; ++k) {
      pts.push_back(c + std::polar(get("radius"), 2.0 * kPi * static_cast<double>(k) / static_cast<double>(n)));
    }
    b.curve = PlanarCurve(std::move(pts), true);
    b.report = {{"constructor", "circle"}, {"ok", true}};
  } else if (e.kind == "sigma") {
    SigmaSpec spec;
    spec.loop_area = get("loop_area");
    spec.cone_param = get("cone_param");
    spec.truncation_radius = get("truncation_radius");
    spec.spacing = get("spacing");
    const auto res = sigma_curve(spec);
    from_profile(res.profile);
    const double a = spec.cone_param;
    b.guide_angles = {kPi / 2 + 2 * a, kPi + a};
    b.report = res.report.to_json();
    b.report_ok = res.report.ok();
  } else if (e.kind == "whitney") {
    WhitneySpec spec;
    spec.epsilon = get("epsilon");
    spec.outer_scale = get("outer_scale");
    spec.theta2 = get("theta2");
    spec.theta3 = get("theta3");
    spec.extent = get("extent");
    spec.spacing = get("spacing");
    const auto res = whitney_curve(spec);
    from_profile(res.profile);
    b.guide_angles = {0.0, spec.theta2, spec.theta3};
    b.report = res.report.to_json();
    b.report_ok = res.report.ok();
  } else if (e.kind == "lawlor") {
    const auto res = lawlor_profile(get("offset"), get("direction"), get("extent"), get("spacing"));
    b.guide_angles = {res.asymptote_angles[0], res.asymptote_angles[1]};
    b.report = {{"constructor", "lawlor"},
                {"singular", res.singular},
                {"asymptote_angles", {res.asymptote_angles[0], res.asymptote_angles[1]}}};
    if (res.singular) {
      for (std::size_t k = 0; k < res.components.size(); ++k) {
        BuiltProfile r = b;
        r.name = e.name + (k == 0 ? "" : "_" + std::to_string(k));
        r.curve = res.components[k];
        r.pinned = true;
        r.asymptote_angle = res.asymptote_angles[k];
        r.report["ok"] = true;
        out.push_back(std::move(r));
      }
      return out;
    }
    b.curve = res.components[0];
    const double residual = stationarity_residual(b.curve);
    const double limit = 1e-3 / b.curve.bbox_diameter();
    b.report["stationarity_residual"] = residual;
    b.report["residual_limit"] = limit;
    b.report_ok = residual < limit;
    b.report["ok"] = b.report_ok;
  } else if (e.kind == "expander") {
    ExpanderSpec spec;
    spec.opening_angle = get("opening_angle");
    spec.extent = get("extent");
    spec.spacing = get("spacing");
    spec.ode_step = get("ode_step");
    const auto res = expander_profile(spec);
    b.curve = res.curve;
    b.guide_angles = {res.asymptote_angles[0], res.asymptote_angles[1]};
    b.report = res.report;
    b.report["constructor"] = "expander";
    b.report_ok = res.ode_residual < 1e-6;
    b.report["ok"] = b.report_ok;
  } else {
    throw Error(ErrorCode::kConfig, "unknown profile kind " + e.kind);
  }
  out.push_back(std::move(b));
  return out;
}

nlohmann::json ExitReport::to_json() const {
  nlohmann::json doc = {{"id", id}, {"ok", ok}, {"verdicts", verdicts}};
  if (error) doc["error"] = *error;
  return doc;
}

void write_snapshot_csv(const fs::path& path, const Snapshot& s) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out << "# t=" << format_double(s.time) << "\n";
  for (std::size_t c = 0; c < s.curves.size(); ++c) {
    out << "# component=" << c << " closed=" << (s.curves[c].closed() ? 1 : 0)
        << " pinned=" << (c < s.pinned.size() && s.pinned[c] ? 1 : 0) << "\n";
  }
  out << "component,index,x,y\n";
  for (std::size_t c = 0; c < s.curves.size(); ++c) {
    const PlanarCurve& curve = s.curves[c];
    for (std::size_t i = 0; i < curve.size(); ++i) {
      out << c << ',' << i << ',' << format_double(curve[i].real()) << ',' << format_double(curve[i].imag()) << '\n';
    }
  }
}

Snapshot read_snapshot_csv(const fs::path& path, double time) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  Snapshot s;
  s.time = time;
  std::vector<bool> closed;
  std::vector<std::vector<Point>> nodes;
  std::string line;
  bool header = false;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      if (line.rfind("# t=", 0) == 0) s.time = std::stod(line.substr(4));
      unsigned comp = 0;
      int cl = 0;
      int pin = 0;
      if (std::sscanf(line.c_str(), "# component=%u closed=%d pinned=%d", &comp, &cl, &pin) == 3) {
        if (closed.size() <= comp) {
          closed.resize(comp + 1, false);
          s.pinned.resize(comp + 1, false);
        }
        closed[comp] = cl != 0;
        s.pinned[comp] = pin != 0;
      }
      continue;
    }
    if (!header) {
      if (line == "index,x,y") {
        // Plain curve file: a single component.
        header = true;
        closed.resize(1, false);
        s.pinned.resize(1, false);
        std::ifstream again(path, std::ios::binary);
        s.curves.push_back(read_curve_csv(again));
        s.pinned[0] = s.curves[0][0] == Point(0.0, 0.0) && !s.curves[0].closed();
        return s;
      }
      if (line != "component,index,x,y") throw Error(ErrorCode::kIo, path.string() + ": unexpected header '" + line + "'");
      header = true;
      continue;
    }
    std::stringstream ss(line);
    std::string cell;
    std::vector<std::string> cols;
    while (std::getline(ss, cell, ',')) cols.push_back(cell);
    if (cols.size() != 4) {
      throw Error(ErrorCode::kIo, path.string() + ": line " + std::to_string(lineno) + " needs 4 columns");
    }
    const auto comp = static_cast<std::size_t>(std::stoul(cols[0]));
    if (nodes.size() <= comp) nodes.resize(comp + 1);
    nodes[comp].emplace_back(std::stod(cols[2]), std::stod(cols[3]));
  }
  closed.resize(nodes.size(), false);
  s.pinned.resize(nodes.size(), false);
  for (std::size_t c = 0; c < nodes.size(); ++c) s.curves.emplace_back(std::move(nodes[c]), closed[c]);
  if (s.curves.empty()) throw Error(ErrorCode::kIo, path.string() + ": no curve data");
  return s;
}

Trajectory load_trajectory(const fs::path& run_dir) {
  Trajectory traj;
  const fs::path index = run_dir / "snapshots" / "index.csv";
  std::ifstream in(index, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + index.string());
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line.rfind("# stride=", 0) == 0) {
      traj.stride = std::stod(line.substr(9));
      continue;
    }
    if (line[0] == '#' || line == "snapshot,t") continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw Error(ErrorCode::kIo, "malformed index row: " + line);
    traj.samples.push_back(read_snapshot_csv(run_dir / "snapshots" / line.substr(0, comma), std::stod(line.substr(comma + 1))));
  }
  std::ifstream ev(run_dir / "events.jsonl", std::ios::binary);
  while (ev && std::getline(ev, line)) {
    if (line.empty()) continue;
    try {
      traj.events.push_back(event_from_json(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::kIo, std::string("malformed events.jsonl: ") + e.what());
    }
  }
  return traj;
}

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3f", v);
  std::string s(buf);
  if (s == "-0.000") s = "0.000";
  return s;
}

}  // namespace

std::string emit_svg(const Snapshot& snapshot, const SvgStyle& style) {
  if (snapshot.curves.empty()) throw Error(ErrorCode::kInvalidCurve, "nothing to render");
  double xmin = 0.0;
  double xmax = 0.0;
  double ymin = 0.0;
  double ymax = 0.0;
  for (const auto& c : snapshot.curves) {
    if (c.empty()) throw Error(ErrorCode::kInvalidCurve, "cannot render an empty curve");
    for (const Point& p : c.nodes()) {
      xmin = std::min(xmin, p.real());
      xmax = std::max(xmax, p.real());
      ymin = std::min(ymin, p.imag());
      ymax = std::max(ymax, p.imag());
    }
  }
  const double span = std::max({xmax - xmin, ymax - ymin, 1e-9});
  const double pad = style.margin * span;
  xmin -= pad;
  ymin -= pad;
  const double extent = span + 2.0 * pad;
  const double scale = std::min(style.width, style.height) / extent;
  auto px = [&](Point p) { return fmt((p.real() - xmin) * scale) + "," + fmt((ymin + extent - p.imag()) * scale); };

  std::ostringstream out;
  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << style.width << "\" height=\"" << style.height
      << "\" viewBox=\"0 0 " << style.width << " " << style.height << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"8\" y=\"18\" font-family=\"monospace\" font-size=\"12\">t = " << format_double(snapshot.time)
      << "</text>\n";
  for (double a : style.guide_angles) {
    const Point far = std::polar(2.0 * extent, a);
    out << "<path class=\"guide\" d=\"M" << px(Point(0.0, 0.0)) << " L" << px(far)
        << "\" stroke=\"#999\" stroke-dasharray=\"4 4\" fill=\"none\"/>\n";
  }
  if (style.highlight_loops) {
    for (const auto& c : snapshot.curves) {
      for (const auto& loop : extract_loops(c)) {
        if (loop.whole_curve) continue;
        out << "<polygon class=\"loop\" points=\"";
        for (std::size_t i = 0; i < loop.loop_nodes.size(); ++i) out << (i ? " " : "") << px(loop.loop_nodes[i]);
        out << "\" fill=\"#f4a582\" fill-opacity=\"0.5\" stroke=\"none\"/>\n";
      }
    }
  }
  for (const auto& c : snapshot.curves) {
    out << "<path class=\"curve\" d=\"M" << px(c[0]);
    for (std::size_t i = 1; i < c.size(); ++i) out << " L" << px(c[i]);
    if (c.closed()) out << " Z";
    out << "\" stroke=\"#08519c\" stroke-width=\"1.5\" fill=\"none\"/>\n";
  }
  if (style.origin_marker) {
    const std::string o = px(Point(0.0, 0.0));
    const auto comma = o.find(',');
    out << "<circle class=\"origin\" cx=\"" << o.substr(0, comma) << "\" cy=\"" << o.substr(comma + 1)
        << "\" r=\"3\" fill=\"black\"/>\n";
  }
  out << "</svg>\n";
  return out.str();
}

namespace {

double param_number(const DiagnosticEntry& d, const std::string& key) {
  const auto it = d.params.find(key);
  if (it == d.params.end()) throw Error(ErrorCode::kConfig, "check '" + d.check + "' is missing '" + key + "'");
  return it->second.number;
}

std::size_t param_index(const DiagnosticEntry& d, const std::string& key) {
  const double v = param_number(d, key);
  if (v < 0.0 || v != std::floor(v)) throw Error(ErrorCode::kConfig, "'" + key + "' must be a non-negative integer");
  return static_cast<std::size_t>(v);
}

// Largest distance from the nodes of `from` inside the ball to the polyline `to`.
double restricted_distance(const PlanarCurve& from, const PlanarCurve& to, double radius) {
  double worst = 0.0;
  for (const Point& p : from.nodes()) {
    if (std::abs(p) > radius) continue;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < to.segment_count(); ++k) {
      best = std::min(best, point_segment_distance(p, to.segment_start(k), to.segment_end(k)));
    }
    worst = std::max(worst, best);
  }
  return worst;
}

Report self_similarity(const Trajectory& traj, std::size_t component, double radius, double tolerance) {
  Report r;
  r.check = "self_similarity";
  r.params = {{"component", component}, {"radius", radius}, {"tolerance", tolerance}};
  if (traj.samples.size() < 2 || component >= traj.samples.front().curves.size() || !(traj.samples.front().time > 0.0)) {
    r.verdict = Verdict::kNotApplicable;
    return r;
  }
  const Snapshot& first = traj.samples.front();
  const PlanarCurve& base = first.curves[component];
  double diameter = 0.0;
  std::vector<Point> inside;
  for (const Point& p : base.nodes()) {
    if (std::abs(p) <= radius) inside.push_back(p);
  }
  for (const Point& a : inside) {
    for (const Point& b : inside) diameter = std::max(diameter, std::abs(a - b));
  }
  TimeSeries series;
  series.name = "self_similarity_distance";
  double worst = 0.0;
  for (const Snapshot& s : traj.samples) {
    if (component >= s.curves.size()) continue;
    const PlanarCurve scaled = base.scaled(std::sqrt(s.time / first.time));
    const double d = std::max(restricted_distance(s.curves[component], scaled, radius),
                              restricted_distance(scaled, s.curves[component], radius));
    series.push(s.time, d);
    worst = std::max(worst, d);
  }
  r.details = {{"max_distance", worst}, {"diameter", diameter}, {"limit", tolerance * diameter}};
  r.verdict = worst < tolerance * diameter ? Verdict::kPass : Verdict::kFail;
  r.series = std::move(series);
  return r;
}

}  // namespace

Report run_diagnostic(const DiagnosticEntry& d, const Trajectory& traj,
                      const std::map<std::string, PlanarCurve>& references, double target_spacing) {
  if (traj.samples.empty()) throw Error(ErrorCode::kConfig, "trajectory has no samples");
  if (d.check == "density_monotonicity") {
    const auto& y = d.params.at("y").array;
    return density_monotonicity_check(traj, R4{y[0], y[1], y[2], y[3]}, param_number(d, "T"),
                                      param_number(d, "slack"));
  }
  if (d.check == "angle_jump") {
    AngleJumpOptions o;
    o.r_a = param_number(d, "r_a");
    o.r_b = param_number(d, "r_b");
    o.component = param_index(d, "component");
    o.jump_tolerance = param_number(d, "tolerance");
    return angle_jump_tracker(traj, o);
  }
  if (d.check == "loop_area_law") {
    LoopAreaOptions o;
    o.component = param_index(d, "component");
    o.tolerance = param_number(d, "tolerance");
    o.guard_diameter = param_number(d, "guard_diameter");
    if (o.guard_diameter == 0.0) o.guard_diameter = 10.0 * target_spacing;
    o.min_samples = param_index(d, "min_samples");
    return loop_area_law_check(traj, o);
  }
  if (d.check == "intersection_count") {
    const std::size_t comp = param_index(d, "component");
    Report r;
    if (auto it = d.params.find("reference"); it != d.params.end()) {
      const auto ref = references.find(it->second.string);
      if (ref == references.end()) throw Error(ErrorCode::kConfig, "unknown reference curve '" + it->second.string + "'");
      r = intersection_count_series(traj, ref->second, comp);
      r.params["reference"] = it->second.string;
    } else if (d.params.count("second")) {
      r = intersection_count_series(traj, comp, param_index(d, "second"));
    } else {
      throw Error(ErrorCode::kConfig, "intersection_count needs 'reference' or 'second'");
    }
    if (auto it = d.params.find("expect_initial"); it != d.params.end() && r.verdict == Verdict::kPass) {
      r.params["expect_initial"] = it->second.number;
      if (r.details["initial"].get<double>() != it->second.number) r.verdict = Verdict::kFail;
    }
    if (auto it = d.params.find("expect_max_off_origin"); it != d.params.end() && r.verdict == Verdict::kPass) {
      r.params["expect_max_off_origin"] = it->second.number;
      if (r.details["max_off_origin"].get<double>() > it->second.number) r.verdict = Verdict::kFail;
    }
    return r;
  }
  if (d.check == "singular_time_bound") return singular_time_bound_check(traj, param_index(d, "component"));
  if (d.check == "self_similarity") {
    return self_similarity(traj, param_index(d, "component"), param_number(d, "radius"), param_number(d, "tolerance"));
  }
  if (d.check == "collapse_time") {
    Report r;
    r.check = "collapse_time";
    const double expected = param_number(d, "expected");
    const double tol = param_number(d, "tolerance");
    r.params = {{"expected", expected}, {"tolerance", tol}};
    std::optional<double> t;
    for (const Event& e : traj.events) {
      if (e.kind == EventKind::kLoopCollapse) {
        t = e.t;
        break;
      }
    }
    if (!t) {
      r.verdict = Verdict::kFail;
      r.details = {{"reason", "no collapse event"}};
      return r;
    }
    const double rel = std::abs(*t - expected) / std::abs(expected);
    r.details = {{"measured", *t}, {"relative_error", rel}};
    r.verdict = rel <= tol ? Verdict::kPass : Verdict::kFail;
    return r;
  }
  if (d.check == "event_count") {
    Report r;
    r.check = "event_count";
    const std::string kind = d.params.at("kind").string;
    const auto k = event_kind_from_string(kind);
    if (!k) throw Error(ErrorCode::kConfig, "unknown event kind '" + kind + "'");
    const double expected = param_number(d, "expected");
    const auto n = std::count_if(traj.events.begin(), traj.events.end(), [&](const Event& e) { return e.kind == *k; });
    r.params = {{"kind", kind}, {"expected", expected}};
    r.details = {{"count", n}};
    r.verdict = static_cast<double>(n) == expected ? Verdict::kPass : Verdict::kFail;
    return r;
  }
  throw Error(ErrorCode::kConfig, "check '" + d.check + "' cannot run on a trajectory alone");
}

ExitReport run_scenario(const Scenario& scenario, const fs::path& root) {
  ExitReport report;
  report.id = scenario.id;
  report.directory = root / scenario.id;
  const fs::path dir = report.directory;
  auto write_text = [&](const fs::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    if (!out) throw Error(ErrorCode::kIo, "cannot write " + p.string());
    out << text;
  };

  try {
    fs::remove_all(dir);
    for (const char* sub : {"snapshots", "series", "reports", "render", "profiles"}) fs::create_directories(dir / sub);
    write_text(dir / "scenario.toml", canonical_toml(scenario));

    std::vector<BuiltProfile> evolving;
    std::map<std::string, PlanarCurve> references;
    bool constructors_ok = true;
    nlohmann::json constructor_reports = nlohmann::json::array();
    for (const auto& entry : scenario.profiles) {
      for (auto& b : build_profile(entry)) {
        write_curve_csv(dir / "profiles" / (b.name + ".csv"), b.curve);
        constructor_reports.push_back({{"name", b.name}, {"report", b.report}});
        constructors_ok = constructors_ok && b.report_ok;
        references.emplace(b.name, b.curve);
        if (b.evolve) evolving.push_back(std::move(b));
      }
    }
    write_text(dir / "reports" / "constructors.json", constructor_reports.dump(2) + "\n");

    std::vector<double> guides;
    for (const auto& b : evolving) guides.insert(guides.end(), b.guide_angles.begin(), b.guide_angles.end());

    FlowState state;
    state.time = scenario.start_time;
    for (const auto& b : evolving) {
      FlowComponent comp = b.pinned ? make_component(EquivariantProfile(b.curve, b.asymptote_angle.value_or(0.0)))
                                    : make_component(b.curve);
      state.components.push_back(std::move(comp));
    }

    FlowConfig config = scenario.flow;
    if (config.target_spacing == 0.0 && !state.components.empty()) {
      const PlanarCurve& c = state.components.front().curve;
      config.target_spacing = c.length() / static_cast<double>(c.segment_count());
    }

    std::ofstream index;
    std::size_t snapshot_no = 0;
    if (scenario.output.snapshots) {
      index.open(dir / "snapshots" / "index.csv", std::ios::binary);
      index << "# stride=" << format_double(scenario.sample_stride) << "\nsnapshot,t\n";
    }
    auto record = [&](const FlowState& s) {
      if (!scenario.output.snapshots) return;
      char name[64];
      std::snprintf(name, sizeof(name), "snapshot_%06zu.csv", snapshot_no++);
      write_snapshot_csv(dir / "snapshots" / name, snapshot_of(s));
      index << name << ',' << format_double(s.time) << '\n';
      index.flush();
    };

    RunResult result;
    std::optional<std::string> flow_error;
    if (scenario.has_flow && !state.components.empty()) {
      RunHooks hooks;
      hooks.stride = scenario.sample_stride;
      hooks.record_trajectory = true;
      hooks.on_sample = record;
      hooks.probes.push_back({"h_length", [](const FlowState& s) {
                                double total = 0.0;
                                for (const auto& c : s.components) total += h_length(c.curve);
                                return total;
                              }});
      hooks.probes.push_back({"crossings", [](const FlowState& s) {
                                return s.components.empty() ? 0.0
                                                            : static_cast<double>(self_intersections(s.components[0].curve).size());
                              }});
      hooks.probes.push_back({"rotation_index", [](const FlowState& s) {
                                return s.components.empty() ? 0.0 : rotation_index(s.components[0].curve);
                              }});
      hooks.probes.push_back({"max_curvature", [](const FlowState& s) { return s.stats.max_curvature; }});
      try {
        result = run(state, config, hooks);
      } catch (const FlowError& e) {
        flow_error = std::string(to_string(e.code())) + ": " + e.what();
        result.state = e.snapshot();
        result.trajectory.events = e.snapshot().events;
      }
    } else {
      result.state = state;
      result.trajectory.samples.push_back(snapshot_of(state));
      record(state);
    }
    result.trajectory.stride = scenario.sample_stride;
    if (index.is_open()) index.close();

    write_text(dir / "events.jsonl", event_log_jsonl(result.state.events));
    for (const auto& [name, series] : result.series) write_series_csv(dir / "series" / (name + ".csv"), series);

    if (flow_error) throw Error(ErrorCode::kNumericalBlowup, *flow_error);

    bool all_ok = true;
    for (std::size_t k = 0; k < scenario.diagnostics.size(); ++k) {
      const auto& d = scenario.diagnostics[k];
      Report r;
      if (d.check == "validation") {
        r.check = "validation";
        r.details = {{"constructors", constructor_reports}};
        r.verdict = constructors_ok ? Verdict::kPass : Verdict::kFail;
      } else {
        r = run_diagnostic(d, result.trajectory, references, config.target_spacing);
      }
      char stem[64];
      std::snprintf(stem, sizeof(stem), "%02zu_%s", k, d.check.c_str());
      write_text(dir / "reports" / (std::string(stem) + ".json"), r.to_json().dump(2) + "\n");
      if (r.series) write_series_csv(dir / "series" / (std::string(stem) + ".csv"), *r.series);
      report.verdicts.push_back({{"check", d.check}, {"verdict", to_string(r.verdict)}});
      all_ok = all_ok && r.acceptable();
    }

    if (scenario.output.svg && !result.trajectory.samples.empty()) {
      SvgStyle style;
      style.guide_angles = guides;
      const auto& samples = result.trajectory.samples;
      std::set<std::size_t> picks{0, samples.size() - 1};
      for (const Event& e : result.state.events) {
        for (std::size_t k = 0; k + 1 < samples.size(); ++k) {
          if (samples[k].time <= e.t && samples[k + 1].time > e.t) {
            picks.insert(k);
            picks.insert(k + 1);
          }
        }
      }
      for (std::size_t k : picks) {
        char name[64];
        std::snprintf(name, sizeof(name), "snapshot_%06zu.svg", k);
        write_text(dir / "render" / name, emit_svg(samples[k], style));
      }
    }
    report.ok = all_ok;
  } catch (const Error& e) {
    report.ok = false;
    report.error = std::string(to_string(e.code())) + ": " + e.what();
    std::error_code ec;
    fs::create_directories(dir, ec);
    std::ofstream out(dir / "error.json", std::ios::binary);
    out << nlohmann::json{{"id", scenario.id}, {"code", to_string(e.code())}, {"message", e.what()}}.dump(2) << "\n";
  }
  std::ofstream out(dir / "report.json", std::ios::binary);
  out << report.to_json().dump(2) << "\n";
  return report;
}

}  // namespace lmcf
