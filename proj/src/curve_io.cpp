#include "lmcf/curve_io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <vector>

namespace lmcf {

std::string format_double(double value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

namespace {

double parse_double(const std::string& text, std::size_t line) {
  double v = 0.0;
  const char* begin = text.data();
  const char* end = begin + text.size();
  while (begin < end && (*begin == ' ' || *begin == '\t')) ++begin;
  while (end > begin && (end[-1] == ' ' || end[-1] == '\t' || end[-1] == '\r')) --end;
  const auto res = std::from_chars(begin, end, v);
  if (res.ec != std::errc() || res.ptr != end) {
    std::ostringstream msg;
    msg << "line " << line << ": cannot parse number '" << text << "'";
    throw Error(ErrorCode::kIo, msg.str());
  }
  return v;
}

}  // namespace

void write_curve_csv(std::ostream& out, const PlanarCurve& curve) {
  if (curve.closed()) out << "# closed=1\n";
  out << "index,x,y\n";
  for (std::size_t i = 0; i < curve.size(); ++i) {
    out << i << ',' << format_double(curve[i].real()) << ',' << format_double(curve[i].imag()) << '\n';
  }
}

void write_curve_csv(const std::filesystem::path& path, const PlanarCurve& curve) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot open " + path.string() + " for writing");
  write_curve_csv(out, curve);
}

PlanarCurve read_curve_csv(std::istream& in) {
  std::string line;
  bool closed = false;
  bool header = false;
  std::vector<Point> nodes;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      if (line.find("closed=1") != std::string::npos) closed = true;
      continue;
    }
    if (!header) {
      if (line != "index,x,y") throw Error(ErrorCode::kIo, "expected header 'index,x,y', got '" + line + "'");
      header = true;
      continue;
    }
    std::vector<std::string> cols;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cols.push_back(cell);
    if (cols.size() != 3) {
      std::ostringstream msg;
      msg << "line " << lineno << ": expected 3 columns";
      throw Error(ErrorCode::kIo, msg.str());
    }
    nodes.emplace_back(parse_double(cols[1], lineno), parse_double(cols[2], lineno));
  }
  return PlanarCurve(std::move(nodes), closed);
}

PlanarCurve read_curve_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  return read_curve_csv(in);
}

nlohmann::json curve_to_json(const PlanarCurve& curve, std::optional<double> asymptote_angle) {
  nlohmann::json doc;
  doc["closed"] = curve.closed();
  nlohmann::json nodes = nlohmann::json::array();
  for (const Point& p : curve.nodes()) nodes.push_back({p.real(), p.imag()});
  doc["nodes"] = std::move(nodes);
  if (asymptote_angle) doc["asymptote_angle"] = *asymptote_angle;
  return doc;
}

PlanarCurve curve_from_json(const nlohmann::json& doc) {
  try {
    std::vector<Point> nodes;
    for (const auto& n : doc.at("nodes")) nodes.emplace_back(n.at(0).get<double>(), n.at(1).get<double>());
    return PlanarCurve(std::move(nodes), doc.value("closed", false));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kIo, std::string("malformed curve document: ") + e.what());
  }
}

nlohmann::json profile_to_json(const EquivariantProfile& profile) {
  auto doc = curve_to_json(profile.curve(), profile.asymptote_angle());
  if (profile.cone_param()) doc["cone_param"] = *profile.cone_param();
  return doc;
}

EquivariantProfile profile_from_json(const nlohmann::json& doc) {
  std::optional<double> cone;
  if (doc.contains("cone_param")) cone = doc["cone_param"].get<double>();
  return EquivariantProfile(curve_from_json(doc), doc.value("asymptote_angle", 0.0), cone);
}

}  // namespace lmcf
