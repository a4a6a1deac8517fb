#include "lmcf/timeseries.hpp"

#include <fstream>
#include <sstream>

#include "lmcf/curve_io.hpp"
#include "lmcf/error.hpp"

namespace lmcf {

void TimeSeries::push(double t, double value) {
  if (!samples.empty() && !(t > samples.back().first)) {
    std::ostringstream msg;
    msg << "time series '" << name << "' requires increasing times (" << t << " after "
        << samples.back().first << ")";
    throw Error(ErrorCode::kInvalidCurve, msg.str());
  }
  samples.emplace_back(t, value);
}

void write_series_csv(std::ostream& out, const TimeSeries& series) {
  out << "t,value\n";
  for (const auto& [t, v] : series.samples) out << format_double(t) << ',' << format_double(v) << '\n';
}

void write_series_csv(const std::filesystem::path& path, const TimeSeries& series) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot open " + path.string() + " for writing");
  write_series_csv(out, series);
}

TimeSeries read_series_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  TimeSeries series;
  series.name = path.stem().string();
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw Error(ErrorCode::kIo, "malformed series row: " + line);
    series.push(std::stod(line.substr(0, comma)), std::stod(line.substr(comma + 1)));
  }
  return series;
}

nlohmann::json series_to_json(const TimeSeries& series) {
  nlohmann::json t = nlohmann::json::array();
  nlohmann::json v = nlohmann::json::array();
  for (const auto& [ti, vi] : series.samples) {
    t.push_back(ti);
    v.push_back(vi);
  }
  return {{"name", series.name}, {"t", t}, {"value", v}, {"metadata", series.metadata}};
}

}  // namespace lmcf
