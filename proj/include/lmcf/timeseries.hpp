#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

namespace lmcf {

/// Scalar diagnostic sampled at strictly increasing times.
struct TimeSeries {
  std::string name;
  std::vector<std::pair<double, double>> samples;
  nlohmann::json metadata = nlohmann::json::object();

  void push(double t, double value);
  bool empty() const { return samples.empty(); }
  std::size_t size() const { return samples.size(); }
};

void write_series_csv(std::ostream& out, const TimeSeries& series);
void write_series_csv(const std::filesystem::path& path, const TimeSeries& series);
TimeSeries read_series_csv(const std::filesystem::path& path);
nlohmann::json series_to_json(const TimeSeries& series);

}  // namespace lmcf
