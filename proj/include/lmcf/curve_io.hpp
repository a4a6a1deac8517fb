#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

#include <json.hpp>

#include "lmcf/curve.hpp"

namespace lmcf {

/// Shortest decimal text that parses back to the same double.
std::string format_double(double value);

// CSV with header `index,x,y`. A `closed` flag is carried in a leading
// comment line `# closed=1` when set.
void write_curve_csv(std::ostream& out, const PlanarCurve& curve);
void write_curve_csv(const std::filesystem::path& path, const PlanarCurve& curve);
PlanarCurve read_curve_csv(std::istream& in);
PlanarCurve read_curve_csv(const std::filesystem::path& path);

// {"closed": bool, "nodes": [[x,y],...], "asymptote_angle": number?}
nlohmann::json curve_to_json(const PlanarCurve& curve,
                             std::optional<double> asymptote_angle = std::nullopt);
PlanarCurve curve_from_json(const nlohmann::json& doc);

nlohmann::json profile_to_json(const EquivariantProfile& profile);
EquivariantProfile profile_from_json(const nlohmann::json& doc);

}  // namespace lmcf
