#include "ptrap/layout_io.hpp"

#include <fstream>
#include <set>

#include "ptrap/errors.hpp"

namespace ptrap {
namespace {

using nlohmann::json;

void reject_unknown(const json& obj, std::initializer_list<const char*> allowed, const std::string& where) {
  std::set<std::string> ok(allowed.begin(), allowed.end());
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (!ok.count(it.key())) {
      throw TrapError(ErrorCode::ParseError, "unknown key '" + it.key() + "' in " + where);
    }
  }
}

}  // namespace

TrapLayout layout_from_json(const json& j) {
  if (!j.is_object()) throw TrapError(ErrorCode::ParseError, "layout must be a JSON object");
  reject_unknown(j, {"unit", "ground_plane", "min_gap_um", "electrodes"}, "layout");
  if (!j.contains("unit") || j.at("unit") != "um") {
    throw TrapError(ErrorCode::ParseError, "layout unit must be \"um\"");
  }
  TrapLayout layout;
  layout.ground_plane = j.value("ground_plane", true);
  layout.min_gap = j.value("min_gap_um", 0.0);
  if (!j.contains("electrodes") || !j.at("electrodes").is_array()) {
    throw TrapError(ErrorCode::ParseError, "layout needs an \"electrodes\" array");
  }
  for (const auto& je : j.at("electrodes")) {
    reject_unknown(je, {"name", "role", "polygons"}, "electrode");
    Electrode e;
    e.name = je.at("name").get<std::string>();
    const auto role_name = je.at("role").get<std::string>();
    const auto role = role_from_string(role_name);
    if (!role) {
      throw TrapError(ErrorCode::ParseError, "electrode '" + e.name + "' has unknown role '" + role_name + "'");
    }
    e.role = *role;
    for (const auto& jp : je.at("polygons")) {
      Polygon poly;
      for (const auto& v : jp) {
        if (!v.is_array() || v.size() != 2) {
          throw TrapError(ErrorCode::ParseError, "vertex must be [x, y] in electrode '" + e.name + "'");
        }
        poly.vertices.push_back({v[0].get<double>(), v[1].get<double>()});
      }
      e.shape.push_back(std::move(poly));
    }
    layout.electrodes.push_back(std::move(e));
  }
  return layout;
}

json layout_to_json(const TrapLayout& layout) {
  json electrodes = json::array();
  for (const auto& e : layout.electrodes) {
    json polys = json::array();
    for (const auto& p : e.shape) {
      json verts = json::array();
      for (const auto& v : p.vertices) verts.push_back({v.x, v.y});
      polys.push_back(std::move(verts));
    }
    electrodes.push_back({{"name", e.name}, {"role", to_string(e.role)}, {"polygons", std::move(polys)}});
  }
  return {{"unit", "um"},
          {"ground_plane", layout.ground_plane},
          {"min_gap_um", layout.min_gap},
          {"electrodes", std::move(electrodes)}};
}

TrapLayout load_layout(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw TrapError(ErrorCode::ConfigNotFound, "cannot open layout file " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& ex) {
    throw TrapError(ErrorCode::ParseError, path.string() + ": " + ex.what());
  }
  try {
    return layout_from_json(j);
  } catch (const json::exception& ex) {
    throw TrapError(ErrorCode::ParseError, path.string() + ": " + ex.what());
  }
}

}  // namespace ptrap
