#include "ptrap/report_io.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <system_error>
#include <tuple>

#include <unistd.h>

#include "ptrap/constants.hpp"
#include "ptrap/errors.hpp"

namespace ptrap {

using nlohmann::json;

std::string format9(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

double round9(double v) {
  if (!std::isfinite(v)) return v;
  return std::strtod(format9(v).c_str(), nullptr);
}

namespace {

json vec_json(const Vec3& v) { return json::array({round9(v.x()), round9(v.y()), round9(v.z())}); }

template <std::size_t N>
json array_json(const std::array<double, N>& a) {
  json out = json::array();
  for (double v : a) out.push_back(round9(v));
  return out;
}

const json& field(const json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) throw TrapError(ErrorCode::ParseError, std::string("missing field '") + key + "'");
  return j.at(key);
}

double number(const json& j, const char* key) {
  const json& v = field(j, key);
  if (!v.is_number()) throw TrapError(ErrorCode::ParseError, std::string("field '") + key + "' must be a number");
  return v.get<double>();
}

bool boolean(const json& j, const char* key) {
  const json& v = field(j, key);
  if (!v.is_boolean()) throw TrapError(ErrorCode::ParseError, std::string("field '") + key + "' must be true or false");
  return v.get<bool>();
}

std::vector<double> numbers(const json& v, const char* key, std::size_t expected = 0) {
  if (!v.is_array()) throw TrapError(ErrorCode::ParseError, std::string("field '") + key + "' must be an array");
  std::vector<double> out;
  for (const auto& e : v) {
    if (!e.is_number()) throw TrapError(ErrorCode::ParseError, std::string("field '") + key + "' must hold numbers");
    out.push_back(e.get<double>());
  }
  if (expected && out.size() != expected) {
    throw TrapError(ErrorCode::ParseError, std::string("field '") + key + "' has the wrong length");
  }
  return out;
}

Vec3 vec(const json& j, const char* key) {
  const auto v = numbers(field(j, key), key, 3);
  return {v[0], v[1], v[2]};
}

template <std::size_t N>
std::array<double, N> fixed(const json& j, const char* key) {
  const auto v = numbers(field(j, key), key, N);
  std::array<double, N> out{};
  std::copy(v.begin(), v.end(), out.begin());
  return out;
}

}  // namespace

json report_to_json(const TrapReport& r) {
  json j;
  j["rf_null"] = vec_json(r.rf_null);
  j["rf_null_field"] = round9(r.rf_null_field);
  j["minimum"] = vec_json(r.minimum);
  j["ion_height"] = round9(r.ion_height);
  j["secular_freqs"] = array_json(r.secular_freqs);
  json axes = json::array();
  for (const auto& a : r.principal_axes) axes.push_back(vec_json(a));
  j["principal_axes"] = axes;
  j["axis_tilt_deg"] = array_json(r.axis_tilt_deg);
  j["axial_index"] = r.axial_index;
  j["depth"] = round9(r.depth);
  j["depth_lower_bound"] = r.depth_lower_bound;
  j["escape_point"] = vec_json(r.escape_point);
  j["energy_at_minimum"] = round9(r.energy_at_minimum);
  j["mathieu_q"] = array_json(r.mathieu_q);
  j["mathieu_a"] = array_json(r.mathieu_a);
  j["stable"] = r.stable;
  return j;
}

TrapReport report_from_json(const json& j) {
  TrapReport r;
  r.rf_null = vec(j, "rf_null");
  r.rf_null_field = number(j, "rf_null_field");
  r.minimum = vec(j, "minimum");
  r.ion_height = number(j, "ion_height");
  r.secular_freqs = fixed<3>(j, "secular_freqs");
  const json& axes = field(j, "principal_axes");
  if (!axes.is_array() || axes.size() != 3) throw TrapError(ErrorCode::ParseError, "principal_axes must hold 3 vectors");
  for (std::size_t i = 0; i < 3; ++i) {
    const auto v = numbers(axes[i], "principal_axes", 3);
    r.principal_axes[i] = Vec3(v[0], v[1], v[2]);
  }
  r.axis_tilt_deg = fixed<3>(j, "axis_tilt_deg");
  const json& ai = field(j, "axial_index");
  if (!ai.is_number_integer()) throw TrapError(ErrorCode::ParseError, "axial_index must be an integer");
  r.axial_index = ai.get<int>();
  r.depth = number(j, "depth");
  r.depth_lower_bound = boolean(j, "depth_lower_bound");
  r.escape_point = vec(j, "escape_point");
  r.energy_at_minimum = number(j, "energy_at_minimum");
  r.mathieu_q = fixed<3>(j, "mathieu_q");
  r.mathieu_a = fixed<3>(j, "mathieu_a");
  r.stable = boolean(j, "stable");
  return r;
}

json compensation_to_json(const CompensationResult& c, const std::vector<std::string>& row_labels) {
  json j;
  json volts = json::object();
  for (const auto& [name, v] : c.voltages.control) volts[name] = round9(v);
  j["voltages"] = volts;
  json res = json::array();
  for (Eigen::Index i = 0; i < c.residual.size(); ++i) res.push_back(round9(c.residual[i]));
  j["residual"] = res;
  if (!row_labels.empty()) j["rows"] = row_labels;
  j["rank"] = c.rank;
  j["null_space_dim"] = c.null_space_dim;
  json sv = json::array();
  for (Eigen::Index i = 0; i < c.singular_values.size(); ++i) sv.push_back(round9(c.singular_values[i]));
  j["singular_values"] = sv;
  j["warnings"] = c.warnings;
  return j;
}

CompensationResult compensation_from_json(const json& j) {
  CompensationResult c;
  const json& volts = field(j, "voltages");
  if (!volts.is_object()) throw TrapError(ErrorCode::ParseError, "voltages must be an object");
  for (const auto& [name, v] : volts.items()) {
    if (!v.is_number()) throw TrapError(ErrorCode::ParseError, "voltage for '" + name + "' must be a number");
    c.voltages.control[name] = v.get<double>();
  }
  const auto res = numbers(field(j, "residual"), "residual");
  c.residual = Eigen::Map<const Eigen::VectorXd>(res.data(), static_cast<Eigen::Index>(res.size()));
  const json& rank = field(j, "rank");
  const json& nsd = field(j, "null_space_dim");
  if (!rank.is_number_integer() || !nsd.is_number_integer()) {
    throw TrapError(ErrorCode::ParseError, "rank and null_space_dim must be integers");
  }
  c.rank = rank.get<int>();
  c.null_space_dim = nsd.get<int>();
  const auto sv = numbers(field(j, "singular_values"), "singular_values");
  c.singular_values = Eigen::Map<const Eigen::VectorXd>(sv.data(), static_cast<Eigen::Index>(sv.size()));
  const json& w = field(j, "warnings");
  if (!w.is_array()) throw TrapError(ErrorCode::ParseError, "warnings must be an array");
  for (const auto& s : w) {
    if (!s.is_string()) throw TrapError(ErrorCode::ParseError, "warnings must hold strings");
    c.warnings.push_back(s.get<std::string>());
  }
  return c;
}

json stability_to_json(const StabilityReport& s) {
  json j;
  j["mathieu_q"] = array_json(s.q);
  j["mathieu_a"] = array_json(s.a);
  j["band_stable"] = json::array({s.band_stable[0], s.band_stable[1], s.band_stable[2]});
  j["floquet_stable"] = json::array({s.floquet_stable[0], s.floquet_stable[1], s.floquet_stable[2]});
  j["stable"] = s.stable;
  return j;
}

StabilityReport stability_from_json(const json& j) {
  StabilityReport s;
  s.q = fixed<3>(j, "mathieu_q");
  s.a = fixed<3>(j, "mathieu_a");
  for (const char* key : {"band_stable", "floquet_stable"}) {
    const json& v = field(j, key);
    if (!v.is_array() || v.size() != 3) throw TrapError(ErrorCode::ParseError, std::string(key) + " must hold 3 flags");
    for (std::size_t i = 0; i < 3; ++i) {
      if (!v[i].is_boolean()) throw TrapError(ErrorCode::ParseError, std::string(key) + " must hold booleans");
      (std::string(key) == "band_stable" ? s.band_stable : s.floquet_stable)[i] = v[i].get<bool>();
    }
  }
  s.stable = boolean(j, "stable");
  return s;
}

std::vector<FieldMapRow> field_map(const FieldSource& source, const std::vector<Vec3>& points) {
  const auto& names = source.electrode_names();
  std::vector<MapChannel> channels;
  for (std::size_t k = 0; k < names.size(); ++k) {
    channels.push_back({names[k], Eigen::VectorXd::Unit(static_cast<Eigen::Index>(names.size()),
                                                        static_cast<Eigen::Index>(k))});
  }
  return field_map(source, points, channels);
}

std::vector<FieldMapRow> field_map(const FieldSource& source, const std::vector<Vec3>& points,
                                   const std::vector<MapChannel>& channels) {
  std::vector<Vec3> sorted = points;
  std::sort(sorted.begin(), sorted.end(), [](const Vec3& a, const Vec3& b) {
    return std::tie(a.x(), a.y(), a.z()) < std::tie(b.x(), b.y(), b.z());
  });
  const std::size_t n = source.electrode_names().size();
  std::vector<std::size_t> by_name(channels.size());
  for (std::size_t c = 0; c < channels.size(); ++c) {
    if (static_cast<std::size_t>(channels[c].weights.size()) != n) {
      throw TrapError(ErrorCode::InvalidParams, "channel '" + channels[c].name + "' has the wrong weight count");
    }
    by_name[c] = c;
  }
  std::stable_sort(by_name.begin(), by_name.end(),
                   [&](std::size_t a, std::size_t b) { return channels[a].name < channels[b].name; });

  std::vector<FieldMapRow> rows;
  rows.reserve(sorted.size() * channels.size());
  for (const auto& p : sorted) {
    const auto jets = source.jets(p, 1);
    for (std::size_t c : by_name) {
      FieldMapRow row;
      row.point = p;
      row.electrode = channels[c].name;
      Vec3 grad = Vec3::Zero();
      for (std::size_t k = 0; k < n; ++k) {
        const double w = channels[c].weights[static_cast<Eigen::Index>(k)];
        if (w == 0.0) continue;
        row.potential += w * jets[k].value;
        grad += w * jets[k].grad;
      }
      row.e_field = -grad * constants::per_um;
      rows.push_back(row);
    }
  }
  return rows;
}

void write_field_map_csv(std::ostream& os, const std::vector<FieldMapRow>& rows) {
  os << "x_um,y_um,z_um,electrode,potential_V,Ex,Ey,Ez\n";
  for (const auto& r : rows) {
    os << format9(r.point.x()) << ',' << format9(r.point.y()) << ',' << format9(r.point.z()) << ',' << r.electrode
       << ',' << format9(r.potential) << ',' << format9(r.e_field.x()) << ',' << format9(r.e_field.y()) << ','
       << format9(r.e_field.z()) << '\n';
  }
}

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_double(const std::string& s) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    throw TrapError(ErrorCode::ParseError, "bad number '" + s + "'");
  }
  if (used != s.size()) throw TrapError(ErrorCode::ParseError, "bad number '" + s + "'");
  return v;
}

}  // namespace

std::vector<FieldMapRow> read_field_map_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line != "x_um,y_um,z_um,electrode,potential_V,Ex,Ey,Ez") {
    throw TrapError(ErrorCode::ParseError, "field map header missing");
  }
  std::vector<FieldMapRow> rows;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto c = split_csv(line);
    if (c.size() != 8) throw TrapError(ErrorCode::ParseError, "field map row needs 8 columns");
    FieldMapRow r;
    r.point = Vec3(parse_double(c[0]), parse_double(c[1]), parse_double(c[2]));
    r.electrode = c[3];
    r.potential = parse_double(c[4]);
    r.e_field = Vec3(parse_double(c[5]), parse_double(c[6]), parse_double(c[7]));
    rows.push_back(r);
  }
  return rows;
}

void write_positions_csv(std::ostream& os, const IonChain& chain) {
  os << "ion_index,position_um\n";
  for (std::size_t i = 0; i < chain.positions.size(); ++i) os << i << ',' << format9(chain.positions[i]) << '\n';
}

void write_modes_csv(std::ostream& os, const NormalModes& modes) {
  os << "mode_index,freq_hz\n";
  for (std::size_t i = 0; i < modes.frequencies.size(); ++i) os << i << ',' << format9(modes.frequencies[i]) << '\n';
}

std::vector<double> read_value_column_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw TrapError(ErrorCode::ParseError, "CSV header missing");
  std::vector<double> out;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto c = split_csv(line);
    if (c.size() != 2) throw TrapError(ErrorCode::ParseError, "CSV row needs 2 columns");
    out.push_back(parse_double(c[1]));
  }
  return out;
}

void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
  namespace fs = std::filesystem;
  const fs::path tmp = path.string() + ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw TrapError(ErrorCode::IoError, "cannot write " + tmp.string());
    out << content;
    out.flush();
    if (!out) throw TrapError(ErrorCode::IoError, "write failed for " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw TrapError(ErrorCode::IoError, "cannot move output into place at " + path.string());
  }
}

}  // namespace ptrap
