#include "ptrap/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "ptrap/constants.hpp"
#include "ptrap/errors.hpp"
#include "ptrap/layout_io.hpp"

namespace ptrap {

using nlohmann::json;

namespace {

[[noreturn]] void invalid(const std::string& key, const std::string& why) {
  throw TrapError(ErrorCode::InvalidValue, "'" + key + "' " + why);
}

// Object wrapper that checks types and rejects keys nobody asked for.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) invalid(path_.empty() ? "config" : path_, "must be an object");
  }

  bool has(const std::string& key) {
    seen_.insert(key);
    return j_.contains(key);
  }

  const json& raw(const std::string& key) {
    seen_.insert(key);
    return j_.at(key);
  }

  double number(const std::string& key, double fallback, bool positive = false) {
    if (!has(key)) return fallback;
    const json& v = j_.at(key);
    if (!v.is_number() || !std::isfinite(v.get<double>())) invalid(key, "must be a finite number");
    const double d = v.get<double>();
    if (positive && !(d > 0.0)) invalid(key, "must be positive");
    return d;
  }

  int integer(const std::string& key, int fallback, int minimum) {
    if (!has(key)) return fallback;
    const json& v = j_.at(key);
    if (!v.is_number_integer()) invalid(key, "must be an integer");
    const auto i = v.get<long long>();
    if (i < minimum || i > 100000000) invalid(key, "is out of range");
    return static_cast<int>(i);
  }

  bool boolean(const std::string& key, bool fallback) {
    if (!has(key)) return fallback;
    const json& v = j_.at(key);
    if (!v.is_boolean()) invalid(key, "must be true or false");
    return v.get<bool>();
  }

  std::string string(const std::string& key, const std::string& fallback) {
    if (!has(key)) return fallback;
    const json& v = j_.at(key);
    if (!v.is_string()) invalid(key, "must be a string");
    return v.get<std::string>();
  }

  std::vector<std::string> strings(const std::string& key) {
    std::vector<std::string> out;
    if (!has(key)) return out;
    const json& v = j_.at(key);
    if (!v.is_array()) invalid(key, "must be a list of strings");
    for (const auto& s : v) {
      if (!s.is_string()) invalid(key, "must be a list of strings");
      out.push_back(s.get<std::string>());
    }
    return out;
  }

  std::vector<double> numbers(const std::string& key, bool positive = false) {
    std::vector<double> out;
    if (!has(key)) return out;
    const json& v = j_.at(key);
    if (!v.is_array()) invalid(key, "must be a list of numbers");
    for (const auto& s : v) {
      if (!s.is_number() || !std::isfinite(s.get<double>())) invalid(key, "must be a list of finite numbers");
      if (positive && !(s.get<double>() > 0.0)) invalid(key, "must hold positive numbers");
      out.push_back(s.get<double>());
    }
    return out;
  }

  std::map<std::string, double> volt_map(const std::string& key) {
    std::map<std::string, double> out;
    if (!has(key)) return out;
    const json& v = j_.at(key);
    if (!v.is_object()) invalid(key, "must map electrode names to volts");
    for (const auto& [name, val] : v.items()) {
      if (!val.is_number() || !std::isfinite(val.get<double>())) invalid(key, "must map electrode names to volts");
      out[name] = val.get<double>();
    }
    return out;
  }

  Section child(const std::string& key) { return Section(raw(key), key); }

  // Call after reading every known key.
  void finish() const {
    for (const auto& [key, value] : j_.items()) {
      (void)value;
      if (!seen_.count(key)) throw TrapError(ErrorCode::UnknownKey, "unknown key '" + key + "'");
    }
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

Vec3 vec3(const json& v, const std::string& key) {
  if (!v.is_array() || v.size() != 3) invalid(key, "must be a list of three numbers");
  Vec3 out;
  for (int i = 0; i < 3; ++i) {
    if (!v[static_cast<std::size_t>(i)].is_number()) invalid(key, "must be a list of three numbers");
    out[i] = v[static_cast<std::size_t>(i)].get<double>();
  }
  if (!out.allFinite()) invalid(key, "must be finite");
  return out;
}

ReferenceLayoutParams reference_params(Section s) {
  ReferenceLayoutParams p;
  p.rf_rail_width = s.number("rf_rail_width", p.rf_rail_width, true);
  p.rf_rail_width_opposite = s.number("rf_rail_width_opposite", p.rf_rail_width_opposite, true);
  p.center_control_width = s.number("center_control_width", p.center_control_width, true);
  p.outer_control_width = s.number("outer_control_width", p.outer_control_width, true);
  p.opposite_control_width = s.number("opposite_control_width", p.opposite_control_width, true);
  p.gap = s.number("gap", p.gap, true);
  p.overall_scale = s.number("overall_scale", p.overall_scale, true);
  if (s.has("axial_segment_lengths")) {
    p.axial_segment_lengths = s.numbers("axial_segment_lengths", true);
    if (p.axial_segment_lengths.size() != 3) invalid("axial_segment_lengths", "must list three lengths");
  }
  s.finish();
  return p;
}

void parse_layout(const json& v, const std::filesystem::path& base, RunConfig& cfg) {
  if (v.is_string()) {
    if (v.get<std::string>() != "reference") invalid("layout", "must be \"reference\" or an object");
    cfg.reference = ReferenceLayoutParams{};
    return;
  }
  Section s(v, "layout");
  const bool ref = s.has("reference");
  const bool file = s.has("file");
  if (ref == file) invalid("layout", "needs exactly one of 'reference' and 'file'");
  if (ref) {
    cfg.reference = reference_params(s.child("reference"));
  } else {
    const json& f = s.raw("file");
    if (!f.is_string()) invalid("file", "must be a path");
    std::filesystem::path p = f.get<std::string>();
    if (p.is_relative()) p = base / p;
    if (!std::filesystem::exists(p)) invalid("file", "does not exist: " + p.string());
    cfg.layout_file = p;
  }
  s.finish();
}

}  // namespace

TrapLayout RunConfig::layout() const {
  if (reference) return build_reference_layout(*reference);
  return load_layout(layout_file);
}

void apply_override(json& j, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw TrapError(ErrorCode::InvalidValue, "override '" + assignment + "' must look like key=value");
  }
  const std::string key = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  json value;
  try {
    value = json::parse(text);
  } catch (const json::exception&) {
    value = text;
  }
  json* node = &j;
  std::stringstream ss(key);
  std::string part;
  std::vector<std::string> parts;
  while (std::getline(ss, part, '.')) parts.push_back(part);
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (parts[i].empty()) throw TrapError(ErrorCode::InvalidValue, "override key '" + key + "' is malformed");
    if (!node->is_object()) *node = json::object();
    if (i + 1 == parts.size()) {
      (*node)[parts[i]] = value;
    } else {
      node = &(*node)[parts[i]];
    }
  }
}

RunConfig parse_config_json(const json& doc, const std::filesystem::path& base, const std::vector<std::string>& overrides) {
  json j = doc;
  for (const auto& o : overrides) apply_override(j, o);

  RunConfig cfg;
  Section top(j, "");
  if (top.has("layout")) {
    parse_layout(top.raw("layout"), base, cfg);
  } else {
    cfg.reference = ReferenceLayoutParams{};
  }

  if (top.has("drive")) {
    Section s = top.child("drive");
    cfg.drive.v_rf = s.number("rf_voltage", cfg.drive.v_rf, true);
    const double f = s.number("rf_frequency_hz", cfg.drive.omega_rf / (2.0 * constants::pi), true);
    cfg.drive.omega_rf = 2.0 * constants::pi * f;
    cfg.drive.rf_electrodes = s.strings("rf_electrodes");
    s.finish();
  }
  if (top.has("ion")) {
    Section s = top.child("ion");
    cfg.ion.mass = s.number("mass_u", cfg.ion.mass, true);
    cfg.ion.charge = s.integer("charge", cfg.ion.charge, -100);
    if (cfg.ion.charge == 0) invalid("charge", "must be nonzero");
    s.finish();
  }
  if (top.has("voltages")) cfg.voltages.control = top.volt_map("voltages");
  if (top.has("mesh")) {
    Section s = top.child("mesh");
    cfg.max_panel = s.number("max_panel", cfg.max_panel, true);
    cfg.edge_grading = s.number("edge_grading", cfg.edge_grading, true);
    if (cfg.edge_grading < 1.0) invalid("edge_grading", "must be at least 1");
    s.finish();
  }
  if (top.has("solver")) {
    Section s = top.child("solver");
    cfg.solve.near_factor = s.number("near_factor", cfg.solve.near_factor, true);
    cfg.solve.max_residual = s.number("max_residual_v", cfg.solve.max_residual, true);
    cfg.solve.min_rcond = s.number("min_rcond", cfg.solve.min_rcond, true);
    cfg.solve.tree_theta = s.number("tree_theta", cfg.solve.tree_theta, true);
    auto& c = cfg.characterize;
    c.null.tolerance = s.number("null_tolerance_v_per_m", c.null.tolerance, true);
    c.null.coarse_points = s.integer("null_scan_points", c.null.coarse_points, 3);
    c.gradient_tolerance = s.number("gradient_tolerance_ev_per_um", c.gradient_tolerance, true);
    c.max_newton = s.integer("max_newton", c.max_newton, 1);
    c.compute_depth = s.boolean("compute_depth", c.compute_depth);
    c.depth.spacing = s.number("depth_spacing_um", c.depth.spacing, true);
    c.depth.half_width = s.number("depth_half_width", c.depth.half_width, true);
    c.depth.z_low = s.number("depth_z_low", c.depth.z_low, true);
    c.depth.z_high = s.number("depth_z_high", c.depth.z_high, true);
    if (c.depth.z_high <= c.depth.z_low) invalid("depth_z_high", "must exceed depth_z_low");
    if (s.has("search_box")) {
      Section b = s.child("search_box");
      Box3 box;
      box.lo = vec3(b.raw("lo"), "lo");
      box.hi = vec3(b.raw("hi"), "hi");
      b.finish();
      if (!((box.hi - box.lo).array() > 0.0).all() || !(box.lo.z() > 0.0)) {
        invalid("search_box", "needs lo < hi and lo.z > 0");
      }
      c.search_box = box;
    }
    s.finish();
  }
  if (top.has("output_dir")) {
    const json& o = top.raw("output_dir");
    if (!o.is_string() || o.get<std::string>().empty()) invalid("output_dir", "must be a path");
    std::filesystem::path p = o.get<std::string>();
    cfg.output_dir = p.is_relative() ? base / p : p;
  } else {
    cfg.output_dir = base;
  }
  if (top.has("map")) {
    Section s = top.child("map");
    const bool pts = s.has("points");
    const bool grid = s.has("grid");
    if (pts && grid) invalid("map", "takes either 'points' or 'grid'");
    if (pts) {
      const json& a = s.raw("points");
      if (!a.is_array()) invalid("points", "must be a list of [x, y, z]");
      for (const auto& p : a) cfg.map.points.push_back(vec3(p, "points"));
    }
    if (grid) {
      Section g = s.child("grid");
      std::array<std::vector<double>, 3> axes;
      const char* names[3] = {"x", "y", "z"};
      for (int a = 0; a < 3; ++a) {
        const auto spec = g.numbers(names[a]);
        if (spec.size() != 3 || spec[2] < 1 || spec[2] != std::floor(spec[2]) || spec[2] > 1e6) {
          invalid(names[a], "must be [lo, hi, count]");
        }
        const int n = static_cast<int>(spec[2]);
        for (int i = 0; i < n; ++i) {
          axes[static_cast<std::size_t>(a)].push_back(n == 1 ? spec[0] : spec[0] + (spec[1] - spec[0]) * i / (n - 1));
        }
      }
      g.finish();
      for (double x : axes[0])
        for (double y : axes[1])
          for (double z : axes[2]) cfg.map.points.emplace_back(x, y, z);
    }
    if (s.has("channels")) {
      cfg.map.channels = s.strings("channels");
      if (cfg.map.channels.empty()) invalid("channels", "must not be empty");
    }
    s.finish();
  }
  if (top.has("compensate")) {
    Section s = top.child("compensate");
    if (s.has("axial_frequency_hz")) {
      const json& v = s.raw("axial_frequency_hz");
      if (v.is_null()) {
        cfg.compensate.axial_frequency_hz.reset();
      } else {
        cfg.compensate.axial_frequency_hz = s.number("axial_frequency_hz", 0.0, true);
      }
    }
    cfg.compensate.control_electrodes = s.strings("control_electrodes");
    cfg.compensate.locked = s.volt_map("locked");
    cfg.compensate.weights = s.numbers("weights", true);
    s.finish();
  }
  if (top.has("crystal")) {
    Section s = top.child("crystal");
    auto& c = cfg.crystal;
    c.ions = s.integer("ions", c.ions, 1);
    c.potential = s.string("potential", c.potential);
    if (c.potential != "harmonic" && c.potential != "sampled") invalid("potential", "must be harmonic or sampled");
    c.axial_frequency_hz = s.number("axial_frequency_hz", c.axial_frequency_hz, true);
    c.include_pseudo = s.boolean("include_pseudo", c.include_pseudo);
    c.half_length_um = s.number("half_length_um", c.half_length_um, true);
    c.samples = s.integer("samples", c.samples, 4);
    c.null_field_electrodes = s.strings("null_field_electrodes");
    c.drive_frequencies_hz = s.numbers("drive_frequencies_hz", true);
    c.linewidth = s.number("linewidth", c.linewidth, true);
    s.finish();
  }
  if (top.has("stability")) {
    Section s = top.child("stability");
    cfg.stability.floquet_steps = s.integer("floquet_steps", cfg.stability.floquet_steps, 16);
    s.finish();
  }
  top.finish();
  return cfg;
}

RunConfig parse_config(const std::filesystem::path& path, const std::vector<std::string>& overrides) {
  std::ifstream in(path);
  if (!in) throw TrapError(ErrorCode::ConfigNotFound, "cannot open config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw TrapError(ErrorCode::ParseError, path.string() + ": " + e.what());
  }
  RunConfig cfg = parse_config_json(j, path.parent_path().empty() ? "." : path.parent_path(), overrides);
  cfg.source = path;
  return cfg;
}

}  // namespace ptrap
