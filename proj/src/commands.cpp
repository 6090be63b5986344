#include "ptrap/commands.hpp"

#include <filesystem>
#include <ostream>
#include <sstream>

#include "ptrap/errors.hpp"
#include "ptrap/mathieu.hpp"
#include "ptrap/mesh.hpp"
#include "ptrap/report_io.hpp"

namespace ptrap {

using nlohmann::json;

std::optional<Command> command_from_string(const std::string& name) {
  if (name == "validate") return Command::Validate;
  if (name == "map") return Command::Map;
  if (name == "characterize") return Command::Characterize;
  if (name == "compensate") return Command::Compensate;
  if (name == "crystal") return Command::Crystal;
  if (name == "stability") return Command::Stability;
  return std::nullopt;
}

std::string to_string(Command command) {
  switch (command) {
    case Command::Validate: return "validate";
    case Command::Map: return "map";
    case Command::Characterize: return "characterize";
    case Command::Compensate: return "compensate";
    case Command::Crystal: return "crystal";
    case Command::Stability: return "stability";
  }
  return "unknown";
}

BasisSolution build_basis(const RunConfig& config, const TrapLayout& layout) {
  return solve_basis(mesh_layout(layout, config.max_panel, config.edge_grading), config.solve);
}

DriveParams resolved_drive(const RunConfig& config, const TrapLayout& layout) {
  DriveParams d = config.drive;
  if (d.rf_electrodes.empty()) d.rf_electrodes = layout.rf_names();
  return d;
}

AxialPotential sampled_axial_potential(const RunConfig& config, const TrapLayout& layout, const BasisSolution& basis,
                                       bool include_pseudo, VoltageSet* used) {
  const DriveParams drive = resolved_drive(config, layout);
  const Box3 box = config.characterize.search_box.value_or(basis.default_search_box());
  const Vec3 null = find_rf_null(basis, drive, box, config.characterize.null);
  VoltageSet voltages = config.voltages;
  const auto& cs = config.crystal;
  if (!cs.null_field_electrodes.empty()) {
    ConstraintSpec spec;
    spec.null_point = null;
    spec.control_electrodes = cs.null_field_electrodes;
    for (const auto& [name, v] : config.voltages.control) {
      if (std::find(cs.null_field_electrodes.begin(), cs.null_field_electrodes.end(), name) ==
          cs.null_field_electrodes.end()) {
        spec.locked_voltages[name] = v;
      }
    }
    voltages = solve_voltages(build_constraint_system(basis, spec)).voltages;
  }
  if (used) *used = voltages;
  const EnergyModel model(basis, drive, config.ion, voltages);
  const AxialProfile prof = axial_profile(model, null, Vec3::UnitX(), cs.half_length_um, cs.samples, include_pseudo);
  return AxialPotential::sampled(prof.positions, prof.energies);
}

namespace {

std::string dump(const json& j) { return j.dump(2) + "\n"; }

void emit(const RunConfig& config, const std::string& name, const std::string& content) {
  std::error_code ec;
  std::filesystem::create_directories(config.output_dir, ec);
  if (ec) throw TrapError(ErrorCode::IoError, "cannot create output directory " + config.output_dir.string());
  write_file_atomic(config.output_dir / name, content);
}

CharacterizeOptions quick(const RunConfig& config) {
  CharacterizeOptions o = config.characterize;
  o.compute_depth = false;
  return o;
}

int validate(const RunConfig& config, std::ostream& err) {
  const TrapLayout layout = config.layout();
  const ValidationReport report = validate_layout(layout);
  json list = json::array();
  for (const auto& v : report.violations) {
    list.push_back({{"kind", to_string(v.kind)}, {"electrodes", v.electrodes}, {"detail", v.detail}});
  }
  emit(config, "violations.json", dump(json{{"violations", list}}));
  if (!report.ok()) {
    err << "validate: " << report.violations.size() << " layout violation(s), first: "
        << to_string(report.violations.front().kind) << "\n";
    return 1;
  }
  return 0;
}

void map(const RunConfig& config) {
  if (config.map.points.empty()) throw TrapError(ErrorCode::InvalidValue, "'map' needs points or a grid");
  const TrapLayout layout = config.layout();
  const BasisSolution basis = build_basis(config, layout);
  const auto& names = basis.electrode_names();
  const auto n = static_cast<Eigen::Index>(names.size());
  std::vector<MapChannel> channels;
  for (const auto& c : config.map.channels) {
    if (c == "all") {
      for (Eigen::Index k = 0; k < n; ++k) channels.push_back({names[static_cast<std::size_t>(k)], Eigen::VectorXd::Unit(n, k)});
    } else if (c == "rf" || c == "static") {
      const EnergyModel model(basis, resolved_drive(config, layout), config.ion, config.voltages);
      channels.push_back({c, c == "rf" ? Eigen::VectorXd(model.rf_weights() * model.v_rf()) : model.dc_voltages()});
    } else {
      const int k = basis.index_of(c);
      if (k < 0) throw TrapError(ErrorCode::InvalidValue, "'channels' names unknown electrode '" + c + "'");
      channels.push_back({c, Eigen::VectorXd::Unit(n, k)});
    }
  }
  std::ostringstream os;
  write_field_map_csv(os, field_map(basis, config.map.points, channels));
  emit(config, "field_map.csv", os.str());
}

void characterize(const RunConfig& config) {
  const TrapLayout layout = config.layout();
  const BasisSolution basis = build_basis(config, layout);
  const TrapReport r =
      characterize_trap(basis, resolved_drive(config, layout), config.ion, config.voltages, config.characterize);
  emit(config, "trap_report.json", dump(report_to_json(r)));
}

void compensate(const RunConfig& config) {
  const TrapLayout layout = config.layout();
  const BasisSolution basis = build_basis(config, layout);
  const DriveParams drive = resolved_drive(config, layout);
  const TrapReport r = characterize_trap(basis, drive, config.ion, config.voltages, quick(config));

  ConstraintSpec spec;
  spec.null_point = r.rf_null;
  spec.axial_direction = r.principal_axes[static_cast<std::size_t>(r.axial_index)];
  if (config.compensate.axial_frequency_hz) {
    spec.target_axial_curvature = curvature_for_frequency(*config.compensate.axial_frequency_hz, config.ion);
  }
  spec.control_electrodes =
      config.compensate.control_electrodes.empty() ? layout.control_names() : config.compensate.control_electrodes;
  spec.locked_voltages = config.compensate.locked;
  spec.weights = config.compensate.weights;
  const ConstraintSystem sys = build_constraint_system(basis, spec);
  const CompensationResult result = solve_voltages(sys);
  const StaticDiagnostics diag =
      residual_diagnostics(basis, drive, config.ion, result.voltages, spec.null_point, spec.axial_direction);

  json j = compensation_to_json(result, sys.row_labels);
  j["null_point"] = json::array({round9(spec.null_point.x()), round9(spec.null_point.y()), round9(spec.null_point.z())});
  j["axial_direction"] = json::array(
      {round9(spec.axial_direction.x()), round9(spec.axial_direction.y()), round9(spec.axial_direction.z())});
  j["diagnostics"] = {
      {"static_field", json::array({round9(diag.static_field.x()), round9(diag.static_field.y()),
                                    round9(diag.static_field.z())})},
      {"axial_curvature", round9(diag.axial_curvature)},
      {"axial_frequency", round9(diag.axial_frequency)},
      {"imaginary", diag.imaginary}};
  emit(config, "compensation.json", dump(j));
}

void crystal(const RunConfig& config) {
  const auto& cs = config.crystal;
  AxialPotential potential = AxialPotential::harmonic(cs.axial_frequency_hz);
  if (cs.potential == "sampled") {
    const TrapLayout layout = config.layout();
    const BasisSolution basis = build_basis(config, layout);
    potential = sampled_axial_potential(config, layout, basis, cs.include_pseudo);
  }
  const IonChain chain = equilibrium_positions(config.ion, potential, cs.ions);
  const NormalModes modes = normal_modes(chain);
  std::ostringstream pos, md;
  write_positions_csv(pos, chain);
  write_modes_csv(md, modes);
  emit(config, "crystal_positions.csv", pos.str());
  emit(config, "crystal_modes.csv", md.str());
  if (!cs.drive_frequencies_hz.empty()) {
    const auto flags = mode_spectrum_scan(chain, cs.drive_frequencies_hz, cs.linewidth);
    std::ostringstream scan;
    scan << "drive_hz,resonant\n";
    for (std::size_t i = 0; i < flags.size(); ++i) {
      scan << format9(cs.drive_frequencies_hz[i]) << ',' << (flags[i] ? 1 : 0) << '\n';
    }
    emit(config, "crystal_scan.csv", scan.str());
  }
}

void stability(const RunConfig& config) {
  const TrapLayout layout = config.layout();
  const BasisSolution basis = build_basis(config, layout);
  const TrapReport r =
      characterize_trap(basis, resolved_drive(config, layout), config.ion, config.voltages, quick(config));
  StabilityReport s;
  s.q = r.mathieu_q;
  s.a = r.mathieu_a;
  s.stable = r.stable;
  for (std::size_t i = 0; i < 3; ++i) {
    s.band_stable[i] = mathieu::stable(s.a[i], s.q[i]);
    s.floquet_stable[i] = mathieu::floquet_stable(s.a[i], s.q[i], config.stability.floquet_steps);
  }
  emit(config, "stability.json", dump(stability_to_json(s)));
}

}  // namespace

int run_command(Command command, const RunConfig& config, std::ostream& err) {
  try {
    switch (command) {
      case Command::Validate: return validate(config, err);
      case Command::Map: map(config); break;
      case Command::Characterize: characterize(config); break;
      case Command::Compensate: compensate(config); break;
      case Command::Crystal: crystal(config); break;
      case Command::Stability: stability(config); break;
    }
    return 0;
  } catch (const TrapError& e) {
    err << to_string(command) << ": " << e.what() << "\n";
    return e.is_config_error() ? 2 : 1;
  } catch (const std::exception& e) {
    err << to_string(command) << ": " << e.what() << "\n";
    return 1;
  }
}

}  // namespace ptrap
