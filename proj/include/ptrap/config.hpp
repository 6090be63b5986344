#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "ptrap/bem.hpp"
#include "ptrap/geometry.hpp"
#include "ptrap/pseudopotential.hpp"

namespace ptrap {

// Run configuration file (JSON). Every section is optional; unknown keys are
// rejected. Lengths are micrometres, potentials volts, frequencies hertz.
//
//   {
//     "layout": "reference" | {"reference": {...}} | {"file": "layout.json"},
//     "drive": {"rf_voltage": 125, "rf_frequency_hz": 87e6, "rf_electrodes": [...]},
//     "ion": {"mass_u": 24, "charge": 1},
//     "voltages": {"1": 0.32, ...},
//     "mesh": {"max_panel": 24, "edge_grading": 2},
//     "solver": {...},
//     "output_dir": "out",
//     "map": {"points": [[x, y, z], ...] or "grid": {"x": [lo, hi, n], ...}, "channels": ["rf"]},
//     "compensate": {...}, "crystal": {...}, "stability": {...}
//   }

struct MapSettings {
  std::vector<Vec3> points;
  /// "rf" (RF electrodes at the drive amplitude), "static" (configured
  /// control voltages), "all" (every electrode at 1 V, one row each) or an
  /// electrode name (1 V).
  std::vector<std::string> channels{"rf"};
};

struct CompensateSettings {
  /// Desired axial frequency; no curvature row when unset.
  std::optional<double> axial_frequency_hz = 760e3;
  std::vector<std::string> control_electrodes;
  std::map<std::string, double> locked;
  std::vector<double> weights;
};

struct CrystalSettings {
  int ions = 3;
  /// "harmonic" or "sampled" (axial potential of the configured trap).
  std::string potential = "harmonic";
  double axial_frequency_hz = 760e3;
  /// Sampled potential: include the RF pseudopotential's axial part.
  bool include_pseudo = true;
  double half_length_um = 200.0;
  int samples = 201;
  /// Solve these electrodes so the static field at the RF null vanishes,
  /// keeping the configured voltages on the others.
  std::vector<std::string> null_field_electrodes;
  std::vector<double> drive_frequencies_hz;
  double linewidth = 0.01;
};

struct StabilitySettings {
  int floquet_steps = 4000;
};

struct RunConfig {
  std::filesystem::path source;
  /// Set for the built-in layout; otherwise layout_file names a layout JSON.
  std::optional<ReferenceLayoutParams> reference;
  std::filesystem::path layout_file;
  DriveParams drive;
  IonSpecies ion;
  VoltageSet voltages;
  double max_panel = 24.0;
  double edge_grading = 2.0;
  SolveOptions solve;
  CharacterizeOptions characterize;
  std::filesystem::path output_dir = ".";
  MapSettings map;
  CompensateSettings compensate;
  CrystalSettings crystal;
  StabilitySettings stability;

  TrapLayout layout() const;
};

/// Throws ConfigNotFound, ParseError, UnknownKey (message names the key) and
/// InvalidValue (message names the key).
RunConfig parse_config(const std::filesystem::path& path, const std::vector<std::string>& overrides = {});
RunConfig parse_config_json(const nlohmann::json& j, const std::filesystem::path& base_dir,
                            const std::vector<std::string>& overrides = {});

/// Applies `dotted.key=value` to a config document; the value is read as JSON
/// when possible and as a string otherwise.
void apply_override(nlohmann::json& j, const std::string& assignment);

}  // namespace ptrap
