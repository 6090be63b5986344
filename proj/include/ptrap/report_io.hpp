#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "ptrap/compensation.hpp"
#include "ptrap/crystal.hpp"
#include "ptrap/field_source.hpp"
#include "ptrap/pseudopotential.hpp"

namespace ptrap {

// Every number written by this module carries at most 9 significant digits,
// so identical inputs give identical bytes and files re-read to the same
// values that were written.

/// Rounds to 9 significant digits.
double round9(double v);
/// "%.9g" formatting.
std::string format9(double v);

nlohmann::json report_to_json(const TrapReport& report);
/// Throws ParseError on missing or mistyped fields.
TrapReport report_from_json(const nlohmann::json& j);

nlohmann::json compensation_to_json(const CompensationResult& result, const std::vector<std::string>& row_labels = {});
CompensationResult compensation_from_json(const nlohmann::json& j);

/// Mathieu verdict per principal axis.
struct StabilityReport {
  std::array<double, 3> q{};
  std::array<double, 3> a{};
  std::array<bool, 3> band_stable{};
  std::array<bool, 3> floquet_stable{};
  bool stable = false;
};

nlohmann::json stability_to_json(const StabilityReport& report);
StabilityReport stability_from_json(const nlohmann::json& j);

struct FieldMapRow {
  Vec3 point = Vec3::Zero();  // um
  std::string electrode;
  double potential = 0.0;         // V per volt on the electrode
  Vec3 e_field = Vec3::Zero();    // V/m per volt
};

/// One row per (point, electrode), sorted by x, y, z, then electrode name.
/// Throws OutsideDomain for points that cannot be evaluated.
std::vector<FieldMapRow> field_map(const FieldSource& source, const std::vector<Vec3>& points);

/// A named superposition of electrode bases (volts per electrode, in
/// electrode_names() order).
struct MapChannel {
  std::string name;
  Eigen::VectorXd weights;
};

/// One row per (point, channel), sorted by x, y, z, then channel name.
std::vector<FieldMapRow> field_map(const FieldSource& source, const std::vector<Vec3>& points,
                                   const std::vector<MapChannel>& channels);

/// Header `x_um,y_um,z_um,electrode,potential_V,Ex,Ey,Ez`.
void write_field_map_csv(std::ostream& os, const std::vector<FieldMapRow>& rows);
/// Throws ParseError on a malformed file.
std::vector<FieldMapRow> read_field_map_csv(std::istream& is);

/// `ion_index,position_um`.
void write_positions_csv(std::ostream& os, const IonChain& chain);
/// `mode_index,freq_hz`.
void write_modes_csv(std::ostream& os, const NormalModes& modes);
/// Second column of a two-column CSV with a header line.
std::vector<double> read_value_column_csv(std::istream& is);

/// Writes to a temporary sibling and renames it into place. Throws IoError.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

}  // namespace ptrap
