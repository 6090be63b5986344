#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ptrap/field_source.hpp"
#include "ptrap/pseudopotential.hpp"

namespace ptrap {

/// Extra field target at another point.
struct ProbeConstraint {
  Vec3 point = Vec3::Zero();           // um
  Vec3 target_field = Vec3::Zero();    // V/m
};

struct ConstraintSpec {
  Vec3 null_point = Vec3::Zero();              // um
  Vec3 target_static_field = Vec3::Zero();     // V/m
  /// Static potential curvature along axial_direction (V/m^2); no curvature
  /// row when unset.
  std::optional<double> target_axial_curvature;
  Vec3 axial_direction = Vec3::UnitX();
  /// Electrodes solved for; empty means every electrode of the source that is
  /// not locked.
  std::vector<std::string> control_electrodes;
  std::map<std::string, double> locked_voltages;
  /// One positive weight per row (field rows, curvature row, probe rows);
  /// empty means all ones.
  std::vector<double> weights;
  std::vector<ProbeConstraint> probes;
};

/// Weighted rows are applied by the solver; A and b are in physical units
/// (V/m or V/m^2 per volt).
struct ConstraintSystem {
  Eigen::MatrixXd a;
  Eigen::VectorXd b;
  Eigen::VectorXd weights;
  std::vector<std::string> unknowns;
  std::vector<std::string> row_labels;
  std::map<std::string, double> locked;
};

struct CompensationResult {
  VoltageSet voltages;
  /// A v - b per row, unweighted.
  Eigen::VectorXd residual;
  int rank = 0;
  int null_space_dim = 0;
  Eigen::VectorXd singular_values;
  std::vector<std::string> warnings;
};

/// Static curvature (V/m^2) giving axial frequency `freq_hz` for `ion`.
double curvature_for_frequency(double freq_hz, const IonSpecies& ion);

/// Throws OutsideDomain when a constraint point cannot be evaluated,
/// UnknownElectrode for unknown names and InvalidParams for bad weights or a
/// zero axial direction.
ConstraintSystem build_constraint_system(const FieldSource& source, const ConstraintSpec& spec);

/// Minimum-norm least-squares solution. Singular values below 1e-10 of the
/// largest count as zero. Throws DegenerateSystem for an all-zero matrix.
CompensationResult solve_voltages(const ConstraintSystem& system);

struct StaticDiagnostics {
  Vec3 static_field = Vec3::Zero();  // V/m
  double axial_curvature = 0.0;      // V/m^2
  /// |f| (Hz) implied by the curvature; imaginary when the curvature is
  /// anti-confining for the ion's charge.
  double axial_frequency = 0.0;
  bool imaginary = false;
};

/// Forward static quantities at `null_point` for the given voltages.
StaticDiagnostics residual_diagnostics(const FieldSource& source, const DriveParams& drive, const IonSpecies& ion,
                                       const VoltageSet& voltages, const Vec3& null_point,
                                       const Vec3& axial_direction = Vec3::UnitX());

}  // namespace ptrap
