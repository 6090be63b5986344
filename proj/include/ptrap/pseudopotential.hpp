#pragma once

#include <array>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ptrap/field_source.hpp"

namespace ptrap {

struct IonSpecies {
  /// Atomic mass units.
  double mass = 24.0;
  /// Elementary charges.
  int charge = 1;

  double mass_kg() const;
  void check() const;  // throws InvalidParams
};

struct DriveParams {
  /// Zero-to-peak RF amplitude relative to ground (V).
  double v_rf = 125.0;
  /// Angular drive frequency (rad/s).
  double omega_rf = 2.0 * 3.14159265358979323846 * 87e6;
  /// Electrodes driven with v_rf; all others are at RF ground.
  std::vector<std::string> rf_electrodes;

  void check() const;  // throws InvalidParams
};

/// Static control voltages by electrode name. Electrodes not listed are at 0 V.
struct VoltageSet {
  std::map<std::string, double> control;
};

/// Energy (eV), gradient (eV/um) and Hessian (eV/um^2) of the ion's total
/// potential energy.
struct EnergyJet {
  double value = 0.0;
  Vec3 grad = Vec3::Zero();
  Mat3 hess = Mat3::Zero();
};

/// Pseudopotential plus static energy for one ion on a FieldSource.
class EnergyModel {
 public:
  /// Throws UnknownElectrode for names not in the source and InvalidParams
  /// when a static voltage is given for an RF electrode.
  EnergyModel(const FieldSource& source, const DriveParams& drive, const IonSpecies& ion,
              const VoltageSet& voltages = {});

  const FieldSource& source() const { return *source_; }
  /// eV per (V/um)^2 of unit-amplitude RF gradient.
  double pseudo_coeff() const { return pseudo_coeff_; }
  const Eigen::VectorXd& rf_weights() const { return rf_w_; }
  /// Static voltages (V) per electrode.
  const Eigen::VectorXd& dc_voltages() const { return dc_v_; }

  /// order 0..2; the Hessian needs third derivatives of the basis fields.
  EnergyJet total(const Vec3& p, int order) const;
  EnergyJet pseudo(const Vec3& p, int order) const;
  /// Unit-amplitude RF potential jet (sum over RF electrodes).
  PotentialJet rf_jet(const Vec3& p, int order) const;
  PotentialJet dc_jet(const Vec3& p, int order) const;

  /// Total energy on many points via FieldSource::combined (may be approximate).
  std::vector<double> total_many(const std::vector<Vec3>& points) const;

  double charge() const { return charge_; }
  double mass_kg() const { return mass_kg_; }
  double omega_rf() const { return omega_; }
  double v_rf() const { return v_rf_; }

 private:
  const FieldSource* source_;
  Eigen::VectorXd rf_w_;
  Eigen::VectorXd dc_v_;
  double pseudo_coeff_;
  double charge_;
  double mass_kg_;
  double omega_;
  double v_rf_;
};

/// Pseudopotential energy q^2 |E_rf|^2 / (4 m Omega^2) in eV and its gradient in eV/um.
std::pair<double, Vec3> pseudo_at(const FieldSource& source, const DriveParams& drive, const IonSpecies& ion,
                                  const Vec3& p);
/// Pseudopotential plus charge x static potential (eV).
double total_at(const FieldSource& source, const DriveParams& drive, const IonSpecies& ion,
                const VoltageSet& voltages, const Vec3& p);

struct NullOptions {
  /// Accept when |E_rf| at the result is at most this (V/m).
  double tolerance = 1.0;
  /// Scan points along the longest side of the search box.
  int coarse_points = 41;
  int max_iterations = 200;
};

/// Point of vanishing RF field inside `region`. Throws NullNotFound.
Vec3 find_rf_null(const FieldSource& source, const DriveParams& drive, const Box3& region,
                  const NullOptions& options = {});

struct TrapReport {
  Vec3 rf_null = Vec3::Zero();
  /// |E_rf| at the null (V/m).
  double rf_null_field = 0.0;
  Vec3 minimum = Vec3::Zero();
  double ion_height = 0.0;
  /// Ascending (Hz).
  std::array<double, 3> secular_freqs{};
  /// principal_axes[i] belongs to secular_freqs[i].
  std::array<Vec3, 3> principal_axes{Vec3::UnitX(), Vec3::UnitY(), Vec3::UnitZ()};
  /// Angle of each principal axis to the electrode plane (degrees).
  std::array<double, 3> axis_tilt_deg{};
  /// Index of the axis most nearly parallel to the electrode plane's x axis.
  int axial_index = 0;
  double depth = 0.0;  // eV
  bool depth_lower_bound = false;
  Vec3 escape_point = Vec3::Zero();
  double energy_at_minimum = 0.0;  // eV
  std::array<double, 3> mathieu_q{};
  std::array<double, 3> mathieu_a{};
  bool stable = false;
};

struct DepthOptions {
  double spacing = 2.0;        // um
  double half_width = 5.0;     // x, y half extent in ion heights
  double z_low = 0.25;         // in ion heights
  double z_high = 5.0;         // in ion heights
  bool refine_saddle = true;
};

struct CharacterizeOptions {
  std::optional<Box3> search_box;
  NullOptions null;
  DepthOptions depth;
  bool compute_depth = true;
  double gradient_tolerance = 1e-9;  // eV/um
  int max_newton = 200;
};

struct DepthResult {
  double depth = 0.0;
  Vec3 escape_point = Vec3::Zero();
  bool lower_bound = false;
};

/// Lowest barrier out of the well around `minimum`: a minimax flood over a
/// grid box, with the barrier node refined to a stationary point.
DepthResult find_trap_depth(const EnergyModel& model, const Vec3& minimum, double min_energy,
                            const DepthOptions& options = {});

/// Local minimum of the total energy near `start`: damped Newton with a
/// gradient-descent fallback. Throws NoConvergence.
Vec3 minimize_energy(const EnergyModel& model, const Vec3& start, double gradient_tolerance = 1e-9,
                     int max_iterations = 200);

/// Throws NotATrap when the Hessian at the minimum is not positive definite.
TrapReport characterize_trap(const FieldSource& source, const DriveParams& drive, const IonSpecies& ion,
                             const VoltageSet& voltages, const CharacterizeOptions& options = {});

struct LaserOverlap {
  std::array<double, 3> projections{};
  bool pass = false;
};

/// |axis_i . beam| per principal axis; pass when all exceed `threshold`.
/// Throws InvalidDirection for a non-unit beam, or one leaving the surface
/// plane unless allow_out_of_plane.
LaserOverlap laser_overlap_check(const TrapReport& report, const Vec3& beam, double threshold = 0.1,
                                 bool allow_out_of_plane = false);

/// Energies (eV) of one ion at `count` equispaced points origin + t * direction,
/// t in [-half_length, half_length] um. Without include_pseudo only the static
/// part is kept.
struct AxialProfile {
  std::vector<double> positions;  // t, um
  std::vector<double> energies;   // eV
};
AxialProfile axial_profile(const EnergyModel& model, const Vec3& origin, const Vec3& direction, double half_length,
                           int count, bool include_pseudo = true);

/// Secular angular frequency (rad/s) for curvature k (eV/um^2).
double angular_frequency_from_curvature(double k_ev_per_um2, double mass_kg);

}  // namespace ptrap
