#pragma once

#include <optional>
#include <string>
#include <vector>

namespace ptrap {

// In-plane coordinates in micrometres. x runs along the trap axis, y across
// it; the height above the electrode plane is z (vacuum side z > 0).
struct Point2 {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point2&, const Point2&) = default;
};

struct Polygon {
  std::vector<Point2> vertices;

  /// Signed shoelace area; positive for counterclockwise winding.
  double signed_area() const;
  double area() const;
  Point2 centroid() const;
  bool is_rectilinear() const;
  /// Closed containment: points on an edge count as inside.
  bool contains(Point2 p) const;
};

enum class ElectrodeRole { RF, Control, Ground };

std::string to_string(ElectrodeRole role);
std::optional<ElectrodeRole> role_from_string(const std::string& s);

struct Electrode {
  std::string name;
  ElectrodeRole role = ElectrodeRole::Control;
  std::vector<Polygon> shape;

  double area() const;
};

struct TrapLayout {
  std::vector<Electrode> electrodes;
  /// The rest of the plane (outside electrodes and their gaps) is held at 0 V.
  bool ground_plane = true;
  /// Declared minimum electrode-to-electrode gap in micrometres.
  double min_gap = 0.0;

  const Electrode* find(const std::string& name) const;
  std::vector<std::string> names() const;
  std::vector<std::string> rf_names() const;
  std::vector<std::string> control_names() const;
};

enum class ViolationKind {
  NonFinite,
  TooFewVertices,
  ZeroArea,
  ClockwiseWinding,
  SelfIntersection,
  DuplicateName,
  Overlap,
  GapTooSmall,
  NoRfElectrode,
};

std::string to_string(ViolationKind kind);

struct Violation {
  ViolationKind kind;
  std::vector<std::string> electrodes;
  std::string detail;
};

struct ValidationReport {
  std::vector<Violation> violations;

  bool ok() const { return violations.empty(); }
  std::size_t count(ViolationKind kind) const;
};

/// Reports every rule violation, in electrode declaration order; never throws.
ValidationReport validate_layout(const TrapLayout& layout);

/// Parameters of the built-in five-control-electrode reference layout.
///
/// The layout (y increasing upward, trap axis along x):
///
///   |  1  |  4  |  3  |   segmented outer controls, axial_segment_lengths
///   |-----------------|   RF rail "RF_B" (rf_rail_width)
///   |        2        |   centre control strip (center_control_width)
///   |-----------------|   RF rail "RF_A" (rf_rail_width_opposite)
///   |        5        |   opposite outer control (opposite_control_width)
///
/// All strips span the same axial length; neighbouring electrodes are
/// separated by `gap`. Coordinates are multiplied by overall_scale last, so
/// power-of-two scales are exact.
struct ReferenceLayoutParams {
  double rf_rail_width = 40.0;
  double rf_rail_width_opposite = 40.0;
  double center_control_width = 40.0;
  double outer_control_width = 100.0;
  double opposite_control_width = 100.0;
  double gap = 5.0;
  std::vector<double> axial_segment_lengths{100.0, 100.0, 100.0};
  double overall_scale = 1.0;
};

/// Throws TrapError(InvalidParams) on any non-positive dimension or a
/// segment count other than three.
TrapLayout build_reference_layout(const ReferenceLayoutParams& params);

/// Name of the first electrode (declaration order) whose closed polygon
/// contains p; nullopt in gaps and on the grounded remainder.
std::optional<std::string> point_in_electrode(const TrapLayout& layout, Point2 p);

}  // namespace ptrap
