#pragma once

#include <array>
#include <string>
#include <utility>
#include <vector>

#include "ptrap/geometry.hpp"
#include "ptrap/rect_kernel.hpp"

namespace ptrap {

/// Owner name given to panels of the meshed ground-plane remainder.
inline constexpr const char* kGroundOwner = "ground";

struct Panel {
  Rect rect;
  /// Index into PanelMesh::owners.
  int owner = 0;

  std::array<Point2, 4> corners() const;
  Point2 centroid() const { return {rect.cx(), rect.cy()}; }
  double area() const { return rect.area(); }
  double diameter() const { return rect.diameter(); }
};

struct MeshOptions {
  /// Ground-plane margin as a multiple of the largest layout extent.
  double ground_margin_factor = 10.0;
  /// Growth of the target panel size per micrometre of distance from an edge.
  double growth_rate = 0.5;
};

struct PanelMesh {
  std::vector<Panel> panels;
  /// Electrode names in layout declaration order, then kGroundOwner when the
  /// ground plane is meshed.
  std::vector<std::string> owners;
  /// Half-open panel index range for each owner.
  std::vector<std::pair<std::size_t, std::size_t>> ranges;
  /// Number of leading owners that are layout electrodes (one basis each).
  std::size_t electrode_count = 0;

  std::size_t size() const { return panels.size(); }
  bool has_ground() const { return owners.size() > electrode_count; }
  double owner_area(std::size_t owner) const;
};

/// Rectangular panels for every electrode plus, when layout.ground_plane is
/// set, the grounded remainder of a margin box (electrodes dilated by
/// layout.min_gap are left unmeshed, so gaps carry no charge).
///
/// Electrode panels satisfy diameter <= max_panel; panels within
/// max(2 * min_gap, h) of their electrode's edge have diameter <= h with
/// h = max_panel / edge_grading. Ground panels use the same fine size near
/// electrodes and grow linearly with distance without the max_panel cap.
///
/// Throws NoElectrodes for an empty layout, InvalidParams for bad sizes and
/// UnsupportedGeometry for non-rectilinear polygons.
PanelMesh mesh_layout(const TrapLayout& layout, double max_panel, double edge_grading,
                      const MeshOptions& options = {});

}  // namespace ptrap
