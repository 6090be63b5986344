#include "ptrap/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "ptrap/errors.hpp"

namespace ptrap {
namespace {

double cross(Point2 o, Point2 a, Point2 b) {
  return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
}

int orientation(Point2 o, Point2 a, Point2 b) {
  const double c = cross(o, a, b);
  return (c > 0.0) - (c < 0.0);
}

bool on_segment(Point2 a, Point2 b, Point2 p) {
  return orientation(a, b, p) == 0 && std::min(a.x, b.x) <= p.x && p.x <= std::max(a.x, b.x) &&
         std::min(a.y, b.y) <= p.y && p.y <= std::max(a.y, b.y);
}

// Any shared point, including touching and collinear overlap.
bool segments_touch(Point2 a, Point2 b, Point2 c, Point2 d) {
  const int o1 = orientation(a, b, c);
  const int o2 = orientation(a, b, d);
  const int o3 = orientation(c, d, a);
  const int o4 = orientation(c, d, b);
  if (o1 != o2 && o3 != o4) return true;
  return (o1 == 0 && on_segment(a, b, c)) || (o2 == 0 && on_segment(a, b, d)) ||
         (o3 == 0 && on_segment(c, d, a)) || (o4 == 0 && on_segment(c, d, b));
}

// Crossing at a point interior to both segments.
bool segments_cross_properly(Point2 a, Point2 b, Point2 c, Point2 d) {
  const int o1 = orientation(a, b, c);
  const int o2 = orientation(a, b, d);
  const int o3 = orientation(c, d, a);
  const int o4 = orientation(c, d, b);
  return o1 * o2 < 0 && o3 * o4 < 0;
}

bool collinear_overlap(Point2 a, Point2 b, Point2 c, Point2 d) {
  if (orientation(a, b, c) != 0 || orientation(a, b, d) != 0) return false;
  const bool horizontalish = std::abs(b.x - a.x) >= std::abs(b.y - a.y);
  auto key = [&](Point2 p) { return horizontalish ? p.x : p.y; };
  const double lo = std::max(std::min(key(a), key(b)), std::min(key(c), key(d)));
  const double hi = std::min(std::max(key(a), key(b)), std::max(key(c), key(d)));
  return hi > lo;
}

double point_segment_distance(Point2 p, Point2 a, Point2 b) {
  const double dx = b.x - a.x;
  const double dy = b.y - a.y;
  const double len2 = dx * dx + dy * dy;
  double t = len2 > 0.0 ? ((p.x - a.x) * dx + (p.y - a.y) * dy) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return std::hypot(p.x - (a.x + t * dx), p.y - (a.y + t * dy));
}

double segment_distance(Point2 a, Point2 b, Point2 c, Point2 d) {
  if (segments_touch(a, b, c, d)) return 0.0;
  return std::min({point_segment_distance(a, c, d), point_segment_distance(b, c, d),
                   point_segment_distance(c, a, b), point_segment_distance(d, a, b)});
}

bool strictly_inside(const Polygon& poly, Point2 p) {
  const auto& v = poly.vertices;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (on_segment(v[i], v[(i + 1) % v.size()], p)) return false;
  }
  return poly.contains(p);
}

bool has_self_intersection(const Polygon& poly) {
  const auto& v = poly.vertices;
  const std::size_t n = v.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Point2 a = v[i];
    const Point2 b = v[(i + 1) % n];
    if (a == b) return true;
    for (std::size_t j = i + 1; j < n; ++j) {
      const Point2 c = v[j];
      const Point2 d = v[(j + 1) % n];
      const bool adjacent = (j == i + 1) || (i == 0 && j == n - 1);
      if (adjacent) {
        // Adjacent edges may only share their common vertex.
        if (collinear_overlap(a, b, c, d)) return true;
        continue;
      }
      if (segments_touch(a, b, c, d)) return true;
    }
  }
  return false;
}

// Interior sample points from an ear-clipping triangulation; every returned
// point lies strictly inside a simple polygon.
std::vector<Point2> interior_samples(const Polygon& poly) {
  std::vector<Point2> v = poly.vertices;
  if (poly.signed_area() < 0.0) std::reverse(v.begin(), v.end());
  std::vector<Point2> out;
  std::size_t guard = 0;
  while (v.size() >= 3 && guard++ < 10000) {
    bool clipped = false;
    for (std::size_t i = 0; i < v.size(); ++i) {
      const Point2 a = v[(i + v.size() - 1) % v.size()];
      const Point2 b = v[i];
      const Point2 c = v[(i + 1) % v.size()];
      if (cross(a, b, c) <= 0.0) continue;
      bool empty = true;
      for (const Point2& p : v) {
        if (p == a || p == b || p == c) continue;
        if (cross(a, b, p) >= 0.0 && cross(b, c, p) >= 0.0 && cross(c, a, p) >= 0.0) {
          empty = false;
          break;
        }
      }
      if (!empty) continue;
      out.push_back({(a.x + b.x + c.x) / 3.0, (a.y + b.y + c.y) / 3.0});
      v.erase(v.begin() + static_cast<std::ptrdiff_t>(i));
      clipped = true;
      break;
    }
    if (!clipped) break;
  }
  return out;
}

bool polygons_overlap(const Polygon& p, const Polygon& q) {
  const auto& a = p.vertices;
  const auto& b = q.vertices;
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = 0; j < b.size(); ++j) {
      if (segments_cross_properly(a[i], a[(i + 1) % a.size()], b[j], b[(j + 1) % b.size()])) {
        return true;
      }
    }
  }
  auto probe = [](const Polygon& from, const Polygon& into) {
    const auto& v = from.vertices;
    for (std::size_t i = 0; i < v.size(); ++i) {
      const Point2 mid{0.5 * (v[i].x + v[(i + 1) % v.size()].x),
                       0.5 * (v[i].y + v[(i + 1) % v.size()].y)};
      if (strictly_inside(into, v[i]) || strictly_inside(into, mid)) return true;
    }
    for (const Point2& s : interior_samples(from)) {
      if (strictly_inside(into, s)) return true;
    }
    return false;
  };
  return probe(p, q) || probe(q, p);
}

double polygon_distance(const Polygon& p, const Polygon& q) {
  double best = std::numeric_limits<double>::infinity();
  const auto& a = p.vertices;
  const auto& b = q.vertices;
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = 0; j < b.size(); ++j) {
      best = std::min(best, segment_distance(a[i], a[(i + 1) % a.size()], b[j],
                                             b[(j + 1) % b.size()]));
    }
  }
  return best;
}

bool finite(const Polygon& poly) {
  return std::all_of(poly.vertices.begin(), poly.vertices.end(),
                     [](Point2 p) { return std::isfinite(p.x) && std::isfinite(p.y); });
}

}  // namespace

double Polygon::signed_area() const {
  double s = 0.0;
  for (std::size_t i = 0; i < vertices.size(); ++i) {
    const Point2 a = vertices[i];
    const Point2 b = vertices[(i + 1) % vertices.size()];
    s += a.x * b.y - b.x * a.y;
  }
  return 0.5 * s;
}

double Polygon::area() const { return std::abs(signed_area()); }

Point2 Polygon::centroid() const {
  double cx = 0.0;
  double cy = 0.0;
  double a2 = 0.0;
  for (std::size_t i = 0; i < vertices.size(); ++i) {
    const Point2 a = vertices[i];
    const Point2 b = vertices[(i + 1) % vertices.size()];
    const double w = a.x * b.y - b.x * a.y;
    a2 += w;
    cx += (a.x + b.x) * w;
    cy += (a.y + b.y) * w;
  }
  return {cx / (3.0 * a2), cy / (3.0 * a2)};
}

bool Polygon::is_rectilinear() const {
  for (std::size_t i = 0; i < vertices.size(); ++i) {
    const Point2 a = vertices[i];
    const Point2 b = vertices[(i + 1) % vertices.size()];
    if (a.x != b.x && a.y != b.y) return false;
  }
  return true;
}

bool Polygon::contains(Point2 p) const {
  const auto& v = vertices;
  const std::size_t n = v.size();
  if (n < 3) return false;
  for (std::size_t i = 0; i < n; ++i) {
    if (on_segment(v[i], v[(i + 1) % n], p)) return true;
  }
  // Nonzero winding number.
  int winding = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const Point2 a = v[i];
    const Point2 b = v[(i + 1) % n];
    if (a.y <= p.y) {
      if (b.y > p.y && cross(a, b, p) > 0.0) ++winding;
    } else {
      if (b.y <= p.y && cross(a, b, p) < 0.0) --winding;
    }
  }
  return winding != 0;
}

std::string to_string(ElectrodeRole role) {
  switch (role) {
    case ElectrodeRole::RF: return "rf";
    case ElectrodeRole::Control: return "control";
    case ElectrodeRole::Ground: return "ground";
  }
  return "control";
}

std::optional<ElectrodeRole> role_from_string(const std::string& s) {
  if (s == "rf") return ElectrodeRole::RF;
  if (s == "control") return ElectrodeRole::Control;
  if (s == "ground") return ElectrodeRole::Ground;
  return std::nullopt;
}

double Electrode::area() const {
  double a = 0.0;
  for (const auto& p : shape) a += p.area();
  return a;
}

const Electrode* TrapLayout::find(const std::string& name) const {
  for (const auto& e : electrodes) {
    if (e.name == name) return &e;
  }
  return nullptr;
}

std::vector<std::string> TrapLayout::names() const {
  std::vector<std::string> out;
  for (const auto& e : electrodes) out.push_back(e.name);
  return out;
}

std::vector<std::string> TrapLayout::rf_names() const {
  std::vector<std::string> out;
  for (const auto& e : electrodes) {
    if (e.role == ElectrodeRole::RF) out.push_back(e.name);
  }
  return out;
}

std::vector<std::string> TrapLayout::control_names() const {
  std::vector<std::string> out;
  for (const auto& e : electrodes) {
    if (e.role == ElectrodeRole::Control) out.push_back(e.name);
  }
  return out;
}

std::string to_string(ViolationKind kind) {
  switch (kind) {
    case ViolationKind::NonFinite: return "NonFinite";
    case ViolationKind::TooFewVertices: return "TooFewVertices";
    case ViolationKind::ZeroArea: return "ZeroArea";
    case ViolationKind::ClockwiseWinding: return "ClockwiseWinding";
    case ViolationKind::SelfIntersection: return "SelfIntersection";
    case ViolationKind::DuplicateName: return "DuplicateName";
    case ViolationKind::Overlap: return "Overlap";
    case ViolationKind::GapTooSmall: return "GapTooSmall";
    case ViolationKind::NoRfElectrode: return "NoRfElectrode";
  }
  return "Unknown";
}

std::size_t ValidationReport::count(ViolationKind kind) const {
  return static_cast<std::size_t>(std::count_if(
      violations.begin(), violations.end(), [kind](const Violation& v) { return v.kind == kind; }));
}

ValidationReport validate_layout(const TrapLayout& layout) {
  ValidationReport report;
  auto add = [&](ViolationKind kind, std::vector<std::string> names, std::string detail) {
    report.violations.push_back({kind, std::move(names), std::move(detail)});
  };

  // Polygons that are individually well-formed take part in pairwise checks.
  std::vector<std::vector<bool>> usable(layout.electrodes.size());
  std::set<std::string> seen;
  for (std::size_t e = 0; e < layout.electrodes.size(); ++e) {
    const Electrode& el = layout.electrodes[e];
    if (!seen.insert(el.name).second) add(ViolationKind::DuplicateName, {el.name}, "");
    usable[e].assign(el.shape.size(), false);
    for (std::size_t k = 0; k < el.shape.size(); ++k) {
      const Polygon& poly = el.shape[k];
      const std::string where = "polygon " + std::to_string(k);
      if (!finite(poly)) {
        add(ViolationKind::NonFinite, {el.name}, where);
        continue;
      }
      if (poly.vertices.size() < 3) {
        add(ViolationKind::TooFewVertices, {el.name}, where);
        continue;
      }
      if (has_self_intersection(poly)) {
        add(ViolationKind::SelfIntersection, {el.name}, where);
        continue;
      }
      const double a = poly.signed_area();
      if (a == 0.0) {
        add(ViolationKind::ZeroArea, {el.name}, where);
        continue;
      }
      if (a < 0.0) add(ViolationKind::ClockwiseWinding, {el.name}, where);
      usable[e][k] = true;
    }
  }

  for (std::size_t e = 0; e < layout.electrodes.size(); ++e) {
    const Electrode& a = layout.electrodes[e];
    for (std::size_t i = 0; i < a.shape.size(); ++i) {
      if (!usable[e][i]) continue;
      for (std::size_t j = i + 1; j < a.shape.size(); ++j) {
        if (usable[e][j] && polygons_overlap(a.shape[i], a.shape[j])) {
          add(ViolationKind::Overlap, {a.name, a.name},
              "polygons " + std::to_string(i) + " and " + std::to_string(j));
        }
      }
    }
  }

  for (std::size_t e = 0; e < layout.electrodes.size(); ++e) {
    for (std::size_t f = e + 1; f < layout.electrodes.size(); ++f) {
      const Electrode& a = layout.electrodes[e];
      const Electrode& b = layout.electrodes[f];
      bool overlap = false;
      double gap = std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < a.shape.size(); ++i) {
        if (!usable[e][i]) continue;
        for (std::size_t j = 0; j < b.shape.size(); ++j) {
          if (!usable[f][j]) continue;
          if (polygons_overlap(a.shape[i], b.shape[j])) {
            overlap = true;
          } else {
            gap = std::min(gap, polygon_distance(a.shape[i], b.shape[j]));
          }
        }
      }
      if (overlap) {
        add(ViolationKind::Overlap, {a.name, b.name}, "");
      } else if (gap < layout.min_gap * (1.0 - 1e-12)) {
        add(ViolationKind::GapTooSmall, {a.name, b.name}, "gap " + std::to_string(gap) + " um");
      }
    }
  }

  if (layout.rf_names().empty()) add(ViolationKind::NoRfElectrode, {}, "");
  return report;
}

namespace {

Polygon rect(double x0, double x1, double y0, double y1) {
  return Polygon{{{x0, y0}, {x1, y0}, {x1, y1}, {x0, y1}}};
}

}  // namespace

TrapLayout build_reference_layout(const ReferenceLayoutParams& p) {
  auto require_positive = [](double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw TrapError(ErrorCode::InvalidParams, std::string(name) + " must be positive");
    }
  };
  require_positive(p.rf_rail_width, "rf_rail_width");
  require_positive(p.rf_rail_width_opposite, "rf_rail_width_opposite");
  require_positive(p.center_control_width, "center_control_width");
  require_positive(p.outer_control_width, "outer_control_width");
  require_positive(p.opposite_control_width, "opposite_control_width");
  require_positive(p.gap, "gap");
  require_positive(p.overall_scale, "overall_scale");
  if (p.axial_segment_lengths.size() != 3) {
    throw TrapError(ErrorCode::InvalidParams, "axial_segment_lengths must list three segments");
  }
  for (double len : p.axial_segment_lengths) require_positive(len, "axial_segment_lengths");

  const double g = p.gap;
  const double length = p.axial_segment_lengths[0] + p.axial_segment_lengths[1] +
                        p.axial_segment_lengths[2] + 2.0 * g;
  const double x0 = -0.5 * length;
  const double x1 = 0.5 * length;
  const double c = 0.5 * p.center_control_width;

  const double b0 = c + g;
  const double b1 = b0 + p.rf_rail_width;
  const double s0 = b1 + g;
  const double s1 = s0 + p.outer_control_width;
  const double a0 = -(c + g);
  const double a1 = a0 - p.rf_rail_width_opposite;
  const double o0 = a1 - g;
  const double o1 = o0 - p.opposite_control_width;

  TrapLayout layout;
  layout.ground_plane = true;
  layout.min_gap = g;

  double sx = x0;
  const char* segment_names[3] = {"1", "4", "3"};
  std::vector<Electrode> segments;
  for (int k = 0; k < 3; ++k) {
    const double len = p.axial_segment_lengths[static_cast<std::size_t>(k)];
    segments.push_back({segment_names[k], ElectrodeRole::Control, {rect(sx, sx + len, s0, s1)}});
    sx += len + g;
  }
  layout.electrodes.push_back(segments[0]);
  layout.electrodes.push_back({"2", ElectrodeRole::Control, {rect(x0, x1, -c, c)}});
  layout.electrodes.push_back(segments[2]);
  layout.electrodes.push_back(segments[1]);
  layout.electrodes.push_back({"5", ElectrodeRole::Control, {rect(x0, x1, o1, o0)}});
  layout.electrodes.push_back({"RF_A", ElectrodeRole::RF, {rect(x0, x1, a1, a0)}});
  layout.electrodes.push_back({"RF_B", ElectrodeRole::RF, {rect(x0, x1, b0, b1)}});

  const double s = p.overall_scale;
  for (auto& e : layout.electrodes) {
    for (auto& poly : e.shape) {
      for (auto& v : poly.vertices) {
        v.x *= s;
        v.y *= s;
      }
    }
  }
  layout.min_gap *= s;
  return layout;
}

std::optional<std::string> point_in_electrode(const TrapLayout& layout, Point2 p) {
  for (const auto& e : layout.electrodes) {
    for (const auto& poly : e.shape) {
      if (poly.contains(p)) return e.name;
    }
  }
  return std::nullopt;
}

}  // namespace ptrap
