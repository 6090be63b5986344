#include "ptrap/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

#include "ptrap/errors.hpp"

namespace ptrap {

std::array<Point2, 4> Panel::corners() const {
  return {Point2{rect.x0, rect.y0}, Point2{rect.x1, rect.y0}, Point2{rect.x1, rect.y1},
          Point2{rect.x0, rect.y1}};
}

double PanelMesh::owner_area(std::size_t owner) const {
  double a = 0.0;
  for (std::size_t i = ranges[owner].first; i < ranges[owner].second; ++i) a += panels[i].area();
  return a;
}

namespace {

struct Segment {
  double x0, y0, x1, y1;
};

std::vector<double> unique_sorted(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

// Cells of the breakpoint grid whose centre satisfies `inside`, merged into
// maximal runs along x and then stacked along y where runs line up exactly.
std::vector<Rect> merge_cells(const std::vector<double>& xs, const std::vector<double>& ys,
                              const std::function<bool(double, double)>& inside) {
  std::vector<Rect> done;
  std::vector<Rect> open;
  for (std::size_t j = 0; j + 1 < ys.size(); ++j) {
    const double cy = 0.5 * (ys[j] + ys[j + 1]);
    std::vector<std::pair<double, double>> runs;
    for (std::size_t i = 0; i + 1 < xs.size();) {
      if (!inside(0.5 * (xs[i] + xs[i + 1]), cy)) {
        ++i;
        continue;
      }
      std::size_t k = i;
      while (k + 1 < xs.size() && inside(0.5 * (xs[k] + xs[k + 1]), cy)) ++k;
      runs.emplace_back(xs[i], xs[k]);
      i = k;
    }
    std::vector<Rect> next;
    for (const auto& [a, b] : runs) {
      auto it = std::find_if(open.begin(), open.end(), [&](const Rect& r) { return r.x0 == a && r.x1 == b; });
      if (it != open.end()) {
        Rect r = *it;
        r.y1 = ys[j + 1];
        next.push_back(r);
        open.erase(it);
      } else {
        next.push_back(Rect{a, b, ys[j], ys[j + 1]});
      }
    }
    done.insert(done.end(), open.begin(), open.end());
    open = std::move(next);
  }
  done.insert(done.end(), open.begin(), open.end());
  std::sort(done.begin(), done.end(), [](const Rect& a, const Rect& b) {
    return std::tie(a.y0, a.x0) < std::tie(b.y0, b.x0);
  });
  return done;
}

std::vector<Rect> decompose_polygon(const Polygon& poly, const std::string& owner) {
  if (!poly.is_rectilinear()) {
    throw TrapError(ErrorCode::UnsupportedGeometry,
                    "electrode '" + owner + "' has a non-rectilinear polygon; only axis-aligned edges can be meshed");
  }
  std::vector<double> xs, ys;
  for (const auto& v : poly.vertices) {
    xs.push_back(v.x);
    ys.push_back(v.y);
  }
  return merge_cells(unique_sorted(xs), unique_sorted(ys),
                     [&](double x, double y) { return poly.contains({x, y}); });
}

double rect_distance(const Rect& r, double x0, double x1, double y0, double y1) {
  const double dx = std::max({0.0, x0 - r.x1, r.x0 - x1});
  const double dy = std::max({0.0, y0 - r.y1, r.y0 - y1});
  return std::hypot(dx, dy);
}

double aspect(const Rect& r) {
  const double w = r.width(), h = r.height();
  return std::max(w, h) / std::min(w, h);
}

void bisect(const Rect& r, const std::function<double(const Rect&)>& target, int owner, std::vector<Panel>& out) {
  if (r.diameter() <= target(r) && aspect(r) <= 2.0 + 1e-9) {
    out.push_back(Panel{r, owner});
    return;
  }
  Rect a = r, b = r;
  if (r.width() >= r.height()) {
    const double m = 0.5 * (r.x0 + r.x1);
    a.x1 = m;
    b.x0 = m;
  } else {
    const double m = 0.5 * (r.y0 + r.y1);
    a.y1 = m;
    b.y0 = m;
  }
  bisect(a, target, owner, out);
  bisect(b, target, owner, out);
}

}  // namespace

PanelMesh mesh_layout(const TrapLayout& layout, double max_panel, double edge_grading, const MeshOptions& options) {
  if (layout.electrodes.empty()) throw TrapError(ErrorCode::NoElectrodes, "layout has no electrodes");
  if (!(max_panel > 0.0) || !std::isfinite(max_panel)) {
    throw TrapError(ErrorCode::InvalidParams, "max_panel must be positive");
  }
  if (!(edge_grading >= 1.0) || !std::isfinite(edge_grading)) {
    throw TrapError(ErrorCode::InvalidParams, "edge_grading must be >= 1");
  }
  if (!(options.ground_margin_factor > 0.0) || !(options.growth_rate > 0.0)) {
    throw TrapError(ErrorCode::InvalidParams, "mesh options must be positive");
  }

  const double h_fine = max_panel / edge_grading;
  const double band = std::max(2.0 * layout.min_gap, h_fine);
  const double rate = options.growth_rate;

  PanelMesh mesh;
  std::vector<Rect> all_rects;
  double bx0 = std::numeric_limits<double>::infinity(), by0 = bx0;
  double bx1 = -bx0, by1 = -bx0;

  for (std::size_t k = 0; k < layout.electrodes.size(); ++k) {
    const Electrode& e = layout.electrodes[k];
    std::vector<Segment> edges;
    std::vector<Rect> rects;
    for (const auto& poly : e.shape) {
      const auto& v = poly.vertices;
      for (std::size_t i = 0; i < v.size(); ++i) {
        const auto& a = v[i];
        const auto& b = v[(i + 1) % v.size()];
        edges.push_back({std::min(a.x, b.x), std::min(a.y, b.y), std::max(a.x, b.x), std::max(a.y, b.y)});
        bx0 = std::min(bx0, a.x);
        bx1 = std::max(bx1, a.x);
        by0 = std::min(by0, a.y);
        by1 = std::max(by1, a.y);
      }
      auto pr = decompose_polygon(poly, e.name);
      rects.insert(rects.end(), pr.begin(), pr.end());
    }
    auto target = [&](const Rect& r) {
      double d = std::numeric_limits<double>::infinity();
      for (const auto& s : edges) d = std::min(d, rect_distance(r, s.x0, s.x1, s.y0, s.y1));
      if (d <= band) return h_fine;
      return std::min(max_panel, h_fine + rate * (d - band));
    };
    const std::size_t first = mesh.panels.size();
    for (const auto& r : rects) bisect(r, target, static_cast<int>(k), mesh.panels);
    mesh.owners.push_back(e.name);
    mesh.ranges.emplace_back(first, mesh.panels.size());
    all_rects.insert(all_rects.end(), rects.begin(), rects.end());
  }
  mesh.electrode_count = layout.electrodes.size();

  if (layout.ground_plane) {
    const double extent = std::max(bx1 - bx0, by1 - by0);
    const double margin = options.ground_margin_factor * extent;
    const double g = layout.min_gap;
    std::vector<Rect> holes;
    std::vector<double> xs{bx0 - margin, bx1 + margin};
    std::vector<double> ys{by0 - margin, by1 + margin};
    for (const auto& r : all_rects) {
      Rect d{r.x0 - g, r.x1 + g, r.y0 - g, r.y1 + g};
      holes.push_back(d);
      xs.push_back(d.x0);
      xs.push_back(d.x1);
      ys.push_back(d.y0);
      ys.push_back(d.y1);
    }
    auto ground_rects = merge_cells(unique_sorted(xs), unique_sorted(ys), [&](double x, double y) {
      for (const auto& h : holes) {
        if (x >= h.x0 && x <= h.x1 && y >= h.y0 && y <= h.y1) return false;
      }
      return true;
    });
    auto target = [&](const Rect& r) {
      double d = std::numeric_limits<double>::infinity();
      for (const auto& e : all_rects) d = std::min(d, rect_distance(r, e.x0, e.x1, e.y0, e.y1));
      return h_fine + rate * std::max(0.0, d - band);
    };
    const std::size_t first = mesh.panels.size();
    const int owner = static_cast<int>(mesh.owners.size());
    for (const auto& r : ground_rects) bisect(r, target, owner, mesh.panels);
    mesh.owners.push_back(kGroundOwner);
    mesh.ranges.emplace_back(first, mesh.panels.size());
  }
  return mesh;
}

}  // namespace ptrap
