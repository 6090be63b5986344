#include "ptrap/treecode.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ptrap/errors.hpp"
#include "ptrap/parallel.hpp"

namespace ptrap {

Treecode::Treecode(const std::vector<Panel>& panels, double theta, std::size_t leaf_size)
    : theta_(theta), leaf_size_(std::max<std::size_t>(1, leaf_size)) {
  order_.resize(panels.size());
  std::iota(order_.begin(), order_.end(), 0);
  rects_.reserve(panels.size());
  for (const auto& p : panels) rects_.push_back(p.rect);
  if (!panels.empty()) build(0, panels.size(), 0);
  // Store rectangles in tree order so leaves read contiguous memory.
  std::vector<Rect> sorted(rects_.size());
  for (std::size_t i = 0; i < order_.size(); ++i) sorted[i] = rects_[order_[i]];
  rects_ = std::move(sorted);
}

int Treecode::build(std::size_t begin, std::size_t end, int depth) {
  double x0 = INFINITY, x1 = -INFINITY, y0 = INFINITY, y1 = -INFINITY;
  for (std::size_t i = begin; i < end; ++i) {
    const Rect& r = rects_[order_[i]];
    x0 = std::min(x0, r.cx());
    x1 = std::max(x1, r.cx());
    y0 = std::min(y0, r.cy());
    y1 = std::max(y1, r.cy());
  }
  Node node;
  node.cx = 0.5 * (x0 + x1);
  node.cy = 0.5 * (y0 + y1);
  node.begin = begin;
  node.end = end;
  for (std::size_t i = begin; i < end; ++i) {
    const Rect& r = rects_[order_[i]];
    const double dx = std::max(std::abs(r.x0 - node.cx), std::abs(r.x1 - node.cx));
    const double dy = std::max(std::abs(r.y0 - node.cy), std::abs(r.y1 - node.cy));
    node.radius = std::max(node.radius, std::hypot(dx, dy));
  }
  const int id = static_cast<int>(nodes_.size());
  nodes_.push_back(node);
  if (end - begin <= leaf_size_ || depth > 48 || (x1 - x0 == 0.0 && y1 - y0 == 0.0)) return id;

  auto quad = [&](std::size_t idx) {
    const Rect& r = rects_[idx];
    return (r.cx() > node.cx ? 1 : 0) + (r.cy() > node.cy ? 2 : 0);
  };
  std::stable_sort(order_.begin() + begin, order_.begin() + end,
                   [&](std::size_t a, std::size_t b) { return quad(a) < quad(b); });
  std::size_t start = begin;
  for (int q = 0; q < 4; ++q) {
    std::size_t stop = start;
    while (stop < end && quad(order_[stop]) == q) ++stop;
    if (stop > start) {
      const int c = build(start, stop, depth + 1);
      nodes_[id].child[q] = c;
    }
    start = stop;
  }
  return id;
}

std::vector<Treecode::Moments> Treecode::moments(const Eigen::VectorXd& strength) const {
  std::vector<Moments> out(nodes_.size());
  for (std::size_t n = 0; n < nodes_.size(); ++n) {
    const Node& node = nodes_[n];
    Moments m;
    for (std::size_t i = node.begin; i < node.end; ++i) {
      const Rect& r = rects_[i];
      const double q = strength[static_cast<Eigen::Index>(order_[i])] * r.area();
      const double dx = r.cx() - node.cx;
      const double dy = r.cy() - node.cy;
      m.m0 += q;
      m.m1[0] += q * dx;
      m.m1[1] += q * dy;
      m.m2[0] += q * (dx * dx + r.width() * r.width() / 12.0);
      m.m2[1] += q * dx * dy;
      m.m2[2] += q * (dy * dy + r.height() * r.height() / 12.0);
    }
    out[n] = m;
  }
  return out;
}

namespace {

// A single panel farther than this many diameters uses its own expansion.
constexpr double kPanelFar = 4.0;

// Value and gradient of M0 f - M1_a f_a + 1/2 M2_ab f_ab with f = 1/|r|.
inline void far_field(const double m0, const double* m1, const double* m2, const Vec3& r, double& value,
                      Vec3& grad) {
  const double r2 = r.squaredNorm();
  const double inv = 1.0 / std::sqrt(r2);
  const double inv3 = inv * inv * inv;
  const double inv5 = inv3 * inv * inv;
  const double inv7 = inv5 * inv * inv;
  const double M[3][3] = {{m2[0], m2[1], 0.0}, {m2[1], m2[2], 0.0}, {0.0, 0.0, 0.0}};
  const double d[3] = {m1[0], m1[1], 0.0};

  double v = m0 * inv;
  double m1r = d[0] * r[0] + d[1] * r[1];
  v += m1r * inv3;  // -M1_a f_a
  double rMr = 0.0, trM = M[0][0] + M[1][1];
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b) rMr += M[a][b] * r[a] * r[b];
  v += 0.5 * (3.0 * rMr * inv5 - trM * inv3);
  value += v;

  for (int i = 0; i < 3; ++i) {
    double g = -m0 * r[i] * inv3;
    // -M1_a f_ia
    g -= 3.0 * m1r * r[i] * inv5 - d[i] * inv3;
    // 1/2 M2_ab f_iab
    double Mr_i = M[i][0] * r[0] + M[i][1] * r[1];
    g += 0.5 * (-15.0 * rMr * r[i] * inv7 + 3.0 * (trM * r[i] + 2.0 * Mr_i) * inv5);
    grad[i] += g;
  }
}

}  // namespace

std::vector<CombinedSample> Treecode::evaluate(const std::vector<Vec3>& points, const Eigen::VectorXd& rf_strength,
                                               const Eigen::VectorXd& dc_strength) const {
  std::vector<CombinedSample> out(points.size());
  if (nodes_.empty()) return out;
  for (const auto& p : points) {
    if (!(p.z() > 0.0)) throw TrapError(ErrorCode::OutsideDomain, "field point must lie above the electrode plane");
  }
  const auto mr = moments(rf_strength);
  const auto md = moments(dc_strength);
  std::vector<double> rf_s(rects_.size()), dc_s(rects_.size());
  for (std::size_t i = 0; i < rects_.size(); ++i) {
    rf_s[i] = rf_strength[static_cast<Eigen::Index>(order_[i])];
    dc_s[i] = dc_strength[static_cast<Eigen::Index>(order_[i])];
  }

  parallel_for(points.size(), [&](std::size_t b, std::size_t e) {
    std::vector<int> stack;
    for (std::size_t k = b; k < e; ++k) {
      const Vec3& p = points[k];
      CombinedSample s;
      stack.assign(1, 0);
      while (!stack.empty()) {
        const Node& node = nodes_[static_cast<std::size_t>(stack.back())];
        const int id = stack.back();
        stack.pop_back();
        const Vec3 r(p.x() - node.cx, p.y() - node.cy, p.z());
        if (node.radius < theta_ * r.norm()) {
          const auto& a = mr[static_cast<std::size_t>(id)];
          const auto& c = md[static_cast<std::size_t>(id)];
          far_field(a.m0, a.m1, a.m2, r, s.rf_value, s.rf_grad);
          far_field(c.m0, c.m1, c.m2, r, s.dc_value, s.dc_grad);
        } else if (node.leaf()) {
          for (std::size_t i = node.begin; i < node.end; ++i) {
            const Rect& rc = rects_[i];
            const Vec3 d(p.x() - rc.cx(), p.y() - rc.cy(), p.z());
            const double diam = rc.diameter();
            if (d.squaredNorm() > kPanelFar * kPanelFar * diam * diam) {
              const double a = rc.area();
              const double m1[2] = {0.0, 0.0};
              const double m2r[3] = {rf_s[i] * a * rc.width() * rc.width() / 12.0, 0.0,
                                     rf_s[i] * a * rc.height() * rc.height() / 12.0};
              const double m2d[3] = {dc_s[i] * a * rc.width() * rc.width() / 12.0, 0.0,
                                     dc_s[i] * a * rc.height() * rc.height() / 12.0};
              far_field(rf_s[i] * a, m1, m2r, d, s.rf_value, s.rf_grad);
              far_field(dc_s[i] * a, m1, m2d, d, s.dc_value, s.dc_grad);
              continue;
            }
            PotentialJet j;
            kernel::single_layer(rc, p, 1, 1.0, j);
            s.rf_value += rf_s[i] * j.value;
            s.rf_grad += rf_s[i] * j.grad;
            s.dc_value += dc_s[i] * j.value;
            s.dc_grad += dc_s[i] * j.grad;
          }
        } else {
          for (int c : node.child)
            if (c >= 0) stack.push_back(c);
        }
      }
      out[k] = s;
    }
  });
  return out;
}

}  // namespace ptrap
