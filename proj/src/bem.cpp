#include "ptrap/bem.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "ptrap/errors.hpp"
#include "ptrap/parallel.hpp"
#include "ptrap/treecode.hpp"

namespace ptrap {

FieldSample to_field_sample(const PotentialJet& jet) {
  FieldSample s;
  s.potential = jet.value;
  s.e_field = -1e6 * jet.grad;
  s.hessian = 1e12 * jet.hess;
  return s;
}

std::vector<CombinedSample> FieldSource::combined(const std::vector<Vec3>& points, const Eigen::VectorXd& rf_weights,
                                                  const Eigen::VectorXd& dc_weights) const {
  std::vector<CombinedSample> out(points.size());
  parallel_for(points.size(), [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) {
      const auto js = jets(points[i], 1);
      CombinedSample s;
      for (std::size_t k = 0; k < js.size(); ++k) {
        const auto kk = static_cast<Eigen::Index>(k);
        s.rf_value += rf_weights[kk] * js[k].value;
        s.rf_grad += rf_weights[kk] * js[k].grad;
        s.dc_value += dc_weights[kk] * js[k].value;
        s.dc_grad += dc_weights[kk] * js[k].grad;
      }
      out[i] = s;
    }
  });
  return out;
}

int FieldSource::index_of(const std::string& name) const {
  const auto& names = electrode_names();
  for (std::size_t i = 0; i < names.size(); ++i)
    if (names[i] == name) return static_cast<int>(i);
  return -1;
}

namespace {

double influence(const Panel& src, const Panel& tgt, double near_factor) {
  const double dx = tgt.rect.cx() - src.rect.cx();
  const double dy = tgt.rect.cy() - src.rect.cy();
  const double r2 = dx * dx + dy * dy;
  const double lim = near_factor * 0.5 * (src.diameter() + tgt.diameter());
  if (r2 < lim * lim) return kernel::single_layer_value(src.rect, Vec3(tgt.rect.cx(), tgt.rect.cy(), 0.0));
  const double r = std::sqrt(r2);
  const double inv5 = 1.0 / (r2 * r2 * r);
  const double w = src.rect.width(), h = src.rect.height();
  const double a = src.area();
  return a / r + a * (w * w * (3.0 * dx * dx - r2) + h * h * (3.0 * dy * dy - r2)) * inv5 / 24.0;
}

}  // namespace

Eigen::MatrixXd influence_matrix(const PanelMesh& mesh, const SolveOptions& options) {
  const auto n = static_cast<Eigen::Index>(mesh.size());
  Eigen::MatrixXd a(n, n);
  parallel_for(mesh.size(), [&](std::size_t b, std::size_t e) {
    for (std::size_t j = b; j < e; ++j) {
      const Panel& src = mesh.panels[j];
      for (std::size_t i = 0; i < mesh.size(); ++i) {
        a(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
            influence(src, mesh.panels[i], options.near_factor);
      }
    }
  });
  return a;
}

BasisSolution solve_basis(const PanelMesh& mesh, const SolveOptions& options) {
  if (mesh.size() == 0 || mesh.electrode_count == 0) throw TrapError(ErrorCode::SolveFailed, "empty mesh");
  const auto n = static_cast<Eigen::Index>(mesh.size());
  const auto k = static_cast<Eigen::Index>(mesh.electrode_count);
  Eigen::MatrixXd a = influence_matrix(mesh, options);
  Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(n, k);
  for (Eigen::Index e = 0; e < k; ++e) {
    const auto [b, end] = mesh.ranges[static_cast<std::size_t>(e)];
    for (std::size_t i = b; i < end; ++i) rhs(static_cast<Eigen::Index>(i), e) = 1.0;
  }
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(a);
  const double rc = lu.rcond();
  if (!std::isfinite(rc) || rc < options.min_rcond) {
    std::ostringstream msg;
    msg << "influence matrix is ill-conditioned (rcond estimate " << rc << ")";
    throw TrapError(ErrorCode::SolveFailed, msg.str());
  }
  Eigen::MatrixXd x = lu.solve(rhs);
  const double residual = (a * x - rhs).cwiseAbs().maxCoeff();
  if (!std::isfinite(residual) || residual > options.max_residual) {
    std::ostringstream msg;
    msg << "boundary residual " << residual << " V exceeds tolerance (rcond estimate " << rc << ")";
    throw TrapError(ErrorCode::SolveFailed, msg.str());
  }
  return BasisSolution(mesh, std::move(x), rc, residual, options.tree_theta);
}

BasisSolution::BasisSolution(PanelMesh mesh, Eigen::MatrixXd strengths, double rcond, double residual, double theta)
    : mesh_(std::move(mesh)), strengths_(std::move(strengths)), rcond_(rcond), residual_(residual) {
  names_.assign(mesh_.owners.begin(), mesh_.owners.begin() + static_cast<long>(mesh_.electrode_count));
  tree_ = std::make_unique<Treecode>(mesh_.panels, theta);
}

BasisSolution::~BasisSolution() = default;
BasisSolution::BasisSolution(BasisSolution&&) noexcept = default;
BasisSolution& BasisSolution::operator=(BasisSolution&&) noexcept = default;

Eigen::VectorXd BasisSolution::charge_density(std::size_t k) const {
  constexpr double four_pi_eps0 = 4.0 * 3.14159265358979323846 * 8.8541878128e-12;
  return strengths_.col(static_cast<Eigen::Index>(k)) * (four_pi_eps0 * 1e6);
}

double BasisSolution::local_panel_size(double x, double y) const {
  double best = std::numeric_limits<double>::infinity();
  double size = 0.0;
  for (const auto& p : mesh_.panels) {
    const Rect& r = p.rect;
    const double dx = std::max({0.0, r.x0 - x, x - r.x1});
    const double dy = std::max({0.0, r.y0 - y, y - r.y1});
    const double d = std::hypot(dx, dy);
    if (d < best || (d == best && p.diameter() > size)) {
      best = d;
      size = p.diameter();
    }
  }
  return size;
}

std::vector<PotentialJet> BasisSolution::jets(const Vec3& p, int order) const {
  if (!(p.z() > 0.0) || !p.allFinite()) {
    throw TrapError(ErrorCode::OutsideDomain, "field point must lie above the electrode plane (z > 0)");
  }
  const double h = local_panel_size(p.x(), p.y());
  if (p.z() <= 0.1 * h) {
    std::ostringstream msg;
    msg << "field point at z = " << p.z() << " um is inside the near-surface zone (local panel size " << h
        << " um)";
    throw TrapError(ErrorCode::OutsideDomain, msg.str());
  }
  const std::size_t k = mesh_.electrode_count;
  std::vector<PotentialJet> out(k);
  for (std::size_t i = 0; i < mesh_.size(); ++i) {
    PotentialJet j;
    kernel::single_layer(mesh_.panels[i].rect, p, order, 1.0, j);
    for (std::size_t e = 0; e < k; ++e) {
      out[e].add_scaled(j, strengths_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(e)), order);
    }
  }
  return out;
}

Eigen::VectorXd BasisSolution::on_surface(double x, double y) const {
  Eigen::VectorXd v = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(mesh_.electrode_count));
  const Vec3 p(x, y, 0.0);
  for (std::size_t i = 0; i < mesh_.size(); ++i) {
    v += kernel::single_layer_value(mesh_.panels[i].rect, p) * strengths_.row(static_cast<Eigen::Index>(i)).transpose();
  }
  return v;
}

Box3 BasisSolution::default_search_box() const {
  double x0 = INFINITY, x1 = -INFINITY, y0 = INFINITY, y1 = -INFINITY, dmax = 0.0;
  for (std::size_t e = 0; e < mesh_.electrode_count; ++e) {
    for (std::size_t i = mesh_.ranges[e].first; i < mesh_.ranges[e].second; ++i) {
      const Rect& r = mesh_.panels[i].rect;
      x0 = std::min(x0, r.x0);
      x1 = std::max(x1, r.x1);
      y0 = std::min(y0, r.y0);
      y1 = std::max(y1, r.y1);
      dmax = std::max(dmax, r.diameter());
    }
  }
  const double extent = std::max(x1 - x0, y1 - y0);
  Box3 box;
  box.lo = Vec3(x0, y0, 0.2 * dmax);
  box.hi = Vec3(x1, y1, 0.5 * extent);
  return box;
}

std::vector<CombinedSample> BasisSolution::combined(const std::vector<Vec3>& points, const Eigen::VectorXd& rf_weights,
                                                    const Eigen::VectorXd& dc_weights) const {
  const Eigen::VectorXd rf = strengths_ * rf_weights;
  const Eigen::VectorXd dc = strengths_ * dc_weights;
  return tree_->evaluate(points, rf, dc);
}

std::vector<FieldSample> evaluate_basis(const BasisSolution& basis, const Vec3& p) {
  const auto js = basis.jets(p, 2);
  std::vector<FieldSample> out;
  out.reserve(js.size());
  for (const auto& j : js) out.push_back(to_field_sample(j));
  return out;
}

FieldSample analytic_rect_basis(const Rect& rect, const Vec3& p) {
  if (!(p.z() > 0.0)) throw TrapError(ErrorCode::OutsideDomain, "analytic rectangle basis needs z > 0");
  return to_field_sample(kernel::solid_angle_potential(rect, p, 2));
}

}  // namespace ptrap
