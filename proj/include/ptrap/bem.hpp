#pragma once

#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ptrap/field_source.hpp"
#include "ptrap/mesh.hpp"

namespace ptrap {

class Treecode;

/// Potential (V), electric field (V/m) and potential Hessian (V/m^2).
struct FieldSample {
  double potential = 0.0;
  Vec3 e_field = Vec3::Zero();
  Mat3 hessian = Mat3::Zero();
};

/// Converts a micrometre-unit jet to SI.
FieldSample to_field_sample(const PotentialJet& jet);

struct SolveOptions {
  /// Pairs closer than this many mean panel diameters use the exact integral;
  /// farther pairs use a centroid expansion with a second-moment correction.
  double near_factor = 4.0;
  double max_residual = 1e-3;
  double min_rcond = 1e-14;
  /// Opening angle of the fast evaluator used by combined().
  double tree_theta = 0.25;
};

/// Per-electrode unit-potential charge densities on a panel mesh. Immutable
/// after solve_basis; safe for concurrent evaluation.
class BasisSolution final : public FieldSource {
 public:
  BasisSolution(PanelMesh mesh, Eigen::MatrixXd strengths, double rcond, double residual, double theta);
  ~BasisSolution() override;
  BasisSolution(BasisSolution&&) noexcept;
  BasisSolution& operator=(BasisSolution&&) noexcept;

  const PanelMesh& mesh() const { return mesh_; }
  const std::vector<std::string>& electrode_names() const override { return names_; }

  /// sigma / (4 pi eps0) per panel (V/um), one column per electrode.
  const Eigen::MatrixXd& strengths() const { return strengths_; }
  /// Surface charge density in C/m^2 per volt on electrode k.
  Eigen::VectorXd charge_density(std::size_t k) const;

  double rcond() const { return rcond_; }
  /// Largest boundary-condition error at collocation points (V).
  double max_residual() const { return residual_; }

  std::vector<PotentialJet> jets(const Vec3& p, int order) const override;
  Box3 default_search_box() const override;
  std::vector<CombinedSample> combined(const std::vector<Vec3>& points, const Eigen::VectorXd& rf_weights,
                                       const Eigen::VectorXd& dc_weights) const override;

  /// Potentials of every basis on the electrode plane (z = 0).
  Eigen::VectorXd on_surface(double x, double y) const;

  /// Diameter of the panel under (x, y), or of the nearest panel.
  double local_panel_size(double x, double y) const;

 private:
  PanelMesh mesh_;
  std::vector<std::string> names_;
  Eigen::MatrixXd strengths_;
  double rcond_;
  double residual_;
  std::unique_ptr<Treecode> tree_;
};

/// Collocation influence matrix: A(i, j) = integral of 1/r over panel j seen
/// from the centroid of panel i (um).
Eigen::MatrixXd influence_matrix(const PanelMesh& mesh, const SolveOptions& options = {});

/// Solves 1 V on each electrode in turn, 0 V on all others and on ground
/// panels. Throws SolveFailed if ill-conditioned or the residual is too large.
BasisSolution solve_basis(const PanelMesh& mesh, const SolveOptions& options = {});

/// Per-electrode field samples at p (um). Throws OutsideDomain for z <= 0 or
/// within 0.1 x the local panel size of the surface.
std::vector<FieldSample> evaluate_basis(const BasisSolution& basis, const Vec3& p);

/// Gapless-plane potential of one rectangle at 1 V in a grounded plane.
/// Throws OutsideDomain for z <= 0.
FieldSample analytic_rect_basis(const Rect& rect, const Vec3& p);

}  // namespace ptrap
