#pragma once

#include <vector>

#include <Eigen/Dense>

#include "ptrap/field_source.hpp"
#include "ptrap/mesh.hpp"

namespace ptrap {

/// Quadtree over coplanar panels. Far clusters are replaced by a monopole,
/// dipole and quadrupole about the cluster centre; near panels use the exact
/// rectangle integral. Opening criterion: cluster radius < theta * distance.
class Treecode {
 public:
  Treecode(const std::vector<Panel>& panels, double theta, std::size_t leaf_size = 8);

  /// Potential and gradient of two panel-strength vectors (V/um per panel,
  /// as in BasisSolution::strengths) at each point; requires z > 0.
  std::vector<CombinedSample> evaluate(const std::vector<Vec3>& points, const Eigen::VectorXd& rf_strength,
                                       const Eigen::VectorXd& dc_strength) const;

  double theta() const { return theta_; }

 private:
  struct Node {
    double cx = 0.0, cy = 0.0, radius = 0.0;
    std::size_t begin = 0, end = 0;
    int child[4] = {-1, -1, -1, -1};
    bool leaf() const { return child[0] < 0 && child[1] < 0 && child[2] < 0 && child[3] < 0; }
  };
  struct Moments {
    double m0 = 0.0;
    double m1[2] = {0.0, 0.0};
    double m2[3] = {0.0, 0.0, 0.0};  // xx, xy, yy
  };

  int build(std::size_t begin, std::size_t end, int depth);
  std::vector<Moments> moments(const Eigen::VectorXd& strength) const;

  std::vector<Rect> rects_;  // in tree order
  std::vector<std::size_t> order_;
  std::vector<Node> nodes_;
  double theta_;
  std::size_t leaf_size_;
};

}  // namespace ptrap
