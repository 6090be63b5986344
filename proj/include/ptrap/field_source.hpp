#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ptrap/rect_kernel.hpp"

namespace ptrap {

/// Axis-aligned box in micrometres.
struct Box3 {
  Vec3 lo = Vec3::Zero();
  Vec3 hi = Vec3::Zero();

  bool contains(const Vec3& p) const {
    return (p.array() >= lo.array()).all() && (p.array() <= hi.array()).all();
  }
  Vec3 center() const { return 0.5 * (lo + hi); }
};

/// Potential and gradient of two weighted electrode combinations at a point,
/// in V and V/um: an RF combination and a static one.
struct CombinedSample {
  double rf_value = 0.0;
  Vec3 rf_grad = Vec3::Zero();
  double dc_value = 0.0;
  Vec3 dc_grad = Vec3::Zero();
};

/// Unit-potential electrode fields above the electrode plane. Jets are in
/// micrometre units: V, V/um, V/um^2, V/um^3.
class FieldSource {
 public:
  virtual ~FieldSource() = default;

  virtual const std::vector<std::string>& electrode_names() const = 0;

  /// One jet per electrode, derivatives up to `order` (<= 3). Throws
  /// TrapError(OutsideDomain) where the field cannot be evaluated.
  virtual std::vector<PotentialJet> jets(const Vec3& p, int order) const = 0;

  /// Region where a trap is searched for when the caller gives none.
  virtual Box3 default_search_box() const = 0;

  /// Weighted sums over electrodes for many points; the default evaluates
  /// jets() exactly. Implementations may approximate for speed.
  virtual std::vector<CombinedSample> combined(const std::vector<Vec3>& points, const Eigen::VectorXd& rf_weights,
                                               const Eigen::VectorXd& dc_weights) const;

  /// Index of an electrode by name, or -1.
  int index_of(const std::string& name) const;
};

}  // namespace ptrap
