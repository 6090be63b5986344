#pragma once

// Field sources with closed-form fields, used as oracles for the solver and
// the trap analysis.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "ptrap/bem.hpp"
#include "ptrap/field_source.hpp"
#include "ptrap/rect_kernel.hpp"

namespace testing {

using ptrap::Box3;
using ptrap::PotentialJet;
using ptrap::Rect;
using ptrap::Vec3;

// Electrodes made of rectangles in an otherwise grounded, gapless plane. The
// potential is the exact solid-angle expression; third derivatives come from
// central differences of the analytic Hessian.
class GaplessSource final : public ptrap::FieldSource {
 public:
  GaplessSource(std::vector<std::string> names, std::vector<std::vector<Rect>> shapes, Box3 box)
      : names_(std::move(names)), shapes_(std::move(shapes)), box_(box) {}

  const std::vector<std::string>& electrode_names() const override { return names_; }
  Box3 default_search_box() const override { return box_; }

  std::vector<PotentialJet> jets(const Vec3& p, int order) const override {
    std::vector<PotentialJet> out(names_.size());
    for (std::size_t k = 0; k < names_.size(); ++k) {
      for (const Rect& r : shapes_[k]) {
        out[k].add_scaled(ptrap::kernel::solid_angle_potential(r, p, std::min(order, 2)), 1.0, std::min(order, 2));
      }
      if (order >= 3) {
        const double h = 1e-3;
        for (int c = 0; c < 3; ++c) {
          Vec3 d = Vec3::Zero();
          d[c] = h;
          Eigen::Matrix3d hp = Eigen::Matrix3d::Zero(), hm = Eigen::Matrix3d::Zero();
          for (const Rect& r : shapes_[k]) {
            hp += ptrap::kernel::solid_angle_potential(r, p + d, 2).hess;
            hm += ptrap::kernel::solid_angle_potential(r, p - d, 2).hess;
          }
          out[k].third[static_cast<std::size_t>(c)] = (hp - hm) / (2.0 * h);
        }
      }
    }
    return out;
  }

 private:
  std::vector<std::string> names_;
  std::vector<std::vector<Rect>> shapes_;
  Box3 box_;
};

// Ideal quadrupole fields centred at (0, 0, h): electrode "rf" has potential
// sum_i rf_i (x_i - c_i)^2 / 2 and "dc" likewise with dc_i (curvatures in
// V/um^2 per volt, each set traceless).
class QuadrupoleSource final : public ptrap::FieldSource {
 public:
  QuadrupoleSource(double h, Vec3 rf, Vec3 dc) : h_(h), rf_(rf), dc_(dc) {}

  const std::vector<std::string>& electrode_names() const override { return names_; }
  Box3 default_search_box() const override {
    return {Vec3(-20.0, -20.0, h_ - 20.0), Vec3(20.0, 20.0, h_ + 20.0)};
  }

  std::vector<PotentialJet> jets(const Vec3& p, int) const override {
    const Vec3 d = p - Vec3(0.0, 0.0, h_);
    std::vector<PotentialJet> out(2);
    for (std::size_t k = 0; k < 2; ++k) {
      const Vec3& c = k == 0 ? rf_ : dc_;
      out[k].value = 0.5 * d.dot(c.cwiseProduct(d));
      out[k].grad = c.cwiseProduct(d);
      out[k].hess = c.asDiagonal();
    }
    return out;
  }

 private:
  double h_;
  Vec3 rf_, dc_;
  std::vector<std::string> names_{"rf", "dc"};
};

// Uniform RF field: electrode "rf" has potential -g z (g in V/um per volt).
class UniformSource final : public ptrap::FieldSource {
 public:
  explicit UniformSource(double g) : g_(g) {}
  const std::vector<std::string>& electrode_names() const override { return names_; }
  Box3 default_search_box() const override { return {Vec3(-1, -1, 1), Vec3(1, 1, 3)}; }
  std::vector<PotentialJet> jets(const Vec3& p, int) const override {
    std::vector<PotentialJet> out(1);
    out[0].value = -g_ * p.z();
    out[0].grad = Vec3(0.0, 0.0, -g_);
    return out;
  }

 private:
  double g_;
  std::vector<std::string> names_{"rf"};
};

// Closed-form potential of an infinite strip y in [y0, y1] at 1 V in a
// grounded plane, at transverse offset y and height z.
inline double strip_potential(double y0, double y1, double y, double z) {
  return (std::atan((y1 - y) / z) - std::atan((y0 - y) / z)) / 3.14159265358979323846;
}

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("ptrap_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace testing
