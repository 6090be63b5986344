#include <doctest.h>

#include <cmath>
#include <random>

#include "ptrap/bem.hpp"
#include "ptrap/compensation.hpp"
#include "ptrap/constants.hpp"
#include "ptrap/errors.hpp"
#include "ptrap/geometry.hpp"
#include "ptrap/mathieu.hpp"
#include "ptrap/mesh.hpp"
#include "ptrap/pseudopotential.hpp"
#include "support.hpp"

using namespace ptrap;
using testing::GaplessSource;
using testing::QuadrupoleSource;
using testing::UniformSource;

namespace {

constexpr double kE = 1.602176634e-19;
constexpr double kAmu = 1.66053906660e-27;
constexpr double kPi = 3.14159265358979323846;

DriveParams drive_on(std::vector<std::string> rf, double v = 125.0, double f = 87e6) {
  DriveParams d;
  d.v_rf = v;
  d.omega_rf = 2.0 * kPi * f;
  d.rf_electrodes = std::move(rf);
  return d;
}

// Two long gapless RF rails beside a grounded centre strip of width c.
GaplessSource rails(double c, double a, double b, double length = 4e6) {
  const double L = length / 2;
  return GaplessSource({"A", "B"},
                       {{Rect{-L, L, -c / 2 - a, -c / 2}}, {Rect{-L, L, c / 2, c / 2 + b}}},
                       Box3{Vec3(-20, -40, 5), Vec3(20, 40, 120)});
}

const BasisSolution& reference_basis() {
  static const BasisSolution b = solve_basis(mesh_layout(build_reference_layout({}), 24.0, 2.0));
  return b;
}

VoltageSet operating_voltages() {
  VoltageSet v;
  v.control = {{"1", 0.32}, {"2", 0.72}, {"3", 0.74}, {"4", -0.90}, {"5", 1.00}};
  return v;
}

}  // namespace

TEST_CASE("pseudopotential of a uniform 1e6 V/m field for Mg+ at 87 MHz") {
  const UniformSource src(1.0);  // 1 V/um = 1e6 V/m at 1 V
  const DriveParams d = drive_on({"rf"}, 1.0);
  const IonSpecies mg{24.0, 1};
  const double m = 24.0 * kAmu;
  const double oracle = kE * kE * 1e12 / (4.0 * m * d.omega_rf * d.omega_rf) / kE;
  const auto [u, g] = pseudo_at(src, d, mg, Vec3(0, 0, 2));
  CHECK(u == doctest::Approx(oracle).epsilon(1e-12));
  CHECK(u == doctest::Approx(3.36).epsilon(0.01 / 3.36));
  CHECK(g.norm() == 0.0);
  const auto [u2, g2] = pseudo_at(src, drive_on({"rf"}, 2.0), mg, Vec3(0, 0, 2));
  CHECK(u2 == doctest::Approx(4.0 * u).epsilon(1e-14));
}

TEST_CASE("RF null of long gapless rails sits at the closed-form height") {
  // For rails [c/2, c/2 + a] and mirror, dV/dz vanishes above the centre at
  // z^2 = (c/2)(c/2 + a). Finite rails shift this by ~(h/L)^2.
  const double c = 40.0, a = 40.0;
  const auto src = rails(c, a, a);
  const DriveParams d = drive_on({"A", "B"});
  const Vec3 null = find_rf_null(src, d, src.default_search_box());
  CHECK(null.z() == doctest::Approx(std::sqrt(c / 2 * (c / 2 + a))).epsilon(1e-6));
  CHECK(std::abs(null.y()) < 1e-6);
  const EnergyModel m(src, d, IonSpecies{});
  CHECK(m.rf_jet(null, 1).grad.norm() * d.v_rf * 1e6 <= 1.0);
  CHECK(m.pseudo(null, 0).value == doctest::Approx(0.0));

  // Scaling the amplitude does not move the null.
  const Vec3 scaled = find_rf_null(src, drive_on({"A", "B"}, 250.0), src.default_search_box());
  CHECK((scaled - null).norm() <= 1e-3);
}

TEST_CASE("radial curvature at a rail null matches the strip closed form") {
  const double c = 40.0, a = 40.0;
  const auto src = rails(c, a, a);
  const DriveParams d = drive_on({"A", "B"});
  const IonSpecies mg{24.0, 1};
  const Vec3 null = find_rf_null(src, d, src.default_search_box());
  // d2V/dz2 of the two strips at the null, from the closed form by central
  // differences.
  auto v = [&](double z) {
    return testing::strip_potential(-c / 2 - a, -c / 2, 0.0, z) + testing::strip_potential(c / 2, c / 2 + a, 0.0, z);
  };
  const double h = 1e-3, z0 = null.z();
  const double kappa = std::abs(v(z0 + h) - 2 * v(z0) + v(z0 - h)) / (h * h) * 1e12;  // V/m^2 per volt
  const double m = 24.0 * kAmu;
  const double omega = kE * d.v_rf * kappa / (std::sqrt(2.0) * m * d.omega_rf);
  const EnergyModel model(src, d, mg);
  Eigen::SelfAdjointEigenSolver<Mat3> es(model.pseudo(null, 2).hess);
  for (int i = 1; i < 3; ++i) {
    CHECK(angular_frequency_from_curvature(es.eigenvalues()[i], m) == doctest::Approx(omega).epsilon(1e-4));
  }
}

TEST_CASE("pseudopotential gradient matches finite differences") {
  const auto src = rails(40.0, 40.0, 30.0, 400.0);
  const EnergyModel m(src, drive_on({"A", "B"}), IonSpecies{});
  std::mt19937 rng(2);
  std::uniform_real_distribution<double> ux(-100, 100), uy(-60, 60), uz(10, 100);
  const double h = 0.01;
  for (int i = 0; i < 100; ++i) {
    const Vec3 p(ux(rng), uy(rng), uz(rng));
    const EnergyJet j = m.pseudo(p, 1);
    CHECK(j.value >= 0.0);
    for (int c = 0; c < 3; ++c) {
      Vec3 d = Vec3::Zero();
      d[c] = h;
      const double fd = (m.pseudo(p + d, 0).value - m.pseudo(p - d, 0).value) / (2 * h);
      CHECK(std::abs(j.grad[c] - fd) <= 1e-5 * j.grad.norm() + 1e-15);
    }
  }
}

TEST_CASE("total energy superposition") {
  const auto& b = reference_basis();
  const DriveParams d = drive_on({"RF_A", "RF_B"});
  const IonSpecies mg{24.0, 1};
  const Vec3 p(5.0, 3.0, 45.0);
  const double pseudo = pseudo_at(b, d, mg, p).first;
  CHECK(total_at(b, d, mg, VoltageSet{}, p) == doctest::Approx(pseudo).epsilon(1e-14));
  VoltageSet v = operating_voltages(), neg = v;
  for (auto& [k, x] : neg.control) x = -x;
  const double s_pos = total_at(b, d, mg, v, p) - pseudo;
  const double s_neg = total_at(b, d, mg, neg, p) - pseudo;
  CHECK(s_neg == doctest::Approx(-s_pos).epsilon(1e-12));
  VoltageSet bad;
  bad.control["9"] = 1.0;
  CHECK_THROWS_AS(total_at(b, d, mg, bad, p), TrapError);
}

TEST_CASE("ideal 3D RF quadrupole: secular frequency is q Omega / (2 sqrt 2)") {
  const double k = 2e-4;  // V/um^2 per volt
  const QuadrupoleSource src(50.0, Vec3(k, k, -2 * k), Vec3::Zero());
  const DriveParams d = drive_on({"rf"}, 10.0, 40e6);
  const IonSpecies mg{24.0, 1};
  CharacterizeOptions o;
  o.compute_depth = false;
  const TrapReport r = characterize_trap(src, d, mg, VoltageSet{}, o);
  const double m = 24.0 * kAmu;
  for (std::size_t i = 0; i < 3; ++i) {
    const double curv = std::abs(r.principal_axes[i].dot(Vec3(k, k, -2 * k).cwiseProduct(r.principal_axes[i])));
    const double q = 2.0 * kE * d.v_rf * curv * 1e12 / (m * d.omega_rf * d.omega_rf);
    CHECK(r.mathieu_q[i] == doctest::Approx(q).epsilon(1e-12));
    CHECK(r.mathieu_a[i] == 0.0);
    CHECK(2.0 * kPi * r.secular_freqs[i] == doctest::Approx(q * d.omega_rf / (2.0 * std::sqrt(2.0))).epsilon(1e-6));
  }
  CHECK((r.minimum - Vec3(0, 0, 50)).norm() < 1e-6);
  CHECK(r.secular_freqs[0] <= r.secular_freqs[1]);
  CHECK(r.secular_freqs[1] <= r.secular_freqs[2]);
  CHECK(r.stable);
}

TEST_CASE("linear quadrupole with static curvature: w^2 = (a + q^2/2) Omega^2 / 4") {
  const double k = 3e-4, s = 1e-5;
  const QuadrupoleSource src(40.0, Vec3(0, k, -k), Vec3(s, -s / 2, -s / 2));
  const DriveParams d = drive_on({"rf"}, 15.0, 40e6);
  VoltageSet v;
  v.control["dc"] = 1.0;
  CharacterizeOptions o;
  o.compute_depth = true;
  o.depth.spacing = 1.0;
  const TrapReport r = characterize_trap(src, d, IonSpecies{24.0, 1}, v, o);
  for (std::size_t i = 0; i < 3; ++i) {
    const double w = 2.0 * kPi * r.secular_freqs[i];
    const double expect = std::sqrt(r.mathieu_a[i] + 0.5 * r.mathieu_q[i] * r.mathieu_q[i]) * d.omega_rf / 2.0;
    CHECK(w == doctest::Approx(expect).epsilon(1e-9));
  }
  CHECK(r.axial_index == 0);
  CHECK(std::abs(r.principal_axes[0].x()) == doctest::Approx(1.0));
  // The well never closes, so the depth search reports a lower bound.
  CHECK(r.depth_lower_bound);
  CHECK(r.depth >= 0.0);
}

TEST_CASE("no static axial confinement is not a trap") {
  const QuadrupoleSource src(40.0, Vec3(0, 3e-4, -3e-4), Vec3::Zero());
  CharacterizeOptions o;
  o.compute_depth = false;
  CHECK_THROWS_AS(characterize_trap(src, drive_on({"rf"}), IonSpecies{}, VoltageSet{}, o), TrapError);
}

TEST_CASE("stability flags agree with Floquet integration across the q = 0.908 edge") {
  // q_y = 0.0381 per RF volt here, so 15..30 V straddles the edge.
  const double k = 3e-4;
  int stable = 0, unstable = 0;
  for (double s : {5e-6, 2e-5, 5e-5}) {
    for (double v : {15.0, 20.0, 23.0, 24.0, 25.0, 30.0}) {
      const QuadrupoleSource src(40.0, Vec3(0, k, -k), Vec3(2 * s, -s, -s));
      VoltageSet vs;
      vs.control["dc"] = 1.0;
      CharacterizeOptions o;
      o.compute_depth = false;
      const TrapReport r = characterize_trap(src, drive_on({"rf"}, v, 40e6), IonSpecies{24.0, 1}, vs, o);
      bool floquet = true;
      for (std::size_t i = 0; i < 3; ++i) floquet = floquet && mathieu::floquet_stable(r.mathieu_a[i], r.mathieu_q[i]);
      CHECK(r.stable == floquet);
      (floquet ? stable : unstable) += 1;
    }
  }
  CHECK(stable > 0);
  CHECK(unstable > 0);
}

TEST_CASE("laser overlap projections") {
  TrapReport r;
  const double c = std::sqrt(0.5);
  r.principal_axes = {Vec3(1, 0, 0), Vec3(0, c, c), Vec3(0, -c, c)};
  const Vec3 beam(c, c, 0.0);
  const LaserOverlap lo = laser_overlap_check(r, beam);
  CHECK(lo.projections[0] == doctest::Approx(c));
  CHECK(lo.projections[1] == doctest::Approx(0.5));
  CHECK(lo.projections[2] == doctest::Approx(0.5));
  CHECK(lo.pass);
  CHECK_FALSE(laser_overlap_check(r, Vec3(1, 0, 0)).pass);
  CHECK_THROWS_AS(laser_overlap_check(r, Vec3(c, 0, 0)), TrapError);
  CHECK_THROWS_AS(laser_overlap_check(r, Vec3(std::sqrt(0.75), 0, 0.5)), TrapError);
  CHECK_NOTHROW(laser_overlap_check(r, Vec3(std::sqrt(0.75), 0, 0.5), 0.1, true));
}

TEST_CASE("reference layout at the operating point") {
  const auto& b = reference_basis();
  const DriveParams d = drive_on({"RF_A", "RF_B"});
  const TrapReport r = characterize_trap(b, d, IonSpecies{24.0, 1}, operating_voltages());
  CHECK(r.rf_null.z() == doctest::Approx(40.0).epsilon(0.2));
  CHECK(r.rf_null_field <= 1.0);
  CHECK(r.depth >= 0.1);
  CHECK(r.depth <= 0.4);
  CHECK_FALSE(r.depth_lower_bound);
  CHECK(r.stable);
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t j = 0; j < 3; ++j) {
      CHECK(std::abs(r.principal_axes[i].dot(r.principal_axes[j]) - (i == j ? 1.0 : 0.0)) < 1e-10);
    }
  }
  // The barrier is where the escape point says it is.
  const double barrier = total_at(b, d, IonSpecies{24.0, 1}, operating_voltages(), r.escape_point);
  CHECK(barrier - r.energy_at_minimum == doctest::Approx(r.depth).epsilon(1e-9));
}

TEST_CASE("radial frequencies scale with drive amplitude and inversely with drive frequency") {
  // Compensated voltages keep the ion on the RF null, where the radial
  // confinement is dominated by the pseudopotential.
  const auto& b = reference_basis();
  CharacterizeOptions o;
  o.compute_depth = false;
  const IonSpecies mg{24.0, 1};
  ConstraintSpec spec;
  spec.null_point = find_rf_null(b, drive_on({"RF_A", "RF_B"}), b.default_search_box());
  spec.target_axial_curvature = curvature_for_frequency(760e3, mg);
  spec.control_electrodes = {"1", "2", "3", "4", "5"};
  const VoltageSet v = solve_voltages(build_constraint_system(b, spec)).voltages;
  const TrapReport base = characterize_trap(b, drive_on({"RF_A", "RF_B"}), mg, v, o);
  for (double f : {0.9, 1.1}) {
    const TrapReport rv = characterize_trap(b, drive_on({"RF_A", "RF_B"}, 125.0 * f), mg, v, o);
    const TrapReport rw = characterize_trap(b, drive_on({"RF_A", "RF_B"}, 125.0, 87e6 * f), mg, v, o);
    for (std::size_t i = 1; i < 3; ++i) {
      CHECK(rv.secular_freqs[i] / base.secular_freqs[i] == doctest::Approx(f).epsilon(0.01));
      CHECK(rw.secular_freqs[i] / base.secular_freqs[i] == doctest::Approx(1.0 / f).epsilon(0.01));
    }
  }
}

TEST_CASE("trap figures are invariant under rigid translation of the layout") {
  const IonSpecies mg{24.0, 1};
  const DriveParams d = drive_on({"RF_A", "RF_B"});
  TrapLayout moved = build_reference_layout({});
  const double tx = 64.0, ty = -32.0;
  for (auto& e : moved.electrodes)
    for (auto& poly : e.shape)
      for (auto& v : poly.vertices) {
        v.x += tx;
        v.y += ty;
      }
  const BasisSolution bm = solve_basis(mesh_layout(moved, 24.0, 2.0));
  const TrapReport a = characterize_trap(reference_basis(), d, mg, operating_voltages());
  const TrapReport r = characterize_trap(bm, d, mg, operating_voltages());
  CHECK((r.minimum - a.minimum - Vec3(tx, ty, 0)).norm() < 1e-4);
  for (std::size_t i = 0; i < 3; ++i) CHECK(r.secular_freqs[i] == doctest::Approx(a.secular_freqs[i]).epsilon(1e-6));
  CHECK(r.depth == doctest::Approx(a.depth).epsilon(1e-4));
}
