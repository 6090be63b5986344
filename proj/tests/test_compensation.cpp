#include <doctest.h>

#include <random>

#include "ptrap/bem.hpp"
#include "ptrap/compensation.hpp"
#include "ptrap/errors.hpp"
#include "ptrap/geometry.hpp"
#include "ptrap/mesh.hpp"
#include "support.hpp"

using namespace ptrap;

namespace {

const BasisSolution& reference_basis() {
  static const BasisSolution b = solve_basis(mesh_layout(build_reference_layout({}), 24.0, 2.0));
  return b;
}

DriveParams drive() {
  DriveParams d;
  d.rf_electrodes = {"RF_A", "RF_B"};
  return d;
}

const Vec3& reference_null() {
  static const Vec3 p = find_rf_null(reference_basis(), drive(), reference_basis().default_search_box());
  return p;
}

ConstraintSpec five_electrode_spec() {
  ConstraintSpec s;
  s.null_point = reference_null();
  s.target_axial_curvature = curvature_for_frequency(760e3, IonSpecies{24.0, 1});
  s.control_electrodes = {"1", "2", "3", "4", "5"};
  return s;
}

ConstraintSystem synthetic(Eigen::MatrixXd a, Eigen::VectorXd b) {
  ConstraintSystem s;
  s.weights = Eigen::VectorXd::Ones(a.rows());
  for (Eigen::Index j = 0; j < a.cols(); ++j) s.unknowns.push_back("u" + std::to_string(j));
  for (Eigen::Index i = 0; i < a.rows(); ++i) s.row_labels.push_back("r" + std::to_string(i));
  s.a = std::move(a);
  s.b = std::move(b);
  return s;
}

Eigen::VectorXd as_vector(const CompensationResult& r, const std::vector<std::string>& names) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(names.size()));
  for (std::size_t i = 0; i < names.size(); ++i) v[static_cast<Eigen::Index>(i)] = r.voltages.control.at(names[i]);
  return v;
}

}  // namespace

TEST_CASE("identity system returns the right-hand side") {
  Eigen::VectorXd b(3);
  b << 0.3, -1.7, 2.5;
  const CompensationResult r = solve_voltages(synthetic(Eigen::MatrixXd::Identity(3, 3), b));
  CHECK(as_vector(r, {"u0", "u1", "u2"}).isApprox(b, 1e-15));
  CHECK(r.rank == 3);
  CHECK(r.null_space_dim == 0);
}

TEST_CASE("inconsistent system reports a residual instead of failing") {
  Eigen::MatrixXd a(2, 1);
  a << 1.0, 1.0;
  Eigen::VectorXd b(2);
  b << 0.0, 1.0;
  const CompensationResult r = solve_voltages(synthetic(a, b));
  CHECK(r.voltages.control.at("u0") == doctest::Approx(0.5));
  CHECK(r.residual.norm() == doctest::Approx(std::sqrt(0.5)));
}

TEST_CASE("all-zero matrix is degenerate") {
  try {
    solve_voltages(synthetic(Eigen::MatrixXd::Zero(2, 2), Eigen::VectorXd::Ones(2)));
    FAIL("expected DegenerateSystem");
  } catch (const TrapError& e) {
    CHECK(e.code() == ErrorCode::DegenerateSystem);
  }
}

TEST_CASE("five control electrodes give a 4 x 5 system") {
  const ConstraintSystem s = build_constraint_system(reference_basis(), five_electrode_spec());
  CHECK(s.a.rows() == 4);
  CHECK(s.a.cols() == 5);
  ConstraintSpec zero = five_electrode_spec();
  zero.target_axial_curvature = 0.0;
  CHECK(build_constraint_system(reference_basis(), zero).b.isZero(0.0));
}

TEST_CASE("minimum-norm solution beats 1000 random null-space perturbations") {
  const ConstraintSystem s = build_constraint_system(reference_basis(), five_electrode_spec());
  const CompensationResult r = solve_voltages(s);
  CHECK(r.rank == 4);
  CHECK(r.null_space_dim == 1);
  CHECK(r.residual.cwiseAbs().maxCoeff() <= 1e-8);
  const Eigen::VectorXd v = as_vector(r, s.unknowns);

  // Null space from an LU factorisation, independent of the SVD solver.
  const Eigen::MatrixXd kernel = Eigen::FullPivLU<Eigen::MatrixXd>(s.a).kernel();
  REQUIRE(kernel.cols() == 1);
  std::mt19937 rng(1234);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int i = 0; i < 1000; ++i) {
    const Eigen::VectorXd t = kernel * n(rng);
    const Eigen::VectorXd w = v + t;
    const double change = (s.a * w - s.a * v).norm();
    CHECK(change <= 1e-10 * s.a.norm() * t.norm());
    CHECK(v.norm() < w.norm());
  }
}

TEST_CASE("forward diagnostics reproduce the targets") {
  const ConstraintSpec spec = five_electrode_spec();
  const CompensationResult r = solve_voltages(build_constraint_system(reference_basis(), spec));
  const StaticDiagnostics d =
      residual_diagnostics(reference_basis(), drive(), IonSpecies{24.0, 1}, r.voltages, spec.null_point);
  CHECK(d.axial_curvature == doctest::Approx(*spec.target_axial_curvature).epsilon(1e-8));
  CHECK(d.axial_frequency == doctest::Approx(760e3).epsilon(1e-8));
  CHECK(d.static_field.norm() <= 1e-8 * *spec.target_axial_curvature * 1e-6);
  CHECK_FALSE(d.imaginary);
}

TEST_CASE("diagnostics are linear in the voltages") {
  const auto& b = reference_basis();
  const IonSpecies mg{24.0, 1};
  const StaticDiagnostics zero = residual_diagnostics(b, drive(), mg, VoltageSet{}, reference_null());
  CHECK(zero.static_field.norm() == 0.0);
  CHECK(zero.axial_curvature == 0.0);
  VoltageSet v;
  v.control = {{"1", 0.32}, {"2", 0.72}, {"3", 0.74}, {"4", -0.90}, {"5", 1.00}};
  VoltageSet v3 = v, vn = v;
  for (auto& [k, x] : v3.control) x *= 3.0;
  for (auto& [k, x] : vn.control) x = -x;
  const auto d1 = residual_diagnostics(b, drive(), mg, v, reference_null());
  const auto d3 = residual_diagnostics(b, drive(), mg, v3, reference_null());
  CHECK(d3.axial_curvature == doctest::Approx(3.0 * d1.axial_curvature).epsilon(1e-12));
  CHECK((d3.static_field - 3.0 * d1.static_field).norm() <= 1e-12 * d3.static_field.norm());
  // Flipping the sign of a confining curvature makes the frequency imaginary.
  const auto dn = residual_diagnostics(b, drive(), mg, vn, reference_null());
  CHECK(d1.imaginary != dn.imaginary);
}

TEST_CASE("operating-point voltages imply an axial frequency within a factor of two of 760 kHz") {
  VoltageSet v;
  v.control = {{"1", 0.32}, {"2", 0.72}, {"3", 0.74}, {"4", -0.90}, {"5", 1.00}};
  const auto d = residual_diagnostics(reference_basis(), drive(), IonSpecies{24.0, 1}, v, reference_null());
  CHECK_FALSE(d.imaginary);
  CHECK(d.axial_frequency >= 380e3);
  CHECK(d.axial_frequency <= 1520e3);
}

TEST_CASE("column order does not change the solution") {
  ConstraintSpec a = five_electrode_spec();
  ConstraintSpec b = a;
  b.control_electrodes = {"4", "2", "5", "1", "3"};
  const auto ra = solve_voltages(build_constraint_system(reference_basis(), a));
  const auto rb = solve_voltages(build_constraint_system(reference_basis(), b));
  for (const auto& [name, v] : ra.voltages.control) {
    CHECK(rb.voltages.control.at(name) == doctest::Approx(v).epsilon(1e-10));
  }
}

TEST_CASE("duplicated probe rows are reported as rank deficiency") {
  ConstraintSpec s = five_electrode_spec();
  s.probes.push_back({s.null_point, Vec3::Zero()});
  const ConstraintSystem sys = build_constraint_system(reference_basis(), s);
  CHECK(sys.a.rows() == 7);
  const CompensationResult r = solve_voltages(sys);
  CHECK(r.rank == 4);
  CHECK(r.null_space_dim == 1);
  CHECK(static_cast<int>(r.residual.size()) == 7);
}

TEST_CASE("locked electrodes move to the right-hand side") {
  ConstraintSpec s = five_electrode_spec();
  s.control_electrodes = {"4", "5"};
  s.locked_voltages = {{"1", -0.8}, {"2", 0.0}, {"3", -0.6}};
  s.target_axial_curvature.reset();
  const ConstraintSystem sys = build_constraint_system(reference_basis(), s);
  CHECK(sys.a.cols() == 2);
  CHECK(sys.a.rows() == 3);
  const CompensationResult r = solve_voltages(sys);
  CHECK(r.voltages.control.size() == 5);
  CHECK(r.voltages.control.at("1") == -0.8);
  CHECK(r.rank + r.null_space_dim == 2);
}

TEST_CASE("constraint errors and warnings") {
  ConstraintSpec s = five_electrode_spec();
  s.null_point = Vec3(0, 0, -1);
  CHECK_THROWS_AS(build_constraint_system(reference_basis(), s), TrapError);
  s = five_electrode_spec();
  s.control_electrodes = {"1", "nope"};
  CHECK_THROWS_AS(build_constraint_system(reference_basis(), s), TrapError);
  s = five_electrode_spec();
  s.weights = {1.0, -1.0, 1.0, 1.0};
  CHECK_THROWS_AS(build_constraint_system(reference_basis(), s), TrapError);

  Eigen::MatrixXd a = Eigen::MatrixXd::Identity(1, 1);
  Eigen::VectorXd b(1);
  b << 50.0;
  CHECK_FALSE(solve_voltages(synthetic(a, b)).warnings.empty());
}
