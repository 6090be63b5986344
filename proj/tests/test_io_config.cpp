#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "ptrap/config.hpp"
#include "ptrap/errors.hpp"
#include "ptrap/report_io.hpp"
#include "support.hpp"

using namespace ptrap;

namespace {

ErrorCode config_error(const std::string& text, const std::vector<std::string>& overrides = {}) {
  const auto dir = testing::scratch_dir("config_error");
  write_file_atomic(dir / "run.json", text);
  try {
    parse_config(dir / "run.json", overrides);
  } catch (const TrapError& e) {
    return e.code();
  }
  FAIL("expected a config error for " << text);
  return ErrorCode::InvalidParams;
}

bool same9(double a, double b) { return round9(a) == round9(b); }

}  // namespace

TEST_CASE("nine-digit formatting") {
  CHECK(format9(0.1) == "0.1");
  CHECK(format9(1.0 / 3.0) == "0.333333333");
  CHECK(format9(-2.5e-12) == "-2.5e-12");
  CHECK(round9(123456789.123) == 123456789.0);
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> u(-1e6, 1e6);
  for (int i = 0; i < 1000; ++i) {
    const double v = u(rng);
    CHECK(std::stod(format9(v)) == round9(v));
    CHECK(round9(round9(v)) == round9(v));
  }
}

TEST_CASE("trap report round trip") {
  TrapReport r;
  r.rf_null = Vec3(1.0 / 3.0, -2e-7, 36.4212345678);
  r.rf_null_field = 12.3456789012;
  r.minimum = Vec3(-10.79, 0.47, 37.42);
  r.ion_height = 37.42;
  r.secular_freqs = {949123.456, 20.07e6, 21.5e6};
  r.principal_axes = {Vec3::UnitX(), Vec3(0, std::sqrt(0.5), std::sqrt(0.5)), Vec3(0, -std::sqrt(0.5), std::sqrt(0.5))};
  r.axis_tilt_deg = {0.0, 45.0, 45.0};
  r.axial_index = 0;
  r.depth = 0.184434;
  r.depth_lower_bound = true;
  r.escape_point = Vec3(-8.56, 4.05, 63.94);
  r.energy_at_minimum = 1e-3;
  r.mathieu_q = {0.01, 0.53, 0.55};
  r.mathieu_a = {-1e-4, 2e-4, 3e-5};
  r.stable = true;
  const nlohmann::json j = report_to_json(r);
  CHECK(j.contains("ion_height"));
  const TrapReport back = report_from_json(nlohmann::json::parse(j.dump()));
  for (int i = 0; i < 3; ++i) {
    CHECK(same9(back.rf_null[i], r.rf_null[i]));
    CHECK(same9(back.minimum[i], r.minimum[i]));
    CHECK(same9(back.escape_point[i], r.escape_point[i]));
    CHECK(same9(back.secular_freqs[static_cast<std::size_t>(i)], r.secular_freqs[static_cast<std::size_t>(i)]));
    CHECK(same9(back.mathieu_q[static_cast<std::size_t>(i)], r.mathieu_q[static_cast<std::size_t>(i)]));
    CHECK(same9(back.mathieu_a[static_cast<std::size_t>(i)], r.mathieu_a[static_cast<std::size_t>(i)]));
  }
  CHECK(same9(back.depth, r.depth));
  CHECK(back.depth_lower_bound);
  CHECK(back.stable);
  CHECK(back.axial_index == 0);
  // A second pass is exact.
  CHECK(report_to_json(back).dump() == j.dump());

  nlohmann::json broken = j;
  broken.erase("depth");
  CHECK_THROWS_AS(report_from_json(broken), TrapError);
}

TEST_CASE("compensation and stability round trips") {
  CompensationResult c;
  c.voltages.control = {{"1", 0.2276123456}, {"4", -0.5412}};
  c.residual = Eigen::Vector2d(2.8e-9, -1e-12);
  c.rank = 2;
  c.singular_values = Eigen::Vector2d(3.0, 0.1);
  c.warnings = {"large voltage"};
  const nlohmann::json j = compensation_to_json(c, {"Ex", "Ey"});
  const CompensationResult b = compensation_from_json(nlohmann::json::parse(j.dump()));
  CHECK(same9(b.voltages.control.at("1"), 0.2276123456));
  CHECK(b.rank == 2);
  CHECK(b.residual.size() == 2);
  CHECK(same9(b.residual[0], 2.8e-9));
  CHECK(b.warnings == c.warnings);
  CHECK(compensation_to_json(b, {"Ex", "Ey"}).dump() == j.dump());

  StabilityReport s;
  s.q = {0.1, 0.5, 0.95};
  s.a = {0.0, -0.01, 0.02};
  s.band_stable = {true, true, false};
  s.floquet_stable = {true, true, false};
  s.stable = false;
  const StabilityReport sb = stability_from_json(nlohmann::json::parse(stability_to_json(s).dump()));
  CHECK(sb.q == s.q);
  CHECK(sb.band_stable == s.band_stable);
  CHECK(sb.floquet_stable == s.floquet_stable);
  CHECK_FALSE(sb.stable);
}

TEST_CASE("field map CSV round trip and ordering") {
  const testing::QuadrupoleSource src(40.0, Vec3(1e-3, 1e-3, -2e-3), Vec3(-1e-4, -1e-4, 2e-4));
  const std::vector<Vec3> pts{{5, 0, 40}, {-5, 1, 41}, {-5, 0, 42}};
  const auto rows = field_map(src, pts);
  REQUIRE(rows.size() == 6);
  CHECK(rows[0].point.x() == -5.0);
  CHECK(rows[0].point.y() == 0.0);
  CHECK(rows[0].electrode == "dc");
  CHECK(rows[1].electrode == "rf");
  std::stringstream ss;
  write_field_map_csv(ss, rows);
  CHECK(ss.str().rfind("x_um,y_um,z_um,electrode,potential_V,Ex,Ey,Ez\n", 0) == 0);
  const auto back = read_field_map_csv(ss);
  REQUIRE(back.size() == rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CHECK(back[i].electrode == rows[i].electrode);
    CHECK(same9(back[i].potential, rows[i].potential));
    for (int c = 0; c < 3; ++c) CHECK(same9(back[i].e_field[c], rows[i].e_field[c]));
  }
  // E = -grad phi, converted from V/um to V/m.
  const auto& rf = rows[1];
  CHECK(rf.e_field.z() == doctest::Approx(2e-3 * (42.0 - 40.0) * 1e6));

  MapChannel sum{"sum", Eigen::Vector2d(2.0, 3.0)};
  const auto mixed = field_map(src, {pts[0]}, {sum});
  REQUIRE(mixed.size() == 1);
  CHECK(mixed[0].potential == doctest::Approx(2.0 * rows[5].potential + 3.0 * rows[4].potential));
  CHECK_THROWS_AS(field_map(src, {pts[0]}, {MapChannel{"bad", Eigen::Vector3d::Ones()}}), TrapError);

  std::stringstream bad("x_um,y_um\n1,2\n");
  CHECK_THROWS_AS(read_field_map_csv(bad), TrapError);
}

TEST_CASE("positions and modes CSV") {
  const IonChain c = equilibrium_positions(IonSpecies{24.0, 1}, AxialPotential::harmonic(760e3), 3);
  std::stringstream p, m;
  write_positions_csv(p, c);
  CHECK(p.str().rfind("ion_index,position_um\n", 0) == 0);
  const auto pos = read_value_column_csv(p);
  REQUIRE(pos.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) CHECK(same9(pos[i], c.positions[i]));
  write_modes_csv(m, normal_modes(c));
  CHECK(m.str().rfind("mode_index,freq_hz\n", 0) == 0);
  CHECK(read_value_column_csv(m)[0] == doctest::Approx(760e3).epsilon(1e-8));
}

TEST_CASE("atomic writes replace whole files") {
  const auto dir = testing::scratch_dir("atomic");
  write_file_atomic(dir / "a.txt", "first version, long");
  write_file_atomic(dir / "a.txt", "second");
  CHECK(testing::read_file(dir / "a.txt") == "second");
  std::size_t entries = 0;
  for ([[maybe_unused]] const auto& e : std::filesystem::directory_iterator(dir)) ++entries;
  CHECK(entries == 1);
  CHECK_THROWS_AS(write_file_atomic(dir / "missing" / "a.txt", "x"), TrapError);
}

TEST_CASE("an empty config yields the defaults") {
  const auto dir = testing::scratch_dir("config_defaults");
  write_file_atomic(dir / "run.json", "{}");
  const RunConfig c = parse_config(dir / "run.json");
  CHECK(c.reference.has_value());
  CHECK(c.max_panel == 24.0);
  CHECK(c.edge_grading == 2.0);
  CHECK(c.map.channels == std::vector<std::string>{"rf"});
  CHECK(c.crystal.ions == 3);
  CHECK(c.crystal.potential == "harmonic");
  CHECK(c.ion.mass == 24.0);
  CHECK(c.ion.charge == 1);
  CHECK(c.output_dir == dir);
}

TEST_CASE("config errors carry their codes") {
  CHECK(config_error(R"({"drive": {"rf_voltge": 125}})") == ErrorCode::UnknownKey);
  CHECK(config_error(R"({"mesh": {"max_panel": -3}})") == ErrorCode::InvalidValue);
  CHECK(config_error(R"({"ion": {"mass_u": "heavy"}})") == ErrorCode::InvalidValue);
  CHECK(config_error(R"({"map": {"channels": []}})") == ErrorCode::InvalidValue);
  CHECK(config_error("{ not json") == ErrorCode::ParseError);
  CHECK(config_error("{}", {"mesh.max_panel"}) == ErrorCode::InvalidValue);
  try {
    parse_config("/nonexistent/run.json");
    FAIL("expected ConfigNotFound");
  } catch (const TrapError& e) {
    CHECK(e.code() == ErrorCode::ConfigNotFound);
  }
  try {
    parse_config_json(nlohmann::json::parse(R"({"drive": {"rf_voltge": 125}})"), ".");
  } catch (const TrapError& e) {
    CHECK(std::string(e.what()).find("rf_voltge") != std::string::npos);
  }
}

TEST_CASE("overrides edit nested keys") {
  nlohmann::json j = nlohmann::json::object();
  apply_override(j, "mesh.max_panel=12");
  apply_override(j, "crystal.potential=sampled");
  apply_override(j, "drive.rf_electrodes=[\"RF_A\"]");
  CHECK(j["mesh"]["max_panel"] == 12);
  CHECK(j["crystal"]["potential"] == "sampled");
  CHECK(j["drive"]["rf_electrodes"].size() == 1);
  const RunConfig c = parse_config_json(nlohmann::json::object(), ".", {"mesh.max_panel=12", "crystal.ions=5"});
  CHECK(c.max_panel == 12.0);
  CHECK(c.crystal.ions == 5);
}
