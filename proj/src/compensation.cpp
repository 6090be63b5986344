#include "ptrap/compensation.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "ptrap/constants.hpp"
#include "ptrap/errors.hpp"

namespace ptrap {

namespace {

constexpr double kRelativeCutoff = 1e-10;
constexpr double kVoltageWarning = 10.0;

std::vector<PotentialJet> jets_or_throw(const FieldSource& source, const Vec3& p, int order, const char* what) {
  try {
    return source.jets(p, order);
  } catch (const TrapError& e) {
    if (e.code() != ErrorCode::OutsideDomain) throw;
    std::ostringstream msg;
    msg << what << " (" << p.x() << ", " << p.y() << ", " << p.z() << ") um is outside the field domain";
    throw TrapError(ErrorCode::OutsideDomain, msg.str());
  }
}

}  // namespace

double curvature_for_frequency(double freq_hz, const IonSpecies& ion) {
  ion.check();
  if (!(freq_hz > 0.0) || !std::isfinite(freq_hz)) {
    throw TrapError(ErrorCode::InvalidFrequency, "axial frequency must be positive");
  }
  const double w = 2.0 * constants::pi * freq_hz;
  return ion.mass_kg() * w * w / (ion.charge * constants::elementary_charge);
}

ConstraintSystem build_constraint_system(const FieldSource& source, const ConstraintSpec& spec) {
  const auto& names = source.electrode_names();
  for (const auto& [name, v] : spec.locked_voltages) {
    if (source.index_of(name) < 0) throw TrapError(ErrorCode::UnknownElectrode, "unknown electrode '" + name + "'");
    if (!std::isfinite(v)) throw TrapError(ErrorCode::InvalidParams, "locked voltage for '" + name + "' is not finite");
  }

  ConstraintSystem sys;
  sys.locked = spec.locked_voltages;
  const std::vector<std::string>& requested = spec.control_electrodes.empty() ? names : spec.control_electrodes;
  std::set<std::string> seen;
  for (const auto& name : requested) {
    if (source.index_of(name) < 0) throw TrapError(ErrorCode::UnknownElectrode, "unknown electrode '" + name + "'");
    if (!seen.insert(name).second) throw TrapError(ErrorCode::InvalidParams, "electrode '" + name + "' listed twice");
    if (!spec.locked_voltages.count(name)) sys.unknowns.push_back(name);
  }

  const bool curvature = spec.target_axial_curvature.has_value();
  Vec3 axis = spec.axial_direction;
  if (curvature) {
    if (!(axis.norm() > 0.0) || !axis.allFinite()) {
      throw TrapError(ErrorCode::InvalidParams, "axial direction must be a nonzero vector");
    }
    axis.normalize();
  }

  const Eigen::Index rows = 3 + (curvature ? 1 : 0) + 3 * static_cast<Eigen::Index>(spec.probes.size());
  const Eigen::Index cols = static_cast<Eigen::Index>(sys.unknowns.size());
  if (!spec.weights.empty() && static_cast<Eigen::Index>(spec.weights.size()) != rows) {
    std::ostringstream msg;
    msg << "expected " << rows << " weights, got " << spec.weights.size();
    throw TrapError(ErrorCode::InvalidParams, msg.str());
  }
  sys.a = Eigen::MatrixXd::Zero(rows, cols);
  sys.b = Eigen::VectorXd::Zero(rows);
  sys.weights = Eigen::VectorXd::Ones(rows);
  for (Eigen::Index r = 0; r < static_cast<Eigen::Index>(spec.weights.size()); ++r) {
    const double w = spec.weights[static_cast<std::size_t>(r)];
    if (!(w > 0.0) || !std::isfinite(w)) throw TrapError(ErrorCode::InvalidParams, "weights must be positive");
    sys.weights[r] = w;
  }

  // Column of electrode `name` in the unknowns, or -1 when locked.
  auto column = [&](const std::string& name) -> Eigen::Index {
    auto it = std::find(sys.unknowns.begin(), sys.unknowns.end(), name);
    return it == sys.unknowns.end() ? -1 : static_cast<Eigen::Index>(it - sys.unknowns.begin());
  };

  // Field rows: E = -grad(phi), converted to V/m.
  auto field_rows = [&](Eigen::Index row0, const std::vector<PotentialJet>& jets, const Vec3& target,
                        const std::string& label) {
    for (int c = 0; c < 3; ++c) {
      sys.b[row0 + c] = target[c];
      sys.row_labels.push_back(label + "E" + "xyz"[c]);
    }
    for (std::size_t k = 0; k < names.size(); ++k) {
      const Vec3 e = -jets[k].grad * constants::per_um;
      const Eigen::Index col = column(names[k]);
      if (col >= 0) {
        sys.a.block<3, 1>(row0, col) = e;
      } else if (auto it = spec.locked_voltages.find(names[k]); it != spec.locked_voltages.end()) {
        sys.b.segment<3>(row0) -= it->second * e;
      }
    }
  };

  const auto jets = jets_or_throw(source, spec.null_point, curvature ? 2 : 1, "null point");
  field_rows(0, jets, spec.target_static_field, "null_");
  Eigen::Index row = 3;
  if (curvature) {
    sys.b[row] = *spec.target_axial_curvature;
    sys.row_labels.push_back("null_axial_curvature");
    for (std::size_t k = 0; k < names.size(); ++k) {
      const double c = axis.dot(jets[k].hess * axis) * constants::per_um * constants::per_um;
      const Eigen::Index col = column(names[k]);
      if (col >= 0) {
        sys.a(row, col) = c;
      } else if (auto it = spec.locked_voltages.find(names[k]); it != spec.locked_voltages.end()) {
        sys.b[row] -= it->second * c;
      }
    }
    ++row;
  }
  for (std::size_t i = 0; i < spec.probes.size(); ++i) {
    const auto& probe = spec.probes[i];
    const auto pj = jets_or_throw(source, probe.point, 1, "probe point");
    field_rows(row, pj, probe.target_field, "probe" + std::to_string(i) + "_");
    row += 3;
  }
  return sys;
}

CompensationResult solve_voltages(const ConstraintSystem& sys) {
  if (sys.a.rows() == 0 || sys.a.cols() == 0) {
    throw TrapError(ErrorCode::DegenerateSystem, "constraint system has no rows or no unknowns");
  }
  if (sys.a.cwiseAbs().maxCoeff() == 0.0) {
    throw TrapError(ErrorCode::DegenerateSystem, "constraint matrix is all zero");
  }
  const Eigen::MatrixXd aw = sys.weights.asDiagonal() * sys.a;
  const Eigen::VectorXd bw = sys.weights.cwiseProduct(sys.b);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(aw, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Eigen::VectorXd& s = svd.singularValues();
  const double cutoff = kRelativeCutoff * s[0];
  int rank = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    if (s[i] > cutoff) ++rank;
  }
  Eigen::VectorXd x = Eigen::VectorXd::Zero(sys.a.cols());
  for (int i = 0; i < rank; ++i) {
    x += (svd.matrixU().col(i).dot(bw) / s[i]) * svd.matrixV().col(i);
  }

  CompensationResult out;
  out.rank = rank;
  out.null_space_dim = static_cast<int>(sys.a.cols()) - rank;
  out.singular_values = s;
  out.residual = sys.a * x - sys.b;
  out.voltages.control = sys.locked;
  for (std::size_t k = 0; k < sys.unknowns.size(); ++k) {
    const double v = x[static_cast<Eigen::Index>(k)];
    out.voltages.control[sys.unknowns[k]] = v;
    if (std::abs(v) > kVoltageWarning) {
      std::ostringstream msg;
      msg << "electrode " << sys.unknowns[k] << " needs " << v << " V";
      out.warnings.push_back(msg.str());
    }
  }
  return out;
}

StaticDiagnostics residual_diagnostics(const FieldSource& source, const DriveParams& drive, const IonSpecies& ion,
                                       const VoltageSet& voltages, const Vec3& null_point,
                                       const Vec3& axial_direction) {
  // The model validates names and rejects static voltages on RF electrodes.
  const EnergyModel model(source, drive, ion, voltages);
  if (!(axial_direction.norm() > 0.0) || !axial_direction.allFinite()) {
    throw TrapError(ErrorCode::InvalidParams, "axial direction must be a nonzero vector");
  }
  const Vec3 axis = axial_direction.normalized();
  const PotentialJet dc = model.dc_jet(null_point, 2);
  StaticDiagnostics d;
  d.static_field = -dc.grad * constants::per_um;
  d.axial_curvature = axis.dot(dc.hess * axis) * constants::per_um * constants::per_um;
  const double k = ion.charge * constants::elementary_charge * d.axial_curvature / ion.mass_kg();
  d.imaginary = k < 0.0;
  d.axial_frequency = std::sqrt(std::abs(k)) / (2.0 * constants::pi);
  return d;
}

}  // namespace ptrap
