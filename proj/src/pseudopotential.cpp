#include "ptrap/pseudopotential.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "ptrap/constants.hpp"
#include "ptrap/errors.hpp"
#include "ptrap/mathieu.hpp"

namespace ptrap {

double IonSpecies::mass_kg() const { return mass * constants::atomic_mass_unit; }

void IonSpecies::check() const {
  if (!(mass > 0.0) || !std::isfinite(mass)) throw TrapError(ErrorCode::InvalidParams, "ion mass must be positive");
  if (charge == 0) throw TrapError(ErrorCode::InvalidParams, "ion charge must be nonzero");
}

void DriveParams::check() const {
  if (!(v_rf > 0.0) || !std::isfinite(v_rf)) throw TrapError(ErrorCode::InvalidParams, "v_rf must be positive");
  if (!(omega_rf > 0.0) || !std::isfinite(omega_rf)) {
    throw TrapError(ErrorCode::InvalidParams, "omega_rf must be positive");
  }
  if (rf_electrodes.empty()) throw TrapError(ErrorCode::InvalidParams, "no RF electrodes assigned");
}

AxialProfile axial_profile(const EnergyModel& model, const Vec3& origin, const Vec3& direction, double half_length,
                           int count, bool include_pseudo) {
  if (count < 2 || !(half_length > 0.0) || !(direction.norm() > 0.0)) {
    throw TrapError(ErrorCode::InvalidParams, "axial profile needs two or more points on a nonzero span");
  }
  const Vec3 d = direction.normalized();
  AxialProfile out;
  for (int i = 0; i < count; ++i) {
    const double t = -half_length + 2.0 * half_length * i / (count - 1);
    const Vec3 p = origin + t * d;
    const double u = include_pseudo ? model.total(p, 0).value : model.total(p, 0).value - model.pseudo(p, 0).value;
    out.positions.push_back(t);
    out.energies.push_back(u);
  }
  return out;
}

double angular_frequency_from_curvature(double k, double mass_kg) {
  return std::sqrt(k * constants::elementary_charge * 1e12 / mass_kg);
}

EnergyModel::EnergyModel(const FieldSource& source, const DriveParams& drive, const IonSpecies& ion,
                         const VoltageSet& voltages)
    : source_(&source) {
  drive.check();
  ion.check();
  const auto k = static_cast<Eigen::Index>(source.electrode_names().size());
  rf_w_ = Eigen::VectorXd::Zero(k);
  dc_v_ = Eigen::VectorXd::Zero(k);
  for (const auto& name : drive.rf_electrodes) {
    const int i = source.index_of(name);
    if (i < 0) throw TrapError(ErrorCode::UnknownElectrode, "unknown RF electrode '" + name + "'");
    rf_w_[i] = 1.0;
  }
  for (const auto& [name, v] : voltages.control) {
    const int i = source.index_of(name);
    if (i < 0) throw TrapError(ErrorCode::UnknownElectrode, "unknown electrode '" + name + "'");
    if (rf_w_[i] != 0.0) {
      throw TrapError(ErrorCode::InvalidParams, "RF electrode '" + name + "' cannot carry a static voltage");
    }
    if (!std::isfinite(v)) throw TrapError(ErrorCode::InvalidParams, "voltage for '" + name + "' is not finite");
    dc_v_[i] = v;
  }
  charge_ = ion.charge;
  mass_kg_ = ion.mass_kg();
  omega_ = drive.omega_rf;
  v_rf_ = drive.v_rf;
  const double e = constants::elementary_charge;
  pseudo_coeff_ = charge_ * charge_ * e * v_rf_ * v_rf_ * 1e12 / (4.0 * mass_kg_ * omega_ * omega_);
}

namespace {

PotentialJet combine(const std::vector<PotentialJet>& jets, const Eigen::VectorXd& w, int order) {
  PotentialJet out;
  for (std::size_t k = 0; k < jets.size(); ++k) {
    const double wk = w[static_cast<Eigen::Index>(k)];
    if (wk != 0.0) out.add_scaled(jets[k], wk, order);
  }
  return out;
}

EnergyJet pseudo_from(const PotentialJet& rf, double c, int order) {
  EnergyJet j;
  const Vec3& g = rf.grad;
  j.value = c * g.squaredNorm();
  if (order >= 1) j.grad = 2.0 * c * rf.hess * g;
  if (order >= 2) {
    Mat3 h = rf.hess * rf.hess;
    for (int k = 0; k < 3; ++k) h += g[k] * rf.third[static_cast<std::size_t>(k)];
    j.hess = 2.0 * c * h;
  }
  return j;
}

}  // namespace

PotentialJet EnergyModel::rf_jet(const Vec3& p, int order) const {
  return combine(source_->jets(p, order), rf_w_, order);
}

PotentialJet EnergyModel::dc_jet(const Vec3& p, int order) const {
  return combine(source_->jets(p, order), dc_v_, order);
}

EnergyJet EnergyModel::pseudo(const Vec3& p, int order) const {
  return pseudo_from(rf_jet(p, order + 1), pseudo_coeff_, order);
}

EnergyJet EnergyModel::total(const Vec3& p, int order) const {
  const auto jets = source_->jets(p, order + 1);
  EnergyJet j = pseudo_from(combine(jets, rf_w_, order + 1), pseudo_coeff_, order);
  const PotentialJet dc = combine(jets, dc_v_, order);
  j.value += charge_ * dc.value;
  if (order >= 1) j.grad += charge_ * dc.grad;
  if (order >= 2) j.hess += charge_ * dc.hess;
  return j;
}

std::vector<double> EnergyModel::total_many(const std::vector<Vec3>& points) const {
  const auto samples = source_->combined(points, rf_w_, dc_v_);
  std::vector<double> out(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    out[i] = pseudo_coeff_ * samples[i].rf_grad.squaredNorm() + charge_ * samples[i].dc_value;
  }
  return out;
}

std::pair<double, Vec3> pseudo_at(const FieldSource& source, const DriveParams& drive, const IonSpecies& ion,
                                  const Vec3& p) {
  const EnergyModel model(source, drive, ion);
  const EnergyJet j = model.pseudo(p, 1);
  return {j.value, j.grad};
}

double total_at(const FieldSource& source, const DriveParams& drive, const IonSpecies& ion,
                const VoltageSet& voltages, const Vec3& p) {
  return EnergyModel(source, drive, ion, voltages).total(p, 0).value;
}

Vec3 find_rf_null(const FieldSource& source, const DriveParams& drive, const Box3& region,
                  const NullOptions& options) {
  drive.check();
  Eigen::VectorXd rf = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(source.electrode_names().size()));
  for (const auto& name : drive.rf_electrodes) {
    const int i = source.index_of(name);
    if (i < 0) throw TrapError(ErrorCode::UnknownElectrode, "unknown RF electrode '" + name + "'");
    rf[i] = 1.0;
  }
  // Seeds must land inside the pseudopotential well, so the scan is
  // isotropic with coarse_points along the longest side.
  const Vec3 extent = region.hi - region.lo;
  const double spacing = extent.maxCoeff() / std::max(1, options.coarse_points - 1);
  int dims[3];
  for (int a = 0; a < 3; ++a) dims[a] = std::max(2, static_cast<int>(std::ceil(extent[a] / spacing - 1e-9)) + 1);
  const int nx = dims[0], ny = dims[1], nz = dims[2];
  std::vector<Vec3> pts;
  pts.reserve(static_cast<std::size_t>(nx * ny * nz));
  for (int i = 0; i < nx; ++i)
    for (int j = 0; j < ny; ++j)
      for (int k = 0; k < nz; ++k) {
        const Vec3 t(double(i) / (nx - 1), double(j) / (ny - 1), double(k) / (nz - 1));
        pts.push_back(region.lo + extent.cwiseProduct(t));
      }
  const auto samples = source.combined(pts, rf, Eigen::VectorXd::Zero(rf.size()));
  auto idx = [ny, nz](int i, int j, int k) { return static_cast<std::size_t>((i * ny + j) * nz + k); };
  // A zero of the field needs every component to change sign across a cell;
  // |E| alone misleads because the far field is weaker than the field a few
  // micrometres from the null.
  std::vector<Vec3> starts;
  std::vector<double> start_rank;
  for (int i = 0; i + 1 < nx; ++i)
    for (int j = 0; j + 1 < ny; ++j)
      for (int k = 0; k + 1 < nz; ++k) {
        Vec3 lo = Vec3::Constant(INFINITY), hi = Vec3::Constant(-INFINITY);
        Vec3 centre = Vec3::Zero();
        double smallest = INFINITY;
        for (int c = 0; c < 8; ++c) {
          const std::size_t id = idx(i + (c & 1), j + ((c >> 1) & 1), k + ((c >> 2) & 1));
          lo = lo.cwiseMin(samples[id].rf_grad);
          hi = hi.cwiseMax(samples[id].rf_grad);
          centre += pts[id] / 8.0;
          smallest = std::min(smallest, samples[id].rf_grad.norm());
        }
        if ((lo.array() <= 0.0).all() && (hi.array() >= 0.0).all()) {
          starts.push_back(centre);
          start_rank.push_back(smallest);
        }
      }
  std::vector<std::size_t> order(starts.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return start_rank[a] < start_rank[b]; });
  std::vector<Vec3> seeds;
  for (std::size_t o : order) seeds.push_back(starts[o]);
  // Coarse minima of |E| as a fallback.
  for (int i = 0; i < nx; ++i)
    for (int j = 0; j < ny; ++j)
      for (int k = 0; k < nz; ++k) {
        const double v = samples[idx(i, j, k)].rf_grad.squaredNorm();
        bool local_min = true;
        const int d[6][3] = {{1, 0, 0}, {-1, 0, 0}, {0, 1, 0}, {0, -1, 0}, {0, 0, 1}, {0, 0, -1}};
        for (const auto& o : d) {
          const int a = i + o[0], b = j + o[1], c = k + o[2];
          if (a < 0 || b < 0 || c < 0 || a >= nx || b >= ny || c >= nz) continue;
          if (samples[idx(a, b, c)].rf_grad.squaredNorm() < v) local_min = false;
        }
        if (local_min) seeds.push_back(pts[idx(i, j, k)]);
      }

  const double field_scale = drive.v_rf * 1e6;  // |grad| (1/um) -> |E| (V/m)
  const Vec3 slack = 1e-6 * (region.hi - region.lo);
  const Vec3 pad = 0.1 * (region.hi - region.lo);
  auto within = [&](const Vec3& p, const Vec3& margin) {
    return ((p - region.lo).array() >= -margin.array()).all() && ((region.hi - p).array() >= -margin.array()).all();
  };
  double best_field = INFINITY;
  for (std::size_t c = 0; c < std::min<std::size_t>(seeds.size(), 64); ++c) {
    Vec3 p = seeds[c];
    PotentialJet jet;
    try {
      jet = combine(source.jets(p, 2), rf, 2);
    } catch (const TrapError&) {
      continue;
    }
    double lambda = 1e-3 * jet.hess.squaredNorm();
    int polish = 0;
    for (int it = 0; it < options.max_iterations; ++it) {
      const Vec3 g = jet.grad;
      const Mat3 h = jet.hess;
      const Vec3 step = -(h * h + lambda * Mat3::Identity()).ldlt().solve(h * g);
      PotentialJet trial;
      bool ok = step.allFinite() && within(p + step, pad);
      if (ok) {
        try {
          trial = combine(source.jets(p + step, 2), rf, 2);
        } catch (const TrapError&) {
          ok = false;
        }
      }
      if (ok && trial.grad.norm() < g.norm()) {
        const double gain = g.norm() / std::max(trial.grad.norm(), 1e-300);
        p += step;
        jet = trial;
        lambda = std::max(lambda / 10.0, 1e-12 * h.squaredNorm());
        if (jet.grad.norm() * field_scale <= options.tolerance) {
          // Keep polishing while Newton still gains, so the result does not
          // depend on where the tolerance happened to be crossed.
          if (gain < 2.0 || ++polish > 20) break;
        }
      } else {
        lambda *= 8.0;
        if (lambda > 1e12 * std::max(h.squaredNorm(), 1e-300)) break;
      }
    }
    const double field = jet.grad.norm() * field_scale;
    best_field = std::min(best_field, field);
    const bool inside = within(p, slack);
    if (field <= options.tolerance && inside) return p;
  }
  std::ostringstream msg;
  msg << "no RF null found in the search region (best |E_rf| = " << best_field << " V/m)";
  throw TrapError(ErrorCode::NullNotFound, msg.str());
}

Vec3 minimize_energy(const EnergyModel& model, const Vec3& start, double tol, int max_iterations) {
  Vec3 p = start;
  EnergyJet j = model.total(p, 2);
  for (int it = 0; it < max_iterations; ++it) {
    if (j.grad.norm() < tol) return p;
    Eigen::SelfAdjointEigenSolver<Mat3> es(j.hess);
    const Eigen::Vector3d lam = es.eigenvalues();
    const double scale = std::max(lam.cwiseAbs().maxCoeff(), 1e-300);
    Eigen::Vector3d inv;
    for (int i = 0; i < 3; ++i) inv[i] = 1.0 / std::max(std::abs(lam[i]), 1e-10 * scale);
    Vec3 step = -es.eigenvectors() * inv.asDiagonal() * es.eigenvectors().transpose() * j.grad;
    const double max_step = 0.25 * std::max(p.z(), 1.0);
    if (step.norm() > max_step) step *= max_step / step.norm();
    const bool convex = lam[0] > 0.0;
    double alpha = 1.0;
    bool moved = false;
    for (int ls = 0; ls < 40; ++ls) {
      EnergyJet t;
      try {
        t = model.total(p + alpha * step, 2);
      } catch (const TrapError&) {
        alpha *= 0.5;
        continue;
      }
      const bool decrease = t.value <= j.value + 1e-4 * alpha * j.grad.dot(step);
      // Near the minimum energy differences drop below roundoff; a convex
      // Newton step that shrinks the gradient is then accepted as well.
      const bool polish = convex && alpha == 1.0 && t.grad.norm() < 0.5 * j.grad.norm();
      if (decrease || polish) {
        p += alpha * step;
        j = t;
        moved = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!moved) break;
  }
  if (j.grad.norm() < tol) return p;
  std::ostringstream msg;
  msg << "energy minimization did not converge (|grad| = " << j.grad.norm() << " eV/um)";
  throw TrapError(ErrorCode::NoConvergence, msg.str());
}

TrapReport characterize_trap(const FieldSource& source, const DriveParams& drive, const IonSpecies& ion,
                             const VoltageSet& voltages, const CharacterizeOptions& options) {
  const EnergyModel model(source, drive, ion, voltages);
  const Box3 box = options.search_box ? *options.search_box : source.default_search_box();
  TrapReport r;
  r.rf_null = find_rf_null(source, drive, box, options.null);
  r.rf_null_field = model.rf_jet(r.rf_null, 1).grad.norm() * drive.v_rf * 1e6;
  r.minimum = minimize_energy(model, r.rf_null, options.gradient_tolerance, options.max_newton);
  r.ion_height = r.minimum.z();
  const EnergyJet j = model.total(r.minimum, 2);
  r.energy_at_minimum = j.value;

  Eigen::SelfAdjointEigenSolver<Mat3> es(j.hess);
  const Eigen::Vector3d lam = es.eigenvalues();
  if (!(lam[0] > 0.0)) {
    std::ostringstream msg;
    msg << "energy Hessian at the candidate minimum is not positive definite (eigenvalues " << lam[0] << ", "
        << lam[1] << ", " << lam[2] << " eV/um^2)";
    throw TrapError(ErrorCode::NotATrap, msg.str());
  }
  double best_x = -1.0;
  for (int i = 0; i < 3; ++i) {
    Vec3 v = es.eigenvectors().col(i);
    Eigen::Index big;
    v.cwiseAbs().maxCoeff(&big);
    if (v[big] < 0.0) v = -v;
    r.principal_axes[static_cast<std::size_t>(i)] = v;
    r.secular_freqs[static_cast<std::size_t>(i)] =
        angular_frequency_from_curvature(lam[i], model.mass_kg()) / (2.0 * constants::pi);
    r.axis_tilt_deg[static_cast<std::size_t>(i)] = std::asin(std::min(1.0, std::abs(v.z()))) * 180.0 / constants::pi;
    if (std::abs(v.x()) > best_x) {
      best_x = std::abs(v.x());
      r.axial_index = i;
    }
  }

  const auto jets = source.jets(r.minimum, 2);
  const PotentialJet rf = combine(jets, model.rf_weights(), 2);
  const PotentialJet dc = combine(jets, model.dc_voltages(), 2);
  const double e = constants::elementary_charge;
  const double denom = model.mass_kg() * model.omega_rf() * model.omega_rf();
  r.stable = true;
  for (std::size_t i = 0; i < 3; ++i) {
    const Vec3& v = r.principal_axes[i];
    r.mathieu_q[i] = 2.0 * ion.charge * e * drive.v_rf * std::abs(v.dot(rf.hess * v)) * 1e12 / denom;
    r.mathieu_a[i] = 4.0 * ion.charge * e * v.dot(dc.hess * v) * 1e12 / denom;
    if (!mathieu::stable(r.mathieu_a[i], r.mathieu_q[i])) r.stable = false;
  }

  if (options.compute_depth) {
    const DepthResult d = find_trap_depth(model, r.minimum, r.energy_at_minimum, options.depth);
    r.depth = d.depth;
    r.escape_point = d.escape_point;
    r.depth_lower_bound = d.lower_bound;
  }
  return r;
}

LaserOverlap laser_overlap_check(const TrapReport& report, const Vec3& beam, double threshold,
                                 bool allow_out_of_plane) {
  if (!beam.allFinite() || std::abs(beam.norm() - 1.0) > 1e-9) {
    throw TrapError(ErrorCode::InvalidDirection, "beam direction must be a unit vector");
  }
  if (!allow_out_of_plane && std::abs(beam.z()) > 1e-12) {
    throw TrapError(ErrorCode::InvalidDirection, "beam must run parallel to the electrode plane (z component 0)");
  }
  LaserOverlap out;
  out.pass = true;
  for (std::size_t i = 0; i < 3; ++i) {
    out.projections[i] = std::abs(report.principal_axes[i].dot(beam));
    if (!(out.projections[i] > threshold)) out.pass = false;
  }
  return out;
}

}  // namespace ptrap
