#include "ptrap/crystal.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "ptrap/constants.hpp"
#include "ptrap/errors.hpp"

namespace ptrap {

namespace {

// Harmonic spring constant in eV/um^2.
double spring_constant(const IonSpecies& ion, double freq_hz) {
  const double w = 2.0 * constants::pi * freq_hz;
  return ion.mass_kg() * w * w * constants::um * constants::um / constants::elementary_charge;
}

double coulomb_strength(const IonSpecies& ion) {
  return constants::coulomb_ev_um * static_cast<double>(ion.charge) * static_cast<double>(ion.charge);
}

}  // namespace

AxialPotential AxialPotential::harmonic(double freq_hz) {
  if (!(freq_hz > 0.0) || !std::isfinite(freq_hz)) {
    throw TrapError(ErrorCode::InvalidFrequency, "axial frequency must be positive");
  }
  AxialPotential p;
  p.form_ = Form::Harmonic;
  p.freq_hz_ = freq_hz;
  return p;
}

AxialPotential AxialPotential::sampled(std::vector<double> x, std::vector<double> y) {
  if (x.size() != y.size()) throw TrapError(ErrorCode::InvalidParams, "positions and energies differ in length");
  if (x.size() < 4) throw TrapError(ErrorCode::InvalidParams, "a sampled potential needs at least four points");
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!std::isfinite(x[i]) || !std::isfinite(y[i])) {
      throw TrapError(ErrorCode::InvalidParams, "sampled potential contains non-finite values");
    }
    if (i > 0 && !(x[i] > x[i - 1])) {
      throw TrapError(ErrorCode::InvalidParams, "sample positions must be strictly increasing");
    }
  }
  const std::size_t n = x.size();
  const std::size_t lowest = static_cast<std::size_t>(std::min_element(y.begin(), y.end()) - y.begin());
  if (lowest == 0 || lowest == n - 1) {
    throw TrapError(ErrorCode::Unbounded, "sampled potential has its lowest value at an end point");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (i != lowest && y[i] == y[lowest]) {
      throw TrapError(ErrorCode::InvalidParams, "sampled potential has no unique minimum");
    }
  }

  // Natural spline: tridiagonal system for the knot second derivatives.
  std::vector<double> m(n, 0.0), c(n, 0.0), d(n, 0.0);
  for (std::size_t i = 1; i + 1 < n; ++i) {
    const double h0 = x[i] - x[i - 1];
    const double h1 = x[i + 1] - x[i];
    const double a = h0 / 6.0;
    const double b = (h0 + h1) / 3.0;
    const double cc = h1 / 6.0;
    const double r = (y[i + 1] - y[i]) / h1 - (y[i] - y[i - 1]) / h0;
    const double denom = b - a * c[i - 1];
    c[i] = cc / denom;
    d[i] = (r - a * d[i - 1]) / denom;
  }
  for (std::size_t i = n - 2; i >= 1; --i) {
    m[i] = d[i] - c[i] * m[i + 1];
    if (i == 1) break;
  }

  AxialPotential p;
  p.form_ = Form::Sampled;
  p.x_ = std::move(x);
  p.y_ = std::move(y);
  p.m_ = std::move(m);

  // Minimum of the interpolant in the two intervals around the lowest knot.
  const IonSpecies any;
  double best_z = p.x_[lowest];
  double best_u, du, d2u;
  p.evaluate(any, best_z, best_u, du, d2u);
  for (std::size_t k = lowest - 1; k <= lowest; ++k) {
    double lo = p.x_[k], hi = p.x_[k + 1];
    double ulo, dlo, uhi, dhi, tmp;
    p.evaluate(any, lo, ulo, dlo, tmp);
    p.evaluate(any, hi, uhi, dhi, tmp);
    if (!(dlo < 0.0 && dhi > 0.0)) continue;
    for (int it = 0; it < 200 && hi - lo > 1e-14 * std::max(1.0, std::abs(hi)); ++it) {
      const double mid = 0.5 * (lo + hi);
      double um, dm;
      p.evaluate(any, mid, um, dm, tmp);
      (dm < 0.0 ? lo : hi) = mid;
    }
    const double z = 0.5 * (lo + hi);
    double u;
    p.evaluate(any, z, u, du, tmp);
    if (u < best_u) {
      best_u = u;
      best_z = z;
    }
  }
  p.min_ = best_z;
  return p;
}

void AxialPotential::evaluate(const IonSpecies& ion, double z, double& u, double& du, double& d2u) const {
  if (form_ == Form::Harmonic) {
    const double k = spring_constant(ion, freq_hz_);
    u = 0.5 * k * z * z;
    du = k * z;
    d2u = k;
    return;
  }
  const std::size_t n = x_.size();
  // Linear continuation: the natural spline has zero curvature at the ends.
  if (z <= x_.front() || z >= x_.back()) {
    const bool left = z <= x_.front();
    const std::size_t i = left ? 0 : n - 2;
    const double h = x_[i + 1] - x_[i];
    const double slope = (y_[i + 1] - y_[i]) / h + (left ? -h * m_[i] / 3.0 - h * m_[i + 1] / 6.0
                                                       : h * m_[i] / 6.0 + h * m_[i + 1] / 3.0);
    const double z0 = left ? x_.front() : x_.back();
    u = (left ? y_.front() : y_.back()) + slope * (z - z0);
    du = slope;
    d2u = 0.0;
    return;
  }
  const std::size_t i = static_cast<std::size_t>(std::upper_bound(x_.begin(), x_.end(), z) - x_.begin()) - 1;
  const double h = x_[i + 1] - x_[i];
  const double a = (x_[i + 1] - z) / h;
  const double b = (z - x_[i]) / h;
  u = a * y_[i] + b * y_[i + 1] + ((a * a * a - a) * m_[i] + (b * b * b - b) * m_[i + 1]) * h * h / 6.0;
  du = (y_[i + 1] - y_[i]) / h - (3.0 * a * a - 1.0) / 6.0 * h * m_[i] + (3.0 * b * b - 1.0) / 6.0 * h * m_[i + 1];
  d2u = a * m_[i] + b * m_[i + 1];
}

double AxialPotential::minimum() const { return form_ == Form::Harmonic ? 0.0 : min_; }

bool AxialPotential::in_range(double z) const {
  return form_ == Form::Harmonic || (z >= x_.front() && z <= x_.back());
}

double length_scale(const IonSpecies& ion, double freq_hz) {
  ion.check();
  if (!(freq_hz > 0.0) || !std::isfinite(freq_hz)) {
    throw TrapError(ErrorCode::InvalidFrequency, "axial frequency must be positive");
  }
  return std::cbrt(coulomb_strength(ion) / spring_constant(ion, freq_hz));
}

double chain_energy(const IonSpecies& ion, const AxialPotential& potential, const std::vector<double>& z) {
  const double kc = coulomb_strength(ion);
  double e = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    double u, du, d2u;
    potential.evaluate(ion, z[i], u, du, d2u);
    e += u;
    for (std::size_t j = i + 1; j < z.size(); ++j) e += kc / std::abs(z[j] - z[i]);
  }
  return e;
}

namespace {

void chain_derivatives(const IonSpecies& ion, const AxialPotential& pot, const std::vector<double>& z,
                       Eigen::VectorXd& g, Eigen::MatrixXd& h) {
  const Eigen::Index n = static_cast<Eigen::Index>(z.size());
  const double kc = coulomb_strength(ion);
  g = Eigen::VectorXd::Zero(n);
  h = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    double u, du, d2u;
    pot.evaluate(ion, z[static_cast<std::size_t>(i)], u, du, d2u);
    g[i] += du;
    h(i, i) += d2u;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (j == i) continue;
      const double d = z[static_cast<std::size_t>(i)] - z[static_cast<std::size_t>(j)];
      const double ad = std::abs(d);
      g[i] -= kc * (d > 0.0 ? 1.0 : -1.0) / (ad * ad);
      const double c = 2.0 * kc / (ad * ad * ad);
      h(i, i) += c;
      h(i, j) -= c;
    }
  }
}

constexpr double kGradientTolerance = 1e-9;  // eV/um per ion

// Returns true when converged; z is updated in place.
bool newton_chain(const IonSpecies& ion, const AxialPotential& pot, std::vector<double>& z, double scale) {
  const std::size_t n = z.size();
  const double span = pot.form() == AxialPotential::Form::Sampled ? pot.positions().back() - pot.positions().front()
                                                                   : 0.0;
  Eigen::VectorXd g;
  Eigen::MatrixXd h;
  double energy = chain_energy(ion, pot, z);
  chain_derivatives(ion, pot, z, g, h);
  for (int it = 0; it < 500; ++it) {
    if (g.cwiseAbs().maxCoeff() <= 1e-3 * kGradientTolerance) {
      // Pure Newton steps down to roundoff; the absolute tolerance alone
      // leaves relative position errors near 1e-8 in weak potentials.
      for (int polish = 0; polish < 3; ++polish) {
        const Eigen::VectorXd step = h.ldlt().solve(-g);
        std::vector<double> trial(z);
        for (std::size_t i = 0; i < n; ++i) trial[i] += step[static_cast<Eigen::Index>(i)];
        Eigen::VectorXd tg;
        Eigen::MatrixXd th;
        chain_derivatives(ion, pot, trial, tg, th);
        if (!(tg.norm() < g.norm())) break;
        z = trial;
        g = tg;
        h = th;
      }
      return true;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h);
    const Eigen::VectorXd lam = es.eigenvalues();
    const double top = std::max(lam.cwiseAbs().maxCoeff(), 1e-300);
    Eigen::VectorXd inv(lam.size());
    for (Eigen::Index i = 0; i < lam.size(); ++i) inv[i] = 1.0 / std::max(std::abs(lam[i]), 1e-12 * top);
    Eigen::VectorXd step = -es.eigenvectors() * inv.asDiagonal() * es.eigenvectors().transpose() * g;
    // No ion may move past half the distance to a neighbour or beyond the
    // natural length scale in one step.
    double limit = scale;
    for (std::size_t i = 0; i + 1 < n; ++i) limit = std::min(limit, 0.5 * (z[i + 1] - z[i]));
    const double biggest = step.cwiseAbs().maxCoeff();
    if (biggest > limit) step *= limit / biggest;
    const bool convex = lam[0] > 0.0;

    bool moved = false;
    double alpha = 1.0;
    for (int ls = 0; ls < 60; ++ls) {
      std::vector<double> trial(z);
      for (std::size_t i = 0; i < n; ++i) trial[i] += alpha * step[static_cast<Eigen::Index>(i)];
      bool ordered = true;
      for (std::size_t i = 0; i + 1 < n; ++i) ordered = ordered && trial[i + 1] > trial[i];
      if (ordered) {
        const double e = chain_energy(ion, pot, trial);
        Eigen::VectorXd tg;
        Eigen::MatrixXd th;
        chain_derivatives(ion, pot, trial, tg, th);
        const bool decrease = e <= energy + 1e-4 * alpha * g.dot(step);
        // Energy differences vanish in roundoff near the minimum; a full
        // convex Newton step that shrinks the gradient is accepted there.
        const bool polish = convex && alpha == 1.0 && tg.norm() < 0.5 * g.norm();
        if (decrease || polish) {
          z = trial;
          energy = e;
          g = tg;
          h = th;
          moved = true;
          break;
        }
      }
      alpha *= 0.5;
    }
    if (!moved) break;
    if (span > 0.0) {
      for (double v : z) {
        if (v < pot.positions().front() - span || v > pot.positions().back() + span) {
          throw TrapError(ErrorCode::Unbounded, "ions escape the sampled axial potential");
        }
      }
    }
  }
  return g.cwiseAbs().maxCoeff() <= kGradientTolerance;
}

}  // namespace

IonChain equilibrium_positions(const IonSpecies& ion, const AxialPotential& potential, int n) {
  ion.check();
  if (n < 1) throw TrapError(ErrorCode::InvalidParams, "ion count must be at least one");

  double scale;
  const double centre = potential.minimum();
  if (potential.form() == AxialPotential::Form::Harmonic) {
    scale = length_scale(ion, potential.frequency());
  } else {
    double u, du, d2u;
    potential.evaluate(ion, centre, u, du, d2u);
    const double span = potential.positions().back() - potential.positions().front();
    scale = d2u > 0.0 ? std::cbrt(coulomb_strength(ion) / d2u) : span / (4.0 * n);
    scale = std::min(scale, span);
  }

  const double half = std::pow(static_cast<double>(n), 0.6) * scale;
  std::vector<double> seed(static_cast<std::size_t>(n), centre);
  if (n > 1) {
    for (int i = 0; i < n; ++i) seed[static_cast<std::size_t>(i)] = centre + half * (2.0 * i / (n - 1) - 1.0);
  }

  std::mt19937 rng(20061);
  std::uniform_real_distribution<double> jitter(-0.05, 0.05);
  for (int attempt = 0; attempt < 5; ++attempt) {
    std::vector<double> z = seed;
    if (attempt > 0 && n > 1) {
      const double spacing = 2.0 * half / (n - 1);
      for (auto& v : z) v += jitter(rng) * spacing;
    }
    if (newton_chain(ion, potential, z, scale)) {
      for (double v : z) {
        if (!potential.in_range(v)) throw TrapError(ErrorCode::Unbounded, "chain extends past the sampled potential");
      }
      IonChain chain;
      chain.species = ion;
      chain.positions = z;
      chain.potential = potential;
      return chain;
    }
  }
  throw TrapError(ErrorCode::NoConvergence, "chain equilibrium did not converge");
}

NormalModes normal_modes(const IonChain& chain) {
  Eigen::VectorXd g;
  Eigen::MatrixXd h;
  chain_derivatives(chain.species, chain.potential, chain.positions, g, h);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h);
  const Eigen::VectorXd lam = es.eigenvalues();
  if (lam.size() > 0 && !(lam[0] > 0.0)) {
    std::ostringstream msg;
    msg << "chain Hessian has eigenvalue " << lam[0] << " eV/um^2";
    throw TrapError(ErrorCode::UnstableChain, msg.str());
  }
  NormalModes modes;
  modes.eigenvectors = es.eigenvectors();
  for (Eigen::Index i = 0; i < lam.size(); ++i) {
    modes.frequencies.push_back(angular_frequency_from_curvature(lam[i], chain.species.mass_kg()) /
                                (2.0 * constants::pi));
    Eigen::Index big;
    modes.eigenvectors.col(i).cwiseAbs().maxCoeff(&big);
    if (modes.eigenvectors(big, i) < 0.0) modes.eigenvectors.col(i) *= -1.0;
  }
  return modes;
}

double crystal_length(const IonChain& chain) {
  if (chain.positions.empty()) return 0.0;
  const auto [lo, hi] = std::minmax_element(chain.positions.begin(), chain.positions.end());
  return *hi - *lo;
}

std::vector<bool> mode_spectrum_scan(const IonChain& chain, const std::vector<double>& drive_hz, double linewidth) {
  std::vector<bool> flags;
  flags.reserve(drive_hz.size());
  if (drive_hz.empty()) return flags;
  const NormalModes modes = normal_modes(chain);
  for (double f : drive_hz) {
    bool hit = false;
    for (double m : modes.frequencies) hit = hit || std::abs(f - m) <= linewidth * m;
    flags.push_back(hit);
  }
  return flags;
}

}  // namespace ptrap
