#pragma once

#include <vector>

#include <Eigen/Dense>

#include "ptrap/pseudopotential.hpp"

namespace ptrap {

/// Single-ion potential energy along the chain axis: harmonic, or a natural
/// cubic spline through sampled energies with linear continuation past the
/// end samples.
class AxialPotential {
 public:
  enum class Form { Harmonic, Sampled };

  /// Throws InvalidFrequency unless freq_hz > 0.
  static AxialPotential harmonic(double freq_hz);
  /// Positions in um, energies in eV. Throws InvalidParams for fewer than four
  /// samples, non-increasing positions or a tie for the lowest sample, and
  /// Unbounded when the lowest sample is an end point.
  static AxialPotential sampled(std::vector<double> positions, std::vector<double> energies);

  Form form() const { return form_; }
  double frequency() const { return freq_hz_; }
  const std::vector<double>& positions() const { return x_; }
  const std::vector<double>& energies() const { return y_; }

  /// Energy (eV) and its first two derivatives (eV/um, eV/um^2) at z (um).
  void evaluate(const IonSpecies& ion, double z, double& u, double& du, double& d2u) const;
  /// Location of the minimum (um).
  double minimum() const;
  /// Whether z lies where the potential is defined by data.
  bool in_range(double z) const;

 private:
  Form form_ = Form::Harmonic;
  double freq_hz_ = 0.0;
  std::vector<double> x_, y_, m_;  // m_: second derivatives at the knots
  double min_ = 0.0;
};

struct IonChain {
  IonSpecies species;
  /// Ascending (um).
  std::vector<double> positions;
  AxialPotential potential = AxialPotential::harmonic(1.0);
};

struct NormalModes {
  /// Ascending (Hz).
  std::vector<double> frequencies;
  /// Column i belongs to frequencies[i].
  Eigen::MatrixXd eigenvectors;
};

/// l^3 = q^2 / (4 pi eps0 m w^2) with w = 2 pi freq_hz, in um. Throws
/// InvalidFrequency unless freq_hz > 0.
double length_scale(const IonSpecies& ion, double freq_hz);

/// Total energy (eV) of a chain configuration.
double chain_energy(const IonSpecies& ion, const AxialPotential& potential, const std::vector<double>& z);

/// Newton minimization of axial plus Coulomb energy from an equispaced seed.
/// Throws Unbounded when the ions leave a sampled potential and NoConvergence
/// when restarts are exhausted.
IonChain equilibrium_positions(const IonSpecies& ion, const AxialPotential& potential, int n);

/// Throws UnstableChain for an indefinite Hessian.
NormalModes normal_modes(const IonChain& chain);

double crystal_length(const IonChain& chain);

/// True for each drive frequency within `linewidth` (relative) of a mode.
std::vector<bool> mode_spectrum_scan(const IonChain& chain, const std::vector<double>& drive_hz,
                                     double linewidth = 0.01);

}  // namespace ptrap
