#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <iostream>

#include "qsteer/params.hpp"

namespace qsteer {

enum class Flavor { Adiabatic, FullCavity };

// White-noise channels. a1/a2 are the input field quadratures, n1/n2 the
// detection-loss vacua, fth the thermal force. Symmetrized correlators are
// <a_j a_k>_sym = delta_jk delta(t-t')/2, <n_j n_k>_sym likewise, and
// <F_th F_th>_sym = S_F_th/2 delta(t-t').
enum Channel : int { ch_a1 = 0, ch_a2, ch_n1, ch_n2, ch_fth, n_channels };

// State-space realization with white-noise inputs and the two homodyne
// outputs y1 (amplitude) and y2 (phase). Each output is an instantaneous
// feedthrough of channel noises plus a linear readout of the state.
struct LinearModel {
  Flavor flavor = Flavor::Adiabatic;
  int dim = 2;  // (x, p) or (x, p, ac1, ac2)
  Eigen::MatrixXd drift;                             // dim x dim
  Eigen::MatrixXd input;                             // dim x n_channels
  Eigen::Matrix<double, 2, Eigen::Dynamic> readout;  // 2 x dim, rows H1, H2
  Eigen::Matrix<double, 2, n_channels> feedthrough;  // f_{i,c}
  Eigen::Matrix<double, n_channels, 1> noise_level;  // symmetrized delta strength
  PhysicalParams params;
  bool adiabatic_warning = false;  // kappa not >> omega_m

  // rho(-tau) = thermal(n0) (x) vacuum; cavity quadratures start in vacuum.
  Eigen::MatrixXd prior(double n0) const {
    Eigen::MatrixXd A0 = Eigen::MatrixXd::Zero(dim, dim);
    const double wr = params.reference_freq();
    A0(0, 0) = (2.0 * n0 + 1.0) * hbar / (2.0 * params.mass * wr);
    A0(1, 1) = (2.0 * n0 + 1.0) * hbar * params.mass * wr / 2.0;
    for (int k = 2; k < dim; ++k) A0(k, k) = 0.5;
    return A0;
  }
};

inline LinearModel build_model(const PhysicalParams& p, Flavor flavor) {
  {
    auto v = validate(p);
    // window is resolved by callers that need a grid; ignore it here
    std::erase_if(v, [](const std::string& s) { return s.find("window") != std::string::npos; });
    if (!v.empty()) {
      std::string msg = "build_model: invalid parameters:";
      for (const auto& s : v) msg += " [" + s + "]";
      throw Error(msg);
    }
  }
  LinearModel m;
  m.flavor = flavor;
  m.params = p;
  const double mass = p.mass, wm = p.mech_freq, km = p.mech_damping;
  const double alpha = p.coupling, eta = p.efficiency;
  const double se = std::sqrt(eta), sl = std::sqrt(1.0 - eta);

  m.noise_level.setConstant(0.5);
  m.noise_level(ch_fth) = p.bath_force_spectrum / 2.0;

  if (flavor == Flavor::Adiabatic) {
    m.dim = 2;
    m.drift.setZero(2, 2);
    m.drift(0, 1) = 1.0 / mass;
    m.drift(1, 0) = -mass * wm * wm;
    m.drift(1, 1) = -km;
    m.input.setZero(2, n_channels);
    m.input(1, ch_a1) = -alpha;
    m.input(1, ch_fth) = 1.0;
    m.readout.setZero(2, 2);
    m.readout(1, 0) = se * alpha / hbar;  // y2 reads (alpha/hbar) x
    m.feedthrough.setZero();
    m.feedthrough(0, ch_a1) = se;
    m.feedthrough(0, ch_n1) = sl;
    m.feedthrough(1, ch_a2) = se;
    m.feedthrough(1, ch_n2) = sl;
    if (!(p.cavity_bandwidth >= 10.0 * wm)) {
      m.adiabatic_warning = true;
      std::cerr << "qsteer: warning: adiabatic model with kappa = " << p.cavity_bandwidth
                << " not much larger than omega_m = " << wm << "\n";
    }
  } else {
    m.dim = 4;
    const double kappa = p.cavity_bandwidth, Delta = p.detuning;
    const double g = alpha / (std::sqrt(8.0 / kappa) * hbar);
    m.drift.setZero(4, 4);
    m.drift(0, 1) = 1.0 / mass;
    m.drift(1, 0) = -mass * wm * wm;
    m.drift(1, 1) = -km;
    m.drift(1, 2) = -std::sqrt(2.0) * hbar * g;
    m.drift(2, 2) = -kappa / 2.0;
    m.drift(2, 3) = Delta;
    m.drift(3, 0) = -std::sqrt(2.0) * g;
    m.drift(3, 2) = -Delta;
    m.drift(3, 3) = -kappa / 2.0;
    m.input.setZero(4, n_channels);
    m.input(2, ch_a1) = std::sqrt(kappa);
    m.input(3, ch_a2) = std::sqrt(kappa);
    m.input(1, ch_fth) = 1.0;
    m.readout.setZero(2, 4);
    m.readout(0, 2) = se * std::sqrt(kappa);  // b1 = -a1 + sqrt(kappa) ac1
    m.readout(1, 3) = se * std::sqrt(kappa);
    m.feedthrough.setZero();
    m.feedthrough(0, ch_a1) = -se;
    m.feedthrough(0, ch_n1) = sl;
    m.feedthrough(1, ch_a2) = -se;
    m.feedthrough(1, ch_n2) = sl;
  }
  return m;
}

// Mechanical response kernel (1/(m omega_m)) e^{-kappa_m t/2} sin(omega_m t);
// t/m for a free mass.
inline double green_x(const PhysicalParams& p, double t) {
  if (t < 0.0) throw Error("green_x: t must be nonnegative");
  if (p.mech_freq == 0.0) return t / p.mass * std::exp(-p.mech_damping * t / 2.0);
  return std::exp(-p.mech_damping * t / 2.0) * std::sin(p.mech_freq * t) /
         (p.mass * p.mech_freq);
}

// Standard quantum limit of displacement sensing, 2 hbar / (m Omega^2).
inline double sql_spectrum(double Omega, double mass) {
  if (!(Omega > 0.0)) throw Error("sql_spectrum: frequency must be positive");
  if (!(mass > 0.0)) throw Error("sql_spectrum: mass must be positive");
  return 2.0 * hbar / (mass * Omega * Omega);
}

}  // namespace qsteer
