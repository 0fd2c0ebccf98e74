#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace qsteer {

// Internal unit system: hbar = 1. Everything else (mass, frequencies, force
// spectra) is given in one consistent unit system chosen by the caller; a
// convenient choice is m = 1 with frequencies in units of Omega_q.
inline constexpr double hbar = 1.0;

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Dial settings of the experiment. The thermal bath enters only through the
// single-sided force spectrum S_F_th = 4 m kappa_m kB T, stored directly so
// temperature never appears on its own.
struct PhysicalParams {
  double mass = 1.0;
  double mech_freq = 0.0;            // omega_m
  double mech_damping = 0.0;         // kappa_m
  double bath_force_spectrum = 0.0;  // S_F_th, single-sided
  double coupling = 1.0;             // alpha, force per unit amplitude quadrature
  double cavity_bandwidth = 100.0;   // kappa
  double detuning = 0.0;             // Delta
  double efficiency = 1.0;           // eta
  double window = 1.0;               // tau
  double initial_occupation = 0.0;   // n0, thermal prior at t = -tau

  // The free-mass limit is an explicit flag pair, not a pair of tiny values.
  bool free_mass() const { return mech_freq == 0.0 && mech_damping == 0.0; }

  // omega_m for an oscillator, Omega_q for a free mass.
  double reference_freq() const {
    if (mech_freq > 0.0) return mech_freq;
    return std::sqrt(coupling * coupling / (hbar * mass));
  }
  double zero_point_x() const { return std::sqrt(hbar / (2.0 * mass * reference_freq())); }
  double zero_point_p() const { return std::sqrt(hbar * mass * reference_freq() / 2.0); }

  // alpha = sqrt(8/kappa) hbar g for a raw coupling g.
  static double alpha_from_g(double g, double kappa) {
    if (!(kappa > 0.0)) throw Error("alpha_from_g: cavity bandwidth must be positive");
    return std::sqrt(8.0 / kappa) * hbar * g;
  }
};

struct DerivedScales {
  double zeta_F = 0.0;
  double Omega_F = 0.0;
  double Omega_q = 0.0;
  double Omega_x = 0.0;  // +infinity when eta == 1
  double S_F_rp = 0.0;   // alpha^2
  bool omega_x_unbounded = false;
};

inline std::vector<std::string> validate(const PhysicalParams& p) {
  std::vector<std::string> v;
  if (!(p.mass > 0.0)) v.push_back("mass must be positive");
  if (!(p.mech_freq >= 0.0)) v.push_back("mech_freq must be nonnegative");
  if (!(p.mech_damping >= 0.0)) v.push_back("mech_damping must be nonnegative");
  if (!(p.bath_force_spectrum >= 0.0)) v.push_back("S_F_th must be nonnegative");
  if (!std::isfinite(p.coupling)) v.push_back("coupling must be finite");
  if (!(p.cavity_bandwidth > 0.0)) v.push_back("cavity_bandwidth must be positive");
  if (!std::isfinite(p.detuning)) v.push_back("detuning must be finite");
  if (!(p.efficiency >= 0.0 && p.efficiency <= 1.0)) v.push_back("efficiency out of [0,1]");
  if (!(p.window > 0.0)) v.push_back("window must be positive");
  if (!(p.initial_occupation >= 0.0)) v.push_back("initial_occupation must be nonnegative");
  return v;
}

inline void require_valid(const PhysicalParams& p) {
  auto v = validate(p);
  if (v.empty()) return;
  std::string msg = "invalid parameters:";
  for (const auto& s : v) msg += " [" + s + "]";
  throw Error(msg);
}

inline DerivedScales derive_scales(const PhysicalParams& p) {
  DerivedScales d;
  const double a2 = p.coupling * p.coupling;
  const double eta = p.efficiency;
  d.S_F_rp = a2;
  d.Omega_q = std::sqrt(a2 / (hbar * p.mass));
  d.Omega_F = std::sqrt(p.bath_force_spectrum / (2.0 * hbar * p.mass));

  double thermal_ratio = 0.0;  // S_F_th / alpha^2
  if (p.bath_force_spectrum > 0.0) {
    thermal_ratio = a2 > 0.0 ? p.bath_force_spectrum / a2
                             : std::numeric_limits<double>::infinity();
  }
  d.zeta_F = std::sqrt(0.5 * eta * ((1.0 - eta) + thermal_ratio));

  if (eta >= 1.0) {
    d.Omega_x = std::numeric_limits<double>::infinity();
    d.omega_x_unbounded = true;
  } else {
    d.Omega_x = d.Omega_q * std::sqrt(2.0 * eta / (1.0 - eta));
  }
  return d;
}

}  // namespace qsteer
