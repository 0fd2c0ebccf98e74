#pragma once

#include "qsteer/conditioning.hpp"
#include "qsteer/gram.hpp"
#include "qsteer/io.hpp"
#include "qsteer/model.hpp"
#include "qsteer/params.hpp"
#include "qsteer/rational.hpp"
#include "qsteer/spectra.hpp"
#include "qsteer/trajectory.hpp"
#include "qsteer/wienerhopf.hpp"

namespace qsteer {

// Default window: 12 e-foldings of the slowest filter memory, read off the
// upper-half-plane roots of the factorized joint spectrum when available,
// else the 12/(2^{1/4} sqrt(zeta_F) Omega_q) heuristic. Capped so the
// eta -> 1 (zeta_F -> 0) limit stays finite.
inline double default_window(const PhysicalParams& p, Flavor flavor) {
  DerivedScales d = derive_scales(p);
  if (!(d.Omega_q > 0.0))
    throw Error("default_window: no frequency scale with alpha = 0; give tau explicitly");
  const double zeff = std::max(d.zeta_F, 1e-2);
  double rate = std::pow(2.0, 0.25) * std::sqrt(zeff) * d.Omega_q;  // heuristic
  if (flavor == Flavor::Adiabatic) {
    try {
      LinearModel m = build_model(p, flavor);
      Rat js = joint_spectrum(spectra(m));
      double min_im = std::numeric_limits<double>::infinity();
      for (const cplx& z : js.num().roots())
        if (z.imag() > 1e-12) min_im = std::min(min_im, z.imag());
      for (const cplx& z : js.den().roots())
        if (z.imag() > 1e-12) min_im = std::min(min_im, z.imag());
      if (std::isfinite(min_im)) rate = std::max(min_im, 0.06 * d.Omega_q * std::sqrt(zeff));
    } catch (const Error&) {
      // fall back to the heuristic
    }
  }
  return 12.0 / rate;
}

}  // namespace qsteer
