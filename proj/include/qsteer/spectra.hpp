#pragma once

#include <string>

#include "qsteer/model.hpp"
#include "qsteer/rational.hpp"

namespace qsteer {

struct RationalSpectrum {
  Rat fn;
  std::string tag;
};

// Frequency-domain data of the adiabatic model in the paper's single-sided
// convention (shot-noise floor B11 = 1). Fourier convention
// f~(w) = Integral e^{iwt} f(t) dt, so the causal mechanical response
// G = -1/(m(w^2 - wm^2 + i km w)) has its poles in the lower half-plane and
// Gm(w) = G(-w) equals conj(G) on the real axis.
struct AdiabaticSpectra {
  Rat G, Gm;
  Rat Sxx;  // |G|^2 (alpha^2 + S_F_th)
  Rat B11, B12, B21, B22;
  Rat C11, C12, C21, C22;
  PhysicalParams params;
};

inline Rat mechanical_response(const PhysicalParams& p) {
  const double m = p.mass, wm = p.mech_freq, km = p.mech_damping;
  Poly den({cplx(-m * wm * wm, 0.0), cplx(0.0, m * km), cplx(m, 0.0)});
  return Rat(Poly::constant(-1.0), den);
}

inline AdiabaticSpectra spectra(const LinearModel& model) {
  if (model.flavor != Flavor::Adiabatic)
    throw Error("spectra: analytic spectra exist for the adiabatic flavor only");
  const PhysicalParams& p = model.params;
  AdiabaticSpectra s;
  s.params = p;
  const double a = p.coupling, eta = p.efficiency, S = p.bath_force_spectrum;
  const double se = std::sqrt(eta);
  s.G = mechanical_response(p);
  s.Gm = s.G.reflect();
  s.Sxx = s.G * s.Gm * cplx(a * a + S);
  Poly imw({cplx(0.0), cplx(0.0, p.mass)});  // i m w
  s.B11 = Rat::constant(1.0);
  s.B12 = s.Gm * cplx(-eta * a * a / hbar);
  s.B21 = s.G * cplx(-eta * a * a / hbar);
  s.B22 = Rat::constant(1.0) + s.Sxx * cplx(eta * a * a / (hbar * hbar));
  s.C11 = s.Gm * cplx(-se * a);
  s.C12 = Rat(imw, Poly::constant(1.0)) * s.Gm * cplx(-se * a);
  s.C21 = s.Sxx * cplx(se * a / hbar);
  s.C22 = Rat(imw, Poly::constant(1.0)) * s.Sxx * cplx(se * a / hbar);
  return s;
}

// B22 - B21 B12 / B11, the spectrum factorized as psi+ psi-.
inline Rat joint_spectrum(const AdiabaticSpectra& s) {
  return (s.B22 - s.B21 * s.B12 / s.B11).simplified();
}

}  // namespace qsteer
