#include <catch2/catch_amalgamated.hpp>
#include <unsupported/Eigen/MatrixFunctions>
#include <cmath>

#include "qsteer/model.hpp"
#include "qsteer/spectra.hpp"

using namespace qsteer;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {
PhysicalParams free_mass(double eta = 1.0, double alpha = 1.0) {
  PhysicalParams p;
  p.mass = 1.0;
  p.coupling = alpha;
  p.efficiency = eta;
  p.window = 10.0;
  return p;
}
}  // namespace

TEST_CASE("green_x") {
  PhysicalParams p = free_mass();
  SECTION("t = 0") { CHECK(green_x(p, 0.0) == 0.0); }
  SECTION("free mass is t/m") { CHECK_THAT(green_x(p, 2.5), WithinRel(2.5, 1e-15)); }
  SECTION("damped oscillator formula") {
    p.mech_freq = 2.0;
    p.mech_damping = 0.1;
    CHECK_THAT(green_x(p, 1.0), WithinRel(0.4324752340096867, 1e-13));
  }
  SECTION("negative time rejected") { CHECK_THROWS_AS(green_x(p, -1e-9), Error); }
  SECTION("matches the exact impulse response for weak damping") {
    // formula carries sin(omega_m t), exact response sin(sqrt(wm^2-km^2/4) t);
    // difference is O((km/wm)^2)
    p.mech_freq = 2.0;
    p.mech_damping = 0.1;
    Eigen::Matrix2d D;
    D << 0.0, 1.0, -4.0, -0.1;
    for (double t : {0.5, 1.0, 3.0}) {
      double ode = (D * t).exp()(0, 1);
      CHECK_THAT(green_x(p, t), WithinAbs(ode, 1e-3));
    }
  }
}

TEST_CASE("sql_spectrum") {
  CHECK_THAT(sql_spectrum(1.0, 1.0), WithinRel(2.0, 1e-15));
  CHECK_THAT(sql_spectrum(2.0, 1.0), WithinRel(0.5, 1e-15));
  for (double m : {0.3, 1.0, 5.0})
    for (double w : {0.2, 1.7})
      CHECK_THAT(sql_spectrum(2.0 * w, m), WithinRel(sql_spectrum(w, m) / 4.0, 1e-13));
  CHECK_THROWS_AS(sql_spectrum(0.0, 1.0), Error);
  CHECK_THROWS_AS(sql_spectrum(-1.0, 1.0), Error);
}

TEST_CASE("adiabatic model structure") {
  SECTION("zero coupling leaves the free-particle shear and decoupled outputs") {
    PhysicalParams p = free_mass(0.7, 0.0);
    LinearModel m = build_model(p, Flavor::Adiabatic);
    Eigen::Matrix2d shear;
    shear << 0.0, 1.0, 0.0, 0.0;
    CHECK((m.drift - shear).norm() == 0.0);
    CHECK(m.readout.norm() == 0.0);
    CHECK(m.input.col(ch_a1).norm() == 0.0);
  }
  SECTION("y2 reads x with weight sqrt(eta) alpha / hbar") {
    PhysicalParams p = free_mass(0.36, 2.5);
    LinearModel m = build_model(p, Flavor::Adiabatic);
    CHECK_THAT(m.readout(1, 0), WithinRel(0.6 * 2.5 / hbar, 1e-14));
    CHECK(m.readout(0, 0) == 0.0);
    CHECK(m.readout(0, 1) == 0.0);
  }
  SECTION("shot-noise feedthrough weights") {
    PhysicalParams p = free_mass(0.36);
    LinearModel m = build_model(p, Flavor::Adiabatic);
    CHECK_THAT(m.feedthrough(0, ch_a1), WithinRel(0.6, 1e-14));
    CHECK_THAT(m.feedthrough(0, ch_n1), WithinRel(0.8, 1e-14));
    CHECK_THAT(m.feedthrough(1, ch_a2), WithinRel(0.6, 1e-14));
    CHECK_THAT(m.feedthrough(1, ch_n2), WithinRel(0.8, 1e-14));
  }
  SECTION("invalid parameters rejected") {
    PhysicalParams p = free_mass(1.4);
    CHECK_THROWS_AS(build_model(p, Flavor::Adiabatic), Error);
  }
}

TEST_CASE("drift eigenvalues stay in the closed left half-plane") {
  PhysicalParams p = free_mass(0.8);
  p.mech_freq = 0.9;
  p.mech_damping = 0.25;
  p.detuning = 0.7;
  p.cavity_bandwidth = 6.0;
  for (Flavor f : {Flavor::Adiabatic, Flavor::FullCavity}) {
    LinearModel m = build_model(p, f);
    auto ev = m.drift.eigenvalues();
    for (int k = 0; k < ev.size(); ++k) CHECK(ev(k).real() <= 1e-12);
  }
}

TEST_CASE("cavity elimination reproduces the adiabatic force kernel at large kappa") {
  // x-response to an a1 impulse: adiabatic -alpha G_x(t) vs full cavity
  PhysicalParams p = free_mass(1.0, 1.0);
  p.detuning = 0.0;
  auto kernel_err = [&](double kappa) {
    PhysicalParams q = p;
    q.cavity_bandwidth = kappa;
    LinearModel full = build_model(q, Flavor::FullCavity);
    double worst = 0.0;
    for (double t : {0.5, 1.0, 2.0, 4.0}) {
      Eigen::MatrixXd Phi = (full.drift * t).exp();
      double x_full = (Phi * full.input.col(ch_a1))(0);
      double x_ad = -q.coupling * green_x(q, t);
      worst = std::max(worst, std::abs(x_full - x_ad) / std::abs(x_ad));
    }
    return worst;
  };
  double e100 = kernel_err(100.0);
  double e1000 = kernel_err(1000.0);
  CHECK(e100 < 0.05);
  CHECK(e1000 < 0.005);
  CHECK(e1000 < 0.2 * e100);  // O(1/kappa)
}

TEST_CASE("adiabatic spectra in the paper convention") {
  SECTION("alpha = 0 decouples the field") {
    LinearModel m = build_model(free_mass(0.9, 0.0), Flavor::Adiabatic);
    AdiabaticSpectra s = spectra(m);
    for (double w : {0.3, 1.1}) {
      CHECK(std::abs(s.B12.eval(cplx(w, 0.0))) < 1e-14);
      CHECK(std::abs(s.B21.eval(cplx(w, 0.0))) < 1e-14);
      CHECK_THAT(s.B22.eval(cplx(w, 0.0)).real(), WithinAbs(1.0, 1e-14));
    }
  }
  SECTION("B22 = 1 + alpha^4/omega^4 at eta = 1, shot only, free mass") {
    LinearModel m = build_model(free_mass(1.0, 1.0), Flavor::Adiabatic);
    AdiabaticSpectra s = spectra(m);
    CHECK_THAT(s.B22.eval(cplx(1.0, 0.0)).real(), WithinRel(2.0, 1e-12));
    CHECK_THAT(s.B22.eval(cplx(2.0, 0.0)).real(), WithinRel(1.0 + 1.0 / 16.0, 1e-12));
  }
  SECTION("joint spectrum matches the quartic form") {
    PhysicalParams p = free_mass(0.6, 1.0);
    p.bath_force_spectrum = 0.2;
    LinearModel m = build_model(p, Flavor::Adiabatic);
    AdiabaticSpectra s = spectra(m);
    Rat js = joint_spectrum(s);
    DerivedScales d = derive_scales(p);
    for (double w : {0.4, 0.9, 2.2}) {
      double expect =
          (std::pow(w, 4) + 2.0 * std::pow(d.Omega_q, 4) * d.zeta_F * d.zeta_F) / std::pow(w, 4);
      CHECK_THAT(js.eval(cplx(w, 0.0)).real(), WithinRel(expect, 1e-10));
    }
  }
  SECTION("B matrix is Hermitian positive semidefinite on the real axis") {
    PhysicalParams p = free_mass(0.75, 1.3);
    p.mech_freq = 0.8;
    p.mech_damping = 0.3;
    p.bath_force_spectrum = 0.5;
    LinearModel m = build_model(p, Flavor::Adiabatic);
    AdiabaticSpectra s = spectra(m);
    for (double w : {0.2, 0.7, 1.4, 3.8}) {
      cplx b12 = s.B12.eval(cplx(w, 0.0));
      cplx b21 = s.B21.eval(cplx(w, 0.0));
      CHECK_THAT(std::abs(b21 - std::conj(b12)), WithinAbs(0.0, 1e-12));
      double b11 = s.B11.eval(cplx(w, 0.0)).real();
      double b22 = s.B22.eval(cplx(w, 0.0)).real();
      CHECK(b11 > 0.0);
      CHECK(b11 * b22 - std::norm(b12) > -1e-12);
    }
  }
  SECTION("full-cavity flavor has no rational spectra") {
    LinearModel m = build_model(free_mass(), Flavor::FullCavity);
    CHECK_THROWS_AS(spectra(m), Error);
  }
}

TEST_CASE("time-domain kernel from spectra matches state-space correlation") {
  // Sym y2-y2 correlation at lag: inverse transform of (B22 - shot)/2 against
  // the Lyapunov + propagation route.
  PhysicalParams p = free_mass(0.85, 1.0);
  p.mech_freq = 1.2;
  p.mech_damping = 0.6;
  p.bath_force_spectrum = 0.4;
  LinearModel m = build_model(p, Flavor::Adiabatic);
  AdiabaticSpectra s = spectra(m);

  // state-space: stationary P solves D P + P D^T + Q = 0
  Eigen::Matrix2d D = m.drift;
  Eigen::Matrix2d Q = Eigen::Matrix2d::Zero();
  Q(1, 1) = (p.coupling * p.coupling + p.bath_force_spectrum) / 2.0;
  Eigen::Matrix4d K = Eigen::Matrix4d::Identity();
  K.topLeftCorner(2, 2) *= 0.0;
  // solve via vectorization: (I (x) D + D (x) I) vec(P) = -vec(Q)
  Eigen::Matrix4d lyap = Eigen::Matrix4d::Zero();
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      for (int k = 0; k < 2; ++k) {
        lyap(i * 2 + j, k * 2 + j) += D(i, k);
        lyap(i * 2 + j, i * 2 + k) += D(j, k);
      }
  Eigen::Vector4d q(Q(0, 0), Q(0, 1), Q(1, 0), Q(1, 1));
  Eigen::Vector4d pvec = lyap.colPivHouseholderQr().solve(-q);
  Eigen::Matrix2d P;
  P << pvec(0), pvec(1), pvec(2), pvec(3);

  double coeff = p.efficiency * p.coupling * p.coupling / (hbar * hbar);
  for (double lag : {0.4, 1.0, 2.0}) {
    Eigen::Matrix2d Phi = (D * lag).exp();
    double ss = coeff * (Phi * P)(0, 0);  // <x(t+lag) x(t)>_sym weight in y2
    // inverse transform of the paper-convention (single-sided) spectrum / 2
    double quad = 0.0;
    int n = 40000;
    double wmaxq = 60.0, dw = 2.0 * wmaxq / n;
    for (int k = 0; k <= n; ++k) {
      double w = -wmaxq + k * dw;
      double wgt = (k == 0 || k == n) ? 0.5 : 1.0;
      cplx val = (s.B22.eval(cplx(w, 0.0)) - 1.0) * std::exp(cplx(0.0, -w * lag));
      quad += wgt * val.real();
    }
    quad *= dw / (4.0 * M_PI);  // extra 1/2: single-sided -> symmetrized
    CHECK_THAT(quad, WithinAbs(ss, 5e-3 * std::abs(ss) + 1e-4));
  }
}
