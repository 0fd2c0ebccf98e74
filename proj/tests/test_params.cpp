#include <catch2/catch_amalgamated.hpp>
#include <cmath>

#include "qsteer/params.hpp"

using namespace qsteer;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {
PhysicalParams base() {
  PhysicalParams p;
  p.mass = 1.0;
  p.coupling = 1.0;
  p.efficiency = 0.5;
  p.window = 10.0;
  return p;
}
}  // namespace

TEST_CASE("zeta_F examples") {
  PhysicalParams p = base();
  SECTION("eta=0.5 shot-only") {
    CHECK_THAT(derive_scales(p).zeta_F, WithinAbs(std::sqrt(0.125), 1e-12));
  }
  SECTION("eta=1 shot-only vanishes") {
    p.efficiency = 1.0;
    CHECK(derive_scales(p).zeta_F == 0.0);
  }
  SECTION("eta=0.8 with thermal ratio 0.1") {
    p.efficiency = 0.8;
    p.bath_force_spectrum = 0.1;  // alpha = 1
    CHECK_THAT(derive_scales(p).zeta_F, WithinAbs(0.34641016151377546, 1e-12));
  }
}

TEST_CASE("characteristic frequencies") {
  PhysicalParams p = base();
  p.efficiency = 0.8;
  p.bath_force_spectrum = 0.3;
  DerivedScales d = derive_scales(p);
  CHECK_THAT(d.Omega_q, WithinRel(1.0, 1e-12));
  CHECK_THAT(d.Omega_F, WithinRel(std::sqrt(0.15), 1e-12));
  CHECK_THAT(d.Omega_x, WithinRel(std::sqrt(2.0 * 0.8 / 0.2), 1e-12));
  CHECK(d.S_F_rp == 1.0);

  SECTION("eta = 1 marks Omega_x unbounded instead of crashing") {
    p.efficiency = 1.0;
    DerivedScales d1 = derive_scales(p);
    CHECK(d1.omega_x_unbounded);
    CHECK(std::isinf(d1.Omega_x));
  }
}

TEST_CASE("validate reports violations by field") {
  PhysicalParams p = base();
  CHECK(validate(p).empty());

  p.efficiency = 1.2;
  auto v = validate(p);
  REQUIRE(v.size() == 1);
  CHECK(v[0].find("efficiency") != std::string::npos);

  p = base();
  p.mass = 0.0;
  v = validate(p);
  REQUIRE(v.size() == 1);
  CHECK(v[0].find("mass") != std::string::npos);

  p = base();
  p.window = -1.0;
  p.bath_force_spectrum = -2.0;
  CHECK(validate(p).size() == 2);
}

TEST_CASE("scale covariance of derived scales") {
  // frequencies and alpha^2/(hbar m) scaled by lam^2 scale the Omegas by lam
  // and leave zeta_F untouched
  PhysicalParams p = base();
  p.mech_freq = 0.7;
  p.mech_damping = 0.2;
  p.efficiency = 0.65;
  p.bath_force_spectrum = 0.4;
  DerivedScales d0 = derive_scales(p);
  for (double lam : {0.5, 2.0, 7.3}) {
    PhysicalParams q = p;
    q.mech_freq *= lam * lam;
    q.mech_damping *= lam * lam;
    q.cavity_bandwidth *= lam * lam;
    q.detuning *= lam * lam;
    q.coupling *= lam;
    q.bath_force_spectrum *= lam * lam;
    q.window /= lam;
    DerivedScales d = derive_scales(q);
    CHECK_THAT(d.zeta_F, WithinRel(d0.zeta_F, 1e-12));
    CHECK_THAT(d.Omega_q, WithinRel(lam * d0.Omega_q, 1e-12));
    CHECK_THAT(d.Omega_F, WithinRel(lam * d0.Omega_F, 1e-12));
    CHECK_THAT(d.Omega_x, WithinRel(lam * d0.Omega_x, 1e-12));
  }
}

TEST_CASE("zeta_F monotonic in thermal force, maximal at eta = 1/2") {
  PhysicalParams p = base();
  double last = -1.0;
  for (double S : {0.0, 0.1, 0.5, 2.0}) {
    p.bath_force_spectrum = S;
    double z = derive_scales(p).zeta_F;
    CHECK(z >= last);
    last = z;
  }
  p.bath_force_spectrum = 0.0;
  double zmax = 0.0;
  for (int k = 1; k < 100; ++k) {
    p.efficiency = k / 100.0;
    zmax = std::max(zmax, derive_scales(p).zeta_F);
  }
  p.efficiency = 0.5;
  CHECK_THAT(derive_scales(p).zeta_F, WithinAbs(zmax, 1e-12));
  CHECK_THAT(zmax, WithinAbs(std::sqrt(1.0 / 8.0), 1e-12));
}

TEST_CASE("alpha from raw coupling g") {
  CHECK_THAT(PhysicalParams::alpha_from_g(3.0, 8.0), WithinRel(3.0, 1e-12));
  CHECK_THROWS_AS(PhysicalParams::alpha_from_g(1.0, 0.0), Error);
}
