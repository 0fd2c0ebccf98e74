#include <catch2/catch_amalgamated.hpp>
#include <cmath>
#include <random>

#include "qsteer/rational.hpp"
#include "qsteer/wienerhopf.hpp"

using namespace qsteer;
using Catch::Matchers::WithinAbs;

namespace {
cplx I(0.0, 1.0);

double max_err_on_axis(const Rat& a, const Rat& b) {
  double worst = 0.0;
  for (int k = 0; k < 1000; ++k) {
    double w = -25.0 + 50.0 * k / 999.0;
    worst = std::max(worst, std::abs(a.eval(cplx(w, 0.0)) - b.eval(cplx(w, 0.0))));
  }
  return worst;
}
}  // namespace

TEST_CASE("polynomial roots, graded coefficients included") {
  SECTION("quartic with known roots") {
    std::vector<cplx> zs{cplx(0.5, 0.5), cplx(-0.5, 0.5), cplx(0.5, -0.5), cplx(-0.5, -0.5)};
    Poly p = Poly::from_roots(zs, 1.0);
    auto r = p.roots();
    REQUIRE(r.size() == 4);
    for (const cplx& z : r) {
      double best = 1e9;
      for (const cplx& t : zs) best = std::min(best, std::abs(z - t));
      CHECK(best < 1e-12);
    }
  }
  SECTION("roots four decades apart survive the companion solve") {
    std::vector<cplx> zs{cplx(0.5, -0.5), cplx(-0.5, -0.5), cplx(6.9e-5, 4e-5),
                         cplx(-6.9e-5, 4e-5)};
    Poly p = Poly::from_roots(zs, 1.0);
    auto r = p.roots();
    REQUIRE(r.size() == 4);
    for (const cplx& t : zs) {
      double best = 1e9;
      for (const cplx& z : r) best = std::min(best, std::abs(z - t) / std::abs(t));
      CHECK(best < 1e-9);
    }
  }
}

TEST_CASE("partial fractions recombine") {
  std::mt19937_64 gen(7);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<cplx> poles;
    for (int k = 0; k < 4; ++k) {
      double re = u(gen);
      double im = 0.4 + std::abs(u(gen));
      poles.emplace_back(re, k % 2 ? im : -im);
    }
    Poly num({cplx(u(gen), u(gen)), cplx(u(gen), u(gen)), cplx(u(gen), u(gen))});
    Rat f(num, Poly::from_roots(poles, 1.0));
    PartialFractions pf = partial_fractions(f);
    Rat back = rational_from_poles(pf.terms) + Rat(pf.entire, Poly::constant(1.0));
    CHECK(max_err_on_axis(f, back) < 1e-10);
  }
}

TEST_CASE("causal split") {
  SECTION("single upper pole is pure minus part") {
    Rat f(Poly::constant(1.0), Poly({-I, cplx(1.0)}));  // 1/(w - i)
    CausalSplit cs = split(f);
    CHECK(cs.plus.is_zero());
    CHECK(max_err_on_axis(cs.minus, f) < 1e-14);
  }
  SECTION("single lower pole is pure plus part") {
    Rat f(Poly::constant(1.0), Poly({I, cplx(1.0)}));  // 1/(w + i)
    CausalSplit cs = split(f);
    CHECK(cs.minus.is_zero());
    CHECK(max_err_on_axis(cs.plus, f) < 1e-14);
  }
  SECTION("2iw/(w^2+1) splits into i/(w-i) + i/(w+i)") {
    Rat f(Poly({cplx(0.0), 2.0 * I}), Poly({cplx(1.0), cplx(0.0), cplx(1.0)}));
    CausalSplit cs = split(f);
    Rat expect_minus(Poly::constant(I), Poly({-I, cplx(1.0)}));
    Rat expect_plus(Poly::constant(I), Poly({I, cplx(1.0)}));
    CHECK(max_err_on_axis(cs.minus, expect_minus) < 1e-12);
    CHECK(max_err_on_axis(cs.plus, expect_plus) < 1e-12);
    CHECK(max_err_on_axis(cs.plus + cs.minus, f) < 1e-12);
  }
  SECTION("real-axis pole is rejected") {
    Rat f(Poly::constant(1.0), Poly({cplx(0.0), cplx(1.0)}));  // 1/w
    CHECK_THROWS_AS(split(f), Error);
  }
  SECTION("entire part goes to plus by convention") {
    // (w^2 + 1 + 1)/(w^2+1) = 1 + 1/(w^2+1)
    Rat f(Poly({cplx(2.0), cplx(0.0), cplx(1.0)}), Poly({cplx(1.0), cplx(0.0), cplx(1.0)}));
    CausalSplit cs = split(f);
    CHECK(std::abs(cs.plus.eval(cplx(100.0, 0.0)) - 1.0) < 1e-3);
    CHECK(std::abs(cs.minus.eval(cplx(100.0, 0.0))) < 1e-3);
  }
}

TEST_CASE("spectral integral by residues") {
  SECTION("1/(w^2+1) integrates to 1/2") {
    Rat f(Poly::constant(1.0), Poly({cplx(1.0), cplx(0.0), cplx(1.0)}));
    CHECK_THAT(spectral_integral(f).real(), WithinAbs(0.5, 1e-14));
  }
  SECTION("w^2/(w^4+4) integrates to 1/4") {
    // int x^2/(x^4+a^4) = pi/(sqrt2 a) with a = sqrt(2)
    Rat f(Poly({cplx(0.0), cplx(0.0), cplx(1.0)}),
          Poly({cplx(4.0), cplx(0.0), cplx(0.0), cplx(0.0), cplx(1.0)}));
    CHECK_THAT(spectral_integral(f).real(), WithinAbs(1.0 / 4.0, 1e-13));
  }
  SECTION("insufficient decay throws") {
    Rat f(Poly({cplx(0.0), cplx(1.0)}), Poly({cplx(1.0), cplx(0.0), cplx(1.0)}));
    CHECK_THROWS_AS(spectral_integral(f), Error);
  }
}

TEST_CASE("pole-zero cancellation keeps representations small") {
  Poly shared = Poly::from_roots({cplx(0.3, 0.8), cplx(-0.2, -0.5)}, 1.0);
  Rat f(shared * Poly({cplx(1.0), cplx(2.0)}), shared * Poly({cplx(2.0), cplx(0.0), cplx(1.0)}));
  Rat g = f.simplified();
  CHECK(g.den().degree() == 2);
  CHECK(g.num().degree() == 1);
  Rat direct(Poly({cplx(1.0), cplx(2.0)}), Poly({cplx(2.0), cplx(0.0), cplx(1.0)}));
  CHECK(max_err_on_axis(g, direct) < 1e-12);
}

TEST_CASE("sums share denominators without stacking root multiplicity") {
  Poly d1 = Poly::from_roots({cplx(0.0, 1.0), cplx(1.0, -1.0)}, 1.0);
  Poly d2 = Poly::from_roots({cplx(0.0, 1.0), cplx(-2.0, 2.0)}, 1.0);
  Rat a(Poly::constant(1.0), d1);
  Rat b(Poly::constant(1.0), d2);
  Rat sum = a + b;
  CHECK(sum.den().degree() == 3);  // lcm, not product
  for (double w : {0.3, 1.7, -2.4})
    CHECK(std::abs(sum.eval(cplx(w, 0.0)) - a.eval(cplx(w, 0.0)) - b.eval(cplx(w, 0.0))) < 1e-12);
}

TEST_CASE("factorization") {
  SECTION("constant spectrum") {
    Factorization f = factorize(Rat::constant(1.0));
    CHECK(std::abs(f.psi_plus.eval(cplx(0.37, 0.0)) - 1.0) < 1e-14);
    CHECK(std::abs(f.psi_minus.eval(cplx(0.37, 0.0)) - 1.0) < 1e-14);
    CHECK(f.upper_zeros.empty());
  }
  SECTION("random even PD spectra factor to 1e-10") {
    std::mt19937_64 gen(11);
    std::uniform_real_distribution<double> u(0.2, 1.6);
    for (int trial = 0; trial < 12; ++trial) {
      cplx z(u(gen), u(gen));
      cplx pp(u(gen) + 0.5, u(gen) + 0.3);
      // (w^2 - z^2)(w^2 - conj(z)^2) is even, real, nonnegative on the axis
      Poly num = Poly::from_roots({z, -z, std::conj(z), -std::conj(z)}, u(gen));
      Poly den = Poly::from_roots({pp, -pp, std::conj(pp), -std::conj(pp)}, 1.0);
      Rat spec(num, den);
      Factorization f = factorize(spec);
      double worst = 0.0;
      for (int k = 0; k < 1000; ++k) {
        double w = -8.0 + 16.0 * k / 999.0;
        cplx lhs = f.psi_plus.eval(cplx(w, 0.0)) * f.psi_minus.eval(cplx(w, 0.0));
        cplx rhs = spec.eval(cplx(w, 0.0));
        worst = std::max(worst, std::abs(lhs - rhs) / std::abs(rhs));
      }
      CHECK(worst < 1e-10);
      // psi+ analytic and invertible above the axis; |psi+| fixed by the spectrum
      for (const cplx& zz : f.psi_plus.num().roots()) CHECK(zz.imag() < 0.0);
      for (const cplx& zz : f.psi_plus.den().roots()) CHECK(zz.imag() < 0.0);
      for (double w : {0.9, 3.1}) {
        double mag = std::abs(f.psi_plus.eval(cplx(w, 0.0)));
        CHECK_THAT(mag * mag, WithinAbs(spec.eval(cplx(w, 0.0)).real(),
                                        1e-9 * std::abs(spec.eval(cplx(w, 0.0)))));
      }
    }
  }
  SECTION("marginal spectrum rejected with guidance") {
    // w^2/(w^2+1): real-axis zero
    Rat spec(Poly({cplx(0.0), cplx(0.0), cplx(1.0)}), Poly({cplx(1.0), cplx(0.0), cplx(1.0)}));
    CHECK_THROWS_WITH(factorize(spec), Catch::Matchers::ContainsSubstring("damping"));
  }
  SECTION("negative spectrum rejected") {
    CHECK_THROWS_AS(factorize(Rat::constant(-1.0)), Error);
  }
}
