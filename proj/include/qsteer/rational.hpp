#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <complex>
#include <initializer_list>
#include <vector>

#include "qsteer/params.hpp"

namespace qsteer {

using cplx = std::complex<double>;

// Dense polynomial in one complex variable, coefficients ascending. Leading
// coefficients below 1e-12 of the largest magnitude are trimmed after every
// operation so degrees stay honest.
class Poly {
 public:
  Poly() : c_(1, cplx(0.0)) {}
  explicit Poly(std::vector<cplx> c) : c_(std::move(c)) {
    if (c_.empty()) c_.assign(1, cplx(0.0));
    trim();
  }
  Poly(std::initializer_list<cplx> c) : Poly(std::vector<cplx>(c)) {}

  static Poly constant(cplx v) { return Poly({v}); }
  static Poly variable() { return Poly({cplx(0.0), cplx(1.0)}); }
  static Poly from_roots(const std::vector<cplx>& roots, cplx leading) {
    Poly p = constant(leading);
    for (const cplx& r : roots) p = p * Poly({-r, cplx(1.0)});
    return p;
  }

  int degree() const { return static_cast<int>(c_.size()) - 1; }
  const std::vector<cplx>& coeffs() const { return c_; }
  cplx coeff(int k) const { return k < static_cast<int>(c_.size()) ? c_[k] : cplx(0.0); }
  cplx leading() const { return c_.back(); }
  double scale() const {
    double s = 0.0;
    for (const cplx& v : c_) s = std::max(s, std::abs(v));
    return s;
  }
  bool is_zero() const { return degree() == 0 && c_[0] == cplx(0.0); }

  cplx eval(cplx w) const {
    cplx acc = 0.0;
    for (auto it = c_.rbegin(); it != c_.rend(); ++it) acc = acc * w + *it;
    return acc;
  }

  Poly derivative() const {
    if (degree() == 0) return constant(0.0);
    std::vector<cplx> d(c_.size() - 1);
    for (size_t k = 1; k < c_.size(); ++k) d[k - 1] = c_[k] * double(k);
    return Poly(std::move(d));
  }

  Poly conj_coeffs() const {
    std::vector<cplx> d(c_.size());
    for (size_t k = 0; k < c_.size(); ++k) d[k] = std::conj(c_[k]);
    return Poly(std::move(d));
  }

  // w -> -w
  Poly reflect() const {
    std::vector<cplx> d(c_.size());
    for (size_t k = 0; k < c_.size(); ++k) d[k] = (k % 2 == 0) ? c_[k] : -c_[k];
    return Poly(std::move(d));
  }

  Poly operator+(const Poly& o) const {
    std::vector<cplx> d(std::max(c_.size(), o.c_.size()), cplx(0.0));
    for (size_t k = 0; k < c_.size(); ++k) d[k] += c_[k];
    for (size_t k = 0; k < o.c_.size(); ++k) d[k] += o.c_[k];
    return Poly(std::move(d));
  }
  Poly operator-(const Poly& o) const { return *this + (o * cplx(-1.0)); }
  Poly operator*(const Poly& o) const {
    std::vector<cplx> d(c_.size() + o.c_.size() - 1, cplx(0.0));
    for (size_t i = 0; i < c_.size(); ++i)
      for (size_t j = 0; j < o.c_.size(); ++j) d[i + j] += c_[i] * o.c_[j];
    return Poly(std::move(d));
  }
  Poly operator*(cplx s) const {
    std::vector<cplx> d(c_);
    for (cplx& v : d) v *= s;
    return Poly(std::move(d));
  }

  // Long division: *this = q * d + r, deg r < deg d.
  std::pair<Poly, Poly> divmod(const Poly& d) const {
    if (d.is_zero()) throw Error("poly division by zero");
    std::vector<cplx> rem = c_;
    int dn = d.degree();
    if (degree() < dn) return {constant(0.0), *this};
    std::vector<cplx> q(degree() - dn + 1, cplx(0.0));
    for (int k = degree() - dn; k >= 0; --k) {
      cplx f = rem[k + dn] / d.c_[dn];
      q[k] = f;
      for (int j = 0; j <= dn; ++j) rem[k + j] -= f * d.c_[j];
    }
    rem.resize(std::max(dn, 1));
    return {Poly(std::move(q)), Poly(std::move(rem))};
  }

  // Deflate by (w - r) using synthetic division; remainder discarded.
  Poly deflate(cplx r) const {
    if (degree() == 0) return constant(0.0);
    std::vector<cplx> q(c_.size() - 1);
    cplx carry = c_.back();
    for (int k = degree() - 1; k >= 0; --k) {
      q[k] = carry;
      carry = c_[k] + carry * r;
    }
    return Poly(std::move(q));
  }

  // Companion-matrix roots with Parlett-Reinsch balancing (Eigen's Schur does
  // not balance, which loses small roots of graded polynomials) and a Newton
  // polish. Deterministic ordering.
  std::vector<cplx> roots() const {
    int n = degree();
    if (n <= 0) return {};
    if (n == 1) return {-c_[0] / c_[1]};
    Eigen::MatrixXcd comp = Eigen::MatrixXcd::Zero(n, n);
    for (int k = 0; k < n - 1; ++k) comp(k + 1, k) = 1.0;
    for (int k = 0; k < n; ++k) comp(k, n - 1) = -c_[k] / c_[n];
    balance_(comp);
    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(comp, false);
    if (es.info() != Eigen::Success) throw Error("root finding failed");
    std::vector<cplx> r(es.eigenvalues().data(), es.eigenvalues().data() + n);
    Poly d = derivative();
    for (cplx& z : r) {
      for (int it = 0; it < 2; ++it) {
        cplx dz = d.eval(z);
        if (std::abs(dz) == 0.0) break;
        cplx step = eval(z) / dz;
        if (!std::isfinite(std::abs(step))) break;
        z -= step;
      }
    }
    std::sort(r.begin(), r.end(), [](const cplx& a, const cplx& b) {
      if (a.real() != b.real()) return a.real() < b.real();
      return a.imag() < b.imag();
    });
    return r;
  }

  void trim(double rel = 1e-12) {
    double s = scale();
    double tol = s * rel;
    while (c_.size() > 1 && std::abs(c_.back()) <= tol) c_.pop_back();
    if (c_.size() == 1 && std::abs(c_[0]) <= 0.0) c_[0] = 0.0;
  }

 private:
  // Diagonal similarity with powers of 2 equalizing row/column norms.
  static void balance_(Eigen::MatrixXcd& A) {
    const int n = static_cast<int>(A.rows());
    bool converged = false;
    for (int pass = 0; pass < 50 && !converged; ++pass) {
      converged = true;
      for (int i = 0; i < n; ++i) {
        double r = 0.0, c = 0.0;
        for (int j = 0; j < n; ++j) {
          if (j == i) continue;
          r += std::abs(A(i, j));
          c += std::abs(A(j, i));
        }
        if (r == 0.0 || c == 0.0) continue;
        double f = 1.0;
        double s = r + c;
        while (c < r / 2.0) {
          c *= 2.0;
          r /= 2.0;
          f *= 2.0;
        }
        while (c >= r * 2.0) {
          c /= 2.0;
          r *= 2.0;
          f /= 2.0;
        }
        if ((r + c) < 0.95 * s) {
          converged = false;
          A.row(i) /= f;
          A.col(i) *= f;
        }
      }
    }
  }

  std::vector<cplx> c_;
};

inline Poly operator*(cplx s, const Poly& p) { return p * s; }

// Rational function num/den. simplify() cancels matching root pairs so that
// near-degenerate pole/zero pairs created by intermediate algebra do not
// poison residue evaluation downstream.
class Rat {
 public:
  Rat() : num_(Poly::constant(0.0)), den_(Poly::constant(1.0)) {}
  Rat(Poly num, Poly den) : num_(std::move(num)), den_(std::move(den)) {
    if (den_.is_zero()) throw Error("rational with zero denominator");
    normalize_();
  }
  static Rat constant(cplx v) { return Rat(Poly::constant(v), Poly::constant(1.0)); }

  const Poly& num() const { return num_; }
  const Poly& den() const { return den_; }
  bool is_zero() const { return num_.is_zero(); }
  cplx eval(cplx w) const { return num_.eval(w) / den_.eval(w); }
  // degree of decay at infinity: deg den - deg num
  int relative_degree() const { return den_.degree() - num_.degree(); }

  Rat conj_coeffs() const { return Rat(num_.conj_coeffs(), den_.conj_coeffs()); }
  Rat reflect() const { return Rat(num_.reflect(), den_.reflect()); }

  Rat operator+(const Rat& o) const { return add_(o, 1.0); }
  Rat operator-(const Rat& o) const { return add_(o, -1.0); }
  Rat operator*(const Rat& o) const {
    return Rat(num_ * o.num_, den_ * o.den_).simplified();
  }
  Rat operator/(const Rat& o) const {
    if (o.is_zero()) throw Error("rational division by zero");
    return Rat(num_ * o.den_, den_ * o.num_).simplified();
  }
  Rat operator*(cplx s) const { return Rat(num_ * s, den_); }

  Rat simplified(double tol = 1e-9) const {
    if (num_.is_zero() || den_.degree() == 0) return *this;
    std::vector<cplx> zn = num_.roots();
    std::vector<cplx> zd = den_.roots();
    std::vector<bool> usedn(zn.size(), false);
    std::vector<bool> usedd(zd.size(), false);
    bool any = false;
    for (size_t i = 0; i < zd.size(); ++i) {
      int best = -1;
      double bestdist = 0.0;
      for (size_t j = 0; j < zn.size(); ++j) {
        if (usedn[j]) continue;
        double dist = std::abs(zn[j] - zd[i]);
        if (best < 0 || dist < bestdist) {
          best = static_cast<int>(j);
          bestdist = dist;
        }
      }
      if (best >= 0 && bestdist <= tol * (1.0 + std::abs(zd[i]))) {
        usedn[best] = true;
        usedd[i] = true;
        any = true;
      }
    }
    if (!any) return *this;
    std::vector<cplx> rn, rd;
    for (size_t j = 0; j < zn.size(); ++j)
      if (!usedn[j]) rn.push_back(zn[j]);
    for (size_t i = 0; i < zd.size(); ++i)
      if (!usedd[i]) rd.push_back(zd[i]);
    return Rat(Poly::from_roots(rn, num_.leading()), Poly::from_roots(rd, den_.leading()));
  }

 private:
  static bool same_coeffs_(const Poly& a, const Poly& b) {
    if (a.degree() != b.degree()) return false;
    for (int k = 0; k <= a.degree(); ++k)
      if (a.coeff(k) != b.coeff(k)) return false;
    return true;
  }

  // Sums go over a least common denominator found by root matching, so
  // repeated factors never stack up into (near-)multiple roots. Denominators
  // are monic after normalize_().
  Rat add_(const Rat& o, double sign) const {
    if (is_zero()) return sign > 0 ? o : Rat(o.num_ * cplx(-1.0), o.den_);
    if (o.is_zero()) return *this;
    if (same_coeffs_(den_, o.den_))
      return Rat(num_ + o.num_ * cplx(sign), den_).simplified();
    if (den_.degree() == 0) return Rat(num_ * o.den_ + o.num_ * cplx(sign), o.den_).simplified();
    if (o.den_.degree() == 0)
      return Rat(num_ + o.num_ * den_ * cplx(sign), den_).simplified();
    std::vector<cplx> r1 = den_.roots();
    std::vector<cplx> r2 = o.den_.roots();
    double sc = 0.0;
    for (const cplx& z : r1) sc = std::max(sc, std::abs(z));
    for (const cplx& z : r2) sc = std::max(sc, std::abs(z));
    std::vector<bool> matched2(r2.size(), false);
    std::vector<cplx> only1;
    std::vector<cplx> shared;
    for (const cplx& z : r1) {
      int best = -1;
      double bd = 0.0;
      for (size_t j = 0; j < r2.size(); ++j) {
        if (matched2[j]) continue;
        double dd = std::abs(r2[j] - z);
        if (best < 0 || dd < bd) {
          best = static_cast<int>(j);
          bd = dd;
        }
      }
      if (best >= 0 && bd <= 1e-9 * (1.0 + sc)) {
        matched2[best] = true;
        shared.push_back(z);
      } else {
        only1.push_back(z);
      }
    }
    std::vector<cplx> only2;
    for (size_t j = 0; j < r2.size(); ++j)
      if (!matched2[j]) only2.push_back(r2[j]);
    Poly q1 = Poly::from_roots(only2, cplx(1.0));
    Poly q2 = Poly::from_roots(only1, cplx(1.0));
    std::vector<cplx> all = shared;
    all.insert(all.end(), only1.begin(), only1.end());
    all.insert(all.end(), only2.begin(), only2.end());
    Poly lcm = Poly::from_roots(all, cplx(1.0));
    return Rat(num_ * q1 + o.num_ * q2 * cplx(sign), lcm).simplified();
  }

  void normalize_() {
    num_.trim();
    den_.trim();
    cplx lead = den_.leading();
    num_ = num_ * (1.0 / lead);
    den_ = den_ * (1.0 / lead);
  }
  Poly num_, den_;
};

inline Rat operator*(cplx s, const Rat& r) { return r * s; }

struct PoleTerm {
  cplx pole;
  cplx residue;
};

// Simple-pole partial fractions of the proper part; the entire (polynomial)
// part is returned separately.
struct PartialFractions {
  Poly entire;
  std::vector<PoleTerm> terms;
};

inline PartialFractions partial_fractions(const Rat& f) {
  PartialFractions out;
  auto [q, r] = f.num().divmod(f.den());
  out.entire = q;
  if (r.is_zero()) return out;
  std::vector<cplx> poles = f.den().roots();
  double sc = 0.0;
  for (const cplx& p : poles) sc = std::max(sc, std::abs(p));
  for (size_t i = 0; i < poles.size(); ++i) {
    for (size_t j = i + 1; j < poles.size(); ++j) {
      if (std::abs(poles[i] - poles[j]) <= 1e-10 * (1.0 + sc))
        throw Error("partial fractions: (near-)multiple pole; simplify or regularize first");
    }
  }
  Poly dden = f.den().derivative();
  out.terms.reserve(poles.size());
  for (const cplx& p : poles) out.terms.push_back({p, r.eval(p) / dden.eval(p)});
  return out;
}

// Rebuild sum_j res_j / (w - p_j) as a single rational.
inline Rat rational_from_poles(const std::vector<PoleTerm>& terms) {
  if (terms.empty()) return Rat::constant(0.0);
  Poly den = Poly::constant(1.0);
  for (const auto& t : terms) den = den * Poly({-t.pole, cplx(1.0)});
  Poly num = Poly::constant(0.0);
  for (size_t j = 0; j < terms.size(); ++j) {
    Poly prod = Poly::constant(terms[j].residue);
    for (size_t k = 0; k < terms.size(); ++k)
      if (k != j) prod = prod * Poly({-terms[k].pole, cplx(1.0)});
    num = num + prod;
  }
  return Rat(std::move(num), std::move(den));
}

// Causal/anticausal decomposition f = plus + minus. The minus part collects
// the upper-half-plane pole terms (time support t < 0); the plus part the
// lower-half-plane terms plus the entire part by convention.
struct CausalSplit {
  Rat plus;
  Rat minus;
};

inline CausalSplit split(const Rat& f) {
  Rat g = f.simplified();
  std::vector<cplx> poles = g.den().roots();
  double sc = 1.0;
  for (const cplx& p : poles) sc = std::max(sc, std::abs(p));
  for (const cplx& p : poles) {
    if (std::abs(p.imag()) <= 1e-12 * sc)
      throw Error("split: pole on the real axis; add damping/regularization");
  }
  PartialFractions pf = partial_fractions(g);
  std::vector<PoleTerm> up, down;
  for (const auto& t : pf.terms)
    (t.pole.imag() > 0.0 ? up : down).push_back(t);
  CausalSplit out;
  out.minus = rational_from_poles(up);
  out.plus = rational_from_poles(down) + Rat(pf.entire, Poly::constant(1.0));
  return out;
}

// (1/2pi) Integral of R over the real axis, closed in the upper half-plane:
// i * sum of upper residues. Requires at least 1/w^2 decay.
inline cplx spectral_integral(const Rat& f) {
  Rat g = f.simplified();
  if (g.is_zero()) return 0.0;
  if (g.relative_degree() < 2)
    throw Error("spectral_integral: divergent integrand (missing regularization?)");
  std::vector<cplx> poles = g.den().roots();
  double sc = 1.0;
  for (const cplx& p : poles) sc = std::max(sc, std::abs(p));
  for (const cplx& p : poles) {
    if (std::abs(p.imag()) <= 1e-12 * sc)
      throw Error("spectral_integral: pole on the real axis");
  }
  PartialFractions pf = partial_fractions(g);
  // With decay >= 2 the upper residues carry the whole integral.
  cplx acc = 0.0;
  for (const auto& t : pf.terms)
    if (t.pole.imag() > 0.0) acc += t.residue;
  return cplx(0.0, 1.0) * acc;
}

}  // namespace qsteer
