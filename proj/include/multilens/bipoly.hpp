#pragma once

#include <complex>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>

#include <Eigen/Core>

#include "multilens/errors.hpp"

namespace multilens {

// Degree vector of a bivariate polynomial: highest exponent in x and in
// xbar, with the componentwise partial order. The zero polynomial carries
// no degree vector; callers get std::nullopt instead of a sentinel pair.
struct degree_vector {
  long long s = 0;  // degree in x
  long long t = 0;  // degree in xbar

  friend bool operator==(degree_vector a, degree_vector b) {
    return a.s == b.s && a.t == b.t;
  }
  friend bool operator!=(degree_vector a, degree_vector b) { return !(a == b); }
  // Partial order: a <= b iff both components are.
  friend bool operator<=(degree_vector a, degree_vector b) {
    return a.s <= b.s && a.t <= b.t;
  }
  friend degree_vector operator+(degree_vector a, degree_vector b) {
    return {a.s + b.s, a.t + b.t};
  }
  std::string str() const {
    return "(" + std::to_string(s) + "," + std::to_string(t) + ")";
  }
};

// Dense bivariate polynomial over complex coefficients in the formally
// independent variables x and xbar. coeffs()(a, b) is the coefficient of
// x^a * xbar^b. Storage is kept pruned: the matrix extent equals the
// effective degree, where coefficients at or below prune_tol times the
// largest magnitude do not count towards the degree. Values are immutable
// once built; every operation returns a fresh polynomial.
class bipoly {
 public:
  static constexpr double prune_tol = 1e-12;
  // Cap on the nominal degree per variable of any product; products that
  // would exceed it throw overflow_error.
  static inline long long degree_cap = 512;

  using matrix = Eigen::MatrixXcd;
  using cplx = std::complex<double>;

  // The zero polynomial.
  bipoly() : c_(0, 0) {}

  explicit bipoly(cplx constant) : c_(1, 1) {
    c_(0, 0) = constant;
    prune();
  }

  static bipoly monomial(long long a, long long b, cplx coefficient = 1.0) {
    if (a < 0 || b < 0) throw std::invalid_argument("monomial exponents must be >= 0");
    bipoly p;
    p.c_ = matrix::Zero(a + 1, b + 1);
    p.c_(a, b) = coefficient;
    p.prune();
    return p;
  }

  static bipoly from_coeffs(matrix m) {
    bipoly p;
    p.c_ = std::move(m);
    p.prune();
    return p;
  }

  bool is_zero() const { return c_.size() == 0; }

  const matrix& coeffs() const { return c_; }

  cplx coeff(long long a, long long b) const {
    if (a < 0 || b < 0 || a >= c_.rows() || b >= c_.cols()) return 0.0;
    return c_(a, b);
  }

  double norm_max() const {
    return c_.size() == 0 ? 0.0 : c_.cwiseAbs().maxCoeff();
  }

  // Effective degree after pruning; nullopt for the zero polynomial.
  std::optional<degree_vector> degree() const {
    if (is_zero()) return std::nullopt;
    return degree_vector{c_.rows() - 1, c_.cols() - 1};
  }

  degree_vector degree_or_throw() const {
    auto d = degree();
    if (!d) throw zero_polynomial_error("zero polynomial has no degree vector");
    return *d;
  }

  // Conjugation swaps the roles of x and xbar and conjugates every
  // coefficient, so on the coefficient matrix it is exactly the adjoint.
  bipoly conjugate() const {
    bipoly p;
    p.c_ = c_.adjoint();
    return p;
  }

  // Horner evaluation treating x and xbar as independent;
  // evaluate(x, conj(x)) is the physical value.
  cplx evaluate(cplx x, cplx xbar) const {
    if (is_zero()) return 0.0;
    cplx acc = 0.0;
    for (Eigen::Index a = c_.rows() - 1; a >= 0; --a) {
      cplx row = 0.0;
      for (Eigen::Index b = c_.cols() - 1; b >= 0; --b) row = row * xbar + c_(a, b);
      acc = acc * x + row;
    }
    return acc;
  }

  friend bipoly operator+(const bipoly& p, const bipoly& q) {
    if (p.is_zero()) return q;
    if (q.is_zero()) return p;
    bipoly r;
    r.c_ = matrix::Zero(std::max(p.c_.rows(), q.c_.rows()),
                        std::max(p.c_.cols(), q.c_.cols()));
    r.c_.topLeftCorner(p.c_.rows(), p.c_.cols()) = p.c_;
    r.c_.topLeftCorner(q.c_.rows(), q.c_.cols()) += q.c_;
    r.prune();
    return r;
  }

  friend bipoly operator-(const bipoly& p, const bipoly& q) { return p + (-q); }

  bipoly operator-() const {
    bipoly r;
    r.c_ = -c_;
    return r;
  }

  friend bipoly operator*(const bipoly& p, const bipoly& q) {
    if (p.is_zero() || q.is_zero()) return bipoly();
    const Eigen::Index rs = p.c_.rows() + q.c_.rows() - 1;
    const Eigen::Index cs = p.c_.cols() + q.c_.cols() - 1;
    if (rs - 1 > degree_cap || cs - 1 > degree_cap)
      throw overflow_error("product degree (" + std::to_string(rs - 1) + "," +
                           std::to_string(cs - 1) + ") exceeds cap " +
                           std::to_string(degree_cap));
    bipoly r;
    r.c_ = matrix::Zero(rs, cs);
    for (Eigen::Index a = 0; a < p.c_.rows(); ++a)
      for (Eigen::Index b = 0; b < p.c_.cols(); ++b) {
        const cplx v = p.c_(a, b);
        if (v == 0.0) continue;
        r.c_.block(a, b, q.c_.rows(), q.c_.cols()) += v * q.c_;
      }
    r.prune();
    return r;
  }

  friend bipoly operator*(cplx scalar, const bipoly& p) { return p.scaled(scalar); }
  friend bipoly operator*(const bipoly& p, cplx scalar) { return p.scaled(scalar); }

  bipoly scaled(cplx scalar) const {
    if (scalar == 0.0) return bipoly();
    bipoly r;
    r.c_ = scalar * c_;
    return r;
  }

  friend bool operator==(const bipoly& p, const bipoly& q) {
    return p.c_.rows() == q.c_.rows() && p.c_.cols() == q.c_.cols() && p.c_ == q.c_;
  }

  // Debug dump: rows are powers of x, columns are powers of xbar, entries
  // printed as "re+imi".
  std::string to_text() const {
    if (is_zero()) return "(zero polynomial)\n";
    std::ostringstream os;
    os.precision(17);
    for (Eigen::Index a = 0; a < c_.rows(); ++a) {
      for (Eigen::Index b = 0; b < c_.cols(); ++b) {
        const cplx v = c_(a, b);
        if (b) os << "  ";
        os << v.real() << (v.imag() < 0 ? "-" : "+") << std::abs(v.imag()) << "i";
      }
      os << "\n";
    }
    return os.str();
  }

 private:
  // Shrink storage to the effective-degree bounding box. Inside the box the
  // coefficients are kept verbatim; only rows and columns whose entries all
  // fall at or below prune_tol * max|coeff| are dropped.
  void prune() {
    if (c_.size() == 0) return;
    const double m = c_.cwiseAbs().maxCoeff();
    if (m == 0.0) {
      c_.resize(0, 0);
      return;
    }
    const double cut = prune_tol * m;
    Eigen::Index amax = -1, bmax = -1;
    for (Eigen::Index a = 0; a < c_.rows(); ++a)
      for (Eigen::Index b = 0; b < c_.cols(); ++b)
        if (std::abs(c_(a, b)) > cut) {
          amax = std::max(amax, a);
          bmax = std::max(bmax, b);
        }
    if (amax < 0) {
      c_.resize(0, 0);
      return;
    }
    if (amax + 1 != c_.rows() || bmax + 1 != c_.cols())
      c_ = matrix(c_.topLeftCorner(amax + 1, bmax + 1));
  }

  matrix c_;
};

inline std::optional<degree_vector> degree(const bipoly& p) { return p.degree(); }

inline bipoly pow(const bipoly& p, long long n) {
  if (n < 1) throw std::invalid_argument("pow exponent must be a positive integer");
  bipoly acc = bipoly(std::complex<double>(1.0));
  bipoly base = p;
  long long e = n;
  while (e > 0) {
    if (e & 1) acc = acc * base;
    e >>= 1;
    if (e) base = base * base;
  }
  return acc;
}

}  // namespace multilens
