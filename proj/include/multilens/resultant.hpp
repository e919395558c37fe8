#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "multilens/bipoly.hpp"
#include "multilens/errors.hpp"

namespace multilens {

// Dense univariate polynomial with complex coefficients, c[j] on x^j.
struct unipoly {
  std::vector<cplx> c;

  long long degree() const { return static_cast<long long>(c.size()) - 1; }
  bool is_zero() const { return c.empty(); }

  double norm_max() const {
    double m = 0;
    for (cplx v : c) m = std::max(m, std::abs(v));
    return m;
  }

  cplx evaluate(cplx x) const {
    cplx acc = 0;
    for (size_t j = c.size(); j-- > 0;) acc = acc * x + c[j];
    return acc;
  }

  // Drops leading coefficients at or below rel_tol times the largest one.
  unipoly trimmed(double rel_tol = 1e-10) const {
    const double cut = rel_tol * norm_max();
    unipoly out{c};
    while (!out.c.empty() && std::abs(out.c.back()) <= cut) out.c.pop_back();
    return out;
  }
};

// All roots of a univariate polynomial as eigenvalues of the companion
// matrix of its monic form.
inline std::vector<cplx> poly_roots(const unipoly& p) {
  const unipoly q = p.trimmed();
  const long long d = q.degree();
  if (d < 1) return {};
  Eigen::MatrixXcd companion = Eigen::MatrixXcd::Zero(d, d);
  const cplx lead = q.c.back();
  for (long long j = 0; j < d; ++j) {
    if (j + 1 < d) companion(j + 1, j) = 1.0;
    companion(j, d - 1) = -q.c[static_cast<size_t>(j)] / lead;
  }
  Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(companion, false);
  std::vector<cplx> roots(static_cast<size_t>(d));
  for (long long j = 0; j < d; ++j) roots[static_cast<size_t>(j)] = es.eigenvalues()(j);
  return roots;
}

// Sylvester matrix of two bivariate polynomials with respect to xbar. Rows
// hold the shifted xbar-coefficient sequences (each coefficient a univariate
// polynomial in x); the determinant is the resultant, a polynomial in x.
class sylvester_matrix {
 public:
  sylvester_matrix(const bipoly& p, const bipoly& q) {
    if (p.is_zero() || q.is_zero())
      throw zero_polynomial_error("sylvester matrix needs nonzero polynomials");
    tp_ = p.degree_or_throw().t;
    tq_ = q.degree_or_throw().t;
    pc_ = xbar_coefficients(p);
    qc_ = xbar_coefficients(q);
  }

  long long dimension() const { return tp_ + tq_; }

  Eigen::MatrixXcd evaluate(cplx x) const {
    const long long n = dimension();
    Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(n, n);
    std::vector<cplx> pv(pc_.size()), qv(qc_.size());
    for (size_t b = 0; b < pc_.size(); ++b) pv[b] = pc_[b].evaluate(x);
    for (size_t b = 0; b < qc_.size(); ++b) qv[b] = qc_[b].evaluate(x);
    for (long long r = 0; r < tq_; ++r)
      for (long long j = 0; j <= tp_; ++j) m(r, r + j) = pv[static_cast<size_t>(tp_ - j)];
    for (long long r = 0; r < tp_; ++r)
      for (long long j = 0; j <= tq_; ++j)
        m(tq_ + r, r + j) = qv[static_cast<size_t>(tq_ - j)];
    return m;
  }

 private:
  static std::vector<unipoly> xbar_coefficients(const bipoly& p) {
    const auto& m = p.coeffs();
    std::vector<unipoly> out(static_cast<size_t>(m.cols()));
    for (Eigen::Index b = 0; b < m.cols(); ++b) {
      out[static_cast<size_t>(b)].c.resize(static_cast<size_t>(m.rows()));
      for (Eigen::Index a = 0; a < m.rows(); ++a)
        out[static_cast<size_t>(b)].c[static_cast<size_t>(a)] = m(a, b);
    }
    return out;
  }

  long long tp_ = 0, tq_ = 0;
  std::vector<unipoly> pc_, qc_;
};

// Degree bound of the resultant and hence on the number of isolated common
// zeros of two coprime bivariate polynomials.
inline long long resultant_bound(const bipoly& p, const bipoly& q) {
  const degree_vector dp = p.degree_or_throw();
  const degree_vector dq = q.degree_or_throw();
  return dp.s * dq.t + dp.t * dq.s;
}

namespace detail {

struct scaled_det {
  double log_mag;  // log |det|, -inf for an exactly singular matrix
  cplx phase;      // det / |det|
};

// Determinant through the LU factors in log magnitude form, immune to
// overflow for large, badly scaled matrices.
inline scaled_det log_determinant(const Eigen::MatrixXcd& m) {
  Eigen::PartialPivLU<Eigen::MatrixXcd> lu(m);
  double log_mag = 0;
  cplx phase = static_cast<double>(lu.permutationP().determinant());
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    const cplx u = lu.matrixLU()(i, i);
    const double a = std::abs(u);
    if (a == 0.0) return {-std::numeric_limits<double>::infinity(), 0.0};
    log_mag += std::log(a);
    phase *= u / a;
  }
  return {log_mag, phase};
}

}  // namespace detail

// Resultant of p and q with respect to xbar by evaluation-interpolation:
// the numeric Sylvester determinant is sampled at N > deg(resultant) points
// on a circle and the coefficients recovered by an inverse DFT. The circle
// radius is picked from a short ladder by determinant dynamic range; if
// every candidate spans more than 1e12 the problem is reported as
// ill-conditioned rather than silently interpolated through noise.
// The returned polynomial is normalized to unit max coefficient, so it is
// the resultant up to a positive scale.
inline unipoly resultant_eliminate(const bipoly& p, const bipoly& q,
                                   long long dim_cap = 64) {
  sylvester_matrix syl(p, q);
  if (syl.dimension() > dim_cap)
    throw cap_exceeded_error("sylvester dimension " + std::to_string(syl.dimension()) +
                             " exceeds cap " + std::to_string(dim_cap));
  if (syl.dimension() == 0) return unipoly{{1.0}};
  const long long rb = resultant_bound(p, q);
  long long n = 4;
  while (n < rb + 1) n *= 2;

  constexpr double max_dynamic_range = 1e12;
  const double ladder[] = {1.1892, 0.8409, 1.6818, 0.5946, 2.3784, 0.4204, 3.3636};
  std::vector<detail::scaled_det> dets(static_cast<size_t>(n));
  double radius = 0, best_range = std::numeric_limits<double>::infinity();
  std::vector<detail::scaled_det> best_dets;
  for (double r : ladder) {
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (long long k = 0; k < n; ++k) {
      const cplx x = std::polar(r, 2.0 * std::numbers::pi * static_cast<double>(k) /
                                       static_cast<double>(n));
      dets[static_cast<size_t>(k)] = detail::log_determinant(syl.evaluate(x));
      lo = std::min(lo, dets[static_cast<size_t>(k)].log_mag);
      hi = std::max(hi, dets[static_cast<size_t>(k)].log_mag);
    }
    const double range = hi - lo;
    if (range < best_range) {
      best_range = range;
      best_dets = dets;
      radius = r;
    }
    if (range < std::log(max_dynamic_range)) break;
  }
  if (best_range >= std::log(max_dynamic_range))
    throw ill_conditioned_error("sylvester determinant spans a dynamic range beyond 1e12 "
                                "on every sampling circle");

  double top = -std::numeric_limits<double>::infinity();
  for (const auto& d : best_dets) top = std::max(top, d.log_mag);
  if (!std::isfinite(top))
    throw ill_conditioned_error("sylvester determinant vanished at every sample point");

  // inverse DFT of the rescaled samples, then absorb the circle radius
  std::vector<cplx> samples(static_cast<size_t>(n));
  for (long long k = 0; k < n; ++k) {
    const auto& d = best_dets[static_cast<size_t>(k)];
    samples[static_cast<size_t>(k)] =
        std::isfinite(d.log_mag) ? d.phase * std::exp(d.log_mag - top) : cplx(0.0);
  }
  std::vector<cplx> spun(static_cast<size_t>(rb + 1));
  std::vector<double> log_mag(static_cast<size_t>(rb + 1));
  double m = -std::numeric_limits<double>::infinity();
  for (long long j = 0; j <= rb; ++j) {
    cplx acc = 0;
    for (long long k = 0; k < n; ++k)
      acc += samples[static_cast<size_t>(k)] *
             std::polar(1.0, -2.0 * std::numbers::pi * static_cast<double>(j * k % n) /
                                 static_cast<double>(n));
    spun[static_cast<size_t>(j)] = acc / static_cast<double>(n);
    log_mag[static_cast<size_t>(j)] =
        std::log(std::abs(spun[static_cast<size_t>(j)])) -
        static_cast<double>(j) * std::log(radius);
    m = std::max(m, log_mag[static_cast<size_t>(j)]);
  }
  if (!std::isfinite(m))
    throw ill_conditioned_error("interpolated resultant vanished identically");

  unipoly out;
  out.c.resize(static_cast<size_t>(rb + 1));
  for (long long j = 0; j <= rb; ++j) {
    const cplx v = spun[static_cast<size_t>(j)];
    const double a = std::abs(v);
    out.c[static_cast<size_t>(j)] =
        a == 0.0 ? cplx(0.0)
                 : (v / a) * std::exp(log_mag[static_cast<size_t>(j)] - m);
  }
  return out.trimmed();
}

}  // namespace multilens
