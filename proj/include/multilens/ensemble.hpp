#pragma once

#include <cmath>
#include <complex>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "multilens/errors.hpp"

namespace multilens {

using cplx = std::complex<double>;

inline bool is_finite(cplx z) {
  return std::isfinite(z.real()) && std::isfinite(z.imag());
}

// A ray is treated as obstructed once its impact comes this close to a mass.
inline double obstruction_tol(cplx y) { return 1e-10 * (1.0 + std::abs(y)); }

// One lens plane: g point masses at pairwise distinct positions.
struct plane {
  std::vector<double> masses;
  std::vector<cplx> positions;

  int size() const { return static_cast<int>(masses.size()); }
};

// A multiplane point-mass ensemble. K planes sit between the observer and
// the source plane; beta(j, i) couples the deflection in plane j into the
// impact on plane i (1-based, j < i). All values are validated once at
// construction and never mutated afterwards, so ensembles are freely
// shareable across threads.
class ensemble {
 public:
  ensemble(std::vector<plane> planes, std::vector<std::vector<double>> betas)
      : planes_(std::move(planes)), betas_(std::move(betas)) {
    validate();
  }

  int plane_count() const { return static_cast<int>(planes_.size()); }

  const plane& plane_at(int i) const { return planes_[static_cast<size_t>(i)]; }
  const std::vector<plane>& planes() const { return planes_; }
  const std::vector<std::vector<double>>& betas() const { return betas_; }

  // beta_{j,i} for 1 <= j < i <= K.
  double beta(int j, int i) const {
    return betas_[static_cast<size_t>(i - 2)][static_cast<size_t>(j - 1)];
  }

  std::vector<int> mass_counts() const {
    std::vector<int> g;
    g.reserve(planes_.size());
    for (const auto& p : planes_) g.push_back(p.size());
    return g;
  }

  double total_mass() const {
    double s = 0;
    for (const auto& p : planes_)
      for (double m : p.masses) s += m;
    return s;
  }

  double max_position_radius() const {
    double r = 0;
    for (const auto& p : planes_)
      for (cplx y : p.positions) r = std::max(r, std::abs(y));
    return r;
  }

 private:
  void validate() const {
    if (planes_.empty()) throw std::invalid_argument("ensemble needs K >= 1 planes");
    for (size_t i = 0; i < planes_.size(); ++i) {
      const auto& p = planes_[i];
      if (p.masses.empty() || p.masses.size() != p.positions.size())
        throw std::invalid_argument("plane " + std::to_string(i + 1) +
                                    ": need equally many masses and positions, at least one each");
      for (double m : p.masses)
        if (!(m > 0) || !std::isfinite(m))
          throw std::invalid_argument("plane " + std::to_string(i + 1) +
                                      ": masses must be finite and strictly positive");
      for (cplx y : p.positions)
        if (!is_finite(y))
          throw std::invalid_argument("plane " + std::to_string(i + 1) +
                                      ": positions must be finite");
      for (size_t a = 0; a < p.positions.size(); ++a)
        for (size_t b = a + 1; b < p.positions.size(); ++b)
          if (p.positions[a] == p.positions[b])
            throw std::invalid_argument("plane " + std::to_string(i + 1) +
                                        ": positions must be pairwise distinct");
    }
    const size_t k = planes_.size();
    if (betas_.size() != k - 1)
      throw std::invalid_argument("beta table needs K-1 rows");
    for (size_t r = 0; r < betas_.size(); ++r) {
      if (betas_[r].size() != r + 1)
        throw std::invalid_argument("beta row " + std::to_string(r) +
                                    " must have length " + std::to_string(r + 1));
      for (double b : betas_[r])
        if (b == 0.0 || !std::isfinite(b))
          throw std::invalid_argument("beta values must be finite and nonzero");
    }
  }

  std::vector<plane> planes_;
  std::vector<std::vector<double>> betas_;
};

// The ray traced from first-plane position x: per-plane impacts and the
// point where the ray meets the source plane.
struct ray_trace {
  std::vector<cplx> impacts;
  cplx source_hit;
};

// Bending angle of one plane: sum_l m_l / (conj(impact) - conj(y_l)).
inline cplx alpha(const plane& pl, cplx impact) {
  cplx s = 0;
  for (size_t l = 0; l < pl.masses.size(); ++l) {
    const cplx y = pl.positions[l];
    if (std::abs(impact - y) < obstruction_tol(y))
      throw obstruction_error(-1, static_cast<int>(l));
    s += pl.masses[l] / (std::conj(impact) - std::conj(y));
  }
  return s;
}

// Propagates the ray plane by plane:
//   x_1 = x,  x_i = x - sum_{j<i} beta_{j,i} alpha_j(x_j),
//   source_hit = x - sum_k alpha_k(x_k).
inline ray_trace trace(const ensemble& ens, cplx x) {
  const int k = ens.plane_count();
  std::vector<cplx> impacts(static_cast<size_t>(k));
  std::vector<cplx> alphas(static_cast<size_t>(k));
  impacts[0] = x;
  for (int i = 1; i <= k; ++i) {
    if (i >= 2) {
      cplx xi = x;
      for (int j = 1; j < i; ++j)
        xi -= ens.beta(j, i) * alphas[static_cast<size_t>(j - 1)];
      impacts[static_cast<size_t>(i - 1)] = xi;
    }
    const plane& pl = ens.plane_at(i - 1);
    const cplx xi = impacts[static_cast<size_t>(i - 1)];
    for (size_t l = 0; l < pl.positions.size(); ++l)
      if (std::abs(xi - pl.positions[l]) < obstruction_tol(pl.positions[l]))
        throw obstruction_error(i - 1, static_cast<int>(l));
    alphas[static_cast<size_t>(i - 1)] = alpha(pl, xi);
  }
  cplx eta = x;
  for (int i = 0; i < k; ++i) eta -= alphas[static_cast<size_t>(i)];
  return ray_trace{std::move(impacts), eta};
}

inline cplx eval_eta(const ensemble& ens, cplx x) { return trace(ens, x).source_hit; }

// Left-hand side of the lensing equation: eta(x) - w. Zeros are the images
// of a source at w.
inline cplx eval_eta_w(const ensemble& ens, cplx w, cplx x) {
  return trace(ens, x).source_hit - w;
}

namespace detail {
inline void check_denominator(cplx den, cplx y, int plane_index, int mass_index) {
  if (std::abs(den) < obstruction_tol(y))
    throw obstruction_error(plane_index, mass_index);
}
}  // namespace detail

// Literal nested-fraction form of the lensing equation, written out plane by
// plane. Only the first three planes are transcribed, so this is a K <= 3
// cross-check for the recursive evaluator, not a general path.
inline cplx eval_eta_unfurled(const ensemble& ens, cplx w, cplx x) {
  const int k = ens.plane_count();
  if (k > 3)
    throw unsupported_error("unfurled lensing map is written out for K <= 3 only");
  const cplx xb = std::conj(x);
  cplx value = x - w;

  const plane& p1 = ens.plane_at(0);
  for (size_t i = 0; i < p1.masses.size(); ++i) {
    const cplx den = xb - std::conj(p1.positions[i]);
    detail::check_denominator(den, p1.positions[i], 0, static_cast<int>(i));
    value -= p1.masses[i] / den;
  }
  if (k == 1) return value;

  // sum_i m_{1,i} / (x - y_{1,i}) and its conjugate-flavoured twin
  cplx s1 = 0, s1_bar = 0;
  for (size_t i = 0; i < p1.masses.size(); ++i) {
    s1 += p1.masses[i] / (x - p1.positions[i]);
    s1_bar += p1.masses[i] / (xb - std::conj(p1.positions[i]));
  }

  const plane& p2 = ens.plane_at(1);
  const double b12 = ens.beta(1, 2);
  for (size_t j = 0; j < p2.masses.size(); ++j) {
    const cplx den = xb - std::conj(p2.positions[j]) - b12 * s1;
    detail::check_denominator(den, p2.positions[j], 1, static_cast<int>(j));
    value -= p2.masses[j] / den;
  }
  if (k == 2) return value;

  cplx s2 = 0;
  for (size_t j = 0; j < p2.masses.size(); ++j) {
    const cplx den = x - p2.positions[j] - b12 * s1_bar;
    detail::check_denominator(den, p2.positions[j], 1, static_cast<int>(j));
    s2 += p2.masses[j] / den;
  }

  const plane& p3 = ens.plane_at(2);
  const double b13 = ens.beta(1, 3);
  const double b23 = ens.beta(2, 3);
  for (size_t l = 0; l < p3.masses.size(); ++l) {
    const cplx den = xb - std::conj(p3.positions[l]) - b13 * s1 - b23 * s2;
    detail::check_denominator(den, p3.positions[l], 2, static_cast<int>(l));
    value -= p3.masses[l] / den;
  }
  return value;
}

struct jacobian_result {
  Eigen::Matrix2d j;
  double det;
};

namespace detail {
// Smallest clearance between any traced impact and any mass of its plane.
inline double trace_clearance(const ensemble& ens, const ray_trace& rt) {
  double c = std::numeric_limits<double>::infinity();
  for (int i = 0; i < ens.plane_count(); ++i) {
    const plane& pl = ens.plane_at(i);
    for (cplx y : pl.positions)
      c = std::min(c, std::abs(rt.impacts[static_cast<size_t>(i)] - y));
  }
  return c;
}
}  // namespace detail

// Jacobian of eta_w as a map of R^2, by central finite differences with
// step h = eps^(1/3) * (1 + |x|).
inline jacobian_result jacobian(const ensemble& ens, cplx w, cplx x) {
  const double h =
      std::cbrt(std::numeric_limits<double>::epsilon()) * (1.0 + std::abs(x));
  const ray_trace rt = trace(ens, x);
  if (detail::trace_clearance(ens, rt) < 10.0 * h)
    throw step_error("finite-difference step would straddle a pole");
  const cplx fe = eval_eta_w(ens, w, x + cplx(h, 0));
  const cplx fw = eval_eta_w(ens, w, x - cplx(h, 0));
  const cplx fn = eval_eta_w(ens, w, x + cplx(0, h));
  const cplx fs = eval_eta_w(ens, w, x - cplx(0, h));
  jacobian_result out;
  out.j(0, 0) = (fe.real() - fw.real()) / (2 * h);
  out.j(1, 0) = (fe.imag() - fw.imag()) / (2 * h);
  out.j(0, 1) = (fn.real() - fs.real()) / (2 * h);
  out.j(1, 1) = (fn.imag() - fs.imag()) / (2 * h);
  out.det = out.j(0, 0) * out.j(1, 1) - out.j(0, 1) * out.j(1, 0);
  return out;
}

// Closed-form determinant for a single plane:
// det = 1 - |sum_l m_l / (x - y_l)^2|^2.
inline double jacobian_det_single_plane(const ensemble& ens, cplx x) {
  if (ens.plane_count() != 1)
    throw unsupported_error("analytic jacobian determinant requires K = 1");
  const plane& pl = ens.plane_at(0);
  cplx dg = 0;
  for (size_t l = 0; l < pl.masses.size(); ++l) {
    const cplx d = x - pl.positions[l];
    if (std::abs(d) < obstruction_tol(pl.positions[l]))
      throw obstruction_error(0, static_cast<int>(l));
    dg += pl.masses[l] / (d * d);
  }
  return 1.0 - std::norm(dg);
}

}  // namespace multilens
