#pragma once

#include <utility>
#include <vector>

#include "multilens/bipoly.hpp"
#include "multilens/bounds.hpp"
#include "multilens/ensemble.hpp"
#include "multilens/errors.hpp"

namespace multilens {

struct degree_mismatch_error : error {
  degree_vector got_p, got_phat, expected;
  degree_mismatch_error(degree_vector p, degree_vector phat, degree_vector want)
      : error("degree mismatch: deg(P)=" + p.str() + " deg(Phat)=" + phat.str() +
              " expected " + want.str()),
        got_p(p),
        got_phat(phat),
        expected(want) {}
};

// Affine change of coordinates used to condition the construction:
// z' = (z - offset) / scale with real scale > 0.
struct frame {
  cplx offset = 0.0;
  double scale = 1.0;

  cplx to_frame(cplx z) const { return (z - offset) / scale; }
  cplx from_frame(cplx z) const { return offset + scale * z; }
};

// Mass-weighted centroid to the origin, positions scaled into the unit
// disk. Never upscales (scale >= 1) so small configurations keep their size.
inline frame conditioning_frame(const ensemble& ens) {
  cplx centroid = 0.0;
  double total = 0.0;
  for (const auto& pl : ens.planes())
    for (size_t l = 0; l < pl.masses.size(); ++l) {
      centroid += pl.masses[l] * pl.positions[l];
      total += pl.masses[l];
    }
  centroid /= total;
  double r = 0.0;
  for (const auto& pl : ens.planes())
    for (cplx y : pl.positions) r = std::max(r, std::abs(y - centroid));
  return frame{centroid, std::max(r, 1.0)};
}

// Same physical system expressed in frame coordinates: positions move with
// the frame, masses scale by 1/scale^2, couplings are unchanged. Images and
// sources map through the same frame.
inline ensemble apply_frame(const ensemble& ens, const frame& fr) {
  std::vector<plane> planes = ens.planes();
  const double s2 = fr.scale * fr.scale;
  for (auto& pl : planes) {
    for (auto& m : pl.masses) m /= s2;
    for (auto& y : pl.positions) y = fr.to_frame(y);
  }
  return ensemble(std::move(planes), ens.betas());
}

// The cleared (polynomial) form of the lensing equation. All polynomials
// live in frame coordinates; `scaled` and `w_scaled` are the ensemble and
// source they were built from, so that
//   P(x, conj x) = eta_w(x) * prod_j D_j(x, conj x)
// holds at every non-obstruction point of the scaled ensemble.
struct cleared_system {
  frame fr;
  ensemble scaled;
  cplx w_scaled;
  std::vector<std::vector<bipoly>> a;  // a[j][l]: cleared linear factors
  std::vector<bipoly> d;               // d[j] = prod_l a[j][l]
  std::vector<bipoly> qd;              // q_j * d_j
  bipoly p;                            // lensing polynomial
  bipoly pbar;                         // conjugate polynomial
  bipoly phat;                         // (x - w) * prod_j d[j]
};

namespace detail {
inline bipoly product(const std::vector<bipoly>& v, size_t skip = size_t(-1)) {
  bipoly acc{cplx(1.0)};
  for (size_t i = 0; i < v.size(); ++i)
    if (i != skip) acc = acc * v[i];
  return acc;
}
}  // namespace detail

// Clears the nested denominators of the lensing equation plane by plane.
// Plane j contributes factors
//   a[j][l] = (xbar - conj y_{j,l}) * C_j
//             + sum_{i<j} beta_{i,j} * conj(qd[i]) * prod_{k<j, k!=i} conj(d[k])
// with C_j = prod_{k<j} conj(d[k]); then d[j] = prod_l a[j][l] and
//   qd[j] = -sum_l m_{j,l} * prod_{m!=l} a[j][m] * C_j.
// The masses and couplings keep their true values so that P vanishes at the
// physical images, and
//   P = (x - w) * prod_j d[j] + sum_l qd[l] * prod_{i!=l} d[i].
inline cleared_system build_cleared_system(const ensemble& ens, cplx w) {
  if (!is_finite(w)) throw std::invalid_argument("source position must be finite");
  const frame fr = conditioning_frame(ens);
  cleared_system sys{fr, apply_frame(ens, fr), fr.to_frame(w), {}, {}, {}, {}, {}, {}};
  const ensemble& e = sys.scaled;
  const int k = e.plane_count();

  std::vector<bipoly> d_conj;  // conj(d[0..j-1]), maintained as we go
  for (int j = 0; j < k; ++j) {
    const plane& pl = e.plane_at(j);
    const bipoly c = detail::product(d_conj);
    std::vector<bipoly> factors(static_cast<size_t>(pl.size()));
    for (int l = 0; l < pl.size(); ++l) {
      bipoly f = (bipoly::monomial(0, 1) -
                  bipoly(std::conj(pl.positions[static_cast<size_t>(l)]))) *
                 c;
      for (int i = 0; i < j; ++i)
        f = f + e.beta(i + 1, j + 1) *
                    (sys.qd[static_cast<size_t>(i)].conjugate() *
                     detail::product(d_conj, static_cast<size_t>(i)));
      factors[static_cast<size_t>(l)] = std::move(f);
    }
    bipoly dj = detail::product(factors);
    if (dj.is_zero())
      throw degenerate_ensemble_error("denominator polynomial of plane " +
                                      std::to_string(j + 1) + " pruned to zero");
    bipoly qdj;
    for (int l = 0; l < pl.size(); ++l)
      qdj = qdj + pl.masses[static_cast<size_t>(l)] *
                      detail::product(factors, static_cast<size_t>(l));
    qdj = -(qdj * c);

    sys.a.push_back(std::move(factors));
    d_conj.push_back(dj.conjugate());
    sys.d.push_back(std::move(dj));
    sys.qd.push_back(std::move(qdj));
  }

  const bipoly x_minus_w = bipoly::monomial(1, 0) - bipoly(sys.w_scaled);
  sys.phat = x_minus_w * detail::product(sys.d);
  sys.p = sys.phat;
  for (size_t l = 0; l < sys.d.size(); ++l)
    sys.p = sys.p + sys.qd[l] * detail::product(sys.d, l);
  sys.pbar = sys.p.conjugate();
  return sys;
}

// One row per plane of the degree bookkeeping: how much the plane adds to
// the degree of P in (x, xbar), and the running total. The base row is
// (1, g_1) -- the 1 comes from the (x - w) factor -- and plane k maps a
// running total (E, O) to (E + g_k O, O + g_k E).
struct ledger_row {
  degree_vector increment;
  degree_vector total;
};

inline std::vector<ledger_row> degree_ledger(const std::vector<int>& g) {
  detail::require_valid_g(g);
  std::vector<ledger_row> rows;
  rows.reserve(g.size());
  degree_vector total{1, g[0]};
  rows.push_back({total, total});
  for (size_t i = 1; i < g.size(); ++i) {
    const degree_vector inc{g[i] * total.t, g[i] * total.s};
    total = total + inc;
    rows.push_back({inc, total});
  }
  return rows;
}

struct prop1_report {
  degree_vector deg_p;
  degree_vector deg_phat;
  degree_vector expected;       // (E_K, O_K)
  double p_leading_rel = 0.0;   // |coeff of P at expected| / max|coeff of P|
};

// Checks that the effective degrees of P and Phat both equal (E_K, O_K).
// Meaningful for generic data only; cancellations in special configurations
// surface as a degree_mismatch_error.
inline prop1_report verify_prop1(const cleared_system& sys, const std::vector<int>& g) {
  const auto [e, o] = ek_ok(g);
  const degree_vector expected{e, o};
  const degree_vector dp = sys.p.degree_or_throw();
  const degree_vector dph = sys.phat.degree_or_throw();
  if (dp != expected || dph != expected)
    throw degree_mismatch_error(dp, dph, expected);
  return prop1_report{dp, dph, expected,
                      std::abs(sys.p.coeff(e, o)) / sys.p.norm_max()};
}

}  // namespace multilens
