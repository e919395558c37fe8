#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "multilens/errors.hpp"

namespace multilens {

namespace detail {

inline std::int64_t checked_add(std::int64_t a, std::int64_t b) {
  std::int64_t r;
  if (__builtin_add_overflow(a, b, &r))
    throw overflow_error("integer overflow in bound arithmetic");
  return r;
}

inline std::int64_t checked_mul(std::int64_t a, std::int64_t b) {
  std::int64_t r;
  if (__builtin_mul_overflow(a, b, &r))
    throw overflow_error("integer overflow in bound arithmetic");
  return r;
}

inline void require_valid_g(const std::vector<int>& g) {
  if (g.empty()) throw std::invalid_argument("need at least one plane");
  for (int gi : g)
    if (gi < 1) throw std::invalid_argument("every mass count must be >= 1");
}

}  // namespace detail

// Coefficients of the formal polynomial F(Z) = prod_i (1 + g_i Z); entry n
// is the elementary symmetric polynomial e_n(g_1..g_K). Exact, checked
// integer arithmetic throughout.
inline std::vector<std::int64_t> formal_coeffs(const std::vector<int>& g) {
  detail::require_valid_g(g);
  std::vector<std::int64_t> c{1};
  for (int gi : g) {
    std::vector<std::int64_t> next(c.size() + 1, 0);
    for (size_t n = 0; n < c.size(); ++n) {
      next[n] = detail::checked_add(next[n], c[n]);
      next[n + 1] = detail::checked_mul(c[n], gi);
    }
    c = std::move(next);
  }
  return c;
}

// (E_K, O_K): sums of even- and odd-degree coefficients of F. Computed both
// by parity sums and by (F(1) +- F(-1)) / 2; the two routes must agree
// exactly or an internal_mismatch_error is raised.
inline std::pair<std::int64_t, std::int64_t> ek_ok(const std::vector<int>& g) {
  const auto c = formal_coeffs(g);
  std::int64_t even = 0, odd = 0;
  for (size_t n = 0; n < c.size(); ++n)
    (n % 2 == 0 ? even : odd) = detail::checked_add(n % 2 == 0 ? even : odd, c[n]);

  std::int64_t f1 = 1, fm1 = 1;
  for (int gi : g) {
    f1 = detail::checked_mul(f1, 1 + static_cast<std::int64_t>(gi));
    fm1 = detail::checked_mul(fm1, 1 - static_cast<std::int64_t>(gi));
  }
  const std::int64_t e_closed = (f1 + fm1) / 2;
  const std::int64_t o_closed = (f1 - fm1) / 2;
  if (even != e_closed || odd != o_closed)
    throw internal_mismatch_error("parity sums disagree with closed form: (" +
                                  std::to_string(even) + "," + std::to_string(odd) +
                                  ") vs (" + std::to_string(e_closed) + "," +
                                  std::to_string(o_closed) + ")");
  return {even, odd};
}

// The image-count upper bound E_K^2 + O_K^2.
inline std::int64_t image_bound(const std::vector<int>& g) {
  const auto [e, o] = ek_ok(g);
  return detail::checked_add(detail::checked_mul(e, e), detail::checked_mul(o, o));
}

// Bezout comparison bound (E_K + O_K)^2; exceeds image_bound by 2*E*O.
inline std::int64_t bezout_bound(const std::vector<int>& g) {
  const auto [e, o] = ek_ok(g);
  const std::int64_t s = detail::checked_add(e, o);
  return detail::checked_mul(s, s);
}

// Named single-purpose bounds from earlier work, emitted only for the
// ensemble shapes they were stated for. Reference metadata, never enforced.
inline std::map<std::string, std::int64_t> reference_bounds(const std::vector<int>& g) {
  detail::require_valid_g(g);
  std::map<std::string, std::int64_t> out;
  const auto k = g.size();
  if (k == 1) {
    const std::int64_t g1 = g[0];
    out["witt"] = detail::checked_add(detail::checked_mul(g1, g1), 1);
    if (g1 >= 2) out["kn"] = 5 * (g1 - 1);
  }
  bool all_ones = true;
  for (int gi : g) all_ones &= (gi == 1);
  if (all_ones) {
    std::int64_t v = 2;  // 2^(2K-1)
    for (size_t i = 1; i < k; ++i) v = detail::checked_mul(v, 4);
    out["petters_2K"] = v;
  }
  if (k == 2 && g[0] == g[1]) {
    const std::int64_t n = g[0];
    const std::int64_t n2 = detail::checked_mul(n, n);
    out["two_cluster"] = detail::checked_add(
        detail::checked_add(1, detail::checked_mul(6, n2)), detail::checked_mul(n2, n2));
  }
  return out;
}

// Everything Theorem-1-related for one g signature, in one record.
struct bound_report {
  std::vector<int> g;
  std::vector<std::int64_t> coeffs;
  std::int64_t e = 0;
  std::int64_t o = 0;
  std::int64_t theorem1 = 0;
  std::int64_t bezout = 0;
  std::map<std::string, std::int64_t> specials;
};

inline bound_report make_bound_report(const std::vector<int>& g) {
  bound_report r;
  r.g = g;
  r.coeffs = formal_coeffs(g);
  std::tie(r.e, r.o) = ek_ok(g);
  r.theorem1 = image_bound(g);
  r.bezout = bezout_bound(g);
  r.specials = reference_bounds(g);
  return r;
}

}  // namespace multilens
