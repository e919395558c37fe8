#pragma once

#include <algorithm>
#include <map>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "multilens/bounds.hpp"
#include "multilens/construct.hpp"
#include "multilens/ensemble.hpp"
#include "multilens/errors.hpp"
#include "multilens/resultant.hpp"

namespace multilens {

// Tolerances of the solving pipeline. They are separated by orders of
// magnitude so a point classified at one stage cannot flip at the next.
struct solve_tolerances {
  double accept_tol_base = 1e-8;  // residual acceptance: base * (1 + |w|)
  double cluster_tol = 1e-6;      // dedup radius and method-agreement radius
  double degenerate_tol = 1e-8;   // |jac det| below this marks a degenerate image
  double caustic_margin = 1e-3;   // min source distance from the sampled caustic
  double trace_tol = 1e-10;       // |jac det| target when refining critical points

  double accept_tol(cplx w) const { return accept_tol_base * (1.0 + std::abs(w)); }
};

// Routing caps for the resultant path; beyond them only the Newton path runs.
struct solver_caps {
  long long sylvester_dim = 64;
  long long eliminated_degree = 200;
};

enum class method_kind { resultant, newton, both };

inline const char* method_name(method_kind m) {
  switch (m) {
    case method_kind::resultant: return "resultant";
    case method_kind::newton: return "newton";
    default: return "both";
  }
}

// One lensed image: a verified solution of the lensing equation.
struct image_solution {
  cplx position;
  double residual;  // |eta_w| at the solution
  double jac_det;
  int parity;  // sign of jac_det
  method_kind method;
};

// One point of the critical curve together with its source-plane image.
struct caustic_sample {
  cplx critical_point;
  cplx caustic_point;
};

// Square sampling window: (n+1) x (n+1) nodes over
// [center - half_width, center + half_width]^2.
struct grid_spec {
  cplx center = 0.0;
  double half_width = 1.0;
  int n = 200;

  // Disk guaranteed to contain every image of a source at w.
  static grid_spec covering(const ensemble& ens, cplx w, int n = 200) {
    const double r =
        2.0 * (ens.max_position_radius() + std::abs(w) + ens.total_mass() + 1.0);
    return grid_spec{0.0, r, n};
  }

  // Window comfortably containing the critical curves.
  static grid_spec critical_window(const ensemble& ens, int n = 200) {
    const double r =
        2.0 * (ens.max_position_radius() + std::sqrt(ens.total_mass()) + 1.0);
    return grid_spec{0.0, r, n};
  }
};

namespace detail {

// Damped Newton iteration on eta_w as a map of R^2. Returns the converged
// point, or nullopt when the start diverges, stalls, or walks into a pole.
inline std::optional<cplx> newton_refine(const ensemble& ens, cplx w, cplx start,
                                         int max_iter = 60) {
  const double target = 1e-12 * (1.0 + std::abs(w));
  cplx x = start;
  double fnorm;
  cplx f;
  try {
    f = eval_eta_w(ens, w, x);
  } catch (const obstruction_error&) {
    return std::nullopt;
  }
  fnorm = std::abs(f);
  for (int it = 0; it < max_iter; ++it) {
    if (fnorm < target) return x;
    Eigen::Matrix2d j;
    try {
      j = jacobian(ens, w, x).j;
    } catch (const error&) {
      return std::nullopt;
    }
    const Eigen::Vector2d rhs(f.real(), f.imag());
    const double det = j(0, 0) * j(1, 1) - j(0, 1) * j(1, 0);
    if (std::abs(det) < 1e-300) return std::nullopt;
    const Eigen::Vector2d step = j.inverse() * rhs;
    const cplx delta(step(0), step(1));

    double lambda = 1.0;
    bool moved = false;
    while (lambda >= 1.0 / 1024.0) {
      const cplx xn = x - lambda * delta;
      double f2norm;
      cplx f2;
      try {
        f2 = eval_eta_w(ens, w, xn);
        f2norm = std::abs(f2);
      } catch (const obstruction_error&) {
        lambda /= 2;
        continue;
      }
      if (f2norm < (1.0 - 0.25 * lambda) * fnorm || f2norm < target) {
        x = xn;
        f = f2;
        fnorm = f2norm;
        moved = true;
        break;
      }
      lambda /= 2;
    }
    if (!moved) break;  // stalled
  }
  return fnorm < target ? std::optional<cplx>(x) : std::nullopt;
}

// Impact on plane `plane_index` (0-based) as a function of the first-plane
// position; used to locate obstruction points.
inline cplx impact_on_plane(const ensemble& ens, int plane_index, cplx x) {
  return trace(ens, x).impacts[static_cast<size_t>(plane_index)];
}

// First-plane preimage of mass l in plane i: the obstruction point whose
// ray hits that mass. Solved by a small damped Newton on the partial trace;
// returns the mass position itself when the solve fails.
inline cplx obstruction_preimage(const ensemble& ens, int plane_index, int mass_index) {
  const cplx y = ens.plane_at(plane_index).positions[static_cast<size_t>(mass_index)];
  if (plane_index == 0) return y;
  cplx x = y;
  const double h = std::cbrt(std::numeric_limits<double>::epsilon());
  auto f = [&](cplx z) -> std::optional<cplx> {
    try {
      return trace(ens, z).impacts[static_cast<size_t>(plane_index)] - y;
    } catch (const obstruction_error& e) {
      // hitting the target mass itself is exactly what we want to refine
      if (e.plane == plane_index && e.mass == mass_index) return cplx(0.0);
      return std::nullopt;
    }
  };
  for (int it = 0; it < 40; ++it) {
    const auto fv = f(x);
    if (!fv) return y;
    if (std::abs(*fv) < 1e-12 * (1.0 + std::abs(y))) return x;
    const double step = h * (1.0 + std::abs(x));
    const auto fe = f(x + step), fn = f(x + cplx(0, step));
    if (!fe || !fn) return y;
    Eigen::Matrix2d j;
    j << (fe->real() - fv->real()) / step, (fn->real() - fv->real()) / step,
        (fe->imag() - fv->imag()) / step, (fn->imag() - fv->imag()) / step;
    const double det = j(0, 0) * j(1, 1) - j(0, 1) * j(1, 0);
    if (std::abs(det) < 1e-300) return y;
    const Eigen::Vector2d s = j.inverse() * Eigen::Vector2d(fv->real(), fv->imag());
    x -= cplx(s(0), s(1));
  }
  return x;
}

// Verify, annotate and deduplicate converged candidates. Keeps the smallest
// residual inside each cluster; output is sorted for determinism.
inline std::vector<image_solution> accept_candidates(const ensemble& ens, cplx w,
                                                     std::vector<cplx> candidates,
                                                     const solve_tolerances& tol,
                                                     method_kind method) {
  struct scored {
    cplx pos;
    double res;
  };
  std::vector<scored> ok;
  const double accept = tol.accept_tol(w);
  for (cplx x : candidates) {
    try {
      const double r = std::abs(eval_eta_w(ens, w, x));  // throws inside obstruction tol
      if (r < accept) ok.push_back({x, r});
    } catch (const obstruction_error&) {
    }
  }
  std::sort(ok.begin(), ok.end(), [](const scored& a, const scored& b) {
    if (a.res != b.res) return a.res < b.res;
    if (a.pos.real() != b.pos.real()) return a.pos.real() < b.pos.real();
    return a.pos.imag() < b.pos.imag();
  });
  std::vector<image_solution> out;
  for (const scored& s : ok) {
    bool dup = false;
    for (const image_solution& img : out)
      if (std::abs(img.position - s.pos) < tol.cluster_tol) {
        dup = true;
        break;
      }
    if (dup) continue;
    double det;
    try {
      det = jacobian(ens, w, s.pos).det;
    } catch (const error&) {
      continue;
    }
    out.push_back({s.pos, s.res, det, det >= 0 ? +1 : -1, method});
  }
  std::sort(out.begin(), out.end(), [](const image_solution& a, const image_solution& b) {
    if (a.position.real() != b.position.real())
      return a.position.real() < b.position.real();
    return a.position.imag() < b.position.imag();
  });
  return out;
}

}  // namespace detail

// Multi-start damped Newton solve of the lensing equation: every grid node
// of the covering window is a start, plus seed rings around each mass's
// first-plane obstruction preimage (images pile up there) and around the
// source. Non-convergent starts are dropped silently.
inline std::vector<image_solution> find_images_newton(const ensemble& ens, cplx w,
                                                      const grid_spec& grid,
                                                      const solve_tolerances& tol = {}) {
  std::vector<cplx> seeds;
  seeds.reserve(static_cast<size_t>((grid.n + 1)) * static_cast<size_t>(grid.n + 1) + 64);
  for (int i = 0; i <= grid.n; ++i)
    for (int j = 0; j <= grid.n; ++j) {
      const double fx = grid.n == 0 ? 0.0 : 2.0 * i / grid.n - 1.0;
      const double fy = grid.n == 0 ? 0.0 : 2.0 * j / grid.n - 1.0;
      seeds.push_back(grid.center + grid.half_width * cplx(fx, fy));
    }
  for (int pi = 0; pi < ens.plane_count(); ++pi) {
    const plane& pl = ens.plane_at(pi);
    for (int l = 0; l < pl.size(); ++l) {
      const cplx o = detail::obstruction_preimage(ens, pi, l);
      const double m = pl.masses[static_cast<size_t>(l)];
      const double near_r =
          std::clamp(m / (1.0 + std::abs(pl.positions[static_cast<size_t>(l)] - w)),
                     1e-5, 0.4);
      const double ring_r = std::clamp(0.5 * std::sqrt(m), 1e-4, 1.0);
      for (int a = 0; a < 8; ++a) {
        const double th = 2.0 * std::numbers::pi * a / 8.0;
        seeds.push_back(o + std::polar(near_r, th));
        seeds.push_back(o + std::polar(ring_r, th + 0.3));
      }
    }
  }
  seeds.push_back(w);
  seeds.push_back(0.0);
  for (int a = 0; a < 8; ++a)
    seeds.push_back(w + std::polar(0.05 * (1.0 + std::abs(w)),
                                   2.0 * std::numbers::pi * a / 8.0));

  std::vector<cplx> converged;
  for (cplx s : seeds)
    if (const auto x = detail::newton_refine(ens, w, s)) converged.push_back(*x);
  return detail::accept_candidates(ens, w, std::move(converged), tol, method_kind::newton);
}

inline std::vector<image_solution> find_images_newton(const ensemble& ens, cplx w,
                                                      const solve_tolerances& tol = {}) {
  return find_images_newton(ens, w, grid_spec::covering(ens, w), tol);
}

// Algebraic image solve: builds the lensing polynomial pair, eliminates
// xbar through the Sylvester resultant, reads candidate x coordinates off
// the companion-matrix roots, polishes each with a short Newton run and
// keeps the ones that actually solve the lensing equation. Spurious pairs
// where xbar is not the conjugate of x fall out of the residual filter.
inline std::vector<image_solution> find_images_resultant(const ensemble& ens, cplx w,
                                                         const solve_tolerances& tol = {},
                                                         const solver_caps& caps = {}) {
  const cleared_system sys = build_cleared_system(ens, w);
  if (resultant_bound(sys.p, sys.pbar) > caps.eliminated_degree)
    throw cap_exceeded_error("eliminated degree would exceed cap " +
                             std::to_string(caps.eliminated_degree));
  const unipoly res = resultant_eliminate(sys.p, sys.pbar, caps.sylvester_dim);
  std::vector<cplx> candidates;
  for (cplx z : poly_roots(res)) {
    const cplx x0 = sys.fr.from_frame(z);
    if (const auto x = detail::newton_refine(ens, w, x0, 16)) candidates.push_back(*x);
  }
  auto images = detail::accept_candidates(ens, w, std::move(candidates), tol,
                                          method_kind::resultant);
  for (const image_solution& img : images)
    if (std::abs(img.jac_det) < tol.degenerate_tol)
      throw non_generic_error("degenerate image at (" +
                              std::to_string(img.position.real()) + "," +
                              std::to_string(img.position.imag()) + ")");
  return images;
}

// Marching-squares extraction of the critical curves (zero set of the
// jacobian determinant) over the window, each edge crossing refined by
// bisection, chained into ordered polylines, and pushed through the lensing
// map to sample the caustics.
std::vector<caustic_sample> trace_critical_and_caustics(const ensemble& ens,
                                                        const grid_spec& grid,
                                                        double trace_tol = 1e-10);

struct genericity_report {
  bool pass = false;
  double caustic_distance = 0;  // min |w - caustic point| over the samples
  double min_abs_jac_det = 0;   // over the found images
  std::vector<caustic_sample> caustics;
  std::vector<image_solution> images;  // newton-path images, reusable by callers
};

// A source is treated as generic when it keeps its distance from the
// sampled caustic and every found image is cleanly non-degenerate.
inline genericity_report genericity_check(const ensemble& ens, cplx w,
                                          const solve_tolerances& tol = {},
                                          std::optional<grid_spec> caustic_grid = {},
                                          std::optional<grid_spec> image_grid = {}) {
  genericity_report rep;
  try {
    rep.caustics = trace_critical_and_caustics(
        ens, caustic_grid.value_or(grid_spec::critical_window(ens)), tol.trace_tol);
  } catch (const empty_result_error&) {
    rep.caustics.clear();
  }
  rep.caustic_distance = std::numeric_limits<double>::infinity();
  for (const caustic_sample& s : rep.caustics)
    rep.caustic_distance = std::min(rep.caustic_distance, std::abs(w - s.caustic_point));
  rep.images = find_images_newton(ens, w, image_grid.value_or(grid_spec::covering(ens, w)), tol);
  rep.min_abs_jac_det = std::numeric_limits<double>::infinity();
  for (const image_solution& img : rep.images)
    rep.min_abs_jac_det = std::min(rep.min_abs_jac_det, std::abs(img.jac_det));
  rep.pass = rep.caustic_distance > tol.caustic_margin &&
             rep.min_abs_jac_det > tol.degenerate_tol;
  return rep;
}

struct count_report {
  std::vector<image_solution> images;
  long long bound = 0;
  int count = 0;
  bool resultant_ran = false;
  std::string resultant_skip_reason;
  genericity_report gen;
};

namespace detail {
inline double hausdorff(const std::vector<image_solution>& a,
                        const std::vector<image_solution>& b) {
  double h = 0;
  for (const auto& pa : a) {
    double d = std::numeric_limits<double>::infinity();
    for (const auto& pb : b) d = std::min(d, std::abs(pa.position - pb.position));
    h = std::max(h, d);
  }
  for (const auto& pb : b) {
    double d = std::numeric_limits<double>::infinity();
    for (const auto& pa : a) d = std::min(d, std::abs(pa.position - pb.position));
    h = std::max(h, d);
  }
  return h;
}
}  // namespace detail

// Counting pipeline on an already-computed genericity report: both solvers
// where feasible, cross-method agreement, and the bound check. A count
// above the bound is a software bug and always throws.
inline count_report count_images(const ensemble& ens, cplx w, genericity_report gen,
                                 const solve_tolerances& tol = {},
                                 const solver_caps& caps = {}) {
  count_report rep;
  rep.gen = std::move(gen);
  if (!rep.gen.pass)
    throw non_generic_error(
        "source fails the genericity check: caustic distance " +
        std::to_string(rep.gen.caustic_distance) + ", min |jac det| " +
        std::to_string(rep.gen.min_abs_jac_det));
  rep.bound = image_bound(ens.mass_counts());
  rep.images = rep.gen.images;

  std::vector<image_solution> alg;
  try {
    alg = find_images_resultant(ens, w, tol, caps);
    rep.resultant_ran = true;
  } catch (const cap_exceeded_error& e) {
    rep.resultant_skip_reason = e.what();
  } catch (const ill_conditioned_error& e) {
    rep.resultant_skip_reason = e.what();
  }
  if (rep.resultant_ran) {
    const double h = detail::hausdorff(rep.images, alg);
    if (rep.images.size() != alg.size() || h > tol.cluster_tol)
      throw method_disagreement_error(
          "newton found " + std::to_string(rep.images.size()) + " images, resultant " +
          std::to_string(alg.size()) + ", hausdorff distance " + std::to_string(h));
    for (auto& img : rep.images) img.method = method_kind::both;
  }
  rep.count = static_cast<int>(rep.images.size());
  if (rep.count > rep.bound)
    throw bound_violation_error("count " + std::to_string(rep.count) +
                                " exceeds bound " + std::to_string(rep.bound));
  return rep;
}

// Full pipeline from scratch: genericity gate first, then the dual solve.
inline count_report count_images(const ensemble& ens, cplx w,
                                 const solve_tolerances& tol = {},
                                 const solver_caps& caps = {},
                                 std::optional<grid_spec> image_grid = {},
                                 std::optional<grid_spec> caustic_grid = {}) {
  return count_images(ens, w, genericity_check(ens, w, tol, caustic_grid, image_grid),
                      tol, caps);
}

// ---- critical curve tracing ------------------------------------------------

namespace detail {

// Determinant that stays sign-correct at poles: walking into an obstruction
// means det -> -infinity, so a large negative stand-in keeps the marching
// squares consistent.
inline double safe_det(const ensemble& ens, cplx x) {
  try {
    return jacobian(ens, 0.0, x).det;
  } catch (const error&) {
    return -1e30;
  }
}

struct edge_key {
  int i, j;
  bool horizontal;
  friend bool operator<(const edge_key& a, const edge_key& b) {
    return std::tie(a.i, a.j, a.horizontal) < std::tie(b.i, b.j, b.horizontal);
  }
};

}  // namespace detail

inline std::vector<caustic_sample> trace_critical_and_caustics(const ensemble& ens,
                                                               const grid_spec& grid,
                                                               double trace_tol) {
  const int n = grid.n;
  if (n < 2) throw std::invalid_argument("grid needs at least 2 cells per side");
  auto node = [&](int i, int j) {
    return grid.center + grid.half_width * cplx(2.0 * i / n - 1.0, 2.0 * j / n - 1.0);
  };
  std::vector<double> det(static_cast<size_t>(n + 1) * static_cast<size_t>(n + 1));
  auto at = [&](int i, int j) -> double& {
    return det[static_cast<size_t>(j) * static_cast<size_t>(n + 1) + static_cast<size_t>(i)];
  };
  for (int j = 0; j <= n; ++j)
    for (int i = 0; i <= n; ++i) at(i, j) = detail::safe_det(ens, node(i, j));

  // refine each sign-changing edge once, shared between its two cells
  std::map<detail::edge_key, int> crossing_of_edge;
  std::vector<cplx> crossings;
  auto refine = [&](cplx p1, double v1, cplx p2, double v2) -> std::optional<cplx> {
    cplx mid = 0.5 * (p1 + p2);
    for (int it = 0; it < 120; ++it) {
      mid = 0.5 * (p1 + p2);
      const double vm = detail::safe_det(ens, mid);
      if (std::abs(vm) < trace_tol) return mid;
      if ((vm > 0) == (v1 > 0)) {
        p1 = mid;
        v1 = vm;
      } else {
        p2 = mid;
        v2 = vm;
      }
    }
    return std::nullopt;
  };
  auto crossing_index = [&](int i, int j, bool horizontal) -> int {
    const detail::edge_key key{i, j, horizontal};
    if (const auto it = crossing_of_edge.find(key); it != crossing_of_edge.end())
      return it->second;
    const int i2 = horizontal ? i + 1 : i;
    const int j2 = horizontal ? j : j + 1;
    const double v1 = at(i, j), v2 = at(i2, j2);
    int idx = -1;
    if ((v1 > 0) != (v2 > 0))
      if (const auto p = refine(node(i, j), v1, node(i2, j2), v2)) {
        idx = static_cast<int>(crossings.size());
        crossings.push_back(*p);
      }
    crossing_of_edge.emplace(key, idx);
    return idx;
  };

  // marching squares: collect segments between edge crossings
  std::vector<std::pair<int, int>> segments;
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      const bool s00 = at(i, j) > 0, s10 = at(i + 1, j) > 0;
      const bool s01 = at(i, j + 1) > 0, s11 = at(i + 1, j + 1) > 0;
      const int config = (s00 ? 1 : 0) | (s10 ? 2 : 0) | (s11 ? 4 : 0) | (s01 ? 8 : 0);
      if (config == 0 || config == 15) continue;
      const int bottom = crossing_index(i, j, true);
      const int top = crossing_index(i, j + 1, true);
      const int left = crossing_index(i, j, false);
      const int right = crossing_index(i + 1, j, false);
      auto add = [&](int a, int b) {
        if (a >= 0 && b >= 0) segments.emplace_back(a, b);
      };
      switch (config) {
        case 1: case 14: add(bottom, left); break;
        case 2: case 13: add(bottom, right); break;
        case 3: case 12: add(left, right); break;
        case 4: case 11: add(top, right); break;
        case 6: case 9: add(bottom, top); break;
        case 7: case 8: add(top, left); break;
        case 5: case 10: {
          // saddle: split by the sign at the cell center
          const bool center = detail::safe_det(ens, node(i, j) + grid.half_width *
                                                              cplx(1.0 / n, 1.0 / n)) > 0;
          if ((config == 5) == (center == s00)) {
            add(bottom, left);
            add(top, right);
          } else {
            add(bottom, right);
            add(top, left);
          }
          break;
        }
        default: break;
      }
    }
  if (crossings.empty())
    throw empty_result_error("no critical-curve sign change inside the window");

  // chain segments into polylines so the output is plot-ready
  std::vector<std::vector<int>> adj(crossings.size());
  for (size_t s = 0; s < segments.size(); ++s) {
    adj[static_cast<size_t>(segments[s].first)].push_back(static_cast<int>(s));
    adj[static_cast<size_t>(segments[s].second)].push_back(static_cast<int>(s));
  }
  std::vector<bool> seg_used(segments.size(), false);
  std::vector<caustic_sample> out;
  auto emit = [&](int c) {
    try {
      out.push_back({crossings[static_cast<size_t>(c)],
                     eval_eta(ens, crossings[static_cast<size_t>(c)])});
    } catch (const obstruction_error&) {
    }
  };
  for (size_t start = 0; start < crossings.size(); ++start) {
    // prefer endpoints (odd degree) so open chains come out in one piece
    if (adj[start].empty()) continue;
    bool has_unused = false;
    for (int s : adj[start]) has_unused |= !seg_used[static_cast<size_t>(s)];
    if (!has_unused) continue;
    int current = static_cast<int>(start);
    emit(current);
    bool extended = true;
    while (extended) {
      extended = false;
      for (int s : adj[static_cast<size_t>(current)]) {
        if (seg_used[static_cast<size_t>(s)]) continue;
        seg_used[static_cast<size_t>(s)] = true;
        current = segments[static_cast<size_t>(s)].first == current
                      ? segments[static_cast<size_t>(s)].second
                      : segments[static_cast<size_t>(s)].first;
        emit(current);
        extended = true;
        break;
      }
    }
  }
  if (out.empty()) throw empty_result_error("critical-curve refinement produced no samples");
  return out;
}

}  // namespace multilens
