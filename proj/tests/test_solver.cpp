#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <random>

#include "multilens/multilens.hpp"

using namespace multilens;

namespace {

ensemble single_mass(double m = 1.0) {
  return ensemble({plane{{m}, {cplx(0.0)}}}, {});
}

// equal-mass binary lens at +-1/2
ensemble binary_lens() {
  return ensemble({plane{{0.5, 0.5}, {cplx(0.5), cplx(-0.5)}}}, {});
}

std::vector<cplx> positions(const std::vector<image_solution>& imgs) {
  std::vector<cplx> out;
  for (const auto& i : imgs) out.push_back(i.position);
  return out;
}

}  // namespace

TEST_CASE("newton path: single mass, golden-ratio images") {
  const ensemble ens = single_mass();
  const auto images = find_images_newton(ens, cplx(1.0));
  REQUIRE(images.size() == 2);
  const double s5 = std::sqrt(5.0);
  // sorted by real part: (1-sqrt5)/2 first
  CHECK(std::abs(images[0].position - cplx((1.0 - s5) / 2.0)) < 1e-9);
  CHECK(std::abs(images[1].position - cplx((1.0 + s5) / 2.0)) < 1e-9);
  for (const auto& img : images) {
    CHECK(img.residual < 1e-9);
    CHECK(img.method == method_kind::newton);
  }
  // inside the critical circle the parity is negative, outside positive
  CHECK(images[0].parity == -1);
  CHECK(images[1].parity == +1);
}

TEST_CASE("resultant path: single mass, golden-ratio images") {
  const ensemble ens = single_mass();
  const auto images = find_images_resultant(ens, cplx(1.0));
  REQUIRE(images.size() == 2);
  const double s5 = std::sqrt(5.0);
  CHECK(std::abs(images[0].position - cplx((1.0 - s5) / 2.0)) < 1e-9);
  CHECK(std::abs(images[1].position - cplx((1.0 + s5) / 2.0)) < 1e-9);
  for (const auto& img : images) CHECK(img.residual < 1e-9);
}

TEST_CASE("methods agree to cluster tolerance") {
  const ensemble ens({plane{{0.8, 0.7}, {cplx(0.4, 0.2), cplx(-0.5, -0.1)}}}, {});
  const cplx w(0.9, 0.4);
  const auto newton = find_images_newton(ens, w);
  const auto alg = find_images_resultant(ens, w);
  REQUIRE(newton.size() == alg.size());
  CHECK(detail::hausdorff(newton, alg) < 1e-6);
}

TEST_CASE("einstein ring: source on the point caustic is rejected") {
  const ensemble ens = single_mass();
  const genericity_report gen = genericity_check(ens, cplx(0.0));
  CHECK(!gen.pass);
  CHECK(gen.caustic_distance < 1e-3);
  CHECK_THROWS_AS(count_images(ens, cplx(0.0)), non_generic_error);
  // the continuum of ring solutions also defeats the algebraic path:
  // P and its conjugate coincide, so the resultant vanishes identically
  CHECK_THROWS_AS(find_images_resultant(ens, cplx(0.0)), ill_conditioned_error);
}

TEST_CASE("generic single-mass source passes the genericity gate") {
  const ensemble ens = single_mass();
  const genericity_report gen = genericity_check(ens, cplx(1.0));
  CHECK(gen.pass);
  // the caustic of one point mass degenerates to the origin
  CHECK(std::abs(gen.caustic_distance - 1.0) < 1e-3);
  CHECK(gen.min_abs_jac_det > 1e-8);
}

TEST_CASE("count report: single mass") {
  const count_report rep = count_images(single_mass(), cplx(1.0));
  CHECK(rep.count == 2);
  CHECK(rep.bound == 2);
  CHECK(rep.resultant_ran);
  for (const auto& img : rep.images) CHECK(img.method == method_kind::both);
}

TEST_CASE("distant source: one image per mass plus one near the source") {
  const ensemble ens({plane{{0.3, 0.5, 0.7},
                            {cplx(0.4, 0.1), cplx(-0.5, 0.3), cplx(0.1, -0.6)}}},
                     {});
  const cplx w(30.0, 10.0);
  const count_report rep = count_images(ens, w);
  REQUIRE(rep.count == 4);
  int near_w = 0, near_mass = 0;
  for (const auto& img : rep.images) {
    if (std::abs(img.position - w) < 1.0) {
      CHECK(img.parity == +1);
      ++near_w;
    } else {
      double dmin = 1e9;
      for (cplx y : ens.plane_at(0).positions) dmin = std::min(dmin, std::abs(img.position - y));
      CHECK(dmin < 0.2);
      CHECK(img.parity == -1);
      ++near_mass;
    }
  }
  CHECK(near_w == 1);
  CHECK(near_mass == 3);
}

TEST_CASE("binary lens counts") {
  const ensemble ens = binary_lens();
  // midpoint source: five images, the classic configuration
  const count_report inside = count_images(ens, cplx(0.0));
  CHECK(inside.count == 5);
  CHECK(inside.bound == 5);
  // the on-axis images sit at +-sqrt(5)/2 and the off-axis at +-i sqrt(3)/2
  const auto pos = positions(inside.images);
  auto has = [&](cplx p) {
    return std::any_of(pos.begin(), pos.end(),
                       [&](cplx q) { return std::abs(p - q) < 1e-8; });
  };
  CHECK(has(cplx(0.0)));
  CHECK(has(cplx(std::sqrt(1.25), 0.0)));
  CHECK(has(cplx(-std::sqrt(1.25), 0.0)));
  CHECK(has(cplx(0.0, std::sqrt(0.75))));
  CHECK(has(cplx(0.0, -std::sqrt(0.75))));

  // a source far outside the caustic sees three images
  const count_report outside = count_images(ens, cplx(1.8, 0.6));
  CHECK(outside.count == 3);
}

TEST_CASE("critical curve of a point mass sits at the einstein radius") {
  for (double m : {1.0, 4.0}) {
    const ensemble ens = single_mass(m);
    const auto samples = trace_critical_and_caustics(ens, grid_spec::critical_window(ens));
    REQUIRE(samples.size() > 50);
    const double r = std::sqrt(m);
    for (const auto& s : samples) {
      CHECK(std::abs(std::abs(s.critical_point) - r) < 1e-3);
      // the caustic collapses to the origin
      CHECK(std::abs(s.caustic_point) < 1e-3);
    }
  }
}

TEST_CASE("window without a critical curve reports an empty result") {
  const ensemble ens = single_mass();
  CHECK_THROWS_AS(trace_critical_and_caustics(ens, grid_spec{cplx(5.0), 0.5, 50}),
                  empty_result_error);
}

TEST_CASE("accepted images are zeros of both cleared polynomials") {
  std::mt19937_64 rng(51);
  sample_params par;
  par.max_planes = 2;
  for (int i = 0; i < 6; ++i) {
    const generic_case gc = sample_generic_case(rng, par);
    const cleared_system sys = build_cleared_system(gc.ens, gc.w);
    const count_report rep = count_images(gc.ens, gc.w);
    for (const auto& img : rep.images) {
      const cplx xf = sys.fr.to_frame(img.position);
      CHECK(std::abs(sys.p.evaluate(xf, std::conj(xf))) < 1e-6 * sys.p.norm_max());
      CHECK(std::abs(sys.pbar.evaluate(std::conj(xf), xf)) < 1e-6 * sys.pbar.norm_max());
    }
  }
}

TEST_CASE("random generic cases stay within the bound") {
  std::mt19937_64 rng(52);
  sample_params par;
  par.max_planes = 2;
  for (int i = 0; i < 8; ++i) {
    const generic_case gc = sample_generic_case(rng, par);
    const count_report rep = count_images(gc.ens, gc.w);
    CHECK(rep.count >= 1);
    CHECK(rep.count <= rep.bound);
    if (rep.resultant_ran)
      for (const auto& img : rep.images) CHECK(img.method == method_kind::both);
  }
}

TEST_CASE("two-plane image counting stays within the bound") {
  const ensemble ens({plane{{1.0}, {cplx(0.1, 0.05)}}, plane{{0.8}, {cplx(-0.2, 0.1)}}},
                     {{0.6}});
  const count_report rep = count_images(ens, cplx(0.7, 0.3));
  CHECK(rep.bound == 8);
  CHECK(rep.count <= 8);
  CHECK(rep.count >= 1);
  CHECK(rep.resultant_ran);
}

TEST_CASE("solver caps reroute oversized systems to the newton path") {
  const ensemble ens = single_mass();
  solver_caps caps;
  caps.sylvester_dim = 1;  // force the cap
  CHECK_THROWS_AS(find_images_resultant(ens, cplx(1.0), {}, caps), cap_exceeded_error);
  caps.sylvester_dim = 64;
  caps.eliminated_degree = 1;
  CHECK_THROWS_AS(find_images_resultant(ens, cplx(1.0), {}, caps), cap_exceeded_error);
  // count_images records the reroute instead of failing
  const count_report rep = count_images(ens, cplx(1.0), {}, caps);
  CHECK(!rep.resultant_ran);
  CHECK(!rep.resultant_skip_reason.empty());
  CHECK(rep.count == 2);
}

TEST_CASE("image grid covering radius honors its contract") {
  const ensemble ens = binary_lens();
  const grid_spec g = grid_spec::covering(ens, cplx(2.0));
  CHECK(g.half_width >= 2.0 * (0.5 + 2.0 + 1.0 + 1.0));
  CHECK(g.n == 200);
}
