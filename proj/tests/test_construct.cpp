#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "multilens/construct.hpp"
#include "multilens/sampling.hpp"

using namespace multilens;

namespace {

// K=1, unit masses at +1 and -1
ensemble twin_masses() {
  return ensemble({plane{{1.0, 1.0}, {cplx(1.0), cplx(-1.0)}}}, {});
}

// K=2: unit mass at 0 in each plane, beta12 = 1/2
ensemble stacked_pair() {
  return ensemble({plane{{1.0}, {cplx(0.0)}}, plane{{1.0}, {cplx(0.0)}}}, {{0.5}});
}

}  // namespace

TEST_CASE("conditioning frame: centroid shift, unit-disk scale, no upscaling") {
  const ensemble far({plane{{1.0}, {cplx(10.0, 10.0)}}}, {});
  const frame fr = conditioning_frame(far);
  CHECK(std::abs(fr.offset - cplx(10.0, 10.0)) == 0.0);
  CHECK(fr.scale == 1.0);

  const ensemble wide({plane{{1.0, 3.0}, {cplx(-4.0), cplx(4.0)}}}, {});
  const frame fw = conditioning_frame(wide);
  // mass-weighted centroid (1*(-4) + 3*4)/4 = 2, max |y - c| = 6
  CHECK(std::abs(fw.offset - cplx(2.0)) < 1e-15);
  CHECK(fw.scale == 6.0);
  CHECK(std::abs(fw.from_frame(fw.to_frame(cplx(1.0, 2.0))) - cplx(1.0, 2.0)) < 1e-15);

  const ensemble scaled = apply_frame(wide, fw);
  CHECK(std::abs(scaled.plane_at(0).positions[0] - cplx(-1.0)) < 1e-15);
  CHECK(scaled.plane_at(0).masses[0] == 1.0 / 36.0);
  CHECK(scaled.max_position_radius() <= 1.0 + 1e-15);
}

TEST_CASE("conditioning preserves the physics") {
  // eta commutes with the frame: eta'(x') = (eta(x) - offset)/scale
  const ensemble ens({plane{{1.5, 0.5}, {cplx(3.0, 1.0), cplx(-2.0, 2.0)}},
                      plane{{2.0}, {cplx(1.0, -4.0)}}},
                     {{0.7}});
  const frame fr = conditioning_frame(ens);
  const ensemble scaled = apply_frame(ens, fr);
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> u(-5.0, 5.0);
  for (int i = 0; i < 200; ++i) {
    const cplx x(u(rng), u(rng));
    cplx full, framed;
    try {
      full = eval_eta(ens, x);
      framed = eval_eta(scaled, fr.to_frame(x));
    } catch (const obstruction_error&) {
      continue;
    }
    REQUIRE(std::abs(framed - fr.to_frame(full)) < 1e-12 * (1.0 + std::abs(framed)));
  }
}

TEST_CASE("cleared system of a single mass") {
  const ensemble ens({plane{{1.0}, {cplx(0.0)}}}, {});
  const cleared_system sys = build_cleared_system(ens, cplx(1.0));
  // D = xbar, QD = -1, P = (x-1) xbar - 1
  CHECK(sys.d[0] == bipoly::monomial(0, 1));
  CHECK(sys.qd[0] == bipoly(cplx(-1.0)));
  bipoly expect = (bipoly::monomial(1, 0) - bipoly(cplx(1.0))) * bipoly::monomial(0, 1) -
                  bipoly(cplx(1.0));
  CHECK((sys.p - expect).is_zero());
  CHECK(sys.pbar == sys.p.conjugate());
  // the golden-ratio images are zeros of P on the physical slice
  const double s5 = std::sqrt(5.0);
  for (double x : {(1.0 + s5) / 2.0, (1.0 - s5) / 2.0})
    CHECK(std::abs(sys.p.evaluate(cplx(x), cplx(x))) < 1e-14);
}

TEST_CASE("cleared system of twin masses") {
  const cleared_system sys = build_cleared_system(twin_masses(), cplx(0.0));
  // identity frame: centroid 0, spread 1
  CHECK(sys.fr.offset == cplx(0.0));
  CHECK(sys.fr.scale == 1.0);
  // P = x xbar^2 - x - 2 xbar
  bipoly expect = bipoly::monomial(1, 2) - bipoly::monomial(1, 0) -
                  2.0 * bipoly::monomial(0, 1);
  CHECK((sys.p - expect).norm_max() < 1e-14);
  CHECK(sys.p.degree_or_throw() == (degree_vector{1, 2}));
}

TEST_CASE("cleared system of two stacked planes") {
  const cleared_system sys = build_cleared_system(stacked_pair(), cplx(0.0));
  // P = x^2 xbar^2 - 5/2 x xbar + 1/2, derived by clearing by hand
  bipoly expect = bipoly::monomial(2, 2) - 2.5 * bipoly::monomial(1, 1) +
                  bipoly(cplx(0.5));
  CHECK((sys.p - expect).norm_max() < 1e-14);
  CHECK(sys.p.degree_or_throw() == (degree_vector{2, 2}));
  CHECK(sys.phat.degree_or_throw() == (degree_vector{2, 2}));
  // radial images: |x|^2 solves r^4 - 5/2 r^2 + 1/2 = 0
  const double r2 = (2.5 + std::sqrt(6.25 - 2.0)) / 2.0;
  const cplx x = std::sqrt(r2) * std::polar(1.0, 0.77);
  CHECK(std::abs(sys.p.evaluate(x, std::conj(x))) < 1e-12);
  CHECK(std::abs(eval_eta_w(stacked_pair(), cplx(0.0), x)) < 1e-12);
}

TEST_CASE("rational identity: P equals eta_w times the denominator product") {
  std::mt19937_64 rng(32);
  sample_params par;
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int trial = 0; trial < 25; ++trial) {
    const ensemble ens = sample_ensemble(rng, par);
    const cplx w(u(rng), u(rng));
    const cleared_system sys = build_cleared_system(ens, w);
    int checked = 0;
    while (checked < 200) {
      const cplx x(u(rng), u(rng));
      cplx eta;
      try {
        eta = eval_eta_w(sys.scaled, sys.w_scaled, x);
      } catch (const obstruction_error&) {
        continue;
      }
      cplx dprod(1.0);
      for (const bipoly& dj : sys.d) dprod *= dj.evaluate(x, std::conj(x));
      if (std::abs(dprod) < 1e-9) continue;  // too close to a cleared pole
      const cplx lhs = sys.p.evaluate(x, std::conj(x));
      const cplx rhs = eta * dprod;
      REQUIRE(std::abs(lhs - rhs) < 1e-9 * (1.0 + std::abs(lhs) + std::abs(rhs)));
      ++checked;
    }
  }
}

TEST_CASE("conjugate polynomial tracks P") {
  std::mt19937_64 rng(33);
  sample_params par;
  for (int trial = 0; trial < 10; ++trial) {
    const ensemble ens = sample_ensemble(rng, par);
    const cleared_system sys = build_cleared_system(ens, cplx(0.3, -0.2));
    CHECK(sys.pbar == sys.p.conjugate());
    const auto dp = sys.p.degree_or_throw();
    CHECK(sys.pbar.degree_or_throw() == (degree_vector{dp.t, dp.s}));
  }
}

TEST_CASE("degree ledger matches the even/odd recursion") {
  // worked example: g = [2,3] goes (1,2) then (1+6, 2+3) = (7,5)
  const auto rows = degree_ledger({2, 3});
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].total == (degree_vector{1, 2}));
  CHECK(rows[1].increment == (degree_vector{6, 3}));
  CHECK(rows[1].total == (degree_vector{7, 5}));

  std::mt19937_64 rng(34);
  std::uniform_int_distribution<int> kk(1, 8), gg(1, 6);
  for (int i = 0; i < 300; ++i) {
    std::vector<int> g(static_cast<size_t>(kk(rng)));
    for (int& v : g) v = gg(rng);
    const auto ledger = degree_ledger(g);
    const auto [e, o] = ek_ok(g);
    REQUIRE(ledger.size() == g.size());
    CHECK(ledger.back().total == (degree_vector{e, o}));
    // every increment is (g_k * O_{k-1}, g_k * E_{k-1})
    for (size_t k = 1; k < g.size(); ++k) {
      const degree_vector prev = ledger[k - 1].total;
      CHECK(ledger[k].increment == (degree_vector{g[k] * prev.t, g[k] * prev.s}));
    }
  }
}

TEST_CASE("predicted degrees hold on random ensembles") {
  std::mt19937_64 rng(35);
  sample_params par;
  std::uniform_real_distribution<double> u(-1.5, 1.5);
  for (int trial = 0; trial < 50; ++trial) {
    const ensemble ens = sample_ensemble(rng, par);
    const cleared_system sys = build_cleared_system(ens, cplx(u(rng), u(rng)));
    const prop1_report rep = verify_prop1(sys, ens.mass_counts());
    CHECK(rep.deg_p == rep.expected);
    CHECK(rep.deg_phat == rep.expected);
    CHECK(rep.p_leading_rel > 1e-9);
  }
}

TEST_CASE("auxiliary degrees never exceed their denominators") {
  std::mt19937_64 rng(36);
  sample_params par;
  for (int trial = 0; trial < 20; ++trial) {
    const ensemble ens = sample_ensemble(rng, par);
    const cleared_system sys = build_cleared_system(ens, cplx(0.25, 0.1));
    for (size_t j = 0; j < sys.d.size(); ++j) {
      const auto dd = sys.d[j].degree_or_throw();
      const auto dq = sys.qd[j].degree_or_throw();
      CHECK(dq <= dd);
    }
  }
}

TEST_CASE("degree mismatch carries the offending degrees") {
  const ensemble ens({plane{{1.0}, {cplx(0.0)}}}, {});
  const cleared_system sys = build_cleared_system(ens, cplx(1.0));
  try {
    verify_prop1(sys, {3});  // wrong layout on purpose
    FAIL("expected degree_mismatch_error");
  } catch (const degree_mismatch_error& e) {
    CHECK(e.got_p == (degree_vector{1, 1}));
    CHECK(e.expected == (degree_vector{1, 3}));
  }
}
