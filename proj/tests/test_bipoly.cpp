#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "multilens/bipoly.hpp"

using namespace multilens;

namespace {

// random polynomial with exact effective degree (s, t); corner coefficient
// has magnitude 1 so pruning cannot move the degree
bipoly random_bipoly(std::mt19937_64& rng, int s, int t, bool positive_real = false) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::uniform_real_distribution<double> pos(0.05, 1.0);
  Eigen::MatrixXcd c = Eigen::MatrixXcd::Zero(s + 1, t + 1);
  for (int a = 0; a <= s; ++a)
    for (int b = 0; b <= t; ++b)
      c(a, b) = positive_real ? cplx(pos(rng), u(rng)) : cplx(u(rng), u(rng));
  c(s, t) = positive_real ? cplx(1.0, 0.0) : std::polar(1.0, u(rng) * 3.0);
  return bipoly::from_coeffs(c);
}

bool close(const bipoly& a, const bipoly& b, double tol = 1e-12) {
  return (a - b).norm_max() <= tol * (a.norm_max() + b.norm_max() + 1.0);
}

const bipoly X = bipoly::monomial(1, 0, 1.0);
const bipoly Xb = bipoly::monomial(0, 1, 1.0);

}  // namespace

TEST_CASE("degree of simple polynomials") {
  CHECK(degree(bipoly::monomial(2, 1, 1.0)).value() == degree_vector{2, 1});
  CHECK(degree(bipoly(cplx(3.0))).value() == degree_vector{0, 0});
  // cancellation is pruned: x - x + xbar has degree (0,1)
  CHECK(degree(X - X + Xb).value() == degree_vector{0, 1});
  CHECK(degree(bipoly::monomial(2, 1, 1.0) + bipoly::monomial(1, 3, 1.0)).value() ==
        degree_vector{2, 3});
  CHECK(degree((X + Xb) * (X - Xb)).value() == degree_vector{2, 2});
  CHECK(degree(pow(X * Xb, 3)).value() == degree_vector{3, 3});
}

TEST_CASE("zero polynomial has no degree") {
  const bipoly zero;
  CHECK(zero.is_zero());
  CHECK(!degree(zero).has_value());
  CHECK_THROWS_AS(zero.degree_or_throw(), zero_polynomial_error);
  CHECK(!degree(X - X).has_value());
}

TEST_CASE("conjugation swaps variables and conjugates coefficients") {
  const bipoly p = bipoly::monomial(2, 0, cplx(0.0, 1.0));  // i x^2
  CHECK(p.conjugate() == bipoly::monomial(0, 2, cplx(0.0, -1.0)));
  const bipoly sc = X + Xb;
  CHECK(sc.conjugate() == sc);

  std::mt19937_64 rng(11);
  for (int i = 0; i < 200; ++i) {
    const bipoly q = random_bipoly(rng, i % 5, (i / 5) % 5);
    CHECK(q.conjugate().conjugate() == q);
    const auto d = degree(q).value();
    CHECK(degree(q.conjugate()).value() == (degree_vector{d.t, d.s}));
  }
}

TEST_CASE("conjugation is an additive and multiplicative homomorphism") {
  std::mt19937_64 rng(12);
  for (int i = 0; i < 300; ++i) {
    const bipoly p = random_bipoly(rng, 1 + i % 4, 1 + (i / 4) % 4);
    const bipoly q = random_bipoly(rng, 1 + (i / 16) % 4, 1 + i % 3);
    CHECK((p + q).conjugate() == p.conjugate() + q.conjugate());
    CHECK(close((p * q).conjugate(), p.conjugate() * q.conjugate(), 1e-15));
  }
}

TEST_CASE("evaluation") {
  CHECK(std::abs((X * Xb).evaluate(cplx(3.0), cplx(4.0)) - cplx(12.0)) == 0.0);
  const cplx z(0.7, -1.3);
  CHECK(std::abs((X + Xb).evaluate(z, std::conj(z)) - cplx(2 * z.real())) < 1e-15);

  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> u(-1.2, 1.2);
  for (int i = 0; i < 300; ++i) {
    const bipoly p = random_bipoly(rng, i % 5, (i / 5) % 5);
    const bipoly q = random_bipoly(rng, (i / 25) % 5, i % 4);
    const cplx a(u(rng), u(rng)), b(u(rng), u(rng));
    const cplx lhs = (p * q).evaluate(a, b);
    const cplx rhs = p.evaluate(a, b) * q.evaluate(a, b);
    CHECK(std::abs(lhs - rhs) < 1e-12 * (1.0 + std::abs(rhs)));
  }
}

TEST_CASE("ring laws on random triples") {
  std::mt19937_64 rng(14);
  for (int i = 0; i < 200; ++i) {
    const bipoly p = random_bipoly(rng, 1 + i % 4, (i / 4) % 4);
    const bipoly q = random_bipoly(rng, (i / 16) % 4, 1 + i % 3);
    const bipoly r = random_bipoly(rng, 1 + (i / 3) % 3, 1 + (i / 9) % 3);
    CHECK(close((p + q) + r, p + (q + r)));
    CHECK(p + q == q + p);
    CHECK(close((p * q) * r, p * (q * r)));
    CHECK(close(p * q, q * p, 1e-15));
    CHECK(close(p * (q + r), p * q + p * r));
    CHECK((p - p).is_zero());
    CHECK(close(p * bipoly(cplx(1.0)), p, 0.0));
  }
}

TEST_CASE("degree under addition: componentwise max without cancellation") {
  std::mt19937_64 rng(15);
  std::uniform_int_distribution<int> d(0, 6);
  for (int i = 0; i < 1000; ++i) {
    const int s = d(rng), t = d(rng), v = d(rng), w = d(rng);
    // positive real parts rule out cancellation anywhere
    const bipoly p = random_bipoly(rng, s, t, true);
    const bipoly q = random_bipoly(rng, v, w, true);
    const auto sum = degree(p + q).value();
    CHECK(sum == (degree_vector{std::max(s, v), std::max(t, w)}));
  }
  // and in general the componentwise max is only an upper bound
  for (int i = 0; i < 1000; ++i) {
    const int s = d(rng), t = d(rng), v = d(rng), w = d(rng);
    const bipoly p = random_bipoly(rng, s, t);
    const bipoly q = random_bipoly(rng, v, w);
    const auto sum = degree(p + q);
    if (sum)
      CHECK(*sum <= (degree_vector{std::max(s, v), std::max(t, w)}));
  }
}

TEST_CASE("degree under multiplication adds") {
  std::mt19937_64 rng(16);
  std::uniform_int_distribution<int> d(0, 6);
  for (int i = 0; i < 1000; ++i) {
    const int s = d(rng), t = d(rng), v = d(rng), w = d(rng);
    const bipoly p = random_bipoly(rng, s, t);
    const bipoly q = random_bipoly(rng, v, w);
    CHECK(degree(p * q).value() == (degree_vector{s + v, t + w}));
  }
}

TEST_CASE("degree under powers scales") {
  std::mt19937_64 rng(17);
  std::uniform_int_distribution<int> d(0, 4);
  std::uniform_int_distribution<int> nn(1, 4);
  for (int i = 0; i < 1000; ++i) {
    const int s = d(rng), t = d(rng), n = nn(rng);
    const bipoly p = random_bipoly(rng, s, t);
    CHECK(degree(pow(p, n)).value() ==
          (degree_vector{static_cast<long long>(n) * s, static_cast<long long>(n) * t}));
  }
}

TEST_CASE("degree under dominated addition is preserved") {
  std::mt19937_64 rng(18);
  std::uniform_int_distribution<int> d(1, 6);
  for (int i = 0; i < 1000; ++i) {
    const int s = d(rng), t = d(rng);
    const bipoly p = random_bipoly(rng, s, t);
    // strictly smaller degree in both variables cannot disturb the leading terms
    std::uniform_int_distribution<int> ds(0, s - 1), dt(0, t - 1);
    const bipoly q = random_bipoly(rng, ds(rng), dt(rng));
    CHECK(degree(p + q).value() == (degree_vector{s, t}));
  }
}

TEST_CASE("degree cap guards runaway products") {
  const bipoly big = bipoly::monomial(300, 0, 1.0);
  CHECK_THROWS_AS(big * big, overflow_error);
  CHECK_THROWS_AS(pow(bipoly::monomial(2, 2, 1.0), 300), overflow_error);
}

TEST_CASE("pow rejects nonpositive exponents") {
  CHECK_THROWS_AS(pow(X, 0), std::invalid_argument);
  CHECK_THROWS_AS(pow(X, -2), std::invalid_argument);
}

TEST_CASE("scalar multiplication and text dump") {
  const bipoly p = X * cplx(2.0) + Xb * cplx(0.0, -1.0);
  CHECK(p.coeff(1, 0) == cplx(2.0));
  CHECK(p.coeff(0, 1) == cplx(0.0, -1.0));
  CHECK(p.coeff(5, 5) == cplx(0.0));
  CHECK(!p.to_text().empty());
}
