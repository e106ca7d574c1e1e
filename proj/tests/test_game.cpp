#include <doctest.h>

#include <random>

#include "dnes/game.hpp"
#include "dnes/linear_stability.hpp"
#include "fixtures.hpp"

using namespace dnes;
using fixtures::mat2;
using fixtures::vec;

TEST_CASE("duopoly Nash equilibrium and costs") {
  const auto game = fixtures::duopoly();
  const Vectord x = nash_equilibrium(game);
  CHECK(x(0) == doctest::Approx(130.0 / 3).epsilon(1e-12));
  CHECK(x(1) == doctest::Approx(110.0 / 3).epsilon(1e-12));
  CHECK(cost(game, 0, x) == doctest::Approx(-8000.0 / 9));
  CHECK(cost(game, 1, x) == doctest::Approx(-2000.0 / 9));
  CHECK(pseudogradient(game, x).norm() < 1e-10);
  CHECK(pseudogradient_matrix(game) == mat2(10, -5, -5, 10));
  CHECK(pseudogradient_offset(game) == vec({-250, -150}));
}

TEST_CASE("partial derivatives match the full gradient") {
  const auto game = fixtures::three_player_game();
  const Vectord x = vec({0.3, -1.2, 2.0});
  for (int i = 0; i < 3; ++i)
    for (int k = 0; k < 3; ++k) CHECK(partial(game, i, k, x) == doctest::Approx(cost_gradient(game, i, x)(k)));
}

TEST_CASE("quadratic game validation") {
  CHECK_THROWS_AS(QuadraticGamed({mat2(1, 0, 1, 1), mat2(1, 0, 0, 1)}, {vec({0, 0}), vec({0, 0})}, {0, 0}),
                  PreconditionError);
  CHECK_THROWS_AS(QuadraticGamed({mat2(1, 0, 0, 1), mat2(1, 0, 0, 1)}, {vec({0, 0}), vec({0})}, {0, 0}),
                  PreconditionError);
  CHECK_THROWS_AS(QuadraticGamed({mat2(-1, 0, 0, 1), mat2(1, 0, 0, 1)}, {vec({0, 0}), vec({0, 0})}, {0, 0}),
                  PreconditionError);
  CHECK_THROWS_AS(QuadraticGamed({mat2(1, 0, 0, 1)}, {vec({0, 0})}, {0}), PreconditionError);
  CHECK_THROWS_AS(QuadraticGamed({mat2(NAN, 0, 0, 1), mat2(1, 0, 0, 1)}, {vec({0, 0}), vec({0, 0})}, {0, 0}),
                  PreconditionError);
}

TEST_CASE("singular pseudogradient has no unique equilibrium") {
  const QuadraticGamed game({mat2(1, 1, 1, 1), mat2(1, 1, 1, 1)}, {vec({1, 0}), vec({0, 1})}, {0, 0});
  CHECK_THROWS_AS(nash_equilibrium(game), PreconditionError);
}

TEST_CASE("single precision instantiation") {
  Matrix<float> Q1(2, 2), Q2(2, 2);
  Q1 << 10, -5, -5, 0;
  Q2 << 0, -5, -5, 10;
  Vector<float> b1(2), b2(2);
  b1 << -250, 150;
  b2 << 150, -150;
  const QuadraticGame<float> game({Q1, Q2}, {b1, b2}, {3000.f, 0.f});
  const Vector<float> x = nash_equilibrium(game);
  CHECK(x(0) == doctest::Approx(130.0 / 3).epsilon(1e-5));
}

TEST_CASE("property: pseudogradient vanishes at the equilibrium") {
  std::mt19937 rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 2 + trial % 4;
    const auto game = fixtures::random_game(rng, n);
    const Vectord x = nash_equilibrium(game);
    REQUIRE(x.allFinite());
    CHECK(pseudogradient(game, x).norm() <= 1e-9 * std::max(1.0, x.norm()));
    // no player gains from a unilateral move
    for (int i = 0; i < n; ++i) {
      Vectord y = x;
      y(i) += 1e-3;
      CHECK(cost(game, i, y) >= cost(game, i, x));
    }
  }
}

TEST_CASE("hurwitz test uses a strict margin") {
  CHECK(is_hurwitz(mat2(-1, 0, 0, -2)));
  CHECK_FALSE(is_hurwitz(mat2(-1, 0, 0, 0)));
  CHECK_FALSE(is_hurwitz(mat2(0, 1, -1, 0)));
  CHECK(is_hurwitz(mat2(-1e-8, 0, 0, -1)));
  CHECK_FALSE(is_hurwitz(mat2(-1e-10, 0, 0, -1)));
  CHECK_THROWS_AS(is_hurwitz(mat2(INFINITY, 0, 0, -1)), InstabilityError);
}

TEST_CASE("aggregative game margins and validation") {
  const auto game = fixtures::aggregative_pair();
  const Vectord K = monotonicity_margins(game);
  CHECK(K(0) == doctest::Approx(0.45));
  CHECK(K(1) == doctest::Approx(0.45));
  const Vectord x = vec({0.5, -0.25});
  CHECK(partial(game, 0, 1, x) == doctest::Approx(2 * 0.5));
  CHECK(partial(game, 1, 1, x) == doctest::Approx(std::exp(-0.25) - 0.5 + 1.1 * 0.5));
  CHECK(curvature_matrix(game, x)(0, 0) == doctest::Approx(5.0));

  std::vector<ConvexCost<double>> weak{
      {[](double y) { return y * y; }, [](double y) { return 2 * y; }, [](double) { return 2.0; }},
      {[](double y) { return y * y; }, [](double y) { return 2 * y; }, [](double) { return 2.0; }}};
  CHECK_THROWS_AS(AggregativeGamed(weak, vec({3, 1}), mat2(0, 1, 1, 0)), PreconditionError);
  CHECK_THROWS_AS(AggregativeGamed(weak, vec({1, 1}), mat2(1, 1, 1, 0)), PreconditionError);
  CHECK_THROWS_AS(AggregativeGamed(weak, vec({0, 1}), mat2(0, 1, 1, 0)), PreconditionError);
}

TEST_CASE("Faddeev-LeVerrier agrees with the spectrum") {
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> u(-2, 2);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 1 + trial % 5;
    const Matrixd A = Matrixd::NullaryExpr(n, n, [&] { return u(rng); });
    const Vectord c = characteristic_polynomial(A);
    Eigen::EigenSolver<Matrixd> es(A);
    for (Eigen::Index k = 0; k < n; ++k) {
      std::complex<double> lam = es.eigenvalues()(k), acc = 0;
      for (Eigen::Index j = 0; j <= n; ++j) acc = acc * lam + c(j);
      CHECK(std::abs(acc) < 1e-8 * std::max(1.0, std::pow(std::abs(lam), n)));
    }
  }
}

TEST_CASE("Routh test agrees with eigenvalues of the companion matrix") {
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> u(-1, 3);
  int stable_count = 0;
  for (int trial = 0; trial < 500; ++trial) {
    const int n = 1 + trial % 5;
    Vectord c(n + 1);
    c(0) = 1;
    for (int j = 1; j <= n; ++j) c(j) = u(rng);
    Matrixd comp = Matrixd::Zero(n, n);
    comp.row(0) = -c.tail(n).transpose();
    if (n > 1) comp.bottomLeftCorner(n - 1, n - 1).setIdentity();
    const double abscissa = spectral_abscissa(comp);
    if (std::abs(abscissa) < 1e-6) continue;
    const bool stable = routh_hurwitz(c);
    stable_count += stable;
    CHECK(stable == (abscissa < 0));
    if (n == 3) CHECK(routh_hurwitz_3(c(1), c(2), c(3)) == stable);
  }
  CHECK(stable_count > 20);
}
