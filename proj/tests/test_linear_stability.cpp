#include <doctest.h>

#include "dnes/linear_stability.hpp"
#include "fixtures.hpp"

using namespace dnes;

namespace {

const double kDeltaStar = (3 - std::sqrt(2.0)) / 2;

}  // namespace

TEST_CASE("duopoly linearisation splits into nominal and coupling parts") {
  const auto game = fixtures::duopoly();
  const auto ds = DeceptionStructure::single(2, 1, 0, 1.0, -1000);
  const double eps = 0.002;
  const auto jac = build_jacobian(game, ds, kDeltaStar, eps);
  CHECK(jac.x(0) == doctest::Approx(58.28427125));
  // s P_Q(s) + eps p(s)
  const auto dm = build_deceptive_matrices(game, ds);
  const Matrixd Qd = q_delta(dm, Vectord::Constant(1, kDeltaStar)).Q;
  const Vectord pq = characteristic_polynomial(Matrixd(-Qd));
  CHECK(jac.a1 == doctest::Approx(pq(1)));
  CHECK(jac.a0 == doctest::Approx(pq(2)));
  // coupling polynomial from the Schur complement: -w^T adj(sI - M) v
  const Vectord v = -(dm.Qbar[0] * jac.x + dm.Bbar[0]);
  const Vectord w = cost_gradient(game, 1, jac.x);
  Matrixd adj_neg(2, 2);
  adj_neg << Qd(1, 1), -Qd(0, 1), -Qd(1, 0), Qd(0, 0);
  CHECK(jac.a1_star == doctest::Approx(-w.dot(v)));
  CHECK(jac.a0_star == doctest::Approx(-w.dot(adj_neg * v)));
  CHECK(jac.a1_star == doctest::Approx(10000).epsilon(1e-9));
  CHECK(jac.a0_star == doctest::Approx(100000).epsilon(1e-9));
  CHECK(jac.charpoly(2) == doctest::Approx(jac.a0 + eps * jac.a1_star));
  CHECK(jac.charpoly(3) == doctest::Approx(eps * jac.a0_star));
  CHECK(stabilizing_epsilon_sign(jac) == 1);
}

TEST_CASE("epsilon bound is certified by the spectrum") {
  const auto game = fixtures::duopoly();
  const auto ds = DeceptionStructure::single(2, 1, 0, 1.0, -1000);
  const double star = epsilon_star(build_jacobian(game, ds, kDeltaStar, 1.0));
  CHECK(star > 0.001);
  CHECK(std::isfinite(star));
  for (double frac : {0.5, 0.9}) {
    const auto jac = build_jacobian(game, ds, kDeltaStar, frac * star);
    CHECK(is_hurwitz(jac.A));
    CHECK(routh_hurwitz_3(jac.charpoly(1), jac.charpoly(2), jac.charpoly(3)));
  }
  CHECK_FALSE(is_hurwitz(build_jacobian(game, ds, kDeltaStar, -0.5 * star).A));
}

TEST_CASE("equal marginal closed form") {
  for (double J : {200.0, 1000.0, 50000.0}) {
    for (double eps : {0.001, 0.5, 20.0}) {
      const Eigen::Matrix3d A = equal_marginal_matrix(100, 0.2, J, eps);
      const Vectord c = characteristic_polynomial(Matrixd(A));
      const Eigen::Vector4d printed = equal_marginal_polynomial(100, 0.2, J, eps);
      for (int k = 0; k < 4; ++k) CHECK(c(k) == doctest::Approx(printed(k)).epsilon(1e-10));
      CHECK(is_hurwitz(A));
    }
  }
  CHECK_THROWS_AS(equal_marginal_matrix(100, 0.2, 0, 1), PreconditionError);
  CHECK_THROWS_AS(equal_marginal_matrix(100, 0.2, -5, 1), PreconditionError);
}

TEST_CASE("equal marginal form is the duopoly linearisation at the reference") {
  const auto game = fixtures::duopoly();
  const auto ds = DeceptionStructure::single(2, 1, 0, 1.0, -1000);
  const double eps = 0.01;
  const auto jac = build_jacobian(game, ds, kDeltaStar, eps);
  const Eigen::Matrix3d closed = equal_marginal_matrix(100, 0.2, 1000, eps);
  CHECK((jac.A - Matrixd(closed)).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("price reference loop") {
  const auto game = fixtures::duopoly();
  const auto ds = DeceptionStructure::single(2, 1, 0);
  const auto jac = build_jacobian(game, ds, 2.0 / 3, 1.0, ReferenceKind::price);
  CHECK(jac.A(2, 0) == 0);
  CHECK(jac.A(2, 1) == 1.0);
  // the extracted constant term is the negative of the printed closed form
  CHECK(jac.a0_star == doctest::Approx(-jac.a0_star_closed_form));
  CHECK(stabilizing_epsilon_sign(jac) == -1);
  const double star = epsilon_star(jac);
  const auto stable = build_jacobian(game, ds, 2.0 / 3, -0.5 * star, ReferenceKind::price);
  CHECK(is_hurwitz(stable.A));
  const auto unstable = build_jacobian(game, ds, 2.0 / 3, 0.5 * star, ReferenceKind::price);
  CHECK_FALSE(is_hurwitz(unstable.A));
}

TEST_CASE("linearisation preconditions") {
  const auto game = fixtures::duopoly();
  CHECK_THROWS_AS(build_jacobian(game, DeceptionStructure::single(2, 1, 0), 1.6, 0.1), PreconditionError);
  CHECK_THROWS_AS(build_jacobian(fixtures::three_player_game(), DeceptionStructure::single(3, 0, 2), 0.1, 0.1),
                  PreconditionError);
}
