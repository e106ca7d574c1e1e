#include <doctest.h>

#include "dnes/aggregative.hpp"
#include "fixtures.hpp"

using namespace dnes;
using fixtures::vec;

namespace {

DeceptionStructure second_deceives_first(double gain_sign = -1.0, double reference = 0.605) {
  return DeceptionStructure::single(2, 1, 0, gain_sign, reference);
}

}  // namespace

TEST_CASE("monotone delta bounds") {
  const auto game = fixtures::aggregative_pair();
  const auto ds = second_deceives_first();
  CHECK(lambda_diagonal(game, ds).isApprox(vec({2, 0})));
  const auto b = delta_bounds(game, ds);
  CHECK(b.infimum() == doctest::Approx(-0.225));
  CHECK(std::isinf(b.supremum()));
  // the other direction of deception has a negative-free coupling too
  const auto other = DeceptionStructure::single(2, 0, 1);
  CHECK(delta_bounds(game, other).infimum() == doctest::Approx(-0.45 / 1.1));
}

TEST_CASE("bounds need a strongly monotone nominal game") {
  std::vector<ConvexCost<double>> own{
      {[](double y) { return y * y; }, [](double y) { return 2 * y; }, [](double) { return 2.0; }},
      {[](double y) { return y * y; }, [](double y) { return 2 * y; }, [](double) { return 2.0; }}};
  const AggregativeGamed game(own, vec({2, 2}), fixtures::mat2(0, 3, 3, 0));
  CHECK_THROWS_AS(delta_bounds(game, DeceptionStructure::single(2, 1, 0)), PreconditionError);
}

TEST_CASE("aggregative equilibria") {
  const auto game = fixtures::aggregative_pair();
  const auto ds = second_deceives_first();
  const auto ne = dne_agg(game, ds, 0.0);
  CHECK(ne.converged);
  CHECK(ne.certified);
  CHECK(ne.stable);
  CHECK(ne.x.isApprox(vec({0.39334994, -0.51507143}), 1e-7));
  CHECK(costs(game, ne.x).isApprox(vec({-0.22654, 0.63989}), 1e-4));
  const auto deceived = dne_agg(game, ds, -0.22);
  CHECK(deceived.x.isApprox(vec({0.45372233, -0.54071357}), 1e-7));
  CHECK(cost(game, 1, deceived.x) == doctest::Approx(0.60483653));
  CHECK(gamma(game, ds, deceived.x, -0.22).cwiseAbs().maxCoeff() <= 1e-10);
  const auto outside = dne_agg(game, ds, -0.3);
  CHECK_FALSE(outside.certified);
}

TEST_CASE("equilibrium derivative matches finite differences") {
  const auto game = fixtures::aggregative_pair();
  const auto ds = second_deceives_first();
  for (double d : {-0.2, 0.0, 0.3}) {
    const Vectord x = dne_agg(game, ds, d).x;
    const double h = 1e-6;
    const Vectord fd = (dne_agg(game, ds, d + h).x - dne_agg(game, ds, d - h).x) / (2 * h);
    CHECK((g_prime(game, ds, d, x) - fd).norm() < 1e-6);
  }
  const Vectord x0 = dne_agg(game, ds, 0.0).x;
  CHECK(g_prime(game, ds, 0.0, x0).isApprox(vec({-0.26138743, 0.11069522}), 1e-6));
}

TEST_CASE("benefit condition and tuning direction") {
  const auto game = fixtures::aggregative_pair();
  const auto rep = benefit_condition(game, second_deceives_first(-1.0));
  CHECK(rep.expression == doctest::Approx(-0.11069522 * 0.51507143).epsilon(1e-5));
  CHECK(rep.holds);
  CHECK(rep.beneficial_direction == -1);
  CHECK_FALSE(benefit_condition(game, second_deceives_first(1.0)).holds);
  CHECK(monotone_tuning_hint(game, second_deceives_first()) == TuningDirection::decrease);
  const double d = solve_delta_for_reference(game, second_deceives_first(), 0.605);
  CHECK(d == doctest::Approx(-0.2196).epsilon(2e-3));
  CHECK(cost(game, 1, dne_agg(game, second_deceives_first(), d).x) == doctest::Approx(0.605).epsilon(1e-10));
}

TEST_CASE("symmetric game with the target at the origin has no tuning direction") {
  std::vector<ConvexCost<double>> own{
      {[](double y) { return y * y; }, [](double y) { return 2 * y; }, [](double) { return 2.0; }},
      {[](double y) { return y * y + y; }, [](double y) { return 2 * y + 1; }, [](double) { return 2.0; }}};
  // alpha_12 = 0 keeps player 1 at zero whatever player 2 does
  const AggregativeGamed game(own, vec({2, 2}), fixtures::mat2(0, 0, 0.5, 0));
  const auto ds = DeceptionStructure::single(2, 1, 0);
  CHECK(dne_agg(game, ds, 0.0).x(0) == doctest::Approx(0).scale(1));
  CHECK(monotone_tuning_hint(game, ds) == TuningDirection::none);
  const auto rep = benefit_condition(game, ds);
  CHECK_FALSE(rep.holds);
  CHECK_FALSE(rep.diagnostic.empty());
}
