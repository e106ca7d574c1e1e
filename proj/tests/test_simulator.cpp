#include <doctest.h>

#include <sstream>

#include "dnes/simulator.hpp"
#include "fixtures.hpp"

using namespace dnes;
using fixtures::vec;

namespace {

ClosedLoop duopoly_loop(DeltaPolicy policy, double reference = -1000, double omega = 1000) {
  ClosedLoop loop;
  loop.game = fixtures::duopoly();
  loop.deception = DeceptionStructure::single(2, 1, 0, 1.0, reference);
  loop.policies = {policy};
  loop.probe.a = 0.05;
  loop.probe.k = 0.03;
  loop.probe.omega = omega;
  loop.probe.omega_bar = {Rational{1, 1}, Rational{17, 18}};
  return loop;
}

const Vectord kNash = vec({130.0 / 3, 110.0 / 3});

}  // namespace

TEST_CASE("rationals and the common period") {
  CHECK(Rational::parse("7877.75").to_string() == "31511/4");
  CHECK(Rational::parse("14873/2").value() == 7436.5);
  CHECK(Rational::parse("6/4").to_string() == "3/2");
  CHECK(Rational::parse("12").to_string() == "12");
  CHECK_THROWS_AS(Rational::parse("1/0"), ParseError);
  CHECK_THROWS_AS(Rational::parse("abc"), ParseError);
  ProbeConfig probe;
  probe.omega = 1;
  probe.omega_bar = {Rational::parse("31511/4"), Rational::parse("14873/2")};
  CHECK(probe.common_period() == doctest::Approx(8 * M_PI).epsilon(1e-15));
  probe.omega_bar = {Rational{1, 1}, Rational{17, 18}};
  probe.omega = 1000;
  CHECK(probe.common_period() == doctest::Approx(36 * M_PI / 1000).epsilon(1e-15));
  probe.omega_bar = {Rational{1, 1}, Rational{2, 2}};
  CHECK_THROWS_AS(probe.validate(2), PreconditionError);
}

TEST_CASE("probe orthogonality over the exact common period") {
  ProbeConfig probe;
  probe.omega = 1;
  probe.omega_bar = {Rational::parse("31511/4"), Rational::parse("14873/2")};
  const double T = probe.common_period();
  const long n = 400000;
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) {
      double acc = 0;
      for (long s = 0; s < n; ++s) {
        const double t = T * double(s) / double(n);
        acc += std::sin(probe.frequency(i) * t) * std::sin(probe.frequency(j) * t);
      }
      CHECK(acc / double(n) == doctest::Approx(i == j ? 0.5 : 0.0).epsilon(1e-10).scale(1));
    }
  }
}

TEST_CASE("deceptive action adds the target probe") {
  const auto loop = duopoly_loop(FixedDelta{0.7});
  const Vectord z = vec({40, 30});
  const double t = 0.0123;
  const Vectord x = loop.action(t, z);
  const double w1 = loop.probe.frequency(0), w2 = loop.probe.frequency(1);
  CHECK(x(0) == doctest::Approx(40 + 0.05 * std::sin(w1 * t)));
  CHECK(x(1) == doctest::Approx(30 + 0.05 * (std::sin(w2 * t) + 0.7 * std::sin(w1 * t))));
  const auto nominal = duopoly_loop(FixedDelta{0.0});
  CHECK(nominal.action(t, z)(1) == doctest::Approx(30 + 0.05 * std::sin(w2 * t)));
}

TEST_CASE("integral policy rests at the reference") {
  auto loop = duopoly_loop(IntegralDelta{0.001});
  const Vectord z = loop.initial_state(vec({50, 40}), vec({0.3}));
  const double t = 0.5;
  const Vectord x = loop.action(t, z);
  Deceiver d = loop.deception[0];
  d.reference = cost(fixtures::duopoly(), 1, x);
  loop.deception = DeceptionStructure(2, {d});
  Vectord dz;
  loop.rhs(t, z, dz);
  CHECK(dz(2) == doctest::Approx(0).scale(1));
}

TEST_CASE("averaged field is the deceptive pseudogradient flow") {
  const auto game = fixtures::duopoly();
  const auto loop = duopoly_loop(FixedDelta{0.4});
  const Vectord u = vec({45, 38});
  Vectord du;
  loop.averaged_rhs(u, du);
  CHECK(du(0) == doctest::Approx(-0.03 * (partial(game, 0, 0, u) + 0.4 * partial(game, 0, 1, u))));
  CHECK(du(1) == doctest::Approx(-0.03 * partial(game, 1, 1, u)));
  const auto plain = duopoly_loop(FixedDelta{0.0});
  plain.averaged_rhs(u, du);
  CHECK((du + 0.03 * pseudogradient(game, u)).norm() < 1e-12);
}

TEST_CASE("phase lead with equal gains is the integral policy") {
  SimOptions opt;
  opt.t_final = 5;
  const auto integral = duopoly_loop(IntegralDelta{0.001});
  const auto lead = duopoly_loop(PhaseLeadDelta{0.001, 0.5, 0.5});
  const auto a = simulate(integral, integral.initial_state(kNash, vec({0})), opt);
  const auto b = simulate(lead, lead.initial_state(kNash, vec({0})), opt);
  REQUIRE(a.samples.size() == b.samples.size());
  double worst = 0;
  for (std::size_t i = 0; i < a.samples.size(); ++i) {
    worst = std::max(worst, (a.samples[i].u - b.samples[i].u).cwiseAbs().maxCoeff());
    worst = std::max(worst, std::abs(a.samples[i].delta(0) - b.samples[i].delta(0)));
  }
  CHECK(worst <= 1e-9);
}

TEST_CASE("runs are bit identical") {
  SimOptions opt;
  opt.t_final = 2;
  const auto loop = duopoly_loop(IntegralDelta{0.001});
  const Vectord z0 = loop.initial_state(kNash, vec({0}));
  const auto a = simulate(loop, z0, opt);
  const auto b = simulate(loop, z0, opt);
  CHECK(a.final_state == b.final_state);
  std::ostringstream sa, sb;
  write_csv(sa, a, a.samples);
  write_csv(sb, b, b.samples);
  CHECK(sa.str() == sb.str());
}

TEST_CASE("csv layout") {
  SimOptions opt;
  opt.t_final = 0.2;
  opt.output_interval = 0.1;
  const auto loop = duopoly_loop(IntegralDelta{0.001});
  const auto tr = simulate(loop, loop.initial_state(kNash, vec({0})), opt);
  std::ostringstream os;
  write_csv(os, tr, tr.samples);
  std::istringstream is(os.str());
  std::string line;
  std::getline(is, line);
  CHECK(line == "t,x1,x2,u1,u2,delta2,J1,J2");
  std::getline(is, line);
  CHECK(line.rfind("0,", 0) == 0);
  CHECK(line.find("43.333333333333336") != std::string::npos);
  double last = -1;
  for (const auto& s : tr.samples) {
    CHECK(s.t > last);
    last = s.t;
  }
}

TEST_CASE("fixed deception inside the stable set settles at the deceptive equilibrium") {
  SimOptions opt;
  opt.t_final = 100;
  opt.output_interval = 1;
  const auto loop = duopoly_loop(FixedDelta{0.5}, -1000, 5000);
  const auto tr = simulate(loop, loop.initial_state(kNash, vec({0})), opt);
  REQUIRE_FALSE(tr.unstable);
  const auto dm = build_deceptive_matrices(fixtures::duopoly(), loop.deception);
  const Vectord target = dne(dm, vec({0.5}));
  CHECK((tr.steady_state().u - target).norm() < 0.15);
}

TEST_CASE("fixed deception outside the stable set runs away in the averaged loop") {
  SimOptions opt;
  opt.t_final = 400;
  opt.output_interval = 1;
  auto loop = duopoly_loop(FixedDelta{1.6});
  const auto dm = build_deceptive_matrices(fixtures::duopoly(), loop.deception);
  const auto sys = q_delta(dm, vec({1.6}));
  const Vectord saddle = -sys.Q.fullPivLu().solve(sys.B);
  const auto tr = simulate_averaged(loop, loop.initial_state(kNash, vec({0})), opt);
  const double start = (tr.samples.front().u - saddle).norm();
  const double end = (tr.samples.back().u - saddle).norm();
  CHECK(end > 10 * start);
}

// far from equilibrium the probe ripple grows with |J| and the full loop
// stays bounded instead of following the averaged saddle
TEST_CASE("full loop outside the stable set leaves the deceptive equilibrium") {
  SimOptions opt;
  opt.t_final = 100;
  opt.output_interval = 1;
  const auto loop = duopoly_loop(FixedDelta{2.5});
  const auto dm = build_deceptive_matrices(fixtures::duopoly(), loop.deception);
  const auto sys = q_delta(dm, vec({2.5}));
  const Vectord saddle = -sys.Q.fullPivLu().solve(sys.B);
  const auto tr = simulate(loop, loop.initial_state(saddle, vec({0})), opt);
  CHECK((tr.steady_state().u - saddle).norm() > 10);
}

TEST_CASE("blow-up truncates the run and flags it") {
  SimOptions opt;
  opt.t_final = 400;
  opt.output_interval = 1;
  const auto loop = duopoly_loop(FixedDelta{2.5});
  const auto full = simulate(loop, loop.initial_state(kNash, vec({0})), opt);
  CHECK_FALSE(full.unstable);
  const auto tr = simulate_averaged(loop, loop.initial_state(kNash, vec({0})), opt);
  CHECK(tr.unstable);
  CHECK_FALSE(tr.diagnostic.empty());
  CHECK(tr.samples.back().t < 400);
  opt.blowup = 100;
  const auto low = simulate(loop, loop.initial_state(kNash, vec({0})), opt);
  CHECK(low.unstable);
  CHECK(low.samples.back().t < 400);
  CHECK(low.final_state.head(2).cwiseAbs().maxCoeff() > 100);
}

TEST_CASE("averaged loop compared with itself has no gap") {
  SimOptions opt;
  opt.t_final = 20;
  const auto loop = duopoly_loop(IntegralDelta{0.001});
  const Vectord z0 = loop.initial_state(kNash, vec({0}));
  const auto a = simulate_averaged(loop, z0, opt);
  const auto b = simulate_averaged(loop, z0, opt);
  double gap = 0;
  for (std::size_t i = 0; i < a.window_states.size(); ++i)
    gap = std::max(gap, (a.window_states[i] - b.window_states[i]).cwiseAbs().maxCoeff());
  CHECK(gap == 0);
}

TEST_CASE("step size respects the fastest probe") {
  SimOptions opt;
  const auto loop = duopoly_loop(IntegralDelta{0.001});
  const double h = integration_step(loop, opt);
  CHECK(h <= 2 * M_PI / (1000 * 40) * (1 + 1e-12));
  const double per = loop.probe.common_period() / h;
  CHECK(std::abs(per - std::round(per)) < 1e-6);
}

TEST_CASE("loop validation") {
  auto loop = duopoly_loop(PhaseLeadDelta{0.001, 2.0, 1.0});
  CHECK_THROWS_AS(loop.validate(), PreconditionError);
  loop = duopoly_loop(IntegralDelta{0.001});
  loop.probe.a = 0;
  CHECK_THROWS_AS(loop.validate(), PreconditionError);
  loop = duopoly_loop(IntegralDelta{0.001});
  loop.policies.clear();
  CHECK_THROWS_AS(loop.validate(), PreconditionError);
}
