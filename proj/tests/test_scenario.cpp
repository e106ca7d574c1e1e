#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "dnes/commands.hpp"
#include "dnes/scenario.hpp"
#include "fixtures.hpp"

using namespace dnes;
using fixtures::vec;

namespace {

std::string scenario_path(const std::string& name) { return std::string(DNES_SCENARIO_DIR) + "/" + name + ".scn"; }

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

const char* kBundled[] = {"duopoly", "duopoly-mutual", "duopoly-phase-lead", "duopoly-price-ref", "quad2",
                          "quad2-immune", "quad2-translation", "quad3", "agg2"};

std::vector<std::string> violations_of(const std::string& text) {
  try {
    parse_scenario(text);
  } catch (const ScenarioError& e) {
    return e.violations();
  }
  return {};
}

bool mentions(const std::vector<std::string>& v, const std::string& needle) {
  for (const auto& s : v)
    if (s.find(needle) != std::string::npos) return true;
  return false;
}

const char* kSmall = R"(
[game]
type = quadratic
Q1 = 3, 1; 1, 5
b1 = 4, 2
Q2 = 7, 2; 2, 4
b2 = 1, 6
[deceiver.2]
targets = 1
policy = integral
epsilon = 0.01
reference = -4
[probe]
a = 0.05
k = 1
omega = 1000
omega_bar = 1, 17/18
)";

}  // namespace

TEST_CASE("scalar syntax") {
  CHECK(parse_scalar("2.5") == 2.5);
  CHECK(parse_scalar(" -130/3 ") == doctest::Approx(-130.0 / 3));
  CHECK(parse_scalar("pi/2") == doctest::Approx(std::acos(0.0)));
  CHECK(parse_scalar("2*pi") == doctest::Approx(4 * std::acos(0.0)));
  CHECK(parse_scalar("1e-3") == 0.001);
  CHECK(std::isinf(parse_scalar("-inf")));
  CHECK_THROWS_AS(parse_scalar("abc"), ParseError);
  CHECK_THROWS_AS(parse_scalar("1/0"), ParseError);
  CHECK_THROWS_AS(parse_scalar("--2"), ParseError);
}

TEST_CASE("empty file names the required section") {
  const auto v = violations_of("");
  REQUIRE(v.size() == 1);
  CHECK(mentions(v, "[game]"));
}

TEST_CASE("every violation is reported") {
  const std::string text = R"(
[game]
type = quadratic
Q1 = 3, 1; 1, 5
b1 = 4, 2, 9
Q2 = 7, 2; 2, 4
b2 = 1, 6
colour = blue
[deceiver.2]
targets = 1
policy = integral
epsilon = 0.01
delta = 3
[deceiver.5]
targets = 1
[probe]
a = 0.05
k = 1
omega = 1000
omega_bar = 1, sqrt2
[extras]
x = 1
)";
  const auto v = violations_of(text);
  CHECK(mentions(v, "b1 needs 2 entries"));
  CHECK(mentions(v, "colour: unknown key"));
  CHECK(mentions(v, "delta: unknown key or not used by policy integral"));
  CHECK(mentions(v, "[deceiver.5] names a player outside"));
  CHECK(mentions(v, "omega_bar"));
  CHECK(mentions(v, "unknown section [extras]"));
  CHECK(v.size() == 6);
}

TEST_CASE("duplicate keys and repeated probe frequencies are rejected") {
  CHECK(mentions(violations_of("[game]\ntype = duopoly\ntype = duopoly\n"), "repeated"));
  const std::string text = std::string(kSmall) + "phases = 0, 0\n";
  CHECK(violations_of(text).empty());
  std::string same = kSmall;
  same.replace(same.find("1, 17/18"), 8, "1, 2/2");
  CHECK(!violations_of(same).empty());
}

TEST_CASE("overrides replace and add keys") {
  const auto scn = parse_scenario(kSmall, {"deceiver.2.epsilon=0.5", "sim.t_final=7", "analysis.dne_deltas=0, 1/2"});
  CHECK(scn.deceivers[0].epsilon == 0.5);
  CHECK(scn.sim.t_final == 7);
  CHECK(scn.analysis.dne_deltas == std::vector<double>{0, 0.5});
  CHECK_THROWS_AS(parse_scenario(kSmall, {"deceiver.2.bogus=1"}), ScenarioError);
  CHECK_THROWS_AS(parse_scenario(kSmall, {"noequals"}), ScenarioError);
}

TEST_CASE("indices are one based in files and zero based in memory") {
  const auto scn = parse_scenario(kSmall);
  REQUIRE(scn.deceivers.size() == 1);
  CHECK(scn.deceivers[0].player == 1);
  CHECK(scn.deceivers[0].targets == std::vector<int>{0});
  CHECK(mentions(violations_of(std::string(kSmall) + "[analysis]\nbenevolence_members = 3\n"), "outside 1..2"));
}

TEST_CASE("serialization is idempotent after one pass") {
  for (const char* name : kBundled) {
    CAPTURE(name);
    const auto first = serialize(load_scenario(scenario_path(name)));
    const auto second = serialize(parse_scenario(first));
    CHECK(first == second);
  }
}

TEST_CASE("round trip keeps values exactly") {
  const auto a = load_scenario(scenario_path("duopoly"));
  const auto b = parse_scenario(serialize(a));
  REQUIRE(b.sim.u0);
  CHECK((*b.sim.u0)(0) == 130.0 / 3);
  CHECK(b.probe->omega_bar[0].num == 31511);
  CHECK(b.probe->omega_bar[0].den == 4);
  CHECK(b.deceivers[0].reference == -1000);
}

TEST_CASE("duopoly scenario builds the price game") {
  const auto scn = load_scenario(scenario_path("duopoly"));
  CHECK(scn.name == "duopoly");
  const auto game = build_quadratic(scn);
  const auto ref = fixtures::duopoly();
  for (int i = 0; i < 2; ++i) {
    CHECK(game.Q(i).isApprox(ref.Q(i)));
    CHECK(game.b(i).isApprox(ref.b(i)));
    CHECK(game.p(i) == doctest::Approx(ref.p(i)));
  }
  const auto loop = build_loop(scn);
  const Vectord z0 = build_initial_state(scn, loop);
  CHECK(z0.isApprox(vec({130.0 / 3, 110.0 / 3, 0})));
}

TEST_CASE("aggregative catalogue terms") {
  const auto scn = load_scenario(scenario_path("agg2"));
  const auto game = build_aggregative(scn);
  const auto ref = fixtures::aggregative_pair();
  for (double x : {-1.3, 0.0, 0.4, 2.0})
    for (int i = 0; i < 2; ++i) {
      CHECK(game.own(i).value(x) == doctest::Approx(ref.own(i).value(x)));
      CHECK(game.own(i).slope(x) == doctest::Approx(ref.own(i).slope(x)));
      CHECK(game.own(i).curvature(x) == doctest::Approx(ref.own(i).curvature(x)));
    }
  CHECK(game.alpha().isApprox(ref.alpha()));
  CHECK(mentions(violations_of("[game]\ntype = aggregative\nc1 = log(2)\nc2 = poly(0,0,1)\nalpha = 0,1;1,0\nkappa = 1,1\n"),
                 "unknown cost term"));
}

TEST_CASE("sweep grid") {
  SweepSpec s{"deceiver.2.delta", -6.95, 1.65, 0.05};
  const auto v = s.values();
  CHECK(v.size() == 173);
  CHECK(v.front() == -6.95);
  CHECK(v.back() == doctest::Approx(1.65));
}

TEST_CASE("report text parses back") {
  Report rep;
  rep.set("omega", IntervalSet::single(-kInf, 0));
  rep.set("x", vec({1, 2.5}));
  rep.fail("block", PreconditionError("bad"));
  const Report back = Report::parse(rep.str() + "error_code = 3\n");
  CHECK(back.get("omega") == std::optional<std::string>("(-inf, 0)"));
  CHECK(back.get("x") == std::optional<std::string>("1, 2.5"));
  CHECK(back.exit_code() == 3);
  CHECK(IntervalSet::parse(*back.get("omega")).approx_equal(IntervalSet::single(-kInf, 0), 0));
}

TEST_CASE("every bundled scenario passes its own analysis") {
  for (const char* name : kBundled) {
    CAPTURE(name);
    const Report rep = analyze(load_scenario(scenario_path(name)));
    CHECK(rep.exit_code() == 0);
    CHECK(rep.get("status") == std::optional<std::string>("ok"));
  }
}

TEST_CASE("duopoly analysis report") {
  const Report rep = analyze(load_scenario(scenario_path("duopoly")));
  CHECK(rep.get("deceiver.2.delta_set") == std::optional<std::string>("(-inf, 1.5)"));
  CHECK(rep.get("omega_profit") == std::optional<std::string>("(0, inf)"));
  CHECK(rep.get("reaction_curve.1.by.2") == std::optional<std::string>("rotation"));
  CHECK(rep.get("reaction_curve.1.by.2.center") == std::optional<std::string>("30, 10"));
  CHECK(rep.get("benevolence.window_profit") == std::optional<std::string>("(222.222, 888.889)"));
  CHECK(std::stod(*rep.get("delta_star")) == doctest::Approx(0.7928932188));
}

TEST_CASE("immune scenario keeps the Nash equilibrium") {
  const Report rep = analyze(load_scenario(scenario_path("quad2-immune")));
  CHECK(rep.get("immunity.1") == std::optional<std::string>("true"));
  CHECK(rep.get("dne") == rep.get("nash_equilibrium"));
  CHECK(rep.get("sdso.skipped"));
  const Report tr = analyze(load_scenario(scenario_path("quad2-translation")));
  CHECK(tr.get("reaction_curve.1.by.2") == std::optional<std::string>("translation"));
}

TEST_CASE("analysis failures carry the error class") {
  // a profit of 1000 for the duopoly means a cost of -1000; +1000 is not attainable
  const auto scn = load_scenario(scenario_path("duopoly"), {"deceiver.2.reference=1000"});
  const Report rep = analyze(scn);
  CHECK(rep.exit_code() == 3);
  CHECK(rep.get("status") == std::optional<std::string>("precondition_failed"));
  CHECK(rep.get("delta_star.error"));
}

TEST_CASE("commands map failures to exit codes") {
  const auto dir = std::filesystem::temp_directory_path() / "dnes_cli_test";
  std::filesystem::create_directories(dir);
  std::ostringstream out, err;
  CHECK(run_command("analyze", scenario_path("quad2"), dir.string(), {}, 1, out, err) == 0);
  CHECK(std::filesystem::exists(dir / "quad2.report"));
  CHECK(read_file((dir / "quad2.report").string()).find("omega = (-4.83333, 31.6479)") != std::string::npos);

  const auto bad = dir / "bad.scn";
  std::ofstream(bad.string()) << "[game]\ntype = quadratic\nQ1 = 1\n";
  CHECK(run_command("analyze", bad.string(), dir.string(), {}, 1, out, err) == 2);
  CHECK(run_command("analyze", (dir / "missing.scn").string(), dir.string(), {}, 1, out, err) == 2);

  const auto asym = dir / "asym.scn";
  std::ofstream(asym.string()) << "[game]\ntype = quadratic\nQ1 = 1, 2; 0, 1\nb1 = 0, 0\nQ2 = 1, 0; 0, 1\nb2 = 0, 0\n";
  CHECK(run_command("analyze", asym.string(), dir.string(), {}, 1, out, err) == 3);

  // averaged loop with delta outside the stable set diverges
  std::ostringstream sim_out;
  CHECK(run_command("simulate", scenario_path("quad2"), dir.string(), {"deceiver.2.delta=1.8", "sim.t_final=400"}, 1,
                    sim_out, err) == 4);
  CHECK(sim_out.str().find("status = unstable") != std::string::npos);
  CHECK(run_command("frobnicate", scenario_path("quad2"), dir.string(), {}, 1, out, err) == 2);
}

TEST_CASE("sweep runs in parallel and matches the analysis") {
  const auto scn = load_scenario(scenario_path("quad2"), {"sweep.from=-1", "sweep.to=1", "sweep.step=0.25"});
  const auto one = run_sweep(scn, 1);
  const auto four = run_sweep(scn, 4);
  REQUIRE(one.size() == 9);
  REQUIRE(four.size() == 9);
  for (std::size_t i = 0; i < one.size(); ++i) {
    CHECK(one[i].value == four[i].value);
    CHECK(one[i].code == 0);
    CHECK((one[i].J - four[i].J).norm() == 0);
    CHECK((one[i].J - one[i].J_dne).norm() < 1e-6);
  }
  std::ostringstream csv;
  write_sweep_csv(csv, scn, one);
  CHECK(csv.str().rfind("deceiver.2.delta,code,unstable,x1,x2,J1,J2,delta2,x_dne1,x_dne2,J_dne1,J_dne2\n", 0) == 0);
}
