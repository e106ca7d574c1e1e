#pragma once

#include <optional>
#include <string>
#include <vector>

#include "dnes/deception.hpp"
#include "dnes/game.hpp"
#include "dnes/simulator.hpp"
#include "dnes/types.hpp"

namespace dnes {

// Parse failure carrying every violation found in the file.
class ScenarioError : public ParseError {
 public:
  explicit ScenarioError(std::vector<std::string> violations);
  const std::vector<std::string>& violations() const { return violations_; }

 private:
  std::vector<std::string> violations_;
};

// One summand of an aggregative own cost: poly(c0, c1, ...) or exp(scale, rate).
struct CostTerm {
  enum class Kind { poly, exp };
  Kind kind = Kind::poly;
  std::vector<double> args;
};

struct GameSpec {
  enum class Type { quadratic, duopoly, aggregative };
  Type type = Type::quadratic;
  int players = 0;
  // quadratic
  std::vector<Matrixd> Q;
  std::vector<Vectord> b;
  std::vector<double> p;
  // duopoly: J_i is minus the profit of company i
  double demand = 0;
  double preference = 0;
  Vectord marginal_costs;
  // aggregative
  std::vector<std::vector<CostTerm>> costs;
  Matrixd alpha;
  Vectord kappa;
};

std::string to_string(GameSpec::Type type);

enum class PolicyKind { fixed, integral, phase_lead, price_reference };
std::string to_string(PolicyKind kind);

struct DeceiverSpec {
  int player = 0;  // 0-based; files use 1-based indices
  std::vector<int> targets;
  std::vector<double> phase_errors;
  PolicyKind policy = PolicyKind::integral;
  double epsilon = 0;
  double gain_sign = 1;
  double reference = 0;
  double delta0 = 0;
  double delta = 0;
  double G1 = 1;
  double G2 = 1;
  double u_ref = 0;
};

struct SimSpec {
  double t_final = 100;
  std::optional<Vectord> u0;  // Nash equilibrium when absent
  double output_interval = 0.05;
  int samples_per_period = 40;
  double blowup = 1e6;
  int window_divisions = 8;
  double averaged_step = 1e-2;
  bool averaged = false;
};

struct AnalysisSpec {
  double delta_lower = -100;
  double delta_upper = 100;
  std::vector<int> benevolence_members;  // 0-based
  std::optional<Vectord> mutual_delta;
  std::vector<double> dne_deltas;
};

struct SweepSpec {
  std::string parameter;  // section.key, as accepted by --set
  double from = 0;
  double to = 0;
  double step = 0;

  std::vector<double> values() const;
};

struct Scenario {
  std::string name;
  GameSpec game;
  std::vector<DeceiverSpec> deceivers;
  std::optional<ProbeConfig> probe;
  SimSpec sim;
  AnalysisSpec analysis;
  std::optional<SweepSpec> sweep;
};

// overrides are "section.key=value"; a dotted section such as deceiver.2 is allowed
Scenario parse_scenario(const std::string& text, const std::vector<std::string>& overrides = {});
Scenario load_scenario(const std::string& path, const std::vector<std::string>& overrides = {});
std::string serialize(const Scenario& scn);

// scalar syntax of scenario files: numbers, inf, pi, and one '/' or '*'
double parse_scalar(const std::string& text);

GameModel build_game(const Scenario& scn);
QuadraticGamed build_quadratic(const Scenario& scn);
AggregativeGamed build_aggregative(const Scenario& scn);
DeceptionStructure build_deception(const Scenario& scn);
ClosedLoop build_loop(const Scenario& scn);
SimOptions build_sim_options(const Scenario& scn);
Vectord build_initial_state(const Scenario& scn, const ClosedLoop& loop);

}  // namespace dnes
