#pragma once

#include <functional>
#include <iosfwd>
#include <string>
#include <variant>
#include <vector>

#include "dnes/deception.hpp"
#include "dnes/game.hpp"

namespace dnes {

struct Rational {
  long long num = 0;
  long long den = 1;

  double value() const { return double(num) / double(den); }
  Rational reduced() const;
  std::string to_string() const;
  // "p/q", an integer, or a finite decimal such as "1.25"
  static Rational parse(const std::string& text);
};

struct ProbeConfig {
  double a = 0.05;
  double k = 0.03;
  double omega = 1.0;
  std::vector<Rational> omega_bar;
  std::vector<double> phases;  // empty means all zero

  void validate(int players) const;
  double frequency(int i) const { return omega * omega_bar.at(std::size_t(i)).value(); }
  double phase(int i) const { return phases.empty() ? 0.0 : phases.at(std::size_t(i)); }
  // smallest T > 0 with every probe periodic in T
  double common_period() const;
};

struct FixedDelta {
  double delta = 0;
};
// delta' = eps eps_i (J_i - J_i^ref)
struct IntegralDelta {
  double eps = 0;
};
// phi' = (rho - phi) / G1, rho' = eps eps_i (J_i - J_i^ref), delta = (G2/G1) rho - (G2/G1 - 1) phi
struct PhaseLeadDelta {
  double eps = 0;
  double G1 = 1;
  double G2 = 1;
};
// delta' = eps (u_i - u_ref)
struct PriceReferenceDelta {
  double eps = 0;
  double u_ref = 0;
};

using DeltaPolicy = std::variant<FixedDelta, IntegralDelta, PhaseLeadDelta, PriceReferenceDelta>;

int policy_states(const DeltaPolicy& policy);
std::string policy_name(const DeltaPolicy& policy);

class GameModel {
 public:
  GameModel() = default;
  GameModel(QuadraticGamed game) : game_(std::move(game)) {}
  GameModel(AggregativeGamed game) : game_(std::move(game)) {}

  int players() const;
  bool is_quadratic() const { return std::holds_alternative<QuadraticGamed>(game_); }
  const QuadraticGamed& quadratic() const;
  const AggregativeGamed& aggregative() const;

  double cost(int i, const Vectord& x) const;
  // d J_i / d x_k
  double partial(int i, int k, const Vectord& x) const;
  Vectord nash_equilibrium() const;

 private:
  std::variant<QuadraticGamed, AggregativeGamed> game_;
};

struct ClosedLoop {
  GameModel game;
  DeceptionStructure deception;
  std::vector<DeltaPolicy> policies;  // one per deceiver slot
  ProbeConfig probe;

  void validate() const;
  int players() const { return game.players(); }
  int state_size() const;
  Vectord initial_state(const Vectord& u0, const Vectord& delta0) const;
  Vectord deltas(const Vectord& z) const;
  Vectord action(double t, const Vectord& z) const;
  // extremum seeking closed loop
  void rhs(double t, const Vectord& z, Vectord& dz) const;
  // averaged loop in (u, policy states), probes removed
  void averaged_rhs(const Vectord& z, Vectord& dz) const;
};

struct SimOptions {
  double t_final = 100;
  int samples_per_period = 40;
  double output_interval = 0.05;  // <= 0 writes every step
  double blowup = 1e6;
  int window_divisions = 8;       // sliding window advances by T / window_divisions
  double averaged_step = 1e-2;    // upper bound on the averaged integrator step
};

struct Sample {
  double t = 0;
  Vectord x, u, delta, J;
};

struct Trajectory {
  int players = 0;
  std::vector<int> deceivers;  // player index of every delta column
  double step = 0;
  double window = 0;  // common probe period
  std::vector<Sample> samples;
  // centred moving averages over one common period
  std::vector<Sample> windows;
  Vectord final_state;
  std::vector<Vectord> window_states;
  // set when |u| passes the blow-up threshold; the run stops there
  bool unstable = false;
  std::string diagnostic;

  const Sample& steady_state() const;
  std::vector<std::string> header() const;
};

using StepObserver = std::function<void(double t, const Vectord& z, const Vectord& x, const Vectord& J)>;

double integration_step(const ClosedLoop& loop, const SimOptions& opt);

Trajectory simulate(const ClosedLoop& loop, const Vectord& z0, const SimOptions& opt, const StepObserver& observer = {});
Trajectory simulate_averaged(const ClosedLoop& loop, const Vectord& z0, const SimOptions& opt);

// sup over window centres of the max-norm gap between the moving average of the
// full loop and the averaged loop, one entry per probe frequency multiplier
std::vector<double> averaging_gap(const ClosedLoop& loop, const Vectord& z0, double t_final,
                                  const std::vector<double>& multipliers, int threads = 1);

// sup of |x(t) - reference| over the final common period
double steady_state_offset(const ClosedLoop& loop, const Vectord& z0, const SimOptions& opt, const Vectord& reference);

void write_csv(std::ostream& os, const Trajectory& tr, const std::vector<Sample>& rows);

}  // namespace dnes
