#pragma once

#include <string>

#include "dnes/deception.hpp"
#include "dnes/game.hpp"
#include "dnes/interval_set.hpp"

namespace dnes {

// Diagonal of Lambda for the single deceiver in ds: entry t is alpha_{t,d}.
Vectord lambda_diagonal(const AggregativeGamed& game, const DeceptionStructure& ds);

// Range of delta keeping the deceptive pseudogradient strongly monotone.
IntervalSet delta_bounds(const AggregativeGamed& game, const DeceptionStructure& ds);

Vectord gamma(const AggregativeGamed& game, const DeceptionStructure& ds, const Vectord& x, double delta);

struct AggregativeEquilibrium {
  Vectord x;
  bool converged = false;
  bool certified = false;  // delta inside the monotone bounds
  bool stable = false;     // Jacobian of gamma has spectrum in the open right half plane
  int iterations = 0;
  double residual = 0;
  std::string method;
};

AggregativeEquilibrium dne_agg(const AggregativeGamed& game, const DeceptionStructure& ds, double delta);
AggregativeEquilibrium dne_agg(const AggregativeGamed& game, const DeceptionStructure& ds, double delta,
                               const Vectord& start);

// derivative of the equilibrium map at (delta, x_delta)
Vectord g_prime(const AggregativeGamed& game, const DeceptionStructure& ds, double delta, const Vectord& x);

struct BenefitReport {
  // eps_d ((Xi*)^-1 Lambda x*)_d x_d*, the printed test quantity
  double expression = 0;
  // a stable integral loop started at delta = 0 lowers J_d
  bool holds = false;
  // sign of the delta move that lowers J_d: +1, -1 or 0
  int beneficial_direction = 0;
  Vectord x_star;
  Vectord g_prime0;
  std::string diagnostic;
};

BenefitReport benefit_condition(const AggregativeGamed& game, const DeceptionStructure& ds);

enum class TuningDirection { increase, decrease, none };
std::string to_string(TuningDirection dir);

TuningDirection monotone_tuning_hint(const AggregativeGamed& game, const DeceptionStructure& ds);

// delta inside the monotone bounds with J_d(g(delta)) = reference, closest to zero
double solve_delta_for_reference(const AggregativeGamed& game, const DeceptionStructure& ds, double reference);

}  // namespace dnes
