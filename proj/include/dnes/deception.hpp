#pragma once

#include <string>
#include <vector>

#include "dnes/game.hpp"
#include "dnes/interval_set.hpp"

namespace dnes {

struct Deceiver {
  int player = 0;
  std::vector<int> targets;
  // estimated minus true probe phase of each target; empty means exact
  std::vector<double> phase_errors;
  double gain_sign = 1.0;  // epsilon_i
  double reference = 0.0;  // J_i^ref

  // averaged gain of the injected signal on target slot t
  double coupling(std::size_t t) const;
};

class DeceptionStructure {
 public:
  DeceptionStructure() = default;
  DeceptionStructure(int players, std::vector<Deceiver> deceivers);

  static DeceptionStructure single(int players, int deceiver, int target, double gain_sign = 1.0,
                                   double reference = 0.0);

  int players() const { return players_; }
  int size() const { return static_cast<int>(deceivers_.size()); }
  const std::vector<Deceiver>& deceivers() const { return deceivers_; }
  const Deceiver& operator[](int slot) const { return deceivers_.at(std::size_t(slot)); }
  // slot of the player in deceivers(), -1 when oblivious
  int slot_of(int player) const;
  // slots of the deceivers targeting player i
  std::vector<int> deceivers_of(int i) const;
  // exactly two deceivers each targeting only the other
  bool is_mutual_pair() const;

 private:
  int players_ = 0;
  std::vector<Deceiver> deceivers_;
};

struct DeceptiveSystem {
  Matrixd Q;
  Vectord B;
};

// Nominal pseudogradient data plus one perturbation pair per deceiver slot.
struct DeceptiveMatrices {
  Matrixd Q;
  Vectord B;
  std::vector<Matrixd> Qbar;
  std::vector<Vectord> Bbar;

  int slots() const { return static_cast<int>(Qbar.size()); }
};

DeceptiveMatrices build_deceptive_matrices(const QuadraticGamed& game, const DeceptionStructure& ds);

DeceptiveSystem q_delta(const DeceptiveMatrices& dm, const Vectord& delta);
bool in_delta_set(const DeceptiveMatrices& dm, const Vectord& delta, double tol = 1e-9);
// Deceptive Nash equilibrium; throws PreconditionError outside the stable set.
Vectord dne(const DeceptiveMatrices& dm, const Vectord& delta);

struct DeltaScan {
  double lower = -100.0;
  double upper = 100.0;
  double step = 1e-2;
  double tol = 1e-6;
};

// Slice of the stable delta set along one slot, other slots fixed at base.
// A part stable up to the edge of the scan box is reported as unbounded.
IntervalSet delta_interval(const DeceptiveMatrices& dm, int slot, const Vectord& base, const DeltaScan& scan = {});
IntervalSet delta_interval(const DeceptiveMatrices& dm, int slot, const DeltaScan& scan = {});

// Single deceiver, single oblivious target.
struct SdsoAnalysis {
  int deceiver = 0;
  int oblivious = 0;
  int pivot = 0;
  Vectord x_star;
  Vectord J_star;
  Vectord Phi;
  double q1 = 0, q2 = 0, q3 = 0;
  Vectord r1, r2;  // per player
  DeceptiveMatrices matrices;

  // e = f(delta), the displacement of the equilibrium along Phi
  double f(double delta) const;
  double f_inverse(double e) const;
  // induced cost of player i when the equilibrium sits at x* + e Phi
  double payoff(int i, double e) const;
  double vertex(int i) const;
  // derivative of eps * J_dec(g(delta))
  double dxi_ddelta(double eps, double delta) const;
  IntervalSet image(const IntervalSet& delta_set) const;
  IntervalSet payoff_image(int i, const IntervalSet& e_set) const;
};

SdsoAnalysis sdso_analyze(const QuadraticGamed& game, int deceiver, int oblivious);

// displacements e reachable by a stable integral loop
IntervalSet stable_displacements(const SdsoAnalysis& sa, double eps, const IntervalSet& delta_set);
IntervalSet omega_set(const SdsoAnalysis& sa, double eps, const IntervalSet& delta_set);
double solve_delta_for_ref(const SdsoAnalysis& sa, double reference, double eps, const IntervalSet& delta_set);

struct Benevolence {
  bool exists = false;
  IntervalSet window;  // references improving every member and the deceiver
  IntervalSet displacements;
  std::string reason;
};

Benevolence benevolence(const SdsoAnalysis& sa, double eps, const std::vector<int>& members,
                        const IntervalSet& delta_set);

// true when no deceiver in `deceivers` can move player i's reaction curve
bool immunity_check(const QuadraticGamed& game, int player, const std::vector<int>& deceivers);

struct ReactionCurveShift {
  enum class Kind { rotation, translation, unchanged };
  Kind kind = Kind::unchanged;
  Vectord center;  // a point of the fixed set, rotation only
};

std::string to_string(ReactionCurveShift::Kind kind);

ReactionCurveShift rc_classify(const QuadraticGamed& game, int oblivious, int deceiver);

// Cost player i believes it minimises while being deceived.
double perceived_cost(const QuadraticGamed& game, const DeceptionStructure& ds, int i, const Vectord& x,
                      const Vectord& delta);

// d xi_i / d delta_j with xi_i = eps_i J_i(g(delta)), one row per deceiver slot
Matrixd xi_jacobian(const QuadraticGamed& game, const DeceptionStructure& ds, const DeceptiveMatrices& dm,
                    const Vectord& delta);
Matrixd xi_jacobian_fd(const QuadraticGamed& game, const DeceptionStructure& ds, const DeceptiveMatrices& dm,
                       const Vectord& delta, double h = 1e-6);

struct AttainabilityReport {
  Vectord delta;
  Vectord x;
  Vectord J;
  bool in_delta_set = false;
  double reference_error = 0;  // max relative |J_i - J_i^ref| over deceivers
  bool references_met = false;
  Matrixd jacobian;
  Matrixd jacobian_fd;
  bool jacobian_hurwitz = false;
  bool attainable = false;
};

AttainabilityReport attainability(const QuadraticGamed& game, const DeceptionStructure& ds, const Vectord& delta,
                                  double reference_rel_tol = 1e-6);
AttainabilityReport mutual_attainability(const QuadraticGamed& game, const DeceptionStructure& ds,
                                         const Vectord& delta, double reference_rel_tol = 1e-6);

// Newton solve of J_i(g(delta)) = J_i^ref for every deceiver.
Vectord solve_references(const QuadraticGamed& game, const DeceptionStructure& ds, const Vectord& start);

}  // namespace dnes
