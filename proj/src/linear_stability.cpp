#include "dnes/linear_stability.hpp"

#include <algorithm>

namespace dnes {

namespace {

Matrixd assemble(const Matrixd& Qd, const Vectord& v, const Eigen::RowVectorXd& row, double k) {
  const Eigen::Index n = Qd.rows();
  Matrixd A = Matrixd::Zero(n + 1, n + 1);
  A.topLeftCorner(n, n) = -k * Qd;
  A.topRightCorner(n, 1) = k * v;
  A.bottomLeftCorner(1, n) = row;
  return A;
}

}  // namespace

InterconnectionJacobian build_jacobian(const QuadraticGamed& game, const DeceptionStructure& ds, double delta,
                                       double eps, ReferenceKind kind, double k) {
  if (game.players() != 2) throw PreconditionError("interconnection Jacobian is defined for two players");
  if (ds.size() != 1 || ds[0].targets.size() != 1)
    throw PreconditionError("interconnection Jacobian needs one deceiver with one target");
  if (!(k > 0)) throw PreconditionError("probe gain k must be positive");
  const auto dm = build_deceptive_matrices(game, ds);
  const Vectord dv = Vectord::Constant(1, delta);
  if (!in_delta_set(dm, dv)) throw PreconditionError("delta* lies outside the stable deception set");
  InterconnectionJacobian out;
  out.x = dne(dm, dv);
  const Matrixd Qd = q_delta(dm, dv).Q;
  const Vectord v = -(dm.Qbar[0] * out.x + dm.Bbar[0]);
  const int d = ds[0].player;
  Eigen::RowVectorXd row(2);
  if (kind == ReferenceKind::payoff) {
    row = ds[0].gain_sign * cost_gradient(game, d, out.x).transpose();
  } else {
    row.setZero();
    row(d) = 1.0;
    out.a0_star_closed_form = -Qd(1, 0) * v(0);
  }
  out.A = assemble(Qd, v, eps * row, k);
  out.charpoly = characteristic_polynomial(out.A);
  // coefficients are affine in eps: split them by evaluating at eps = 0 and 1
  const Vectord base = characteristic_polynomial(assemble(Qd, v, 0.0 * row, k));
  const Vectord unit = characteristic_polynomial(assemble(Qd, v, row, k));
  out.a1 = base(1);
  out.a0 = base(2);
  out.a1_star = unit(2) - base(2);
  out.a0_star = unit(3) - base(3);
  return out;
}

double epsilon_star(const InterconnectionJacobian& jac) {
  if (!(jac.a1 > 0) || !(jac.a0 > 0)) throw PreconditionError("nominal matrix is not Hurwitz (a1, a0 must be positive)");
  const double first = jac.a1_star != 0 ? jac.a0 / std::abs(jac.a1_star) : kInf;
  const double gap = jac.a1 * jac.a1_star - jac.a0_star;
  const double second = gap != 0 ? jac.a1 * jac.a0 / std::abs(gap) : kInf;
  return std::min(first, second);
}

int stabilizing_epsilon_sign(const InterconnectionJacobian& jac) {
  return (jac.a0_star > 0) - (jac.a0_star < 0);
}

Eigen::Matrix3d equal_marginal_matrix(double demand, double preference, double reference, double eps) {
  if (!(reference > 0)) throw PreconditionError("reference profit must be positive");
  if (!(preference > 0)) throw PreconditionError("preference must be positive");
  const double J = std::abs(reference), p = preference;
  Eigen::Matrix3d A;
  A << -1 / (2 * p) - demand / (2 * std::sqrt(J * p)), 1 / p, 2 * std::sqrt(J / p),
      1 / p, -2 / p, 0,
      -eps * std::sqrt(J / p), 0, 0;
  return A;
}

Eigen::Vector4d equal_marginal_polynomial(double demand, double preference, double reference, double eps) {
  if (!(reference > 0)) throw PreconditionError("reference profit must be positive");
  const double J = std::abs(reference), p = preference;
  return {1.0, 5 / (2 * p) + demand / (2 * std::sqrt(J * p)), 2 * eps * J / p + demand / (p * std::sqrt(J * p)),
          4 * eps * J / (p * p)};
}

}  // namespace dnes
