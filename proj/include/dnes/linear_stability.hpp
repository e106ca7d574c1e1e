#pragma once

#include <cmath>

#include "dnes/deception.hpp"
#include "dnes/game.hpp"

namespace dnes {

// det(sI - A) by Faddeev-LeVerrier; descending coefficients, leading 1.
template <typename Derived>
Vector<typename Derived::Scalar> characteristic_polynomial(const Eigen::MatrixBase<Derived>& A) {
  using Scalar = typename Derived::Scalar;
  const Eigen::Index n = A.rows();
  if (A.cols() != n) throw PreconditionError("characteristic polynomial needs a square matrix");
  Vector<Scalar> c(n + 1);
  c(0) = Scalar(1);
  Matrix<Scalar> M = Matrix<Scalar>::Zero(n, n);
  const Matrix<Scalar> I = Matrix<Scalar>::Identity(n, n);
  for (Eigen::Index k = 1; k <= n; ++k) {
    M = A * M + c(k - 1) * I;
    c(k) = -(A * M).trace() / Scalar(k);
  }
  return c;
}

// Routh test on descending coefficients; a zero in the first column counts as unstable.
template <typename Scalar>
bool routh_hurwitz(const Vector<Scalar>& coeffs) {
  const Eigen::Index n = coeffs.size() - 1;
  if (n < 1) throw PreconditionError("Routh test needs a polynomial of degree at least one");
  if (!coeffs.allFinite()) return false;
  const Scalar lead = coeffs(0);
  if (lead == Scalar(0)) throw PreconditionError("leading coefficient is zero");
  const Eigen::Index width = n / 2 + 1;
  Matrix<Scalar> table = Matrix<Scalar>::Zero(n + 1, width + 1);
  for (Eigen::Index i = 0; i <= n; ++i) table(i % 2, i / 2) = coeffs(i) / lead;
  for (Eigen::Index r = 2; r <= n; ++r) {
    if (!(table(r - 1, 0) > Scalar(0))) return false;
    for (Eigen::Index j = 0; j < width; ++j)
      table(r, j) = (table(r - 1, 0) * table(r - 2, j + 1) - table(r - 2, 0) * table(r - 1, j + 1)) / table(r - 1, 0);
  }
  for (Eigen::Index r = 0; r <= n; ++r)
    if (!(table(r, 0) > Scalar(0))) return false;
  return true;
}

// s^3 + c2 s^2 + c1 s + c0
template <typename Scalar>
bool routh_hurwitz_3(Scalar c2, Scalar c1, Scalar c0) {
  return c2 > Scalar(0) && c0 > Scalar(0) && c2 * c1 > c0;
}

enum class ReferenceKind { payoff, price };

// Linearisation of the averaged two-player loop with one integral deceiver.
struct InterconnectionJacobian {
  Matrixd A;
  Vectord charpoly;
  Vectord x;               // deceptive equilibrium at delta*
  double a1 = 0, a0 = 0;   // s^2 + a1 s + a0 from -Q_delta*
  double a1_star = 0, a0_star = 0;
  // printed closed form of a0* for the price loop, NaN otherwise
  double a0_star_closed_form = NAN;
};

// k scales the action rows; k = 1 gives the plain averaged system.
InterconnectionJacobian build_jacobian(const QuadraticGamed& game, const DeceptionStructure& ds, double delta,
                                       double eps, ReferenceKind kind = ReferenceKind::payoff, double k = 1.0);

// Largest |eps| certified by the Routh conditions when eps has the sign of a0*.
double epsilon_star(const InterconnectionJacobian& jac);
int stabilizing_epsilon_sign(const InterconnectionJacobian& jac);

// Equal marginal cost duopoly in closed form.
Eigen::Matrix3d equal_marginal_matrix(double demand, double preference, double reference, double eps);
Eigen::Vector4d equal_marginal_polynomial(double demand, double preference, double reference, double eps);

}  // namespace dnes
