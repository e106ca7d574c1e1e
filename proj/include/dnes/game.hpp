#pragma once

#include <cmath>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Eigenvalues>

#include "dnes/types.hpp"

namespace dnes {

// J_i(x) = 0.5 x^T Q_i x + b_i^T x + p_i, player indices are zero based.
template <typename Scalar>
class QuadraticGame {
 public:
  QuadraticGame() = default;
  QuadraticGame(std::vector<Matrix<Scalar>> Q, std::vector<Vector<Scalar>> b, std::vector<Scalar> p)
      : Q_(std::move(Q)), b_(std::move(b)), p_(std::move(p)) {
    validate();
  }

  int players() const { return static_cast<int>(Q_.size()); }
  const Matrix<Scalar>& Q(int i) const { return Q_.at(i); }
  const Vector<Scalar>& b(int i) const { return b_.at(i); }
  Scalar p(int i) const { return p_.at(i); }

 private:
  void validate() const {
    const auto n = Q_.size();
    if (n < 2) throw PreconditionError("quadratic game needs at least two players");
    if (b_.size() != n || p_.size() != n)
      throw PreconditionError("quadratic game: Q, b and p must have one entry per player");
    for (std::size_t i = 0; i < n; ++i) {
      const auto& Qi = Q_[i];
      const std::string who = "player " + std::to_string(i + 1);
      if (Qi.rows() != Eigen::Index(n) || Qi.cols() != Eigen::Index(n))
        throw PreconditionError(who + ": Q must be " + std::to_string(n) + "x" + std::to_string(n));
      if (b_[i].size() != Eigen::Index(n))
        throw PreconditionError(who + ": b must have length " + std::to_string(n));
      if (!Qi.allFinite() || !b_[i].allFinite() || !std::isfinite(static_cast<double>(p_[i])))
        throw PreconditionError(who + ": non-finite coefficient");
      const Scalar scale = std::max(Scalar(1), Qi.cwiseAbs().maxCoeff());
      if ((Qi - Qi.transpose()).cwiseAbs().maxCoeff() > Scalar(1e-12) * scale)
        throw PreconditionError(who + ": Q is not symmetric");
      if (!(Qi(i, i) > Scalar(0)))
        throw PreconditionError(who + ": own curvature (Q_i)_ii must be positive");
    }
  }

  std::vector<Matrix<Scalar>> Q_;
  std::vector<Vector<Scalar>> b_;
  std::vector<Scalar> p_;
};

using QuadraticGamed = QuadraticGame<double>;

// Row i is (Q_i)_{i:}.
template <typename Scalar>
Matrix<Scalar> pseudogradient_matrix(const QuadraticGame<Scalar>& game) {
  const int n = game.players();
  Matrix<Scalar> out(n, n);
  for (int i = 0; i < n; ++i) out.row(i) = game.Q(i).row(i);
  return out;
}

template <typename Scalar>
Vector<Scalar> pseudogradient_offset(const QuadraticGame<Scalar>& game) {
  const int n = game.players();
  Vector<Scalar> out(n);
  for (int i = 0; i < n; ++i) out(i) = game.b(i)(i);
  return out;
}

template <typename Scalar, typename Derived>
Vector<Scalar> pseudogradient(const QuadraticGame<Scalar>& game, const Eigen::MatrixBase<Derived>& x) {
  return pseudogradient_matrix(game) * x + pseudogradient_offset(game);
}

template <typename Scalar, typename Derived>
Scalar cost(const QuadraticGame<Scalar>& game, int i, const Eigen::MatrixBase<Derived>& x) {
  return Scalar(0.5) * x.dot(game.Q(i) * x) + game.b(i).dot(x) + game.p(i);
}

template <typename Scalar, typename Derived>
Vector<Scalar> costs(const QuadraticGame<Scalar>& game, const Eigen::MatrixBase<Derived>& x) {
  Vector<Scalar> out(game.players());
  for (int i = 0; i < game.players(); ++i) out(i) = cost(game, i, x);
  return out;
}

// Full gradient of J_i.
template <typename Scalar, typename Derived>
Vector<Scalar> cost_gradient(const QuadraticGame<Scalar>& game, int i, const Eigen::MatrixBase<Derived>& x) {
  return game.Q(i) * x + game.b(i);
}

// d J_i / d x_k
template <typename Scalar, typename Derived>
Scalar partial(const QuadraticGame<Scalar>& game, int i, int k, const Eigen::MatrixBase<Derived>& x) {
  return game.Q(i).row(k).dot(x) + game.b(i)(k);
}

template <typename Scalar>
Vector<Scalar> nash_equilibrium(const QuadraticGame<Scalar>& game) {
  const Matrix<Scalar> Qcal = pseudogradient_matrix(game);
  Eigen::FullPivLU<Matrix<Scalar>> lu(Qcal);
  if (!lu.isInvertible()) throw PreconditionError("pseudogradient matrix is singular, no unique Nash equilibrium");
  return -lu.solve(pseudogradient_offset(game));
}

// Largest real part of the spectrum.
template <typename Derived>
typename Derived::Scalar spectral_abscissa(const Eigen::MatrixBase<Derived>& M) {
  using Scalar = typename Derived::Scalar;
  if (M.rows() != M.cols()) throw PreconditionError("spectral abscissa needs a square matrix");
  if (!M.allFinite()) throw InstabilityError("matrix has non-finite entries");
  Eigen::EigenSolver<Matrix<Scalar>> es(M.eval(), false);
  if (es.info() != Eigen::Success) throw InstabilityError("eigenvalue computation did not converge");
  return es.eigenvalues().real().maxCoeff();
}

template <typename Derived>
bool is_hurwitz(const Eigen::MatrixBase<Derived>& M, double tol = 1e-9) {
  return spectral_abscissa(M) < -tol;
}

template <typename Scalar>
struct ConvexCost {
  std::function<Scalar(Scalar)> value;
  std::function<Scalar(Scalar)> slope;
  std::function<Scalar(Scalar)> curvature;
};

// J_i(x) = c_i(x_i) + sum_{k != i} alpha_{i,k} x_k x_i
template <typename Scalar>
class AggregativeGame {
 public:
  AggregativeGame() = default;
  AggregativeGame(std::vector<ConvexCost<Scalar>> own, Vector<Scalar> kappa, Matrix<Scalar> alpha)
      : own_(std::move(own)), kappa_(std::move(kappa)), alpha_(std::move(alpha)) {
    validate();
  }

  int players() const { return static_cast<int>(own_.size()); }
  const ConvexCost<Scalar>& own(int i) const { return own_.at(i); }
  const Vector<Scalar>& kappa() const { return kappa_; }
  const Matrix<Scalar>& alpha() const { return alpha_; }

 private:
  void validate() const {
    const auto n = Eigen::Index(own_.size());
    if (n < 2) throw PreconditionError("aggregative game needs at least two players");
    if (kappa_.size() != n || alpha_.rows() != n || alpha_.cols() != n)
      throw PreconditionError("aggregative game: kappa and alpha must match the number of players");
    if (!alpha_.allFinite() || !kappa_.allFinite()) throw PreconditionError("aggregative game: non-finite coefficient");
    for (Eigen::Index i = 0; i < n; ++i) {
      const std::string who = "player " + std::to_string(i + 1);
      if (alpha_(i, i) != Scalar(0)) throw PreconditionError(who + ": alpha diagonal must be zero");
      if (!(kappa_(i) > Scalar(0))) throw PreconditionError(who + ": kappa must be positive");
      const auto& c = own_[std::size_t(i)];
      if (!c.value || !c.slope || !c.curvature) throw PreconditionError(who + ": cost function incomplete");
      // spot check strong convexity on a probe grid
      for (int s = 0; s <= 100; ++s) {
        const Scalar y = Scalar(-5) + Scalar(s) * Scalar(0.1);
        if (c.curvature(y) < kappa_(i) * (Scalar(1) - Scalar(1e-12)))
          throw PreconditionError(who + ": c'' drops below kappa at x = " + std::to_string(double(y)));
      }
    }
  }

  std::vector<ConvexCost<Scalar>> own_;
  Vector<Scalar> kappa_;
  Matrix<Scalar> alpha_;
};

using AggregativeGamed = AggregativeGame<double>;

template <typename Scalar, typename Derived>
Vector<Scalar> pseudogradient(const AggregativeGame<Scalar>& game, const Eigen::MatrixBase<Derived>& x) {
  Vector<Scalar> out = game.alpha() * x;
  for (int i = 0; i < game.players(); ++i) out(i) += game.own(i).slope(x(i));
  return out;
}

template <typename Scalar, typename Derived>
Scalar cost(const AggregativeGame<Scalar>& game, int i, const Eigen::MatrixBase<Derived>& x) {
  return game.own(i).value(x(i)) + game.alpha().row(i).dot(x) * x(i);
}

template <typename Scalar, typename Derived>
Vector<Scalar> costs(const AggregativeGame<Scalar>& game, const Eigen::MatrixBase<Derived>& x) {
  Vector<Scalar> out(game.players());
  for (int i = 0; i < game.players(); ++i) out(i) = cost(game, i, x);
  return out;
}

template <typename Scalar, typename Derived>
Scalar partial(const AggregativeGame<Scalar>& game, int i, int k, const Eigen::MatrixBase<Derived>& x) {
  if (k != i) return game.alpha()(i, k) * x(i);
  return game.own(i).slope(x(i)) + game.alpha().row(i).dot(x);
}

// Jacobian of the pseudogradient: c_i'' on the diagonal, alpha off it.
template <typename Scalar, typename Derived>
Matrix<Scalar> curvature_matrix(const AggregativeGame<Scalar>& game, const Eigen::MatrixBase<Derived>& x) {
  Matrix<Scalar> out = game.alpha();
  for (int i = 0; i < game.players(); ++i) out(i, i) = game.own(i).curvature(x(i));
  return out;
}

// K_j = kappa_j - sum_{k != j} |alpha_jk + alpha_kj| / 2
template <typename Scalar>
Vector<Scalar> monotonicity_margins(const AggregativeGame<Scalar>& game) {
  const Matrix<Scalar> sym = (game.alpha() + game.alpha().transpose()).cwiseAbs() / Scalar(2);
  return game.kappa() - sym.rowwise().sum();
}

}  // namespace dnes
