#include "dnes/aggregative.hpp"

#include <algorithm>
#include <cmath>

namespace dnes {

namespace {

const Deceiver& only_deceiver(const AggregativeGamed& game, const DeceptionStructure& ds) {
  if (ds.players() != game.players()) throw PreconditionError("deception structure and game disagree on players");
  if (ds.size() != 1) throw PreconditionError("aggregative analysis supports exactly one deceiver");
  return ds[0];
}

double max_abs(const Vectord& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

bool newton(const AggregativeGamed& game, const DeceptionStructure& ds, const Vectord& lambda, double delta,
            Vectord& x, int& iterations) {
  Vectord r = gamma(game, ds, x, delta);
  for (int it = 0; it < 100; ++it, ++iterations) {
    if (!r.allFinite()) return false;
    if (max_abs(r) <= 1e-12) return true;
    Matrixd jac = curvature_matrix(game, x);
    jac.diagonal() += delta * lambda;
    const Vectord step = jac.fullPivLu().solve(-r);
    if (!step.allFinite()) return false;
    double t = 1.0;
    bool moved = false;
    for (int k = 0; k < 50; ++k, t *= 0.5) {
      const Vectord trial = x + t * step;
      const Vectord rt = gamma(game, ds, trial, delta);
      if (rt.allFinite() && rt.norm() < r.norm()) {
        x = trial;
        r = rt;
        moved = true;
        break;
      }
    }
    if (!moved) return max_abs(r) <= 1e-10;
  }
  return max_abs(r) <= 1e-10;
}

}  // namespace

Vectord lambda_diagonal(const AggregativeGamed& game, const DeceptionStructure& ds) {
  const auto& d = only_deceiver(game, ds);
  Vectord lambda = Vectord::Zero(game.players());
  for (std::size_t t = 0; t < d.targets.size(); ++t)
    lambda(d.targets[t]) = d.coupling(t) * game.alpha()(d.targets[t], d.player);
  return lambda;
}

IntervalSet delta_bounds(const AggregativeGamed& game, const DeceptionStructure& ds) {
  const Vectord lambda = lambda_diagonal(game, ds);
  const Vectord K = monotonicity_margins(game);
  for (int i = 0; i < game.players(); ++i)
    if (!(K(i) > 0))
      throw PreconditionError("nominal game is not strongly monotone (margin of player " + std::to_string(i + 1) +
                              " is " + format_number(K(i), 6) + ")");
  double lo = -kInf, hi = kInf;
  for (int i = 0; i < game.players(); ++i) {
    if (lambda(i) > 0) lo = std::max(lo, -K(i) / lambda(i));
    if (lambda(i) < 0) hi = std::min(hi, -K(i) / lambda(i));
  }
  return IntervalSet::single(lo, hi);
}

Vectord gamma(const AggregativeGamed& game, const DeceptionStructure& ds, const Vectord& x, double delta) {
  return pseudogradient(game, x) + delta * lambda_diagonal(game, ds).cwiseProduct(x);
}

AggregativeEquilibrium dne_agg(const AggregativeGamed& game, const DeceptionStructure& ds, double delta) {
  return dne_agg(game, ds, delta, Vectord::Zero(game.players()));
}

AggregativeEquilibrium dne_agg(const AggregativeGamed& game, const DeceptionStructure& ds, double delta,
                               const Vectord& start) {
  if (!std::isfinite(delta)) throw PreconditionError("delta must be finite");
  if (start.size() != game.players()) throw PreconditionError("start point has the wrong dimension");
  const Vectord lambda = lambda_diagonal(game, ds);
  AggregativeEquilibrium out;
  out.x = start;
  out.method = "newton";
  out.converged = newton(game, ds, lambda, delta, out.x, out.iterations);
  if (!out.converged) {
    out.method = "homotopy";
    out.x = Vectord::Zero(game.players());
    out.converged = true;
    constexpr int steps = 20;
    for (int s = 0; s <= steps && out.converged; ++s)
      out.converged = newton(game, ds, lambda, delta * double(s) / steps, out.x, out.iterations);
  }
  if (!out.converged) throw InstabilityError("equilibrium solve did not converge at delta = " + format_number(delta, 10));
  out.residual = max_abs(gamma(game, ds, out.x, delta));
  out.certified = delta_bounds(game, ds).contains(delta);
  Matrixd jac = curvature_matrix(game, out.x);
  jac.diagonal() += delta * lambda;
  out.stable = is_hurwitz(-jac);
  return out;
}

Vectord g_prime(const AggregativeGamed& game, const DeceptionStructure& ds, double delta, const Vectord& x) {
  const Vectord lambda = lambda_diagonal(game, ds);
  Matrixd jac = curvature_matrix(game, x);
  jac.diagonal() += delta * lambda;
  return -jac.fullPivLu().solve(lambda.cwiseProduct(x));
}

BenefitReport benefit_condition(const AggregativeGamed& game, const DeceptionStructure& ds) {
  const auto& dec = only_deceiver(game, ds);
  const int d = dec.player;
  BenefitReport rep;
  rep.x_star = dne_agg(game, ds, 0.0).x;
  rep.g_prime0 = g_prime(game, ds, 0.0, rep.x_star);
  const Vectord lambda = lambda_diagonal(game, ds);
  if (lambda.cwiseAbs().maxCoeff() == 0) {
    rep.diagnostic = "deceiver has no coupling to its targets";
    return rep;
  }
  if (rep.x_star(d) == 0) {
    rep.diagnostic = "deceiver action is zero at the Nash equilibrium";
    return rep;
  }
  // ((Xi*)^-1 Lambda x*)_d = -g_d'(0)
  const double raw = -rep.g_prime0(d) * rep.x_star(d);
  rep.expression = dec.gain_sign * raw;
  // dJ_d/ddelta at 0 equals c_d'' * raw
  rep.beneficial_direction = raw > 0 ? -1 : raw < 0 ? 1 : 0;
  rep.holds = rep.expression < 0;
  if (raw == 0) rep.diagnostic = "first-order effect of deception on the deceiver vanishes";
  else if (!rep.holds) rep.diagnostic = "gain sign drives delta away from the beneficial direction";
  return rep;
}

std::string to_string(TuningDirection dir) {
  switch (dir) {
    case TuningDirection::increase: return "increase";
    case TuningDirection::decrease: return "decrease";
    case TuningDirection::none: return "none";
  }
  return "none";
}

TuningDirection monotone_tuning_hint(const AggregativeGamed& game, const DeceptionStructure& ds) {
  if (game.players() != 2) throw PreconditionError("tuning hint is defined for two-player games");
  const auto& dec = only_deceiver(game, ds);
  const Vectord x = dne_agg(game, ds, 0.0).x;
  const int target = dec.targets.front();
  if (x(target) == 0) return TuningDirection::none;
  const Vectord gp = g_prime(game, ds, 0.0, x);
  const double raw = -gp(dec.player) * x(dec.player);
  if (raw > 0) return TuningDirection::decrease;
  if (raw < 0) return TuningDirection::increase;
  return TuningDirection::none;
}

double solve_delta_for_reference(const AggregativeGamed& game, const DeceptionStructure& ds, double reference) {
  const auto& dec = only_deceiver(game, ds);
  const IntervalSet bounds = delta_bounds(game, ds);
  const double lo = std::isinf(bounds.infimum()) ? -100.0 : bounds.infimum();
  const double hi = std::isinf(bounds.supremum()) ? 100.0 : bounds.supremum();
  auto h = [&](double delta, Vectord& x) {
    x = dne_agg(game, ds, delta, x).x;
    return cost(game, dec.player, x) - reference;
  };
  constexpr int samples = 400;
  double best = kInf;
  for (int side : {1, -1}) {
    const double end = side > 0 ? hi : lo;
    Vectord x = dne_agg(game, ds, 0.0).x;
    double prev_d = 0.0;
    double prev_h = h(0.0, x);
    if (prev_h == 0) return 0.0;
    for (int s = 1; s <= samples; ++s) {
      // stay strictly inside the open bounds
      const double dd = end * (1.0 - 1e-9) * double(s) / samples;
      Vectord xs = x;
      const double hs = h(dd, xs);
      if ((hs > 0) != (prev_h > 0)) {
        double a = prev_d, b = dd, ha = prev_h;
        Vectord xa = x;
        while (std::abs(b - a) > 1e-13 * std::max(1.0, std::abs(b))) {
          const double m = 0.5 * (a + b);
          Vectord xm = xa;
          const double hm = h(m, xm);
          if ((hm > 0) == (ha > 0)) {
            a = m;
            ha = hm;
            xa = xm;
          } else {
            b = m;
          }
        }
        const double root = 0.5 * (a + b);
        if (std::abs(root) < std::abs(best)) best = root;
        break;
      }
      prev_d = dd;
      prev_h = hs;
      x = xs;
    }
  }
  if (std::isinf(best)) throw PreconditionError("reference " + format_number(reference, 10) + " is not attainable inside the monotone bounds");
  return best;
}

}  // namespace dnes
