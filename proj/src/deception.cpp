#include "dnes/deception.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

namespace dnes {

double Deceiver::coupling(std::size_t t) const {
  if (phase_errors.empty()) return 1.0;
  return std::cos(phase_errors.at(t));
}

DeceptionStructure::DeceptionStructure(int players, std::vector<Deceiver> deceivers)
    : players_(players), deceivers_(std::move(deceivers)) {
  if (players_ < 2) throw PreconditionError("deception structure needs at least two players");
  std::set<int> seen;
  for (const auto& d : deceivers_) {
    const std::string who = "deceiver " + std::to_string(d.player + 1);
    if (d.player < 0 || d.player >= players_) throw PreconditionError(who + ": player index out of range");
    if (!seen.insert(d.player).second) throw PreconditionError(who + ": listed twice");
    if (d.targets.empty()) throw PreconditionError(who + ": no targets");
    std::set<int> tset;
    for (int t : d.targets) {
      if (t < 0 || t >= players_) throw PreconditionError(who + ": target index out of range");
      if (t == d.player) throw PreconditionError(who + ": cannot target itself");
      if (!tset.insert(t).second) throw PreconditionError(who + ": duplicate target");
    }
    if (!d.phase_errors.empty() && d.phase_errors.size() != d.targets.size())
      throw PreconditionError(who + ": one phase error per target expected");
    if (!(d.gain_sign != 0.0) || !std::isfinite(d.gain_sign)) throw PreconditionError(who + ": gain sign must be nonzero");
    if (!std::isfinite(d.reference)) throw PreconditionError(who + ": reference must be finite");
  }
}

DeceptionStructure DeceptionStructure::single(int players, int deceiver, int target, double gain_sign,
                                              double reference) {
  Deceiver d;
  d.player = deceiver;
  d.targets = {target};
  d.gain_sign = gain_sign;
  d.reference = reference;
  return DeceptionStructure(players, {d});
}

int DeceptionStructure::slot_of(int player) const {
  for (std::size_t s = 0; s < deceivers_.size(); ++s)
    if (deceivers_[s].player == player) return int(s);
  return -1;
}

std::vector<int> DeceptionStructure::deceivers_of(int i) const {
  std::vector<int> out;
  for (std::size_t s = 0; s < deceivers_.size(); ++s) {
    const auto& t = deceivers_[s].targets;
    if (std::find(t.begin(), t.end(), i) != t.end()) out.push_back(int(s));
  }
  return out;
}

bool DeceptionStructure::is_mutual_pair() const {
  if (deceivers_.size() != 2) return false;
  const auto& a = deceivers_[0];
  const auto& b = deceivers_[1];
  return a.targets == std::vector<int>{b.player} && b.targets == std::vector<int>{a.player};
}

DeceptiveMatrices build_deceptive_matrices(const QuadraticGamed& game, const DeceptionStructure& ds) {
  if (ds.players() != game.players()) throw PreconditionError("deception structure and game disagree on players");
  const int n = game.players();
  DeceptiveMatrices dm;
  dm.Q = pseudogradient_matrix(game);
  dm.B = pseudogradient_offset(game);
  for (const auto& d : ds.deceivers()) {
    Matrixd Qbar = Matrixd::Zero(n, n);
    Vectord Bbar = Vectord::Zero(n);
    for (std::size_t t = 0; t < d.targets.size(); ++t) {
      const int i = d.targets[t];
      Qbar.row(i) = d.coupling(t) * game.Q(i).row(d.player);
      Bbar(i) = d.coupling(t) * game.b(i)(d.player);
    }
    dm.Qbar.push_back(Qbar);
    dm.Bbar.push_back(Bbar);
  }
  return dm;
}

DeceptiveSystem q_delta(const DeceptiveMatrices& dm, const Vectord& delta) {
  if (delta.size() != dm.slots()) throw PreconditionError("delta must have one entry per deceiver");
  DeceptiveSystem out{dm.Q, dm.B};
  for (int s = 0; s < dm.slots(); ++s) {
    out.Q += delta(s) * dm.Qbar[std::size_t(s)];
    out.B += delta(s) * dm.Bbar[std::size_t(s)];
  }
  return out;
}

bool in_delta_set(const DeceptiveMatrices& dm, const Vectord& delta, double tol) {
  if (!delta.allFinite()) return false;
  return is_hurwitz(-q_delta(dm, delta).Q, tol);
}

Vectord dne(const DeceptiveMatrices& dm, const Vectord& delta) {
  if (!in_delta_set(dm, delta)) throw PreconditionError("delta lies outside the stable deception set");
  const auto sys = q_delta(dm, delta);
  return -sys.Q.fullPivLu().solve(sys.B);
}

IntervalSet delta_interval(const DeceptiveMatrices& dm, int slot, const Vectord& base, const DeltaScan& scan) {
  if (slot < 0 || slot >= dm.slots()) throw PreconditionError("deceiver slot out of range");
  if (!(scan.lower < scan.upper) || !(scan.step > 0) || !(scan.tol > 0))
    throw PreconditionError("delta scan box must satisfy lower < upper with positive step and tolerance");
  Vectord d = base;
  auto stable = [&](double v) {
    d(slot) = v;
    return spectral_abscissa(-q_delta(dm, d).Q) < 0.0;
  };
  auto boundary = [&](double in, double out) {
    while (std::abs(out - in) > scan.tol) {
      const double mid = 0.5 * (in + out);
      (stable(mid) ? in : out) = mid;
    }
    return 0.5 * (in + out);
  };
  const long n = static_cast<long>(std::ceil((scan.upper - scan.lower) / scan.step));
  auto grid = [&](long j) { return j == n ? scan.upper : scan.lower + double(j) * scan.step; };
  std::vector<char> flag(std::size_t(n + 1));
  for (long j = 0; j <= n; ++j) flag[std::size_t(j)] = stable(grid(j));
  std::vector<Interval> parts;
  for (long j = 0; j <= n;) {
    if (!flag[std::size_t(j)]) {
      ++j;
      continue;
    }
    long k = j;
    while (k + 1 <= n && flag[std::size_t(k + 1)]) ++k;
    const double lo = j == 0 ? -kInf : boundary(grid(j), grid(j - 1));
    const double hi = k == n ? kInf : boundary(grid(k), grid(k + 1));
    parts.push_back({lo, hi});
    j = k + 1;
  }
  return IntervalSet(parts);
}

IntervalSet delta_interval(const DeceptiveMatrices& dm, int slot, const DeltaScan& scan) {
  return delta_interval(dm, slot, Vectord::Zero(dm.slots()), scan);
}

double SdsoAnalysis::f(double delta) const { return q1 * delta / (q2 * delta + q3); }

double SdsoAnalysis::f_inverse(double e) const { return q3 * e / (q1 - q2 * e); }

double SdsoAnalysis::payoff(int i, double e) const {
  if (std::isinf(e)) {
    if (r2(i) != 0) return r2(i) > 0 ? kInf : -kInf;
    if (r1(i) != 0) return (r1(i) > 0) == (e > 0) ? kInf : -kInf;
    return J_star(i);
  }
  const double v = r2(i) * e * e + r1(i) * e + J_star(i);
  // exact cancellation (e.g. the vertex value 0) otherwise leaves rounding noise
  const double scale = std::abs(r2(i) * e * e) + std::abs(r1(i) * e) + std::abs(J_star(i));
  return std::abs(v) <= 64 * std::numeric_limits<double>::epsilon() * scale ? 0.0 : v;
}

double SdsoAnalysis::vertex(int i) const {
  if (r2(i) == 0) throw PreconditionError("induced cost is not quadratic in the displacement (r2 = 0)");
  return -r1(i) / (2.0 * r2(i));
}

double SdsoAnalysis::dxi_ddelta(double eps, double delta) const {
  const double den = q2 * delta + q3;
  return 2.0 * eps * r2(deceiver) * q1 * q3 * (f(delta) + r1(deceiver) / (2.0 * r2(deceiver))) / (den * den);
}

namespace {

int sign(double v) { return (v > 0) - (v < 0); }

// one-sided limit of q1 d / (q2 d + q3); from_above approaches v from the right
double mobius_limit(double q1, double q2, double q3, double v, bool from_above) {
  if (std::isinf(v)) {
    if (q2 != 0) return q1 / q2;
    if (q1 == 0) return 0.0;
    return sign(q1) * sign(q3) * (v > 0 ? 1 : -1) > 0 ? kInf : -kInf;
  }
  const double den = q2 * v + q3;
  if (den != 0) return q1 * v / den;
  const double num = q1 * v;
  if (num == 0) return 0.0;
  // den changes sign like q2 * (d - v)
  const int s = sign(num) * sign(q2) * (from_above ? 1 : -1);
  return s > 0 ? kInf : -kInf;
}

}  // namespace

IntervalSet SdsoAnalysis::image(const IntervalSet& delta_set) const {
  std::vector<Interval> pieces;
  for (auto p : delta_set.intervals()) {
    if (q2 != 0) {
      const double pole = -q3 / q2;
      // numeric stability boundaries that sit on the pole snap onto it
      const double snap = 1e-5 * std::max(1.0, std::abs(pole));
      if (std::abs(p.lower - pole) <= snap) p.lower = pole;
      if (std::abs(p.upper - pole) <= snap) p.upper = pole;
      if (p.contains(pole)) {
        pieces.push_back({p.lower, pole});
        pieces.push_back({pole, p.upper});
        continue;
      }
    }
    pieces.push_back(p);
  }
  std::vector<Interval> out;
  for (const auto& p : pieces) {
    const double a = mobius_limit(q1, q2, q3, p.lower, true);
    const double b = mobius_limit(q1, q2, q3, p.upper, false);
    out.push_back({std::min(a, b), std::max(a, b)});
  }
  return IntervalSet(out);
}

IntervalSet SdsoAnalysis::payoff_image(int i, const IntervalSet& e_set) const {
  IntervalSet pieces = e_set;
  if (r2(i) != 0) {
    const double v = vertex(i);
    std::vector<Interval> split;
    for (const auto& p : e_set.intervals()) {
      if (p.contains(v)) {
        split.push_back({p.lower, v});
        split.push_back({v, p.upper});
      } else {
        split.push_back(p);
      }
    }
    pieces = IntervalSet(split);
  }
  std::vector<Interval> out;
  for (const auto& p : pieces.intervals()) {
    const double a = payoff(i, p.lower);
    const double b = payoff(i, p.upper);
    out.push_back({std::min(a, b), std::max(a, b)});
  }
  return IntervalSet(out);
}

SdsoAnalysis sdso_analyze(const QuadraticGamed& game, int deceiver, int oblivious) {
  const int n = game.players();
  if (deceiver < 0 || deceiver >= n || oblivious < 0 || oblivious >= n || deceiver == oblivious)
    throw PreconditionError("deceiver and oblivious player must be distinct valid players");
  SdsoAnalysis sa;
  sa.deceiver = deceiver;
  sa.oblivious = oblivious;
  sa.matrices = build_deceptive_matrices(game, DeceptionStructure::single(n, deceiver, oblivious));
  sa.x_star = nash_equilibrium(game);
  sa.J_star = costs(game, sa.x_star);

  // null direction of the pseudogradient rows other than the oblivious one
  Matrixd rows(n - 1, n);
  for (int i = 0, r = 0; i < n; ++i)
    if (i != oblivious) rows.row(r++) = sa.matrices.Q.row(i);
  bool found = false;
  for (int p = 0; p < n && !found; ++p) {
    Matrixd minor(n - 1, n - 1);
    for (int c = 0, cc = 0; c < n; ++c)
      if (c != p) minor.col(cc++) = rows.col(c);
    Eigen::JacobiSVD<Matrixd> svd(minor);
    const auto& sv = svd.singularValues();
    if (sv.size() > 0 && !(sv(sv.size() - 1) > 0 && sv(0) / sv(sv.size() - 1) <= 1e12)) continue;
    const Vectord rest = minor.fullPivLu().solve(-rows.col(p));
    sa.Phi.resize(n);
    for (int c = 0, cc = 0; c < n; ++c) sa.Phi(c) = c == p ? 1.0 : rest(cc++);
    sa.pivot = p;
    found = true;
  }
  if (!found) throw PreconditionError("no well-conditioned pivot for the equilibrium displacement direction");

  const Matrixd& Qd = game.Q(oblivious);
  sa.q1 = -(game.b(oblivious)(deceiver) + Qd.row(deceiver).dot(sa.x_star));
  sa.q2 = Qd.row(deceiver).dot(sa.Phi);
  sa.q3 = Qd.row(oblivious).dot(sa.Phi);
  if (sa.q1 == 0 && sa.q2 == 0 && sa.q3 == 0) throw PreconditionError("degenerate deception: q1 = q2 = q3 = 0");
  if (sa.q3 == 0) throw PreconditionError("degenerate deception: q3 = 0");

  sa.r1.resize(n);
  sa.r2.resize(n);
  for (int i = 0; i < n; ++i) {
    sa.r2(i) = 0.5 * sa.Phi.dot(game.Q(i) * sa.Phi);
    sa.r1(i) = cost_gradient(game, i, sa.x_star).dot(sa.Phi);
  }
  return sa;
}

IntervalSet stable_displacements(const SdsoAnalysis& sa, double eps, const IntervalSet& delta_set) {
  const int d = sa.deceiver;
  if (sa.r2(d) == 0) throw PreconditionError("degenerate deceiver cost: r2 = 0");
  const double s = eps * sa.r2(d) * sa.q1 * sa.q3;
  if (s == 0) throw PreconditionError("degenerate deception: eps r2 q1 q3 = 0");
  const double v = sa.vertex(d);
  const IntervalSet half = s > 0 ? IntervalSet::single(-kInf, v) : IntervalSet::single(v, kInf);
  return sa.image(delta_set).intersect(half);
}

IntervalSet omega_set(const SdsoAnalysis& sa, double eps, const IntervalSet& delta_set) {
  return sa.payoff_image(sa.deceiver, stable_displacements(sa, eps, delta_set));
}

double solve_delta_for_ref(const SdsoAnalysis& sa, double reference, double eps, const IntervalSet& delta_set) {
  const int d = sa.deceiver;
  if (!std::isfinite(reference)) throw PreconditionError("reference must be finite");
  const double a = sa.r2(d), b = sa.r1(d), c = sa.J_star(d) - reference;
  std::vector<double> roots;
  if (a == 0) {
    if (b != 0) roots.push_back(-c / b);
  } else {
    const double disc = b * b - 4 * a * c;
    if (disc >= 0) {
      // stable form of the quadratic roots
      const double qq = -0.5 * (b + (b >= 0 ? 1 : -1) * std::sqrt(disc));
      if (qq != 0) roots.push_back(qq / a);
      if (qq != 0) roots.push_back(c / qq);
      else roots.push_back(0.0);
    }
  }
  bool any_root = false;
  double best = kInf;
  for (double e : roots) {
    if (sa.q1 - sa.q2 * e == 0) continue;
    const double delta = sa.f_inverse(e);
    if (!std::isfinite(delta)) continue;
    if (!delta_set.contains(delta) || !in_delta_set(sa.matrices, Vectord::Constant(1, delta))) continue;
    any_root = true;
    if (!(sa.dxi_ddelta(eps, delta) < 0)) continue;
    if (std::abs(delta) < std::abs(best)) best = delta;
  }
  if (std::isfinite(best)) return best;
  if (any_root) throw InstabilityError("reference is reachable only on a branch where the integral loop is unstable");
  throw PreconditionError("reference " + format_number(reference, 10) + " is not attainable");
}

Benevolence benevolence(const SdsoAnalysis& sa, double eps, const std::vector<int>& members,
                        const IntervalSet& delta_set) {
  const int d = sa.deceiver;
  Benevolence out;
  for (int i : members) {
    if (i == d || i < 0 || i >= sa.r1.size()) throw PreconditionError("benevolence members must be other valid players");
    if (sign(sa.r1(i)) != sign(sa.r1(d))) {
      out.reason = "player " + std::to_string(i + 1) + " has first-order cost slope of opposite sign";
      return out;
    }
  }
  if (!(eps * sa.r1(d) * sa.q1 * sa.q3 < 0)) {
    out.reason = "eps r1 q1 q3 is not negative for the deceiver";
    return out;
  }
  IntervalSet e_set = stable_displacements(sa, eps, delta_set);
  std::vector<int> all = members;
  all.push_back(d);
  for (int i : all) {
    // e (r2 e + r1) < 0
    const double a = sa.r2(i), b = sa.r1(i);
    IntervalSet below;
    if (a == 0) {
      below = b > 0 ? IntervalSet::single(-kInf, 0) : b < 0 ? IntervalSet::single(0, kInf) : IntervalSet();
    } else {
      const double root = -b / a;
      const double lo = std::min(0.0, root), hi = std::max(0.0, root);
      below = a > 0 ? IntervalSet::single(lo, hi) : IntervalSet({{-kInf, lo}, {hi, kInf}});
    }
    e_set = e_set.intersect(below);
  }
  out.displacements = e_set;
  out.window = sa.payoff_image(d, e_set);
  out.exists = !out.window.empty();
  if (!out.exists) out.reason = "no stable displacement lowers every listed cost";
  return out;
}

namespace {

int numeric_rank(const Matrixd& M) {
  Eigen::JacobiSVD<Matrixd> svd(M);
  const auto& sv = svd.singularValues();
  if (sv.size() == 0 || sv(0) == 0) return 0;
  int r = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (sv(i) > 1e-10 * sv(0)) ++r;
  return r;
}

}  // namespace

bool immunity_check(const QuadraticGamed& game, int player, const std::vector<int>& deceivers) {
  const int n = game.players();
  const Matrixd& Q = game.Q(player);
  const Vectord& b = game.b(player);
  for (int k : deceivers) {
    if (k < 0 || k >= n || k == player) throw PreconditionError("immunity check needs valid deceivers other than the player");
    // own gradient and the externality gradient must share their zero set
    Matrixd augmented(2, n + 1);
    augmented.row(0) << Q.row(player), b(player);
    augmented.row(1) << Q.row(k), b(k);
    if (numeric_rank(augmented) > 1) return false;
  }
  return true;
}

std::string to_string(ReactionCurveShift::Kind kind) {
  switch (kind) {
    case ReactionCurveShift::Kind::rotation: return "rotation";
    case ReactionCurveShift::Kind::translation: return "translation";
    case ReactionCurveShift::Kind::unchanged: return "unchanged";
  }
  return "unknown";
}

ReactionCurveShift rc_classify(const QuadraticGamed& game, int oblivious, int deceiver) {
  const int n = game.players();
  if (oblivious < 0 || oblivious >= n || deceiver < 0 || deceiver >= n || oblivious == deceiver)
    throw PreconditionError("reaction curve classification needs two distinct valid players");
  const Matrixd& Q = game.Q(oblivious);
  const Vectord& b = game.b(oblivious);
  Matrixd normals(2, n);
  normals.row(0) = Q.row(oblivious);
  normals.row(1) = Q.row(deceiver);
  Matrixd augmented(2, n + 1);
  augmented << normals, Vectord(Eigen::Vector2d(b(oblivious), b(deceiver)));
  ReactionCurveShift out;
  if (numeric_rank(augmented) <= 1) {
    out.kind = ReactionCurveShift::Kind::unchanged;
  } else if (numeric_rank(normals) <= 1) {
    out.kind = ReactionCurveShift::Kind::translation;
  } else {
    out.kind = ReactionCurveShift::Kind::rotation;
    out.center = normals.completeOrthogonalDecomposition().solve(-Eigen::Vector2d(b(oblivious), b(deceiver)));
  }
  return out;
}

double perceived_cost(const QuadraticGamed& game, const DeceptionStructure& ds, int i, const Vectord& x,
                      const Vectord& delta) {
  if (delta.size() != ds.size()) throw PreconditionError("delta must have one entry per deceiver");
  double out = cost(game, i, x);
  for (int s : ds.deceivers_of(i)) {
    const auto& dec = ds[s];
    const auto t = std::size_t(std::find(dec.targets.begin(), dec.targets.end(), i) - dec.targets.begin());
    const int k = dec.player;
    const double B = game.Q(i)(k, i);
    const double A = game.Q(i).row(k).dot(x) - B * x(i) + game.b(i)(k);
    // integral of d J_i / d x_k along x_i, started where it vanishes
    const double integral = B != 0 ? (A + B * x(i)) * (A + B * x(i)) / (2 * B) : A * x(i);
    out += delta(s) * dec.coupling(t) * integral;
  }
  return out;
}

Matrixd xi_jacobian(const QuadraticGamed& game, const DeceptionStructure& ds, const DeceptiveMatrices& dm,
                    const Vectord& delta) {
  const Vectord g = dne(dm, delta);
  const auto lu = q_delta(dm, delta).Q.fullPivLu();
  const int m = ds.size();
  Matrixd out(m, m);
  for (int j = 0; j < m; ++j) {
    const Vectord dg = -lu.solve(dm.Qbar[std::size_t(j)] * g + dm.Bbar[std::size_t(j)]);
    for (int s = 0; s < m; ++s) out(s, j) = ds[s].gain_sign * cost_gradient(game, ds[s].player, g).dot(dg);
  }
  return out;
}

Matrixd xi_jacobian_fd(const QuadraticGamed& game, const DeceptionStructure& ds, const DeceptiveMatrices& dm,
                       const Vectord& delta, double h) {
  const int m = ds.size();
  Matrixd out(m, m);
  for (int j = 0; j < m; ++j) {
    Vectord hi = delta, lo = delta;
    hi(j) += h;
    lo(j) -= h;
    const Vectord gh = dne(dm, hi), gl = dne(dm, lo);
    for (int s = 0; s < m; ++s)
      out(s, j) = ds[s].gain_sign * (cost(game, ds[s].player, gh) - cost(game, ds[s].player, gl)) / (2 * h);
  }
  return out;
}

AttainabilityReport attainability(const QuadraticGamed& game, const DeceptionStructure& ds, const Vectord& delta,
                                  double reference_rel_tol) {
  const auto dm = build_deceptive_matrices(game, ds);
  AttainabilityReport rep;
  rep.delta = delta;
  rep.in_delta_set = in_delta_set(dm, delta);
  if (!rep.in_delta_set) return rep;
  rep.x = dne(dm, delta);
  rep.J = costs(game, rep.x);
  for (const auto& d : ds.deceivers()) {
    const double err = std::abs(rep.J(d.player) - d.reference) / std::max(1.0, std::abs(d.reference));
    rep.reference_error = std::max(rep.reference_error, err);
  }
  rep.references_met = rep.reference_error <= reference_rel_tol;
  rep.jacobian = xi_jacobian(game, ds, dm, delta);
  rep.jacobian_fd = xi_jacobian_fd(game, ds, dm, delta);
  rep.jacobian_hurwitz = is_hurwitz(rep.jacobian);
  rep.attainable = rep.references_met && rep.jacobian_hurwitz;
  return rep;
}

AttainabilityReport mutual_attainability(const QuadraticGamed& game, const DeceptionStructure& ds,
                                         const Vectord& delta, double reference_rel_tol) {
  if (!ds.is_mutual_pair()) throw PreconditionError("mutual attainability needs two players deceiving each other");
  return attainability(game, ds, delta, reference_rel_tol);
}

Vectord solve_references(const QuadraticGamed& game, const DeceptionStructure& ds, const Vectord& start) {
  const auto dm = build_deceptive_matrices(game, ds);
  const int m = ds.size();
  auto residual = [&](const Vectord& delta) {
    const Vectord g = dne(dm, delta);
    Vectord r(m);
    for (int s = 0; s < m; ++s) r(s) = cost(game, ds[s].player, g) - ds[s].reference;
    return r;
  };
  Vectord delta = start;
  if (!in_delta_set(dm, delta)) throw PreconditionError("starting delta lies outside the stable deception set");
  Vectord r = residual(delta);
  for (int it = 0; it < 100; ++it) {
    double scale = 1.0;
    for (int s = 0; s < m; ++s) scale = std::max(scale, std::abs(ds[s].reference));
    if (r.cwiseAbs().maxCoeff() <= 1e-11 * scale) return delta;
    Matrixd jac = xi_jacobian(game, ds, dm, delta);
    for (int s = 0; s < m; ++s) jac.row(s) /= ds[s].gain_sign;
    const Vectord step = jac.fullPivLu().solve(-r);
    double t = 1.0;
    bool moved = false;
    for (int k = 0; k < 40; ++k, t *= 0.5) {
      const Vectord trial = delta + t * step;
      if (!in_delta_set(dm, trial)) continue;
      const Vectord rt = residual(trial);
      if (rt.norm() < r.norm()) {
        delta = trial;
        r = rt;
        moved = true;
        break;
      }
    }
    if (!moved) break;
  }
  throw PreconditionError("reference equations did not converge from the given start");
}

}  // namespace dnes
