#include "dnes/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <future>
#include <numeric>
#include <ostream>
#include <set>

namespace dnes {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

long long checked_mul(long long a, long long b) {
  long long out = 0;
  if (__builtin_mul_overflow(a, b, &out)) throw PreconditionError("probe frequency ratios are too fine for an exact common period");
  return out;
}

}  // namespace

Rational Rational::reduced() const {
  if (den == 0) throw PreconditionError("rational with zero denominator");
  const long long g = std::gcd(num, den);
  Rational r{num / (g ? g : 1), den / (g ? g : 1)};
  if (r.den < 0) {
    r.num = -r.num;
    r.den = -r.den;
  }
  return r;
}

std::string Rational::to_string() const {
  const Rational r = reduced();
  if (r.den == 1) return std::to_string(r.num);
  return std::to_string(r.num) + "/" + std::to_string(r.den);
}

Rational Rational::parse(const std::string& text) {
  std::string t;
  for (char c : text)
    if (!std::isspace(static_cast<unsigned char>(c))) t += c;
  auto parse_int = [&](const std::string& s) {
    if (s.empty()) throw ParseError("bad rational '" + text + "'");
    std::size_t used = 0;
    long long v = 0;
    try {
      v = std::stoll(s, &used);
    } catch (const std::exception&) {
      throw ParseError("bad rational '" + text + "'");
    }
    if (used != s.size()) throw ParseError("bad rational '" + text + "'");
    return v;
  };
  const auto slash = t.find('/');
  if (slash != std::string::npos) {
    const Rational r{parse_int(t.substr(0, slash)), parse_int(t.substr(slash + 1))};
    if (r.den == 0) throw ParseError("zero denominator in '" + text + "'");
    return r.reduced();
  }
  const auto dot = t.find('.');
  if (dot == std::string::npos) return Rational{parse_int(t), 1};
  const std::string frac = t.substr(dot + 1);
  if (frac.size() > 15 || frac.find_first_not_of("0123456789") != std::string::npos)
    throw ParseError("bad decimal rational '" + text + "'");
  long long den = 1;
  for (std::size_t i = 0; i < frac.size(); ++i) den *= 10;
  const std::string whole = t.substr(0, dot);
  const bool negative = !whole.empty() && whole[0] == '-';
  const long long w = whole.empty() || whole == "-" || whole == "+" ? 0 : parse_int(whole);
  const long long f = frac.empty() ? 0 : parse_int(frac);
  const long long num = checked_mul(w, den) + (negative ? -f : f);
  return Rational{num, den}.reduced();
}

void ProbeConfig::validate(int players) const {
  if (!(a > 0) || !std::isfinite(a)) throw PreconditionError("probe amplitude a must be positive");
  if (!(k > 0) || !std::isfinite(k)) throw PreconditionError("adaptation gain k must be positive");
  if (!(omega > 0) || !std::isfinite(omega)) throw PreconditionError("base frequency omega must be positive");
  if (int(omega_bar.size()) != players) throw PreconditionError("omega_bar needs one entry per player");
  std::set<std::pair<long long, long long>> seen;
  for (const auto& r : omega_bar) {
    const Rational q = r.reduced();
    if (q.num <= 0) throw PreconditionError("omega_bar entries must be positive");
    if (!seen.insert({q.num, q.den}).second) throw PreconditionError("omega_bar entries must be pairwise distinct");
  }
  if (!phases.empty() && int(phases.size()) != players) throw PreconditionError("phases need one entry per player");
  for (double p : phases)
    if (!std::isfinite(p)) throw PreconditionError("phases must be finite");
}

double ProbeConfig::common_period() const {
  if (omega_bar.empty()) throw PreconditionError("no probe frequencies");
  long long D = 1;
  for (const auto& r : omega_bar) D = checked_mul(D / std::gcd(D, r.reduced().den), r.reduced().den);
  long long g = 0;
  for (const auto& r : omega_bar) {
    const Rational q = r.reduced();
    g = std::gcd(g, checked_mul(q.num, D / q.den));
  }
  return kTwoPi * (double(D) / double(g)) / omega;
}

int policy_states(const DeltaPolicy& policy) {
  return std::visit(
      [](const auto& p) -> int {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, FixedDelta>) return 0;
        else if constexpr (std::is_same_v<T, PhaseLeadDelta>) return 2;
        else return 1;
      },
      policy);
}

std::string policy_name(const DeltaPolicy& policy) {
  return std::visit(
      [](const auto& p) -> std::string {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, FixedDelta>) return "fixed";
        else if constexpr (std::is_same_v<T, IntegralDelta>) return "integral";
        else if constexpr (std::is_same_v<T, PhaseLeadDelta>) return "phase_lead";
        else return "price_ref";
      },
      policy);
}

int GameModel::players() const {
  return std::visit([](const auto& g) { return g.players(); }, game_);
}

const QuadraticGamed& GameModel::quadratic() const {
  if (!is_quadratic()) throw PreconditionError("game is not quadratic");
  return std::get<QuadraticGamed>(game_);
}

const AggregativeGamed& GameModel::aggregative() const {
  if (is_quadratic()) throw PreconditionError("game is not aggregative");
  return std::get<AggregativeGamed>(game_);
}

double GameModel::cost(int i, const Vectord& x) const {
  return std::visit([&](const auto& g) { return dnes::cost(g, i, x); }, game_);
}

double GameModel::partial(int i, int k, const Vectord& x) const {
  return std::visit([&](const auto& g) { return dnes::partial(g, i, k, x); }, game_);
}

Vectord GameModel::nash_equilibrium() const {
  if (is_quadratic()) return dnes::nash_equilibrium(quadratic());
  const auto& g = aggregative();
  // a zero-coupling single deceiver structure gives the plain Nash equilibrium
  Vectord x = Vectord::Zero(g.players());
  for (int it = 0; it < 200; ++it) {
    const Vectord r = pseudogradient(g, x);
    if (r.cwiseAbs().maxCoeff() <= 1e-13) break;
    x -= curvature_matrix(g, x).fullPivLu().solve(r);
  }
  if (!pseudogradient(g, x).allFinite() || pseudogradient(g, x).cwiseAbs().maxCoeff() > 1e-10)
    throw InstabilityError("Nash equilibrium solve did not converge");
  return x;
}

void ClosedLoop::validate() const {
  const int n = players();
  if (deception.players() != n) throw PreconditionError("deception structure and game disagree on players");
  if (int(policies.size()) != deception.size()) throw PreconditionError("one delta policy per deceiver expected");
  probe.validate(n);
  for (std::size_t s = 0; s < policies.size(); ++s) {
    const std::string who = "deceiver " + std::to_string(deception[int(s)].player + 1);
    std::visit(
        [&](const auto& p) {
          using T = std::decay_t<decltype(p)>;
          if constexpr (std::is_same_v<T, FixedDelta>) {
            if (!std::isfinite(p.delta)) throw PreconditionError(who + ": delta must be finite");
          } else if constexpr (std::is_same_v<T, PhaseLeadDelta>) {
            if (!std::isfinite(p.eps)) throw PreconditionError(who + ": epsilon must be finite");
            if (!(p.G1 > 0) || !(p.G2 >= p.G1)) throw PreconditionError(who + ": phase lead needs G2 >= G1 > 0");
          } else if constexpr (std::is_same_v<T, PriceReferenceDelta>) {
            if (!std::isfinite(p.eps) || !std::isfinite(p.u_ref))
              throw PreconditionError(who + ": epsilon and u_ref must be finite");
          } else {
            if (!std::isfinite(p.eps)) throw PreconditionError(who + ": epsilon must be finite");
          }
        },
        policies[s]);
  }
}

int ClosedLoop::state_size() const {
  int s = players();
  for (const auto& p : policies) s += policy_states(p);
  return s;
}

Vectord ClosedLoop::initial_state(const Vectord& u0, const Vectord& delta0) const {
  if (u0.size() != players()) throw PreconditionError("initial actions need one entry per player");
  if (delta0.size() != deception.size()) throw PreconditionError("initial delta needs one entry per deceiver");
  Vectord z(state_size());
  z.head(players()) = u0;
  int off = players();
  for (std::size_t s = 0; s < policies.size(); ++s) {
    for (int j = 0; j < policy_states(policies[s]); ++j) z(off + j) = delta0(Eigen::Index(s));
    off += policy_states(policies[s]);
  }
  return z;
}

namespace {

// Flattened view of the loop used in the integration hot path.
class Evaluator {
 public:
  explicit Evaluator(const ClosedLoop& loop) : loop_(loop), n_(loop.players()), m_(loop.deception.size()) {
    for (int i = 0; i < n_; ++i) {
      w_.push_back(loop.probe.frequency(i));
      phi_.push_back(loop.probe.phase(i));
    }
    int off = n_;
    for (int s = 0; s < m_; ++s) {
      offset_.push_back(off);
      off += policy_states(loop.policies[std::size_t(s)]);
      const auto& d = loop.deception[s];
      for (std::size_t t = 0; t < d.targets.size(); ++t) {
        const int target = d.targets[t];
        const double err = d.phase_errors.empty() ? 0.0 : d.phase_errors[t];
        injections_.push_back({s, d.player, target, w_[std::size_t(target)], phi_[std::size_t(target)] + err,
                               d.coupling(t)});
      }
    }
    if (loop.game.is_quadratic()) {
      const auto& g = loop.game.quadratic();
      for (int i = 0; i < n_; ++i) {
        Q_.push_back(g.Q(i));
        b_.push_back(g.b(i));
        p_.push_back(g.p(i));
      }
    }
    delta_.resize(m_);
    x_.resize(n_);
    J_.resize(n_);
    s_.resize(n_);
  }

  int players() const { return n_; }
  const Vectord& x() const { return x_; }
  const Vectord& J() const { return J_; }

  void deltas(const Vectord& z, Vectord& out) const {
    for (int s = 0; s < m_; ++s) {
      const int off = offset_[std::size_t(s)];
      out(s) = std::visit(
          [&](const auto& p) -> double {
            using T = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<T, FixedDelta>) return p.delta;
            else if constexpr (std::is_same_v<T, PhaseLeadDelta>) {
              const double r = p.G2 / p.G1;
              return r * z(off + 1) - (r - 1.0) * z(off);
            } else return z(off);
          },
          loop_.policies[std::size_t(s)]);
    }
  }

  double cost(int i, const Vectord& x) const {
    if (Q_.empty()) return loop_.game.cost(i, x);
    const Matrixd& Q = Q_[std::size_t(i)];
    const Vectord& b = b_[std::size_t(i)];
    double acc = p_[std::size_t(i)];
    for (int r = 0; r < n_; ++r) {
      double row = 0;
      for (int c = 0; c < n_; ++c) row += Q(r, c) * x(c);
      acc += x(r) * (0.5 * row + b(r));
    }
    return acc;
  }

  // full extremum seeking vector field; leaves x(t) and J(x(t)) in x(), J()
  void eval(double t, const Vectord& z, Vectord& dz) {
    const double a = loop_.probe.a, k = loop_.probe.k;
    deltas(z, delta_);
    for (int i = 0; i < n_; ++i) {
      s_(i) = std::sin(w_[std::size_t(i)] * t + phi_[std::size_t(i)]);
      x_(i) = z(i) + a * s_(i);
    }
    for (const auto& inj : injections_) x_(inj.player) += a * delta_(inj.slot) * std::sin(inj.w * t + inj.phase);
    for (int i = 0; i < n_; ++i) J_(i) = cost(i, x_);
    for (int i = 0; i < n_; ++i) dz(i) = -(2.0 * k / a) * J_(i) * s_(i);
    policy_rhs(z, J_, z, dz);
  }

  // averaged vector field in (u, policy states)
  void eval_averaged(const Vectord& z, Vectord& dz) {
    const double k = loop_.probe.k;
    deltas(z, delta_);
    for (int i = 0; i < n_; ++i) x_(i) = z(i);
    for (int i = 0; i < n_; ++i) dz(i) = -k * loop_.game.partial(i, i, x_);
    for (const auto& inj : injections_)
      dz(inj.target) -= k * delta_(inj.slot) * inj.coupling * loop_.game.partial(inj.target, inj.player, x_);
    for (int i = 0; i < n_; ++i) J_(i) = cost(i, x_);
    policy_rhs(z, J_, z, dz);
  }

 private:
  struct Injection {
    int slot;
    int player;
    int target;
    double w;
    double phase;
    double coupling;
  };

  void policy_rhs(const Vectord& z, const Vectord& J, const Vectord& u, Vectord& dz) const {
    for (int s = 0; s < m_; ++s) {
      const int off = offset_[std::size_t(s)];
      const auto& d = loop_.deception[s];
      const double err = J(d.player) - d.reference;
      std::visit(
          [&](const auto& p) {
            using T = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<T, IntegralDelta>) {
              dz(off) = p.eps * d.gain_sign * err;
            } else if constexpr (std::is_same_v<T, PhaseLeadDelta>) {
              dz(off) = (z(off + 1) - z(off)) / p.G1;
              dz(off + 1) = p.eps * d.gain_sign * err;
            } else if constexpr (std::is_same_v<T, PriceReferenceDelta>) {
              dz(off) = p.eps * (u(d.player) - p.u_ref);
            }
          },
          loop_.policies[std::size_t(s)]);
    }
  }

  const ClosedLoop& loop_;
  int n_, m_;
  std::vector<double> w_, phi_;
  std::vector<int> offset_;
  std::vector<Injection> injections_;
  std::vector<Matrixd> Q_;
  std::vector<Vectord> b_;
  std::vector<double> p_;
  Vectord delta_, x_, J_, s_;
};

struct WindowGrid {
  double period = 0;
  long steps_per_period = 0;
  long steps_per_sub = 0;
  double h = 0;
};

WindowGrid window_grid(const ClosedLoop& loop, const SimOptions& opt) {
  if (opt.samples_per_period < 4) throw PreconditionError("samples_per_period must be at least 4");
  if (opt.window_divisions < 2 || opt.window_divisions % 2) throw PreconditionError("window_divisions must be even");
  if (!(opt.t_final > 0)) throw PreconditionError("t_final must be positive");
  WindowGrid g;
  g.period = loop.probe.common_period();
  double wmax = 0;
  for (int i = 0; i < loop.players(); ++i) wmax = std::max(wmax, loop.probe.frequency(i));
  const double hmax = kTwoPi / (wmax * opt.samples_per_period);
  const long M = opt.window_divisions;
  g.steps_per_sub = static_cast<long>(std::ceil(g.period / (double(M) * hmax) - 1e-12));
  g.steps_per_period = g.steps_per_sub * M;
  g.h = g.period / double(g.steps_per_period);
  return g;
}

Sample make_sample(double t, const Vectord& z, const Vectord& x, const Vectord& J, const Evaluator& ev, int m) {
  Sample s;
  s.t = t;
  s.u = z.head(ev.players());
  s.x = x;
  s.J = J;
  s.delta.resize(m);
  ev.deltas(z, s.delta);
  return s;
}

bool blew_up(const Vectord& z, const Vectord& J, int n, double threshold) {
  return !z.allFinite() || !J.allFinite() || z.head(n).cwiseAbs().maxCoeff() > threshold;
}

template <typename Field>
void rk4_step(Field&& f, double t, double h, Vectord& z, Vectord& k1, Vectord& k2, Vectord& k3, Vectord& k4,
              Vectord& tmp) {
  // k1 already holds f(t, z)
  tmp = z + 0.5 * h * k1;
  f(t + 0.5 * h, tmp, k2);
  tmp = z + 0.5 * h * k2;
  f(t + 0.5 * h, tmp, k3);
  tmp = z + h * k3;
  f(t + h, tmp, k4);
  z += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

}  // namespace

Vectord ClosedLoop::deltas(const Vectord& z) const {
  Evaluator ev(*this);
  Vectord out(deception.size());
  ev.deltas(z, out);
  return out;
}

Vectord ClosedLoop::action(double t, const Vectord& z) const {
  Evaluator ev(*this);
  Vectord dz(z.size());
  ev.eval(t, z, dz);
  return ev.x();
}

void ClosedLoop::rhs(double t, const Vectord& z, Vectord& dz) const {
  Evaluator ev(*this);
  dz.resize(z.size());
  ev.eval(t, z, dz);
}

void ClosedLoop::averaged_rhs(const Vectord& z, Vectord& dz) const {
  Evaluator ev(*this);
  dz.resize(z.size());
  ev.eval_averaged(z, dz);
}

const Sample& Trajectory::steady_state() const {
  if (windows.empty()) throw PreconditionError("run is shorter than one common probe period");
  return windows.back();
}

std::vector<std::string> Trajectory::header() const {
  std::vector<std::string> h{"t"};
  for (int i = 1; i <= players; ++i) h.push_back("x" + std::to_string(i));
  for (int i = 1; i <= players; ++i) h.push_back("u" + std::to_string(i));
  for (int d : deceivers) h.push_back("delta" + std::to_string(d + 1));
  for (int i = 1; i <= players; ++i) h.push_back("J" + std::to_string(i));
  return h;
}

double integration_step(const ClosedLoop& loop, const SimOptions& opt) { return window_grid(loop, opt).h; }

Trajectory simulate(const ClosedLoop& loop, const Vectord& z0, const SimOptions& opt, const StepObserver& observer) {
  loop.validate();
  if (z0.size() != loop.state_size()) throw PreconditionError("initial state has the wrong size");
  const WindowGrid grid = window_grid(loop, opt);
  const int n = loop.players(), m = loop.deception.size(), S = loop.state_size();
  const double h = grid.h;
  const long steps = static_cast<long>(std::ceil(opt.t_final / h - 1e-9));
  const long stride = opt.output_interval > 0 ? std::max(1L, std::lround(opt.output_interval / h)) : 1L;
  const long M = opt.window_divisions;

  Trajectory tr;
  tr.players = n;
  for (const auto& d : loop.deception.deceivers()) tr.deceivers.push_back(d.player);
  tr.step = h;
  tr.window = grid.period;

  Evaluator ev(loop);
  auto field = [&ev](double t, const Vectord& z, Vectord& dz) { ev.eval(t, z, dz); };
  Vectord z = z0, k1(S), k2(S), k3(S), k4(S), tmp(S);
  // node values [z, x, J] for the moving average
  const int V = S + 2 * n;
  Vectord node(V), prev(V), acc = Vectord::Zero(V);
  std::vector<Vectord> subs;

  for (long step = 0;; ++step) {
    const double t = double(step) * h;
    ev.eval(t, z, k1);
    const Vectord& x = ev.x();
    const Vectord& J = ev.J();
    if (blew_up(z, J, n, opt.blowup)) {
      tr.unstable = true;
      tr.diagnostic = "state left the blow-up region |u| <= " + format_number(opt.blowup, 6) + " at t = " +
                      format_number(t, 10);
      tr.samples.push_back(make_sample(t, z, x, J, ev, m));
      break;
    }
    if (observer) observer(t, z, x, J);
    if (step % stride == 0 || step == steps) tr.samples.push_back(make_sample(t, z, x, J, ev, m));
    node << z, x, J;
    if (step > 0) acc += 0.5 * h * (prev + node);
    prev = node;
    if (step > 0 && step % grid.steps_per_sub == 0) {
      subs.push_back(acc);
      acc.setZero();
      if (long(subs.size()) >= M) {
        Vectord sum = Vectord::Zero(V);
        for (auto it = subs.end() - M; it != subs.end(); ++it) sum += *it;
        const Vectord mean = sum / grid.period;
        const Vectord zbar = mean.head(S);
        tr.windows.push_back(make_sample(t - 0.5 * grid.period, zbar, mean.segment(S, n), mean.tail(n), ev, m));
        tr.window_states.push_back(zbar);
        if (subs.size() > std::size_t(4 * M)) subs.erase(subs.begin(), subs.end() - M);
      }
    }
    if (step == steps) break;
    rk4_step(field, t, h, z, k1, k2, k3, k4, tmp);
  }
  tr.final_state = z;
  return tr;
}

Trajectory simulate_averaged(const ClosedLoop& loop, const Vectord& z0, const SimOptions& opt) {
  loop.validate();
  if (z0.size() != loop.state_size()) throw PreconditionError("initial state has the wrong size");
  if (!(opt.averaged_step > 0)) throw PreconditionError("averaged_step must be positive");
  const WindowGrid grid = window_grid(loop, opt);
  const int n = loop.players(), m = loop.deception.size(), S = loop.state_size();
  const double sub = grid.period / double(opt.window_divisions);
  const long per_sub = static_cast<long>(std::ceil(sub / opt.averaged_step - 1e-12));
  const double h = sub / double(per_sub);
  const long steps = static_cast<long>(std::ceil(opt.t_final / h - 1e-9));
  const long stride = opt.output_interval > 0 ? std::max(1L, std::lround(opt.output_interval / h)) : 1L;

  Trajectory tr;
  tr.players = n;
  for (const auto& d : loop.deception.deceivers()) tr.deceivers.push_back(d.player);
  tr.step = h;
  tr.window = grid.period;
  Evaluator ev(loop);
  auto field = [&ev](double, const Vectord& z, Vectord& dz) { ev.eval_averaged(z, dz); };
  Vectord z = z0, k1(S), k2(S), k3(S), k4(S), tmp(S);
  for (long step = 0;; ++step) {
    const double t = double(step) * h;
    ev.eval_averaged(z, k1);
    const Vectord x = ev.x(), J = ev.J();
    if (blew_up(z, J, n, opt.blowup)) {
      tr.unstable = true;
      tr.diagnostic = "averaged state left the blow-up region at t = " + format_number(t, 10);
      tr.samples.push_back(make_sample(t, z, x, J, ev, m));
      break;
    }
    if (step % stride == 0 || step == steps) tr.samples.push_back(make_sample(t, z, x, J, ev, m));
    if (step % per_sub == 0) {
      tr.windows.push_back(make_sample(t, z, x, J, ev, m));
      tr.window_states.push_back(z);
    }
    if (step == steps) break;
    rk4_step(field, t, h, z, k1, k2, k3, k4, tmp);
  }
  tr.final_state = z;
  return tr;
}

namespace {

double gap_for(const ClosedLoop& loop, const Vectord& z0, double t_final) {
  SimOptions opt;
  opt.t_final = t_final;
  opt.output_interval = t_final;
  const Trajectory full = simulate(loop, z0, opt);
  if (full.unstable) return kInf;
  const Trajectory avg = simulate_averaged(loop, z0, opt);
  if (avg.unstable) return kInf;
  const double sub = full.window / double(opt.window_divisions);
  double gap = 0;
  for (std::size_t j = 0; j < full.windows.size(); ++j) {
    const auto idx = std::size_t(std::llround(full.windows[j].t / sub));
    if (idx >= avg.window_states.size()) break;
    gap = std::max(gap, (full.window_states[j] - avg.window_states[idx]).cwiseAbs().maxCoeff());
  }
  return gap;
}

}  // namespace

std::vector<double> averaging_gap(const ClosedLoop& loop, const Vectord& z0, double t_final,
                                  const std::vector<double>& multipliers, int threads) {
  std::vector<double> out(multipliers.size(), kInf);
  std::vector<ClosedLoop> loops;
  for (double mult : multipliers) {
    if (!(mult > 0)) throw PreconditionError("frequency multipliers must be positive");
    ClosedLoop l = loop;
    l.probe.omega *= mult;
    loops.push_back(l);
  }
  const std::size_t width = std::size_t(std::max(1, threads));
  for (std::size_t begin = 0; begin < loops.size(); begin += width) {
    std::vector<std::future<double>> jobs;
    const std::size_t end = std::min(loops.size(), begin + width);
    for (std::size_t i = begin; i < end; ++i)
      jobs.push_back(std::async(width > 1 ? std::launch::async : std::launch::deferred,
                                [&, i] { return gap_for(loops[i], z0, t_final); }));
    for (std::size_t i = begin; i < end; ++i) out[i] = jobs[i - begin].get();
  }
  return out;
}

double steady_state_offset(const ClosedLoop& loop, const Vectord& z0, const SimOptions& opt, const Vectord& reference) {
  const WindowGrid grid = window_grid(loop, opt);
  const long steps = static_cast<long>(std::ceil(opt.t_final / grid.h - 1e-9));
  const double t_end = double(steps) * grid.h;
  if (t_end < grid.period) throw PreconditionError("run is shorter than one common probe period");
  double worst = 0;
  SimOptions quiet = opt;
  quiet.output_interval = opt.t_final;
  const Trajectory tr = simulate(loop, z0, quiet, [&](double t, const Vectord&, const Vectord& x, const Vectord&) {
    if (t >= t_end - grid.period - 0.5 * grid.h) worst = std::max(worst, (x - reference).norm());
  });
  if (tr.unstable) throw InstabilityError(tr.diagnostic);
  return worst;
}

void write_csv(std::ostream& os, const Trajectory& tr, const std::vector<Sample>& rows) {
  const auto head = tr.header();
  for (std::size_t i = 0; i < head.size(); ++i) os << (i ? "," : "") << head[i];
  os << '\n';
  char buf[40];
  auto put = [&](double v) {
    std::snprintf(buf, sizeof buf, ",%.17g", v);
    os << buf;
  };
  for (const auto& s : rows) {
    std::snprintf(buf, sizeof buf, "%.17g", s.t);
    os << buf;
    for (Eigen::Index i = 0; i < s.x.size(); ++i) put(s.x(i));
    for (Eigen::Index i = 0; i < s.u.size(); ++i) put(s.u(i));
    for (Eigen::Index i = 0; i < s.delta.size(); ++i) put(s.delta(i));
    for (Eigen::Index i = 0; i < s.J.size(); ++i) put(s.J(i));
    os << '\n';
  }
}

}  // namespace dnes
